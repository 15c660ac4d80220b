use nalgebra::{DMatrix, DVector};

use super::eig::spectral_abscissa;
use super::linalg::{frobenius, is_finite, solve_refined, symmetrize};
use super::{SolverReport, Tolerances};
use crate::error::{dim_err, Error, Result};
use crate::scalar::Real;

/// Solves `A X + X Aᵀ + Q = 0` for stable `A` with default tolerances.
pub fn solve_lyapunov<T: Real>(a: &DMatrix<T>, q: &DMatrix<T>) -> Result<(DMatrix<T>, SolverReport<T>)> {
    solve_lyapunov_with(a, q, &Tolerances::default())
}

/// Solves `A X + X Aᵀ + Q = 0` through the Kronecker form
/// `(I ⊗ A + A ⊗ I) vec(X) = −vec(Q)`.
///
/// The residual reported is `‖A X + X Aᵀ + Q‖_F / max(1, ‖Q‖_F)`.
pub fn solve_lyapunov_with<T: Real>(
    a: &DMatrix<T>,
    q: &DMatrix<T>,
    tol: &Tolerances,
) -> Result<(DMatrix<T>, SolverReport<T>)> {
    let n = a.nrows();
    if !a.is_square() {
        return Err(dim_err("lyapunov A", "square", format!("{}x{}", n, a.ncols())));
    }
    if q.shape() != (n, n) {
        return Err(dim_err("lyapunov Q", format!("{n}x{n}"), format!("{}x{}", q.nrows(), q.ncols())));
    }
    if !is_finite(a) || !is_finite(q) {
        return Err(Error::NonFinite("lyapunov input"));
    }
    if n == 0 {
        let report = SolverReport { residual_norm: T::zero(), iterations: 0, converged: true };
        return Ok((DMatrix::zeros(0, 0), report));
    }
    let abscissa = spectral_abscissa(a, tol)?;
    if abscissa >= T::zero() {
        return Err(Error::NotStable { max_real: abscissa.to_f64_lossy() });
    }
    let q = symmetrize(q);

    // vec() is column-major: X[(r, c)] lives at c * n + r.
    let nn = n * n;
    let mut k = DMatrix::<T>::zeros(nn, nn);
    for c in 0..n {
        for r in 0..n {
            let row = c * n + r;
            for rp in 0..n {
                k[(row, c * n + rp)] += a[(r, rp)];
            }
            for cp in 0..n {
                k[(row, cp * n + r)] += a[(c, cp)];
            }
        }
    }
    let rhs = DVector::from_iterator(nn, q.iter().map(|&x| -x));
    let sol = solve_refined(&k, &rhs, "lyapunov kronecker system")?;
    let x = symmetrize(&DMatrix::from_column_slice(n, n, sol.as_slice()));

    let residual = frobenius(&(a * &x + &x * a.transpose() + &q)) / T::one().max(frobenius(&q));
    let report = SolverReport {
        residual_norm: residual,
        iterations: 1,
        converged: residual <= T::lit(tol.lyapunov_residual),
    };
    Ok((x, report))
}
