use nalgebra::{Complex, DMatrix, Schur};

use super::linalg::balance;
use super::svd::svd_values;
use super::Tolerances;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Eigenvalues of a real square matrix.
///
/// The matrix is balanced, reduced to Hessenberg form and driven to real
/// Schur form by shifted QR sweeps (capped at `eig_max_sweeps` per eigenvalue).
pub fn eigenvalues<T: Real>(a: &DMatrix<T>, tol: &Tolerances) -> Result<Vec<Complex<T>>> {
    if !a.is_square() {
        return Err(crate::error::dim_err(
            "eigenvalues",
            "square matrix",
            format!("{}x{}", a.nrows(), a.ncols()),
        ));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if a.iter().any(|x| !x.finite()) {
        return Err(Error::NonFinite("eigenvalue input"));
    }
    let (balanced, _) = balance(a);
    let schur = Schur::try_new(balanced, T::eps(), tol.eig_max_sweeps * n).ok_or(Error::ConvergenceFailure {
        solver: "Hessenberg QR eigenvalues",
        iterations: tol.eig_max_sweeps * n,
        best_residual: f64::NAN,
    })?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Largest real part over the spectrum (−∞ for an empty matrix).
pub fn spectral_abscissa<T: Real>(a: &DMatrix<T>, tol: &Tolerances) -> Result<T> {
    let ev = eigenvalues(a, tol)?;
    Ok(ev.iter().map(|z| z.re).fold(T::lit(f64::NEG_INFINITY), |m, x| if x > m { x } else { m }))
}

/// True when every eigenvalue lies strictly in the open left half-plane.
pub fn is_stable<T: Real>(a: &DMatrix<T>, tol: &Tolerances) -> Result<bool> {
    Ok(spectral_abscissa(a, tol)? < T::zero())
}

/// PBH test on the closed right half-plane: returns the first eigenvalue λ of
/// `a` with Re λ ≥ 0 for which `[A − λI, B]` loses rank, if any.
///
/// Pass `Aᵀ` and `Cᵀ` to test detectability of `(C, A)`.
pub fn uncontrollable_mode<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>, tol: &Tolerances) -> Result<Option<Complex<T>>> {
    let n = a.nrows();
    if b.nrows() != n {
        return Err(crate::error::dim_err("PBH test", format!("{n} rows"), b.nrows()));
    }
    let scale = T::one().max(a.norm()).max(b.norm());
    let mut found = None;
    for lambda in eigenvalues(a, tol)? {
        if lambda.re < T::zero() {
            continue;
        }
        let mut pencil = DMatrix::<Complex<T>>::zeros(n, n + b.ncols());
        for i in 0..n {
            for j in 0..n {
                pencil[(i, j)] = Complex::new(a[(i, j)], T::zero());
            }
            pencil[(i, i)] -= lambda;
            for j in 0..b.ncols() {
                pencil[(i, n + j)] = Complex::new(b[(i, j)], T::zero());
            }
        }
        let sv = svd_values(&pencil, tol)?;
        let smallest = sv.last().copied().unwrap_or(T::zero());
        if smallest <= T::lit(tol.rank_tolerance) * scale {
            found = Some(lambda);
            break;
        }
    }
    Ok(found)
}
