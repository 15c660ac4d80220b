use nalgebra::{DMatrix, DVector};

use super::eig::{spectral_abscissa, uncontrollable_mode};
use super::linalg::{balance, frobenius, inverse, is_finite, symmetrize};
use super::lyapunov::solve_lyapunov_with;
use super::{SolverReport, Tolerances};
use crate::error::{dim_err, Error, Result};
use crate::scalar::Real;

/// Stabilizing solution of `AᵀX + XA − X B R⁻¹ Bᵀ X + Q = 0` with default tolerances.
pub fn solve_care<T: Real>(
    a: &DMatrix<T>,
    b: &DMatrix<T>,
    q: &DMatrix<T>,
    r: &DMatrix<T>,
) -> Result<(DMatrix<T>, SolverReport<T>)> {
    solve_care_with(a, b, q, r, &Tolerances::default())
}

/// Newton–Kleinman iteration for the continuous algebraic Riccati equation.
///
/// Each step solves the Lyapunov equation
/// `(A − B Kₖ)ᵀ X + X (A − B Kₖ) + Q + Kₖᵀ R Kₖ = 0` and sets
/// `Kₖ₊₁ = R⁻¹ Bᵀ X`. The starting gain is zero when `A` is already stable and
/// otherwise comes from a shifted Lyapunov solve (Bass' method).
///
/// The residual reported is
/// `‖AᵀX + XA − XSX + Q‖_F / max(1, ‖Q‖_F, ‖XSX‖_F)` with `S = B R⁻¹ Bᵀ`.
pub fn solve_care_with<T: Real>(
    a: &DMatrix<T>,
    b: &DMatrix<T>,
    q: &DMatrix<T>,
    r: &DMatrix<T>,
    tol: &Tolerances,
) -> Result<(DMatrix<T>, SolverReport<T>)> {
    let n = a.nrows();
    let m = b.ncols();
    if !a.is_square() {
        return Err(dim_err("care A", "square", format!("{}x{}", n, a.ncols())));
    }
    if b.nrows() != n {
        return Err(dim_err("care B", format!("{n} rows"), b.nrows()));
    }
    if q.shape() != (n, n) {
        return Err(dim_err("care Q", format!("{n}x{n}"), format!("{}x{}", q.nrows(), q.ncols())));
    }
    if r.shape() != (m, m) {
        return Err(dim_err("care R", format!("{m}x{m}"), format!("{}x{}", r.nrows(), r.ncols())));
    }
    if !is_finite(a) || !is_finite(b) || !is_finite(q) || !is_finite(r) {
        return Err(Error::NonFinite("care input"));
    }
    let q = symmetrize(q);
    let r = symmetrize(r);
    if r.clone().cholesky().is_none() {
        return Err(Error::Singular("care R must be positive definite"));
    }
    if n == 0 {
        let report = SolverReport { residual_norm: T::zero(), iterations: 0, converged: true };
        return Ok((DMatrix::zeros(0, 0), report));
    }
    if let Some(z) = uncontrollable_mode(a, b, tol)? {
        return Err(Error::NotStabilizable { re: z.re.to_f64_lossy(), im: z.im.to_f64_lossy() });
    }
    if let Some(z) = uncontrollable_mode(&a.transpose(), &q, tol)? {
        return Err(Error::NotDetectable { re: z.re.to_f64_lossy(), im: z.im.to_f64_lossy() });
    }

    // Diagonal state scaling x = D x̃ (from balancing A) keeps the Newton
    // iterates well conditioned; the solution is mapped back at the end.
    let (a_s, d) = balance(a);
    let dm = DMatrix::from_diagonal(&DVector::from_vec(d.clone()));
    let dinv = DMatrix::from_diagonal(&DVector::from_vec(d.iter().map(|&x| T::one() / x).collect()));
    let b_s = &dinv * b;
    let q_s = symmetrize(&(&dm * &q * &dm));

    let r_inv = inverse(&r, "care R")?;
    let s_orig = b * &r_inv * b.transpose();
    let s_s = &b_s * &r_inv * b_s.transpose();
    let residual_in = |a: &DMatrix<T>, s: &DMatrix<T>, q: &DMatrix<T>, x: &DMatrix<T>| -> T {
        let xsx = x * s * x;
        let res = a.transpose() * x + x * a - &xsx + q;
        frobenius(&res) / T::one().max(frobenius(q)).max(frobenius(&xsx))
    };

    let mut gain = initial_gain(&a_s, &b_s, tol)?;
    let target = T::lit(tol.care_residual);
    let floor = T::eps() * T::lit(16.0);
    let mut best: Option<(DMatrix<T>, T)> = None;
    let mut iterations = 0;
    let mut stalled = 0;
    while iterations < tol.care_max_iterations {
        iterations += 1;
        let closed = &a_s - &b_s * &gain;
        let rhs = &q_s + gain.transpose() * &r * &gain;
        let (x, _) = match solve_lyapunov_with(&closed.transpose(), &rhs, tol) {
            Ok(v) => v,
            // Rounding can push an almost-converged iterate onto the stability boundary.
            Err(Error::NotStable { .. }) if best.as_ref().is_some_and(|(_, r)| *r <= target) => break,
            Err(e) => return Err(e),
        };
        let res = residual_in(&a_s, &s_s, &q_s, &x);
        gain = &r_inv * b_s.transpose() * &x;
        // Early Newton steps may raise the residual while X decreases
        // monotonically, so stagnation only counts once within tolerance.
        let prev = best.as_ref().map(|(_, r)| *r);
        if prev.map_or(true, |p| res < p) {
            best = Some((x, res));
        }
        if let Some(p) = prev {
            if p <= target && res > p * T::lit(0.5) {
                stalled += 1;
            }
        }
        let best_res = best.as_ref().map(|(_, r)| *r).expect("set above");
        if best_res <= floor || stalled >= 2 {
            break;
        }
    }

    let (x_s, _) = best.expect("at least one Newton step ran");
    let x = symmetrize(&(&dinv * x_s * &dinv));
    let res = residual_in(a, &s_orig, &q, &x);
    let closed = a - &s_orig * &x;
    let abscissa = spectral_abscissa(&closed, tol)?;
    if res > target || abscissa >= T::zero() {
        return Err(Error::ConvergenceFailure {
            solver: "Newton-Kleinman CARE",
            iterations,
            best_residual: res.to_f64_lossy(),
        });
    }
    let report = SolverReport { residual_norm: res, iterations, converged: true };
    Ok((x, report))
}

/// A gain `K` with `A − B K` stable.
fn initial_gain<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>, tol: &Tolerances) -> Result<DMatrix<T>> {
    let n = a.nrows();
    let m = b.ncols();
    if spectral_abscissa(a, tol)? < T::zero() {
        return Ok(DMatrix::zeros(m, n));
    }
    // Bass: with β large enough that −(A + βI) is stable, solve
    // −(A + βI) Z − Z (A + βI)ᵀ + 2 B Bᵀ = 0; then K = Bᵀ Z⁻¹ stabilizes A.
    let eigs = super::eig::eigenvalues(a, tol)?;
    let min_re = eigs.iter().map(|z| z.re).fold(T::lit(f64::INFINITY), |acc, x| if x < acc { x } else { acc });
    let beta = (-min_re).max(T::zero()) + T::one().max(T::lit(0.1) * frobenius(a));
    let shifted = -(a + DMatrix::identity(n, n) * beta);
    let (z, _) = solve_lyapunov_with(&shifted, &(b * b.transpose() * T::lit(2.0)), tol)?;
    let mut reg = T::zero();
    let zn = frobenius(&z).max(T::eps());
    for _ in 0..8 {
        let zr = &z + DMatrix::identity(n, n) * reg;
        if let Ok(zinv) = inverse(&zr, "bass gramian") {
            let k = b.transpose() * zinv;
            if spectral_abscissa(&(a - b * &k), tol)? < T::zero() {
                return Ok(k);
            }
        }
        reg = if reg == T::zero() { zn * T::lit(1e-12) } else { reg * T::lit(100.0) };
    }
    Err(Error::ConvergenceFailure {
        solver: "CARE initial stabilizing gain",
        iterations: 8,
        best_residual: f64::NAN,
    })
}
