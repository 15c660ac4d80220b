//! Balanced truncation and bilinear discretization of compensators.

use std::io::{self, Write};

use nalgebra::{DMatrix, SymmetricEigen, SVD};

use crate::error::{Error, Result};
use crate::numerics::{solve_lyapunov, symmetrize};
use crate::scalar::Real;
use crate::systems::{DiscreteStateSpaceModel, StateSpaceModel};
use crate::textio::write_matrix;

/// Controllability and observability gramians of a stable system.
pub fn gramians<T: Real>(sys: &StateSpaceModel<T>) -> Result<(DMatrix<T>, DMatrix<T>)> {
    let (a, b, c) = (sys.a(), sys.b(), sys.c());
    let (wc, _) = solve_lyapunov(a, &(b * b.transpose()))?;
    let (wo, _) = solve_lyapunov(&a.transpose(), &(c.transpose() * c))?;
    Ok((wc, wo))
}

/// Lower factor `L` with `W = L Lᵀ`; falls back to a clipped eigen-factor
/// when rounding leaves `W` slightly indefinite.
fn psd_factor<T: Real>(w: &DMatrix<T>) -> DMatrix<T> {
    let w = symmetrize(w);
    if let Some(ch) = w.clone().cholesky() {
        return ch.l();
    }
    let eig = SymmetricEigen::new(w);
    let mut l = eig.eigenvectors.clone();
    for (j, &lam) in eig.eigenvalues.iter().enumerate() {
        let s = lam.max(T::zero()).sqrt();
        l.column_mut(j).scale_mut(s);
    }
    l
}

/// A balanced realization: both gramians equal `diag(hankel_values)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BalancedRealization<T: Real> {
    pub system: StateSpaceModel<T>,
    pub hankel_values: Vec<T>,
}

/// Square-root balancing: with `Wc = Lc Lcᵀ`, `Wo = Lo Loᵀ` and
/// `Loᵀ Lc = U Σ Vᵀ`, the transform is `T = Lc V Σ^{-1/2}`,
/// `T⁻¹ = Σ^{-1/2} Uᵀ Loᵀ`. Returns the transform pair as well.
fn balancing_transform<T: Real>(sys: &StateSpaceModel<T>) -> Result<(DMatrix<T>, DMatrix<T>, Vec<T>)> {
    let (wc, wo) = gramians(sys)?;
    let lc = psd_factor(&wc);
    let lo = psd_factor(&wo);
    let svd = SVD::new(lo.transpose() * &lc, true, true);
    let u = svd.u.ok_or(Error::Singular("balancing SVD"))?;
    let vt = svd.v_t.ok_or(Error::Singular("balancing SVD"))?;
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&i, &j| svd.singular_values[j].partial_cmp(&svd.singular_values[i]).unwrap_or(std::cmp::Ordering::Equal));
    let hsv: Vec<T> = idx.iter().map(|&i| svd.singular_values[i]).collect();
    let n = hsv.len();
    let mut t = DMatrix::zeros(n, n);
    let mut ti = DMatrix::zeros(n, n);
    for (k, &i) in idx.iter().enumerate() {
        let s = hsv[k];
        let scale = if s > T::zero() { T::one() / s.sqrt() } else { T::zero() };
        t.column_mut(k).copy_from(&(&lc * vt.row(i).transpose() * scale));
        ti.row_mut(k).copy_from(&(u.column(i).transpose() * lo.transpose() * scale));
    }
    Ok((t, ti, hsv))
}

pub fn balanced_realization<T: Real>(sys: &StateSpaceModel<T>) -> Result<BalancedRealization<T>> {
    let (t, ti, hsv) = balancing_transform(sys)?;
    check_retained(&hsv, hsv.len())?;
    let system = StateSpaceModel::new(&ti * sys.a() * &t, &ti * sys.b(), sys.c() * &t, sys.d().clone())?;
    Ok(BalancedRealization { system, hankel_values: hsv })
}

fn check_retained<T: Real>(hsv: &[T], order: usize) -> Result<()> {
    let Some(&top) = hsv.first() else { return Ok(()) };
    let threshold = top * T::lit(1e-10);
    if order > 0 && hsv[order - 1] < threshold {
        return Err(Error::NearSingularGramian {
            value: hsv[order - 1].to_f64_lossy(),
            threshold: threshold.to_f64_lossy(),
        });
    }
    Ok(())
}

/// Result of balanced truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct Truncation<T: Real> {
    pub reduced: StateSpaceModel<T>,
    /// `2 Σ` of the discarded Hankel values.
    pub error_bound: T,
    pub hankel_values: Vec<T>,
}

/// Balanced truncation to `order` states. `order` equal to the full order
/// returns the system unchanged with a zero bound.
pub fn balance_and_truncate<T: Real>(sys: &StateSpaceModel<T>, order: usize) -> Result<Truncation<T>> {
    let n = sys.order();
    if order == 0 || order > n {
        return Err(Error::InvalidParameters(format!("truncation order must lie in 1..={n}, got {order}")));
    }
    let (t, ti, hsv) = balancing_transform(sys)?;
    if order == n {
        return Ok(Truncation { reduced: sys.clone(), error_bound: T::zero(), hankel_values: hsv });
    }
    check_retained(&hsv, order)?;
    let tk = t.columns(0, order).into_owned();
    let tik = ti.rows(0, order).into_owned();
    let reduced = StateSpaceModel::new(&tik * sys.a() * &tk, &tik * sys.b(), sys.c() * &tk, sys.d().clone())?;
    let error_bound = hsv[order..].iter().fold(T::zero(), |acc, &s| acc + s) * T::lit(2.0);
    Ok(Truncation { reduced, error_bound, hankel_values: hsv })
}

/// Tustin map `s = (2/Ts)(z − 1)/(z + 1)`:
/// `A_d = M (I + αA)`, `B_d = Ts M B`, `C_d = C M`, `D_d = D + α C M B`
/// with `α = Ts/2` and `M = (I − αA)⁻¹`.
pub fn bilinear_discretize<T: Real>(sys: &StateSpaceModel<T>, ts: T) -> Result<DiscreteStateSpaceModel<T>> {
    if !(ts > T::zero() && ts.finite()) {
        return Err(Error::InvalidParameters(format!("sample period must be positive, got {ts}")));
    }
    let n = sys.order();
    let alpha = ts / T::lit(2.0);
    let eye = DMatrix::<T>::identity(n, n);
    let m = crate::numerics::inverse(&(&eye - sys.a() * alpha), "bilinear").map_err(|_| Error::SingularTransformation)?;
    let ad = &m * (&eye + sys.a() * alpha);
    let mb = &m * sys.b();
    let bd = &mb * ts;
    let cd = sys.c() * &m;
    let dd = sys.d() + sys.c() * &mb * alpha;
    DiscreteStateSpaceModel::new(ad, bd, cd, dd, ts)
}

/// Coefficient file for an embedded implementation: sample period, then the four matrix blocks.
pub fn write_coefficients<T: Real>(
    sys: &DiscreteStateSpaceModel<T>,
    out: &mut dyn Write,
    header: &[String],
) -> io::Result<()> {
    for line in header {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "# sample_period_s {:.12e}", sys.ts().to_f64_lossy())?;
    write_matrix(out, "Ad", sys.a())?;
    write_matrix(out, "Bd", sys.b())?;
    write_matrix(out, "Cd", sys.c())?;
    write_matrix(out, "Dd", sys.d())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::RationalTransferFunction;
    use nalgebra::Complex;

    fn tf(num: &[f64], den: &[f64]) -> StateSpaceModel<f64> {
        RationalTransferFunction::new(num.to_vec(), den.to_vec()).unwrap().to_ss()
    }

    #[test]
    fn first_order_gramians() {
        let (wc, wo) = gramians(&tf(&[1.0], &[1.0, 1.0])).unwrap();
        assert!((wc[(0, 0)] - 0.5).abs() < 1e-14 && (wo[(0, 0)] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn balanced_gramians_are_equal_and_diagonal() {
        let sys = tf(&[1.0, 4.0, 1.0], &[1.0, 6.0, 11.0, 6.0]);
        let bal = balanced_realization(&sys).unwrap();
        let (wc, wo) = gramians(&bal.system).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { bal.hankel_values[i] } else { 0.0 };
                assert!((wc[(i, j)] - expect).abs() < 1e-9 * bal.hankel_values[0]);
                assert!((wo[(i, j)] - expect).abs() < 1e-9 * bal.hankel_values[0]);
            }
        }
    }

    #[test]
    fn full_order_truncation_is_identity() {
        let sys = tf(&[1.0, 3.0], &[1.0, 6.0, 8.0]);
        let tr = balance_and_truncate(&sys, 2).unwrap();
        assert_eq!(tr.reduced, sys);
        assert_eq!(tr.error_bound, 0.0);
    }

    #[test]
    fn tustin_scalar_pole() {
        let d = bilinear_discretize(&tf(&[1.0], &[1.0, 1.0]), 1e-3).unwrap();
        assert!((d.a()[(0, 0)] - 0.9995 / 1.0005).abs() < 1e-14);
        assert!((d.a()[(0, 0)] - 0.9990005).abs() < 1e-7);
    }

    #[test]
    fn tustin_integrator() {
        let ts = 0.01;
        let d = bilinear_discretize(&tf(&[1.0], &[1.0, 0.0]), ts).unwrap();
        for th in [0.1, 0.7, 2.0] {
            let z = Complex::from_polar(1.0, th);
            let expect = (z + 1.0) / (z - 1.0) * (ts / 2.0);
            assert!((d.evaluate(z).unwrap()[(0, 0)] - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn tustin_singular_transformation() {
        let ts = 0.5;
        let sys = tf(&[1.0], &[1.0, -2.0 / ts]);
        assert_eq!(bilinear_discretize(&sys, ts).unwrap_err(), Error::SingularTransformation);
    }
}
