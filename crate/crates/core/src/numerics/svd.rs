use nalgebra::{Complex, DMatrix};

use super::Tolerances;
use crate::error::{Error, Result};
use crate::scalar::{cabs, Real};

/// Singular values of a complex matrix, sorted in nonincreasing order.
///
/// One-sided (Hestenes) Jacobi: column pairs are rotated until mutually
/// orthogonal, which diagonalizes `Mᴴ M` without forming it. The returned
/// count is `min(rows, cols)`.
pub fn svd_values<T: Real>(m: &DMatrix<Complex<T>>, tol: &Tolerances) -> Result<Vec<T>> {
    if m.iter().any(|z| !z.re.finite() || !z.im.finite()) {
        return Err(Error::NonFinite("svd input"));
    }
    // Work on the orientation with at least as many rows as columns.
    let mut w = if m.nrows() >= m.ncols() { m.clone() } else { m.adjoint() };
    let rows = w.nrows();
    let cols = w.ncols();
    if cols == 0 {
        return Ok(Vec::new());
    }
    let threshold = T::eps() * T::lit(4.0);
    for _sweep in 0..tol.svd_max_sweeps {
        let mut rotated = false;
        for i in 0..cols {
            for j in (i + 1)..cols {
                let mut alpha = T::zero();
                let mut beta = T::zero();
                let mut gamma = Complex::new(T::zero(), T::zero());
                for r in 0..rows {
                    let a = w[(r, i)];
                    let b = w[(r, j)];
                    alpha += a.norm_sqr();
                    beta += b.norm_sqr();
                    gamma += a.conj() * b;
                }
                let g = cabs(gamma);
                if g == T::zero() || g <= threshold * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // Remove the phase of γ from column j, then apply a real rotation.
                let phase = gamma / g;
                let zeta = (beta - alpha) / (T::lit(2.0) * g);
                let t = zeta.signum_or_one() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for r in 0..rows {
                    let a = w[(r, i)];
                    let b = w[(r, j)] * phase.conj();
                    w[(r, i)] = a * c - b * s;
                    w[(r, j)] = a * s + b * c;
                }
            }
        }
        if !rotated {
            let mut sv: Vec<T> = (0..cols)
                .map(|k| w.column(k).iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt())
                .collect();
            sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
            return Ok(sv);
        }
    }
    Err(Error::ConvergenceFailure {
        solver: "one-sided Jacobi SVD",
        iterations: tol.svd_max_sweeps,
        best_residual: f64::NAN,
    })
}

/// Singular values of a real matrix.
pub fn svd_values_real<T: Real>(m: &DMatrix<T>, tol: &Tolerances) -> Result<Vec<T>> {
    svd_values(&super::to_complex(m), tol)
}

trait SignumOrOne {
    fn signum_or_one(self) -> Self;
}

impl<T: Real> SignumOrOne for T {
    fn signum_or_one(self) -> Self {
        if self < T::zero() {
            -T::one()
        } else {
            T::one()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn identity_has_unit_singular_values() {
        let sv = svd_values(&DMatrix::<Complex<f64>>::identity(2, 2), &Tolerances::default()).unwrap();
        assert_eq!(sv, vec![1.0, 1.0]);
    }

    #[test]
    fn diagonal_moduli_sorted() {
        let m = DMatrix::from_row_slice(2, 2, &[c(3.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 4.0)]);
        let sv = svd_values(&m, &Tolerances::default()).unwrap();
        assert!((sv[0] - 4.0).abs() < 1e-14 && (sv[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn wide_matrix_count_is_min_dimension() {
        let m = DMatrix::from_row_slice(1, 3, &[c(3.0, 0.0), c(0.0, 4.0), c(0.0, 0.0)]);
        let sv = svd_values(&m, &Tolerances::default()).unwrap();
        assert_eq!(sv.len(), 1);
        assert!((sv[0] - 5.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_finite() {
        let m = DMatrix::from_row_slice(1, 1, &[c(f64::NAN, 0.0)]);
        assert!(svd_values(&m, &Tolerances::default()).is_err());
    }
}
