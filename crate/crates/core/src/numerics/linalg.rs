use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub fn frobenius<T: Real>(m: &DMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt()
}

pub fn is_finite<T: Real>(m: &DMatrix<T>) -> bool {
    m.iter().all(|x| x.finite())
}

pub fn symmetrize<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.transpose()) * T::lit(0.5)
}

pub fn to_complex<T: Real>(m: &DMatrix<T>) -> DMatrix<Complex<T>> {
    m.map(|x| Complex::new(x, T::zero()))
}

/// Inverse via partial-pivot LU; fails when the pivot ratio signals singularity.
pub fn inverse<T: Real>(m: &DMatrix<T>, what: &'static str) -> Result<DMatrix<T>> {
    if !m.is_square() {
        return Err(crate::error::dim_err(what, "square matrix", format!("{}x{}", m.nrows(), m.ncols())));
    }
    if m.nrows() == 0 {
        return Ok(m.clone());
    }
    let inv = m.clone().lu().try_inverse().ok_or(Error::Singular(what))?;
    if !is_finite(&inv) {
        return Err(Error::Singular(what));
    }
    Ok(inv)
}

/// Solves `m x = rhs` with one step of iterative refinement.
pub(crate) fn solve_refined<T: Real>(m: &DMatrix<T>, rhs: &DVector<T>, what: &'static str) -> Result<DVector<T>> {
    let lu = m.clone().lu();
    let mut x = lu.solve(rhs).ok_or(Error::Singular(what))?;
    let r = rhs - m * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    if x.iter().any(|v| !v.finite()) {
        return Err(Error::Singular(what));
    }
    Ok(x)
}

/// Diagonal similarity balancing (radix-2 Parlett–Reinsch).
///
/// Returns `(D⁻¹ A D, d)` where `d` holds the diagonal of `D`. Eigenvalues are
/// unchanged; row and column norms of the result are roughly equalized.
pub fn balance<T: Real>(a: &DMatrix<T>) -> (DMatrix<T>, Vec<T>) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut d = vec![T::one(); n];
    let radix = T::lit(2.0);
    let sqrdx = radix * radix;
    let mut done = false;
    let mut sweeps = 0;
    while !done && sweeps < 100 {
        done = true;
        sweeps += 1;
        for i in 0..n {
            let mut c = T::zero();
            let mut r = T::zero();
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c == T::zero() || r == T::zero() {
                continue;
            }
            let s = c + r;
            let mut f = T::one();
            let mut g = r / radix;
            while c < g {
                f *= radix;
                c *= sqrdx;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= sqrdx;
            }
            if (c + r) / f < T::lit(0.95) * s {
                done = false;
                let gi = T::one() / f;
                d[i] *= f;
                for j in 0..n {
                    m[(i, j)] *= gi;
                }
                for j in 0..n {
                    m[(j, i)] *= f;
                }
            }
        }
    }
    (m, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balance_preserves_similarity() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 1e6, 0.0, 1e-6, 2.0, 1e4, 0.0, 1e-4, 3.0]);
        let (b, d) = balance(&a);
        let dm = DMatrix::from_diagonal(&DVector::from_vec(d.clone()));
        let dinv = DMatrix::from_diagonal(&DVector::from_vec(d.iter().map(|x| 1.0 / x).collect()));
        let back = &dm * &b * &dinv;
        assert!((back - &a).norm() < 1e-9 * a.norm());
        assert!(b.amax() < a.amax());
    }

    #[test]
    fn inverse_detects_singular() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(inverse(&a, "test").is_err());
    }
}
