use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{dim_err, Error, Result};
use crate::numerics::{eigenvalues, is_finite, to_complex, ComplexMatrix, Tolerances};
use crate::scalar::{cabs, Real};

/// Discrete-time LTI system `x⁺ = A x + B u`, `y = C x + D u` with sample period `ts`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteStateSpaceModel<T: Real> {
    a: DMatrix<T>,
    b: DMatrix<T>,
    c: DMatrix<T>,
    d: DMatrix<T>,
    ts: T,
}

impl<T: Real> DiscreteStateSpaceModel<T> {
    pub fn new(a: DMatrix<T>, b: DMatrix<T>, c: DMatrix<T>, d: DMatrix<T>, ts: T) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n || c.ncols() != n || d.shape() != (c.nrows(), b.ncols()) {
            return Err(dim_err(
                "discrete state-space matrices",
                "consistent A, B, C, D",
                format!("A {:?} B {:?} C {:?} D {:?}", a.shape(), b.shape(), c.shape(), d.shape()),
            ));
        }
        if !(is_finite(&a) && is_finite(&b) && is_finite(&c) && is_finite(&d)) {
            return Err(Error::NonFinite("discrete state-space matrices"));
        }
        if !(ts > T::zero() && ts.finite()) {
            return Err(Error::InvalidParameters("sample period must be positive".into()));
        }
        Ok(Self { a, b, c, d, ts })
    }

    pub fn a(&self) -> &DMatrix<T> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<T> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<T> {
        &self.c
    }

    pub fn d(&self) -> &DMatrix<T> {
        &self.d
    }

    pub fn ts(&self) -> T {
        self.ts
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    /// `C (zI − A)⁻¹ B + D`.
    pub fn evaluate(&self, z: Complex<T>) -> Result<ComplexMatrix<T>> {
        let n = self.order();
        if n == 0 {
            return Ok(to_complex(&self.d));
        }
        let mut m = to_complex(&self.a).map(|x| -x);
        for i in 0..n {
            m[(i, i)] += z;
        }
        let x = m.lu().solve(&to_complex(&self.b)).ok_or(Error::Singular("zI - A"))?;
        Ok(to_complex(&self.c) * x + to_complex(&self.d))
    }

    /// Response at `z = e^{jωTs}`.
    pub fn at(&self, omega: T) -> Result<ComplexMatrix<T>> {
        let th = omega * self.ts;
        self.evaluate(Complex::new(th.cos(), th.sin()))
    }

    pub fn spectral_radius(&self) -> Result<T> {
        if self.order() == 0 {
            return Ok(T::zero());
        }
        let ev = eigenvalues(&self.a, &Tolerances::default())?;
        Ok(ev.into_iter().map(cabs).fold(T::zero(), |a, b| a.max(b)))
    }

    pub fn is_stable(&self) -> Result<bool> {
        Ok(self.spectral_radius()? < T::one())
    }

    /// One update: returns `(x⁺, y)`.
    pub fn step(&self, x: &DVector<T>, u: &DVector<T>) -> (DVector<T>, DVector<T>) {
        let y = &self.c * x + &self.d * u;
        let xn = &self.a * x + &self.b * u;
        (xn, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accumulator_response() {
        // y[k] = x[k], x⁺ = 0.5 x + u  ⇒  G(z) = 1/(z − 0.5).
        let g = DiscreteStateSpaceModel::new(
            DMatrix::from_element(1, 1, 0.5f64),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::zeros(1, 1),
            0.1,
        )
        .unwrap();
        let dc = g.at(0.0).unwrap()[(0, 0)];
        assert!((dc.re - 2.0).abs() < 1e-14);
        assert!(g.is_stable().unwrap());
        let (x1, y0) = g.step(&DVector::from_element(1, 2.0), &DVector::from_element(1, 1.0));
        assert_eq!((x1[0], y0[0]), (2.0, 2.0));
    }
}
