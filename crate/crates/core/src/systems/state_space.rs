use nalgebra::{Complex, DMatrix};

use crate::error::{dim_err, Error, Result};
use crate::numerics::{self, balance, is_finite, to_complex, ComplexMatrix, Tolerances};
use crate::scalar::{cabs, jw, Real};

/// Continuous-time LTI system `ẋ = A x + B u`, `y = C x + D u`.
///
/// A model with zero states is a static gain `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel<T: Real> {
    a: DMatrix<T>,
    b: DMatrix<T>,
    c: DMatrix<T>,
    d: DMatrix<T>,
}

impl<T: Real> StateSpaceModel<T> {
    pub fn new(a: DMatrix<T>, b: DMatrix<T>, c: DMatrix<T>, d: DMatrix<T>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(dim_err("state matrix A", "square", format!("{}x{}", n, a.ncols())));
        }
        if b.nrows() != n {
            return Err(dim_err("input matrix B", format!("{n} rows"), b.nrows()));
        }
        if c.ncols() != n {
            return Err(dim_err("output matrix C", format!("{n} columns"), c.ncols()));
        }
        if d.shape() != (c.nrows(), b.ncols()) {
            return Err(dim_err(
                "feedthrough D",
                format!("{}x{}", c.nrows(), b.ncols()),
                format!("{}x{}", d.nrows(), d.ncols()),
            ));
        }
        if !(is_finite(&a) && is_finite(&b) && is_finite(&c) && is_finite(&d)) {
            return Err(Error::NonFinite("state-space matrices"));
        }
        Ok(Self { a, b, c, d })
    }

    pub fn static_gain(d: DMatrix<T>) -> Self {
        let (p, m) = d.shape();
        Self { a: DMatrix::zeros(0, 0), b: DMatrix::zeros(0, m), c: DMatrix::zeros(p, 0), d }
    }

    pub fn identity(p: usize) -> Self {
        Self::static_gain(DMatrix::identity(p, p))
    }

    pub fn zero(p: usize, m: usize) -> Self {
        Self::static_gain(DMatrix::zeros(p, m))
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

    pub fn into_parts(self) -> (DMatrix<T>, DMatrix<T>, DMatrix<T>, DMatrix<T>) {
        (self.a, self.b, self.c, self.d)
    }

    /// Transfer matrix `C (sI − A)⁻¹ B + D` at a complex point.
    pub fn evaluate(&self, s: Complex<T>) -> Result<ComplexMatrix<T>> {
        let n = self.order();
        let dc = to_complex(&self.d);
        if n == 0 {
            return Ok(dc);
        }
        let mut m = to_complex(&self.a).map(|z| -z);
        for i in 0..n {
            m[(i, i)] += s;
        }
        let lu = m.lu();
        // Relative pivot test: jω on (or numerically at) an eigenvalue. The
        // threshold sits below eps so that badly scaled A does not trip it.
        let u = lu.u();
        let (mut umax, mut umin) = (T::zero(), T::lit(f64::INFINITY));
        for i in 0..n {
            let p = cabs(u[(i, i)]);
            umax = umax.max(p);
            umin = umin.min(p);
        }
        if umin <= umax * T::eps() * T::eps().sqrt() * T::from_count(n) {
            return Err(Error::SingularAtFrequency { omega: s.im.to_f64_lossy() });
        }
        let x = lu.solve(&to_complex(&self.b)).ok_or(Error::SingularAtFrequency { omega: s.im.to_f64_lossy() })?;
        let g = to_complex(&self.c) * x + dc;
        if g.iter().any(|z| !z.re.finite() || !z.im.finite()) {
            return Err(Error::SingularAtFrequency { omega: s.im.to_f64_lossy() });
        }
        Ok(g)
    }

    /// Frequency response at a single angular frequency.
    pub fn at(&self, omega: T) -> Result<ComplexMatrix<T>> {
        self.evaluate(jw(omega))
    }

    /// Steady-state gain `D − C A⁻¹ B`.
    pub fn dc_gain(&self) -> Result<DMatrix<T>> {
        if self.order() == 0 {
            return Ok(self.d.clone());
        }
        let ainv = numerics::inverse(&self.a, "dc gain: A singular")?;
        Ok(&self.d - &self.c * ainv * &self.b)
    }

    pub fn poles(&self) -> Result<Vec<Complex<T>>> {
        numerics::eigenvalues(&self.a, &Tolerances::default())
    }

    pub fn spectral_abscissa(&self) -> Result<T> {
        numerics::spectral_abscissa(&self.a, &Tolerances::default())
    }

    pub fn is_stable(&self) -> Result<bool> {
        Ok(self.order() == 0 || self.spectral_abscissa()? < T::zero())
    }

    /// Applies the state transformation `x = T z`.
    pub fn similarity(&self, t: &DMatrix<T>) -> Result<Self> {
        let tinv = numerics::inverse(t, "similarity transform")?;
        Self::new(&tinv * &self.a * t, &tinv * &self.b, &self.c * t, self.d.clone())
    }

    /// Diagonally rescaled realization with balanced row/column norms of `A`.
    pub fn balanced(&self) -> Self {
        if self.order() == 0 {
            return self.clone();
        }
        let (a, d) = balance(&self.a);
        let mut b = self.b.clone();
        let mut c = self.c.clone();
        for (i, &di) in d.iter().enumerate() {
            b.row_mut(i).scale_mut(T::one() / di);
            c.column_mut(i).scale_mut(di);
        }
        Self { a, b, c, d: self.d.clone() }
    }

    pub fn scaled(&self, k: T) -> Self {
        Self { a: self.a.clone(), b: self.b.clone(), c: &self.c * k, d: &self.d * k }
    }

    pub fn negated(&self) -> Self {
        self.scaled(-T::one())
    }

    /// Drops the feedthrough term, leaving the strictly proper part.
    pub fn strictly_proper_part(&self) -> Self {
        Self { d: DMatrix::zeros(self.outputs(), self.inputs()), ..self.clone() }
    }

    /// Converts the model to another scalar type.
    pub fn cast<U: Real>(&self) -> StateSpaceModel<U> {
        let f = |m: &DMatrix<T>| m.map(|x| U::lit(x.to_f64_lossy()));
        StateSpaceModel { a: f(&self.a), b: f(&self.b), c: f(&self.c), d: f(&self.d) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn first_order() -> StateSpaceModel<f64> {
        StateSpaceModel::new(
            DMatrix::from_element(1, 1, -1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::zeros(1, 1),
        )
        .unwrap()
    }

    #[test]
    fn rejects_inconsistent_dimensions() {
        let err = StateSpaceModel::new(
            DMatrix::<f64>::zeros(2, 2),
            DMatrix::zeros(3, 1),
            DMatrix::zeros(1, 2),
            DMatrix::zeros(1, 1),
        )
        .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn first_order_at_unit_frequency() {
        let g = first_order().at(1.0).unwrap()[(0, 0)];
        assert!((g.norm() - 0.5f64.sqrt()).abs() < 1e-14);
        assert!((g.arg().to_degrees() + 45.0).abs() < 1e-12);
    }

    #[test]
    fn integrator_is_singular_at_dc() {
        let g = StateSpaceModel::new(
            DMatrix::zeros(1, 1),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        assert!(matches!(g.at(0.0), Err(Error::SingularAtFrequency { .. })));
    }

    #[test]
    fn balancing_preserves_response() {
        let g = StateSpaceModel::<f64>::new(
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -2.7e6, -2633.0]),
            DMatrix::from_row_slice(2, 1, &[0.0, 2.7e6]),
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        let bal = g.balanced();
        for w in [1.0, 100.0, 1646.0, 1e4] {
            let e = (g.at(w).unwrap() - bal.at(w).unwrap()).norm();
            assert!(e < 1e-12 * g.at(w).unwrap().norm().max(1e-3));
        }
    }
}
