use nalgebra::{Complex, DMatrix};

use super::StateSpaceModel;
use crate::error::{Error, Result};
use crate::numerics::{eigenvalues, Tolerances};
use crate::scalar::Real;

/// Scalar rational transfer function with coefficients in descending powers of `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalTransferFunction<T: Real> {
    num: Vec<T>,
    den: Vec<T>,
}

fn strip_leading_zeros<T: Real>(p: &[T]) -> Vec<T> {
    let first = p.iter().position(|x| *x != T::zero()).unwrap_or(p.len());
    p[first..].to_vec()
}

fn poly_eval<T: Real>(p: &[T], s: Complex<T>) -> Complex<T> {
    p.iter().fold(Complex::new(T::zero(), T::zero()), |acc, &c| acc * s + Complex::new(c, T::zero()))
}

fn poly_mul<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![T::zero(); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Roots of a polynomial given in descending powers, via its companion matrix.
pub fn poly_roots<T: Real>(p: &[T]) -> Result<Vec<Complex<T>>> {
    let p = strip_leading_zeros(p);
    if p.len() <= 1 {
        return Ok(Vec::new());
    }
    let n = p.len() - 1;
    let mut comp = DMatrix::zeros(n, n);
    for j in 0..n {
        comp[(0, j)] = -p[j + 1] / p[0];
    }
    for i in 1..n {
        comp[(i, i - 1)] = T::one();
    }
    eigenvalues(&comp, &Tolerances::default())
}

impl<T: Real> RationalTransferFunction<T> {
    pub fn new(num: Vec<T>, den: Vec<T>) -> Result<Self> {
        if num.iter().chain(den.iter()).any(|x| !x.finite()) {
            return Err(Error::NonFinite("transfer function coefficients"));
        }
        let den = strip_leading_zeros(&den);
        if den.is_empty() {
            return Err(Error::InvalidTransferFunction("denominator is identically zero"));
        }
        let mut num = strip_leading_zeros(&num);
        if num.is_empty() {
            num.push(T::zero());
        }
        if num.len() > den.len() {
            return Err(Error::ImproperTransferFunction { num_degree: num.len() - 1, den_degree: den.len() - 1 });
        }
        Ok(Self { num, den })
    }

    pub fn constant(k: T) -> Self {
        Self { num: vec![k], den: vec![T::one()] }
    }

    pub fn numerator(&self) -> &[T] {
        &self.num
    }

    pub fn denominator(&self) -> &[T] {
        &self.den
    }

    pub fn degree(&self) -> usize {
        self.den.len() - 1
    }

    pub fn eval(&self, s: Complex<T>) -> Complex<T> {
        poly_eval(&self.num, s) / poly_eval(&self.den, s)
    }

    pub fn at(&self, omega: T) -> Complex<T> {
        self.eval(Complex::new(T::zero(), omega))
    }

    pub fn dc_gain(&self) -> Result<T> {
        let d0 = *self.den.last().expect("nonempty denominator");
        if d0 == T::zero() {
            return Err(Error::SingularAtFrequency { omega: 0.0 });
        }
        Ok(*self.num.last().expect("nonempty numerator") / d0)
    }

    /// Limit of the response as `s → ∞`.
    pub fn high_frequency_gain(&self) -> T {
        if self.num.len() == self.den.len() {
            self.num[0] / self.den[0]
        } else {
            T::zero()
        }
    }

    /// Series product `self · other`.
    pub fn mul(&self, other: &Self) -> Self {
        let num = poly_mul(&self.num, &other.num);
        let den = poly_mul(&self.den, &other.den);
        Self::new(num, den).expect("product of proper functions is proper")
    }

    pub fn scaled(&self, k: T) -> Self {
        Self { num: self.num.iter().map(|&c| c * k).collect(), den: self.den.clone() }
    }

    pub fn poles(&self) -> Result<Vec<Complex<T>>> {
        poly_roots(&self.den)
    }

    pub fn zeros(&self) -> Result<Vec<Complex<T>>> {
        poly_roots(&self.num)
    }

    /// Controllable canonical realization.
    pub fn to_ss(&self) -> StateSpaceModel<T> {
        let n = self.degree();
        let lead = self.den[0];
        let a_coef: Vec<T> = self.den.iter().map(|&c| c / lead).collect();
        let mut b_coef = vec![T::zero(); n + 1 - self.num.len()];
        b_coef.extend(self.num.iter().map(|&c| c / lead));
        let d = b_coef[0];
        let mut a = DMatrix::zeros(n, n);
        let mut b = DMatrix::zeros(n, 1);
        let mut c = DMatrix::zeros(1, n);
        for j in 0..n {
            a[(0, j)] = -a_coef[j + 1];
            c[(0, j)] = b_coef[j + 1] - d * a_coef[j + 1];
        }
        for i in 1..n {
            a[(i, i - 1)] = T::one();
        }
        if n > 0 {
            b[(0, 0)] = T::one();
        }
        StateSpaceModel::new(a, b, c, DMatrix::from_element(1, 1, d)).expect("consistent canonical realization")
    }
}
