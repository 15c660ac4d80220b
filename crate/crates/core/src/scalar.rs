//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! All algorithms are written against [`Real`], which is implemented for
//! `f32` and `f64`. The design pipeline itself (Riccati solves with
//! ρ down to 1e-7, gramians spanning twelve decades) needs `f64`; `f32` is
//! supported for the kernels and for embedded export of already-designed
//! controllers.

use std::fmt::{Debug, Display, LowerExp};

use nalgebra::{Complex, RealField};
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar usable by the numeric kernels.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    /// Converts a count into this scalar type.
    #[inline]
    fn from_count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("count representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Machine epsilon of the scalar type.
    fn eps() -> Self;

    #[inline]
    fn finite(self) -> bool {
        self.to_f64_lossy().is_finite()
    }
}

impl Real for f32 {
    #[inline]
    fn eps() -> Self {
        f32::EPSILON
    }
}

impl Real for f64 {
    #[inline]
    fn eps() -> Self {
        f64::EPSILON
    }
}

/// `j·ω` as a complex number.
#[inline]
pub fn jw<T: Real>(omega: T) -> Complex<T> {
    Complex::new(T::zero(), omega)
}

/// `2π·f` for a frequency in hertz.
#[inline]
pub fn hz_to_rad<T: Real>(f_hz: T) -> T {
    T::two_pi() * f_hz
}

#[inline]
pub fn rad_to_hz<T: Real>(omega: T) -> T {
    omega / T::two_pi()
}

/// Modulus of a complex number without intermediate overflow.
#[inline]
pub fn cabs<T: Real>(z: Complex<T>) -> T {
    z.re.hypot(z.im)
}
