//! Scalar abstraction so the algebraic solvers run in double or extended precision.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::Num;

/// A real scalar usable as the component type of `num_complex::Complex`.
pub trait Real:
    Num
    + Copy
    + Debug
    + Display
    + PartialOrd
    + Send
    + Sync
    + std::ops::Neg<Output = Self>
    + 'static
{
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    fn is_finite(self) -> bool;
    /// Unit roundoff of the representation.
    fn epsilon() -> f64;
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn epsilon() -> f64 {
        f64::EPSILON
    }
}

/// Modulus of a complex number, scaled to avoid overflow.
pub fn cabs<T: Real>(z: Complex<T>) -> T {
    let (x, y) = (z.re.abs(), z.im.abs());
    let m = if x > y { x } else { y };
    if m == T::zero() {
        return m;
    }
    let (u, v) = (x / m, y / m);
    m * (u * u + v * v).sqrt()
}

pub fn cfinite<T: Real>(z: Complex<T>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

pub fn to_c64<T: Real>(z: Complex<T>) -> Complex<f64> {
    Complex::new(z.re.to_f64(), z.im.to_f64())
}

pub fn from_c64<T: Real>(z: Complex<f64>) -> Complex<T> {
    Complex::new(T::from_f64(z.re), T::from_f64(z.im))
}

/// Principal square root of a complex number.
pub fn csqrt<T: Real>(z: Complex<T>) -> Complex<T> {
    let r = cabs(z);
    if r == T::zero() {
        return z;
    }
    let half = T::from_f64(0.5);
    let re = ((r + z.re) * half).sqrt();
    let im = ((r - z.re) * half).sqrt();
    if z.im < T::zero() {
        Complex::new(re, -im)
    } else {
        Complex::new(re, im)
    }
}
