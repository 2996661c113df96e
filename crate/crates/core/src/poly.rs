//! The family f_{a,b}(z) = z^3 - (3/2)(a+b) z^2 + 3ab z of monic cubics fixing 0, parametrized by
//! their critical points.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::numerics::{cabs, cfinite, csqrt, to_c64, Real, C64};

/// Orbits are abandoned once they exceed this modulus.
pub const ESCAPE_CUTOFF: f64 = 1e15;

/// A monic cubic fixing 0, stored by its critical points `a` (the ω slot) and `b` (the ω′ slot).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CubicPolynomial<T: Real = f64> {
    a: Complex<T>,
    b: Complex<T>,
    c2: Complex<T>,
    c1: Complex<T>,
}

impl<T: Real> CubicPolynomial<T> {
    pub fn from_critical_points(a: Complex<T>, b: Complex<T>) -> Result<Self> {
        if !cfinite(a) || !cfinite(b) {
            return Err(Error::NonFiniteInput);
        }
        let scale = 1f64.max(cabs(a).to_f64()).max(cabs(b).to_f64());
        if cabs(a - b).to_f64() < 1e-14 * scale {
            return Err(Error::DegenerateCritical);
        }
        let three = T::from_f64(3.0);
        let c2 = -(a + b) * T::from_f64(1.5);
        let c1 = a * b * three;
        Ok(CubicPolynomial { a, b, c2, c1 })
    }

    /// The polynomial z^3 + c2 z^2 + c1 z; its critical points fill the slots in lexicographic
    /// order.
    pub fn from_coefficients(c1: Complex<T>, c2: Complex<T>) -> Result<Self> {
        // a + b = -2 c2 / 3, ab = c1 / 3
        let sum = -c2 * T::from_f64(2.0 / 3.0);
        let prod = c1 / T::from_f64(3.0);
        let disc = csqrt(sum * sum - prod * T::from_f64(4.0));
        let half = T::from_f64(0.5);
        let (x, y) = ((sum + disc) * half, (sum - disc) * half);
        let (xc, yc) = (to_c64(x), to_c64(y));
        let (a, b) = if xc.re < yc.re || (xc.re == yc.re && xc.im <= yc.im) { (x, y) } else { (y, x) };
        Self::from_critical_points(a, b)
    }

    /// Critical point in the ω slot.
    pub fn a(&self) -> Complex<T> {
        self.a
    }

    /// Critical point in the ω′ slot.
    pub fn b(&self) -> Complex<T> {
        self.b
    }

    /// Coefficient of z.
    pub fn c1(&self) -> Complex<T> {
        self.c1
    }

    /// Coefficient of z^2.
    pub fn c2(&self) -> Complex<T> {
        self.c2
    }

    /// The same polynomial with the two critical-point slots exchanged.
    pub fn swapped(&self) -> Self {
        CubicPolynomial {
            a: self.b,
            b: self.a,
            ..*self
        }
    }

    #[inline]
    pub fn eval(&self, z: Complex<T>) -> Complex<T> {
        ((z + self.c2) * z + self.c1) * z
    }

    #[inline]
    pub fn derivative(&self, z: Complex<T>) -> Complex<T> {
        let two = T::from_f64(2.0);
        let three = T::from_f64(3.0);
        (z * three + self.c2 * two) * z + self.c1
    }

    /// `f^n(z)`, failing with `Escaped` once an iterate exceeds [`ESCAPE_CUTOFF`].
    pub fn iterate(&self, z: Complex<T>, n: usize) -> Result<Complex<T>> {
        let mut w = z;
        for step in 1..=n {
            w = self.eval(w);
            if !(cabs(w).to_f64() <= ESCAPE_CUTOFF) {
                return Err(Error::Escaped { step });
            }
        }
        Ok(w)
    }

    /// `[z, f(z), ..., f^n(z)]`.
    pub fn orbit(&self, z: Complex<T>, n: usize) -> Result<Vec<Complex<T>>> {
        let mut out = Vec::with_capacity(n + 1);
        out.push(z);
        let mut w = z;
        for step in 1..=n {
            w = self.eval(w);
            if !(cabs(w).to_f64() <= ESCAPE_CUTOFF) {
                return Err(Error::Escaped { step });
            }
            out.push(w);
        }
        Ok(out)
    }

    /// Radius outside which every orbit escapes.
    pub fn escape_radius(&self) -> f64 {
        2f64.max(cabs(self.c2).to_f64() + cabs(self.c1).to_f64() + 1.0)
    }

    pub fn to_f64(&self) -> CubicPolynomial<f64> {
        self.convert()
    }

    pub fn convert<U: Real>(&self) -> CubicPolynomial<U> {
        let cv = |z: Complex<T>| Complex::new(U::from_f64(z.re.to_f64()), U::from_f64(z.im.to_f64()));
        let (a, b) = (cv(self.a), cv(self.b));
        let three = U::from_f64(3.0);
        CubicPolynomial {
            a,
            b,
            c2: -(a + b) * U::from_f64(1.5),
            c1: a * b * three,
        }
    }

    /// The coefficient pair (c1, c2) in double precision.
    pub fn coefficients(&self) -> (C64, C64) {
        (to_c64(self.c1), to_c64(self.c2))
    }

    /// Largest coefficient-wise distance `max(|Δc1|, |Δc2|)` to another polynomial.
    pub fn coefficient_distance(&self, other: &Self) -> f64 {
        cabs(self.c1 - other.c1)
            .to_f64()
            .max(cabs(self.c2 - other.c2).to_f64())
    }
}

/// ω = -(1/4) sqrt(6 + 2 sqrt(9 + 8 sqrt 3)), the negative real solution of f^2(ω) = 3ω for
/// f(z) = z (z - 3ω)^2.
pub fn seed_omega<T: Real>() -> T {
    let s3 = T::from_f64(3.0).sqrt();
    let inner = (T::from_f64(9.0) + T::from_f64(8.0) * s3).sqrt();
    -(T::from_f64(6.0) + T::from_f64(2.0) * inner).sqrt() / T::from_f64(4.0)
}

/// The closed-form starting polynomial with critical points ω and 3ω.
pub fn seed_polynomial<T: Real>() -> CubicPolynomial<T> {
    let w = seed_omega::<T>();
    let a = Complex::new(w, T::zero());
    let b = Complex::new(w * T::from_f64(3.0), T::zero());
    CubicPolynomial::from_critical_points(a, b).expect("seed critical points are distinct")
}

/// Fixed points α = 0, β, γ with their multipliers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedPointSet<T: Real = f64> {
    pub alpha: Complex<T>,
    pub beta: Complex<T>,
    pub gamma: Complex<T>,
    /// Multipliers at α, β, γ in that order.
    pub multipliers: [Complex<T>; 3],
}

impl<T: Real> FixedPointSet<T> {
    pub fn all_repelling(&self) -> bool {
        self.multipliers.iter().all(|m| cabs(*m).to_f64() > 1.0)
    }

    /// Exchanges β and γ (used once ray landings identify β).
    pub fn swapped(&self) -> Self {
        FixedPointSet {
            alpha: self.alpha,
            beta: self.gamma,
            gamma: self.beta,
            multipliers: [self.multipliers[0], self.multipliers[2], self.multipliers[1]],
        }
    }
}

/// Fixed points ordered lexicographically (β first); see `rays::labeled_fixed_points` for the
/// landing-based labeling.
pub fn fixed_points<T: Real>(f: &CubicPolynomial<T>) -> Result<FixedPointSet<T>> {
    let one = Complex::new(T::one(), T::zero());
    let c0 = f.c1 - one;
    let two = T::from_f64(2.0);
    let disc = f.c2 * f.c2 - c0 * T::from_f64(4.0);
    let s = csqrt(disc);
    // numerically stable pair of roots
    let t = if (to_c64(f.c2).conj() * to_c64(s)).re >= 0.0 { f.c2 + s } else { f.c2 - s };
    let zero = Complex::new(T::zero(), T::zero());
    let (r1, r2) = if cabs(t) == T::zero() {
        (zero, zero)
    } else {
        let q = -t / two;
        (q, c0 / q)
    };
    let scale = 1f64.max(cabs(r1).to_f64()).max(cabs(r2).to_f64());
    if cabs(r1 - r2).to_f64() < 1e-12 * scale {
        return Err(Error::NonDistinct);
    }
    let (x, y) = (to_c64(r1), to_c64(r2));
    let (beta, gamma) = if x.re < y.re || (x.re == y.re && x.im <= y.im) {
        (r1, r2)
    } else {
        (r2, r1)
    };
    Ok(FixedPointSet {
        alpha: zero,
        beta,
        gamma,
        multipliers: [f.derivative(zero), f.derivative(beta), f.derivative(gamma)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn seed_values() {
        let w = seed_omega::<f64>();
        assert!((w + 0.9862072184965908).abs() < 1e-15);
        let f = seed_polynomial::<f64>();
        assert!((f.c1() - 8.7534421003338).norm() < 1e-12);
        assert!((f.c2() - 5.9172433109798).norm() < 1e-12);
        assert!(f.eval(f.b()).norm() < 1e-12);
        assert!((f.eval(f.a()).re + 3.836759016017956).abs() < 1e-13);
        assert!((f.iterate(f.a(), 2).unwrap() - f.b()).norm() < 1e-12);
    }

    #[test]
    fn symmetric_critical_points() {
        let f = CubicPolynomial::from_critical_points(c(0., 1.), c(0., -1.)).unwrap();
        assert!((f.c1() - 3.0).norm() < 1e-15 && f.c2().norm() < 1e-15);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let g = CubicPolynomial::from_critical_points(c(0., h), c(0., -h)).unwrap();
        assert!((g.eval(g.a()) - g.a()).norm() < 1e-15);
    }

    #[test]
    fn degenerate_critical() {
        assert_eq!(
            CubicPolynomial::from_critical_points(c(1., 0.), c(1., 0.)),
            Err(Error::DegenerateCritical)
        );
    }

    #[test]
    fn escape_reported() {
        let f = seed_polynomial::<f64>();
        assert!(matches!(f.iterate(c(100.0, 0.0), 10), Err(Error::Escaped { step: 2 })));
    }

    #[test]
    fn seed_fixed_points() {
        let f = seed_polynomial::<f64>();
        let w = seed_omega::<f64>();
        let fp = fixed_points(&f).unwrap();
        assert!((fp.beta.re - (3.0 * w - 1.0)).abs() < 1e-14);
        assert!((fp.gamma.re - (3.0 * w + 1.0)).abs() < 1e-14);
        assert!((fp.multipliers[0].re - 9.0 * w * w).abs() < 1e-13);
        assert!((fp.multipliers[1].re - (3.0 - 6.0 * w)).abs() < 1e-12);
        assert!((fp.multipliers[2].re - (3.0 + 6.0 * w)).abs() < 1e-12);
        assert!(fp.all_repelling());
    }

    #[test]
    fn imaginary_fixed_points() {
        let f = CubicPolynomial::from_critical_points(c(0., 1.), c(0., -1.)).unwrap();
        let fp = fixed_points(&f).unwrap();
        let s = 2f64.sqrt();
        assert!((fp.beta - c(0.0, -s)).norm() < 1e-14);
        assert!((fp.gamma - c(0.0, s)).norm() < 1e-14);
    }

    #[test]
    fn extended_seed_agrees() {
        use crate::numerics::Qd;
        let w = seed_omega::<Qd>();
        let f = seed_polynomial::<Qd>();
        let r = f.iterate(f.a(), 2).unwrap() - f.b();
        assert!(cabs(r).to_f64() < 1e-55);
        assert!((w.to_f64() + 0.9862072184965908).abs() < 1e-15);
    }
}
