//! Quad-double arithmetic: an unevaluated sum of four f64 limbs (about 212 significand bits).
//!
//! Sums and products are formed as exact floating-point expansions and then
//! truncated to the four leading non-overlapping components.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Rem, Sub, SubAssign};

use num_traits::{Num, One, Zero};

use super::real::Real;

#[derive(Clone, Copy, Default)]
pub struct Qd([f64; 4]);

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Compresses an arbitrary list of terms into at most four leading non-overlapping limbs.
fn normalize(terms: &mut Vec<f64>) -> Qd {
    // exact expansion by repeated two-sum (grow-expansion), smallest limbs first
    let mut exp: Vec<f64> = Vec::with_capacity(terms.len());
    for &t in terms.iter() {
        if t == 0.0 {
            continue;
        }
        let mut q = t;
        let mut next = Vec::with_capacity(exp.len() + 1);
        for &e in &exp {
            let (s, err) = two_sum(q, e);
            if err != 0.0 {
                next.push(err);
            }
            q = s;
        }
        next.push(q);
        exp = next;
    }
    // compress: top-down then bottom-up sweeps
    if exp.is_empty() {
        return Qd([0.0; 4]);
    }
    let n = exp.len();
    let mut g = vec![0.0; n];
    let mut bottom = n - 1;
    let mut q = exp[n - 1];
    for i in (0..n - 1).rev() {
        let (s, small) = two_sum(q, exp[i]);
        q = s;
        if small != 0.0 {
            g[bottom] = q;
            bottom -= 1;
            q = small;
        }
    }
    g[bottom] = q;
    let mut h = Vec::with_capacity(n);
    let mut top = 0usize;
    let mut q = g[bottom];
    for &gi in &g[bottom + 1..n] {
        let (s, small) = two_sum(gi, q);
        q = s;
        if small != 0.0 {
            h.push(small);
            top += 1;
        }
    }
    h.push(q);
    let _ = top;
    // h is increasing in magnitude; take the four largest
    let mut out = [0.0; 4];
    for (k, v) in h.iter().rev().take(4).enumerate() {
        out[k] = *v;
    }
    terms.clear();
    Qd(out)
}

impl Qd {
    pub const fn from_limbs(l: [f64; 4]) -> Self {
        Qd(l)
    }

    pub fn limbs(&self) -> [f64; 4] {
        self.0
    }

    pub fn hi(&self) -> f64 {
        self.0[0]
    }

    fn mul_f64(self, b: f64) -> Qd {
        let mut t = Vec::with_capacity(8);
        for &a in &self.0 {
            let (p, e) = two_prod(a, b);
            t.push(p);
            t.push(e);
        }
        normalize(&mut t)
    }

    pub fn floor(self) -> Qd {
        let a = self.0;
        let mut x = [a[0].floor(), 0.0, 0.0, 0.0];
        if x[0] == a[0] {
            x[1] = a[1].floor();
            if x[1] == a[1] {
                x[2] = a[2].floor();
                if x[2] == a[2] {
                    x[3] = a[3].floor();
                }
            }
        }
        normalize(&mut x.to_vec())
    }

    pub fn trunc(self) -> Qd {
        if self.0[0] < 0.0 {
            -((-self).floor())
        } else {
            self.floor()
        }
    }

    /// Parses a decimal literal such as `-0.98620721849659081234e0`.
    pub fn parse_decimal(s: &str) -> Option<Qd> {
        let s = s.trim();
        let (mant, exp) = match s.find(['e', 'E']) {
            Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
            None => (s, 0),
        };
        let (neg, mant) = match mant.strip_prefix('-') {
            Some(m) => (true, m),
            None => (false, mant.strip_prefix('+').unwrap_or(mant)),
        };
        let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
        if int.is_empty() && frac.is_empty() {
            return None;
        }
        let ten = Qd::from(10.0);
        let mut v = Qd::zero();
        for c in int.chars().chain(frac.chars()) {
            let d = c.to_digit(10)? as f64;
            v = v * ten + Qd::from(d);
        }
        let e = exp - frac.len() as i32;
        let mut p = Qd::one();
        for _ in 0..e.unsigned_abs() {
            p = p * ten;
        }
        v = if e >= 0 { v * p } else { v / p };
        Some(if neg { -v } else { v })
    }
}

impl From<f64> for Qd {
    fn from(x: f64) -> Self {
        Qd([x, 0.0, 0.0, 0.0])
    }
}

impl PartialEq for Qd {
    fn eq(&self, other: &Self) -> bool {
        (*self - *other).0[0] == 0.0
    }
}

impl PartialOrd for Qd {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        (*self - *other).0[0].partial_cmp(&0.0)
    }
}

impl Neg for Qd {
    type Output = Qd;
    fn neg(self) -> Qd {
        Qd(self.0.map(|x| -x))
    }
}

impl Add for Qd {
    type Output = Qd;
    fn add(self, rhs: Qd) -> Qd {
        let mut t: Vec<f64> = self.0.iter().chain(rhs.0.iter()).copied().collect();
        normalize(&mut t)
    }
}

impl Sub for Qd {
    type Output = Qd;
    fn sub(self, rhs: Qd) -> Qd {
        self + (-rhs)
    }
}

impl Mul for Qd {
    type Output = Qd;
    fn mul(self, rhs: Qd) -> Qd {
        let (a, b) = (self.0, rhs.0);
        let mut t = Vec::with_capacity(24);
        for i in 0..4 {
            for j in 0..4 - i {
                if i + j <= 2 {
                    let (p, e) = two_prod(a[i], b[j]);
                    t.push(p);
                    t.push(e);
                } else {
                    t.push(a[i] * b[j]);
                }
            }
        }
        normalize(&mut t)
    }
}

impl Div for Qd {
    type Output = Qd;
    fn div(self, rhs: Qd) -> Qd {
        // long division, one f64 quotient digit at a time
        let b0 = rhs.0[0];
        let mut r = self;
        let mut q = [0.0; 5];
        for qi in q.iter_mut() {
            *qi = r.0[0] / b0;
            r = r - rhs.mul_f64(*qi);
        }
        normalize(&mut q.to_vec())
    }
}

impl Rem for Qd {
    type Output = Qd;
    fn rem(self, rhs: Qd) -> Qd {
        self - (self / rhs).trunc() * rhs
    }
}

impl AddAssign for Qd {
    fn add_assign(&mut self, rhs: Qd) {
        *self = *self + rhs;
    }
}

impl SubAssign for Qd {
    fn sub_assign(&mut self, rhs: Qd) {
        *self = *self - rhs;
    }
}

impl MulAssign for Qd {
    fn mul_assign(&mut self, rhs: Qd) {
        *self = *self * rhs;
    }
}

impl Zero for Qd {
    fn zero() -> Self {
        Qd([0.0; 4])
    }
    fn is_zero(&self) -> bool {
        self.0[0] == 0.0
    }
}

impl One for Qd {
    fn one() -> Self {
        Qd([1.0, 0.0, 0.0, 0.0])
    }
}

impl Num for Qd {
    type FromStrRadixErr = &'static str;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        if radix != 10 {
            return Err("only decimal literals are supported");
        }
        Qd::parse_decimal(s).ok_or("invalid decimal literal")
    }
}

impl fmt::Debug for Qd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Qd({:e}, {:e}, {:e}, {:e})", self.0[0], self.0[1], self.0[2], self.0[3])
    }
}

impl fmt::Display for Qd {
    /// Prints about 60 significant decimal digits.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let x = *self;
        if x.0[0] == 0.0 {
            return write!(f, "0");
        }
        if !x.0[0].is_finite() {
            return write!(f, "{}", x.0[0]);
        }
        let neg = x.0[0] < 0.0;
        let mut v = if neg { -x } else { x };
        let ten = Qd::from(10.0);
        let mut e = v.0[0].log10().floor() as i32;
        let mut p = Qd::one();
        for _ in 0..e.unsigned_abs() {
            p = p * ten;
        }
        v = if e >= 0 { v / p } else { v * p };
        if v.0[0] >= 10.0 {
            v = v / ten;
            e += 1;
        } else if v.0[0] < 1.0 {
            v = v * ten;
            e -= 1;
        }
        let mut digits = String::new();
        for _ in 0..60 {
            let d = v.floor().0[0].clamp(0.0, 9.0);
            digits.push(char::from(b'0' + d as u8));
            v = (v - Qd::from(d)) * ten;
        }
        let sign = if neg { "-" } else { "" };
        write!(f, "{sign}{}.{}e{e}", &digits[..1], &digits[1..])
    }
}

impl Real for Qd {
    fn from_f64(x: f64) -> Self {
        Qd::from(x)
    }
    fn to_f64(self) -> f64 {
        self.0[0] + self.0[1]
    }
    fn sqrt(self) -> Self {
        if self.0[0] <= 0.0 {
            return Qd::zero();
        }
        let half = Qd::from(0.5);
        let mut x = Qd::from(self.0[0].sqrt());
        for _ in 0..3 {
            x = x + (self - x * x) / x * half;
        }
        x
    }
    fn abs(self) -> Self {
        if self.0[0] < 0.0 {
            -self
        } else {
            self
        }
    }
    fn is_finite(self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
    fn epsilon() -> f64 {
        1.0e-63
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_third_round_trip() {
        let third = Qd::one() / Qd::from(3.0);
        let back = third * Qd::from(3.0) - Qd::one();
        assert!(back.0[0].abs() < 1e-62);
    }

    #[test]
    fn sqrt_two_squares_back() {
        let r = Qd::from(2.0).sqrt();
        let d = r * r - Qd::from(2.0);
        assert!(d.0[0].abs() < 1e-62, "{d:?}");
    }

    #[test]
    fn carries_more_bits_than_f64() {
        let tiny = Qd::from(1e-40);
        let s = Qd::one() + tiny - Qd::one();
        assert!((s.0[0] - 1e-40).abs() < 1e-55);
    }

    #[test]
    fn decimal_parse_and_print() {
        let x = Qd::parse_decimal("-0.98620721849659081").unwrap();
        assert!((x.to_f64() + 0.98620721849659081).abs() < 1e-17);
        let s = format!("{}", Qd::one() / Qd::from(7.0));
        assert!(s.starts_with("1.428571428571428571428571428571428571428571"), "{s}");
    }

    #[test]
    fn remainder_and_floor() {
        let r = Qd::from(7.5) % Qd::from(2.0);
        assert_eq!(r.to_f64(), 1.5);
        assert_eq!(Qd::from(-1.5).floor().to_f64(), -2.0);
        assert_eq!(Qd::from(-1.5).trunc().to_f64(), -1.0);
    }
}
