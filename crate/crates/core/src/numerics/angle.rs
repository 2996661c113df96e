//! Exact rational angles on the circle R/Z and counterclockwise arcs.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A rational angle `num/den` in reduced form with `0 <= num < den`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct CircleAngle {
    num: u128,
    den: u128,
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Full 256-bit product of two u128 values as (high, low).
fn wide_mul(a: u128, b: u128) -> (u128, u128) {
    const MASK: u128 = (1 << 64) - 1;
    let (a1, a0) = (a >> 64, a & MASK);
    let (b1, b0) = (b >> 64, b & MASK);
    let p00 = a0 * b0;
    let p01 = a0 * b1;
    let p10 = a1 * b0;
    let p11 = a1 * b1;
    let mid = (p00 >> 64) + (p01 & MASK) + (p10 & MASK);
    let lo = (p00 & MASK) | (mid << 64);
    let hi = p11 + (p01 >> 64) + (p10 >> 64) + (mid >> 64);
    (hi, lo)
}

impl CircleAngle {
    pub const ZERO: CircleAngle = CircleAngle { num: 0, den: 1 };

    /// Builds `num/den` reduced modulo 1. Panics if `den == 0`.
    pub fn new(num: i128, den: u128) -> Self {
        assert!(den > 0, "angle denominator must be positive");
        let r = num.rem_euclid(den as i128) as u128;
        Self::reduced(r, den)
    }

    fn reduced(num: u128, den: u128) -> Self {
        let num = num % den;
        if num == 0 {
            return Self::ZERO;
        }
        let g = gcd(num, den);
        CircleAngle {
            num: num / g,
            den: den / g,
        }
    }

    pub fn num(&self) -> u128 {
        self.num
    }

    pub fn den(&self) -> u128 {
        self.den
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// The image under the tripling map t -> 3t.
    pub fn triple(&self) -> Self {
        let three_num = (self.num % self.den) * 3 % self.den;
        Self::reduced(three_num, self.den)
    }

    /// Applies the tripling map `n` times.
    pub fn triple_n(&self, n: usize) -> Self {
        (0..n).fold(*self, |a, _| a.triple())
    }

    /// The three preimages under tripling, in increasing order.
    pub fn preimages(&self) -> [CircleAngle; 3] {
        let den = self.den * 3;
        [0u128, 1, 2].map(|k| Self::reduced(self.num + k * self.den, den))
    }

    /// The antipodal-by-conjugation angle -t.
    pub fn neg(&self) -> Self {
        Self::reduced(self.den - self.num, self.den)
    }

    /// Sum modulo 1.
    pub fn add(&self, other: &CircleAngle) -> Self {
        let g = gcd(self.den, other.den);
        let den = self.den / g * other.den;
        let num = self.num * (other.den / g) + other.num * (self.den / g);
        Self::reduced(num, den)
    }

    /// Counterclockwise length of the arc from `self` to `other`, as an angle in [0,1).
    pub fn ccw_to(&self, other: &CircleAngle) -> Self {
        other.add(&self.neg())
    }

    /// The point `self + (other - self) * i / n` along the counterclockwise arc.
    pub fn along(&self, other: &CircleAngle, i: u128, n: u128) -> Self {
        let d = self.ccw_to(other);
        let step = CircleAngle::reduced(d.num * i % (d.den * n), d.den * n);
        // d*i/n may exceed 1 only when i > n, which callers do not request
        self.add(&step)
    }
}

impl Ord for CircleAngle {
    fn cmp(&self, other: &Self) -> Ordering {
        wide_mul(self.num, other.den).cmp(&wide_mul(other.num, self.den))
    }
}

impl PartialOrd for CircleAngle {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for CircleAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl fmt::Debug for CircleAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for CircleAngle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("cannot parse angle {s:?}"));
        let s = s.trim();
        let (p, q) = match s.split_once('/') {
            Some((p, q)) => (p.trim(), q.trim()),
            None => (s, "1"),
        };
        let p: i128 = p.parse().map_err(|_| bad())?;
        let q: u128 = q.parse().map_err(|_| bad())?;
        if q == 0 {
            return Err(bad());
        }
        Ok(CircleAngle::new(p, q))
    }
}

/// The closed counterclockwise arc `[start, end]`. When `start == end` the arc is the whole circle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Arc {
    pub start: CircleAngle,
    pub end: CircleAngle,
}

impl Arc {
    pub fn new(start: CircleAngle, end: CircleAngle) -> Self {
        Arc { start, end }
    }

    pub fn contains(&self, t: &CircleAngle) -> bool {
        if self.start == self.end {
            return true;
        }
        if self.start < self.end {
            self.start <= *t && *t <= self.end
        } else {
            *t >= self.start || *t <= self.end
        }
    }

    /// Membership in the open arc `(start, end)`.
    pub fn contains_open(&self, t: &CircleAngle) -> bool {
        if *t == self.start || *t == self.end {
            return false;
        }
        self.contains(t)
    }

    /// Membership test for a floating-point angle in [0,1).
    pub fn contains_f64(&self, t: f64) -> bool {
        let (a, b) = (self.start.to_f64(), self.end.to_f64());
        if self.start == self.end {
            return true;
        }
        if a < b {
            a <= t && t <= b
        } else {
            t >= a || t <= b
        }
    }

    /// Counterclockwise length in [0,1]; the degenerate arc has length 1.
    pub fn length(&self) -> f64 {
        if self.start == self.end {
            1.0
        } else {
            self.start.ccw_to(&self.end).to_f64()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduces_and_triples() {
        let a = CircleAngle::new(6, 18);
        assert_eq!(a, CircleAngle::new(1, 3));
        assert_eq!(a.triple(), CircleAngle::ZERO);
        assert_eq!(CircleAngle::new(5, 36).triple(), CircleAngle::new(5, 12));
        assert_eq!(CircleAngle::new(5, 12).triple(), CircleAngle::new(1, 4));
        assert_eq!(CircleAngle::new(1, 4).triple(), CircleAngle::new(3, 4));
        assert_eq!(CircleAngle::new(-1, 6), CircleAngle::new(5, 6));
    }

    #[test]
    fn preimages_map_back() {
        let a = CircleAngle::new(2, 7);
        for p in a.preimages() {
            assert_eq!(p.triple(), a);
        }
    }

    #[test]
    fn ordering_handles_huge_denominators() {
        let big = 3u128.pow(70);
        let a = CircleAngle::new(1, big);
        let b = CircleAngle::new(2, big);
        assert!(a < b);
        assert!(CircleAngle::new((big - 1) as i128, big) > CircleAngle::new(1, 2));
    }

    #[test]
    fn parses() {
        assert_eq!("1/3".parse::<CircleAngle>().unwrap(), CircleAngle::new(1, 3));
        assert_eq!("-1/6".parse::<CircleAngle>().unwrap(), CircleAngle::new(5, 6));
        assert_eq!("0".parse::<CircleAngle>().unwrap(), CircleAngle::ZERO);
        assert!("1/0".parse::<CircleAngle>().is_err());
    }

    #[test]
    fn wrapping_arc() {
        let arc = Arc::new(CircleAngle::new(3, 4), CircleAngle::new(1, 4));
        assert!(arc.contains(&CircleAngle::ZERO));
        assert!(!arc.contains(&CircleAngle::new(1, 2)));
        assert!(arc.contains(&CircleAngle::new(1, 4)));
        assert!(!arc.contains_open(&CircleAngle::new(1, 4)));
    }

    #[test]
    fn along_splits_arc() {
        let a = CircleAngle::new(3, 4);
        let b = CircleAngle::new(1, 4);
        assert_eq!(a.along(&b, 1, 2), CircleAngle::ZERO);
        assert_eq!(a.along(&b, 0, 2), a);
    }
}
