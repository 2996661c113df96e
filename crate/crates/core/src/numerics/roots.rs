//! Roots of complex cubics: closed-form seeds polished by Newton's method.

use num_complex::Complex;

use super::real::{cabs, cfinite, from_c64, to_c64, Real};
use crate::error::{Error, Result};

type C64 = Complex<f64>;

fn ccbrt(z: C64) -> C64 {
    if z == C64::new(0.0, 0.0) {
        return z;
    }
    C64::from_polar(z.norm().cbrt(), z.arg() / 3.0)
}

/// Cardano's formula in double precision for a monic cubic x^3 + a x^2 + b x + c.
fn cardano(a: C64, b: C64, c: C64) -> [C64; 3] {
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let disc = (q / 2.0) * (q / 2.0) + (p / 3.0) * (p / 3.0) * (p / 3.0);
    let s = disc.sqrt();
    let w1 = -q / 2.0 + s;
    let w2 = -q / 2.0 - s;
    let w = if w1.norm() >= w2.norm() { w1 } else { w2 };
    let u = ccbrt(w);
    let rot = C64::new(-0.5, 3f64.sqrt() / 2.0);
    let mut out = [C64::new(0.0, 0.0); 3];
    let mut uk = u;
    for r in out.iter_mut() {
        let vk = if uk.norm() > 0.0 { -p / (3.0 * uk) } else { C64::new(0.0, 0.0) };
        *r = uk + vk - shift;
        uk *= rot;
    }
    out
}

fn horner<T: Real>(c: &[Complex<T>; 4], z: Complex<T>) -> (Complex<T>, Complex<T>) {
    let mut p = c[0];
    let mut d = Complex::new(T::zero(), T::zero());
    for ci in &c[1..] {
        d = d * z + p;
        p = p * z + *ci;
    }
    (p, d)
}

/// The three roots of `c3 z^3 + c2 z^2 + c1 z + c0`, with multiplicity, sorted by real part then
/// imaginary part.
pub fn cubic_roots<T: Real>(
    c3: Complex<T>,
    c2: Complex<T>,
    c1: Complex<T>,
    c0: Complex<T>,
) -> Result<[Complex<T>; 3]> {
    if ![c3, c2, c1, c0].iter().all(|c| cfinite(*c)) {
        return Err(Error::NonFiniteInput);
    }
    if cabs(c3) == T::zero() {
        return Err(Error::InvalidArgument("leading coefficient is zero".into()));
    }
    let coeffs = [c3, c2, c1, c0];
    let lead = to_c64(c3);
    let seeds = cardano(to_c64(c2) / lead, to_c64(c1) / lead, to_c64(c0) / lead);
    let mut roots = seeds.map(|s| polish(&coeffs, from_c64(s)));
    // stable sort keeps refinement order on exact ties
    roots.sort_by(|x, y| {
        let (x, y) = (to_c64(*x), to_c64(*y));
        x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im))
    });
    Ok(roots)
}

fn polish<T: Real>(c: &[Complex<T>; 4], mut z: Complex<T>) -> Complex<T> {
    let (mut p, _) = horner(c, z);
    for _ in 0..12 {
        let (_, d) = horner(c, z);
        if cabs(d) == T::zero() || cabs(p) == T::zero() {
            break;
        }
        let cand = z - p / d;
        let (pc, _) = horner(c, cand);
        if !(cabs(pc) < cabs(p)) {
            break;
        }
        z = cand;
        p = pc;
    }
    z
}
