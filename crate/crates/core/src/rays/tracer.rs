//! External rays by Newton pullback.
//!
//! Node `i` of the ray at angle θ sits at potential `start * 3^(-i/S)`. For `i >= S` it is the
//! preimage under `f` of node `i - S` of the ray at angle 3θ, so a batch of angles closed under
//! tripling is traced band by band: band `b` holds nodes `bS..(b+1)S` and only depends on band
//! `b - 1`. The first band is reached by descending each ray from a potential where the
//! asymptotic inverse of the Böttcher map is accurate.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

const LN_3: f64 = 1.098_612_288_668_109_8;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{CircleAngle, C64};
use crate::poly::CubicPolynomial;

/// Tuning knobs for ray tracing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayOptions {
    /// Nodes per tripling of the potential.
    pub substeps: usize,
    /// A landing is accepted once the last ten nodes fit in a disk of this diameter.
    pub landing_tolerance: f64,
    /// Potential above which the asymptotic Böttcher inverse seeds the descent.
    pub far_potential: f64,
}

impl Default for RayOptions {
    fn default() -> Self {
        RayOptions {
            substeps: 24,
            landing_tolerance: 1e-7,
            far_potential: 24.0,
        }
    }
}

/// Default starting potential for rays.
pub const START_POTENTIAL: f64 = 2.0;
/// Default ending potential before landing refinement.
pub const END_POTENTIAL: f64 = 1e-8;
/// Number of trailing nodes used for the landing spread.
const SPREAD_NODES: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayNode {
    pub potential: f64,
    pub point: C64,
}

/// Polyline approximation of an external ray.
#[derive(Clone, Debug, PartialEq)]
pub struct TracedRay {
    pub angle: CircleAngle,
    pub nodes: Vec<RayNode>,
    /// Set only when `landing_spread` is below the landing tolerance.
    pub landing: Option<C64>,
    pub landing_spread: f64,
}

impl TracedRay {
    pub fn last_point(&self) -> C64 {
        self.nodes.last().map(|n| n.point).unwrap_or_default()
    }

    pub fn points(&self) -> impl Iterator<Item = C64> + '_ {
        self.nodes.iter().map(|n| n.point)
    }

    /// Writes `potential,re,im` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "potential,re,im")?;
        for n in &self.nodes {
            writeln!(w, "{:.17e},{:.17e},{:.17e}", n.potential, n.point.re, n.point.im)?;
        }
        Ok(())
    }
}

/// Green function `G` with `G(f(z)) = 3 G(z)`; zero for orbits that stay bounded for 10^4 steps.
pub fn potential(f: &CubicPolynomial, z: C64) -> f64 {
    let shift = f.c2() / 3.0;
    let mut w = z;
    let mut scale = 1.0;
    for _ in 0..10_000 {
        if w.norm() > 1e8 {
            return (w + shift).norm().ln() * scale;
        }
        w = f.eval(w);
        scale /= 3.0;
        if !w.re.is_finite() || !w.im.is_finite() {
            return 0.0;
        }
    }
    0.0
}

/// Asymptotic inverse of the Böttcher coordinate at potential `t` and angle `phi`.
pub fn far_inverse(f: &CubicPolynomial, t: f64, phi: f64) -> C64 {
    let w = C64::from_polar(t.exp(), TAU * phi);
    let c2 = f.c2();
    let c1 = f.c1();
    w - c2 / 3.0 - (c1 / 3.0 - c2 * c2 / 9.0) / w
}

fn node_potential(start: f64, i: i64, substeps: usize) -> f64 {
    start * (-(i as f64) * LN_3 / substeps as f64).exp()
}

/// Index of the first node whose potential is at most `end`.
fn last_index(start: f64, end: f64, substeps: usize) -> usize {
    if end >= start {
        return 0;
    }
    ((start / end).ln() / LN_3 * substeps as f64 - 1e-9).ceil() as usize
}

/// Solves `f(z) = w` for the preimage nearest to `seed`.
///
/// The residual is written around the critical point `c` nearest to the seed as
/// `(z - c)^2 (z + c2 + 2c) - (w - f(c))`, which stays accurate where two preimages nearly
/// coincide. Iteration continues until the Newton step stalls at rounding level. The result is
/// then compared with the other two preimages, roots of the deflated quadratic
/// `(f(x) - f(z)) / (x - z)`.
pub fn pullback(f: &CubicPolynomial, w: C64, seed: C64) -> Result<C64> {
    let (a, b) = (f.a(), f.b());
    let c = if (seed - a).norm() <= (seed - b).norm() { a } else { b };
    let rhs = w - f.eval(c);
    let lin = f.c2() + 2.0 * c;
    let g = |z: C64| (z - c) * (z - c) * (z + lin) - rhs;
    let dg = |z: C64| 3.0 * (z - a) * (z - b);
    let mut z = seed;
    let mut r = g(z);
    for _ in 0..80 {
        if r.norm() == 0.0 {
            break;
        }
        let d = dg(z);
        if d.norm() < 1e-300 {
            return Err(Error::DerivativeVanished);
        }
        let step = r / d;
        let mut lambda = 1.0;
        let mut next = None;
        for _ in 0..=20 {
            let cand = z - step * lambda;
            let rc = g(cand);
            if rc.norm() < r.norm() {
                next = Some((cand, rc));
                break;
            }
            lambda *= 0.5;
        }
        match next {
            Some((zn, rn)) => {
                let moved = (zn - z).norm();
                z = zn;
                r = rn;
                if moved <= 4.0 * f64::EPSILON * (z.norm() + (z - c).norm()) {
                    break;
                }
            }
            None => break,
        }
    }
    let scale = (z - c).norm_sqr() * (z + lin).norm() + rhs.norm() + f64::MIN_POSITIVE;
    if !(r.norm() <= 1e3 * f64::EPSILON * scale.max(1e-300)) && !(r.norm() <= 1e-13 * (1.0 + w.norm())) {
        return Err(Error::NoConvergence {
            iterations: 80,
            residual: r.norm(),
        });
    }
    let p = z + f.c2();
    let q = z * z + f.c2() * z + f.c1();
    let disc = (p * p - 4.0 * q).sqrt();
    let other = [(-p + disc) / 2.0, (-p - disc) / 2.0]
        .into_iter()
        .filter(|x| (x - seed).norm() < (z - seed).norm())
        .min_by(|x, y| (x - seed).norm().total_cmp(&(y - seed).norm()));
    match other {
        Some(x) if (x - z).norm() > 1e-12 * (1.0 + z.norm()) => pullback(f, w, x),
        _ => Ok(z),
    }
}

/// Positional noise below which jumps are not attributed to bifurcation. Near a critical point
/// a preimage is only determined to about the square root of the rounding level.
const JUMP_FLOOR: f64 = 1e-7;

fn jump_check(angle: &CircleAngle, pts: &[C64], z: C64, potential: f64) -> Result<()> {
    let n = pts.len();
    if n >= 2 {
        let spacing = (pts[n - 1] - pts[n - 2]).norm();
        let jump = (z - pts[n - 1]).norm();
        if jump > 10.0 * spacing + JUMP_FLOOR {
            return Err(Error::RayBifurcationSuspected {
                angle: *angle,
                potential,
            });
        }
    }
    Ok(())
}

/// Nodes `0..=last` of one ray, obtained by descending from the far potential.
fn top_band(
    f: &CubicPolynomial,
    angle: &CircleAngle,
    start: f64,
    last: usize,
    opts: &RayOptions,
) -> Result<Vec<C64>> {
    let s = opts.substeps;
    let far = opts.far_potential.max(start);
    let up = ((far / start).ln() / LN_3 * s as f64).ceil() as i64;
    let mut level_angles: Vec<f64> = vec![angle.to_f64()];
    let mut chain: Vec<C64> = Vec::new();
    let mut out = Vec::with_capacity(last + 1);
    let mut trail: Vec<C64> = Vec::new();
    for idx in -up..=last as i64 {
        let t = node_potential(start, idx, s);
        let levels = if t >= far { 0 } else { ((far / t).ln() / LN_3).ceil() as usize };
        while level_angles.len() <= levels {
            let next = angle.triple_n(level_angles.len()).to_f64();
            level_angles.push(next);
        }
        let mut next_chain = vec![C64::default(); levels + 1];
        let top_t = t * 3f64.powi(levels as i32);
        next_chain[levels] = far_inverse(f, top_t, level_angles[levels]);
        for i in (0..levels).rev() {
            let seed = if i < chain.len() {
                chain[i]
            } else {
                far_inverse(f, t * 3f64.powi(i as i32), level_angles[i])
            };
            next_chain[i] = pullback(f, next_chain[i + 1], seed)?;
        }
        let z = next_chain[0];
        jump_check(angle, &trail, z, t)?;
        trail.push(z);
        chain = next_chain;
        if idx >= 0 {
            out.push(z);
        }
    }
    Ok(out)
}

fn spread(pts: &[C64]) -> f64 {
    let tail = &pts[pts.len().saturating_sub(SPREAD_NODES)..];
    let mut d: f64 = 0.0;
    for (i, p) in tail.iter().enumerate() {
        for q in &tail[i + 1..] {
            d = d.max((p - q).norm());
        }
    }
    d
}

/// Traces every angle in `angles` from `start` down to `end` potential. Angles needed for the
/// pullback (forward images) are traced as far as required. Results are independent of the
/// thread schedule.
pub fn trace_rays(
    f: &CubicPolynomial,
    angles: &[CircleAngle],
    start: f64,
    end: f64,
    opts: &RayOptions,
) -> Vec<Result<TracedRay>> {
    if !(start > 0.0) || !(end > 0.0) || opts.substeps == 0 {
        let e = Error::InvalidArgument("potentials must be positive".into());
        return angles.iter().map(|_| Err(e.clone())).collect();
    }
    let s = opts.substeps;
    let last = last_index(start, end, s);

    // deepest node index needed for every angle in the forward closure
    let mut need: BTreeMap<CircleAngle, usize> = BTreeMap::new();
    let mut work: Vec<CircleAngle> = Vec::new();
    for a in angles {
        if need.insert(*a, last).is_none() {
            work.push(*a);
        }
    }
    while let Some(a) = work.pop() {
        let n = need[&a];
        if n < s {
            continue;
        }
        let img = a.triple();
        let want = n - s;
        let cur = need.get(&img).copied();
        if cur.map_or(true, |c| c < want) {
            need.insert(img, want);
            work.push(img);
        }
    }
    let all: Vec<CircleAngle> = need.keys().copied().collect();
    let index: BTreeMap<CircleAngle, usize> = all.iter().enumerate().map(|(i, a)| (*a, i)).collect();
    let image: Vec<usize> = all.iter().map(|a| index.get(&a.triple()).copied().unwrap_or(usize::MAX)).collect();
    let needs: Vec<usize> = all.iter().map(|a| need[a]).collect();

    let mut nodes: Vec<Vec<C64>> = vec![Vec::new(); all.len()];
    let mut errors: Vec<Option<Error>> = vec![None; all.len()];

    let band0: Vec<Result<Vec<C64>>> = (0..all.len())
        .into_par_iter()
        .map(|k| top_band(f, &all[k], start, needs[k].min(s - 1), opts))
        .collect();
    for (k, r) in band0.into_iter().enumerate() {
        match r {
            Ok(v) => nodes[k] = v,
            Err(e) => errors[k] = Some(e),
        }
    }

    let max_need = needs.iter().copied().max().unwrap_or(0);
    let mut band = 1;
    while band * s <= max_need {
        let lo = band * s;
        let active: Vec<usize> = (0..all.len())
            .filter(|&k| errors[k].is_none() && needs[k] >= lo)
            .collect();
        let results: Vec<(usize, Result<Vec<C64>>)> = active
            .par_iter()
            .map(|&k| {
                let hi = needs[k].min(lo + s - 1);
                let img = image[k];
                if let Some(e) = &errors[img] {
                    return (k, Err(e.clone()));
                }
                let src = &nodes[img];
                let mut pts: Vec<C64> = Vec::with_capacity(hi - lo + 1);
                let own = &nodes[k];
                for i in lo..=hi {
                    let node = |j: usize| if j < lo { own[j] } else { pts[j - lo] };
                    let trail = [node(i - 2), node(i - 1)];
                    let z = match pullback(f, src[i - s], trail[1]) {
                        Ok(z) => z,
                        Err(e) => return (k, Err(e)),
                    };
                    let t = node_potential(start, i as i64, s);
                    if let Err(e) = jump_check(&all[k], &trail, z, t) {
                        return (k, Err(e));
                    }
                    pts.push(z);
                }
                (k, Ok(pts))
            })
            .collect();
        for (k, r) in results {
            match r {
                Ok(v) => nodes[k].extend(v),
                Err(e) => errors[k] = Some(e),
            }
        }
        band += 1;
    }

    angles
        .iter()
        .map(|a| {
            let k = index[a];
            if let Some(e) = &errors[k] {
                return Err(e.clone());
            }
            let pts = &nodes[k];
            let sp = spread(pts);
            let nodes = pts
                .iter()
                .enumerate()
                .map(|(i, p)| RayNode {
                    potential: node_potential(start, i as i64, s),
                    point: *p,
                })
                .collect();
            Ok(TracedRay {
                angle: *a,
                nodes,
                landing: (sp < opts.landing_tolerance).then(|| pts[pts.len() - 1]),
                landing_spread: sp,
            })
        })
        .collect()
}

/// Traces a single ray.
pub fn trace_ray(
    f: &CubicPolynomial,
    angle: CircleAngle,
    start: f64,
    end: f64,
    opts: &RayOptions,
) -> Result<TracedRay> {
    trace_rays(f, &[angle], start, end, opts).pop().expect("one result per angle")
}

/// Traces each angle until its landing spread is below `tol`, dividing the end potential by ten
/// up to six times.
pub fn landing_rays(
    f: &CubicPolynomial,
    angles: &[CircleAngle],
    start: f64,
    tol: f64,
    opts: &RayOptions,
) -> Vec<Result<TracedRay>> {
    let opts = RayOptions {
        landing_tolerance: tol,
        ..*opts
    };
    let mut out: Vec<Option<Result<TracedRay>>> = vec![None; angles.len()];
    // a deeper pass that fails keeps the previous trace; it then counts as final
    let mut done = vec![false; angles.len()];
    let mut end = END_POTENTIAL;
    for round in 0..=6 {
        let pending: Vec<usize> = (0..angles.len())
            .filter(|&i| {
                !done[i]
                    && match &out[i] {
                        None => true,
                        Some(Ok(ray)) => ray.landing.is_none(),
                        Some(Err(_)) => false,
                    }
            })
            .collect();
        if pending.is_empty() {
            break;
        }
        let batch: Vec<CircleAngle> = pending.iter().map(|&i| angles[i]).collect();
        let res = trace_rays(f, &batch, start, end, &opts);
        for (i, r) in pending.into_iter().zip(res) {
            match (&out[i], r) {
                (Some(Ok(_)), Err(_)) => done[i] = true,
                (_, r) => out[i] = Some(r),
            }
        }
        if round < 6 {
            end /= 10.0;
        }
    }
    out.into_iter()
        .zip(angles)
        .map(|(r, a)| match r.expect("every angle traced") {
            Ok(ray) if ray.landing.is_none() => Err(Error::LandingUnresolved {
                angle: *a,
                spread: ray.landing_spread,
            }),
            other => other,
        })
        .collect()
}

/// Landing point of the ray at `angle` with spread below `tol`.
pub fn landing_point(f: &CubicPolynomial, angle: CircleAngle, tol: f64) -> Result<C64> {
    let ray = landing_rays(f, &[angle], START_POTENTIAL, tol, &RayOptions::default())
        .pop()
        .expect("one result")?;
    Ok(ray.landing.expect("landing checked"))
}
