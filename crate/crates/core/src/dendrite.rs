//! The branching point ξ, its external angles, admissibility and nodal points.
//!
//! Angles at the critical points are found numerically: the angle sets along the critical
//! orbits are pulled back one level at a time and each candidate ray is assigned to the nearest
//! preimage of the point its image ray lands at. Angles at ξ are then found combinatorially: the
//! critical leaves split the circle into three classes that tripling maps injectively, so the
//! angle set at ω pulls back to one angle set per class at every level.

use std::io::Write;

use rayon::prelude::*;

use crate::config::{orbit_tolerance, Configuration, VERIFY_LANDING_TOL};
use crate::error::{Error, Result};
use crate::numerics::{cubic_roots, Arc, CircleAngle, C64};
use crate::poly::CubicPolynomial;
use crate::rays::{landing_rays, trace_rays, RayOptions, TracedRay, END_POTENTIAL, START_POTENTIAL};
use crate::report::{Check, Report};

/// Angles whose rays land at β, β′ and β″.
pub fn test_angles() -> [CircleAngle; 3] {
    [CircleAngle::new(1, 2), CircleAngle::new(1, 6), CircleAngle::new(5, 6)]
}

/// Potential at which rays are cut when only their approximate landing point matters. Rays
/// landing at a critical point are resolved only to about the square root of the rounding level
/// of their image, so going deeper adds noise rather than accuracy.
pub const DEEP_POTENTIAL: f64 = END_POTENTIAL;
/// Maximal distance between the ray ends at ξ and the refined ξ.
pub const CLUSTER_TOLERANCE: f64 = 1e-3;
pub const LOOP_SAMPLES: usize = 2048;
pub const LOOP_POTENTIAL: f64 = 1e-4;
/// Minimal number of samples for a loop nodal-point search.
pub const MIN_NODAL_SAMPLES: usize = 300;

/// Candidates sorted into those landing at a target and those whose landing was not resolved.
#[derive(Clone, Debug, Default)]
pub struct AngleSelection {
    pub matched: Vec<CircleAngle>,
    pub unresolved: Vec<(CircleAngle, Error)>,
}

/// The candidates whose rays land within `max(tol, 3 * landing tolerance)` of `target`.
pub fn landing_angles_at(
    f: &CubicPolynomial,
    target: C64,
    candidates: &[CircleAngle],
    tol: f64,
    opts: &RayOptions,
) -> AngleSelection {
    let cluster = tol.max(3.0 * opts.landing_tolerance);
    let rays = landing_rays(f, candidates, START_POTENTIAL, opts.landing_tolerance, opts);
    let mut out = AngleSelection::default();
    for (a, r) in candidates.iter().zip(rays) {
        match r {
            Ok(ray) => {
                if (ray.landing.expect("landing checked") - target).norm() <= cluster {
                    out.matched.push(*a);
                }
            }
            Err(e) => out.unresolved.push((*a, e)),
        }
    }
    out
}

/// External angles at the two critical points.
#[derive(Clone, Debug, PartialEq)]
pub struct CriticalAngles {
    /// The two angles at ω′, increasing.
    pub omega_prime: [CircleAngle; 2],
    /// The four angles at ω, increasing.
    pub omega: [CircleAngle; 4],
}

impl CriticalAngles {
    /// The two critical leaves: the pair at ω′ and the diagonal of ω's angles.
    pub fn leaves(&self) -> [(CircleAngle, CircleAngle); 2] {
        [
            (self.omega_prime[0], self.omega_prime[1]),
            (self.omega[0], self.omega[2]),
        ]
    }
}

/// Pulls the angles landing at `image` back to the ones landing at `target`, a preimage of
/// `image`. Each candidate ray is attributed to the preimage of `image` its end is nearest to.
fn pull_back_angles(
    f: &CubicPolynomial,
    angles: &[CircleAngle],
    image: C64,
    target: C64,
    opts: &RayOptions,
) -> Result<Vec<CircleAngle>> {
    let one = C64::new(1.0, 0.0);
    let roots = cubic_roots(one, f.c2(), f.c1(), -image)?;
    let scale = 1.0 + target.norm();
    let others: Vec<C64> = roots
        .iter()
        .copied()
        .filter(|r| (r - target).norm() > 1e-6 * scale)
        .collect();
    let mut candidates: Vec<CircleAngle> = angles.iter().flat_map(|a| a.preimages()).collect();
    candidates.sort();
    candidates.dedup();
    let rays = trace_rays(f, &candidates, START_POTENTIAL, DEEP_POTENTIAL, opts);
    let mut kept = Vec::new();
    for (a, r) in candidates.iter().zip(rays) {
        let end = r?.last_point();
        let d = (end - target).norm();
        if others.iter().all(|o| d < (end - o).norm()) {
            kept.push(*a);
        }
    }
    Ok(kept)
}

/// Angle sets at ω (a slot) and ω′ (b slot) of a polynomial with a (k, ℓ)-configuration.
pub fn critical_angles(f: &CubicPolynomial, k: usize, l: usize, opts: &RayOptions) -> Result<CriticalAngles> {
    let b_orbit = f.orbit(f.b(), l)?;
    let mut set = vec![CircleAngle::ZERO];
    for i in (0..l).rev() {
        let image = if i + 1 == l { C64::new(0.0, 0.0) } else { b_orbit[i + 1] };
        set = pull_back_angles(f, &set, image, b_orbit[i], opts)?;
    }
    let omega_prime: [CircleAngle; 2] = set.clone().try_into().map_err(|_| {
        Error::NoFourRayCluster(format!("{} rays land at ω′, expected 2", set.len()))
    })?;
    let a_orbit = f.orbit(f.a(), k)?;
    for i in (0..k).rev() {
        let image = if i + 1 == k { f.b() } else { a_orbit[i + 1] };
        set = pull_back_angles(f, &set, image, a_orbit[i], opts)?;
    }
    let omega: [CircleAngle; 4] = set.clone().try_into().map_err(|_| {
        Error::NoFourRayCluster(format!("{} rays land at ω, expected 4", set.len()))
    })?;
    if omega[0].triple() != omega[2].triple() || omega[1].triple() != omega[3].triple() {
        return Err(Error::NoFourRayCluster(format!("angles {omega:?} at ω do not pair up")));
    }
    Ok(CriticalAngles { omega_prime, omega })
}

/// Index `i` of the open arc `(q[i], q[i+1])` of the circle minus the sorted `q` containing `t`,
/// or `None` when `t` is one of the `q`.
pub fn arc_index(q: &[CircleAngle], t: &CircleAngle) -> Option<usize> {
    let n = q.len();
    (0..n).find(|&i| Arc::new(q[i], q[(i + 1) % n]).contains_open(t))
}

/// Arc indices of the three test angles when they lie in three distinct arcs.
pub fn separation(q: &[CircleAngle], tests: &[CircleAngle; 3]) -> Option<[usize; 3]> {
    let idx = [arc_index(q, &tests[0])?, arc_index(q, &tests[1])?, arc_index(q, &tests[2])?];
    (idx[0] != idx[1] && idx[1] != idx[2] && idx[0] != idx[2]).then_some(idx)
}

fn class_of(t: &CircleAngle, leaves: &[(CircleAngle, CircleAngle); 2]) -> Result<(bool, bool)> {
    let mut key = [false; 2];
    for (i, (p, q)) in leaves.iter().enumerate() {
        if t == p || t == q {
            return Err(Error::NoFourRayCluster(format!("angle {t} lies on a critical leaf")));
        }
        key[i] = Arc::new(*p, *q).contains_open(t);
    }
    Ok((key[0], key[1]))
}

/// The three angle sets mapped onto `set` by tripling, one per critical class.
pub fn pull_back_set(
    set: &[CircleAngle],
    leaves: &[(CircleAngle, CircleAngle); 2],
) -> Result<Vec<Vec<CircleAngle>>> {
    let mut classes: Vec<((bool, bool), Vec<CircleAngle>)> = Vec::with_capacity(3);
    for a in set {
        for p in a.preimages() {
            let key = class_of(&p, leaves)?;
            match classes.iter_mut().find(|(k, _)| *k == key) {
                Some((_, v)) => v.push(p),
                None => classes.push((key, vec![p])),
            }
        }
    }
    if classes.len() != 3 || classes.iter().any(|(_, v)| v.len() != set.len()) {
        return Err(Error::NoFourRayCluster("critical leaves do not split the circle in three".into()));
    }
    classes.sort_by_key(|(k, _)| *k);
    Ok(classes
        .into_iter()
        .map(|(_, mut v)| {
            v.sort();
            v
        })
        .collect())
}

/// All angle sets at depth-`j` preimages of ω whose angles separate the test angles.
fn separating_sets(
    crit: &CriticalAngles,
    j: usize,
    tests: &[CircleAngle; 3],
) -> Result<Vec<[CircleAngle; 4]>> {
    let leaves = crit.leaves();
    let mut level: Vec<Vec<CircleAngle>> = vec![crit.omega.to_vec()];
    for _ in 0..j {
        let next: Result<Vec<Vec<Vec<CircleAngle>>>> =
            level.par_iter().map(|s| pull_back_set(s, &leaves)).collect();
        level = next?.into_iter().flatten().collect();
    }
    Ok(level
        .into_iter()
        .filter(|s| separation(s, tests).is_some())
        .map(|s| s.try_into().expect("four angles"))
        .collect())
}

/// The branching point ξ with f^j(ξ) = ω and its four external angles.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchingData {
    pub xi: C64,
    /// Counterclockwise.
    pub angles: [CircleAngle; 4],
    pub j: usize,
    /// Arc of the circle minus `angles` holding 1/2, 1/6 and 5/6.
    pub separation: [usize; 3],
    /// ξ, f(ξ), …, f^j(ξ) = ω.
    pub orbit: Vec<C64>,
    /// Ends of the four rays at [`DEEP_POTENTIAL`].
    pub ray_ends: [C64; 4],
    pub critical: CriticalAngles,
}

impl BranchingData {
    /// Largest distance from ξ to the ends of its four rays.
    pub fn cluster_radius(&self) -> f64 {
        self.ray_ends.iter().map(|e| (e - self.xi).norm()).fold(0.0, f64::max)
    }
}

/// Locates ξ for a known `j`.
pub fn find_branching_point(f: &CubicPolynomial, cfg: Configuration, opts: &RayOptions) -> Result<BranchingData> {
    let crit = critical_angles(f, cfg.k, cfg.l, opts)?;
    branching_from_angles(f, cfg.j, crit, opts)
}

/// Locates ξ with the smallest `j ≤ max_j` whose angle set separates the test angles.
pub fn locate_branching_point(
    f: &CubicPolynomial,
    k: usize,
    l: usize,
    max_j: usize,
    opts: &RayOptions,
) -> Result<BranchingData> {
    let crit = critical_angles(f, k, l, opts)?;
    let tests = test_angles();
    let leaves = crit.leaves();
    let mut level: Vec<Vec<CircleAngle>> = vec![crit.omega.to_vec()];
    for j in 0..=max_j {
        if level.iter().any(|s| separation(s, &tests).is_some()) {
            return branching_from_angles(f, j, crit, opts);
        }
        let next: Result<Vec<Vec<Vec<CircleAngle>>>> =
            level.par_iter().map(|s| pull_back_set(s, &leaves)).collect();
        level = next?.into_iter().flatten().collect();
    }
    Err(Error::SeparationFailed)
}

fn branching_from_angles(
    f: &CubicPolynomial,
    j: usize,
    crit: CriticalAngles,
    opts: &RayOptions,
) -> Result<BranchingData> {
    let tests = test_angles();
    let sets = separating_sets(&crit, j, &tests)?;
    let angles = match sets.len() {
        0 => return Err(Error::SeparationFailed),
        1 => sets[0],
        n => return Err(Error::NoFourRayCluster(format!("{n} angle sets separate the test angles"))),
    };
    // rays of the whole forward orbit of the angle set, level i landing at f^i(ξ)
    let mut batch: Vec<CircleAngle> = Vec::with_capacity(4 * (j + 1));
    for i in 0..=j {
        batch.extend(angles.iter().map(|a| a.triple_n(i)));
    }
    let rays: Vec<TracedRay> = trace_rays(f, &batch, START_POTENTIAL, DEEP_POTENTIAL, opts)
        .into_iter()
        .collect::<Result<_>>()?;
    let ends = |i: usize| -> Vec<C64> { rays[4 * i..4 * i + 4].iter().map(|r| r.last_point()).collect() };
    let centroid = |pts: &[C64]| pts.iter().sum::<C64>() / pts.len() as f64;

    // backward orbit from ω, choosing at each level the preimage nearest to the ray ends
    let one = C64::new(1.0, 0.0);
    let mut orbit = vec![f.a()];
    for i in (0..j).rev() {
        let image = *orbit.last().expect("non-empty");
        let est = centroid(&ends(i));
        let roots = cubic_roots(one, f.c2(), f.c1(), -image)?;
        let mut best = roots[0];
        for r in roots {
            if (r - est).norm() < (best - est).norm() {
                best = r;
            }
        }
        orbit.push(best);
    }
    orbit.reverse();
    let xi = orbit[0];
    let ray_ends: [C64; 4] = ends(0).try_into().expect("four rays");
    let data = BranchingData {
        xi,
        angles,
        j,
        separation: separation(&angles, &tests).expect("selected by separation"),
        orbit,
        ray_ends,
        critical: crit,
    };
    if data.cluster_radius() > CLUSTER_TOLERANCE {
        return Err(Error::NoFourRayCluster(format!(
            "rays end {:e} away from ξ",
            data.cluster_radius()
        )));
    }
    Ok(data)
}

/// Re-verifies admissibility by direct iteration and ray landings.
pub fn verify_admissible(f: &CubicPolynomial, cfg: Configuration, br: &BranchingData, opts: &RayOptions) -> Report {
    let mut rep = Report::default();
    let tol = orbit_tolerance(f);
    let mut orbit_check = |name: String, z: C64, n: usize, target: C64| match f.iterate(z, n) {
        Ok(w) => rep.push(Check::at_most(name, (w - target).norm(), tol)),
        Err(e) => rep.push(Check::failed(name, e.to_string())),
    };
    orbit_check(format!("f^{}(ξ) = ω", cfg.j), br.xi, cfg.j, f.a());
    orbit_check(format!("f^{}(ω) = ω′", cfg.k), f.a(), cfg.k, f.b());
    orbit_check(format!("f^{}(ω′) = α", cfg.l), f.b(), cfg.l, C64::new(0.0, 0.0));
    rep.push(Check::flag("j matches the located branching point", br.j == cfg.j));
    rep.push(Check::flag(
        "ξ separates the rays of 1/2, 1/6, 5/6",
        separation(&br.angles, &test_angles()).is_some(),
    ));
    rep.push(Check::at_most("rays at ξ land together", br.cluster_radius(), CLUSTER_TOLERANCE));

    let tests = test_angles();
    let rays = landing_rays(f, &tests, START_POTENTIAL, opts.landing_tolerance, opts);
    let ends: Vec<Option<C64>> = rays.iter().map(|r| r.as_ref().ok().and_then(|r| r.landing)).collect();
    let fixed = crate::poly::fixed_points(f);
    match (ends.as_slice(), fixed) {
        ([Some(b0), Some(b1), Some(b2)], Ok(fp)) => {
            let beta = [fp.alpha, fp.beta, fp.gamma]
                .into_iter()
                .min_by(|p, q| (p - b0).norm().total_cmp(&(q - b0).norm()))
                .expect("three fixed points");
            let d_beta = (beta - b0).norm();
            let one = C64::new(1.0, 0.0);
            match cubic_roots(one, f.c2(), f.c1(), -beta) {
                Ok(roots) => {
                    let others: Vec<C64> =
                        roots.into_iter().filter(|r| (r - beta).norm() > 1e-6).collect();
                    let name = "rays 1/6, 5/6 land at the other preimages of β";
                    rep.push(Check::at_most("ray 1/2 lands at a fixed point β", d_beta, VERIFY_LANDING_TOL));
                    if let [p, q] = others.as_slice() {
                        let direct = (b1 - p).norm().max((b2 - q).norm());
                        let swapped = (b1 - q).norm().max((b2 - p).norm());
                        rep.push(Check::at_most(name, direct.min(swapped), VERIFY_LANDING_TOL));
                    } else {
                        rep.push(Check::failed(name, "β is a critical value"));
                    }
                }
                Err(e) => rep.push(Check::failed("preimages of β", e.to_string())),
            }
        }
        _ => rep.push(Check::failed("landings of 1/2, 1/6, 5/6", "landing unresolved")),
    }
    rep
}

/// A nodal point of three landing points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodalPoint {
    pub point: C64,
    /// Set when the nodal point is the landing point of this test angle.
    pub coincides_with: Option<usize>,
}

/// Nodal point of the landings of `tests` from the angles at ξ.
pub fn nodal_point_exact(br: &BranchingData, tests: &[CircleAngle; 3]) -> Result<NodalPoint> {
    if separation(&br.angles, tests).is_some() {
        return Ok(NodalPoint {
            point: br.xi,
            coincides_with: None,
        });
    }
    // one test ray lands at ξ and the other two are on different sides
    let on_xi: Vec<usize> = (0..3).filter(|&i| br.angles.contains(&tests[i])).collect();
    if let [i] = on_xi.as_slice() {
        let rest: Vec<Option<usize>> = (0..3)
            .filter(|t| t != i)
            .map(|t| arc_index(&br.angles, &tests[t]))
            .collect();
        if let [Some(p), Some(q)] = rest.as_slice() {
            if p != q {
                return Ok(NodalPoint {
                    point: br.xi,
                    coincides_with: Some(*i),
                });
            }
        }
    }
    Err(Error::NotSeparated)
}

/// Points of the rays at angles `k/M` at a fixed small potential.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopApproximation {
    pub potential: f64,
    pub angles: Vec<CircleAngle>,
    /// `None` where the ray could not be traced.
    pub points: Vec<Option<C64>>,
}

impl LoopApproximation {
    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn gaps(&self) -> usize {
        self.points.iter().filter(|p| p.is_none()).count()
    }

    /// Largest distance between consecutive samples, wrapping around.
    pub fn max_spacing(&self) -> f64 {
        let n = self.points.len();
        (0..n)
            .filter_map(|i| match (self.points[i], self.points[(i + 1) % n]) {
                (Some(p), Some(q)) => Some((p - q).norm()),
                _ => None,
            })
            .fold(0.0, f64::max)
    }

    /// Largest distance between samples of two loops on the same grid.
    pub fn sup_distance(&self, other: &LoopApproximation) -> Result<f64> {
        if self.angles != other.angles {
            return Err(Error::InvalidArgument("loops sampled on different grids".into()));
        }
        Ok(self
            .points
            .iter()
            .zip(&other.points)
            .filter_map(|(p, q)| Some((p.as_ref()? - q.as_ref()?).norm()))
            .fold(0.0, f64::max))
    }

    /// Writes `num,den,re,im` rows; gaps are omitted.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "num,den,re,im")?;
        for (a, p) in self.angles.iter().zip(&self.points) {
            if let Some(p) = p {
                writeln!(w, "{},{},{:.17e},{:.17e}", a.num(), a.den(), p.re, p.im)?;
            }
        }
        Ok(())
    }
}

/// Samples the rays at angles `k/M` at potential `eps`.
pub fn approximate_loop(f: &CubicPolynomial, m: usize, eps: f64, opts: &RayOptions) -> Result<LoopApproximation> {
    if m < 3 || !(eps > 0.0) {
        return Err(Error::InvalidArgument("loop needs M ≥ 3 and ε > 0".into()));
    }
    // start on the node grid so that the last node sits exactly at eps
    let s = opts.substeps as f64;
    let n = ((START_POTENTIAL / eps).ln() / 3f64.ln() * s).ceil();
    let start = eps * (n / s * 3f64.ln()).exp();
    let angles: Vec<CircleAngle> = (0..m).map(|k| CircleAngle::new(k as i128, m as u128)).collect();
    let rays = trace_rays(f, &angles, start, eps, opts);
    let points = rays.into_iter().map(|r| r.ok().map(|r| r.last_point())).collect();
    Ok(LoopApproximation {
        potential: eps,
        angles,
        points,
    })
}

/// Nodal point found on a sampled loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoopNodalPoint {
    pub point: C64,
    /// Largest pairwise distance of the three nearly coincident samples.
    pub score: f64,
    pub tolerance: f64,
}

/// Nodal point of the landings of three angles as the near-coincidence of the images of the
/// three circle arcs they bound.
pub fn nodal_point_loop(lp: &LoopApproximation, tests: &[CircleAngle; 3]) -> Result<LoopNodalPoint> {
    let tolerance = 3.0 * lp.max_spacing();
    if lp.len() < MIN_NODAL_SAMPLES {
        return Err(Error::NoTripleCoincidence {
            best: f64::INFINITY,
            tolerance,
        });
    }
    let mut t = *tests;
    t.sort();
    let arc_points = |arc: Arc| -> Vec<C64> {
        lp.angles
            .iter()
            .zip(&lp.points)
            .filter(|(a, _)| arc.contains(a))
            .filter_map(|(_, p)| *p)
            .collect()
    };
    let arcs = [
        arc_points(Arc::new(t[0], t[1])),
        arc_points(Arc::new(t[1], t[2])),
        arc_points(Arc::new(t[2], t[0])),
    ];
    let nearest = |p: C64, set: &[C64]| -> Option<C64> {
        set.iter()
            .copied()
            .min_by(|a, b| (a - p).norm().total_cmp(&(b - p).norm()))
    };
    let mut best: Option<(f64, C64)> = None;
    for &p in &arcs[0] {
        let (Some(q), Some(r)) = (nearest(p, &arcs[1]), nearest(p, &arcs[2])) else {
            continue;
        };
        let score = (p - q).norm().max((p - r).norm()).max((q - r).norm());
        if best.map_or(true, |(b, _)| score < b) {
            best = Some((score, (p + q + r) / 3.0));
        }
    }
    match best {
        Some((score, point)) if score <= tolerance => Ok(LoopNodalPoint {
            point,
            score,
            tolerance,
        }),
        Some((score, _)) => Err(Error::NoTripleCoincidence { best: score, tolerance }),
        None => Err(Error::NoTripleCoincidence {
            best: f64::INFINITY,
            tolerance,
        }),
    }
}
