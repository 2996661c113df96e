//! Regions of the plane cut out by two external rays landing at a common point.

use crate::error::{Error, Result};
use crate::numerics::{Arc, CircleAngle, C64};
use crate::poly::{fixed_points, CubicPolynomial, FixedPointSet};

use super::tracer::{far_inverse, landing_rays, RayOptions, TracedRay};

/// Rays bounding regions start at this potential so the polygon reaches far past the Julia set.
pub const REGION_START_POTENTIAL: f64 = 12.0;

/// The component of the plane minus two co-landing rays whose far end covers the
/// counterclockwise angle arc from the first ray to the second.
#[derive(Clone, Debug)]
pub struct RayRegion {
    pub boundary_rays: [TracedRay; 2],
    pub common_landing: C64,
    pub contains_zero_side: bool,
    arc: Arc,
    reference: C64,
}

fn segments_cross(p: C64, q: C64, a: C64, b: C64) -> bool {
    let orient = |u: C64, v: C64, w: C64| ((v - u).conj() * (w - u)).im;
    let d1 = orient(p, q, a);
    let d2 = orient(p, q, b);
    let d3 = orient(a, b, p);
    let d4 = orient(a, b, q);
    (d1 > 0.0) != (d2 > 0.0) && (d3 > 0.0) != (d4 > 0.0)
}

fn point_segment_distance(z: C64, a: C64, b: C64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = (((z - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (z - (a + d * t)).norm()
}

impl RayRegion {
    /// Builds the region from two rays traced from [`REGION_START_POTENTIAL`] to landing.
    pub fn from_rays(f: &CubicPolynomial, first: TracedRay, second: TracedRay, common_tol: f64) -> Result<Self> {
        let (l1, l2) = match (first.landing, second.landing) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::CommonLandingFailed {
                    first: first.angle,
                    second: second.angle,
                    gap: f64::INFINITY,
                })
            }
        };
        let gap = (l1 - l2).norm();
        if gap > common_tol {
            return Err(Error::CommonLandingFailed {
                first: first.angle,
                second: second.angle,
                gap,
            });
        }
        let arc = Arc::new(first.angle, second.angle);
        // a far reference point inside the angular arc, slightly off its midpoint
        let mid = arc.start.to_f64() + arc.length() * 0.4871;
        let t = first.nodes[0].potential;
        let reference = far_inverse(f, t, mid.rem_euclid(1.0));
        let mut region = RayRegion {
            boundary_rays: [first, second],
            common_landing: (l1 + l2) / 2.0,
            contains_zero_side: false,
            arc,
            reference,
        };
        region.contains_zero_side = region.contains_unchecked(C64::new(0.0, 0.0));
        Ok(region)
    }

    pub fn angles(&self) -> (CircleAngle, CircleAngle) {
        (self.arc.start, self.arc.end)
    }

    fn boundary_segments(&self) -> impl Iterator<Item = (C64, C64)> + '_ {
        let [r1, r2] = &self.boundary_rays;
        let s1 = r1.nodes.windows(2).map(|w| (w[0].point, w[1].point));
        let s2 = r2.nodes.windows(2).map(|w| (w[0].point, w[1].point));
        s1.chain(s2).chain(std::iter::once((r1.last_point(), r2.last_point())))
    }

    fn contains_unchecked(&self, z: C64) -> bool {
        let crossings = self
            .boundary_segments()
            .filter(|(a, b)| segments_cross(z, self.reference, *a, *b))
            .count();
        crossings % 2 == 0
    }

    /// Distance from `z` to the boundary polyline, with the length of the nearest segment.
    pub fn boundary_distance(&self, z: C64) -> (f64, f64) {
        self.boundary_segments()
            .map(|(a, b)| (point_segment_distance(z, a, b), (b - a).norm()))
            .fold((f64::INFINITY, 0.0), |acc, x| if x.0 < acc.0 { x } else { acc })
    }

    /// Crossing-parity membership test; refuses points closer to the boundary than twice the
    /// local node spacing.
    pub fn contains(&self, z: C64) -> Result<bool> {
        let (d, spacing) = self.boundary_distance(z);
        if d < 2.0 * spacing {
            return Err(Error::TooCloseToBoundary { distance: d });
        }
        Ok(self.contains_unchecked(z))
    }
}

/// Membership of `z` in `region`.
pub fn region_contains(region: &RayRegion, z: C64) -> Result<bool> {
    region.contains(z)
}

/// The four regions used throughout: U_α / U_β cut by the rays ±1/4, W cut by ±5/12 and V cut
/// by ±5/36, the last three containing 0.
#[derive(Clone, Debug)]
pub struct StandardRegions {
    pub u_alpha: RayRegion,
    pub u_beta: RayRegion,
    pub w: RayRegion,
    pub v: RayRegion,
    /// Fixed points with β identified as the landing point of the ray at angle 1/2.
    pub fixed: FixedPointSet,
}

/// Gap allowed between the landings of two rays said to land together, in units of the
/// landing tolerance.
const COMMON_LANDING_FACTOR: f64 = 10.0;

pub fn build_standard_regions(f: &CubicPolynomial, opts: &RayOptions) -> Result<StandardRegions> {
    let a = |p: i128, q: u128| CircleAngle::new(p, q);
    let angles = [a(1, 4), a(3, 4), a(5, 12), a(-5, 12), a(5, 36), a(-5, 36), a(1, 2)];
    let tol = opts.landing_tolerance;
    let rays = landing_rays(f, &angles, REGION_START_POTENTIAL, tol, opts);
    let mut rays = rays;
    let half = rays.pop().expect("seven rays");
    let mut traced = Vec::with_capacity(rays.len());
    for (i, r) in rays.into_iter().enumerate() {
        match r {
            Ok(ray) => traced.push(ray),
            Err(Error::LandingUnresolved { .. }) | Err(Error::RayBifurcationSuspected { .. }) => {
                let partner = angles[i ^ 1];
                return Err(Error::CommonLandingFailed {
                    first: angles[i],
                    second: partner,
                    gap: f64::INFINITY,
                });
            }
            Err(e) => return Err(e),
        }
    }
    let common = COMMON_LANDING_FACTOR * tol;
    let [q1, q3, p5, m5, p36, m36]: [TracedRay; 6] = traced.try_into().expect("six rays");
    let u_alpha = RayRegion::from_rays(f, q3.clone(), q1.clone(), common)?;
    let u_beta = RayRegion::from_rays(f, q1, q3, common)?;
    let w = RayRegion::from_rays(f, m5.clone(), p5.clone(), common)?;
    let v = RayRegion::from_rays(f, m36.clone(), p36.clone(), common)?;

    // f maps the V rays onto the W rays: node i goes to node i - S
    let s = opts.substeps;
    for (vr, wr) in [(&p36, &p5), (&m36, &m5)] {
        let n = vr.nodes.len().min(wr.nodes.len() + s);
        for i in (s..n).step_by(7) {
            let z = vr.nodes[i].point;
            let d = (f.eval(z) - wr.nodes[i - s].point).norm();
            if d > 1e-8 * (1.0 + z.norm().powi(3)) {
                return Err(Error::CommonLandingFailed {
                    first: vr.angle,
                    second: wr.angle,
                    gap: d,
                });
            }
        }
    }

    let mut fixed = fixed_points(f)?;
    let beta_landing = half?.landing.expect("landing checked");
    if (fixed.gamma - beta_landing).norm() < (fixed.beta - beta_landing).norm() {
        fixed = fixed.swapped();
    }
    Ok(StandardRegions {
        u_alpha,
        u_beta,
        w,
        v,
        fixed,
    })
}

/// Fixed points with β labeled as the landing point of the angle-1/2 ray.
pub fn labeled_fixed_points(f: &CubicPolynomial, opts: &RayOptions) -> Result<FixedPointSet> {
    let fixed = fixed_points(f)?;
    let ray = landing_rays(f, &[CircleAngle::new(1, 2)], super::START_POTENTIAL, opts.landing_tolerance, opts)
        .pop()
        .expect("one ray")?;
    let l = ray.landing.expect("landing checked");
    Ok(if (fixed.gamma - l).norm() < (fixed.beta - l).norm() {
        fixed.swapped()
    } else {
        fixed
    })
}
