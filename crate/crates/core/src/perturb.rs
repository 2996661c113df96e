//! The inverse branch ω₋ₘ and the perturbation that trades a (k, ℓ)-configuration for an
//! (m+ℓ, k+ℓ)-configuration with the roles of the critical points exchanged.
//!
//! The joint system `G_s(a, b) = (f^{k+ℓ}(a), f^ℓ(b) - s ω₋ₘ(a, b))` is singular at the source
//! polynomial when `s = 0`: the two equations share their gradient there. Its zeros for `s = 1`
//! are reached by continuation in `s` from the two zeros close to the source at `s = ε`, which
//! a quadratic model of `f^ℓ(b)` along the curve `f^{k+ℓ}(a) = 0` places on either side of it.

use std::cell::RefCell;

use num_complex::Complex;

use crate::config::{check_minimality, config_residual, orbit_tolerance};
use crate::error::{Error, Result};
use crate::numerics::{cabs, csqrt, cubic_roots, newton_2c, to_c64, Pair, Real, C64};
use crate::poly::CubicPolynomial;
use crate::rays::{build_standard_regions, RayOptions, StandardRegions};

/// Regions are re-traced once the critical points moved farther than this.
pub const REGION_RETRACE_DISTANCE: f64 = 1e-3;

/// Lazily rebuilt standard regions for a polynomial that moves during a solve.
pub struct RegionCache {
    opts: RayOptions,
    cached: RefCell<Option<(C64, C64, StandardRegions)>>,
    traces: RefCell<usize>,
}

impl RegionCache {
    pub fn new(opts: RayOptions) -> Self {
        RegionCache {
            opts,
            cached: RefCell::new(None),
            traces: RefCell::new(0),
        }
    }

    /// Number of region constructions performed so far.
    pub fn traces(&self) -> usize {
        *self.traces.borrow()
    }

    /// Regions valid for `f`, re-traced when `f` moved more than [`REGION_RETRACE_DISTANCE`].
    pub fn regions<T: Real>(&self, f: &CubicPolynomial<T>) -> Result<StandardRegions> {
        let (a, b) = (to_c64(f.a()), to_c64(f.b()));
        if let Some((ca, cb, r)) = self.cached.borrow().as_ref() {
            if (a - ca).norm().max((b - cb).norm()) <= REGION_RETRACE_DISTANCE {
                return Ok(r.clone());
            }
        }
        let regions = build_standard_regions(&f.to_f64(), &self.opts)?;
        *self.traces.borrow_mut() += 1;
        *self.cached.borrow_mut() = Some((a, b, regions.clone()));
        Ok(regions)
    }

    fn with_regions<T: Real, R>(
        &self,
        f: &CubicPolynomial<T>,
        body: impl FnOnce(&StandardRegions) -> Result<R>,
    ) -> Result<R> {
        let regions = self.regions(f)?;
        body(&regions)
    }
}

/// The preimage of `z` under `g` lying in V_g.
pub fn inverse_branch_preimage<T: Real>(
    g: &CubicPolynomial<T>,
    z: Complex<T>,
    regions: &StandardRegions,
) -> Result<Complex<T>> {
    if !regions.w.contains(to_c64(z))? {
        return Err(Error::NotInW);
    }
    let one = Complex::new(T::one(), T::zero());
    let roots = cubic_roots(one, g.c2(), g.c1(), -z)?;
    let mut inside = Vec::with_capacity(1);
    for r in roots {
        if regions.v.contains(to_c64(r))? {
            inside.push(r);
        }
    }
    if inside.len() != 1 {
        return Err(Error::AmbiguousBranch { count: inside.len() });
    }
    Ok(inside[0])
}

/// `[ω₀, ω₋₁, …, ω₋ₘ]` with `ω₀` the critical point in the ω slot of `g`.
pub fn omega_minus_chain<T: Real>(
    g: &CubicPolynomial<T>,
    m: usize,
    regions: &StandardRegions,
) -> Result<Vec<Complex<T>>> {
    let mut chain = Vec::with_capacity(m + 1);
    chain.push(g.a());
    for _ in 0..m {
        let z = *chain.last().expect("non-empty");
        let w = inverse_branch_preimage(g, z, regions)?;
        let back = g.eval(w) - z;
        if cabs(back).to_f64() > 1e-10 * (1.0 + cabs(z).to_f64()) {
            return Err(Error::ConfigurationMismatch(format!(
                "inverse branch does not map back (error {:e})",
                cabs(back).to_f64()
            )));
        }
        chain.push(w);
    }
    Ok(chain)
}

/// `ω₋ₘ` of the polynomial with critical points `x`.
fn omega_minus<T: Real>(x: Pair<T>, m: usize, cache: &RegionCache) -> Result<Complex<T>> {
    let g = CubicPolynomial::from_critical_points(x[0], x[1])?;
    cache.with_regions(&g, |r| Ok(*omega_minus_chain(&g, m, r)?.last().expect("non-empty")))
}

/// Controls for [`perturb`].
#[derive(Clone, Copy, Debug)]
pub struct PerturbOptions {
    /// Residual tolerance on the joint system and on the transferred configuration.
    pub tol: f64,
    /// Starting value of the continuation parameter.
    pub epsilon: f64,
    /// Number of geometric continuation stages from `epsilon` to 1.
    pub stages: usize,
    /// Step used to measure curvature along the curve f^{k+ℓ}(a) = 0.
    pub chart_step: f64,
    pub max_newton_iter: usize,
    pub rays: RayOptions,
}

impl Default for PerturbOptions {
    fn default() -> Self {
        PerturbOptions {
            tol: 1e-12,
            epsilon: 1e-8,
            stages: 40,
            chart_step: 1e-4,
            max_newton_iter: 60,
            rays: RayOptions::default(),
        }
    }
}

/// Outcome of one perturbation.
#[derive(Clone, Debug)]
pub struct PerturbationStep<T: Real = f64> {
    pub source: CubicPolynomial<T>,
    pub m: usize,
    /// Critical points relabeled: the ω slot holds the former ω′ slot and vice versa.
    pub target: CubicPolynomial<T>,
    /// `[ω₀, …, ω₋ₘ]` of the solved polynomial before relabeling.
    pub omega_chain: Vec<Complex<T>>,
    pub role_swap: bool,
    /// Configuration (k, ℓ) of the target.
    pub k: usize,
    pub l: usize,
    /// Both continuation endpoints, as (c1, c2) pairs, when they converged.
    pub candidates: Vec<(C64, C64)>,
    /// The two candidates were equally close to the source; the one with Im(c1) > 0 was kept.
    pub tie_broken: bool,
}

/// Linearization of the curve `F1(a, b) = f^{k+ℓ}(a) = 0` at the source: a unit tangent and a
/// unit normal direction.
struct SigmaChart<T: Real> {
    src: Pair<T>,
    tangent: Pair<T>,
    normal: Pair<T>,
    n_steps: usize,
}

fn f1<T: Real>(x: Pair<T>, n: usize) -> Result<Complex<T>> {
    let f = CubicPolynomial::from_critical_points(x[0], x[1])?;
    f.iterate(x[0], n)
}

fn add<T: Real>(x: Pair<T>, d: Pair<T>, s: Complex<T>) -> Pair<T> {
    [x[0] + d[0] * s, x[1] + d[1] * s]
}

fn dist<T: Real>(x: Pair<T>, y: Pair<T>) -> f64 {
    let d0 = cabs(x[0] - y[0]).to_f64();
    let d1 = cabs(x[1] - y[1]).to_f64();
    (d0 * d0 + d1 * d1).sqrt()
}

impl<T: Real> SigmaChart<T> {
    fn new(src: Pair<T>, n_steps: usize) -> Result<Self> {
        let mut grad = [Complex::new(T::zero(), T::zero()); 2];
        for j in 0..2 {
            let h = T::from_f64(1e-7 * cabs(src[j]).to_f64().max(1.0));
            let mut xp = src;
            let mut xm = src;
            xp[j] = xp[j] + Complex::new(h, T::zero());
            xm[j] = xm[j] - Complex::new(h, T::zero());
            grad[j] = (f1(xp, n_steps)? - f1(xm, n_steps)?) / (T::from_f64(2.0) * h);
        }
        let norm = (cabs(grad[0]) * cabs(grad[0]) + cabs(grad[1]) * cabs(grad[1])).sqrt();
        if norm.to_f64() == 0.0 {
            return Err(Error::SingularJacobian { condition: f64::INFINITY });
        }
        let normal = [grad[0].conj() / norm, grad[1].conj() / norm];
        let tangent = [grad[1] / norm, -grad[0] / norm];
        Ok(SigmaChart {
            src,
            tangent,
            normal,
            n_steps,
        })
    }

    /// The point of the curve above `src + t * tangent`.
    fn point(&self, t: Complex<T>) -> Result<Pair<T>> {
        let base = add(self.src, self.tangent, t);
        let mut s = Complex::new(T::zero(), T::zero());
        let h = T::from_f64(1e-7);
        let stop = 16.0 * T::epsilon();
        for _ in 0..40 {
            let p = add(base, self.normal, s);
            let r = f1(p, self.n_steps)?;
            let hp = Complex::new(h, T::zero());
            let dp = (f1(add(p, self.normal, hp), self.n_steps)? - f1(add(p, self.normal, -hp), self.n_steps)?)
                / (T::from_f64(2.0) * h);
            let ds = r / dp;
            s = s - ds;
            if cabs(ds).to_f64() < stop * cabs(s).to_f64().max(1.0) {
                break;
            }
        }
        Ok(add(base, self.normal, s))
    }
}

/// Follows one zero of `G_s` from `s = epsilon` to `s = 1`.
fn continue_zero<T: Real>(
    start: Pair<T>,
    k: usize,
    l: usize,
    m: usize,
    opts: &PerturbOptions,
    cache: &RegionCache,
) -> Result<Pair<T>> {
    let n = opts.stages.max(2);
    let eps = opts.epsilon;
    let stage = |i: usize| eps.powf(1.0 - i as f64 / (n - 1) as f64);
    let mut u = start;
    let mut prev: Option<Pair<T>> = None;
    for i in 0..n {
        let s = stage(i);
        let st = Complex::new(T::from_f64(s), T::zero());
        let seed = match prev {
            None => u,
            Some(p) => {
                let grow = T::from_f64((s / stage(i - 1)).sqrt() - 1.0);
                [u[0] + (u[0] - p[0]) * grow, u[1] + (u[1] - p[1]) * grow]
            }
        };
        let g = |x: Pair<T>| -> Result<Pair<T>> {
            let f = CubicPolynomial::from_critical_points(x[0], x[1])?;
            let w = omega_minus(x, m, cache)?;
            Ok([f.iterate(x[0], k + l)?, f.iterate(x[1], l)? - w * st])
        };
        let next = newton_2c(g, seed, opts.tol, opts.max_newton_iter)?;
        prev = Some(u);
        u = next;
    }
    Ok(u)
}

/// Perturbs `f`, which has a (k, ℓ)-configuration with ω in the a slot, into a polynomial with
/// an (m+ℓ, k+ℓ)-configuration whose critical points have exchanged roles.
pub fn perturb<T: Real>(
    f: &CubicPolynomial<T>,
    k: usize,
    l: usize,
    m: usize,
    opts: &PerturbOptions,
) -> Result<PerturbationStep<T>> {
    if m == 0 || k == 0 || l == 0 {
        return Err(Error::InvalidArgument("k, ℓ and m must be positive".into()));
    }
    let cache = RegionCache::new(opts.rays);
    let src = [f.a(), f.b()];
    let chart = SigmaChart::new(src, k + l)?;
    let f2 = |x: Pair<T>| -> Result<Complex<T>> {
        let g = CubicPolynomial::from_critical_points(x[0], x[1])?;
        g.iterate(x[1], l)
    };
    let h = T::from_f64(opts.chart_step);
    let hc = Complex::new(h, T::zero());
    let q = (f2(chart.point(hc)?)? + f2(chart.point(-hc)?)?) / (T::from_f64(2.0) * h * h);
    let c = omega_minus(src, m, &cache)?;
    let root = csqrt(c * T::from_f64(opts.epsilon) / q);

    let mut ends: Vec<Pair<T>> = Vec::new();
    let mut last_err = None;
    for sign in [1.0, -1.0] {
        let t = root * T::from_f64(sign);
        let start = chart.point(t)?;
        match continue_zero(start, k, l, m, opts, &cache) {
            Ok(x) => ends.push(x),
            Err(e) => last_err = Some(e),
        }
    }
    if ends.is_empty() {
        return Err(last_err.unwrap_or(Error::NoConvergence {
            iterations: opts.max_newton_iter,
            residual: f64::NAN,
        }));
    }
    let coeffs = |x: &Pair<T>| -> (C64, C64) {
        CubicPolynomial::from_critical_points(x[0], x[1])
            .map(|p| p.coefficients())
            .unwrap_or_default()
    };
    let candidates: Vec<(C64, C64)> = ends.iter().map(coeffs).collect();
    let mut tie_broken = false;
    let chosen = if ends.len() == 2 {
        let (d0, d1) = (dist(ends[0], src), dist(ends[1], src));
        if (d0 - d1).abs() <= 1e-12 * d0.max(d1).max(1e-300) {
            tie_broken = (ends[0][0] - ends[1][0]).norm_sqr().to_f64() > 0.0;
            if candidates[0].0.im >= candidates[1].0.im {
                ends[0]
            } else {
                ends[1]
            }
        } else if d0 < d1 {
            ends[0]
        } else {
            ends[1]
        }
    } else {
        ends[0]
    };

    let g = CubicPolynomial::from_critical_points(chosen[0], chosen[1])?;
    let sigma_value = cabs(g.iterate(g.b(), l)?).to_f64();
    if sigma_value <= opts.tol {
        return Err(Error::ConfigurationMismatch(
            "continuation returned to the unperturbed polynomial".into(),
        ));
    }
    let omega_chain = cache.with_regions(&g, |r| omega_minus_chain(&g, m, r))?;
    let target = g.swapped();
    let (k_new, l_new) = (m + l, k + l);
    let res = config_residual(target.a(), target.b(), k_new, l_new)?;
    let scale_tol = orbit_tolerance(&target.to_f64()).max(opts.tol);
    let r = cabs(res[0]).to_f64().max(cabs(res[1]).to_f64());
    if r > scale_tol {
        return Err(Error::ConfigurationMismatch(format!(
            "(m+ℓ, k+ℓ) = ({k_new}, {l_new}) residual {r:e}"
        )));
    }
    check_minimality(&target, k_new, l_new)
        .map_err(|e| Error::ConfigurationMismatch(e.to_string()))?;
    Ok(PerturbationStep {
        source: *f,
        m,
        target,
        omega_chain,
        role_swap: true,
        k: k_new,
        l: l_new,
        candidates,
        tie_broken,
    })
}

/// [`perturb`] with `m` raised by one, up to five times, while the solve fails.
pub fn perturb_with_retry<T: Real>(
    f: &CubicPolynomial<T>,
    k: usize,
    l: usize,
    m: usize,
    opts: &PerturbOptions,
) -> Result<PerturbationStep<T>> {
    let mut last = None;
    for mm in m..=m + 5 {
        match perturb(f, k, l, mm, opts) {
            Ok(step) => return Ok(step),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt"))
}
