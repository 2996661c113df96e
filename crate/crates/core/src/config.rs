//! Cubics with a (k, ℓ)-configuration: the ω slot reaches the ω′ slot in k steps and ω′ reaches
//! α = 0 in ℓ steps.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::numerics::{cabs, newton_2c, CircleAngle, Pair, Real, C64};
use crate::poly::CubicPolynomial;
use crate::rays::{build_standard_regions, landing_rays, RayOptions, START_POTENTIAL};
use crate::report::{Check, Report};

/// Orbit lengths ξ → ω (j), ω → ω′ (k) and ω′ → α (ℓ).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Configuration {
    pub j: usize,
    pub k: usize,
    pub l: usize,
}

impl Configuration {
    pub fn new(j: usize, k: usize, l: usize) -> Self {
        Configuration { j, k, l }
    }
}

impl std::fmt::Display for Configuration {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})", self.j, self.k, self.l)
    }
}

/// Orbit points closer than this (relative to `max(1, |z|)`) count as coincident in minimality
/// checks.
pub const MIN_SEPARATION: f64 = 1e-6;
/// Default solver tolerance on residuals.
pub const DEFAULT_TOL: f64 = 1e-12;
const MAX_NEWTON_ITER: usize = 60;

/// `(f^k(a) - b, f^ℓ(b))` for `f = f_{a,b}`.
pub fn config_residual<T: Real>(a: Complex<T>, b: Complex<T>, k: usize, l: usize) -> Result<Pair<T>> {
    if k == 0 || l == 0 {
        return Err(Error::InvalidArgument("k and ℓ must be at least 1".into()));
    }
    let f = CubicPolynomial::from_critical_points(a, b)?;
    Ok([f.iterate(a, k)? - b, f.iterate(b, l)?])
}

/// Checks `f^i(a) != b` for `0 < i < k` and `f^i(b) != 0` for `0 <= i < ℓ`.
pub fn check_minimality<T: Real>(f: &CubicPolynomial<T>, k: usize, l: usize) -> Result<()> {
    let (a, b) = (f.a(), f.b());
    let orbit_a = f.orbit(a, k)?;
    for (i, z) in orbit_a.iter().enumerate().take(k).skip(1) {
        if cabs(*z - b).to_f64() < MIN_SEPARATION * cabs(b).to_f64().max(1.0) {
            return Err(Error::NonMinimal(format!("f^{i}(ω) already equals ω′ (k = {k})")));
        }
    }
    let orbit_b = f.orbit(b, l)?;
    for (i, z) in orbit_b.iter().enumerate().take(l) {
        if cabs(*z).to_f64() < MIN_SEPARATION {
            return Err(Error::NonMinimal(format!("f^{i}(ω′) already equals 0 (ℓ = {l})")));
        }
    }
    Ok(())
}

/// Newton's method on [`config_residual`] from `seed`; the result is checked for minimality.
pub fn solve_config<T: Real>(seed: Pair<T>, k: usize, l: usize, tol: f64) -> Result<CubicPolynomial<T>> {
    let g = |x: Pair<T>| config_residual(x[0], x[1], k, l);
    let [a, b] = newton_2c(g, seed, tol, MAX_NEWTON_ITER)?;
    let f = CubicPolynomial::from_critical_points(a, b)?;
    let r = config_residual(a, b, k, l)?;
    let res = cabs(r[0]).to_f64().max(cabs(r[1]).to_f64());
    if res > tol {
        return Err(Error::NoConvergence {
            iterations: MAX_NEWTON_ITER,
            residual: res,
        });
    }
    check_minimality(&f, k, l)?;
    Ok(f)
}

/// Residual tolerance used when re-checking configurations by direct iteration.
pub fn orbit_tolerance(f: &CubicPolynomial) -> f64 {
    1e-8 * (1.0 + f.a().norm().max(f.b().norm()))
}

/// Direct-iteration check of a configuration `(k, ℓ)` for the slot order of `f`.
pub fn check_configuration(f: &CubicPolynomial, k: usize, l: usize) -> Report {
    let mut rep = Report::default();
    let tol = orbit_tolerance(f);
    match f.iterate(f.a(), k) {
        Ok(z) => rep.push(Check::at_most(format!("f^{k}(ω) = ω′"), (z - f.b()).norm(), tol)),
        Err(e) => rep.push(Check::failed(format!("f^{k}(ω) = ω′"), e.to_string())),
    }
    match f.iterate(f.b(), l) {
        Ok(z) => rep.push(Check::at_most(format!("f^{l}(ω′) = 0"), z.norm(), tol)),
        Err(e) => rep.push(Check::failed(format!("f^{l}(ω′) = 0"), e.to_string())),
    }
    let minimal = check_minimality(f, k, l);
    rep.push(
        Check::flag("configuration minimal", minimal.is_ok())
            .with_detail(minimal.err().map(|e| e.to_string()).unwrap_or_default()),
    );
    rep
}

/// Landing points of rays that must agree with fixed points are accepted within this distance.
pub const VERIFY_LANDING_TOL: f64 = 1e-5;

/// Evidence for membership in the class of cubics studied here: repelling fixed points, distinct
/// critical points, the landing pattern of the rays 0, 1/2, ±1/4 and the placement of the critical
/// orbit in the two regions cut by the rays ±1/4.
pub fn verify_in_v(f: &CubicPolynomial, opts: &RayOptions) -> Report {
    let mut rep = Report::default();
    let fixed = match crate::poly::fixed_points(f) {
        Ok(fp) => fp,
        Err(e) => {
            rep.push(Check::failed("three distinct repelling fixed points", e.to_string()));
            return rep;
        }
    };
    let min_mult = fixed.multipliers.iter().map(|m| m.norm()).fold(f64::INFINITY, f64::min);
    rep.push(Check::above("three distinct repelling fixed points", min_mult, 1.0));
    let (a, b) = (f.a(), f.b());
    let scale = 1f64.max(a.norm()).max(b.norm());
    rep.push(Check::above("distinct critical points", (a - b).norm(), 1e-8 * scale));

    let angles = [
        CircleAngle::ZERO,
        CircleAngle::new(1, 2),
        CircleAngle::new(1, 4),
        CircleAngle::new(3, 4),
    ];
    let rays = landing_rays(f, &angles, START_POTENTIAL, opts.landing_tolerance, opts);
    let landing = |i: usize| rays[i].as_ref().ok().and_then(|r| r.landing);
    match landing(0) {
        Some(z) => rep.push(Check::at_most("ray 0 lands at α", z.norm(), VERIFY_LANDING_TOL)),
        None => rep.push(Check::failed("ray 0 lands at α", "landing unresolved")),
    }
    let others = [fixed.beta, fixed.gamma];
    let nearest = |z: C64| -> (usize, f64) {
        let d0 = (z - others[0]).norm();
        let d1 = (z - others[1]).norm();
        if d0 <= d1 {
            (0, d0)
        } else {
            (1, d1)
        }
    };
    let beta_idx = match landing(1) {
        Some(z) => {
            let (i, d) = nearest(z);
            rep.push(Check::at_most("ray 1/2 lands at β", d, VERIFY_LANDING_TOL));
            Some(i)
        }
        None => {
            rep.push(Check::failed("ray 1/2 lands at β", "landing unresolved"));
            None
        }
    };
    match (landing(2), landing(3), beta_idx) {
        (Some(p), Some(q), Some(bi)) => {
            let gamma = others[1 - bi];
            let d = (p - gamma).norm().max((q - gamma).norm());
            rep.push(Check::at_most("rays ±1/4 land at γ", d, VERIFY_LANDING_TOL));
        }
        _ => rep.push(Check::failed("rays ±1/4 land at γ", "landing unresolved")),
    }

    let regions = match build_standard_regions(f, opts) {
        Ok(r) => r,
        Err(e) => {
            rep.push(Check::failed("regions U_α, U_β", e.to_string()));
            return rep;
        }
    };
    let in_alpha = |z: C64| regions.u_alpha.contains(z);
    let (wa, wb) = match (in_alpha(a), in_alpha(b)) {
        (Ok(true), Ok(false)) => (a, b),
        (Ok(false), Ok(true)) => (b, a),
        other => {
            rep.push(Check::failed(
                "exactly one critical point in U_α",
                format!("{other:?}"),
            ));
            return rep;
        }
    };
    rep.push(Check::flag("exactly one critical point in U_α", true));
    let fa = f.eval(wa);
    let ffa = f.eval(fa);
    let members: [(&str, C64, bool); 7] = [
        ("α ∈ U_α", C64::new(0.0, 0.0), true),
        ("ω_α ∈ U_α", wa, true),
        ("f(ω_β) ∈ U_α", f.eval(wb), true),
        ("β ∈ U_β", regions.fixed.beta, false),
        ("ω_β ∈ U_β", wb, false),
        ("f(ω_α) ∈ U_β", fa, false),
        ("f²(ω_α) ∈ U_β", ffa, false),
    ];
    for (name, z, alpha_side) in members {
        let region = if alpha_side { &regions.u_alpha } else { &regions.u_beta };
        let name = name.to_string();
        match region.contains(z) {
            Ok(inside) => rep.push(Check::flag(name, inside)),
            Err(e) => rep.push(Check::failed(name, e.to_string())),
        }
    }
    rep
}

/// Convenience conversion for seeds given in double precision.
pub fn seed_pair<T: Real>(a: C64, b: C64) -> Pair<T> {
    [
        Complex::new(T::from_f64(a.re), T::from_f64(a.im)),
        Complex::new(T::from_f64(b.re), T::from_f64(b.im)),
    ]
}

