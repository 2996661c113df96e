//! The chain f₀ → f₁ → … of perturbations starting at the seed polynomial.

use crate::config::{check_configuration, orbit_tolerance, Configuration};
use crate::dendrite::{locate_branching_point, verify_admissible, BranchingData};
use crate::error::{Error, Result};
use crate::numerics::{CircleAngle, Real};
use crate::perturb::{perturb_with_retry, PerturbOptions, PerturbationStep};
use crate::poly::{seed_polynomial, CubicPolynomial};
use crate::report::{Check, Report};

/// Configuration of the seed polynomial.
pub const SEED_CONFIGURATION: Configuration = Configuration { j: 0, k: 2, l: 1 };

/// How far beyond the predicted `j` the independent search for ξ looks.
pub const J_SEARCH_MARGIN: usize = 3;

#[derive(Clone, Debug)]
pub struct ChainMember<T: Real = f64> {
    pub poly: CubicPolynomial<T>,
    pub config: Configuration,
    pub branching: BranchingData,
    /// Configuration, admissibility and orbit checks for this member.
    pub report: Report,
    /// The perturbation that produced this member; `None` for the seed.
    pub step: Option<PerturbationStep<T>>,
}

impl<T: Real> ChainMember<T> {
    pub fn xi(&self) -> crate::numerics::C64 {
        self.branching.xi
    }

    pub fn angles(&self) -> [CircleAngle; 4] {
        self.branching.angles
    }
}

#[derive(Clone, Debug)]
pub struct ChainRecord<T: Real = f64> {
    pub members: Vec<ChainMember<T>>,
    /// Coefficient distance between consecutive members.
    pub deltas: Vec<f64>,
}

impl<T: Real> ChainRecord<T> {
    pub fn j_ladder(&self) -> Vec<usize> {
        self.members.iter().map(|m| m.config.j).collect()
    }

    pub fn all_pass(&self) -> bool {
        self.members.iter().all(|m| m.report.all_pass())
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ChainOptions {
    pub perturb: PerturbOptions,
}

/// The default schedule `1, 2, …, n`.
pub fn default_schedule(n: usize) -> Vec<usize> {
    (1..=n).collect()
}

/// Largest distance allowed between an angle at ξₙ₊₁ and the nearest angle at ξₙ.
pub fn angle_ladder_bound(m: usize, source: Configuration) -> f64 {
    5.0 / (12.0 * 3f64.powi((m + source.l + source.j + source.k) as i32))
}

fn circle_distance(a: &CircleAngle, b: &CircleAngle) -> f64 {
    let d = (a.to_f64() - b.to_f64()).abs();
    d.min(1.0 - d)
}

/// Checks that the first `j` points of the orbit of ξ are pairwise distinct and not critical.
pub fn orbit_distinctness(f: &CubicPolynomial, br: &BranchingData) -> Check {
    let name = "orbit of ξ distinct and non-critical";
    if br.j == 0 {
        return Check::flag(name, true).with_detail("ξ = ω");
    }
    let tol = orbit_tolerance(f);
    let pts = &br.orbit[..br.j];
    let mut gap = f64::INFINITY;
    for (i, p) in pts.iter().enumerate() {
        gap = gap.min((p - f.a()).norm()).min((p - f.b()).norm());
        for q in &pts[i + 1..] {
            gap = gap.min((p - q).norm());
        }
    }
    Check::above(name, gap, tol)
}

fn member_report(f: &CubicPolynomial, cfg: Configuration, br: &BranchingData, opts: &ChainOptions) -> Report {
    let mut rep = check_configuration(f, cfg.k, cfg.l);
    rep.extend(verify_admissible(f, cfg, br, &opts.perturb.rays));
    rep.push(orbit_distinctness(f, br));
    rep
}

fn located<T: Real>(f: &CubicPolynomial<T>, cfg: Configuration, opts: &ChainOptions) -> Result<BranchingData> {
    let br = locate_branching_point(&f.to_f64(), cfg.k, cfg.l, cfg.j + J_SEARCH_MARGIN, &opts.perturb.rays)?;
    if br.j != cfg.j {
        return Err(Error::ConfigurationMismatch(format!(
            "branching point found at j = {}, expected {}",
            br.j, cfg.j
        )));
    }
    Ok(br)
}

fn checked(rep: &Report) -> Result<()> {
    match rep.failures().next() {
        None => Ok(()),
        Some(c) => Err(Error::ConfigurationMismatch(format!("check failed: {c}"))),
    }
}

/// Builds `f₀, …, f_N` with `schedule[n]` as the perturbation parameter of step `n`.
pub fn build_chain<T: Real>(n: usize, schedule: &[usize], opts: &ChainOptions) -> Result<ChainRecord<T>> {
    if schedule.len() != n {
        return Err(Error::InvalidArgument(format!(
            "schedule has {} entries for {n} steps",
            schedule.len()
        )));
    }
    let f0 = seed_polynomial::<T>();
    let cfg0 = SEED_CONFIGURATION;
    let wrap = |step: usize| move |e: Error| Error::ChainStep { step, source: Box::new(e) };
    let br0 = located(&f0, cfg0, opts).map_err(wrap(0))?;
    let rep0 = member_report(&f0.to_f64(), cfg0, &br0, opts);
    checked(&rep0).map_err(wrap(0))?;
    let mut members = vec![ChainMember {
        poly: f0,
        config: cfg0,
        branching: br0,
        report: rep0,
        step: None,
    }];
    let mut deltas = Vec::with_capacity(n);
    for (i, &m) in schedule.iter().enumerate() {
        let prev = members.last().expect("non-empty");
        let cfg = prev.config;
        let step = perturb_with_retry(&prev.poly, cfg.k, cfg.l, m, &opts.perturb).map_err(wrap(i + 1))?;
        let next_cfg = Configuration::new(cfg.j + cfg.k, step.k, step.l);
        let g = step.target;
        let br = located(&g, next_cfg, opts).map_err(wrap(i + 1))?;
        let mut rep = member_report(&g.to_f64(), next_cfg, &br, opts);
        let bound = angle_ladder_bound(step.m, cfg);
        let drift = br
            .angles
            .iter()
            .map(|a| prev.branching.angles.iter().map(|b| circle_distance(a, b)).fold(1.0, f64::min))
            .fold(0.0, f64::max);
        rep.push(Check::at_most("angles at ξ follow the previous member", drift, bound));
        checked(&rep).map_err(wrap(i + 1))?;
        deltas.push(g.to_f64().coefficient_distance(&prev.poly.to_f64()));
        members.push(ChainMember {
            poly: g,
            config: next_cfg,
            branching: br,
            report: rep,
            step: Some(step),
        });
    }
    Ok(ChainRecord { members, deltas })
}
