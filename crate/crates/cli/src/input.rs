//! Parsing of polynomial specifications, angle lists and the settings file.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use cubic_dendrite::config::{check_configuration, solve_config, seed_pair, Configuration, DEFAULT_TOL};
use cubic_dendrite::numerics::{CircleAngle, C64};
use cubic_dendrite::poly::{seed_polynomial, CubicPolynomial};
use cubic_dendrite::rays::RayOptions;
use cubic_dendrite::{Error, Result};
use serde::Deserialize;

use crate::fig5::{FIG5, SEED_INDEX};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Double,
    Extended,
}

/// Keys accepted in the `--config` file; every key is optional.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileSettings {
    pub tol: Option<f64>,
    pub precision: Option<Precision>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub json: Option<bool>,
    pub landing_tol: Option<f64>,
    pub substeps: Option<usize>,
    pub far_potential: Option<f64>,
}

impl FileSettings {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
    }
}

/// Effective settings after merging the file with the command-line flags.
#[derive(Clone, Debug)]
pub struct Settings {
    pub tol: f64,
    pub precision: Precision,
    pub threads: Option<usize>,
    pub out: PathBuf,
    pub json: bool,
    pub rays: RayOptions,
}

impl Settings {
    pub fn out_path(&self, name: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.out)
            .map_err(|e| Error::InvalidArgument(format!("cannot create {}: {e}", self.out.display())))?;
        Ok(self.out.join(name))
    }
}

/// A polynomial given on the command line, with the configuration it is known to have.
#[derive(Clone, Debug)]
pub struct PolyInput {
    pub poly: CubicPolynomial,
    pub config: Option<Configuration>,
}

fn reals(s: &str, n: usize) -> Result<Vec<f64>> {
    let s = s.trim().trim_start_matches('[').trim_end_matches(']');
    let v: std::result::Result<Vec<f64>, _> = s.split(',').map(|x| x.trim().parse::<f64>()).collect();
    match v {
        Ok(v) if v.len() == n && v.iter().all(|x| x.is_finite()) => Ok(v),
        _ => Err(Error::InvalidArgument(format!("expected {n} comma-separated finite reals, got {s:?}"))),
    }
}

/// Parses `seed`, `fig5:N`, `crit:ar,ai,br,bi`, `coef:c1r,c1i,c2r,c2i` or bare `ar,ai,br,bi`.
pub fn parse_poly(spec: &str, tol: f64) -> Result<PolyInput> {
    let spec = spec.trim();
    if spec == "seed" {
        return Ok(PolyInput {
            poly: seed_polynomial(),
            config: Some(FIG5[SEED_INDEX].config),
        });
    }
    if let Some(n) = spec.strip_prefix("fig5:") {
        let n: usize = n
            .parse()
            .ok()
            .filter(|&n| n < FIG5.len())
            .ok_or_else(|| Error::InvalidArgument(format!("fig5 index must be 0..{}", FIG5.len() - 1)))?;
        if n == SEED_INDEX {
            return parse_poly("seed", tol);
        }
        let entry = &FIG5[n];
        let raw = CubicPolynomial::from_coefficients(entry.c1, entry.c2)?;
        let oriented = orient(&raw, entry.config);
        // printed digits are too few for long orbits; polish with the known configuration
        let poly = solve_config::<f64>(
            seed_pair(oriented.a(), oriented.b()),
            entry.config.k,
            entry.config.l,
            tol.max(DEFAULT_TOL),
        )?;
        return Ok(PolyInput {
            poly,
            config: Some(entry.config),
        });
    }
    if let Some(rest) = spec.strip_prefix("coef:") {
        let v = reals(rest, 4)?;
        let poly = CubicPolynomial::from_coefficients(C64::new(v[0], v[1]), C64::new(v[2], v[3]))?;
        return Ok(PolyInput { poly, config: None });
    }
    let rest = spec.strip_prefix("crit:").unwrap_or(spec);
    let v = reals(rest, 4)?;
    let poly = CubicPolynomial::from_critical_points(C64::new(v[0], v[1]), C64::new(v[2], v[3]))?;
    Ok(PolyInput { poly, config: None })
}

fn config_residual_max(f: &CubicPolynomial, cfg: Configuration) -> f64 {
    check_configuration(f, cfg.k, cfg.l)
        .checks
        .iter()
        .filter(|c| c.name.contains('='))
        .map(|c| if c.pass || c.measured > 0.0 { c.measured } else { f64::INFINITY })
        .fold(0.0, f64::max)
}

/// The slot order of `f` under which the configuration fits better.
pub fn orient(f: &CubicPolynomial, cfg: Configuration) -> CubicPolynomial {
    let s = f.swapped();
    if config_residual_max(&s, cfg) < config_residual_max(f, cfg) {
        s
    } else {
        *f
    }
}

pub fn parse_angles(list: &str) -> Result<Vec<CircleAngle>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse())
        .collect()
}

pub fn parse_complex(s: &str) -> Result<C64> {
    let v = reals(s, 2)?;
    Ok(C64::new(v[0], v[1]))
}

pub fn parse_size(s: &str) -> Result<(u32, u32)> {
    let bad = || Error::InvalidArgument(format!("size must look like 640x480, got {s:?}"));
    let (w, h) = s.split_once('x').ok_or_else(bad)?;
    let w: u32 = w.trim().parse().map_err(|_| bad())?;
    let h: u32 = h.trim().parse().map_err(|_| bad())?;
    if w == 0 || h == 0 {
        return Err(bad());
    }
    Ok((w, h))
}
