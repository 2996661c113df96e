//! Subcommand implementations; each one appends records to an [`Output`].

use std::fs::File;
use std::io::BufWriter;

use clap::Args;
use cubic_dendrite::chain::{build_chain, default_schedule, orbit_distinctness, ChainOptions, ChainRecord};
use cubic_dendrite::config::{check_configuration, seed_pair, solve_config, verify_in_v, Configuration};
use cubic_dendrite::dendrite::{
    approximate_loop, locate_branching_point, nodal_point_exact, nodal_point_loop, test_angles, verify_admissible,
    BranchingData, LOOP_POTENTIAL, LOOP_SAMPLES,
};
use cubic_dendrite::numerics::{CircleAngle, Qd, Real, C64};
use cubic_dendrite::perturb::{perturb, perturb_with_retry, PerturbOptions, PerturbationStep};
use cubic_dendrite::poly::CubicPolynomial;
use cubic_dendrite::puzzle::{build_puzzle, max_diameter, PieceColor};
use cubic_dendrite::rays::{landing_rays, trace_ray, END_POTENTIAL, START_POTENTIAL};
use cubic_dendrite::render::{render, Marker, RenderJob, Viewport, ITERATION_BUDGET};
use cubic_dendrite::report::{Check, Report};
use cubic_dendrite::{Error, Result};
use sha2::{Digest, Sha256};

use crate::fig5::{FIG5, RELATIVE_TOL, SEED_INDEX, SEED_TOL};
use crate::input::{orient, parse_angles, parse_complex, parse_poly, parse_size, PolyInput, Precision, Settings};
use crate::record::{check_record, report_records, Record, Value};
use crate::Command;

/// Deepest `j` searched when the configuration does not fix it.
const DEFAULT_MAX_J: usize = 12;

#[derive(Default)]
pub struct Output {
    pub json: bool,
    pub lines: Vec<String>,
    /// Set once any emitted check has failed.
    pub failed: bool,
}

impl Output {
    pub fn emit(&mut self, r: Record) {
        if r.has_non_finite() {
            self.failed = true;
        }
        self.lines.push(if self.json { r.to_json() } else { r.to_text() });
    }

    fn check(&mut self, scope: &str, c: &Check) {
        self.failed |= !c.pass;
        self.emit(check_record(scope, c));
    }

    fn report(&mut self, scope: &str, rep: &Report) {
        self.failed |= !rep.all_pass();
        for r in report_records(scope, rep) {
            self.emit(r);
        }
    }
}

#[derive(Args, Debug)]
pub struct PolyArgs {
    /// Polynomial: seed, fig5:N, crit:ar,ai,br,bi, coef:c1r,c1i,c2r,c2i or ar,ai,br,bi.
    #[arg(long, default_value = "seed")]
    pub poly: String,
}

#[derive(Args, Debug)]
pub struct ConfigArgs {
    /// Steps from ω to ω′ (defaults to the configuration of fig5/seed input, else 2).
    #[arg(long)]
    pub k: Option<usize>,
    /// Steps from ω′ to α (defaults to the configuration of fig5/seed input, else 1).
    #[arg(long)]
    pub l: Option<usize>,
}

impl ConfigArgs {
    fn resolve(&self, input: &PolyInput) -> (usize, usize) {
        let known = input.config.unwrap_or(FIG5[SEED_INDEX].config);
        (self.k.unwrap_or(known.k), self.l.unwrap_or(known.l))
    }
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub poly: PolyArgs,
    #[command(flatten)]
    pub cfg: ConfigArgs,
}

#[derive(Args, Debug)]
pub struct PerturbArgs {
    #[command(flatten)]
    pub poly: PolyArgs,
    #[command(flatten)]
    pub cfg: ConfigArgs,
    /// Depth of the inverse-branch chain.
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    /// Fail instead of raising m when the solve does not converge.
    #[arg(long)]
    pub no_retry: bool,
}

#[derive(Args, Debug)]
pub struct ChainArgs {
    /// Number of perturbation steps.
    #[arg(long, default_value_t = 3)]
    pub steps: usize,
    /// Comma-separated m per step (default 1, 2, ..., steps).
    #[arg(long, value_delimiter = ',')]
    pub schedule: Option<Vec<usize>>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub poly: PolyArgs,
    #[command(flatten)]
    pub cfg: ConfigArgs,
    /// Expected steps from ξ to ω; searched up to 12 when absent.
    #[arg(long)]
    pub j: Option<usize>,
}

#[derive(Args, Debug)]
pub struct TraceArgs {
    #[command(flatten)]
    pub poly: PolyArgs,
    /// Angle as p/q.
    #[arg(long)]
    pub angle: String,
    #[arg(long, default_value_t = START_POTENTIAL)]
    pub start: f64,
    #[arg(long, default_value_t = END_POTENTIAL)]
    pub end: f64,
    /// Also write the ray nodes to ray_<p>_<q>.csv.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Args, Debug)]
pub struct LandingArgs {
    #[command(flatten)]
    pub poly: PolyArgs,
    /// Comma-separated angles p/q.
    #[arg(long, default_value = "0,1/2,1/4,3/4,1/3,2/3")]
    pub angles: String,
}

#[derive(Args, Debug)]
pub struct PuzzleArgs {
    #[command(flatten)]
    pub poly: PolyArgs,
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    #[command(flatten)]
    pub poly: PolyArgs,
    /// Center re,im of the view (defaults to the barycenter of the fixed points).
    #[arg(long, allow_hyphen_values = true)]
    pub center: Option<String>,
    /// Width of the view in the plane.
    #[arg(long)]
    pub width: Option<f64>,
    /// Image size in pixels, WxH.
    #[arg(long, default_value = "600x400")]
    pub size: String,
    /// Comma-separated ray angles to draw.
    #[arg(long, default_value = "")]
    pub rays: String,
    /// Mark the fixed point 0 and both critical points.
    #[arg(long)]
    pub critical: bool,
    /// Overlay the puzzle down to this depth.
    #[arg(long)]
    pub puzzle_depth: Option<usize>,
    #[arg(long)]
    pub smooth: bool,
    #[arg(long, default_value_t = ITERATION_BUDGET)]
    pub budget: u32,
    /// File name inside the output directory.
    #[arg(long, default_value = "render.ppm")]
    pub file: String,
}

#[derive(Args, Debug)]
pub struct LoopArgs {
    #[command(flatten)]
    pub poly: PolyArgs,
    #[arg(long, default_value_t = LOOP_SAMPLES)]
    pub samples: usize,
    #[arg(long, default_value_t = LOOP_POTENTIAL)]
    pub potential: f64,
    #[arg(long, default_value = "loop.csv")]
    pub file: String,
}

#[derive(Args, Debug)]
pub struct NodalArgs {
    #[command(flatten)]
    pub poly: PolyArgs,
    #[command(flatten)]
    pub cfg: ConfigArgs,
    #[arg(long)]
    pub j: Option<usize>,
    #[arg(long, default_value_t = LOOP_SAMPLES)]
    pub samples: usize,
    #[arg(long, default_value_t = LOOP_POTENTIAL)]
    pub potential: f64,
}

pub fn run(cmd: &Command, s: &Settings, out: &mut Output) -> Result<()> {
    match cmd {
        Command::SolveConfig(a) => match s.precision {
            Precision::Double => solve_cmd::<f64>(a, s, out),
            Precision::Extended => solve_cmd::<Qd>(a, s, out),
        },
        Command::Perturb(a) => match s.precision {
            Precision::Double => perturb_cmd::<f64>(a, s, out),
            Precision::Extended => perturb_cmd::<Qd>(a, s, out),
        },
        Command::Chain(a) => {
            let schedule = a.schedule.clone().unwrap_or_else(|| default_schedule(a.steps));
            match s.precision {
                Precision::Double => chain_cmd::<f64>(a.steps, &schedule, s, out, false),
                Precision::Extended => chain_cmd::<Qd>(a.steps, &schedule, s, out, false),
            }
        }
        Command::ReproduceFig5 => match s.precision {
            Precision::Double => chain_cmd::<f64>(3, &default_schedule(3), s, out, true),
            Precision::Extended => chain_cmd::<Qd>(3, &default_schedule(3), s, out, true),
        },
        Command::Verify(a) => verify_cmd(a, s, out),
        Command::TraceRay(a) => trace_cmd(a, s, out),
        Command::Landing(a) => landing_cmd(a, s, out),
        Command::Puzzle(a) => puzzle_cmd(a, s, out),
        Command::Render(a) => render_cmd(a, s, out),
        Command::Loop(a) => loop_cmd(a, s, out),
        Command::Nodal(a) => nodal_cmd(a, s, out),
    }
}

fn perturb_options(s: &Settings) -> PerturbOptions {
    PerturbOptions {
        tol: s.tol,
        rays: s.rays,
        ..PerturbOptions::default()
    }
}

fn solve_cmd<T: Real>(a: &SolveArgs, s: &Settings, out: &mut Output) -> Result<()> {
    let input = parse_poly(&a.poly.poly, s.tol)?;
    let (k, l) = a.cfg.resolve(&input);
    let f = solve_config::<T>(seed_pair(input.poly.a(), input.poly.b()), k, l, s.tol)?;
    let g = f.to_f64();
    out.emit(
        Record::new("solution")
            .poly(&g)
            .with("config", Value::List(vec![Value::Int(k as i64), Value::Int(l as i64)])),
    );
    out.report("configuration", &check_configuration(&g, k, l));
    Ok(())
}

fn step_record<T: Real>(step: &PerturbationStep<T>) -> Record {
    Record::new("perturbation")
        .int("m", step.m)
        .poly(&step.target.to_f64())
        .with("config", Value::List(vec![Value::Int(step.k as i64), Value::Int(step.l as i64)]))
        .bool("role_swap", step.role_swap)
        .bool("tie_broken", step.tie_broken)
        .with(
            "candidates",
            Value::List(
                step.candidates
                    .iter()
                    .map(|(c1, c2)| Value::List(vec![Value::complex(*c1), Value::complex(*c2)]))
                    .collect(),
            ),
        )
}

fn perturb_cmd<T: Real>(a: &PerturbArgs, s: &Settings, out: &mut Output) -> Result<()> {
    let input = parse_poly(&a.poly.poly, s.tol)?;
    let (k, l) = a.cfg.resolve(&input);
    let f = input.poly.convert::<T>();
    let opts = perturb_options(s);
    let step = if a.no_retry {
        perturb(&f, k, l, a.m, &opts)?
    } else {
        perturb_with_retry(&f, k, l, a.m, &opts)?
    };
    out.emit(step_record(&step));
    out.report("configuration", &check_configuration(&step.target.to_f64(), step.k, step.l));
    Ok(())
}

fn branching_record(br: &BranchingData) -> Record {
    Record::new("branching")
        .int("j", br.j)
        .complex("xi", br.xi)
        .with("angles", Value::angles(&br.angles))
        .with(
            "separation",
            Value::List(br.separation.iter().map(|&i| Value::Int(i as i64)).collect()),
        )
        .num("cluster_radius", br.cluster_radius())
}

fn relative_error(z: C64, reference: C64) -> f64 {
    (z - reference).norm() / reference.norm()
}

fn chain_cmd<T: Real>(n: usize, schedule: &[usize], s: &Settings, out: &mut Output, compare: bool) -> Result<()> {
    let opts = ChainOptions {
        perturb: perturb_options(s),
    };
    let chain: ChainRecord<T> = build_chain(n, schedule, &opts)?;
    for (i, m) in chain.members.iter().enumerate() {
        let f = m.poly.to_f64();
        let mut r = Record::new("member").int("n", i).poly(&f).with("config", Value::config(m.config));
        if let Some(step) = &m.step {
            r = r.int("m", step.m).bool("tie_broken", step.tie_broken);
        }
        out.emit(r);
        out.emit(branching_record(&m.branching).int("n", i));
        out.report(&format!("member{i}"), &m.report);
        if compare {
            let entry = &FIG5[i];
            let (c1, c2) = f.coefficients();
            let scope = format!("member{i}");
            if i == SEED_INDEX {
                let err = (c1 - entry.c1).norm().max((c2 - entry.c2).norm());
                out.check(&scope, &Check::at_most("coefficients match the published seed", err, SEED_TOL));
            } else {
                let err = relative_error(c1, entry.c1).max(relative_error(c2, entry.c2));
                out.check(&scope, &Check::at_most("coefficients match the published values", err, RELATIVE_TOL));
            }
            out.check(&scope, &Check::flag("configuration matches the published (j,k,l)", m.config == entry.config));
        }
    }
    out.emit(Record::new("deltas").with("values", Value::List(chain.deltas.iter().map(|&d| Value::Num(d)).collect())));
    let ladder = chain.j_ladder();
    let law = chain.members.windows(2).all(|w| w[1].config.j == w[0].config.j + w[0].config.k);
    out.check("chain", &Check::flag("j increments by k at every step", law).with_detail(format!("{ladder:?}")));
    Ok(())
}

fn resolve_config(input: &PolyInput, cfg: &ConfigArgs) -> (CubicPolynomial, usize, usize) {
    let (k, l) = cfg.resolve(input);
    let f = match input.config {
        Some(_) => input.poly,
        None => orient(&input.poly, Configuration::new(0, k, l)),
    };
    (f, k, l)
}

fn verify_cmd(a: &VerifyArgs, s: &Settings, out: &mut Output) -> Result<()> {
    let input = parse_poly(&a.poly.poly, s.tol)?;
    let (f, k, l) = resolve_config(&input, &a.cfg);
    out.emit(Record::new("input").poly(&f).int("k", k).int("l", l));
    out.report("membership", &verify_in_v(&f, &s.rays));
    out.report("configuration", &check_configuration(&f, k, l));
    let max_j = a.j.or(input.config.map(|c| c.j)).unwrap_or(DEFAULT_MAX_J);
    let br = locate_branching_point(&f, k, l, max_j, &s.rays)?;
    out.emit(branching_record(&br));
    let j = a.j.or(input.config.map(|c| c.j)).unwrap_or(br.j);
    let cfg = Configuration::new(j, k, l);
    out.report("admissibility", &verify_admissible(&f, cfg, &br, &s.rays));
    out.check("admissibility", &orbit_distinctness(&f, &br));
    Ok(())
}

fn trace_cmd(a: &TraceArgs, s: &Settings, out: &mut Output) -> Result<()> {
    let f = parse_poly(&a.poly.poly, s.tol)?.poly;
    let angle: CircleAngle = a.angle.parse()?;
    let ray = trace_ray(&f, angle, a.start, a.end, &s.rays)?;
    let mut r = Record::new("ray")
        .str("angle", angle.to_string())
        .num("start", a.start)
        .num("end", a.end)
        .int("nodes", ray.nodes.len())
        .complex("last", ray.last_point())
        .num("spread", ray.landing_spread);
    if let Some(z) = ray.landing {
        r = r.complex("landing", z);
    }
    if a.csv {
        let path = s.out_path(&format!("ray_{}_{}.csv", angle.num(), angle.den()))?;
        ray.write_csv(BufWriter::new(create(&path)?)).map_err(io_error)?;
        r = r.str("file", path.display().to_string());
    }
    out.emit(r);
    Ok(())
}

fn landing_cmd(a: &LandingArgs, s: &Settings, out: &mut Output) -> Result<()> {
    let f = parse_poly(&a.poly.poly, s.tol)?.poly;
    let angles = parse_angles(&a.angles)?;
    let rays = landing_rays(&f, &angles, START_POTENTIAL, s.rays.landing_tolerance, &s.rays);
    for (t, r) in angles.iter().zip(rays) {
        let rec = Record::new("landing").str("angle", t.to_string());
        match r {
            Ok(ray) => out.emit(
                rec.complex("landing", ray.landing.expect("landing resolved"))
                    .num("spread", ray.landing_spread),
            ),
            Err(e) => {
                out.failed = true;
                out.emit(rec.str("error", e.to_string()));
            }
        }
    }
    Ok(())
}

fn create(path: &std::path::Path) -> Result<File> {
    File::create(path).map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", path.display())))
}

fn io_error(e: std::io::Error) -> Error {
    Error::InvalidArgument(format!("write failed: {e}"))
}

/// Barycenter of the fixed points and a width that frames the critical points generously.
fn default_view(f: &CubicPolynomial) -> (C64, f64) {
    let (_, c2) = f.coefficients();
    let center = -c2 / 3.0;
    let reach = [C64::new(0.0, 0.0), f.a(), f.b(), f.eval(f.b())]
        .iter()
        .map(|z| (z - center).norm())
        .fold(0.0, f64::max);
    (center, 3.0 * reach.max(0.5))
}

fn puzzle_cmd(a: &PuzzleArgs, s: &Settings, out: &mut Output) -> Result<()> {
    let f = parse_poly(&a.poly.poly, s.tol)?.poly;
    let tree = build_puzzle(&f, a.depth, &s.rays)?;
    let mut diameters = Vec::with_capacity(a.depth + 1);
    for d in 0..=a.depth {
        let level = tree.pieces(d);
        let alpha = level.iter().filter(|p| p.color == PieceColor::Alpha).count();
        let diam = max_diameter(&tree, d)?;
        diameters.push(diam);
        out.emit(
            Record::new("puzzle-level")
                .int("depth", d)
                .int("pieces", level.len())
                .int("alpha_pieces", alpha)
                .int("beta_pieces", level.len() - alpha)
                .int("ray_pairs", tree.pairs.get(d).map_or(0, Vec::len))
                .num("max_diameter", diam),
        );
    }
    let decreasing = diameters.windows(2).all(|w| w[1] < w[0]);
    out.check("puzzle", &Check::flag("max diameter strictly decreasing", decreasing));
    let csv = s.out_path("puzzle.csv")?;
    tree.write_csv(BufWriter::new(create(&csv)?)).map_err(io_error)?;
    let svg = s.out_path("puzzle.svg")?;
    let (center, width) = default_view(&f);
    tree.write_svg(BufWriter::new(create(&svg)?), center, width, 800)
        .map_err(io_error)?;
    out.emit(
        Record::new("files")
            .str("csv", csv.display().to_string())
            .str("svg", svg.display().to_string())
            .int("retraced_arcs", tree.retraced_arcs),
    );
    Ok(())
}

fn render_cmd(a: &RenderArgs, s: &Settings, out: &mut Output) -> Result<()> {
    let f = parse_poly(&a.poly.poly, s.tol)?.poly;
    let (dc, dw) = default_view(&f);
    let center = a.center.as_deref().map(parse_complex).transpose()?.unwrap_or(dc);
    let width = a.width.unwrap_or(dw);
    let mut job = RenderJob::new(
        f,
        Viewport {
            center,
            width,
            pixels: parse_size(&a.size)?,
        },
    );
    job.rays = parse_angles(&a.rays)?;
    job.budget = a.budget;
    job.smooth = a.smooth;
    if a.critical {
        for (label, point) in [("alpha", C64::new(0.0, 0.0)), ("omega", f.a()), ("omega-prime", f.b())] {
            job.markers.push(Marker {
                label: label.into(),
                point,
            });
        }
    }
    if let Some(d) = a.puzzle_depth {
        job.puzzle = Some(build_puzzle(&f, d, &s.rays)?);
    }
    let img = render(&job)?;
    let bytes = img.to_ppm();
    let path = s.out_path(&a.file)?;
    std::fs::write(&path, &bytes).map_err(io_error)?;
    out.emit(
        Record::new("image")
            .str("file", path.display().to_string())
            .int("width", img.width as usize)
            .int("height", img.height as usize)
            .complex("center", center)
            .num("plane_width", width)
            .int("skipped_rays", img.skipped_rays)
            .str("sha256", format!("{:x}", Sha256::digest(&bytes))),
    );
    if img.skipped_rays > 0 {
        out.check("render", &Check::at_most("overlay rays traced", img.skipped_rays as f64, 0.0));
    }
    Ok(())
}

fn loop_cmd(a: &LoopArgs, s: &Settings, out: &mut Output) -> Result<()> {
    let f = parse_poly(&a.poly.poly, s.tol)?.poly;
    let lp = approximate_loop(&f, a.samples, a.potential, &s.rays)?;
    let path = s.out_path(&a.file)?;
    lp.write_csv(BufWriter::new(create(&path)?)).map_err(io_error)?;
    out.emit(
        Record::new("loop")
            .int("samples", lp.len())
            .num("potential", lp.potential)
            .num("max_spacing", lp.max_spacing())
            .str("file", path.display().to_string()),
    );
    out.check("loop", &Check::at_most("untraced samples", lp.gaps() as f64, 0.0));
    Ok(())
}

fn nodal_cmd(a: &NodalArgs, s: &Settings, out: &mut Output) -> Result<()> {
    let input = parse_poly(&a.poly.poly, s.tol)?;
    let (f, k, l) = resolve_config(&input, &a.cfg);
    let max_j = a.j.or(input.config.map(|c| c.j)).unwrap_or(DEFAULT_MAX_J);
    let br = locate_branching_point(&f, k, l, max_j, &s.rays)?;
    out.emit(branching_record(&br));
    let tests = test_angles();
    let exact = nodal_point_exact(&br, &tests)?;
    let lp = approximate_loop(&f, a.samples, a.potential, &s.rays)?;
    let on_loop = nodal_point_loop(&lp, &tests)?;
    out.emit(
        Record::new("nodal")
            .complex("exact", exact.point)
            .complex("loop", on_loop.point)
            .num("score", on_loop.score)
            .num("loop_spacing", lp.max_spacing())
            .num("distance", (exact.point - on_loop.point).norm()),
    );
    out.check(
        "nodal",
        &Check::at_most(
            "loop and exact nodal points agree",
            (exact.point - on_loop.point).norm(),
            3.0 * lp.max_spacing(),
        ),
    );
    Ok(())
}
