//! Puzzle pieces bounded by the equipotential of Böttcher radius 2, the rays of angles ±1/4
//! and their preimages.
//!
//! The graph of depth `m` consists of the equipotential at potential `ln 2 / 3^m` and the rays
//! whose angles reach ±1/4 after `m` triplings, cut at that equipotential. Rays landing at the
//! same point come in pairs; the pairs form a non-crossing chord diagram whose faces are the
//! puzzle pieces. Pairs of depth `m + 1` are obtained from those of depth `m` by assigning the
//! preimage angles to the exact preimages of the landing point. Equipotential arcs of depth
//! `m + 1` map onto arcs of depth `m` and are pulled back sample by sample with continuity.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{cubic_roots, Arc, CircleAngle, C64};
use crate::poly::CubicPolynomial;
use crate::rays::{trace_rays, RayOptions};

/// Potential of the depth-0 equipotential.
pub const EQUIPOTENTIAL: f64 = LN_2;
/// Number of samples of the depth-0 equipotential.
pub const EQUIPOTENTIAL_SAMPLES: usize = 3 << 10;
/// Interior samples kept per equipotential arc below depth 0.
pub const ARC_SAMPLE_CAP: usize = 8;
/// Potential at which boundary rays are cut before their landing point.
pub const RAY_END_POTENTIAL: f64 = 1e-7;
/// Ray ends farther than this from the exact landing point break the pairing.
pub const PAIRING_TOLERANCE: f64 = 1e-4;
pub const DEFAULT_DEPTH: usize = 8;
/// Deepest supported level: the equipotential must stay above [`RAY_END_POTENTIAL`].
pub const MAX_DEPTH: usize = 12;

/// Which depth-0 piece a piece is mapped onto by `f^depth`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PieceColor {
    Alpha,
    Beta,
}

impl PieceColor {
    /// Color of the depth-0 piece reached by the angle `t`.
    fn of_angle(t: &CircleAngle) -> Self {
        if Arc::new(CircleAngle::new(3, 4), CircleAngle::new(1, 4)).contains_open(t) {
            PieceColor::Alpha
        } else {
            PieceColor::Beta
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PuzzlePiece {
    pub depth: usize,
    pub color: PieceColor,
    /// Closed boundary polyline (the last point connects back to the first).
    pub boundary: Vec<C64>,
    /// A point in the interior.
    pub witness: C64,
    /// Index of the piece of depth `depth - 1` containing this one.
    pub parent: Option<usize>,
    /// Equipotential arcs on the boundary, as angle intervals.
    pub arcs: Vec<(CircleAngle, CircleAngle)>,
}

impl PuzzlePiece {
    pub fn diameter(&self) -> f64 {
        diameter(&self.boundary)
    }

    pub fn contains(&self, z: C64) -> bool {
        point_in_polygon(&self.boundary, z)
    }
}

/// Two rays landing at a common point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayPair {
    pub angles: (CircleAngle, CircleAngle),
    pub landing: C64,
}

/// Samples of one equipotential arc, endpoints excluded.
type ArcSamples = Vec<(CircleAngle, C64)>;

#[derive(Clone, Debug)]
pub struct PuzzleTree {
    pub depth: usize,
    /// Pieces per depth.
    pub levels: Vec<Vec<PuzzlePiece>>,
    /// Ray pairs per depth.
    pub pairs: Vec<Vec<RayPair>>,
    /// Ray nodes from the depth-0 equipotential, one node per `substeps` per tripling.
    rays: BTreeMap<CircleAngle, Vec<C64>>,
    /// Arc samples of the deepest level keyed by arc start.
    arcs: BTreeMap<CircleAngle, ArcSamples>,
    /// Arcs whose samples were re-traced because continuity was ambiguous.
    pub retraced_arcs: usize,
    opts: RayOptions,
}

impl PuzzleTree {
    pub fn pieces(&self, depth: usize) -> &[PuzzlePiece] {
        &self.levels[depth]
    }

    /// Node of the ray `t` on the equipotential of depth `m`.
    fn crossing(&self, t: &CircleAngle, m: usize) -> C64 {
        self.rays[t][m * self.opts.substeps]
    }

    /// Writes `depth,piece,color,parent,re,im` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "depth,piece,color,parent,re,im")?;
        for (d, level) in self.levels.iter().enumerate() {
            for (i, p) in level.iter().enumerate() {
                let parent = p.parent.map(|x| x as i64).unwrap_or(-1);
                for z in &p.boundary {
                    writeln!(w, "{d},{i},{:?},{parent},{:.17e},{:.17e}", p.color, z.re, z.im)?;
                }
            }
        }
        Ok(())
    }

    /// Writes one SVG group per depth, colored by depth, in the given square viewport.
    pub fn write_svg<W: Write>(&self, mut w: W, center: C64, width: f64, pixels: u32) -> std::io::Result<()> {
        let px = pixels as f64;
        let map = |z: C64| ((z.re - center.re) / width * px + px / 2.0, (center.im - z.im) / width * px + px / 2.0);
        writeln!(
            w,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{pixels}" height="{pixels}" viewBox="0 0 {pixels} {pixels}">"#
        )?;
        writeln!(w, r#"<rect width="100%" height="100%" fill="white"/>"#)?;
        for (d, level) in self.levels.iter().enumerate() {
            let hue = (d * 360 / self.levels.len().max(1)) % 360;
            writeln!(w, r#"<g id="depth{d}" fill="none" stroke="hsl({hue},80%,40%)" stroke-width="0.6">"#)?;
            for p in level {
                write!(w, r#"<polygon points=""#)?;
                for z in &p.boundary {
                    let (x, y) = map(*z);
                    write!(w, "{x:.2},{y:.2} ")?;
                }
                writeln!(w, r#""/>"#)?;
            }
            writeln!(w, "</g>")?;
        }
        writeln!(w, "</svg>")
    }
}

#[derive(Clone, Copy, Debug)]
struct BoundingBox {
    lo: C64,
    hi: C64,
}

impl BoundingBox {
    fn of(points: &[C64]) -> Self {
        let inf = f64::INFINITY;
        let mut b = BoundingBox {
            lo: C64::new(inf, inf),
            hi: C64::new(-inf, -inf),
        };
        for p in points {
            b.lo = C64::new(b.lo.re.min(p.re), b.lo.im.min(p.im));
            b.hi = C64::new(b.hi.re.max(p.re), b.hi.im.max(p.im));
        }
        b
    }

    fn contains(&self, z: C64) -> bool {
        self.lo.re <= z.re && z.re <= self.hi.re && self.lo.im <= z.im && z.im <= self.hi.im
    }
}

/// Whether `z` lies inside the closed polyline (even-odd rule).
pub fn point_in_polygon(poly: &[C64], z: C64) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n.wrapping_sub(1);
    for i in 0..n {
        let (p, q) = (poly[i], poly[j]);
        if (p.im > z.im) != (q.im > z.im) {
            let x = p.re + (z.im - p.im) / (q.im - p.im) * (q.re - p.re);
            if z.re < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Largest distance between two points of the set.
pub fn diameter(points: &[C64]) -> f64 {
    let hull = convex_hull(points);
    let mut d: f64 = 0.0;
    for (i, p) in hull.iter().enumerate() {
        for q in &hull[i + 1..] {
            d = d.max((p - q).norm());
        }
    }
    d
}

fn convex_hull(points: &[C64]) -> Vec<C64> {
    let mut pts: Vec<C64> = points.to_vec();
    pts.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: C64, a: C64, b: C64| (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re);
    let mut lower: Vec<C64> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<C64> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn preimage_roots(f: &CubicPolynomial, z: C64) -> Result<[C64; 3]> {
    cubic_roots(C64::new(1.0, 0.0), f.c2(), f.c1(), -z)
}

/// The preimage of `t` under tripling inside the open arc `(p, q)`.
fn preimage_in(t: &CircleAngle, p: &CircleAngle, q: &CircleAngle) -> Option<CircleAngle> {
    let arc = Arc::new(*p, *q);
    t.preimages().into_iter().find(|s| arc.contains_open(s))
}

/// Faces of a non-crossing chord diagram, each as a cyclic list of arcs `(start, end)`.
fn chord_faces(pairs: &[RayPair]) -> Result<Vec<Vec<(CircleAngle, CircleAngle)>>> {
    let mut ends: Vec<CircleAngle> = pairs.iter().flat_map(|p| [p.angles.0, p.angles.1]).collect();
    ends.sort();
    let n = ends.len();
    let index: BTreeMap<CircleAngle, usize> = ends.iter().enumerate().map(|(i, a)| (*a, i)).collect();
    if index.len() != n {
        return Err(Error::StitchingBroken {
            depth: 0,
            reason: "an angle belongs to two pairs".into(),
        });
    }
    let mut partner = vec![0usize; n];
    for p in pairs {
        let (i, j) = (index[&p.angles.0], index[&p.angles.1]);
        partner[i] = j;
        partner[j] = i;
    }
    let mut seen = vec![false; n];
    let mut faces = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut face = Vec::new();
        let mut i = start;
        loop {
            seen[i] = true;
            let next = (i + 1) % n;
            face.push((ends[i], ends[next]));
            i = partner[next];
            if i == start {
                break;
            }
            if seen[i] {
                return Err(Error::StitchingBroken {
                    depth: 0,
                    reason: "chords cross".into(),
                });
            }
        }
        faces.push(face);
    }
    Ok(faces)
}

/// Traces `angles` from the depth-0 equipotential and stores their nodes.
fn trace_into(
    f: &CubicPolynomial,
    angles: &[CircleAngle],
    end: f64,
    opts: &RayOptions,
    store: &mut BTreeMap<CircleAngle, Vec<C64>>,
    depth: usize,
) -> Result<()> {
    let rays = trace_rays(f, angles, EQUIPOTENTIAL, end, opts);
    for (a, r) in angles.iter().zip(rays) {
        let ray = r.map_err(|e| Error::StitchingBroken {
            depth,
            reason: format!("ray {a}: {e}"),
        })?;
        store.insert(*a, ray.points().collect());
    }
    Ok(())
}

/// Γ⁰: the equipotential of potential ln 2, the rays ±1/4 and their common landing point γ.
pub fn build_gamma0(f: &CubicPolynomial, opts: &RayOptions) -> Result<PuzzleTree> {
    let quarter = CircleAngle::new(1, 4);
    let three_quarters = CircleAngle::new(3, 4);
    let mut rays = BTreeMap::new();
    trace_into(f, &[quarter, three_quarters], RAY_END_POTENTIAL, opts, &mut rays, 0)?;
    let (e1, e2) = (*rays[&quarter].last().expect("nodes"), *rays[&three_quarters].last().expect("nodes"));
    let fixed = crate::poly::fixed_points(f)?;
    let gamma = [fixed.alpha, fixed.beta, fixed.gamma]
        .into_iter()
        .min_by(|p, q| (p - e1).norm().total_cmp(&(q - e1).norm()))
        .expect("three fixed points");
    let gap = (e1 - gamma).norm().max((e2 - gamma).norm());
    if gap > PAIRING_TOLERANCE {
        return Err(Error::CommonLandingFailed {
            first: quarter,
            second: three_quarters,
            gap,
        });
    }

    let samples: Vec<CircleAngle> = (0..EQUIPOTENTIAL_SAMPLES)
        .map(|k| CircleAngle::new(k as i128, EQUIPOTENTIAL_SAMPLES as u128))
        .collect();
    let traced = trace_rays(f, &samples, EQUIPOTENTIAL, EQUIPOTENTIAL, opts);
    let mut arcs: BTreeMap<CircleAngle, ArcSamples> = BTreeMap::new();
    let mut upper: ArcSamples = Vec::new();
    let mut lower: ArcSamples = Vec::new();
    for (a, r) in samples.iter().zip(traced) {
        let z = r
            .map_err(|e| Error::StitchingBroken {
                depth: 0,
                reason: format!("equipotential at {a}: {e}"),
            })?
            .last_point();
        if Arc::new(quarter, three_quarters).contains_open(a) {
            upper.push((*a, z));
        } else if *a != quarter && *a != three_quarters {
            lower.push((*a, z));
        }
    }
    // the arc from 3/4 to 1/4 wraps through 0
    lower.sort_by(|x, y| three_quarters.ccw_to(&x.0).cmp(&three_quarters.ccw_to(&y.0)));
    arcs.insert(quarter, upper);
    arcs.insert(three_quarters, lower);

    let pairs = vec![RayPair {
        angles: (quarter, three_quarters),
        landing: gamma,
    }];
    let mut tree = PuzzleTree {
        depth: 0,
        levels: Vec::new(),
        pairs: vec![pairs],
        rays,
        arcs,
        retraced_arcs: 0,
        opts: *opts,
    };
    let mut pieces = assemble(&tree, 0)?;
    for p in &mut pieces {
        p.witness = match p.color {
            PieceColor::Alpha => fixed.alpha,
            PieceColor::Beta => [fixed.beta, fixed.gamma]
                .into_iter()
                .find(|z| (z - gamma).norm() > 0.0)
                .expect("β differs from γ"),
        };
        if !p.contains(p.witness) {
            return Err(Error::StitchingBroken {
                depth: 0,
                reason: format!("{:?} piece does not contain its fixed point", p.color),
            });
        }
    }
    tree.levels.push(pieces);
    Ok(tree)
}

/// Boundary polylines of the faces of depth `m`, without witnesses or parents.
fn assemble(tree: &PuzzleTree, m: usize) -> Result<Vec<PuzzlePiece>> {
    let pairs = &tree.pairs[m];
    let mut landing: BTreeMap<CircleAngle, (CircleAngle, C64)> = BTreeMap::new();
    for p in pairs {
        landing.insert(p.angles.0, (p.angles.1, p.landing));
        landing.insert(p.angles.1, (p.angles.0, p.landing));
    }
    let s = tree.opts.substeps;
    let faces = chord_faces(pairs).map_err(|e| match e {
        Error::StitchingBroken { reason, .. } => Error::StitchingBroken { depth: m, reason },
        other => other,
    })?;
    let mut pieces = Vec::with_capacity(faces.len());
    for arcs in faces {
        let mut boundary = Vec::new();
        for (p, q) in &arcs {
            boundary.push(tree.crossing(p, m));
            boundary.extend(tree.arcs[p].iter().map(|(_, z)| *z));
            let (partner, land) = landing[q];
            boundary.extend(tree.rays[q][m * s..].iter().copied());
            boundary.push(land);
            boundary.extend(tree.rays[&partner][m * s + 1..].iter().rev().copied());
        }
        let (p, q) = arcs[0];
        let mid = p.along(&q, 1, 2).triple_n(m);
        pieces.push(PuzzlePiece {
            depth: m,
            color: PieceColor::of_angle(&mid),
            boundary,
            witness: C64::new(f64::NAN, f64::NAN),
            parent: None,
            arcs,
        });
    }
    Ok(pieces)
}

/// Stitches the preimages of `image` samples along the arc `(p, q)` starting from `start`.
/// Returns `None` when a step is ambiguous or the stitch misses `end`.
fn stitch(
    f: &CubicPolynomial,
    p: &CircleAngle,
    q: &CircleAngle,
    start: C64,
    end: C64,
    image: &[(CircleAngle, C64)],
    image_end: C64,
) -> Option<ArcSamples> {
    let mut out = Vec::with_capacity(image.len());
    let mut prev = start;
    let step = |z: C64, prev: C64| -> Option<C64> {
        let roots = preimage_roots(f, z).ok()?;
        let mut d: Vec<(f64, C64)> = roots.iter().map(|r| ((r - prev).norm(), *r)).collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0));
        (d[0].0 < 0.5 * d[1].0).then_some(d[0].1)
    };
    for (t, z) in image {
        let a = preimage_in(t, p, q)?;
        let w = step(*z, prev)?;
        out.push((a, w));
        prev = w;
    }
    let last = step(image_end, prev)?;
    ((last - end).norm() <= 1e-9 * (1.0 + end.norm())).then_some(out)
}

fn decimate(samples: ArcSamples, cap: usize) -> ArcSamples {
    let n = samples.len();
    if n <= cap {
        return samples;
    }
    (0..cap).map(|i| samples[(i + 1) * n / (cap + 1)]).collect()
}

/// Extends `tree` by one level.
pub fn pullback_level(f: &CubicPolynomial, mut tree: PuzzleTree) -> Result<PuzzleTree> {
    let m = tree.depth;
    let next = m + 1;
    if next > MAX_DEPTH {
        return Err(Error::InvalidArgument(format!("puzzle depth is limited to {MAX_DEPTH}")));
    }
    let opts = tree.opts;
    let s = opts.substeps;

    // new rays: preimages of the current boundary angles
    let mut fresh: Vec<CircleAngle> = tree.pairs[m]
        .iter()
        .flat_map(|p| [p.angles.0, p.angles.1])
        .flat_map(|a| a.preimages())
        .filter(|a| !tree.rays.contains_key(a))
        .collect();
    fresh.sort();
    fresh.dedup();
    trace_into(f, &fresh, RAY_END_POTENTIAL, &opts, &mut tree.rays, next)?;

    let mut pairs = Vec::with_capacity(3 * tree.pairs[m].len());
    for pair in &tree.pairs[m] {
        let roots = preimage_roots(f, pair.landing)?;
        let mut groups: [Vec<CircleAngle>; 3] = Default::default();
        for a in pair.angles.0.preimages().into_iter().chain(pair.angles.1.preimages()) {
            let end = *tree.rays[&a].last().expect("nodes");
            let (i, d) = roots
                .iter()
                .enumerate()
                .map(|(i, r)| (i, (r - end).norm()))
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .expect("three roots");
            if d > PAIRING_TOLERANCE {
                return Err(Error::StitchingBroken {
                    depth: next,
                    reason: format!("ray {a} ends {d:e} from every preimage of its image landing"),
                });
            }
            groups[i].push(a);
        }
        for (g, r) in groups.iter().zip(roots) {
            let [a, b] = g.as_slice() else {
                return Err(Error::StitchingBroken {
                    depth: next,
                    reason: format!("{} rays land at a preimage of a pair landing", g.len()),
                });
            };
            pairs.push(RayPair {
                angles: (*a.min(b), *a.max(b)),
                landing: r,
            });
        }
    }
    tree.pairs.push(pairs);

    // equipotential arcs of the new level
    let mut ends: Vec<CircleAngle> = tree.pairs[next].iter().flat_map(|p| [p.angles.0, p.angles.1]).collect();
    ends.sort();
    let n = ends.len();
    let arcs: Vec<(CircleAngle, CircleAngle)> = (0..n).map(|i| (ends[i], ends[(i + 1) % n])).collect();
    let stitched: Vec<Option<ArcSamples>> = arcs
        .par_iter()
        .map(|(p, q)| {
            let (ip, iq) = (p.triple(), q.triple());
            let image = tree.arcs.get(&ip)?;
            stitch(
                f,
                p,
                q,
                tree.crossing(p, next),
                tree.crossing(q, next),
                image,
                tree.crossing(&iq, m),
            )
        })
        .collect();
    let mut new_arcs: BTreeMap<CircleAngle, ArcSamples> = BTreeMap::new();
    let mut retrace: Vec<(CircleAngle, Vec<CircleAngle>)> = Vec::new();
    for ((p, q), st) in arcs.iter().zip(stitched) {
        match st {
            Some(samples) => {
                new_arcs.insert(*p, decimate(samples, ARC_SAMPLE_CAP));
            }
            None => {
                let image = tree.arcs.get(&p.triple()).cloned().unwrap_or_default();
                let angles: Vec<CircleAngle> = decimate(image, ARC_SAMPLE_CAP)
                    .iter()
                    .filter_map(|(t, _)| preimage_in(t, p, q))
                    .collect();
                retrace.push((*p, angles));
            }
        }
    }
    tree.retraced_arcs += retrace.len();
    if !retrace.is_empty() {
        let all: Vec<CircleAngle> = retrace.iter().flat_map(|(_, v)| v.iter().copied()).collect();
        let potential = EQUIPOTENTIAL / 3f64.powi(next as i32);
        let traced = trace_rays(f, &all, EQUIPOTENTIAL, potential, &opts);
        let mut it = all.iter().zip(traced);
        for (p, angles) in retrace {
            let mut samples = Vec::with_capacity(angles.len());
            for _ in 0..angles.len() {
                let (a, r) = it.next().expect("one result per angle");
                let ray = r.map_err(|e| Error::StitchingBroken {
                    depth: next,
                    reason: format!("equipotential at {a}: {e}"),
                })?;
                samples.push((*a, ray.nodes[next * s].point));
            }
            new_arcs.insert(p, samples);
        }
    }
    tree.arcs = new_arcs;
    tree.depth = next;

    let mut pieces = assemble(&tree, next)?;
    let parents = &tree.levels[m];
    let image_of = |piece: &PuzzlePiece| -> Option<usize> {
        let (p, q) = piece.arcs[0];
        let (ip, iq) = (p.triple(), q.triple());
        parents.iter().position(|x| x.arcs.contains(&(ip, iq)))
    };
    let boxes: Vec<BoundingBox> = parents.par_iter().map(|p| BoundingBox::of(&p.boundary)).collect();
    let results: Vec<Result<(C64, usize)>> = pieces
        .par_iter()
        .map(|piece| {
            let broken = |reason: String| Error::StitchingBroken { depth: next, reason };
            let img = image_of(piece).ok_or_else(|| broken("piece has no image piece".into()))?;
            let roots = preimage_roots(f, parents[img].witness)?;
            let witness = roots
                .into_iter()
                .find(|r| piece.contains(*r))
                .ok_or_else(|| broken("no preimage of the image witness inside the piece".into()))?;
            let containing: Vec<usize> = parents
                .iter()
                .zip(&boxes)
                .enumerate()
                .filter(|(_, (x, b))| b.contains(witness) && x.contains(witness))
                .map(|(i, _)| i)
                .collect();
            match containing.as_slice() {
                [i] => Ok((witness, *i)),
                other => Err(broken(format!("witness lies in {} parent pieces", other.len()))),
            }
        })
        .collect();
    for (piece, r) in pieces.iter_mut().zip(results) {
        let (w, parent) = r?;
        piece.witness = w;
        piece.parent = Some(parent);
    }
    tree.levels.push(pieces);
    Ok(tree)
}

/// Puzzle of `f` down to `depth`.
pub fn build_puzzle(f: &CubicPolynomial, depth: usize, opts: &RayOptions) -> Result<PuzzleTree> {
    let mut tree = build_gamma0(f, opts)?;
    for _ in 0..depth {
        tree = pullback_level(f, tree)?;
    }
    Ok(tree)
}

/// Largest diameter of a piece of the given depth.
pub fn max_diameter(tree: &PuzzleTree, depth: usize) -> Result<f64> {
    let level = tree
        .levels
        .get(depth)
        .ok_or_else(|| Error::InvalidArgument(format!("puzzle built to depth {} only", tree.depth)))?;
    Ok(level.par_iter().map(|p| p.diameter()).reduce(|| 0.0, f64::max))
}
