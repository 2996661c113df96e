//! Escape-time images of the filled Julia set with ray, marker and puzzle overlays.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{CircleAngle, C64};
use crate::poly::CubicPolynomial;
use crate::puzzle::PuzzleTree;
use crate::rays::{trace_rays, RayOptions, END_POTENTIAL, START_POTENTIAL};

pub const ITERATION_BUDGET: u32 = 500;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Viewport {
    pub center: C64,
    /// Width of the viewed rectangle in the plane; the height follows the pixel aspect.
    pub width: f64,
    pub pixels: (u32, u32),
}

impl Viewport {
    fn pixel_size(&self) -> f64 {
        self.width / self.pixels.0 as f64
    }

    /// Plane coordinate of the center of pixel `(x, y)`, row 0 at the top.
    pub fn point(&self, x: u32, y: u32) -> C64 {
        let s = self.pixel_size();
        let (w, h) = (self.pixels.0 as f64, self.pixels.1 as f64);
        C64::new(
            self.center.re + (x as f64 + 0.5 - w / 2.0) * s,
            self.center.im - (y as f64 + 0.5 - h / 2.0) * s,
        )
    }

    /// Pixel coordinates (possibly outside the image) of a plane point.
    pub fn to_pixel(&self, z: C64) -> (f64, f64) {
        let s = self.pixel_size();
        let (w, h) = (self.pixels.0 as f64, self.pixels.1 as f64);
        ((z.re - self.center.re) / s + w / 2.0, (self.center.im - z.im) / s + h / 2.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Marker {
    pub label: String,
    pub point: C64,
}

#[derive(Clone, Debug)]
pub struct RenderJob {
    pub f: CubicPolynomial,
    pub viewport: Viewport,
    pub rays: Vec<CircleAngle>,
    pub markers: Vec<Marker>,
    pub puzzle: Option<PuzzleTree>,
    pub budget: u32,
    /// Normalized iteration count instead of the integer count.
    pub smooth: bool,
}

impl RenderJob {
    pub fn new(f: CubicPolynomial, viewport: Viewport) -> Self {
        RenderJob {
            f,
            viewport,
            rays: Vec::new(),
            markers: Vec::new(),
            puzzle: None,
            budget: ITERATION_BUDGET,
            smooth: false,
        }
    }
}

/// An 8-bit RGB raster, rows from top to bottom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u8>,
    /// Overlay rays that could not be traced and were left out.
    pub skipped_rays: usize,
}

impl Image {
    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = 3 * (y as usize * self.width as usize + x as usize);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    fn put(&mut self, x: i64, y: i64, rgb: [u8; 3]) {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return;
        }
        let i = 3 * (y as usize * self.width as usize + x as usize);
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    fn line(&mut self, a: (f64, f64), b: (f64, f64), rgb: [u8; 3]) {
        let limit = 4.0 * (self.width + self.height) as f64;
        if !(a.0.abs() < limit && a.1.abs() < limit && b.0.abs() < limit && b.1.abs() < limit) {
            return;
        }
        let n = (b.0 - a.0).abs().max((b.1 - a.1).abs()).ceil().max(1.0) as usize;
        for i in 0..=n {
            let t = i as f64 / n as f64;
            let x = a.0 + (b.0 - a.0) * t;
            let y = a.1 + (b.1 - a.1) * t;
            self.put(x.floor() as i64, y.floor() as i64, rgb);
        }
    }

    fn polyline(&mut self, vp: &Viewport, pts: &[C64], closed: bool, rgb: [u8; 3]) {
        for w in pts.windows(2) {
            self.line(vp.to_pixel(w[0]), vp.to_pixel(w[1]), rgb);
        }
        if closed && pts.len() > 2 {
            self.line(vp.to_pixel(pts[pts.len() - 1]), vp.to_pixel(pts[0]), rgb);
        }
    }

    fn disc(&mut self, center: (f64, f64), radius: i64, rgb: [u8; 3]) {
        let (cx, cy) = (center.0.floor() as i64, center.1.floor() as i64);
        for dy in -radius..=radius {
            for dx in -radius..=radius {
                if dx * dx + dy * dy <= radius * radius {
                    self.put(cx + dx, cy + dy, rgb);
                }
            }
        }
    }

    /// Binary PPM (P6).
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }

    pub fn write_ppm<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(&self.to_ppm())
    }
}

/// Number of iterations after which the orbit of `z` leaves the escape disk, or `None` if it
/// stays within `budget` iterations.
pub fn escape_count(f: &CubicPolynomial, z: C64, budget: u32) -> Option<u32> {
    let r2 = f.escape_radius().powi(2);
    let mut w = z;
    for n in 0..budget {
        if w.norm_sqr() > r2 {
            return Some(n);
        }
        w = f.eval(w);
    }
    None
}

/// Escape count refined by how far past the escape radius the orbit landed.
fn smooth_count(f: &CubicPolynomial, z: C64, budget: u32) -> Option<f64> {
    let r = f.escape_radius();
    let mut w = z;
    for n in 0..budget {
        if w.norm() > r {
            let frac = ((w.norm().ln()) / r.ln()).ln() / 3f64.ln();
            return Some((n as f64 + 1.0 - frac).max(0.0));
        }
        w = f.eval(w);
    }
    None
}

fn gray(count: Option<f64>, budget: u32) -> [u8; 3] {
    match count {
        None => [0, 0, 0],
        Some(n) => {
            let v = 1.0 - (1.0 + n).ln() / (1.0 + budget as f64).ln();
            let g = (255.0 * v.clamp(0.0, 1.0)).round() as u8;
            [g, g, g]
        }
    }
}

/// RGB of a fully saturated hue in degrees.
fn hue(deg: f64) -> [u8; 3] {
    let h = (deg.rem_euclid(360.0)) / 60.0;
    let x = 1.0 - (h % 2.0 - 1.0).abs();
    let (r, g, b) = match h as u32 {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    [(r * 255.0) as u8, (g * 255.0) as u8, (b * 255.0) as u8]
}

pub const RAY_COLOR: [u8; 3] = [255, 255, 255];
pub const MARKER_COLOR: [u8; 3] = [255, 0, 0];

/// Renders the job. Identical jobs give identical bytes for any thread count.
pub fn render(job: &RenderJob) -> Result<Image> {
    let vp = job.viewport;
    let (w, h) = vp.pixels;
    if w == 0 || h == 0 || !(vp.width > 0.0) || !vp.width.is_finite() {
        return Err(Error::InvalidArgument("viewport needs positive size and width".into()));
    }
    let mut img = Image {
        width: w,
        height: h,
        data: vec![0; 3 * w as usize * h as usize],
        skipped_rays: 0,
    };
    img.data
        .par_chunks_mut(3 * w as usize)
        .enumerate()
        .for_each(|(y, row)| {
            for x in 0..w {
                let z = vp.point(x, y as u32);
                let count = if job.smooth {
                    smooth_count(&job.f, z, job.budget)
                } else {
                    escape_count(&job.f, z, job.budget).map(f64::from)
                };
                row[3 * x as usize..3 * x as usize + 3].copy_from_slice(&gray(count, job.budget));
            }
        });

    if let Some(tree) = &job.puzzle {
        let n = tree.levels.len().max(1) as f64;
        for (d, level) in tree.levels.iter().enumerate() {
            let rgb = hue(300.0 * d as f64 / n);
            for piece in level {
                img.polyline(&vp, &piece.boundary, true, rgb);
            }
        }
    }
    if !job.rays.is_empty() {
        let rays = trace_rays(&job.f, &job.rays, START_POTENTIAL, END_POTENTIAL, &RayOptions::default());
        for r in rays {
            match r {
                Ok(ray) => {
                    let pts: Vec<C64> = ray.points().collect();
                    img.polyline(&vp, &pts, false, RAY_COLOR);
                }
                Err(_) => img.skipped_rays += 1,
            }
        }
    }
    for m in &job.markers {
        img.disc(vp.to_pixel(m.point), 2, MARKER_COLOR);
    }
    Ok(img)
}
