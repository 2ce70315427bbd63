//! Synthetic scene rendering for tests and benchmarks: anti-aliased dark
//! segments on a mid-gray background with seeded additive Gaussian noise.

use std::path::Path;

use anyhow::{bail, Context, Result};
use mcmlsd_core::{GrayImage, LineSegment, Point2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const BACKGROUND: f64 = 128.0;
pub const CONTRAST: f64 = 100.0;
// coverage falls linearly from 1 at the segment to 0 at this distance:
// a unit-width anti-aliased stroke
const STROKE_FALLOFF: f64 = 1.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSpec {
    pub width: u32,
    pub height: u32,
    /// Additive Gaussian noise sigma, gray levels.
    pub sigma: f64,
    pub segments: Vec<SpecSegment>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpecSegment {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl SynthSpec {
    pub fn segments(&self) -> Vec<LineSegment> {
        self.segments
            .iter()
            .map(|s| LineSegment::new(Point2::new(s.x1, s.y1), Point2::new(s.x2, s.y2)))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            bail!("image dimensions must be positive");
        }
        if !(self.sigma >= 0.0) {
            bail!("noise sigma must be non-negative");
        }
        let in_bounds = |x: f64, y: f64| {
            x >= 0.0 && y >= 0.0 && x <= (self.width - 1) as f64 && y <= (self.height - 1) as f64
        };
        for (i, s) in self.segments.iter().enumerate() {
            if !in_bounds(s.x1, s.y1) || !in_bounds(s.x2, s.y2) {
                bail!("segment {i} is out of image bounds");
            }
        }
        Ok(())
    }
}

pub fn read_spec(path: &Path) -> Result<SynthSpec> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let spec: SynthSpec = serde_json::from_str(&text)
        .with_context(|| format!("{}: invalid scene JSON", path.display()))?;
    spec.validate()?;
    Ok(spec)
}

/// Renders the scene deterministically for a given seed.
pub fn render(spec: &SynthSpec, seed: u64) -> Result<GrayImage> {
    spec.validate()?;
    let segments = spec.segments();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(spec.width as usize * spec.height as usize);
    for y in 0..spec.height {
        for x in 0..spec.width {
            let p = Point2::new(x as f64, y as f64);
            // butt caps: pixels past a segment's endpoints get no ink, so
            // the rendered evidence ends exactly at the endpoints
            let d = segments
                .iter()
                .map(|s| lateral_distance(s, &p))
                .fold(f64::INFINITY, f64::min);
            let coverage = (1.0 - d / STROKE_FALLOFF).clamp(0.0, 1.0);
            let noise = if spec.sigma > 0.0 {
                gaussian(&mut rng) * spec.sigma
            } else {
                0.0
            };
            let v = BACKGROUND - CONTRAST * coverage + noise;
            values.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    Ok(GrayImage::new(spec.width, spec.height, values)?)
}

// Orthogonal distance to the segment's carrier line when the projection
// falls inside the segment, infinite otherwise.
fn lateral_distance(s: &LineSegment, p: &Point2) -> f64 {
    let vx = s.p2.x - s.p1.x;
    let vy = s.p2.y - s.p1.y;
    let len_sq = vx * vx + vy * vy;
    let u = ((p.x - s.p1.x) * vx + (p.y - s.p1.y) * vy) / len_sq;
    if !(0.0..=1.0).contains(&u) {
        return f64::INFINITY;
    }
    ((p.x - s.p1.x) * vy - (p.y - s.p1.y) * vx).abs() / len_sq.sqrt()
}

// Box-Muller on the seeded stream; two uniforms per normal keeps the
// draw count per pixel fixed and the image reproducible.
fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Random scene with `n` segments of at least `min_length` pixels,
/// margins respected; used by tests and benchmarks.
pub fn random_scene(
    width: u32,
    height: u32,
    n: usize,
    min_length: f64,
    sigma: f64,
    rng: &mut ChaCha8Rng,
) -> SynthSpec {
    let margin = 10.0;
    let mut segments = Vec::with_capacity(n);
    while segments.len() < n {
        let x1 = rng.random_range(margin..width as f64 - margin);
        let y1 = rng.random_range(margin..height as f64 - margin);
        let x2 = rng.random_range(margin..width as f64 - margin);
        let y2 = rng.random_range(margin..height as f64 - margin);
        let cand = LineSegment::new(Point2::new(x1, y1), Point2::new(x2, y2));
        if cand.length() < min_length {
            continue;
        }
        // keep segments separated so ground truth stays unambiguous
        let clear = segments.iter().all(|s: &SpecSegment| {
            let other = LineSegment::new(Point2::new(s.x1, s.y1), Point2::new(s.x2, s.y2));
            sample_min_distance(&cand, &other) > 12.0
        });
        if clear {
            segments.push(SpecSegment { x1, y1, x2, y2 });
        }
    }
    SynthSpec {
        width,
        height,
        sigma,
        segments,
    }
}

fn sample_min_distance(a: &LineSegment, b: &LineSegment) -> f64 {
    let mut min = f64::INFINITY;
    for i in 0..=20 {
        let u = i as f64 / 20.0;
        let pa = Point2::new(
            a.p1.x + u * (a.p2.x - a.p1.x),
            a.p1.y + u * (a.p2.y - a.p1.y),
        );
        min = min.min(b.distance_to_point(&pa));
        let pb = Point2::new(
            b.p1.x + u * (b.p2.x - b.p1.x),
            b.p1.y + u * (b.p2.y - b.p1.y),
        );
        min = min.min(a.distance_to_point(&pb));
    }
    min
}
