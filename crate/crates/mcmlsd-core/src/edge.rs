//! Subpixel oriented edge detection and the spatially indexed edge map that
//! feeds the Hough and Markov stages.
//!
//! The detector is a single-scale derivative-of-Gaussian filter with
//! non-maximum suppression across the gradient direction, parabolic subpixel
//! refinement and hysteresis linking. Edge orientation is the normal angle
//! theta of the local line `x cos(theta) + y sin(theta) = rho`, i.e. the
//! gradient direction folded to [0, 180); strength is the gradient magnitude
//! in intensity units per pixel.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geom::{self, Line, LineSegment, Point2};
use crate::image::GrayImage;
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedEdge {
    /// Subpixel location.
    pub pos: Point2,
    /// Normal angle of the local line, degrees in [0, 180).
    pub theta_deg: f64,
    /// Gradient magnitude.
    pub strength: f64,
}

impl OrientedEdge {
    pub fn new(pos: Point2, theta_deg: f64, strength: f64) -> Self {
        let mut t = theta_deg % 180.0;
        if t < 0.0 {
            t += 180.0;
        }
        OrientedEdge {
            pos,
            theta_deg: t,
            strength,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeDetectParams {
    /// Gaussian scale, pixels.
    pub sigma: f64,
    /// Hysteresis upper threshold, gradient units.
    pub high_threshold: f64,
    /// Hysteresis lower threshold, gradient units.
    pub low_threshold: f64,
}

impl Default for EdgeDetectParams {
    fn default() -> Self {
        EdgeDetectParams {
            sigma: 1.0,
            high_threshold: 8.0,
            low_threshold: 4.0,
        }
    }
}

impl EdgeDetectParams {
    fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) {
            return Err(Error::InvalidArgument("sigma must be positive"));
        }
        if !(self.low_threshold >= 0.0 && self.low_threshold <= self.high_threshold) {
            return Err(Error::InvalidArgument(
                "hysteresis thresholds must satisfy 0 <= low <= high",
            ));
        }
        Ok(())
    }
}

const GRID_CELL: f64 = 4.0;

/// Immutable edge collection with a uniform 4-pixel grid index supporting
/// band queries against lines and segments.
#[derive(Debug, Clone)]
pub struct EdgeMap {
    edges: Vec<OrientedEdge>,
    width: u32,
    height: u32,
    cells_x: usize,
    cells_y: usize,
    // cell -> indices into `edges`
    buckets: Vec<Vec<u32>>,
}

impl EdgeMap {
    pub fn new(edges: Vec<OrientedEdge>, width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument("image dimensions must be positive"));
        }
        for e in &edges {
            if !(e.pos.x >= -0.5
                && e.pos.x <= width as f64 - 0.5
                && e.pos.y >= -0.5
                && e.pos.y <= height as f64 - 0.5)
            {
                return Err(Error::EdgeOutOfBounds {
                    x: e.pos.x,
                    y: e.pos.y,
                });
            }
        }
        let cells_x = (width as f64 / GRID_CELL) as usize + 1;
        let cells_y = (height as f64 / GRID_CELL) as usize + 1;
        let mut buckets = vec![Vec::new(); cells_x * cells_y];
        for (i, e) in edges.iter().enumerate() {
            let cx = Self::cell_of(e.pos.x, cells_x);
            let cy = Self::cell_of(e.pos.y, cells_y);
            buckets[cy * cells_x + cx].push(i as u32);
        }
        Ok(EdgeMap {
            edges,
            width,
            height,
            cells_x,
            cells_y,
            buckets,
        })
    }

    fn cell_of(coord: f64, cells: usize) -> usize {
        let c = math::floor(coord.max(0.0) / GRID_CELL) as usize;
        c.min(cells - 1)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn edges(&self) -> &[OrientedEdge] {
        &self.edges
    }

    /// All edges with orthogonal distance to `l` at most `halfwidth` whose
    /// projection falls within the image chord of `l`.
    pub fn edges_near_line(&self, l: &Line, halfwidth: f64) -> Result<Vec<OrientedEdge>> {
        Ok(self
            .indices_near_line(l, halfwidth)?
            .into_iter()
            .map(|i| self.edges[i as usize])
            .collect())
    }

    /// Index variant of [`edges_near_line`](Self::edges_near_line),
    /// returning positions into [`edges`](Self::edges) in ascending order.
    pub fn indices_near_line(&self, l: &Line, halfwidth: f64) -> Result<Vec<u32>> {
        if !(halfwidth > 0.0) {
            return Err(Error::InvalidArgument("halfwidth must be positive"));
        }
        let t_range = geom::line_image_t_range(l, self.width, self.height);
        let mut out = Vec::new();
        let Some((t0, t1)) = t_range else {
            return Ok(out);
        };
        self.scan_band_cells(l, halfwidth, |idx, e| {
            if geom::point_line_distance(&e.pos, l) <= halfwidth {
                let t = geom::project_onto_line(&e.pos, l);
                if t >= t0 - 1e-9 && t <= t1 + 1e-9 {
                    out.push(idx);
                }
            }
        });
        out.sort_unstable();
        Ok(out)
    }

    /// Edges within `halfwidth` of the carrier line of `s` whose projection
    /// lies inside the segment's extent. Indices in ascending order.
    pub fn indices_near_segment(&self, s: &LineSegment, halfwidth: f64) -> Vec<u32> {
        let l = s.line();
        let ta = geom::project_onto_line(&s.p1, &l);
        let tb = geom::project_onto_line(&s.p2, &l);
        let (t0, t1) = if ta <= tb { (ta, tb) } else { (tb, ta) };
        let mut out = Vec::new();
        self.scan_band_cells(&l, halfwidth, |idx, e| {
            if geom::point_line_distance(&e.pos, &l) <= halfwidth {
                let t = geom::project_onto_line(&e.pos, &l);
                if t >= t0 - 1e-9 && t <= t1 + 1e-9 {
                    out.push(idx);
                }
            }
        });
        out.sort_unstable();
        out
    }

    /// Strongest edge whose rounded position equals the pixel `(x, y)`.
    pub fn edge_at_pixel(&self, x: u32, y: u32) -> Option<&OrientedEdge> {
        let cx = Self::cell_of(x as f64, self.cells_x);
        let cy = Self::cell_of(y as f64, self.cells_y);
        let mut best: Option<&OrientedEdge> = None;
        for &i in &self.buckets[cy * self.cells_x + cx] {
            let e = &self.edges[i as usize];
            if math::round(e.pos.x) as i64 == x as i64 && math::round(e.pos.y) as i64 == y as i64 {
                match best {
                    Some(b) if b.strength >= e.strength => {}
                    _ => best = Some(e),
                }
            }
        }
        best
    }

    /// New map with the edges at `remove` (ascending indices) dropped.
    pub fn without_indices(&self, remove: &[u32]) -> EdgeMap {
        let mut keep = Vec::with_capacity(self.edges.len().saturating_sub(remove.len()));
        let mut r = 0usize;
        for (i, e) in self.edges.iter().enumerate() {
            if r < remove.len() && remove[r] as usize == i {
                r += 1;
            } else {
                keep.push(*e);
            }
        }
        EdgeMap::new(keep, self.width, self.height).expect("kept edges stay in bounds")
    }

    // Visits every edge in grid cells whose rectangle comes within
    // `halfwidth` of the line. Conservative on cells, exact tests are the
    // caller's job.
    fn scan_band_cells<F: FnMut(u32, &OrientedEdge)>(&self, l: &Line, halfwidth: f64, mut f: F) {
        let half_diag = GRID_CELL * core::f64::consts::SQRT_2 / 2.0;
        for cy in 0..self.cells_y {
            for cx in 0..self.cells_x {
                let bucket = &self.buckets[cy * self.cells_x + cx];
                if bucket.is_empty() {
                    continue;
                }
                let center =
                    Point2::new((cx as f64 + 0.5) * GRID_CELL, (cy as f64 + 0.5) * GRID_CELL);
                if geom::point_line_distance(&center, l) > halfwidth + half_diag + 1e-9 {
                    continue;
                }
                for &i in bucket {
                    f(i, &self.edges[i as usize]);
                }
            }
        }
    }
}

/// Derivative-of-Gaussian edge detection with NMS, subpixel refinement and
/// hysteresis linking. A border margin of `ceil(3 sigma)` pixels is
/// excluded.
pub fn detect_edges(img: &GrayImage, params: &EdgeDetectParams) -> Result<EdgeMap> {
    params.validate()?;
    let w = img.width() as usize;
    let h = img.height() as usize;

    let radius = math::ceil(3.0 * params.sigma) as i64;
    let (smooth, deriv) = gaussian_kernels(params.sigma, radius);

    // Separable passes: gx = d_x * g_y, gy = g_x * d_y.
    let src: Vec<f64> = img.pixels().iter().map(|&v| v as f64).collect();
    let tmp_x_d = convolve_rows(&src, w, h, &deriv);
    let tmp_x_s = convolve_rows(&src, w, h, &smooth);
    let gx = convolve_cols(&tmp_x_d, w, h, &smooth);
    let gy = convolve_cols(&tmp_x_s, w, h, &deriv);

    let mut mag = vec![0.0f64; w * h];
    for i in 0..w * h {
        mag[i] = math::hypot(gx[i], gy[i]);
    }

    let margin = radius as usize;
    let sample = |m: &[f64], x: f64, y: f64| -> f64 {
        // bilinear, clamped
        let x = x.clamp(0.0, (w - 1) as f64);
        let y = y.clamp(0.0, (h - 1) as f64);
        let x0 = math::floor(x) as usize;
        let y0 = math::floor(y) as usize;
        let x1 = (x0 + 1).min(w - 1);
        let y1 = (y0 + 1).min(h - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let a = m[y0 * w + x0] * (1.0 - fx) + m[y0 * w + x1] * fx;
        let b = m[y1 * w + x0] * (1.0 - fx) + m[y1 * w + x1] * fx;
        a * (1.0 - fy) + b * fy
    };

    // NMS across the gradient direction; at most one edge per pixel cell.
    let mut candidates: Vec<(usize, usize, OrientedEdge)> = Vec::new();
    let mut is_candidate = vec![false; w * h];
    if w > 2 * margin && h > 2 * margin {
        for y in margin..h - margin {
            for x in margin..w - margin {
                let i = y * w + x;
                let m0 = mag[i];
                if m0 < params.low_threshold {
                    continue;
                }
                let ux = gx[i] / m0;
                let uy = gy[i] / m0;
                let m_plus = sample(&mag, x as f64 + ux, y as f64 + uy);
                let m_minus = sample(&mag, x as f64 - ux, y as f64 - uy);
                if !(m0 >= m_plus && m0 > m_minus) {
                    continue;
                }
                // Parabolic subpixel refinement along the gradient.
                let denom = m_minus - 2.0 * m0 + m_plus;
                let offset = if denom < -1e-12 {
                    ((m_minus - m_plus) / (2.0 * denom)).clamp(-0.6, 0.6)
                } else {
                    0.0
                };
                let pos = Point2::new(x as f64 + offset * ux, y as f64 + offset * uy);
                let grad_dir = math::to_degrees(math::atan2(gy[i], gx[i]));
                let edge = OrientedEdge::new(pos, grad_dir, m0);
                is_candidate[i] = true;
                candidates.push((x, y, edge));
            }
        }
    }

    // Hysteresis: keep strong candidates and everything 8-connected to them.
    let mut keep = vec![false; w * h];
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for &(x, y, ref e) in &candidates {
        if e.strength >= params.high_threshold && !keep[y * w + x] {
            keep[y * w + x] = true;
            stack.push((x, y));
        }
    }
    while let Some((x, y)) = stack.pop() {
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let nx = x as i64 + dx;
                let ny = y as i64 + dy;
                if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                    continue;
                }
                let ni = ny as usize * w + nx as usize;
                if is_candidate[ni] && !keep[ni] {
                    keep[ni] = true;
                    stack.push((nx as usize, ny as usize));
                }
            }
        }
    }

    let edges: Vec<OrientedEdge> = candidates
        .into_iter()
        .filter(|&(x, y, _)| keep[y * w + x])
        .map(|(_, _, e)| e)
        .collect();
    EdgeMap::new(edges, img.width(), img.height())
}

// Gaussian smoothing kernel (unit sum) and its derivative (unit response to
// a slope-1 ramp).
fn gaussian_kernels(sigma: f64, radius: i64) -> (Vec<f64>, Vec<f64>) {
    let mut smooth = Vec::with_capacity((2 * radius + 1) as usize);
    let mut deriv = Vec::with_capacity((2 * radius + 1) as usize);
    for k in -radius..=radius {
        let x = k as f64;
        let g = math::exp(-x * x / (2.0 * sigma * sigma));
        smooth.push(g);
        deriv.push(-x / (sigma * sigma) * g);
    }
    let sum: f64 = smooth.iter().sum();
    for v in &mut smooth {
        *v /= sum;
    }
    // Normalize so convolving a ramp of slope 1 yields 1.
    let ramp: f64 = deriv
        .iter()
        .enumerate()
        .map(|(i, &d)| d * -((i as i64 - radius) as f64))
        .sum();
    for v in &mut deriv {
        *v /= ramp;
    }
    (smooth, deriv)
}

// Correlation along rows with clamped borders; kernel is centered.
fn convolve_rows(src: &[f64], w: usize, h: usize, kernel: &[f64]) -> Vec<f64> {
    let radius = (kernel.len() / 2) as i64;
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (ki, &kv) in kernel.iter().enumerate() {
                let sx = (x as i64 + ki as i64 - radius).clamp(0, w as i64 - 1) as usize;
                acc += row[sx] * kv;
            }
            out[y * w + x] = acc;
        }
    }
    out
}

fn convolve_cols(src: &[f64], w: usize, h: usize, kernel: &[f64]) -> Vec<f64> {
    let radius = (kernel.len() / 2) as i64;
    let mut out = vec![0.0; w * h];
    for x in 0..w {
        for y in 0..h {
            let mut acc = 0.0;
            for (ki, &kv) in kernel.iter().enumerate() {
                let sy = (y as i64 + ki as i64 - radius).clamp(0, h as i64 - 1) as usize;
                acc += src[sy * w + x] * kv;
            }
            out[y * w + x] = acc;
        }
    }
    out
}
