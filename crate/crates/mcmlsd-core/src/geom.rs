//! Geometry primitives shared by every stage: points, (rho, theta) lines,
//! segments, uniform point sampling and line/image clipping.
//!
//! A line is the set of points with `x*cos(theta) + y*sin(theta) = rho`,
//! with `theta` in degrees in `[0, 180)` and `rho` signed. Pixel centers sit
//! at integer coordinates, origin top-left, y growing downward.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        math::hypot(self.x - other.x, self.y - other.y)
    }
}

/// Line in normal form: `x*cos(theta) + y*sin(theta) = rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    /// Signed distance of the line from the origin, pixels.
    pub rho: f64,
    /// Normal angle in degrees, canonicalized to `[0, 180)`.
    pub theta_deg: f64,
}

impl Line {
    /// Builds a line, folding `theta` into `[0, 180)` with the matching
    /// sign flip on `rho`.
    pub fn new(rho: f64, theta_deg: f64) -> Self {
        let mut rho = rho;
        let mut theta = theta_deg % 360.0;
        if theta < 0.0 {
            theta += 360.0;
        }
        if theta >= 180.0 {
            theta -= 180.0;
            rho = -rho;
        }
        Line {
            rho,
            theta_deg: theta,
        }
    }

    /// Line through two distinct points.
    pub fn from_points(p1: Point2, p2: Point2) -> Self {
        let dx = p2.x - p1.x;
        let dy = p2.y - p1.y;
        // Tangent angle of the direction, folded to [0, 180); the normal is
        // tangent + 90 degrees.
        let tangent = math::to_degrees(math::atan2(dy, dx));
        let theta = tangent + 90.0;
        let (s, c) = Self::sin_cos_of(theta);
        Line::new(p1.x * c + p1.y * s, theta)
    }

    fn sin_cos_of(theta_deg: f64) -> (f64, f64) {
        let r = math::to_radians(theta_deg);
        (math::sin(r), math::cos(r))
    }

    /// `(sin, cos)` of the normal angle.
    pub fn sin_cos(&self) -> (f64, f64) {
        Self::sin_cos_of(self.theta_deg)
    }

    /// Unit direction along the line: `(-sin, cos)` of the normal angle.
    pub fn direction(&self) -> (f64, f64) {
        let (s, c) = self.sin_cos();
        (-s, c)
    }

    /// Point on the line at arc-length coordinate `t`, measured from the
    /// foot of the perpendicular from the origin.
    pub fn point_at(&self, t: f64) -> Point2 {
        let (s, c) = self.sin_cos();
        Point2::new(self.rho * c - t * s, self.rho * s + t * c)
    }

    /// Absolute angular deviation between this line's orientation and
    /// `other_theta_deg`, folded into `[0, 90]`.
    pub fn angular_deviation(&self, other_theta_deg: f64) -> f64 {
        fold_angle_deviation(self.theta_deg, other_theta_deg)
    }
}

/// |a - b| folded modulo 180 into [0, 90], for undirected orientations.
pub fn fold_angle_deviation(a_deg: f64, b_deg: f64) -> f64 {
    let mut d = math::abs(a_deg - b_deg) % 180.0;
    if d > 90.0 {
        d = 180.0 - d;
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSegment {
    pub p1: Point2,
    pub p2: Point2,
}

impl LineSegment {
    pub fn new(p1: Point2, p2: Point2) -> Self {
        LineSegment { p1, p2 }
    }

    pub fn length(&self) -> f64 {
        self.p1.distance(&self.p2)
    }

    /// Infinite line carrying this segment.
    pub fn line(&self) -> Line {
        Line::from_points(self.p1, self.p2)
    }

    /// Euclidean distance from `p` to the segment (not its carrier line).
    pub fn distance_to_point(&self, p: &Point2) -> f64 {
        let dx = self.p2.x - self.p1.x;
        let dy = self.p2.y - self.p1.y;
        let len2 = dx * dx + dy * dy;
        if len2 == 0.0 {
            return self.p1.distance(p);
        }
        let u = ((p.x - self.p1.x) * dx + (p.y - self.p1.y) * dy) / len2;
        let u = u.clamp(0.0, 1.0);
        let proj = Point2::new(self.p1.x + u * dx, self.p1.y + u * dy);
        proj.distance(p)
    }
}

/// Unsigned orthogonal distance from `p` to line `l`, pixels.
pub fn point_line_distance(p: &Point2, l: &Line) -> f64 {
    let (s, c) = l.sin_cos();
    math::abs(p.x * c + p.y * s - l.rho)
}

/// Signed arc-length coordinate of the orthogonal projection of `p` onto
/// `l`, along the unit direction `(-sin, cos)`.
pub fn project_onto_line(p: &Point2, l: &Line) -> f64 {
    let (s, c) = l.sin_cos();
    -p.x * s + p.y * c
}

/// Uniformly spaced points along `s`, starting at `p1`; the last point lies
/// within `spacing` of `p2`. Count is `floor(length / spacing) + 1`.
pub fn segment_sample_points(s: &LineSegment, spacing: f64) -> Result<Vec<Point2>> {
    if !(spacing > 0.0) {
        return Err(Error::InvalidArgument("sample spacing must be positive"));
    }
    let len = s.length();
    let n = math::floor(len / spacing) as usize + 1;
    let (ux, uy) = if len > 0.0 {
        ((s.p2.x - s.p1.x) / len, (s.p2.y - s.p1.y) / len)
    } else {
        (0.0, 0.0)
    };
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 * spacing;
        out.push(Point2::new(s.p1.x + t * ux, s.p1.y + t * uy));
    }
    Ok(out)
}

/// Arc-length range `[t_min, t_max]` of the chord of `l` clipped to the
/// pixel-center rectangle `[0, width-1] x [0, height-1]`, or `None` if the
/// line misses the rectangle.
pub fn line_image_t_range(l: &Line, width: u32, height: u32) -> Option<(f64, f64)> {
    let (s, c) = l.sin_cos();
    // point_at(t) = (rho*c - t*s, rho*s + t*c); clip each coordinate.
    let mut t_min = f64::NEG_INFINITY;
    let mut t_max = f64::INFINITY;
    let clip =
        |t_min: &mut f64, t_max: &mut f64, coeff: f64, base: f64, lo: f64, hi: f64| -> bool {
            // lo <= base + coeff * t <= hi
            if math::abs(coeff) < 1e-12 {
                return base >= lo - 1e-9 && base <= hi + 1e-9;
            }
            let a = (lo - base) / coeff;
            let b = (hi - base) / coeff;
            let (a, b) = if a <= b { (a, b) } else { (b, a) };
            *t_min = t_min.max(a);
            *t_max = t_max.min(b);
            true
        };
    let w = (width - 1) as f64;
    let h = (height - 1) as f64;
    if !clip(&mut t_min, &mut t_max, -s, l.rho * c, 0.0, w) {
        return None;
    }
    if !clip(&mut t_min, &mut t_max, c, l.rho * s, 0.0, h) {
        return None;
    }
    if t_min > t_max {
        None
    } else {
        Some((t_min, t_max))
    }
}

/// Maximal chord of `l` inside the image rectangle, endpoints ordered
/// lexicographically by `(x, y)`. `None` when the line misses the image or
/// touches it in a single point.
pub fn line_to_image_span(l: &Line, width: u32, height: u32) -> Option<LineSegment> {
    let (t0, t1) = line_image_t_range(l, width, height)?;
    if t1 - t0 <= 1e-9 {
        return None;
    }
    let a = l.point_at(t0);
    let b = l.point_at(t1);
    let (p1, p2) = if (a.x, a.y) <= (b.x, b.y) {
        (a, b)
    } else {
        (b, a)
    };
    Some(LineSegment::new(p1, p2))
}
