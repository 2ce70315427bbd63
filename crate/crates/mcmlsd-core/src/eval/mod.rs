//! Segment-level detector evaluation: uniform 1-px point sampling, greedy
//! bipartite point matching under a distance threshold, Hungarian 1:1
//! segment association, and recall/precision as a function of the number
//! of top-ranked segments.
//!
//! Two modes are provided. The strict mode enforces 1:1 matching at both
//! the point and the segment level, penalizing over- and
//! under-segmentation. The relaxed pixel-level mode counts any detector
//! point within the threshold of any ground-truth segment as a hit, with
//! no 1:1 constraints, matching the procedure used by recent
//! deep-detector papers.

mod hungarian;

pub use hungarian::max_weight_assignment;

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geom::{segment_sample_points, LineSegment, Point2};
use crate::math;

/// Default association threshold: two lines with less than a one-pixel
/// gap can land within 2*sqrt(2) px of each other.
pub const DEFAULT_THRESHOLD: f64 = 2.0 * core::f64::consts::SQRT_2;

/// Point sample spacing along segments, pixels.
pub const SAMPLE_SPACING: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// 1:1 point matching constrained to a 1:1 segment assignment.
    SegmentOneToOne,
    /// Unconstrained point-to-segment hits.
    PixelLevel,
}

/// An ordered collection of segments; order is rank for detector output.
#[derive(Debug, Clone)]
pub struct SegmentSet {
    pub segments: Vec<LineSegment>,
    pub width: u32,
    pub height: u32,
}

impl SegmentSet {
    /// Builds the set, clamping endpoints to the image rectangle. Returns
    /// the number of segments that needed clamping so callers can warn.
    pub fn new(segments: Vec<LineSegment>, width: u32, height: u32) -> Result<(Self, usize)> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument("image dimensions must be positive"));
        }
        let w = (width - 1) as f64;
        let h = (height - 1) as f64;
        let mut clamped = 0usize;
        let segments = segments
            .into_iter()
            .map(|s| {
                let c = |p: Point2| Point2::new(p.x.clamp(0.0, w), p.y.clamp(0.0, h));
                let cs = LineSegment::new(c(s.p1), c(s.p2));
                if cs != s {
                    clamped += 1;
                }
                cs
            })
            .collect();
        Ok((
            SegmentSet {
                segments,
                width,
                height,
            },
            clamped,
        ))
    }

    pub fn top_k(&self, k: usize) -> SegmentSet {
        SegmentSet {
            segments: self.segments[..k.min(self.segments.len())].to_vec(),
            width: self.width,
            height: self.height,
        }
    }
}

/// Point samples of a segment set, remembering which segment each point
/// came from.
#[derive(Debug, Clone)]
pub struct SampledPoints {
    pub points: Vec<Point2>,
    /// Index of the owning segment per point.
    pub seg_of: Vec<u32>,
    pub seg_count: usize,
}

pub fn sample_segment_set(set: &SegmentSet) -> SampledPoints {
    let mut points = Vec::new();
    let mut seg_of = Vec::new();
    for (i, s) in set.segments.iter().enumerate() {
        let pts = segment_sample_points(s, SAMPLE_SPACING).expect("positive spacing");
        for p in pts {
            points.push(p);
            seg_of.push(i as u32);
        }
    }
    SampledPoints {
        points,
        seg_of,
        seg_count: set.segments.len(),
    }
}

/// Near-optimal 1:1 point matching: candidate pairs within `threshold`
/// are accepted greedily by ascending distance (ties by gt index, then
/// detector index), using each point at most once.
pub fn greedy_point_match(
    gt_points: &[Point2],
    det_points: &[Point2],
    threshold: f64,
) -> Result<Vec<(usize, usize)>> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidArgument("match threshold must be positive"));
    }
    // Bucket detector points on a threshold-sized grid so candidate
    // gathering stays near-linear.
    let cell = threshold;
    let key = |p: &Point2| {
        (
            math::floor(p.x / cell) as i64,
            math::floor(p.y / cell) as i64,
        )
    };
    let mut grid: alloc::collections::BTreeMap<(i64, i64), Vec<usize>> =
        alloc::collections::BTreeMap::new();
    for (i, p) in det_points.iter().enumerate() {
        grid.entry(key(p)).or_default().push(i);
    }

    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (g, gp) in gt_points.iter().enumerate() {
        let (cx, cy) = key(gp);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(bucket) = grid.get(&(cx + dx, cy + dy)) {
                    for &d in bucket {
                        let dist = gp.distance(&det_points[d]);
                        if dist <= threshold {
                            candidates.push((dist, g, d));
                        }
                    }
                }
            }
        }
    }
    candidates.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));

    let mut gt_used = vec![false; gt_points.len()];
    let mut det_used = vec![false; det_points.len()];
    let mut out = Vec::new();
    for (_, g, d) in candidates {
        if !gt_used[g] && !det_used[d] {
            gt_used[g] = true;
            det_used[d] = true;
            out.push((g, d));
        }
    }
    Ok(out)
}

/// 1:1 segment association maximizing the number of matched points.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    /// (gt segment, det segment, matched point count) per assigned pair.
    pub assignment: Vec<(usize, usize, usize)>,
    pub gt_points: usize,
    pub det_points: usize,
    /// Point pairs lying on assigned segment pairs.
    pub matched_points: usize,
}

/// Builds the per-segment-pair weight matrix from accepted point pairs and
/// solves the maximum-weight 1:1 assignment exactly.
pub fn segment_association(
    gt: &SampledPoints,
    det: &SampledPoints,
    point_matches: &[(usize, usize)],
) -> MatchResult {
    let mut weights = vec![vec![0i64; det.seg_count]; gt.seg_count];
    for &(g, d) in point_matches {
        weights[gt.seg_of[g] as usize][det.seg_of[d] as usize] += 1;
    }
    let assignment_pairs = if gt.seg_count > 0 && det.seg_count > 0 {
        max_weight_assignment(&weights)
    } else {
        Vec::new()
    };
    let mut matched_points = 0usize;
    let assignment: Vec<(usize, usize, usize)> = assignment_pairs
        .into_iter()
        .map(|(g, d)| {
            let w = weights[g][d] as usize;
            matched_points += w;
            (g, d, w)
        })
        .collect();
    MatchResult {
        assignment,
        gt_points: gt.points.len(),
        det_points: det.points.len(),
        matched_points,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    /// Number of top-ranked detector segments used.
    pub k: usize,
    pub recall: f64,
    pub precision: f64,
    /// Total length of the k segments, pixels.
    pub total_length: f64,
}

/// Evaluates the top-`k` detector segments against ground truth. The
/// returned flag is true when `k` exceeded the number of detections.
pub fn evaluate_at_k(
    gt: &SegmentSet,
    det: &SegmentSet,
    k: usize,
    threshold: f64,
    mode: EvalMode,
) -> Result<(CurvePoint, bool)> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1"));
    }
    if !(threshold > 0.0) {
        return Err(Error::InvalidArgument("match threshold must be positive"));
    }
    let saturated = k > det.segments.len();
    let top = det.top_k(k);
    let total_length: f64 = top.segments.iter().map(|s| s.length()).sum();

    let gt_samples = sample_segment_set(gt);
    let det_samples = sample_segment_set(&top);

    let (recall, precision) = match mode {
        EvalMode::SegmentOneToOne => {
            let matches = greedy_point_match(&gt_samples.points, &det_samples.points, threshold)?;
            let result = segment_association(&gt_samples, &det_samples, &matches);
            let recall = if result.gt_points > 0 {
                result.matched_points as f64 / result.gt_points as f64
            } else {
                0.0
            };
            let precision = if result.det_points > 0 {
                result.matched_points as f64 / result.det_points as f64
            } else {
                0.0
            };
            (recall, precision)
        }
        EvalMode::PixelLevel => {
            let hit = |p: &Point2, segs: &[LineSegment]| {
                segs.iter().any(|s| s.distance_to_point(p) <= threshold)
            };
            let recalled = gt_samples
                .points
                .iter()
                .filter(|p| hit(p, &top.segments))
                .count();
            let hits = det_samples
                .points
                .iter()
                .filter(|p| hit(p, &gt.segments))
                .count();
            let recall = if gt_samples.points.is_empty() {
                0.0
            } else {
                recalled as f64 / gt_samples.points.len() as f64
            };
            let precision = if det_samples.points.is_empty() {
                0.0
            } else {
                hits as f64 / det_samples.points.len() as f64
            };
            (recall, precision)
        }
    };

    Ok((
        CurvePoint {
            k,
            recall,
            precision,
            total_length,
        },
        saturated,
    ))
}

/// Default evaluation grid: k = 10, 20, ..., 500.
pub fn default_k_grid() -> Vec<usize> {
    (1..=50).map(|i| i * 10).collect()
}

pub fn compute_curves(
    gt: &SegmentSet,
    det: &SegmentSet,
    k_values: &[usize],
    threshold: f64,
    mode: EvalMode,
) -> Result<Vec<CurvePoint>> {
    if k_values.is_empty() {
        return Err(Error::InvalidArgument("k grid must be non-empty"));
    }
    if k_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("k grid must be strictly ascending"));
    }
    k_values
        .iter()
        .map(|&k| evaluate_at_k(gt, det, k, threshold, mode).map(|(cp, _)| cp))
        .collect()
}

/// Reorders detector segments by ground-truth precision after a full
/// segment-1:1 association (ties by descending length), the upper bound a
/// perfect ranker could reach.
pub fn oracle_rank(gt: &SegmentSet, det: &SegmentSet, threshold: f64) -> Result<SegmentSet> {
    let gt_samples = sample_segment_set(gt);
    let det_samples = sample_segment_set(det);
    let matches = greedy_point_match(&gt_samples.points, &det_samples.points, threshold)?;
    let result = segment_association(&gt_samples, &det_samples, &matches);

    let mut point_count = vec![0usize; det.segments.len()];
    for &s in &det_samples.seg_of {
        point_count[s as usize] += 1;
    }
    let mut matched = vec![0usize; det.segments.len()];
    for &(_, d, w) in &result.assignment {
        matched[d] = w;
    }
    let mut order: Vec<usize> = (0..det.segments.len()).collect();
    order.sort_by(|&a, &b| {
        let pa = matched[a] as f64 / point_count[a].max(1) as f64;
        let pb = matched[b] as f64 / point_count[b].max(1) as f64;
        let la = det.segments[a].length();
        let lb = det.segments[b].length();
        (pb, lb).partial_cmp(&(pa, la)).expect("finite keys")
    });
    Ok(SegmentSet {
        segments: order.iter().map(|&i| det.segments[i]).collect(),
        width: det.width,
        height: det.height,
    })
}
