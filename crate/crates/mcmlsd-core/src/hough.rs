//! Probabilistic Hough accumulation over (rho, theta) with per-edge
//! Gaussian uncertainty spreading, and sequential line extraction with
//! exact vote subtraction.
//!
//! Each edge distributes a unit vote mass over a window of theta bins
//! around its tangent orientation and, per theta, a window of rho bins
//! around `rho(edge, theta)`. Every contribution is recorded so that when a
//! peak is visited its supporting edges can be subtracted exactly, which
//! keeps the map consistent with the set of edges not yet claimed.

use alloc::vec;
use alloc::vec::Vec;

use crate::edge::{EdgeMap, OrientedEdge};
use crate::error::{Error, Result};
use crate::geom::{self, Line};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoughParams {
    /// Rho resolution, pixels per bin.
    pub delta_rho: f64,
    /// Theta resolution, degrees per bin.
    pub delta_theta: f64,
    /// Positional vote-spreading sigma, pixels.
    pub sigma_pos: f64,
    /// Orientation vote-spreading sigma, degrees.
    pub sigma_theta: f64,
    /// Cap on the number of extracted lines.
    pub max_lines: usize,
    /// Peak values below this stop extraction, vote-mass units.
    pub min_peak: f64,
    /// Orthogonal distance within which a peak claims edges, pixels. Wide
    /// enough to swallow both gradient flanks of a thin ridge so a stroke
    /// yields one line, not two.
    pub claim_radius: f64,
}

impl Default for HoughParams {
    fn default() -> Self {
        HoughParams {
            delta_rho: 0.4,
            delta_theta: 0.46,
            sigma_pos: 0.5,
            sigma_theta: 3.0,
            max_lines: 500,
            min_peak: 1.0,
            claim_radius: 2.5,
        }
    }
}

impl HoughParams {
    fn validate(&self) -> Result<()> {
        if !(self.delta_rho > 0.0
            && self.delta_theta > 0.0
            && self.sigma_pos > 0.0
            && self.sigma_theta > 0.0
            && self.claim_radius > 0.0)
        {
            return Err(Error::InvalidArgument(
                "hough resolutions and sigmas must be positive",
            ));
        }
        if self.max_lines == 0 {
            return Err(Error::InvalidArgument("max_lines must be at least 1"));
        }
        Ok(())
    }
}

/// One line returned by sequential peak extraction.
#[derive(Debug, Clone)]
pub struct DetectedLine {
    pub line: Line,
    /// Accumulator value at the peak bin before subtraction.
    pub peak_value: f64,
    /// Edges claimed by this peak (within the claim radius and the
    /// angular gate).
    pub supporting_edges: Vec<OrientedEdge>,
    /// Indices of the supporting edges in the accumulation edge map.
    pub supporting_indices: Vec<u32>,
}

/// (rho, theta) accumulator with per-edge vote records.
///
/// `extract_next_line` mutates the map; it must be externally serialized.
#[derive(Debug, Clone)]
pub struct HoughMap {
    bins: Vec<f64>,
    rho_bins: usize,
    theta_bins: usize,
    rho_min: f64,
    delta_rho: f64,
    delta_theta: f64,
    /// Per-edge (bin, weight) contributions, in accumulation edge order.
    vote_records: Vec<Vec<(u32, f64)>>,
    /// Edges not yet claimed by a peak.
    active: Vec<bool>,
}

impl HoughMap {
    pub fn theta_bins(&self) -> usize {
        self.theta_bins
    }

    pub fn rho_bins(&self) -> usize {
        self.rho_bins
    }

    pub fn rho_min(&self) -> f64 {
        self.rho_min
    }

    pub fn delta_rho(&self) -> f64 {
        self.delta_rho
    }

    pub fn delta_theta(&self) -> f64 {
        self.delta_theta
    }

    /// Accumulator contents, theta-major: `bins[t * rho_bins + r]`.
    pub fn bins(&self) -> &[f64] {
        &self.bins
    }

    pub fn total_mass(&self) -> f64 {
        self.bins.iter().sum()
    }

    pub fn active_edge_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    fn bin_center(&self, t_idx: usize, r_idx: usize) -> (f64, f64) {
        (
            self.rho_min + (r_idx as f64 + 0.5) * self.delta_rho,
            (t_idx as f64 + 0.5) * self.delta_theta,
        )
    }
}

/// Builds the Hough map from every edge in `em`. Accumulation order is the
/// map's edge order, so the result is deterministic.
pub fn accumulate(em: &EdgeMap, p: &HoughParams) -> Result<HoughMap> {
    p.validate()?;
    let diag = math::hypot(em.width() as f64 - 1.0, em.height() as f64 - 1.0);
    let rho_min = -diag;
    let rho_bins = (math::ceil(2.0 * diag / p.delta_rho) as usize).max(1) + 1;
    let theta_bins = (math::ceil(180.0 / p.delta_theta) as usize).max(1);

    let mut map = HoughMap {
        bins: vec![0.0; rho_bins * theta_bins],
        rho_bins,
        theta_bins,
        rho_min,
        delta_rho: p.delta_rho,
        delta_theta: p.delta_theta,
        vote_records: Vec::with_capacity(em.len()),
        active: vec![true; em.len()],
    };

    let theta_reach = math::ceil(3.0 * p.sigma_theta / p.delta_theta) as i64;
    let rho_reach = math::ceil(3.0 * p.sigma_pos / p.delta_rho) as i64;

    for e in em.edges() {
        let mut record: Vec<(u32, f64)> = Vec::new();
        let center_t = ((e.theta_deg / p.delta_theta) - 0.5) as i64;
        for dt in -theta_reach..=theta_reach {
            let raw_t = center_t + dt;
            // wrap theta with the rho sign flip handled by evaluating
            // rho at the wrapped bin's actual angle
            let (t_idx, _flips) = wrap_theta_bin(raw_t, theta_bins);
            let theta_c = (t_idx as f64 + 0.5) * p.delta_theta;
            let dev = geom::fold_angle_deviation(theta_c, e.theta_deg);
            if dev > 3.0 * p.sigma_theta {
                continue;
            }
            let w_theta = math::exp(-dev * dev / (2.0 * p.sigma_theta * p.sigma_theta));
            let rad = math::to_radians(theta_c);
            let rho_c = e.pos.x * math::cos(rad) + e.pos.y * math::sin(rad);
            let center_r = math::floor((rho_c - rho_min) / p.delta_rho) as i64;
            for dr in -rho_reach..=rho_reach {
                let r_idx = center_r + dr;
                if r_idx < 0 || r_idx >= rho_bins as i64 {
                    continue;
                }
                let rho_bin = rho_min + (r_idx as f64 + 0.5) * p.delta_rho;
                let drho = rho_bin - rho_c;
                if math::abs(drho) > 3.0 * p.sigma_pos {
                    continue;
                }
                let w = w_theta * math::exp(-drho * drho / (2.0 * p.sigma_pos * p.sigma_pos));
                record.push(((t_idx * rho_bins + r_idx as usize) as u32, w));
            }
        }
        let total: f64 = record.iter().map(|&(_, w)| w).sum();
        if total > 0.0 {
            for r in &mut record {
                r.1 /= total;
            }
        }
        for &(bin, w) in &record {
            map.bins[bin as usize] += w;
        }
        map.vote_records.push(record);
    }
    Ok(map)
}

fn wrap_theta_bin(raw: i64, theta_bins: usize) -> (usize, bool) {
    let n = theta_bins as i64;
    let mut t = raw % n;
    let mut flips = false;
    if t < 0 {
        t += n;
        flips = true;
    } else if raw >= n {
        flips = true;
    }
    (t as usize, flips)
}

/// Finds the global maximum peak, refines it by the weighted centroid of
/// its 3x3 bin neighborhood, claims the supporting edges and subtracts
/// their recorded votes. Returns `None` once no peak reaches `min_peak`.
pub fn extract_next_line(hm: &mut HoughMap, em: &EdgeMap, p: &HoughParams) -> Option<DetectedLine> {
    loop {
        let (peak_idx, peak_value) = argmax(&hm.bins)?;
        if peak_value < p.min_peak {
            return None;
        }
        let t_idx = peak_idx / hm.rho_bins;
        let r_idx = peak_idx % hm.rho_bins;

        // 3x3 weighted centroid; theta wraps with a rho flip, rho clamps.
        let mut sum_w = 0.0;
        let mut sum_rho = 0.0;
        let mut sum_theta = 0.0;
        let (_, peak_theta) = hm.bin_center(t_idx, r_idx);
        for dt in -1i64..=1 {
            let (nt, flips) = wrap_theta_bin(t_idx as i64 + dt, hm.theta_bins);
            for dr in -1i64..=1 {
                let nr = r_idx as i64 + dr;
                if nr < 0 || nr >= hm.rho_bins as i64 {
                    continue;
                }
                // with a theta wrap the same line appears at -rho
                let eff_r = if flips {
                    let rho_here = hm.rho_min + (nr as f64 + 0.5) * hm.delta_rho;
                    let mirrored =
                        math::round((-rho_here - hm.rho_min) / hm.delta_rho - 0.5) as i64;
                    if mirrored < 0 || mirrored >= hm.rho_bins as i64 {
                        continue;
                    }
                    mirrored as usize
                } else {
                    nr as usize
                };
                let w = hm.bins[nt * hm.rho_bins + eff_r].max(0.0);
                let (rho_c, _) = hm.bin_center(t_idx, nr as usize);
                let theta_c = peak_theta + dt as f64 * hm.delta_theta;
                sum_w += w;
                sum_rho += w * rho_c;
                sum_theta += w * theta_c;
            }
        }
        let (rho_refined, theta_refined) = if sum_w > 0.0 {
            (sum_rho / sum_w, sum_theta / sum_w)
        } else {
            hm.bin_center(t_idx, r_idx)
        };
        let line = Line::new(rho_refined, theta_refined);

        // Supporting edges: active, within the claim radius of the refined
        // line and within the angular gate.
        let candidates = em
            .indices_near_line(&line, p.claim_radius)
            .expect("positive halfwidth");
        let mut support: Vec<u32> = Vec::new();
        for idx in candidates {
            if !hm.active[idx as usize] {
                continue;
            }
            let e = &em.edges()[idx as usize];
            if line.angular_deviation(e.theta_deg) <= 3.0 * p.sigma_theta {
                support.push(idx);
            }
        }

        if support.is_empty() {
            // Nothing left to claim under this peak; flatten it so
            // extraction makes progress.
            for dt in -1i64..=1 {
                let (nt, _) = wrap_theta_bin(t_idx as i64 + dt, hm.theta_bins);
                for dr in -1i64..=1 {
                    let nr = r_idx as i64 + dr;
                    if nr >= 0 && nr < hm.rho_bins as i64 {
                        hm.bins[nt * hm.rho_bins + nr as usize] = 0.0;
                    }
                }
            }
            continue;
        }

        for &idx in &support {
            hm.active[idx as usize] = false;
            for &(bin, w) in &hm.vote_records[idx as usize] {
                let v = &mut hm.bins[bin as usize];
                *v -= w;
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
        }

        // Polish (rho, theta) with a total-least-squares fit of the
        // claimed support: the Hough ridge of a thin stroke peaks on one
        // gradient flank, while the fit recovers the stroke centre.
        let line = fit_support_line(em, &support).unwrap_or(line);

        let supporting_edges = support.iter().map(|&i| em.edges()[i as usize]).collect();
        return Some(DetectedLine {
            line,
            peak_value,
            supporting_edges,
            supporting_indices: support,
        });
    }
}

/// Sequential extraction until exhaustion or `max_lines`.
pub fn detect_lines(em: &EdgeMap, p: &HoughParams) -> Result<Vec<DetectedLine>> {
    let mut hm = accumulate(em, p)?;
    let mut out = Vec::new();
    while out.len() < p.max_lines {
        match extract_next_line(&mut hm, em, p) {
            Some(l) => out.push(l),
            None => break,
        }
    }
    Ok(out)
}

// Strength-weighted total-least-squares line through the support set.
// Degenerate sets (fewer than two edges, or all at one point) yield None.
fn fit_support_line(em: &EdgeMap, support: &[u32]) -> Option<Line> {
    if support.len() < 2 {
        return None;
    }
    let mut sw = 0.0;
    let mut mx = 0.0;
    let mut my = 0.0;
    for &i in support {
        let e = &em.edges()[i as usize];
        sw += e.strength;
        mx += e.strength * e.pos.x;
        my += e.strength * e.pos.y;
    }
    if sw <= 0.0 {
        return None;
    }
    mx /= sw;
    my /= sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for &i in support {
        let e = &em.edges()[i as usize];
        let dx = e.pos.x - mx;
        let dy = e.pos.y - my;
        sxx += e.strength * dx * dx;
        sxy += e.strength * dx * dy;
        syy += e.strength * dy * dy;
    }
    if sxx + syy <= 1e-12 {
        return None;
    }
    // principal axis of the scatter = tangent direction of the fit
    let tangent = 0.5 * math::atan2(2.0 * sxy, sxx - syy);
    let theta = math::to_degrees(tangent) + 90.0;
    let rho = mx * math::cos(math::to_radians(theta)) + my * math::sin(math::to_radians(theta));
    Some(Line::new(rho, theta))
}

fn argmax(bins: &[f64]) -> Option<(usize, f64)> {
    let mut best = None;
    let mut best_v = f64::NEG_INFINITY;
    for (i, &v) in bins.iter().enumerate() {
        if v > best_v {
            best_v = v;
            best = Some(i);
        }
    }
    best.map(|i| (i, best_v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point2;

    fn line_edges(x: f64, y0: usize, n: usize, theta: f64) -> Vec<OrientedEdge> {
        (0..n)
            .map(|i| OrientedEdge::new(Point2::new(x, (y0 + i) as f64), theta, 10.0))
            .collect()
    }

    #[test]
    fn empty_map_is_all_zero() {
        let em = EdgeMap::new(vec![], 100, 100).unwrap();
        let hm = accumulate(&em, &HoughParams::default()).unwrap();
        assert_eq!(hm.total_mass(), 0.0);
    }

    #[test]
    fn single_edge_has_unit_mass() {
        let em = EdgeMap::new(
            vec![OrientedEdge::new(Point2::new(40.0, 40.0), 30.0, 5.0)],
            100,
            100,
        )
        .unwrap();
        let hm = accumulate(&em, &HoughParams::default()).unwrap();
        assert!((hm.total_mass() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn synthetic_line_peaks_at_its_parameters() {
        let em = EdgeMap::new(line_edges(50.0, 0, 200, 0.0), 100, 210).unwrap();
        let p = HoughParams::default();
        let hm = accumulate(&em, &p).unwrap();
        let (idx, _) = argmax(hm.bins()).unwrap();
        let t_idx = idx / hm.rho_bins();
        let r_idx = idx % hm.rho_bins();
        let (rho_c, theta_c) = hm.bin_center(t_idx, r_idx);
        // theta 0 sits at the wrap seam; the peak may land on either side,
        // where the same line reads (-rho, theta + 180).
        let rho_folded = if theta_c > 90.0 { -rho_c } else { rho_c };
        assert!((rho_folded - 50.0).abs() <= p.delta_rho, "rho_c = {rho_c}");
        assert!(
            geom::fold_angle_deviation(theta_c, 0.0) <= p.delta_theta,
            "theta_c = {theta_c}"
        );
    }

    #[test]
    fn exhausted_on_empty_map() {
        let em = EdgeMap::new(vec![], 100, 100).unwrap();
        let p = HoughParams::default();
        let mut hm = accumulate(&em, &p).unwrap();
        assert!(extract_next_line(&mut hm, &em, &p).is_none());
    }

    #[test]
    fn two_lines_extracted_in_significance_order() {
        let mut edges = line_edges(30.0, 0, 200, 0.0);
        edges.extend(line_edges(70.0, 0, 100, 0.0));
        let em = EdgeMap::new(edges, 120, 210).unwrap();
        let p = HoughParams::default();
        let mut hm = accumulate(&em, &p).unwrap();

        let first = extract_next_line(&mut hm, &em, &p).unwrap();
        assert!(
            (first.line.rho.abs() - 30.0).abs() < 1.0,
            "{:?}",
            first.line
        );
        assert!(first.supporting_edges.len() >= 190);

        let second = extract_next_line(&mut hm, &em, &p).unwrap();
        assert!(
            (second.line.rho.abs() - 70.0).abs() < 1.0,
            "{:?}",
            second.line
        );
        assert!(second.peak_value <= first.peak_value);

        assert!(extract_next_line(&mut hm, &em, &p).is_none());
    }

    #[test]
    fn subtraction_equals_rebuild() {
        let mut edges = line_edges(30.0, 0, 200, 0.0);
        edges.extend(line_edges(70.0, 0, 100, 0.0));
        let em = EdgeMap::new(edges, 120, 210).unwrap();
        let p = HoughParams::default();
        let mut hm = accumulate(&em, &p).unwrap();
        let first = extract_next_line(&mut hm, &em, &p).unwrap();

        let remaining = em.without_indices(&first.supporting_indices);
        let rebuilt = accumulate(&remaining, &p).unwrap();
        for (a, b) in hm.bins().iter().zip(rebuilt.bins()) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn mass_conservation_after_extraction() {
        let mut edges = line_edges(30.0, 0, 200, 0.0);
        edges.extend(line_edges(70.0, 0, 100, 0.0));
        let em = EdgeMap::new(edges, 120, 210).unwrap();
        let p = HoughParams::default();
        let mut hm = accumulate(&em, &p).unwrap();
        assert!((hm.total_mass() - 300.0).abs() < 1e-6);
        let _ = extract_next_line(&mut hm, &em, &p).unwrap();
        assert!(
            (hm.total_mass() - hm.active_edge_count() as f64).abs() < 1e-6,
            "mass {} vs active {}",
            hm.total_mass(),
            hm.active_edge_count()
        );
    }

    #[test]
    fn detect_lines_respects_cap_and_order() {
        let mut edges = line_edges(20.0, 0, 150, 0.0);
        edges.extend(line_edges(60.0, 0, 120, 0.0));
        edges.extend(line_edges(100.0, 0, 90, 0.0));
        let em = EdgeMap::new(edges, 150, 160).unwrap();

        let p = HoughParams::default();
        let lines = detect_lines(&em, &p).unwrap();
        assert_eq!(lines.len(), 3);
        for w in lines.windows(2) {
            assert!(w[0].peak_value >= w[1].peak_value);
        }

        let capped = HoughParams {
            max_lines: 2,
            ..HoughParams::default()
        };
        assert_eq!(detect_lines(&em, &capped).unwrap().len(), 2);
    }

    #[test]
    fn no_edge_claimed_twice() {
        let mut edges = line_edges(30.0, 0, 200, 0.0);
        edges.extend(line_edges(33.0, 0, 150, 0.0));
        let em = EdgeMap::new(edges, 120, 210).unwrap();
        let p = HoughParams::default();
        let lines = detect_lines(&em, &p).unwrap();
        let mut seen = alloc::collections::BTreeSet::new();
        for l in &lines {
            for &i in &l.supporting_indices {
                assert!(seen.insert(i), "edge {i} claimed twice");
            }
        }
    }

    #[test]
    fn determinism() {
        let mut edges = line_edges(30.0, 0, 80, 0.0);
        edges.extend(line_edges(70.0, 0, 60, 0.0));
        let em = EdgeMap::new(edges, 120, 100).unwrap();
        let p = HoughParams::default();
        let a = detect_lines(&em, &p).unwrap();
        let b = detect_lines(&em, &p).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.line.rho.to_bits(), y.line.rho.to_bits());
            assert_eq!(x.line.theta_deg.to_bits(), y.line.theta_deg.to_bits());
            assert_eq!(x.supporting_indices, y.supporting_indices);
        }
    }
}
