//! Per-line segment extraction as exact inference over a two-state Markov
//! chain, plus probabilistic segment ranking and model training.
//!
//! A detected line is sampled at every pixel within a two-pixel band; the
//! ordinal sampling by orthogonal projection defines the chain. Each sample
//! carries an observation: whether an edge occupies the pixel and, if so,
//! its angular deviation from the line. The MAP ON/OFF labelling is
//! computed by dynamic programming in O(N); maximal ON runs become
//! segments, ranked by one of four probabilistic criteria or by a logistic
//! combination with an appearance cue.

mod infer;
mod pipeline;
mod rank;
mod train;

pub use infer::{forward_backward, viterbi};
pub use pipeline::{extract_segments, remove_segment_edges, run_mcmlsd, McmlsdOutput, RunConfig};
pub use rank::{
    appearance_score, mean_marginal, rank2_score, rank_segment, ConfidenceGrid, LogisticRanker,
};
pub use train::{train_likelihoods, train_priors, train_rank2, LabeledImage, LabeledLine};

use alloc::vec::Vec;

use crate::edge::EdgeMap;
use crate::error::{Error, Result};
use crate::geom::{self, Line, LineSegment};
use crate::math;

/// Hidden segment state at one line position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum State {
    Off = 0,
    On = 1,
}

/// Observation attached to one band pixel, ordered along the line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservationSample {
    /// Arc-length position of the pixel's projection on the line.
    pub t: f64,
    /// Orthogonal distance of the pixel center from the line.
    pub d: f64,
    /// Whether an edge occupies this pixel.
    pub has_edge: bool,
    /// Angular deviation of that edge from the line, degrees in [0, 90].
    pub theta_dev: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineObservationSequence {
    pub line: Line,
    /// Samples sorted by `t` (ties: ascending `d`, then pixel y, x).
    pub samples: Vec<ObservationSample>,
}

impl LineObservationSequence {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Likelihoods p(e | state, d) and p(theta | state, e = 1).
///
/// The edge-presence likelihoods are histograms over distance bins; the
/// ON-state angular model is a uniform + half-normal mixture and the
/// OFF-state angular model a histogram. The defaults are hand-set
/// stand-ins with plausible shape; [`train_likelihoods`] is the
/// authoritative path when labelled data is available.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodModel {
    /// Distance bin edges, pixels; `p_edge_*` has one entry per bin.
    pub d_bin_edges: Vec<f64>,
    /// p(e = 1 | ON, d) per distance bin.
    pub p_edge_on: Vec<f64>,
    /// p(e = 1 | OFF, d) per distance bin.
    pub p_edge_off: Vec<f64>,
    /// Mixture weight of the uniform component of p(theta | ON, e = 1).
    pub ang_on_w_uniform: f64,
    /// Half-normal sigma of the Gaussian component, degrees.
    pub ang_on_sigma_deg: f64,
    /// Angular bin edges, degrees over [0, 90].
    pub ang_bin_edges: Vec<f64>,
    /// p(theta in bin | OFF, e = 1); sums to 1.
    pub ang_off: Vec<f64>,
}

impl Default for LikelihoodModel {
    fn default() -> Self {
        let ang_bins = 18;
        LikelihoodModel {
            d_bin_edges: alloc::vec![0.0, 0.5, 1.0, 1.5, 2.0],
            p_edge_on: alloc::vec![0.6, 0.45, 0.25, 0.12],
            p_edge_off: alloc::vec![0.05; 4],
            ang_on_w_uniform: 0.15,
            ang_on_sigma_deg: 2.0,
            ang_bin_edges: (0..=ang_bins).map(|i| i as f64 * 5.0).collect(),
            ang_off: alloc::vec![1.0 / ang_bins as f64; ang_bins],
        }
    }
}

impl LikelihoodModel {
    pub fn validate(&self) -> Result<()> {
        if self.d_bin_edges.len() != self.p_edge_on.len() + 1
            || self.p_edge_on.len() != self.p_edge_off.len()
        {
            return Err(Error::InvalidArgument("distance histogram shape mismatch"));
        }
        if self.ang_bin_edges.len() != self.ang_off.len() + 1 {
            return Err(Error::InvalidArgument("angular histogram shape mismatch"));
        }
        for &p in self.p_edge_on.iter().chain(&self.p_edge_off) {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::InvalidArgument(
                    "edge-presence probabilities must lie in (0, 1)",
                ));
            }
        }
        if !(self.ang_on_w_uniform >= 0.0 && self.ang_on_w_uniform <= 1.0) {
            return Err(Error::InvalidArgument("mixture weight must lie in [0, 1]"));
        }
        if !(self.ang_on_sigma_deg > 0.0) {
            return Err(Error::InvalidArgument("angular sigma must be positive"));
        }
        let sum: f64 = self.ang_off.iter().sum();
        if math::abs(sum - 1.0) > 1e-6 || self.ang_off.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::InvalidArgument(
                "OFF angular histogram must be positive and sum to 1",
            ));
        }
        Ok(())
    }

    fn d_bin(&self, d: f64) -> usize {
        let n = self.p_edge_on.len();
        let width = (self.d_bin_edges[n] - self.d_bin_edges[0]) / n as f64;
        let idx = math::floor((d - self.d_bin_edges[0]) / width) as i64;
        idx.clamp(0, n as i64 - 1) as usize
    }

    fn p_edge(&self, state: State, d: f64) -> f64 {
        let bin = self.d_bin(d);
        match state {
            State::On => self.p_edge_on[bin],
            State::Off => self.p_edge_off[bin],
        }
    }

    /// Angular density in per-degree units over [0, 90].
    fn ang_density(&self, state: State, theta_dev: f64) -> f64 {
        match state {
            State::On => {
                let sigma = self.ang_on_sigma_deg;
                let gauss = math::sqrt(2.0 / math::PI) / sigma
                    * math::exp(-theta_dev * theta_dev / (2.0 * sigma * sigma));
                self.ang_on_w_uniform / 90.0 + (1.0 - self.ang_on_w_uniform) * gauss
            }
            State::Off => {
                let n = self.ang_off.len();
                let width = (self.ang_bin_edges[n] - self.ang_bin_edges[0]) / n as f64;
                let idx = (math::floor(theta_dev / width) as i64).clamp(0, n as i64 - 1) as usize;
                self.ang_off[idx] / width
            }
        }
    }
}

/// Stationary prior and transition probabilities of the hidden chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionModel {
    pub p_on: f64,
    pub p_on_given_off: f64,
    pub p_off_given_on: f64,
}

impl Default for TransitionModel {
    /// Values estimated from 640x480 urban imagery; rescale with
    /// [`scale_transition_model`] for other resolutions.
    fn default() -> Self {
        TransitionModel {
            p_on: 0.25,
            p_on_given_off: 0.0014,
            p_off_given_on: 0.0051,
        }
    }
}

impl TransitionModel {
    pub fn validate(&self) -> Result<()> {
        let ok = |p: f64| p > 0.0 && p < 1.0;
        if ok(self.p_on) && ok(self.p_on_given_off) && ok(self.p_off_given_on) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(
                "transition probabilities must lie in (0, 1)",
            ))
        }
    }

    pub fn prior(&self, s: State) -> f64 {
        match s {
            State::On => self.p_on,
            State::Off => 1.0 - self.p_on,
        }
    }

    pub fn transition(&self, from: State, to: State) -> f64 {
        match (from, to) {
            (State::Off, State::On) => self.p_on_given_off,
            (State::Off, State::Off) => 1.0 - self.p_on_given_off,
            (State::On, State::Off) => self.p_off_given_on,
            (State::On, State::On) => 1.0 - self.p_off_given_on,
        }
    }
}

/// Rescales cross-transition probabilities for a different image
/// resolution: sample spacing shrinks with resolution, so state-change
/// probability per sample varies inversely with it. The stationary prior
/// is resolution-invariant.
pub fn scale_transition_model(tm: &TransitionModel, factor: f64) -> Result<TransitionModel> {
    if !(factor > 0.0) {
        return Err(Error::InvalidArgument("resolution factor must be positive"));
    }
    let p_on_given_off = tm.p_on_given_off / factor;
    let p_off_given_on = tm.p_off_given_on / factor;
    if p_on_given_off >= 0.5 || p_off_given_on >= 0.5 {
        return Err(Error::InvalidArgument(
            "scaled transition probability reaches 0.5",
        ));
    }
    Ok(TransitionModel {
        p_on: tm.p_on,
        p_on_given_off,
        p_off_given_on,
    })
}

/// MAP labelling of a line, with its joint log-probability (up to the
/// evidence constant).
#[derive(Debug, Clone, PartialEq)]
pub struct StateSequence {
    pub states: Vec<State>,
    pub log_prob: f64,
}

/// Ranking criterion for extracted segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankMethod {
    /// Posterior probability of the all-ON labelling of the run.
    Posterior,
    /// Posterior multiplied by run length.
    PosteriorTimesLength,
    /// Log-odds of all-ON vs all-OFF.
    OnOffLogOdds,
    /// Sum of per-position ON marginals (expected correct labels).
    MarginalSum,
    /// Logistic combination of mean marginal and an appearance cue.
    Logistic,
}

/// One ranked detection.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedSegment {
    pub segment: LineSegment,
    pub score: f64,
    pub method: RankMethod,
    /// (start index, run length M) into the line's observation sequence;
    /// the run spans samples `start ..= start + M`.
    pub run: (usize, usize),
}

/// Per-sample log-likelihood `log p(y | state)`.
///
/// Edge pixels combine the edge-presence term with the angular density;
/// non-edge pixels contribute the complement of the presence likelihood.
pub fn log_likelihood(s: &ObservationSample, state: State, lm: &LikelihoodModel) -> f64 {
    let pe = lm.p_edge(state, s.d);
    if s.has_edge {
        let dev = s.theta_dev.unwrap_or(0.0);
        math::ln(pe) + math::ln(lm.ang_density(state, dev))
    } else {
        math::ln(1.0 - pe)
    }
}

/// Ordinal band sampling of a line: one sample per integer pixel center
/// within `halfwidth` of the line whose projection falls inside the image
/// chord. Returns `None` when no pixel qualifies.
pub fn build_observation_sequence(
    l: &Line,
    em: &EdgeMap,
    width: u32,
    height: u32,
    halfwidth: f64,
) -> Option<LineObservationSequence> {
    let (t0, t1) = geom::line_image_t_range(l, width, height)?;
    let (s, c) = l.sin_cos();

    // Walk the dominant axis of the line direction and scan the few pixels
    // across the band at each step.
    struct Raw {
        t: f64,
        d: f64,
        x: u32,
        y: u32,
    }
    let mut raw: Vec<Raw> = Vec::new();
    let push = |x: i64, y: i64, raw: &mut Vec<Raw>| {
        if x < 0 || y < 0 || x >= width as i64 || y >= height as i64 {
            return;
        }
        let px = x as f64;
        let py = y as f64;
        let signed = px * c + py * s - l.rho;
        if math::abs(signed) > halfwidth {
            return;
        }
        let t = -px * s + py * c;
        if t < t0 - 1e-9 || t > t1 + 1e-9 {
            return;
        }
        raw.push(Raw {
            t,
            d: math::abs(signed),
            x: x as u32,
            y: y as u32,
        });
    };

    let a = l.point_at(t0);
    let b = l.point_at(t1);
    if math::abs(c) >= math::abs(s) {
        // direction is more vertical: iterate rows
        let reach = halfwidth / math::abs(c) + 1.0;
        let y_lo = math::floor(a.y.min(b.y) - halfwidth) as i64;
        let y_hi = math::ceil(a.y.max(b.y) + halfwidth) as i64;
        for y in y_lo.max(0)..=y_hi.min(height as i64 - 1) {
            let x_center = (l.rho - y as f64 * s) / c;
            let x_lo = math::floor(x_center - reach) as i64;
            let x_hi = math::ceil(x_center + reach) as i64;
            for x in x_lo..=x_hi {
                push(x, y, &mut raw);
            }
        }
    } else {
        let reach = halfwidth / math::abs(s) + 1.0;
        let x_lo = math::floor(a.x.min(b.x) - halfwidth) as i64;
        let x_hi = math::ceil(a.x.max(b.x) + halfwidth) as i64;
        for x in x_lo.max(0)..=x_hi.min(width as i64 - 1) {
            let y_center = (l.rho - x as f64 * c) / s;
            let y_lo = math::floor(y_center - reach) as i64;
            let y_hi = math::ceil(y_center + reach) as i64;
            for y in y_lo..=y_hi {
                push(x, y, &mut raw);
            }
        }
    }

    if raw.is_empty() {
        return None;
    }
    raw.sort_by(|p, q| {
        (p.t, p.d, p.y, p.x)
            .partial_cmp(&(q.t, q.d, q.y, q.x))
            .expect("finite sample keys")
    });

    let samples = raw
        .into_iter()
        .map(|r| {
            let edge = em.edge_at_pixel(r.x, r.y);
            ObservationSample {
                t: r.t,
                d: r.d,
                has_edge: edge.is_some(),
                theta_dev: edge.map(|e| l.angular_deviation(e.theta_deg)),
            }
        })
        .collect();
    Some(LineObservationSequence { line: *l, samples })
}
