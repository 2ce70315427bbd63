//! Model estimation from labelled lines: edge-presence histograms, angular
//! models (EM for the ON-state mixture), chain priors and the logistic
//! re-ranker.

use alloc::vec;
use alloc::vec::Vec;

use super::rank::LogisticRanker;
use super::{build_observation_sequence, LikelihoodModel, TransitionModel};
use crate::edge::EdgeMap;
use crate::error::{Error, Result};
use crate::geom::Line;
use crate::math;

const HISTOGRAM_FLOOR: f64 = 1e-4;
const TRANSITION_FLOOR: f64 = 1e-6;

/// A ground-truth line with the arc-length intervals occupied by visible
/// segments.
#[derive(Debug, Clone)]
pub struct LabeledLine {
    pub line: Line,
    /// Closed `(t_start, t_end)` intervals in which the state is ON.
    pub on_intervals: Vec<(f64, f64)>,
}

impl LabeledLine {
    fn is_on(&self, t: f64) -> bool {
        self.on_intervals
            .iter()
            .any(|&(a, b)| t >= a - 1e-9 && t <= b + 1e-9)
    }
}

/// One training image: its detected edges and hand-labelled lines.
#[derive(Debug, Clone)]
pub struct LabeledImage {
    pub edges: EdgeMap,
    pub lines: Vec<LabeledLine>,
}

struct SampleStats {
    // per d-bin: (edge count, total count), for each state
    d_on: Vec<(u64, u64)>,
    d_off: Vec<(u64, u64)>,
    ang_on: Vec<f64>,
    ang_off: Vec<f64>,
    on_samples: u64,
    off_samples: u64,
    // transition counts indexed [from][to], 0 = OFF
    trans: [[u64; 2]; 2],
}

fn collect_stats(labeled: &[LabeledImage], d_bins: usize, halfwidth: f64) -> Result<SampleStats> {
    if labeled.is_empty() || labeled.iter().all(|im| im.lines.is_empty()) {
        return Err(Error::InvalidArgument(
            "training requires at least one labelled line",
        ));
    }
    let mut st = SampleStats {
        d_on: vec![(0, 0); d_bins],
        d_off: vec![(0, 0); d_bins],
        ang_on: Vec::new(),
        ang_off: Vec::new(),
        on_samples: 0,
        off_samples: 0,
        trans: [[0; 2]; 2],
    };
    let bin_width = halfwidth / d_bins as f64;
    for image in labeled {
        for ll in &image.lines {
            let Some(seq) = build_observation_sequence(
                &ll.line,
                &image.edges,
                image.edges.width(),
                image.edges.height(),
                halfwidth,
            ) else {
                continue;
            };
            let mut prev: Option<bool> = None;
            for s in &seq.samples {
                let on = ll.is_on(s.t);
                let bin =
                    ((math::floor(s.d / bin_width) as i64).clamp(0, d_bins as i64 - 1)) as usize;
                let slot = if on { &mut st.d_on } else { &mut st.d_off };
                slot[bin].1 += 1;
                if s.has_edge {
                    slot[bin].0 += 1;
                    let dev = s.theta_dev.unwrap_or(0.0);
                    if on {
                        st.ang_on.push(dev);
                    } else {
                        st.ang_off.push(dev);
                    }
                }
                if on {
                    st.on_samples += 1;
                } else {
                    st.off_samples += 1;
                }
                if let Some(p) = prev {
                    st.trans[p as usize][on as usize] += 1;
                }
                prev = Some(on);
            }
        }
    }
    if st.on_samples == 0 {
        return Err(Error::EmptyTrainingState("ON"));
    }
    if st.off_samples == 0 {
        return Err(Error::EmptyTrainingState("OFF"));
    }
    Ok(st)
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(HISTOGRAM_FLOOR, 1.0 - HISTOGRAM_FLOOR)
}

/// Estimates the likelihood model from labelled lines: edge-presence
/// histograms over 0.5 px distance bins, an OFF-state angular histogram
/// over 5-degree bins and a uniform + half-normal mixture for the ON state
/// fit by EM.
pub fn train_likelihoods(labeled: &[LabeledImage]) -> Result<LikelihoodModel> {
    let d_bins = 4;
    let ang_bins = 18;
    let st = collect_stats(labeled, d_bins, 2.0)?;

    let ratio = |(edges, total): (u64, u64)| {
        if total == 0 {
            HISTOGRAM_FLOOR
        } else {
            clamp_prob(edges as f64 / total as f64)
        }
    };
    let p_edge_on: Vec<f64> = st.d_on.iter().map(|&c| ratio(c)).collect();
    let p_edge_off: Vec<f64> = st.d_off.iter().map(|&c| ratio(c)).collect();

    // OFF angular histogram with floor then renormalization.
    let mut ang_off = vec![0.0f64; ang_bins];
    for &dev in &st.ang_off {
        let idx = ((math::floor(dev / 5.0) as i64).clamp(0, ang_bins as i64 - 1)) as usize;
        ang_off[idx] += 1.0;
    }
    let total: f64 = ang_off.iter().sum();
    for v in &mut ang_off {
        *v = if total > 0.0 {
            (*v / total).max(HISTOGRAM_FLOOR)
        } else {
            1.0 / ang_bins as f64
        };
    }
    let sum: f64 = ang_off.iter().sum();
    for v in &mut ang_off {
        *v /= sum;
    }

    let (w_uniform, sigma) = fit_angular_mixture(&st.ang_on);

    let model = LikelihoodModel {
        d_bin_edges: (0..=d_bins).map(|i| i as f64 * 0.5).collect(),
        p_edge_on,
        p_edge_off,
        ang_on_w_uniform: w_uniform,
        ang_on_sigma_deg: sigma,
        ang_bin_edges: (0..=ang_bins).map(|i| i as f64 * 5.0).collect(),
        ang_off,
    };
    model.validate()?;
    Ok(model)
}

/// EM for a uniform(0..90) + half-normal mixture over angular deviations.
/// Returns `(w_uniform, sigma_deg)`.
fn fit_angular_mixture(devs: &[f64]) -> (f64, f64) {
    if devs.is_empty() {
        // no ON edges observed: fall back to an uninformative mixture
        return (1.0, 10.0);
    }
    let mut w_gauss = 0.5f64;
    let mut sigma = 5.0f64;
    for _ in 0..100 {
        let mut resp_sum = 0.0;
        let mut weighted_sq = 0.0;
        for &x in devs {
            let g = math::sqrt(2.0 / math::PI) / sigma * math::exp(-x * x / (2.0 * sigma * sigma));
            let u = 1.0 / 90.0;
            let r = w_gauss * g / (w_gauss * g + (1.0 - w_gauss) * u);
            resp_sum += r;
            weighted_sq += r * x * x;
        }
        w_gauss = (resp_sum / devs.len() as f64).clamp(HISTOGRAM_FLOOR, 1.0 - HISTOGRAM_FLOOR);
        sigma = math::sqrt(weighted_sq / resp_sum.max(1e-12)).max(0.1);
    }
    (1.0 - w_gauss, sigma)
}

/// Maximum-likelihood chain priors from labelled sample sequences, with a
/// floor on unobserved transitions.
pub fn train_priors(labeled: &[LabeledImage]) -> Result<TransitionModel> {
    let st = collect_stats(labeled, 4, 2.0)?;
    let total = (st.on_samples + st.off_samples) as f64;
    let p_on = (st.on_samples as f64 / total).clamp(TRANSITION_FLOOR, 1.0 - TRANSITION_FLOOR);
    let rate = |cross: u64, stay: u64| {
        let denom = cross + stay;
        if denom == 0 {
            TRANSITION_FLOOR
        } else {
            (cross as f64 / denom as f64).clamp(TRANSITION_FLOOR, 1.0 - TRANSITION_FLOOR)
        }
    };
    Ok(TransitionModel {
        p_on,
        p_on_given_off: rate(st.trans[0][1], st.trans[0][0]),
        p_off_given_on: rate(st.trans[1][0], st.trans[1][1]),
    })
}

/// Fits the logistic re-ranker on (mean-marginal, appearance) features
/// against continuous precision targets: cross-entropy with an L2 penalty,
/// plain gradient descent with step halving whenever the loss would rise.
pub fn train_rank2(features: &[(f64, f64)], targets: &[f64]) -> Result<LogisticRanker> {
    if features.len() != targets.len() || features.len() < 2 {
        return Err(Error::InvalidArgument(
            "ranker training needs at least two feature/target pairs",
        ));
    }
    if targets.iter().any(|&t| !(0.0..=1.0).contains(&t)) {
        return Err(Error::InvalidArgument("targets must lie in [0, 1]"));
    }
    let n = features.len() as f64;
    let lambda = 1e-4;

    // Standardize features; constant features are zeroed out so their
    // weight stays at 0 and the fit degrades to bias-only.
    let (mut mean, mut std) = ([0.0f64; 2], [0.0f64; 2]);
    for &(a, b) in features {
        mean[0] += a;
        mean[1] += b;
    }
    mean[0] /= n;
    mean[1] /= n;
    for &(a, b) in features {
        std[0] += (a - mean[0]) * (a - mean[0]);
        std[1] += (b - mean[1]) * (b - mean[1]);
    }
    for s in &mut std {
        *s = math::sqrt(*s / n);
    }
    let z: Vec<[f64; 2]> = features
        .iter()
        .map(|&(a, b)| {
            [
                if std[0] > 1e-12 {
                    (a - mean[0]) / std[0]
                } else {
                    0.0
                },
                if std[1] > 1e-12 {
                    (b - mean[1]) / std[1]
                } else {
                    0.0
                },
            ]
        })
        .collect();

    let loss_and_grad = |w: &[f64; 3]| -> (f64, [f64; 3]) {
        let mut loss = 0.0;
        let mut grad = [0.0f64; 3];
        for (x, &y) in z.iter().zip(targets) {
            let s = w[0] + w[1] * x[0] + w[2] * x[1];
            let p = 1.0 / (1.0 + math::exp(-s));
            let p_c = p.clamp(1e-12, 1.0 - 1e-12);
            loss -= y * math::ln(p_c) + (1.0 - y) * math::ln(1.0 - p_c);
            let err = p - y;
            grad[0] += err;
            grad[1] += err * x[0];
            grad[2] += err * x[1];
        }
        loss /= n;
        for g in &mut grad {
            *g /= n;
        }
        loss += 0.5 * lambda * (w[1] * w[1] + w[2] * w[2]);
        grad[1] += lambda * w[1];
        grad[2] += lambda * w[2];
        (loss, grad)
    };

    let mut w = [0.0f64; 3];
    let mut step = 0.1;
    let (mut loss, mut grad) = loss_and_grad(&w);
    for _ in 0..500 {
        let trial = [
            w[0] - step * grad[0],
            w[1] - step * grad[1],
            w[2] - step * grad[2],
        ];
        let (trial_loss, trial_grad) = loss_and_grad(&trial);
        if trial_loss <= loss {
            w = trial;
            loss = trial_loss;
            grad = trial_grad;
        } else {
            step *= 0.5;
            if step < 1e-12 {
                break;
            }
        }
    }

    // Undo the standardization.
    let w1 = if std[0] > 1e-12 { w[1] / std[0] } else { 0.0 };
    let w2 = if std[1] > 1e-12 { w[2] / std[1] } else { 0.0 };
    Ok(LogisticRanker {
        w0: w[0] - w1 * mean[0] - w2 * mean[1],
        w1,
        w2,
    })
}
