//! Probabilistic segment ranking on the observation subchain of a run,
//! plus the logistic re-ranker combining the mean ON marginal with an
//! externally supplied appearance cue.

use alloc::vec::Vec;

use super::infer::{forward_backward_from_table, log_likelihood_table};
use super::{LikelihoodModel, LineObservationSequence, RankMethod, State, TransitionModel};
use crate::edge::EdgeMap;
use crate::error::{Error, Result};
use crate::geom::LineSegment;
use crate::math;

/// Joint log-probabilities of the run's subchain `y_{i..i+M}`, conditioning
/// with the stationary prior at the subchain head.
struct SubchainStats {
    log_joint_on: f64,
    log_joint_off: f64,
    log_evidence: f64,
    marginals: Vec<f64>,
}

fn subchain_stats(
    seq: &LineObservationSequence,
    run: (usize, usize),
    lm: &LikelihoodModel,
    tm: &TransitionModel,
) -> SubchainStats {
    let (start, m) = run;
    let end = start + m;
    assert!(end < seq.len(), "run exceeds sequence bounds");
    let sub = LineObservationSequence {
        line: seq.line,
        samples: seq.samples[start..=end].to_vec(),
    };
    let ll = log_likelihood_table(&sub, lm);

    let mut log_joint_on = math::ln(tm.prior(State::On)) + ll[0][1];
    let mut log_joint_off = math::ln(tm.prior(State::Off)) + ll[0][0];
    for item in ll.iter().skip(1) {
        log_joint_on += math::ln(tm.transition(State::On, State::On)) + item[1];
        log_joint_off += math::ln(tm.transition(State::Off, State::Off)) + item[0];
    }
    let (marginals, log_evidence) = forward_backward_from_table(&ll, tm);
    SubchainStats {
        log_joint_on,
        log_joint_off,
        log_evidence,
        marginals,
    }
}

/// Scores one run under the chosen criterion. `run` is `(start, M)`; the
/// run covers samples `start ..= start + M`.
pub fn rank_segment(
    seq: &LineObservationSequence,
    run: (usize, usize),
    method: RankMethod,
    lm: &LikelihoodModel,
    tm: &TransitionModel,
) -> f64 {
    let stats = subchain_stats(seq, run, lm, tm);
    let m = run.1 as f64;
    match method {
        RankMethod::Posterior => math::exp(stats.log_joint_on - stats.log_evidence),
        RankMethod::PosteriorTimesLength => math::exp(stats.log_joint_on - stats.log_evidence) * m,
        RankMethod::OnOffLogOdds => stats.log_joint_on - stats.log_joint_off,
        RankMethod::MarginalSum => stats.marginals.iter().sum(),
        RankMethod::Logistic => {
            panic!("logistic ranking needs a trained ranker and appearance cue")
        }
    }
}

/// Mean ON marginal over the run's subchain, the geometric feature of the
/// logistic re-ranker.
pub fn mean_marginal(
    seq: &LineObservationSequence,
    run: (usize, usize),
    lm: &LikelihoodModel,
    tm: &TransitionModel,
) -> f64 {
    let stats = subchain_stats(seq, run, lm, tm);
    stats.marginals.iter().sum::<f64>() / stats.marginals.len() as f64
}

/// Per-pixel scalar confidence in [0, 1], e.g. from a learned edge
/// detector, ingested as a grid matching the image dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceGrid {
    width: u32,
    height: u32,
    values: Vec<f64>,
}

impl ConfidenceGrid {
    pub fn new(width: u32, height: u32, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || values.len() != (width as usize) * (height as usize) {
            return Err(Error::InvalidArgument("confidence grid shape mismatch"));
        }
        if values.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::InvalidArgument(
                "confidence values must lie in [0, 1]",
            ));
        }
        Ok(ConfidenceGrid {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    fn at_nearest(&self, x: f64, y: f64) -> f64 {
        let xi = (math::round(x) as i64).clamp(0, self.width as i64 - 1) as usize;
        let yi = (math::round(y) as i64).clamp(0, self.height as i64 - 1) as usize;
        self.values[yi * self.width as usize + xi]
    }
}

/// Mean confidence at the locations of the edges associated with the
/// segment (within 2 px and inside its extent); 0 when no edge is
/// associated.
pub fn appearance_score(conf: &ConfidenceGrid, s: &LineSegment, em: &EdgeMap) -> f64 {
    let idx = em.indices_near_segment(s, 2.0);
    if idx.is_empty() {
        return 0.0;
    }
    let sum: f64 = idx
        .iter()
        .map(|&i| {
            let p = em.edges()[i as usize].pos;
            conf.at_nearest(p.x, p.y)
        })
        .sum();
    sum / idx.len() as f64
}

/// Logistic combination of the mean-marginal and appearance features.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticRanker {
    pub w0: f64,
    pub w1: f64,
    pub w2: f64,
}

pub fn rank2_score(ranker: &LogisticRanker, mean_marginal: f64, appearance: f64) -> f64 {
    let z = ranker.w0 + ranker.w1 * mean_marginal + ranker.w2 * appearance;
    1.0 / (1.0 + math::exp(-z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Line, Point2};
    use crate::markov::ObservationSample;
    use approx::assert_abs_diff_eq;
    use std::vec::Vec;

    fn seq_with_run(edges_in_run: bool) -> LineObservationSequence {
        let mut samples = Vec::new();
        for i in 0..30 {
            let in_run = (10..20).contains(&i);
            samples.push(ObservationSample {
                t: i as f64,
                d: 0.3,
                has_edge: in_run && edges_in_run,
                theta_dev: if in_run && edges_in_run {
                    Some(0.5)
                } else {
                    None
                },
            });
        }
        LineObservationSequence {
            line: Line::new(0.0, 0.0),
            samples,
        }
    }

    #[test]
    fn method2_is_method1_times_length() {
        let seq = seq_with_run(true);
        let lm = LikelihoodModel::default();
        let tm = TransitionModel::default();
        let run = (10, 9);
        let m1 = rank_segment(&seq, run, RankMethod::Posterior, &lm, &tm);
        let m2 = rank_segment(&seq, run, RankMethod::PosteriorTimesLength, &lm, &tm);
        assert_eq!(m2, m1 * 9.0);
    }

    #[test]
    fn method4_bounded_by_run_samples() {
        let seq = seq_with_run(true);
        let lm = LikelihoodModel::default();
        let tm = TransitionModel::default();
        let m4 = rank_segment(&seq, (10, 9), RankMethod::MarginalSum, &lm, &tm);
        assert!(m4 >= 0.0 && m4 <= 10.0);
    }

    #[test]
    fn log_odds_sign_tracks_evidence() {
        let lm = LikelihoodModel::default();
        let tm = TransitionModel::default();
        let supported = rank_segment(
            &seq_with_run(true),
            (10, 9),
            RankMethod::OnOffLogOdds,
            &lm,
            &tm,
        );
        let empty = rank_segment(
            &seq_with_run(false),
            (10, 9),
            RankMethod::OnOffLogOdds,
            &lm,
            &tm,
        );
        assert!(supported > 0.0, "supported run log-odds {supported}");
        assert!(empty < 0.0, "empty run log-odds {empty}");
    }

    #[test]
    fn appearance_all_ones_grid() {
        let conf = ConfidenceGrid::new(50, 50, std::vec![1.0; 2500]).unwrap();
        let edges = std::vec![
            crate::edge::OrientedEdge::new(Point2::new(10.0, 10.0), 45.0, 1.0),
            crate::edge::OrientedEdge::new(Point2::new(20.0, 20.0), 45.0, 1.0),
        ];
        let em = EdgeMap::new(edges, 50, 50).unwrap();
        let s = LineSegment::new(Point2::new(5.0, 5.0), Point2::new(30.0, 30.0));
        assert_abs_diff_eq!(appearance_score(&conf, &s, &em), 1.0);
    }

    #[test]
    fn appearance_no_edges_is_zero() {
        let conf = ConfidenceGrid::new(50, 50, std::vec![1.0; 2500]).unwrap();
        let em = EdgeMap::new(std::vec![], 50, 50).unwrap();
        let s = LineSegment::new(Point2::new(5.0, 5.0), Point2::new(30.0, 30.0));
        assert_eq!(appearance_score(&conf, &s, &em), 0.0);
    }

    #[test]
    fn appearance_is_mean() {
        let mut values = std::vec![0.0; 2500];
        values[10 * 50 + 10] = 0.2;
        values[20 * 50 + 20] = 0.8;
        let conf = ConfidenceGrid::new(50, 50, values).unwrap();
        let edges = std::vec![
            crate::edge::OrientedEdge::new(Point2::new(10.0, 10.0), 45.0, 1.0),
            crate::edge::OrientedEdge::new(Point2::new(20.0, 20.0), 45.0, 1.0),
        ];
        let em = EdgeMap::new(edges, 50, 50).unwrap();
        let s = LineSegment::new(Point2::new(5.0, 5.0), Point2::new(30.0, 30.0));
        assert_abs_diff_eq!(appearance_score(&conf, &s, &em), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn zero_ranker_is_half() {
        let r = LogisticRanker {
            w0: 0.0,
            w1: 0.0,
            w2: 0.0,
        };
        assert_eq!(rank2_score(&r, 0.7, 0.3), 0.5);
    }

    #[test]
    fn score_monotone_in_mean_marginal() {
        let r = LogisticRanker {
            w0: -1.0,
            w1: 2.0,
            w2: 0.5,
        };
        let mut prev = rank2_score(&r, 0.0, 0.5);
        for i in 1..=10 {
            let cur = rank2_score(&r, i as f64 / 10.0, 0.5);
            assert!(cur > prev);
            prev = cur;
        }
    }
}
