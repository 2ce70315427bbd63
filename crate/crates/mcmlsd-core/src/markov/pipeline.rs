//! The full two-stage detection loop: sequential Hough line extraction,
//! per-line MAP labelling, segment extraction, ranking and working-set
//! edge removal.

use alloc::vec::Vec;

use super::rank::{appearance_score, mean_marginal, rank2_score, ConfidenceGrid, LogisticRanker};
use super::{
    build_observation_sequence, rank_segment, viterbi, LikelihoodModel, LineObservationSequence,
    RankMethod, RankedSegment, State, StateSequence, TransitionModel,
};
use crate::edge::EdgeMap;
use crate::error::{Error, Result};
use crate::geom::LineSegment;
use crate::hough::{self, HoughParams};

/// Runs whose arc-length extent falls below this are dropped: they sit
/// under the evaluator's association threshold and below the length at
/// which labelling is reliable.
pub const MIN_SEGMENT_EXTENT: f64 = 2.0;

/// Maximal ON runs of a MAP labelling, as segments with their run spans.
/// Runs shorter than [`MIN_SEGMENT_EXTENT`] in `t` are discarded.
pub fn extract_segments(
    ss: &StateSequence,
    seq: &LineObservationSequence,
) -> Vec<(LineSegment, (usize, usize))> {
    assert_eq!(
        ss.states.len(),
        seq.len(),
        "labelling/sequence length mismatch"
    );
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for i in 0..=ss.states.len() {
        let on = i < ss.states.len() && ss.states[i] == State::On;
        match (start, on) {
            (None, true) => start = Some(i),
            (Some(s), false) => {
                let e = i - 1;
                let t0 = seq.samples[s].t;
                let t1 = seq.samples[e].t;
                if t1 - t0 >= MIN_SEGMENT_EXTENT {
                    let seg = LineSegment::new(seq.line.point_at(t0), seq.line.point_at(t1));
                    out.push((seg, (s, e - s)));
                }
                start = None;
            }
            _ => {}
        }
    }
    out
}

/// Drops every edge within 2 px of the segment whose projection lies
/// inside its extent, so later lines cannot re-claim it.
pub fn remove_segment_edges(em: &EdgeMap, s: &LineSegment) -> EdgeMap {
    let idx = em.indices_near_segment(s, 2.0);
    em.without_indices(&idx)
}

/// Configuration of the full detection loop.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub hough: HoughParams,
    /// Band halfwidth for observation sampling, pixels.
    pub halfwidth: f64,
    pub method: RankMethod,
    pub likelihood: LikelihoodModel,
    pub transitions: TransitionModel,
    /// Required when `method` is [`RankMethod::Logistic`].
    pub ranker: Option<LogisticRanker>,
    pub confidence: Option<ConfidenceGrid>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            hough: HoughParams::default(),
            halfwidth: 2.0,
            method: RankMethod::MarginalSum,
            likelihood: LikelihoodModel::default(),
            transitions: TransitionModel::default(),
            ranker: None,
            confidence: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct McmlsdOutput {
    /// Detections sorted by descending score (stable in extraction order).
    pub segments: Vec<RankedSegment>,
    /// Number of Hough lines visited.
    pub line_count: usize,
}

/// Two-stage detection: Hough lines in descending significance, then exact
/// Markov labelling of each line against the current working edge map,
/// with segment edges removed before the next line is processed.
pub fn run_mcmlsd(em: &EdgeMap, config: &RunConfig) -> Result<McmlsdOutput> {
    config.likelihood.validate()?;
    config.transitions.validate()?;
    if config.method == RankMethod::Logistic
        && (config.ranker.is_none() || config.confidence.is_none())
    {
        return Err(Error::InvalidArgument(
            "logistic ranking requires a ranker and a confidence grid",
        ));
    }
    if let Some(conf) = &config.confidence {
        if conf.width() != em.width() || conf.height() != em.height() {
            return Err(Error::InvalidArgument(
                "confidence grid dimensions must match the image",
            ));
        }
    }

    let mut hm = hough::accumulate(em, &config.hough)?;
    let mut working = em.clone();
    let mut segments: Vec<RankedSegment> = Vec::new();
    let mut line_count = 0usize;

    while line_count < config.hough.max_lines {
        let Some(detected) = hough::extract_next_line(&mut hm, em, &config.hough) else {
            break;
        };
        line_count += 1;

        let Some(seq) = build_observation_sequence(
            &detected.line,
            &working,
            em.width(),
            em.height(),
            config.halfwidth,
        ) else {
            continue;
        };
        let labelling = viterbi(&seq, &config.likelihood, &config.transitions);
        for (seg, run) in extract_segments(&labelling, &seq) {
            let score = match config.method {
                RankMethod::Logistic => {
                    let mm = mean_marginal(&seq, run, &config.likelihood, &config.transitions);
                    let app = appearance_score(
                        config.confidence.as_ref().expect("validated above"),
                        &seg,
                        &working,
                    );
                    rank2_score(config.ranker.as_ref().expect("validated above"), mm, app)
                }
                m => rank_segment(&seq, run, m, &config.likelihood, &config.transitions),
            };
            working = remove_segment_edges(&working, &seg);
            segments.push(RankedSegment {
                segment: seg,
                score,
                method: config.method,
                run,
            });
        }
    }

    segments.sort_by(|a, b| b.score.partial_cmp(&a.score).expect("finite scores"));
    Ok(McmlsdOutput {
        segments,
        line_count,
    })
}
