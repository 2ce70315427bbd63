//! Line segment detection on Hough-detected lines via exact Markov-chain
//! labelling, together with a segment-level 1:1 evaluation framework.
//!
//! The pipeline has two stages. A probabilistic Hough transform with
//! per-edge Gaussian uncertainty spreading detects global lines, visiting
//! peaks in descending order of significance and subtracting the votes of
//! supporting edges as it goes ([`hough`]). Each detected line is then
//! sampled within a two-pixel band and the ON/OFF occupancy of the line is
//! decoded exactly by dynamic programming over a two-state Markov chain;
//! segments are the maximal ON runs, ranked by probabilistic criteria
//! ([`markov`]).
//!
//! [`eval`] implements the companion evaluation: uniform point sampling of
//! segments, greedy bipartite point matching, Hungarian 1:1 segment
//! association and precision/recall curves over the number of top-ranked
//! segments, plus the relaxed pixel-level mode used by recent detector
//! papers.
//!
//! The crate is `no_std` (with `alloc`); all file formats and the CLI live
//! in the companion `mcmlsd` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod edge;
pub mod error;
pub mod eval;
pub mod geom;
pub mod hough;
pub mod image;
pub mod markov;
pub(crate) mod math;

pub use edge::{EdgeDetectParams, EdgeMap, OrientedEdge};
pub use error::{Error, Result};
pub use geom::{Line, LineSegment, Point2};
pub use hough::{DetectedLine, HoughMap, HoughParams};
pub use image::GrayImage;
pub use markov::{
    LikelihoodModel, LineObservationSequence, LogisticRanker, ObservationSample, RankMethod,
    RankedSegment, StateSequence, TransitionModel,
};
