//! File formats, configuration and command implementations around the
//! `mcmlsd-core` detector: PGM images, edge/detection/curve CSV, ground
//! truth and model JSON, the synthetic scene renderer and the CLI entry
//! points.

pub mod commands;
pub mod config;
pub mod formats;
pub mod model;
pub mod pgm;
pub mod synth;
