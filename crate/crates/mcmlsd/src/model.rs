//! Model file (likelihoods + chain priors) and logistic-ranker JSON.
//!
//! A model carries the resolution it was trained at; loading it for a
//! different image size rescales the cross-transition probabilities by
//! the image diagonal ratio.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use mcmlsd_core::markov::{scale_transition_model, LogisticRanker};
use mcmlsd_core::{LikelihoodModel, TransitionModel};
use serde::{Deserialize, Serialize};

/// Shipped default model: hand-set likelihood stand-ins plus the urban
/// imagery chain priors at 640x480.
pub const DEFAULT_MODEL_JSON: &str = include_str!("../assets/default_model.json");

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub p_edge_on: Vec<f64>,
    pub p_edge_off: Vec<f64>,
    pub d_bin_edges: Vec<f64>,
    pub ang_on: AngOn,
    pub ang_off: Vec<f64>,
    pub ang_bin_edges: Vec<f64>,
    pub transitions: Transitions,
    /// `[width, height]` the transitions were estimated at.
    pub resolution_ref: [u32; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AngOn {
    pub w_uniform: f64,
    pub sigma_deg: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Transitions {
    pub p_on: f64,
    pub p_on_given_off: f64,
    pub p_off_given_on: f64,
}

impl ModelFile {
    pub fn from_parts(
        lm: &LikelihoodModel,
        tm: &TransitionModel,
        resolution_ref: [u32; 2],
    ) -> Self {
        ModelFile {
            p_edge_on: lm.p_edge_on.clone(),
            p_edge_off: lm.p_edge_off.clone(),
            d_bin_edges: lm.d_bin_edges.clone(),
            ang_on: AngOn {
                w_uniform: lm.ang_on_w_uniform,
                sigma_deg: lm.ang_on_sigma_deg,
            },
            ang_off: lm.ang_off.clone(),
            ang_bin_edges: lm.ang_bin_edges.clone(),
            transitions: Transitions {
                p_on: tm.p_on,
                p_on_given_off: tm.p_on_given_off,
                p_off_given_on: tm.p_off_given_on,
            },
            resolution_ref,
        }
    }

    pub fn likelihoods(&self) -> Result<LikelihoodModel> {
        let lm = LikelihoodModel {
            d_bin_edges: self.d_bin_edges.clone(),
            p_edge_on: self.p_edge_on.clone(),
            p_edge_off: self.p_edge_off.clone(),
            ang_on_w_uniform: self.ang_on.w_uniform,
            ang_on_sigma_deg: self.ang_on.sigma_deg,
            ang_bin_edges: self.ang_bin_edges.clone(),
            ang_off: self.ang_off.clone(),
        };
        lm.validate().context("invalid likelihood model")?;
        Ok(lm)
    }

    /// Transition model rescaled for a `width x height` target image (and
    /// an optional extra user factor).
    pub fn transitions_for(
        &self,
        width: u32,
        height: u32,
        extra_factor: f64,
    ) -> Result<TransitionModel> {
        let tm = TransitionModel {
            p_on: self.transitions.p_on,
            p_on_given_off: self.transitions.p_on_given_off,
            p_off_given_on: self.transitions.p_off_given_on,
        };
        tm.validate().context("invalid transition model")?;
        let [rw, rh] = self.resolution_ref;
        if rw == 0 || rh == 0 {
            bail!("resolution_ref must be positive");
        }
        let diag = |w: u32, h: u32| ((w as f64).powi(2) + (h as f64).powi(2)).sqrt();
        let factor = diag(width, height) / diag(rw, rh) * extra_factor;
        Ok(scale_transition_model(&tm, factor)?)
    }
}

pub fn default_model() -> ModelFile {
    serde_json::from_str(DEFAULT_MODEL_JSON).expect("shipped model parses")
}

pub fn read_model(path: &Path) -> Result<ModelFile> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{}: invalid model JSON", path.display()))
}

pub fn write_model(path: &Path, model: &ModelFile) -> Result<()> {
    let text = serde_json::to_string_pretty(model)?;
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankerFile {
    pub w0: f64,
    pub w1: f64,
    pub w2: f64,
}

pub fn read_ranker(path: &Path) -> Result<LogisticRanker> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let r: RankerFile = serde_json::from_str(&text)
        .with_context(|| format!("{}: invalid ranker JSON", path.display()))?;
    Ok(LogisticRanker {
        w0: r.w0,
        w1: r.w1,
        w2: r.w2,
    })
}

pub fn write_ranker(path: &Path, r: &LogisticRanker) -> Result<()> {
    let text = serde_json::to_string_pretty(&RankerFile {
        w0: r.w0,
        w1: r.w1,
        w2: r.w2,
    })?;
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}
