//! Flat `key = value` configuration covering every tunable of the
//! pipeline. `#` starts a comment; unknown keys are rejected so typos
//! cannot silently fall back to defaults. Command-line flags override
//! file values.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use mcmlsd_core::eval::EvalMode;
use mcmlsd_core::markov::RankMethod;
use mcmlsd_core::{EdgeDetectParams, HoughParams};

#[derive(Debug, Clone)]
pub struct Config {
    pub edge: EdgeDetectParams,
    pub hough: HoughParams,
    /// Observation band halfwidth, pixels.
    pub halfwidth: f64,
    pub method: RankMethod,
    /// Model JSON path; the shipped default model when absent.
    pub model: Option<PathBuf>,
    /// Logistic ranker JSON, required for method mcmlsd2.
    pub ranker: Option<PathBuf>,
    /// Appearance confidence map (PGM, values scaled to [0, 1]),
    /// required for method mcmlsd2.
    pub confidence_map: Option<PathBuf>,
    /// Extra transition-scaling factor on top of the model's
    /// resolution-based scaling.
    pub resolution_scale: f64,
    pub threshold: f64,
    pub mode: EvalMode,
    pub k_start: usize,
    pub k_stop: usize,
    pub k_step: usize,
    /// Image dimensions for inputs that carry none (edge CSV, bare
    /// ground truth).
    pub width: Option<u32>,
    pub height: Option<u32>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            edge: EdgeDetectParams::default(),
            hough: HoughParams::default(),
            halfwidth: 2.0,
            method: RankMethod::MarginalSum,
            model: None,
            ranker: None,
            confidence_map: None,
            resolution_scale: 1.0,
            threshold: mcmlsd_core::eval::DEFAULT_THRESHOLD,
            mode: EvalMode::SegmentOneToOne,
            k_start: 10,
            k_stop: 500,
            k_step: 10,
            width: None,
            height: None,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text =
            fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let mut cfg = Config::default();
        let base = path.parent().unwrap_or(Path::new("."));
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("{}: line {}: expected key = value", path.display(), i + 1);
            };
            cfg.set(key.trim(), value.trim(), base)
                .with_context(|| format!("{}: line {}", path.display(), i + 1))?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<()> {
        let f = || -> Result<f64> {
            value
                .parse()
                .with_context(|| format!("invalid number {value:?}"))
        };
        let u = || -> Result<usize> {
            value
                .parse()
                .with_context(|| format!("invalid integer {value:?}"))
        };
        let path = || {
            let p = PathBuf::from(value);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        match key {
            "edge_sigma" => self.edge.sigma = f()?,
            "edge_high" => self.edge.high_threshold = f()?,
            "edge_low" => self.edge.low_threshold = f()?,
            "delta_rho" => self.hough.delta_rho = f()?,
            "delta_theta" => self.hough.delta_theta = f()?,
            "sigma_pos" => self.hough.sigma_pos = f()?,
            "sigma_theta" => self.hough.sigma_theta = f()?,
            "min_peak" => self.hough.min_peak = f()?,
            "claim_radius" => self.hough.claim_radius = f()?,
            "max_lines" => self.hough.max_lines = u()?,
            "halfwidth" => self.halfwidth = f()?,
            "method" => self.method = parse_method(value)?,
            "model" => self.model = Some(path()),
            "ranker" => self.ranker = Some(path()),
            "confidence_map" => self.confidence_map = Some(path()),
            "resolution_scale" => self.resolution_scale = f()?,
            "threshold" => self.threshold = f()?,
            "mode" => self.mode = parse_mode(value)?,
            "k_start" => self.k_start = u()?,
            "k_stop" => self.k_stop = u()?,
            "k_step" => self.k_step = u()?,
            "width" => self.width = Some(u()? as u32),
            "height" => self.height = Some(u()? as u32),
            _ => bail!("unknown key {key:?}"),
        }
        Ok(())
    }

    pub fn k_grid(&self) -> Result<Vec<usize>> {
        if self.k_start == 0 || self.k_step == 0 || self.k_stop < self.k_start {
            bail!("k grid requires 1 <= k_start <= k_stop and k_step >= 1");
        }
        Ok((self.k_start..=self.k_stop).step_by(self.k_step).collect())
    }
}

pub fn parse_method(s: &str) -> Result<RankMethod> {
    Ok(match s {
        "1" => RankMethod::Posterior,
        "2" => RankMethod::PosteriorTimesLength,
        "3" => RankMethod::OnOffLogOdds,
        "4" => RankMethod::MarginalSum,
        "mcmlsd2" => RankMethod::Logistic,
        _ => bail!("unknown method {s:?} (expected 1, 2, 3, 4 or mcmlsd2)"),
    })
}

pub fn parse_mode(s: &str) -> Result<EvalMode> {
    Ok(match s {
        "segment" => EvalMode::SegmentOneToOne,
        "pixel" => EvalMode::PixelLevel,
        _ => bail!("unknown mode {s:?} (expected segment or pixel)"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_cfg(name: &str, text: &str) -> PathBuf {
        let dir = std::env::temp_dir().join("mcmlsd-config-test");
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn parses_values_and_comments() {
        let p = write_cfg(
            "ok.conf",
            "# tuning\ndelta_rho = 0.5\nmethod = 2 # posterior x length\nmode=pixel\nmax_lines = 100\n",
        );
        let cfg = Config::load(&p).unwrap();
        assert_eq!(cfg.hough.delta_rho, 0.5);
        assert_eq!(cfg.method, RankMethod::PosteriorTimesLength);
        assert_eq!(cfg.mode, EvalMode::PixelLevel);
        assert_eq!(cfg.hough.max_lines, 100);
        // untouched keys keep their defaults
        assert_eq!(cfg.hough.delta_theta, HoughParams::default().delta_theta);
    }

    #[test]
    fn rejects_unknown_key() {
        let p = write_cfg("unknown.conf", "delta_rh = 0.5\n");
        let err = Config::load(&p).unwrap_err().to_string();
        assert!(err.contains("line 1"), "{err}");
    }

    #[test]
    fn rejects_bad_number() {
        let p = write_cfg("badnum.conf", "threshold = fast\n");
        assert!(Config::load(&p).is_err());
    }

    #[test]
    fn relative_model_path_resolves_against_config() {
        let p = write_cfg("model.conf", "model = sub/model.json\n");
        let cfg = Config::load(&p).unwrap();
        assert_eq!(
            cfg.model.unwrap(),
            p.parent().unwrap().join("sub/model.json")
        );
    }

    #[test]
    fn default_k_grid_has_50_points() {
        let grid = Config::default().k_grid().unwrap();
        assert_eq!(grid.len(), 50);
        assert_eq!(grid[0], 10);
        assert_eq!(grid[49], 500);
    }
}
