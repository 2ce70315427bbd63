//! Command implementations behind the CLI binary. Each command returns a
//! typed error that maps onto the process exit code: bad input, unreadable
//! files or unwritable outputs exit 2, failures inside the computation
//! exit 1.

use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, Context};
use mcmlsd_core::eval::{self, CurvePoint, SegmentSet};
use mcmlsd_core::markov::{run_mcmlsd, ConfidenceGrid, RankMethod, RunConfig};
use mcmlsd_core::markov::{train_likelihoods, train_priors, LabeledImage, LabeledLine};
use mcmlsd_core::{EdgeMap, GrayImage, Line, LineSegment};
use thiserror::Error;

use crate::config::Config;
use crate::formats;
use crate::model::{self, ModelFile};
use crate::pgm;
use crate::synth;

#[derive(Debug, Error)]
pub enum CliError {
    /// I/O, parsing or usage problems; exit 2.
    #[error("{0:#}")]
    Input(anyhow::Error),
    /// Failures inside the computation; exit 1.
    #[error("{0:#}")]
    Processing(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Processing(_) => 1,
        }
    }
}

fn input<E: Into<anyhow::Error>>(e: E) -> CliError {
    CliError::Input(e.into())
}

fn processing<E: Into<anyhow::Error>>(e: E) -> CliError {
    CliError::Processing(e.into())
}

#[derive(Debug)]
pub struct DetectSummary {
    pub line_count: usize,
    pub segment_count: usize,
    pub seconds: f64,
}

/// Runs the detector on a PGM image or an edge CSV and writes ranked
/// detections; reports line count, segment count and wall time on stderr.
pub fn cmd_detect(
    input_path: &Path,
    output: &Path,
    cfg: &Config,
) -> Result<DetectSummary, CliError> {
    let em = load_edges(input_path, cfg)?;
    let start = Instant::now();
    let run_config = build_run_config(cfg, em.width(), em.height()).map_err(input)?;
    let out = run_mcmlsd(&em, &run_config).map_err(processing)?;
    let seconds = start.elapsed().as_secs_f64();
    formats::write_detection_csv(output, &out.segments).map_err(input)?;
    let summary = DetectSummary {
        line_count: out.line_count,
        segment_count: out.segments.len(),
        seconds,
    };
    eprintln!(
        "detect: {} lines, {} segments, {:.3} s",
        summary.line_count, summary.segment_count, summary.seconds
    );
    Ok(summary)
}

/// Loads the edge map for detection: PGM images go through the edge
/// detector, CSVs are ingested directly (dimensions from config).
pub fn load_edges(path: &Path, cfg: &Config) -> Result<EdgeMap, CliError> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    match ext.as_str() {
        "pgm" => {
            let img = pgm::read_pgm(path).map_err(input)?;
            mcmlsd_core::edge::detect_edges(&img, &cfg.edge).map_err(processing)
        }
        "csv" => {
            let (Some(w), Some(h)) = (cfg.width, cfg.height) else {
                return Err(input(anyhow!(
                    "edge CSV input needs width and height config keys"
                )));
            };
            formats::read_edge_csv(path, w, h).map_err(input)
        }
        _ => Err(input(anyhow!(
            "{}: unsupported input type (expected .pgm or .csv)",
            path.display()
        ))),
    }
}

fn build_run_config(cfg: &Config, width: u32, height: u32) -> anyhow::Result<RunConfig> {
    let model_file: ModelFile = match &cfg.model {
        Some(p) => model::read_model(p)?,
        None => model::default_model(),
    };
    let likelihood = model_file.likelihoods()?;
    let transitions = model_file.transitions_for(width, height, cfg.resolution_scale)?;
    let (ranker, confidence) = if cfg.method == RankMethod::Logistic {
        let rp = cfg
            .ranker
            .as_ref()
            .context("method mcmlsd2 needs a ranker config key")?;
        let cp = cfg
            .confidence_map
            .as_ref()
            .context("method mcmlsd2 needs a confidence_map config key")?;
        let ranker = model::read_ranker(rp)?;
        let img = pgm::read_pgm(cp)?;
        let values: Vec<f64> = img.pixels().iter().map(|&v| v as f64 / 255.0).collect();
        let grid = ConfidenceGrid::new(img.width(), img.height(), values)?;
        (Some(ranker), Some(grid))
    } else {
        (None, None)
    };
    Ok(RunConfig {
        hough: cfg.hough,
        halfwidth: cfg.halfwidth,
        method: cfg.method,
        likelihood,
        transitions,
        ranker,
        confidence,
    })
}

pub struct EvalSummary {
    pub max_recall: f64,
    pub auc_pr: f64,
    pub clamped: usize,
}

/// Evaluates a detection file against ground truth and writes the
/// recall/precision curve over the configured k grid.
pub fn cmd_eval(
    gt_path: &Path,
    det_path: &Path,
    output: &Path,
    cfg: &Config,
) -> Result<EvalSummary, CliError> {
    let gt = formats::read_gt_json(gt_path).map_err(input)?;
    let det: Vec<LineSegment> = formats::read_detection_csv(det_path)
        .map_err(input)?
        .into_iter()
        .map(|(s, _)| s)
        .collect();
    let (w, h) = infer_dims(cfg, [&gt[..], &det[..]]);
    let (gt_set, c1) = SegmentSet::new(gt, w, h).map_err(processing)?;
    let (det_set, c2) = SegmentSet::new(det, w, h).map_err(processing)?;
    let clamped = c1 + c2;
    if clamped > 0 {
        eprintln!("eval: clamped {clamped} segment(s) to image bounds");
    }
    let grid = cfg.k_grid().map_err(input)?;
    let curve = eval::compute_curves(&gt_set, &det_set, &grid, cfg.threshold, cfg.mode)
        .map_err(processing)?;
    formats::write_curve_csv(output, &curve).map_err(input)?;
    let summary = summarize(&curve, clamped);
    println!(
        "max_recall={:.4} auc_pr={:.4}",
        summary.max_recall, summary.auc_pr
    );
    Ok(summary)
}

/// Batch evaluation over a manifest: curves per image on a shared k grid,
/// averaged per k with uniform image weight.
pub fn cmd_curves(
    manifest_path: &Path,
    output: &Path,
    cfg: &Config,
) -> Result<EvalSummary, CliError> {
    let entries = formats::read_eval_manifest(manifest_path).map_err(input)?;
    if entries.is_empty() {
        return Err(input(anyhow!(
            "{}: empty manifest",
            manifest_path.display()
        )));
    }
    let grid = cfg.k_grid().map_err(input)?;
    let mut clamped = 0usize;
    let mut mean: Vec<CurvePoint> = grid
        .iter()
        .map(|&k| CurvePoint {
            k,
            recall: 0.0,
            precision: 0.0,
            total_length: 0.0,
        })
        .collect();
    for entry in &entries {
        let gt = formats::read_gt_json(&entry.gt).map_err(input)?;
        let (det, w, h) = match &entry.detections {
            Some(p) => {
                let det: Vec<LineSegment> = formats::read_detection_csv(p)
                    .map_err(input)?
                    .into_iter()
                    .map(|(s, _)| s)
                    .collect();
                let (w, h) = infer_dims(cfg, [&gt[..], &det[..]]);
                (det, w, h)
            }
            None => {
                let em = load_edges(&entry.image, cfg)?;
                let run_config = build_run_config(cfg, em.width(), em.height()).map_err(input)?;
                let out = run_mcmlsd(&em, &run_config).map_err(processing)?;
                let det = out.segments.into_iter().map(|s| s.segment).collect();
                (det, em.width(), em.height())
            }
        };
        let (gt_set, c1) = SegmentSet::new(gt, w, h).map_err(processing)?;
        let (det_set, c2) = SegmentSet::new(det, w, h).map_err(processing)?;
        clamped += c1 + c2;
        let curve = eval::compute_curves(&gt_set, &det_set, &grid, cfg.threshold, cfg.mode)
            .map_err(processing)?;
        for (acc, c) in mean.iter_mut().zip(&curve) {
            acc.recall += c.recall;
            acc.precision += c.precision;
            acc.total_length += c.total_length;
        }
    }
    let n = entries.len() as f64;
    for acc in &mut mean {
        acc.recall /= n;
        acc.precision /= n;
        acc.total_length /= n;
    }
    formats::write_curve_csv(output, &mean).map_err(input)?;
    let summary = summarize(&mean, clamped);
    println!(
        "images={} max_recall={:.4} auc_pr={:.4}",
        entries.len(),
        summary.max_recall,
        summary.auc_pr
    );
    Ok(summary)
}

fn summarize(curve: &[CurvePoint], clamped: usize) -> EvalSummary {
    let max_recall = curve.iter().map(|c| c.recall).fold(0.0f64, f64::max);
    let mut pts: Vec<(f64, f64)> = curve.iter().map(|c| (c.recall, c.precision)).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite metrics"));
    let mut auc = 0.0;
    for w in pts.windows(2) {
        auc += (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0;
    }
    EvalSummary {
        max_recall,
        auc_pr: auc,
        clamped,
    }
}

// Image dims for inputs that carry none: the configured size (default
// 640x480), grown to cover every segment so nothing gets clamped away.
fn infer_dims(cfg: &Config, sets: [&[LineSegment]; 2]) -> (u32, u32) {
    let mut w = cfg.width.unwrap_or(640) as f64;
    let mut h = cfg.height.unwrap_or(480) as f64;
    for set in sets {
        for s in set {
            for p in [s.p1, s.p2] {
                w = w.max(p.x.ceil() + 1.0);
                h = h.max(p.y.ceil() + 1.0);
            }
        }
    }
    (w as u32, h as u32)
}

/// Trains likelihoods and chain priors from a labelled-edge manifest and
/// writes the model file. The reference resolution is the first entry's.
pub fn cmd_train(manifest_path: &Path, output: &Path) -> Result<(), CliError> {
    let entries = formats::read_train_manifest(manifest_path).map_err(input)?;
    if entries.is_empty() {
        return Err(input(anyhow!(
            "{}: empty manifest",
            manifest_path.display()
        )));
    }
    let mut labeled = Vec::with_capacity(entries.len());
    for e in &entries {
        let em = formats::read_edge_csv(&e.edges, e.width, e.height).map_err(input)?;
        let lines = e
            .lines
            .iter()
            .map(|l| LabeledLine {
                line: Line::new(l.rho, l.theta_deg),
                on_intervals: l.on_intervals.clone(),
            })
            .collect();
        labeled.push(LabeledImage { edges: em, lines });
    }
    let lm = train_likelihoods(&labeled).map_err(processing)?;
    let tm = train_priors(&labeled).map_err(processing)?;
    let file = ModelFile::from_parts(&lm, &tm, [entries[0].width, entries[0].height]);
    model::write_model(output, &file).map_err(input)?;
    eprintln!(
        "train: {} images, {} labelled lines",
        entries.len(),
        entries.iter().map(|e| e.lines.len()).sum::<usize>()
    );
    Ok(())
}

/// Renders a synthetic scene (segments + seeded noise) and writes the PGM
/// image and its ground truth JSON.
pub fn cmd_synth(
    spec_path: &Path,
    image_out: &Path,
    gt_out: &Path,
    seed: u64,
) -> Result<GrayImage, CliError> {
    let spec = synth::read_spec(spec_path).map_err(input)?;
    let img = synth::render(&spec, seed).map_err(processing)?;
    pgm::write_pgm(image_out, &img).map_err(input)?;
    formats::write_gt_json(gt_out, &spec.segments()).map_err(input)?;
    eprintln!(
        "synth: {}x{}, {} segments, sigma {}",
        spec.width,
        spec.height,
        spec.segments.len(),
        spec.sigma
    );
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn tmp_dir(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join("mcmlsd-commands-test").join(name);
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    fn write(path: &Path, text: &str) {
        std::fs::write(path, text).unwrap();
    }

    #[test]
    fn detect_on_blank_image_writes_header_only() {
        let dir = tmp_dir("blank");
        let spec = dir.join("scene.json");
        write(
            &spec,
            r#"{"width": 120, "height": 90, "sigma": 0.0, "segments": []}"#,
        );
        let img = dir.join("scene.pgm");
        let gt = dir.join("gt.json");
        cmd_synth(&spec, &img, &gt, 1).unwrap();
        let out = dir.join("det.csv");
        let summary = cmd_detect(&img, &out, &Config::default()).unwrap();
        assert_eq!(summary.segment_count, 0);
        assert_eq!(
            std::fs::read_to_string(&out).unwrap(),
            "rank,x1,y1,x2,y2,score\n"
        );
    }

    #[test]
    fn missing_input_exits_2() {
        let dir = tmp_dir("missing");
        let err = cmd_detect(
            &dir.join("nope.pgm"),
            &dir.join("out.csv"),
            &Config::default(),
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("nope.pgm"));
    }

    #[test]
    fn eval_against_itself_saturates_recall() {
        let dir = tmp_dir("self-eval");
        let gt = dir.join("gt.json");
        write(
            &gt,
            r#"[{"x1": 10.0, "y1": 20.0, "x2": 150.0, "y2": 20.0},
               {"x1": 30.0, "y1": 40.0, "x2": 30.0, "y2": 160.0}]"#,
        );
        let det = dir.join("det.csv");
        write(
            &det,
            "rank,x1,y1,x2,y2,score\n1,10,20,150,20,5\n2,30,40,30,160,4\n",
        );
        let out = dir.join("curve.csv");
        let summary = cmd_eval(&gt, &det, &out, &Config::default()).unwrap();
        assert!((summary.max_recall - 1.0).abs() < 1e-12);
        let curve = formats::read_curve_csv(&out).unwrap();
        assert_eq!(curve.len(), 50);
        assert!(curve.iter().all(|c| (c.recall - 1.0).abs() < 1e-12));
    }

    #[test]
    fn curves_averages_over_manifest() {
        let dir = tmp_dir("batch");
        // image A: perfect detection; image B: empty detection
        let gt_a = dir.join("a-gt.json");
        write(
            &gt_a,
            r#"[{"x1": 10.0, "y1": 20.0, "x2": 150.0, "y2": 20.0}]"#,
        );
        let det_a = dir.join("a-det.csv");
        write(&det_a, "rank,x1,y1,x2,y2,score\n1,10,20,150,20,5\n");
        let gt_b = dir.join("b-gt.json");
        write(
            &gt_b,
            r#"[{"x1": 10.0, "y1": 60.0, "x2": 150.0, "y2": 60.0}]"#,
        );
        let det_b = dir.join("b-det.csv");
        write(&det_b, "rank,x1,y1,x2,y2,score\n");
        let manifest = dir.join("manifest.json");
        write(
            &manifest,
            r#"[{"image": "a.pgm", "gt": "a-gt.json", "detections": "a-det.csv"},
               {"image": "b.pgm", "gt": "b-gt.json", "detections": "b-det.csv"}]"#,
        );
        let out = dir.join("curve.csv");
        cmd_curves(&manifest, &out, &Config::default()).unwrap();
        let curve = formats::read_curve_csv(&out).unwrap();
        assert!(curve.iter().all(|c| (c.recall - 0.5).abs() < 1e-12));
    }

    #[test]
    fn train_is_deterministic_and_validates() {
        let dir = tmp_dir("train");
        let edges = dir.join("edges.csv");
        let mut csv = String::from("x,y,theta_deg,strength\n");
        for y in 20..=120 {
            csv.push_str(&format!("50,{y},0,10\n"));
        }
        for y in (140..180).step_by(3) {
            csv.push_str(&format!("{}.5,{y},{}.0,5\n", 50 + y % 3, y % 90));
        }
        write(&edges, &csv);
        let manifest = dir.join("manifest.json");
        write(
            &manifest,
            r#"[{"edges": "edges.csv", "width": 100, "height": 200,
                "lines": [{"rho": 50.0, "theta_deg": 0.0, "on_intervals": [[20.0, 120.0]]}]}]"#,
        );
        let out1 = dir.join("model-1.json");
        let out2 = dir.join("model-2.json");
        cmd_train(&manifest, &out1).unwrap();
        cmd_train(&manifest, &out2).unwrap();
        assert_eq!(std::fs::read(&out1).unwrap(), std::fs::read(&out2).unwrap());
        let m = model::read_model(&out1).unwrap();
        m.likelihoods().unwrap();
        assert_eq!(m.resolution_ref, [100, 200]);
    }

    #[test]
    fn train_without_on_samples_exits_1() {
        let dir = tmp_dir("train-empty");
        let edges = dir.join("edges.csv");
        write(&edges, "x,y,theta_deg,strength\n50,60,0,10\n");
        let manifest = dir.join("manifest.json");
        write(
            &manifest,
            r#"[{"edges": "edges.csv", "width": 100, "height": 100,
                "lines": [{"rho": 50.0, "theta_deg": 0.0, "on_intervals": []}]}]"#,
        );
        let err = cmd_train(&manifest, &dir.join("model.json")).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("ON"), "{err}");
    }

    #[test]
    fn synth_detect_round_trip_recovers_segment() {
        let dir = tmp_dir("round-trip");
        let spec = dir.join("scene.json");
        write(
            &spec,
            r#"{"width": 200, "height": 150, "sigma": 0.0,
                "segments": [{"x1": 30.0, "y1": 40.0, "x2": 170.0, "y2": 100.0}]}"#,
        );
        let img = dir.join("scene.pgm");
        let gt_path = dir.join("gt.json");
        cmd_synth(&spec, &img, &gt_path, 3).unwrap();
        let out = dir.join("det.csv");
        let summary = cmd_detect(&img, &out, &Config::default()).unwrap();
        assert!(summary.segment_count >= 1);
        let det = formats::read_detection_csv(&out).unwrap();
        let top = &det[0].0;
        let gt = formats::read_gt_json(&gt_path).unwrap()[0];
        let err_direct = top.p1.distance(&gt.p1).max(top.p2.distance(&gt.p2));
        let err_swapped = top.p1.distance(&gt.p2).max(top.p2.distance(&gt.p1));
        assert!(
            err_direct.min(err_swapped) <= 2.0,
            "endpoint error {}",
            err_direct.min(err_swapped)
        );
    }
}
