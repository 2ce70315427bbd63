//! Text interchange formats: edge-map CSV, ranked-detection CSV, ground
//! truth JSON, curve CSV and the batch-evaluation manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use mcmlsd_core::eval::CurvePoint;
use mcmlsd_core::markov::RankedSegment;
use mcmlsd_core::{EdgeMap, LineSegment, OrientedEdge, Point2};
use serde::{Deserialize, Serialize};

/// Reads an edge map from CSV with header `x,y,theta_deg,strength`.
/// Orientations are folded to [0, 180) on load.
pub fn read_edge_csv(path: &Path, width: u32, height: u32) -> Result<EdgeMap> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "x,y,theta_deg,strength")) => {}
        _ => bail!(
            "{}: line 1: expected header x,y,theta_deg,strength",
            path.display()
        ),
    }
    let mut edges = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields =
            parse_floats(line, 4).with_context(|| format!("{}: line {}", path.display(), i + 1))?;
        edges.push(OrientedEdge::new(
            Point2::new(fields[0], fields[1]),
            fields[2],
            fields[3],
        ));
    }
    EdgeMap::new(edges, width, height)
        .with_context(|| format!("{}: edge out of image bounds", path.display()))
}

pub fn write_edge_csv(path: &Path, em: &EdgeMap) -> Result<()> {
    let mut out = String::from("x,y,theta_deg,strength\n");
    for e in em.edges() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            e.pos.x, e.pos.y, e.theta_deg, e.strength
        ));
    }
    fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))
}

/// Writes ranked detections as CSV `rank,x1,y1,x2,y2,score` (rank from 1,
/// already sorted by descending score).
pub fn write_detection_csv(path: &Path, segments: &[RankedSegment]) -> Result<()> {
    let mut out = String::from("rank,x1,y1,x2,y2,score\n");
    for (i, s) in segments.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            i + 1,
            s.segment.p1.x,
            s.segment.p1.y,
            s.segment.p2.x,
            s.segment.p2.y,
            s.score
        ));
    }
    fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))
}

/// Reads a detection CSV back as segments in rank order.
pub fn read_detection_csv(path: &Path) -> Result<Vec<(LineSegment, f64)>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "rank,x1,y1,x2,y2,score")) => {}
        _ => bail!(
            "{}: line 1: expected header rank,x1,y1,x2,y2,score",
            path.display()
        ),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields =
            parse_floats(line, 6).with_context(|| format!("{}: line {}", path.display(), i + 1))?;
        let rank = fields[0] as usize;
        if rank != out.len() + 1 {
            bail!(
                "{}: line {}: rank {} out of order (expected {})",
                path.display(),
                i + 1,
                rank,
                out.len() + 1
            );
        }
        out.push((
            LineSegment::new(
                Point2::new(fields[1], fields[2]),
                Point2::new(fields[3], fields[4]),
            ),
            fields[5],
        ));
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
struct GtSegment {
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
}

/// Ground truth: JSON array of `{x1, y1, x2, y2}`.
pub fn read_gt_json(path: &Path) -> Result<Vec<LineSegment>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let raw: Vec<GtSegment> = serde_json::from_str(&text)
        .with_context(|| format!("{}: invalid ground truth JSON", path.display()))?;
    Ok(raw
        .into_iter()
        .map(|g| LineSegment::new(Point2::new(g.x1, g.y1), Point2::new(g.x2, g.y2)))
        .collect())
}

pub fn write_gt_json(path: &Path, segments: &[LineSegment]) -> Result<()> {
    let raw: Vec<GtSegment> = segments
        .iter()
        .map(|s| GtSegment {
            x1: s.p1.x,
            y1: s.p1.y,
            x2: s.p2.x,
            y2: s.p2.y,
        })
        .collect();
    let text = serde_json::to_string_pretty(&raw)?;
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn write_curve_csv(path: &Path, curve: &[CurvePoint]) -> Result<()> {
    let mut out = String::from("k,recall,precision,total_length\n");
    for c in curve {
        out.push_str(&format!(
            "{},{},{},{}\n",
            c.k, c.recall, c.precision, c.total_length
        ));
    }
    fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))
}

pub fn read_curve_csv(path: &Path) -> Result<Vec<CurvePoint>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "k,recall,precision,total_length")) => {}
        _ => bail!(
            "{}: line 1: expected header k,recall,precision,total_length",
            path.display()
        ),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields =
            parse_floats(line, 4).with_context(|| format!("{}: line {}", path.display(), i + 1))?;
        out.push(CurvePoint {
            k: fields[0] as usize,
            recall: fields[1],
            precision: fields[2],
            total_length: fields[3],
        });
    }
    Ok(out)
}

/// One batch-evaluation entry; `detections` absent means "run the
/// detector on `image`". Relative paths resolve against the manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalEntry {
    pub image: PathBuf,
    pub gt: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detections: Option<PathBuf>,
}

pub fn read_eval_manifest(path: &Path) -> Result<Vec<EvalEntry>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut entries: Vec<EvalEntry> = serde_json::from_str(&text)
        .with_context(|| format!("{}: invalid manifest JSON", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    for e in &mut entries {
        e.image = resolve(base, &e.image);
        e.gt = resolve(base, &e.gt);
        if let Some(d) = &e.detections {
            e.detections = Some(resolve(base, d));
        }
    }
    Ok(entries)
}

/// Training manifest: per image, an edge CSV plus labelled lines with
/// their ON intervals in arc length.
#[derive(Debug, Serialize, Deserialize)]
pub struct TrainEntry {
    pub edges: PathBuf,
    pub width: u32,
    pub height: u32,
    pub lines: Vec<TrainLine>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TrainLine {
    pub rho: f64,
    pub theta_deg: f64,
    pub on_intervals: Vec<(f64, f64)>,
}

pub fn read_train_manifest(path: &Path) -> Result<Vec<TrainEntry>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut entries: Vec<TrainEntry> = serde_json::from_str(&text)
        .with_context(|| format!("{}: invalid manifest JSON", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    for e in &mut entries {
        e.edges = resolve(base, &e.edges);
    }
    Ok(entries)
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn parse_floats(line: &str, n: usize) -> Result<Vec<f64>> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != n {
        bail!("expected {n} fields, found {}", fields.len());
    }
    fields
        .iter()
        .map(|f| {
            f.trim()
                .parse::<f64>()
                .with_context(|| format!("invalid number {f:?}"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join("mcmlsd-formats-test");
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn edge_csv_round_trip_folds_theta() {
        let p = tmp("edges.csv");
        fs::write(
            &p,
            "x,y,theta_deg,strength\n10.5,20.25,190.0,3.5\n1,2,45,1\n",
        )
        .unwrap();
        let em = read_edge_csv(&p, 100, 100).unwrap();
        assert_eq!(em.len(), 2);
        assert!((em.edges()[0].theta_deg - 10.0).abs() < 1e-12);
        let back = tmp("edges-back.csv");
        write_edge_csv(&back, &em).unwrap();
        let em2 = read_edge_csv(&back, 100, 100).unwrap();
        assert_eq!(em.edges(), em2.edges());
    }

    #[test]
    fn edge_csv_errors_name_the_line() {
        let p = tmp("bad-edges.csv");
        fs::write(&p, "x,y,theta_deg,strength\n1,2,3,4\nnope\n").unwrap();
        let err = read_edge_csv(&p, 100, 100).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn detection_csv_round_trip() {
        let p = tmp("det.csv");
        let segs = vec![
            RankedSegment {
                segment: LineSegment::new(Point2::new(1.0, 2.0), Point2::new(3.0, 4.0)),
                score: 9.5,
                method: mcmlsd_core::markov::RankMethod::MarginalSum,
                run: (0, 3),
            },
            RankedSegment {
                segment: LineSegment::new(Point2::new(5.0, 6.0), Point2::new(7.0, 8.0)),
                score: 1.25,
                method: mcmlsd_core::markov::RankMethod::MarginalSum,
                run: (0, 3),
            },
        ];
        write_detection_csv(&p, &segs).unwrap();
        let back = read_detection_csv(&p).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].0, segs[0].segment);
        assert_eq!(back[1].1, 1.25);
    }

    #[test]
    fn detection_csv_rejects_rank_gap() {
        let p = tmp("gap.csv");
        fs::write(&p, "rank,x1,y1,x2,y2,score\n1,0,0,1,1,5\n3,0,0,1,1,4\n").unwrap();
        let err = read_detection_csv(&p).unwrap_err().to_string();
        assert!(err.contains("rank 3"), "{err}");
    }

    #[test]
    fn gt_json_round_trip() {
        let p = tmp("gt.json");
        let segs = vec![LineSegment::new(
            Point2::new(0.5, 1.5),
            Point2::new(10.0, 20.0),
        )];
        write_gt_json(&p, &segs).unwrap();
        assert_eq!(read_gt_json(&p).unwrap(), segs);
    }

    #[test]
    fn curve_csv_round_trip() {
        let p = tmp("curve.csv");
        let curve = vec![CurvePoint {
            k: 10,
            recall: 0.5,
            precision: 0.75,
            total_length: 123.5,
        }];
        write_curve_csv(&p, &curve).unwrap();
        assert_eq!(read_curve_csv(&p).unwrap(), curve);
    }

    #[test]
    fn manifest_resolves_relative_paths() {
        let p = tmp("manifest.json");
        fs::write(
            &p,
            r#"[{"image": "a.pgm", "gt": "a.json"}, {"image": "/abs/b.pgm", "gt": "b.json", "detections": "b.csv"}]"#,
        )
        .unwrap();
        let m = read_eval_manifest(&p).unwrap();
        assert_eq!(m[0].image, p.parent().unwrap().join("a.pgm"));
        assert_eq!(m[1].image, Path::new("/abs/b.pgm"));
        assert!(m[1].detections.as_ref().unwrap().ends_with("b.csv"));
    }
}
