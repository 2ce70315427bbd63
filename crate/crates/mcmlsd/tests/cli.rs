//! End-to-end checks of the installed binary: exit codes, output formats
//! and determinism of the full synth -> detect -> eval loop.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mcmlsd"))
}

fn work_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("mcmlsd-cli-test").join(name);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn assert_code(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn write_scene(dir: &Path) -> PathBuf {
    let spec = dir.join("scene.json");
    std::fs::write(
        &spec,
        r#"{"width": 200, "height": 150, "sigma": 4.0,
            "segments": [{"x1": 30.0, "y1": 40.0, "x2": 170.0, "y2": 100.0},
                         {"x1": 40.0, "y1": 120.0, "x2": 180.0, "y2": 20.0}]}"#,
    )
    .unwrap();
    spec
}

fn s(path: &Path) -> String {
    path.to_str().unwrap().to_string()
}

#[test]
fn synth_detect_eval_loop() {
    let dir = work_dir("loop");
    let spec = write_scene(&dir);
    let img = dir.join("scene.pgm");
    let gt = dir.join("gt.json");
    let det = dir.join("det.csv");
    let curve = dir.join("curve.csv");

    assert_code(
        &run(&["synth", &s(&spec), &s(&img), &s(&gt), "--seed", "9"]),
        0,
    );
    assert_code(&run(&["detect", &s(&img), &s(&det)]), 0);
    let out = run(&[
        "eval",
        &s(&gt),
        &s(&det),
        &s(&curve),
        "--threshold",
        "2.8284271247461903",
    ]);
    assert_code(&out, 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("max_recall="), "{stdout}");

    // both rendered segments recovered; a couple of pixels may be lost
    // at the endpoints
    let curve_text = std::fs::read_to_string(&curve).unwrap();
    let mut lines = curve_text.lines();
    assert_eq!(lines.next(), Some("k,recall,precision,total_length"));
    let max_recall = lines
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .fold(0.0f64, f64::max);
    assert!(max_recall >= 0.95, "max recall {max_recall}");
}

#[test]
fn detect_is_deterministic() {
    let dir = work_dir("determinism");
    let spec = write_scene(&dir);
    let img = dir.join("scene.pgm");
    let gt = dir.join("gt.json");
    assert_code(
        &run(&["synth", &s(&spec), &s(&img), &s(&gt), "--seed", "5"]),
        0,
    );

    let a = dir.join("a.csv");
    let b = dir.join("b.csv");
    assert_code(&run(&["detect", &s(&img), &s(&a)]), 0);
    assert_code(&run(&["detect", &s(&img), &s(&b)]), 0);
    assert_eq!(
        std::fs::read(&a).unwrap(),
        std::fs::read(&b).unwrap(),
        "detection output differs between identical runs"
    );
}

#[test]
fn missing_input_is_a_usage_error() {
    let dir = work_dir("missing");
    let out = run(&["detect", "no-such-image.pgm", &s(&dir.join("out.csv"))]);
    assert_code(&out, 2);
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("no-such-image.pgm"),
        "stderr should name the missing file"
    );
}

#[test]
fn corrupt_image_is_a_usage_error() {
    let dir = work_dir("corrupt");
    let img = dir.join("bad.pgm");
    std::fs::write(&img, b"P5\n10 10\n255\nshort").unwrap();
    assert_code(&run(&["detect", &s(&img), &s(&dir.join("out.csv"))]), 2);
}

#[test]
fn bad_flag_value_is_rejected_by_clap() {
    let dir = work_dir("badflag");
    let out = run(&["detect", "x.pgm", &s(&dir.join("out.csv")), "--method", "7"]);
    assert_code(&out, 2);
}

#[test]
fn config_file_unknown_key_is_a_usage_error() {
    let dir = work_dir("badcfg");
    let cfg = dir.join("bad.conf");
    std::fs::write(&cfg, "delta_rh = 0.5\n").unwrap();
    let out = run(&[
        "detect",
        "x.pgm",
        &s(&dir.join("out.csv")),
        "--config",
        &s(&cfg),
    ]);
    assert_code(&out, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn flag_overrides_config_max_lines() {
    let dir = work_dir("override");
    let spec = write_scene(&dir);
    let img = dir.join("scene.pgm");
    let gt = dir.join("gt.json");
    assert_code(
        &run(&["synth", &s(&spec), &s(&img), &s(&gt), "--seed", "3"]),
        0,
    );

    let cfg = dir.join("one.conf");
    std::fs::write(&cfg, "max_lines = 1\n").unwrap();
    let det = dir.join("det.csv");
    let out = run(&[
        "detect",
        &s(&img),
        &s(&det),
        "--config",
        &s(&cfg),
        "--max-lines",
        "500",
    ]);
    assert_code(&out, 0);
    // with the cap restored by the flag, both segments come back
    let rows = std::fs::read_to_string(&det).unwrap().lines().count();
    assert!(
        rows >= 3,
        "expected header plus 2 detections, got {rows} rows"
    );
}

#[test]
fn synth_rejects_out_of_bounds_scene() {
    let dir = work_dir("oob");
    let spec = dir.join("scene.json");
    std::fs::write(
        &spec,
        r#"{"width": 50, "height": 50, "sigma": 0.0,
            "segments": [{"x1": -3.0, "y1": 10.0, "x2": 40.0, "y2": 10.0}]}"#,
    )
    .unwrap();
    let out = run(&[
        "synth",
        &s(&spec),
        &s(&dir.join("i.pgm")),
        &s(&dir.join("g.json")),
        "--seed",
        "1",
    ]);
    assert_code(&out, 2);
}
