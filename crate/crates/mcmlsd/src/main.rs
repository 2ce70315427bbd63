use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mcmlsd::commands::{self, CliError};
use mcmlsd::config::{parse_method, parse_mode, Config};

#[derive(Parser)]
#[command(
    name = "mcmlsd",
    version,
    about = "MCMLSD line segment detection toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonOpts {
    /// Flat key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Segment ranking method.
    #[arg(long, value_parser = ["1", "2", "3", "4", "mcmlsd2"])]
    method: Option<String>,
    /// Cap on extracted Hough lines.
    #[arg(long)]
    max_lines: Option<usize>,
    /// Extra transition-probability scaling factor.
    #[arg(long)]
    resolution_scale: Option<f64>,
    /// Point-match distance threshold, pixels.
    #[arg(long)]
    threshold: Option<f64>,
    /// Evaluation matching mode.
    #[arg(long, value_parser = ["segment", "pixel"])]
    mode: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Detect line segments in a PGM image or edge CSV.
    Detect {
        /// Input image (.pgm) or edge map (.csv).
        input: PathBuf,
        /// Output detection CSV.
        output: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Evaluate a detection file against ground truth.
    Eval {
        /// Ground truth JSON.
        gt: PathBuf,
        /// Detection CSV.
        detections: PathBuf,
        /// Output curve CSV.
        output: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Batch-evaluate a manifest of images, averaging curves per k.
    Curves {
        /// Manifest JSON: [{image, gt, detections?}, ...].
        manifest: PathBuf,
        /// Output curve CSV.
        output: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Train the likelihood and prior model from labelled edges.
    Train {
        /// Training manifest JSON.
        manifest: PathBuf,
        /// Output model JSON.
        output: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Render a synthetic scene and its ground truth.
    Synth {
        /// Scene JSON: {width, height, sigma, segments}.
        spec: PathBuf,
        /// Output image PGM.
        image: PathBuf,
        /// Output ground truth JSON.
        gt: PathBuf,
        /// Noise seed.
        #[arg(long)]
        seed: u64,
    },
}

fn build_config(common: &CommonOpts) -> Result<Config, CliError> {
    let mut cfg = match &common.config {
        Some(p) => Config::load(p).map_err(CliError::Input)?,
        None => Config::default(),
    };
    if let Some(m) = &common.method {
        cfg.method = parse_method(m).map_err(CliError::Input)?;
    }
    if let Some(n) = common.max_lines {
        cfg.hough.max_lines = n;
    }
    if let Some(s) = common.resolution_scale {
        cfg.resolution_scale = s;
    }
    if let Some(t) = common.threshold {
        cfg.threshold = t;
    }
    if let Some(m) = &common.mode {
        cfg.mode = parse_mode(m).map_err(CliError::Input)?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Detect {
            input,
            output,
            common,
        } => {
            let cfg = build_config(common)?;
            commands::cmd_detect(input, output, &cfg)?;
        }
        Command::Eval {
            gt,
            detections,
            output,
            common,
        } => {
            let cfg = build_config(common)?;
            commands::cmd_eval(gt, detections, output, &cfg)?;
        }
        Command::Curves {
            manifest,
            output,
            common,
        } => {
            let cfg = build_config(common)?;
            commands::cmd_curves(manifest, output, &cfg)?;
        }
        Command::Train {
            manifest, output, ..
        } => {
            commands::cmd_train(manifest, output)?;
        }
        Command::Synth {
            spec,
            image,
            gt,
            seed,
        } => {
            commands::cmd_synth(spec, image, gt, *seed)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
