use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use contour_crf_cli::commands::{self, EvalMode};

/// Contour integration with an association-field CRF.
#[derive(Parser)]
#[command(name = "contour-crf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Label the segments of a soft edge map and write the contour map.
    Infer {
        /// Soft edge map (PGM or PNG).
        soft: PathBuf,
        /// Model parameters JSON; defaults when omitted.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Write PNG instead of PGM.
        #[arg(long)]
        png: bool,
    },
    /// Plain thresholding baseline.
    Threshold {
        soft: PathBuf,
        #[arg(long)]
        th: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        png: bool,
    },
    /// Score a manifest of soft maps against ground truth.
    Eval {
        manifest: PathBuf,
        #[arg(long, value_enum, default_value = "ods")]
        mode: EvalMode,
        /// Threshold for fixed mode.
        #[arg(long)]
        th: Option<f64>,
        /// Run the full pipeline with these parameters (fixed mode).
        #[arg(long)]
        params: Option<PathBuf>,
        /// Matching radius in pixels; default scales with the image diagonal.
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit parameters by maximizing mean F on a manifest.
    Train {
        manifest: PathBuf,
        /// JSON with optional `box`, `budget` and `radius`.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a pop-out stimulus, optionally labelling it.
    Synth {
        /// Stimulus JSON; the default stimulus when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the clutter seed of the stimulus.
        #[arg(long)]
        seed: Option<u64>,
        /// Run inference on the generated segments with these parameters.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Gradient-magnitude soft edge map of a grayscale image.
    Gm {
        image: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        png: bool,
    },
}

fn run(cli: Cli) -> anyhow::Result<String> {
    match cli.command {
        Command::Infer { soft, params, out, png } => commands::infer(&commands::InferArgs { soft, params, out, png }),
        Command::Threshold { soft, th, out, png } => commands::threshold(&commands::ThresholdArgs { soft, th, out, png }),
        Command::Eval { manifest, mode, th, params, radius, jobs, out } => commands::eval(&commands::EvalArgs {
            manifest,
            mode,
            th,
            params,
            radius,
            jobs,
            out,
        }),
        Command::Train { manifest, config, budget, radius, jobs, out } => commands::train(&commands::TrainArgs {
            manifest,
            config,
            budget,
            radius,
            jobs,
            out,
        }),
        Command::Synth { config, seed, params, out } => commands::synth(&commands::SynthArgs { config, seed, params, out }),
        Command::Gm { image, out, png } => commands::gm(&commands::GmArgs { image, out, png }),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(summary) => {
            eprint!("{summary}");
            if !summary.ends_with('\n') {
                eprintln!();
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
