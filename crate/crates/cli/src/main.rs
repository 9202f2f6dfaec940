mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

const VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    " (",
    env!("BUILD_TARGET"),
    ", ",
    env!("BUILD_PROFILE"),
    ")"
);

/// Straighten bent slender bodies from binary masks and classify their
/// width profiles.
///
/// Relative output paths are resolved against UNWRAP_OUT_DIR when it is
/// set. UNWRAP_THREADS caps the worker pool.
#[derive(Debug, Parser)]
#[command(name = "unwrap", version = VERSION)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Trace and condition the outer boundary of a mask.
    Contour(commands::ContourArgs),
    /// Straighten a mask by matched cross sections along the neutral line.
    UnwrapNeutral(commands::NeutralArgs),
    /// Straighten an image by morphological inversion of the bend.
    UnwrapMorph(commands::MorphArgs),
    /// Bend a straight template and write the mask with its ground truth.
    Synth(commands::SynthArgs),
    /// Build and tune one representative profile per label.
    Train(commands::TrainArgs),
    /// Assign profiles to the nearest representative.
    Classify(commands::ClassifyArgs),
    /// Consistency measures a1..a5 between profiles of one body.
    Metrics(commands::MetricsArgs),
    /// Bend, noise and unwrap the standard templates with both methods.
    EvalRoundtrip(commands::RoundtripArgs),
}

/// Error printed as one JSON object on stderr.
#[derive(Debug)]
pub struct Failure {
    pub module: &'static str,
    pub path: Option<PathBuf>,
    pub message: String,
}

impl Failure {
    pub fn new(module: &'static str, path: Option<PathBuf>, message: impl ToString) -> Self {
        Self {
            module,
            path,
            message: message.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("UNWRAP_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let result = match &cli.command {
        Command::Contour(a) => commands::contour(a),
        Command::UnwrapNeutral(a) => commands::unwrap_neutral(a),
        Command::UnwrapMorph(a) => commands::unwrap_morph(a),
        Command::Synth(a) => commands::synth(a),
        Command::Train(a) => commands::train(a),
        Command::Classify(a) => commands::classify(a),
        Command::Metrics(a) => commands::metrics(a),
        Command::EvalRoundtrip(a) => commands::eval_roundtrip(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let body = serde_json::json!({
                "error": {
                    "module": f.module,
                    "path": f.path.as_ref().map(|p| p.display().to_string()),
                    "message": f.message,
                }
            });
            eprintln!("{body}");
            ExitCode::FAILURE
        }
    }
}
