mod commands;
mod report;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Human error probability estimation and PSF screening.
#[derive(Debug, Parser)]
#[command(name = "hra-forge", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Composite HEP from an error tally and PSF levels.
    Quantify(QuantifyArgs),
    /// Train a replicated-restart predictor on observations.
    Train(TrainArgs),
    /// Generate or evaluate a composite design.
    Design(DesignArgs),
    /// Fit a response-surface model and print its ANOVA table.
    Anova(AnovaArgs),
    /// Backward-eliminate a quadratic model and screen PSFs.
    Screen(ScreenArgs),
    /// Run the train/design/fit/screen loop to convergence.
    Pipeline(PipelineArgs),
    /// Render plots from a pipeline result directory.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct QuantifyArgs {
    /// Multiplier table CSV (defaults to the bundled table).
    #[arg(long, value_name = "PATH")]
    multipliers: Option<PathBuf>,
    /// PSF level as PSF=LABEL, e.g. A="Expansive time". Repeatable.
    #[arg(long = "level", value_name = "PSF=LABEL")]
    levels: Vec<String>,
    #[arg(long)]
    occurred: u64,
    #[arg(long)]
    potential: u64,
    /// action or diagnosis
    #[arg(long, default_value = "action")]
    mode: String,
}

#[derive(Debug, Args)]
struct TrainingFlags {
    /// key=value training/pipeline configuration file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replications: Option<usize>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Observation CSV (defaults to the bundled case-study table).
    #[arg(long, value_name = "PATH")]
    observations: Option<PathBuf>,
    /// Active PSF letters, e.g. ABCDFGH (default: all eight).
    #[arg(long)]
    psfs: Option<String>,
    #[command(flatten)]
    training: TrainingFlags,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Debug, Args)]
#[group(id = "design_source", multiple = false)]
struct DesignSourceFlags {
    /// Design CSV.
    #[arg(long, value_name = "PATH", group = "design_source")]
    design: Option<PathBuf>,
    /// Generate a central composite design instead of reading one.
    #[arg(long, group = "design_source")]
    generate: bool,
}

#[derive(Debug, Args)]
struct DesignArgs {
    #[command(flatten)]
    source: DesignSourceFlags,
    /// Factor letters for a generated design (default: all eight).
    #[arg(long)]
    psfs: Option<String>,
    /// Center runs of a generated design.
    #[arg(long, default_value_t = 6)]
    center_runs: usize,
    /// Predictor file used to fill in responses.
    #[arg(long, value_name = "PATH")]
    predictor: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct AnovaArgs {
    /// Design CSV with responses (defaults to the bundled design).
    #[arg(long, value_name = "PATH")]
    design: Option<PathBuf>,
    /// Model terms, e.g. "A, B, AB, A^2" (defaults to the case-study model).
    #[arg(long)]
    model: Option<String>,
    #[arg(long, default_value_t = 3.0)]
    power: f64,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScreenArgs {
    /// Design CSV with responses (defaults to the bundled design).
    #[arg(long, value_name = "PATH")]
    design: Option<PathBuf>,
    /// Screen this model instead of eliminating from the full quadratic.
    #[arg(long)]
    model: Option<String>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 3.0)]
    power: f64,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PipelineArgs {
    /// Observation CSV (defaults to the bundled case-study table).
    #[arg(long, value_name = "PATH")]
    observations: Option<PathBuf>,
    #[command(flatten)]
    source: DesignSourceFlags,
    #[command(flatten)]
    training: TrainingFlags,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    power: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Pipeline result directory; plots go to DIR/report.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("HRA_FORGE_THREADS") {
        let n: usize = v.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
            hra_core::Error::InvalidValue(format!("HRA_FORGE_THREADS must be a positive integer, got {v:?}"))
        })?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Quantify(a) => commands::quantify(a),
        Command::Train(a) => commands::train(a),
        Command::Design(a) => commands::design(a),
        Command::Anova(a) => commands::anova(a),
        Command::Screen(a) => commands::screen(a),
        Command::Pipeline(a) => commands::pipeline(a),
        Command::Report(a) => report::run(&a.out),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
