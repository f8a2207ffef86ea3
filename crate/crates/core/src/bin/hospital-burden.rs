use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hospital_burden::config::PipelineConfig;
use hospital_burden::pipeline::{Pipeline, RunOptions, Stage};

/// Daily hospital-burden signals from archived tweet dumps.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filter, deduplicate and split the dump by region.
    Ingest(Common),
    /// Clean and tokenize each region's tweets.
    Normalize(Common),
    /// Build per-country keyword lists.
    Discover(Common),
    /// Daily keyword-count and volume signals.
    Score(Common),
    /// Detect and correct the scrape truncation.
    Adjust(Common),
    /// Choose a smoother by correlation with cases.
    Smooth(Common),
    /// Plots, peak tweets and run manifests.
    Report(Common),
    /// Every stage in order.
    All(Common),
}

#[derive(Args)]
struct Common {
    /// Pipeline config (TOML), or a run manifest to reproduce.
    #[arg(long)]
    config: PathBuf,
    /// Only process this region from scoring on.
    #[arg(long)]
    region: Option<String>,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config and BURDEN_OUT_DIR.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for per-region work.
    #[arg(long)]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (stages, args): (&[Stage], Common) = match cli.command {
        Command::Ingest(a) => (&[Stage::Ingest], a),
        Command::Normalize(a) => (&[Stage::Normalize], a),
        Command::Discover(a) => (&[Stage::Discover], a),
        Command::Score(a) => (&[Stage::Score], a),
        Command::Adjust(a) => (&[Stage::Adjust], a),
        Command::Smooth(a) => (&[Stage::Smooth], a),
        Command::Report(a) => (&[Stage::Report], a),
        Command::All(a) => (&Stage::ALL, a),
    };
    let options = RunOptions {
        region: args.region,
        seed: args.seed,
        out: args.out,
        jobs: args.jobs,
    };
    let is_manifest = args.config.extension().is_some_and(|e| e == "json");
    let pipeline = if is_manifest {
        Pipeline::from_manifest(&args.config, options)
    } else {
        PipelineConfig::load(&args.config).and_then(|c| Pipeline::new(c, options))
    };
    let summary = pipeline.and_then(|mut p| p.run(stages));
    match summary {
        Ok(summary) => {
            for region in &summary.succeeded {
                eprintln!("{region}: ok");
            }
            for (region, err) in &summary.failed {
                eprintln!("{region}: failed: {err}");
            }
            ExitCode::from(summary.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
