use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rejinf_cli::{run, Command, Options};

#[derive(Parser)]
#[command(
    name = "rejinf",
    version,
    about = "Reject-inference experiments with deep generative models"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Model to train, or the only model to benchmark.
    #[arg(long, global = true)]
    model: Option<String>,

    /// Benchmark worker threads (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Generate accepted, rejected and oracle CSV files.
    Simulate,
    /// Train one model on the design's training split.
    Train,
    /// Score a saved model and write metrics and per-row scores.
    Evaluate,
    /// Run the model by scenario grid with repeated splits.
    Benchmark,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let command = match cli.command {
        Cmd::Simulate => Command::Simulate,
        Cmd::Train => Command::Train,
        Cmd::Evaluate => Command::Evaluate,
        Cmd::Benchmark => Command::Benchmark,
    };
    let opts = Options {
        config: cli.config,
        seed: cli.seed,
        out: cli.out,
        model: cli.model,
        threads: cli.threads,
    };
    match run(command, &opts) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
