use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::{Args, Parser, Subcommand};
use jumpcast_cli::{run_pipeline, run_stage, PipelineConfig, Stage};

#[derive(Parser)]
#[command(name = "jumpcast", version, about = "Jump-arrival forecasting pipeline over limit order book data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Master seed; overrides the seed in the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// TOML config; unspecified fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory holding every artifact of the run.
    #[arg(long, default_value = "run")]
    out_dir: PathBuf,
    /// Built-in profile used when no config file is given.
    #[arg(long, default_value = "demo", value_parser = ["demo", "nosignal", "tiny"])]
    scenario: String,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic event files and the planted-jump truth.
    Synth(Common),
    /// Rebuild the book and write per-second snapshots.
    Replay(Common),
    /// Label minutes with the jump test.
    Detect(Common),
    /// Compute per-second feature frames.
    Features(Common),
    /// Cut labelled, normalised windows.
    Dataset(Common),
    /// Train one model per walk-forward set.
    Train(Common),
    /// Score the test days and write the F1 grid.
    Eval(Common),
    /// Report mean attention weights of the last set.
    Attention(Common),
    /// Run every stage in order.
    Pipeline(Common),
    /// Print the effective config as TOML.
    Config(Common),
}

fn load(c: &Common) -> Result<PipelineConfig> {
    let cfg = match &c.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::preset(&c.scenario).ok_or_else(|| anyhow!("unknown scenario {}", c.scenario))?,
    };
    Ok(match c.seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    })
}

fn run(cli: Cli) -> Result<()> {
    let (stage, common) = match &cli.command {
        Command::Synth(c) => (Some(Stage::Synth), c),
        Command::Replay(c) => (Some(Stage::Replay), c),
        Command::Detect(c) => (Some(Stage::Detect), c),
        Command::Features(c) => (Some(Stage::Features), c),
        Command::Dataset(c) => (Some(Stage::Dataset), c),
        Command::Train(c) => (Some(Stage::Train), c),
        Command::Eval(c) => (Some(Stage::Eval), c),
        Command::Attention(c) => (Some(Stage::Attention), c),
        Command::Pipeline(c) => (None, c),
        Command::Config(c) => {
            print!("{}", load(c)?.to_text());
            return Ok(());
        }
    };
    let cfg = load(common)?;
    std::fs::create_dir_all(&common.out_dir)?;
    match stage {
        Some(s) => run_stage(s, &cfg, &common.out_dir)?,
        None => {
            run_pipeline(&cfg, &common.out_dir)?;
            let grid = common.out_dir.join(&cfg.paths.reports).join("grid.txt");
            print!("{}", std::fs::read_to_string(grid)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
