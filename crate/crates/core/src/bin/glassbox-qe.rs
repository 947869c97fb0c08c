use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use glassbox_qe::harness::{self, Command, RunConfig};
use glassbox_qe::indicators::EosPolicy;

#[derive(Parser)]
#[command(version, about = "Glass-box quality estimation for translation models")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// JSON object with any RunConfig keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    traces: Option<PathBuf>,
    #[arg(long, global = true)]
    dataset: Option<PathBuf>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true, value_parser = ["include", "exclude"])]
    eos: Option<String>,
    #[arg(long, global = true)]
    temp: Option<f64>,
    #[arg(long, global = true)]
    n_passes: Option<usize>,
    #[arg(long, global = true)]
    dropout_rate: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Indicator table from a trace file.
    Compute,
    /// Correlation report against human scores.
    Correlate,
    /// Seeded benchmark: traces, dataset and true qualities.
    Simulate,
    /// Decoder comparison on the simulator.
    Variants,
    /// Correlation across increasingly sharpened models.
    EpochSweep,
    /// In-domain versus distant segments.
    DomainShift,
    /// Best attention head on a labelled set.
    SelectHead,
    /// Per-token log-probabilities for plotting.
    Plotdata,
}

fn config(cli: &Cli) -> glassbox_qe::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = &cli.traces {
        cfg.traces = Some(v.clone());
    }
    if let Some(v) = &cli.dataset {
        cfg.dataset = Some(v.clone());
    }
    if let Some(v) = &cli.out {
        cfg.out = v.clone();
    }
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = cli.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = &cli.eos {
        cfg.eos_policy = v.parse::<EosPolicy>()?;
    }
    if let Some(v) = cli.temp {
        cfg.temperature = v;
    }
    if let Some(v) = cli.n_passes {
        cfg.n_passes = v;
    }
    if let Some(v) = cli.dropout_rate {
        cfg.dropout_rate = v;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let command = match cli.command {
        Cmd::Compute => Command::Compute,
        Cmd::Correlate => Command::Correlate,
        Cmd::Simulate => Command::Simulate,
        Cmd::Variants => Command::Variants,
        Cmd::EpochSweep => Command::EpochSweep,
        Cmd::DomainShift => Command::DomainShift,
        Cmd::SelectHead => Command::SelectHead,
        Cmd::Plotdata => Command::Plotdata,
    };
    match config(&cli).and_then(|cfg| harness::run(command, &cfg)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
