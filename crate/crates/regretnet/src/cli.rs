//! Argument parsing and dispatch.

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use regretnet_core::baselines::PriceScope;

use crate::commands::{self, LpRequest};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "regretnet", version, about = "Train and evaluate learned auctions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct Configured {
    /// Flat TOML file; flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunConfig,
}

impl Configured {
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let base = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        Ok(base.overridden_by(&self.run))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ScopeArg {
    Item,
    Bundle,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write checkpoint, history and metrics.
    Train(Configured),
    /// Evaluate a checkpoint or a posted-price reference.
    Evaluate {
        #[command(flatten)]
        cfg: Configured,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        posted_price: Option<f64>,
        #[arg(long, value_enum, default_value = "item")]
        scope: ScopeArg,
    },
    /// Monte-Carlo revenues of the reference auctions.
    Baseline(Configured),
    /// Allocation-probability grids of a single-bidder two-item checkpoint.
    Heatmap {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 201)]
        grid: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Write the discretized LP or print its size.
    Lpexport {
        #[arg(short = 'n', default_value_t = 2)]
        n: usize,
        #[arg(short = 'm', default_value_t = 3)]
        m: usize,
        #[arg(short = 'D', default_value_t = 5)]
        d: usize,
        #[arg(long, default_value_t = 0.0)]
        lo: f64,
        #[arg(long, default_value_t = 1.0)]
        hi: f64,
        #[arg(long)]
        stats_only: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Maximum number of variables to generate.
        #[arg(long)]
        cap: Option<u64>,
    },
    /// Write test profiles of a setting as CSV.
    Sample {
        #[command(flatten)]
        cfg: Configured,
        #[arg(long, default_value_t = 100)]
        count: usize,
    },
}

fn print_paths(paths: &[PathBuf]) {
    for p in paths {
        println!("{}", p.display());
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Train(cfg) => print_paths(&commands::cmd_train(&cfg.resolve()?)?),
        Command::Evaluate { cfg, checkpoint, posted_price, scope } => {
            let scope = match scope {
                ScopeArg::Item => PriceScope::PerItem,
                ScopeArg::Bundle => PriceScope::GrandBundle,
            };
            print_paths(&commands::cmd_evaluate(&cfg.resolve()?, checkpoint.as_deref(), posted_price, scope)?)
        }
        Command::Baseline(cfg) => print_paths(&commands::cmd_baseline(&cfg.resolve()?)?),
        Command::Heatmap { checkpoint, grid, out } => print_paths(&commands::cmd_heatmap(&checkpoint, grid, &out)?),
        Command::Lpexport { n, m, d, lo, hi, stats_only, out, cap } => {
            let req = LpRequest { n, m, d, support: (lo, hi), stats_only, out, cap };
            let (stats, paths) = commands::cmd_lpexport(&req)?;
            let json = serde_json::to_string_pretty(&stats).map_err(|e| CliError::Config(e.to_string()))?;
            println!("{json}");
            print_paths(&paths);
        }
        Command::Sample { cfg, count } => print_paths(&commands::cmd_sample(&cfg.resolve()?, count)?),
    }
    Ok(())
}
