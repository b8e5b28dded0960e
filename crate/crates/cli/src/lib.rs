//! Command-line front end for `nnbound-core`.
//!
//! `nnbound <command> [--config FILE] [flags]`. Flags override config keys;
//! `--set key=value` reaches any key. Outputs go to the `out` directory.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod synthetic;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::Report;
pub use config::RunConfig;
pub use error::{exit, CliError, CliResult};

/// Environment variable capping the worker count; 0 or unset means automatic.
pub const THREADS_ENV: &str = "NNBOUND_THREADS";

#[derive(Debug, Parser)]
#[command(name = "nnbound", version, about = "Nearest-neighbour classification with redundancy-based risk bounds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// K-NN predictions, empirical risk, training margin and rejection rate.
    Classify(RunArgs),
    /// A redundant training subset relative to the probe domain.
    Redundancy(RunArgs),
    /// Bound table for explicit (m, r, δ, S, R_emp).
    Bound(RunArgs),
    /// Kernel decision rasters and their agreement with 1-NN.
    Fig1(RunArgs),
    /// Thm 4 bound against S for several r, with S_opt.
    Fig2(RunArgs),
    /// Thm 4 bound against r for several S.
    Fig3(RunArgs),
    /// classify, redundancy and bound in one report.
    Selfbound(RunArgs),
}

#[derive(Debug, Default, Args)]
pub struct RunArgs {
    /// key = value config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override any config key.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub dataset: Option<String>,
    #[arg(long)]
    pub generator: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub metric: Option<String>,
    #[arg(short = 'K', long = "K", visible_alias = "k")]
    pub k: Option<String>,
    #[arg(short = 'L', long = "L")]
    pub l: Option<String>,
    #[arg(long)]
    pub probe: Option<String>,
    #[arg(long)]
    pub sigma: Option<String>,
    #[arg(long)]
    pub delta: Option<String>,
    /// Sparsity values, comma separated.
    #[arg(long = "S")]
    pub s: Option<String>,
    /// Theorem numbers, comma separated.
    #[arg(long)]
    pub thm: Option<String>,
    #[arg(long)]
    pub m: Option<String>,
    #[arg(long)]
    pub r: Option<String>,
    #[arg(long = "r-emp")]
    pub r_emp: Option<String>,
    #[arg(long = "r-list")]
    pub r_list: Option<String>,
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub order: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long = "abstain-as-half")]
    pub abstain_as_half: bool,
}

impl RunArgs {
    /// Config file (if any) with flags applied on top.
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let named = [
            ("dataset", &self.dataset),
            ("generator", &self.generator),
            ("seed", &self.seed),
            ("metric", &self.metric),
            ("K", &self.k),
            ("L", &self.l),
            ("probe", &self.probe),
            ("sigma", &self.sigma),
            ("delta", &self.delta),
            ("S", &self.s),
            ("thm", &self.thm),
            ("m", &self.m),
            ("r", &self.r),
            ("R_emp", &self.r_emp),
            ("r_list", &self.r_list),
            ("method", &self.method),
            ("order", &self.order),
            ("out", &self.out),
        ];
        for (key, value) in named {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        if self.abstain_as_half {
            cfg.abstain_as_half = true;
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }
}

impl Command {
    pub fn args(&self) -> &RunArgs {
        match self {
            Command::Classify(a)
            | Command::Redundancy(a)
            | Command::Bound(a)
            | Command::Fig1(a)
            | Command::Fig2(a)
            | Command::Fig3(a)
            | Command::Selfbound(a) => a,
        }
    }

    /// Runs the pipeline without touching the file system.
    pub fn execute(&self, cfg: &RunConfig) -> CliResult<Report> {
        match self {
            Command::Classify(_) => commands::classify(cfg),
            Command::Redundancy(_) => commands::redundancy(cfg),
            Command::Bound(_) => commands::bound(cfg),
            Command::Fig1(_) => commands::fig1(cfg),
            Command::Fig2(_) => commands::fig2(cfg),
            Command::Fig3(_) => commands::fig3(cfg),
            Command::Selfbound(_) => commands::selfbound(cfg),
        }
    }
}

/// Worker count from [`THREADS_ENV`].
pub fn thread_count() -> CliResult<usize> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(0),
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{THREADS_ENV} = `{v}` is not a non-negative integer"))),
    }
}

/// Resolves the config, runs the command in a sized thread pool and commits
/// its files. Returns the stdout summary.
pub fn run(cli: &Cli) -> CliResult<String> {
    let cfg = cli.command.args().resolve()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count()?)
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    let report = pool.install(|| cli.command.execute(&cfg))?;
    report.outputs.commit(&cfg.out)?;
    Ok(report.stdout)
}
