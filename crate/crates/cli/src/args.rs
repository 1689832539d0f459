use std::num::NonZeroUsize;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ouhaar::DyadicRational;

#[derive(Debug, Parser)]
#[command(
    name = "ouhaar",
    version,
    about = "Sample and check Wiener and Ornstein-Uhlenbeck paths built from compactly supported bases"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub config: RunConfig,

    /// Worker threads for ensemble generation.
    #[arg(long, env = "OU_HAAR_THREADS", global = true, hide = true)]
    pub threads: Option<NonZeroUsize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate basis elements `(n, k, t, psi_value, phi_value)` for `n <= level`.
    Basis,
    /// Sample paths on the dyadic grid of the given level.
    Sample,
    /// Compare covariance estimates against the closed form on a grid.
    Cov,
    /// Run every invariant check and emit a report; exits 1 on any failure.
    Verify {
        /// Replace the recurrence factor `cosh(α 2^-n)` by `cosh(α 2^n)`.
        #[arg(long, hide = true)]
        corrupt_recurrence: bool,
    },
    /// Bracket the first passage of each path across a constant threshold.
    Fpt {
        /// Level at which a crossing is bracketed.
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        threshold: f64,
        /// Split a segment when the midpoint bridge law puts more mass than
        /// this above the threshold; 0 refines everything.
        #[arg(long, default_value_t = 1e-3, allow_hyphen_values = true)]
        p_cross_floor: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Diffusion coefficient Γ.
    #[arg(long, default_value_t = 1.0, global = true, allow_hyphen_values = true)]
    pub gamma: f64,
    /// Mean-reversion rate α; 0 selects the Wiener process.
    #[arg(long, default_value_t = 1.0, global = true, allow_hyphen_values = true)]
    pub alpha: f64,
    /// Dyadic level; each subcommand reads it as its depth or resolution.
    #[arg(long, default_value_t = 10, global = true)]
    pub level: u32,
    #[arg(long, default_value_t = 42, global = true)]
    pub seed: u64,
    /// Number of sample paths.
    #[arg(long = "paths", default_value_t = 1000, global = true)]
    pub n_paths: u64,
    /// Comma-separated evaluation points written as `k/2^N`.
    #[arg(long, value_parser = parse_grid, global = true)]
    pub grid: Option<Grid>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
}

/// Evaluation points in the order given on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid(pub Vec<DyadicRational>);

fn parse_grid(text: &str) -> Result<Grid, String> {
    text.split(',')
        .map(str::trim)
        .filter(|item| !item.is_empty())
        .map(|item| {
            item.parse::<DyadicRational>()
                .map_err(|e| format!("{item:?}: {e}"))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Grid)
}
