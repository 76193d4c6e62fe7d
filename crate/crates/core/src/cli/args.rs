use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::integrators::Scheme;

#[derive(Debug, Parser)]
#[command(name = "ltem", version, about = "Positivity-preserving LTEM experiments")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Model preset: lv2, lv2-fig2, lv3, lv1.
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// Policy preset: ex1-eps{ε}, fig2-eps{ε}, ex2, scalar-default.
    #[arg(long, global = true)]
    pub policy: Option<String>,
    /// Random seed; falls back to the config file, then LTEM_SEED, then 42.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of Monte Carlo paths.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub paths: Option<u64>,
    /// Reference step exponent: Δ_ref = 2^-REF.
    #[arg(long = "ref", global = true)]
    pub ref_exponent: Option<u32>,
    /// Comma-separated ladder of step exponents.
    #[arg(long, global = true, value_delimiter = ',')]
    pub ladder: Option<Vec<u32>>,
    /// Horizon T.
    #[arg(long, global = true)]
    pub horizon: Option<f64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// TOML file with defaults for any of the flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
pub enum Format {
    #[value(name = "csv")]
    #[serde(rename = "csv")]
    Csv,
    #[value(name = "csv+svg")]
    #[serde(rename = "csv+svg")]
    CsvSvg,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Strong errors over a step ladder and the fitted order.
    Converge {
        /// Error order p in E|y_ref(T) - y(T)|^p.
        #[arg(long = "p-norm")]
        p_norm: Option<f64>,
        /// Comma-separated schemes (ltem, ltem1d, tem).
        #[arg(long, value_delimiter = ',', value_parser = parse_scheme)]
        schemes: Option<Vec<Scheme>>,
    },
    /// Percentages of paths with non-positive values.
    Positivity {
        /// Comma-separated cells T:exponent; defaults to the horizon with every ladder step.
        #[arg(long, value_delimiter = ',', value_parser = parse_cell)]
        cells: Option<Vec<(f64, u32)>>,
        #[arg(long, value_delimiter = ',', value_parser = parse_scheme)]
        schemes: Option<Vec<Scheme>>,
        /// Trajectories written per scheme for the first cell.
        #[arg(long)]
        trajectories: Option<usize>,
    },
    /// Step-size admissibility and sampled assumption diagnostics.
    Check {
        /// Error order p.
        #[arg(long)]
        p: Option<f64>,
        /// Moment order J.
        #[arg(long = "big-j")]
        big_j: Option<f64>,
        /// Inverse-moment order K.
        #[arg(long = "big-k")]
        big_k: Option<f64>,
        /// Sample count of the assumption diagnostics.
        #[arg(long)]
        samples: Option<usize>,
        /// Override of the policy's bound constant.
        #[arg(long = "bound-const")]
        bound_const: Option<f64>,
    },
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse::<Scheme>().map_err(|e| e.to_string())
}

fn parse_cell(s: &str) -> Result<(f64, u32), String> {
    let (t, e) = s
        .split_once(':')
        .ok_or_else(|| format!("cell '{s}' is not of the form T:exponent"))?;
    let t: f64 = t.parse().map_err(|_| format!("bad horizon in '{s}'"))?;
    let e: u32 = e.parse().map_err(|_| format!("bad exponent in '{s}'"))?;
    Ok((t, e))
}

/// Keys accepted in the `--config` file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub model: Option<String>,
    pub policy: Option<String>,
    pub seed: Option<u64>,
    pub paths: Option<u64>,
    #[serde(rename = "ref")]
    pub ref_exponent: Option<u32>,
    pub ladder: Option<Vec<u32>>,
    pub horizon: Option<f64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub format: Option<Format>,
    pub p_norm: Option<f64>,
    pub schemes: Option<Vec<Scheme>>,
    pub cells: Option<Vec<String>>,
    pub trajectories: Option<usize>,
    pub p: Option<f64>,
    pub big_j: Option<f64>,
    pub big_k: Option<f64>,
    pub samples: Option<usize>,
    pub bound_const: Option<f64>,
}

impl FileConfig {
    pub fn parse_cells(&self) -> Result<Option<Vec<(f64, u32)>>, String> {
        self.cells
            .as_ref()
            .map(|v| v.iter().map(|s| parse_cell(s)).collect())
            .transpose()
    }
}
