use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(
    name = "matmult",
    version,
    about = "Moments of random matrix-valued multiplicative functions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub cfg: RunConfig,
}

#[derive(Subcommand, Debug, Clone, Copy, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Load a law and report its mean, symmetry and second moment.
    Validate,
    /// Dump the lifted transfer operator and its characteristic polynomial.
    Operator,
    /// Exact moment sequence, recurrence residuals and spectral fit.
    Recurrence,
    /// Second-moment expansion constants.
    Constants,
    /// Exact second moment over the squarefree histogram.
    Exact,
    /// Monte Carlo moment estimate.
    Mc,
    /// Joint spectral radius bracket of the law's atoms.
    Jsr,
    /// Spectral 2k-radii for k = 1..k-max.
    Ladder,
    /// Squarefree count and ω histogram.
    SieveStats,
    /// CSV of exact, predicted and Monte Carlo second moments over an x-grid.
    Report,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    Real,
    Complex,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Flags shared by every subcommand; echoed into every output.
#[derive(Args, Debug, Clone, Serialize)]
pub struct RunConfig {
    /// Law file (.law.json).
    #[arg(long, global = true)]
    pub law: Option<PathBuf>,
    /// Single evaluation point; accepts forms like 1e6.
    #[arg(long, global = true, value_parser = parse_count)]
    pub x: Option<u64>,
    /// Geometric grid a:b:mult (a, a·mult, … up to b).
    #[arg(long = "x-grid", global = true)]
    pub x_grid: Option<String>,
    /// Half the moment order.
    #[arg(long, global = true, default_value_t = 1)]
    pub k: usize,
    #[arg(long, global = true, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Truncation order of the expansion (1 or 2).
    #[arg(long = "N", global = true, default_value_t = 2)]
    #[serde(rename = "N")]
    pub order: usize,
    #[arg(long = "prime-bound", global = true, value_parser = parse_count, default_value = "10000000")]
    pub prime_bound: u64,
    /// Symmetric space of the lift; defaults to real for real laws.
    #[arg(long, global = true, value_enum)]
    pub flavor: Option<Flavor>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Exit with status 2 when the law is not centered.
    #[arg(long = "require-mean-zero", global = true)]
    pub require_mean_zero: bool,
    /// Last index of the moment sequence (default 2l + 10).
    #[arg(long = "n-max", global = true)]
    pub n_max: Option<usize>,
    /// Branch-and-bound gap parameter.
    #[arg(long, global = true, default_value_t = 1e-3)]
    pub delta: f64,
    #[arg(long = "max-depth", global = true, default_value_t = 16)]
    pub max_depth: usize,
    /// Node budget of the branch and bound.
    #[arg(long, global = true, value_parser = parse_count, default_value = "10000000")]
    pub budget: u64,
    #[arg(long = "k-max", global = true, default_value_t = 3)]
    pub k_max: usize,
    /// Probe index n for a_n^{1/(2kn)} in the ladder.
    #[arg(long = "n-probe", global = true)]
    pub n_probe: Option<usize>,
    /// Largest x at which `report` runs Monte Carlo.
    #[arg(long = "mc-max-x", global = true, value_parser = parse_count, default_value = "1000000")]
    pub mc_max_x: u64,
}

/// Parses a non-negative integer written plainly or in scientific notation.
pub fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let f: f64 = s.parse().map_err(|_| format!("not a number: {s}"))?;
    if !(f >= 0.0) || f.fract() != 0.0 || f > 1e18 {
        return Err(format!("not a non-negative integer: {s}"));
    }
    Ok(f as u64)
}

/// Expands `a:b:mult` into `a, a·mult, …` while the value stays `≤ b`.
pub fn parse_grid(spec: &str) -> Result<Vec<u64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("grid must look like a:b:mult, got {spec:?}"));
    }
    let a = parse_count(parts[0])?;
    let b = parse_count(parts[1])?;
    let mult = parse_count(parts[2])?;
    if a == 0 {
        return Err("grid start must be positive".into());
    }
    if mult < 2 {
        return Err("grid multiplier must be at least 2".into());
    }
    let mut out = Vec::new();
    let mut x = a;
    while x <= b {
        out.push(x);
        match x.checked_mul(mult) {
            Some(next) => x = next,
            None => break,
        }
    }
    Ok(out)
}
