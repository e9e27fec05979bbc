// SPDX-License-Identifier: Apache-2.0
//! Command-line flags and the optional JSON parameter file.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fuelctrl::{lambda_dagger, lambda_star, ProblemParams};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(name = "fuelctrl", version, about = "Finite-fuel control with discretionary stopping for Brownian motion")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Discount rate α [default: 1].
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Terminal cost weight δ [default: 1].
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Running cost weight λ [default: (λ* + λ†)/2].
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    /// JSON file with any of alpha, delta, lambda, dx, dt, paths, seed,
    /// cmax, xmax, tol. Flags given on the command line take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file [default: standard output].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format [default: json for regimes and verify, csv otherwise].
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Regime constants and classification.
    Regimes,
    /// Boundary curves F, G, F̄, Ḡ on a fuel grid.
    Boundaries(CurveArgs),
    /// Value function on an (x, c) grid.
    Value(GridArgs),
    /// Variational-inequality, smooth-fit and structure checks; exit 1 on failure.
    Verify,
    /// Grid dynamic programming and its comparison with the value function.
    Oracle(OracleArgs),
    /// Monte Carlo cost of the candidate strategy.
    Simulate(SimArgs),
    /// Region labels on an (x, c) grid plus boundary curves and fuel levels.
    PhaseDiagram(GridArgs),
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    /// Largest fuel level [default: 3 c̄, or 1 when λ ≥ αδ].
    #[arg(long)]
    pub cmax: Option<f64>,
    /// Number of fuel levels.
    #[arg(long, default_value_t = 200)]
    pub nc: usize,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Largest |x| [default: the verification grid's x range].
    #[arg(long)]
    pub xmax: Option<f64>,
    /// Largest fuel level [default: 3 c̄, or 1 when λ ≥ αδ].
    #[arg(long)]
    pub cmax: Option<f64>,
    #[arg(long, default_value_t = 200)]
    pub nx: usize,
    #[arg(long, default_value_t = 100)]
    pub nc: usize,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Grid spacing in x and c [default: 0.005].
    #[arg(long)]
    pub dx: Option<f64>,
    /// Largest fuel level [default: max(1, 1.5 α/(2λ)), or 1 when λ ≥ αδ].
    #[arg(long)]
    pub cmax: Option<f64>,
    /// Largest x [default: smallest safe truncation for the fuel range].
    #[arg(long)]
    pub xmax: Option<f64>,
    /// PSOR stopping tolerance [default: 1e-10].
    #[arg(long)]
    pub tol: Option<f64>,
    /// Also write the full (x, c, value, policy) grid as CSV.
    #[arg(long)]
    pub grid: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    /// Euler step [default: 1e-4].
    #[arg(long)]
    pub dt: Option<f64>,
    /// Paths per start point [default: 10000].
    #[arg(long)]
    pub paths: Option<usize>,
    /// Base seed; path i uses stream i [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Start point "x,c"; repeatable [default: one point per region].
    #[arg(long = "point", value_parser = parse_point, allow_hyphen_values = true)]
    pub points: Vec<(f64, f64)>,
    /// Write the event log of the first --record paths per point as JSON lines.
    #[arg(long)]
    pub events: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub record: usize,
}

fn parse_point(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected x,c, got {s:?}"))?;
    let x = a.trim().parse::<f64>().map_err(|e| format!("x: {e}"))?;
    let c = b.trim().parse::<f64>().map_err(|e| format!("c: {e}"))?;
    if !(x.is_finite() && c.is_finite() && c >= 0.0) {
        return Err(format!("need finite x and c >= 0, got {s:?}"));
    }
    Ok((x, c))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub alpha: Option<f64>,
    pub delta: Option<f64>,
    pub lambda: Option<f64>,
    pub dx: Option<f64>,
    pub dt: Option<f64>,
    pub paths: Option<usize>,
    pub seed: Option<u64>,
    pub cmax: Option<f64>,
    pub xmax: Option<f64>,
    pub tol: Option<f64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Flag, then file, then default.
pub fn pick<T: Copy>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn params(g: &Global, file: &FileConfig) -> Result<ProblemParams> {
    let alpha = pick(g.alpha, file.alpha, 1.0);
    let delta = pick(g.delta, file.delta, 1.0);
    let lambda = match g.lambda.or(file.lambda) {
        Some(l) => l,
        None => {
            if !(alpha > 0.0 && delta > 0.0) {
                anyhow::bail!(fuelctrl::Error::InvalidParams(format!(
                    "alpha and delta must be positive, got {alpha}, {delta}"
                )));
            }
            0.5 * (lambda_star(alpha, delta) + lambda_dagger(alpha, delta)?)
        }
    };
    Ok(ProblemParams::new(lambda, alpha, delta)?)
}
