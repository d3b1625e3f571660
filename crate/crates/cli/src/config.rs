use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};
use divbound::bounds::{BoundKind, KSpec, MSpec, Mode, Scenario};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Evaluate MSE lower bounds over a grid of snr values
    Bounds(BoundsArgs),
    /// Trace the generalized rate-distortion curve, or invert it at a rate
    Rd(RdArgs),
    /// Fuzz the data-processing inequality on random finite channels
    Dpi(DpiArgs),
    /// Simulate the ML estimator on an orthogonal-signal grid
    Simulate(SimulateArgs),
}

fn default_bounds() -> Vec<BoundKind> {
    vec![BoundKind::Dpt, BoundKind::Wwb, BoundKind::Cc]
}

fn default_ks() -> Vec<KSpec> {
    vec![KSpec::Finite(1), KSpec::Finite(2), KSpec::Finite(3), KSpec::Infinity]
}

fn default_m() -> MSpec {
    MSpec::Optimize
}

fn default_mode() -> Mode {
    Mode::Exact
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct BoundsArgs {
    #[arg(long)]
    pub scenario: Scenario,
    /// Fading gain variance (required for fading)
    #[arg(long)]
    #[serde(default)]
    pub sigma2: Option<f64>,
    /// Comma-separated E/N0 values in dB
    #[arg(long = "snr-db", value_delimiter = ',', num_args = 1.., required = true, allow_negative_numbers = true)]
    pub snr_db: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "dpt,wwb,cc")]
    #[serde(default = "default_bounds")]
    pub bounds: Vec<BoundKind>,
    /// Replica counts for dpt; "inf" allowed
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,inf")]
    #[serde(default = "default_ks")]
    pub k: Vec<KSpec>,
    /// Even M >= 4, or "optimize" (cc only)
    #[arg(long = "M", default_value = "optimize")]
    #[serde(rename = "M", default = "default_m")]
    pub m: MSpec,
    #[arg(long, default_value = "exact")]
    #[serde(default = "default_mode")]
    pub mode: Mode,
    /// Mean signal correlation for the awgn dpt bound
    #[arg(long, default_value_t = 0.0)]
    #[serde(default)]
    pub varrho: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RdArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub k: u32,
    /// Decade range "lo:hi" of the s grid [default: -3:10]
    #[arg(long = "s-decades", allow_hyphen_values = true)]
    #[serde(default)]
    pub s_decades: Option<String>,
    /// Grid points per decade
    #[arg(long = "per-decade", default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    #[serde(default = "one")]
    pub per_decade: u32,
    /// Explicit comma-separated s values
    #[arg(long, value_delimiter = ',', conflicts_with = "s_decades")]
    #[serde(default)]
    pub s: Vec<f64>,
    /// Solve R(D) = rate for D instead of tracing the curve
    #[arg(long, allow_negative_numbers = true, conflicts_with_all = ["s_decades", "s"])]
    #[serde(default)]
    pub invert: Option<f64>,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DpiArgs {
    #[arg(long, default_value_t = 10_000)]
    pub instances: usize,
    /// Largest alphabets "inputs x outputs"
    #[arg(long, default_value = "6x8")]
    pub alphabet: String,
    /// Largest exponent-chain length
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,
}

fn awgn() -> Scenario {
    Scenario::Awgn
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[arg(long, default_value = "awgn")]
    #[serde(default = "awgn")]
    pub scenario: Scenario,
    #[arg(long)]
    #[serde(default)]
    pub sigma2: Option<f64>,
    #[arg(long = "snr-db", value_delimiter = ',', num_args = 1.., required = true, allow_negative_numbers = true)]
    pub snr_db: Vec<f64>,
    /// Grid size, a power of two >= 8
    #[arg(long = "N", default_value_t = 256)]
    #[serde(rename = "N")]
    pub n: u32,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
}

/// Everything that determines a run. Embedded in every output header with
/// `output` and `workers` cleared, since neither affects the results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub command: Command,
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub strict: bool,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn header_json(&self) -> String {
        let cleared = RunConfig {
            output: None,
            workers: None,
            ..self.clone()
        };
        serde_json::to_string(&cleared).expect("config serializes")
    }
}
