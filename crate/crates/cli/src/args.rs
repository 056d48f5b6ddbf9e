//! Command-line flags and key-value config files.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "dppsim", version, about = "Simulate continuous determinantal point processes", args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Draw independent replicates of a model.
    Simulate(SimulateArgs),
    /// Simulate the missing points of a partially observed projection DPP.
    Condition(ConditionArgs),
    /// Time the samplers on a benchmark grid.
    Bench(BenchArgs),
    /// Run a validation suite; exits with status 1 if any check fails.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelName {
    /// Fourier projection kernel on the unit box.
    FourierProj,
    /// Gaussian kernel approximated by a random Fourier projection on the unit box.
    FourierGauss,
    /// Beta-Ginibre process on a disc.
    Ginibre,
    /// Inhomogeneous Gaussian-type DPP with Hermite eigenfunctions.
    GaussInhom,
    /// Homogeneous Gaussian-type DPP on the unit ball by thinning.
    GaussBall,
    /// Bessel-type DPP on the unit disc.
    Bessel,
    /// Homogeneous Poisson process on the unit box.
    Poisson,
}

impl ModelName {
    pub fn id(&self) -> &'static str {
        match self {
            ModelName::FourierProj => "fourier-proj",
            ModelName::FourierGauss => "fourier-gauss",
            ModelName::Ginibre => "ginibre",
            ModelName::GaussInhom => "gauss-inhom",
            ModelName::GaussBall => "gauss-ball",
            ModelName::Bessel => "bessel",
            ModelName::Poisson => "poisson",
        }
    }
}

/// A scale parameter or the keyword `max` for the existence boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scale {
    Max,
    Value(f64),
}

impl FromStr for Scale {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "max" => Ok(Scale::Max),
            v => v.parse().map(Scale::Value).map_err(|_| format!("expected a number or \"max\", got {v:?}")),
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scale::Max => write!(f, "max"),
            Scale::Value(v) => write!(f, "{v}"),
        }
    }
}

/// A window radius or `auto` for the unit-area disc.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Radius {
    Auto,
    Value(f64),
}

impl FromStr for Radius {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "auto" => Ok(Radius::Auto),
            v => v.parse().map(Radius::Value).map_err(|_| format!("expected a number or \"auto\", got {v:?}")),
        }
    }
}

#[derive(Args, Clone, Debug)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: Option<ModelName>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Frequency cube half-width for fourier-proj.
    #[arg(long)]
    pub ell: Option<i64>,
    /// Number of frequencies for fourier-proj (nearest to the origin).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub rho: Option<f64>,
    /// Range parameter, or "max".
    #[arg(long)]
    pub alpha: Option<Scale>,
    /// Ginibre scale, or "max".
    #[arg(long)]
    pub beta: Option<Scale>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Disc radius for ginibre, or "auto" for the unit-area disc.
    #[arg(long = "R", alias = "radius")]
    pub radius: Option<Radius>,
    /// Truncation tolerance.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub algo: Option<String>,
}

#[derive(Args, Clone, Debug)]
pub struct OutputArgs {
    /// Random seed; drawn from the OS and recorded in the manifest when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    #[arg(long, default_value = "dppsim-out")]
    pub out: PathBuf,
    /// Also write an SVG scatter plot per replicate.
    #[arg(long)]
    pub svg: bool,
    /// Key-value file with default flag values; explicit flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Clone, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ConditionMode {
    /// Observed points form a thinned sample; simulate the deleted ones.
    Palm,
    /// Observed points lie outside a region; fill the region.
    Inpaint,
}

#[derive(Args, Clone, Debug)]
pub struct ConditionArgs {
    /// CSV file of observed points in the unit box.
    #[arg(long)]
    pub observed: PathBuf,
    #[arg(long, value_enum)]
    pub mode: ConditionMode,
    /// Retention probability of the thinning (palm mode).
    #[arg(long, default_value_t = 0.5)]
    pub retention: f64,
    /// Box region as lower corner then upper corner, comma separated (inpaint mode).
    #[arg(long)]
    pub region: Option<String>,
    /// Total cardinality; derived from the observation when absent.
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScenarioName {
    Table1,
    Table2,
}

#[derive(Args, Clone, Debug)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub scenario: ScenarioName,
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Comma-separated intensity grid replacing the default one.
    #[arg(long)]
    pub intensities: Option<String>,
    #[arg(long, default_value = "dppsim-bench")]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SuiteName {
    Fourier,
    Ginibre,
    Gaussian,
    Bessel,
    Conditional,
    All,
}

#[derive(Args, Clone, Debug)]
pub struct ValidateArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub suite: SuiteName,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Optional path for a JSON report.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", i + 1)))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(CliError::Usage(format!("config line {}: invalid key {:?}", i + 1, k.trim())));
        }
        out.push((key, v.trim().trim_matches('"').to_string()));
    }
    Ok(out)
}

fn config_path(argv: &[String]) -> Option<PathBuf> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

/// Inserts the entries of the config file named by `--config` right after the
/// subcommand, so that later explicit flags override them.
pub fn expand_config(argv: Vec<String>) -> Result<Vec<String>, CliError> {
    let Some(path) = config_path(&argv) else { return Ok(argv) };
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let entries = parse_config(&text)?;
    let mut flags = Vec::new();
    for (k, v) in entries {
        match v.as_str() {
            "true" => flags.push(format!("--{k}")),
            "false" => {}
            _ => {
                flags.push(format!("--{k}"));
                flags.push(v);
            }
        }
    }
    if argv.len() < 2 {
        return Ok(argv);
    }
    let mut out = argv[..2].to_vec();
    out.extend(flags);
    out.extend_from_slice(&argv[2..]);
    Ok(out)
}

pub fn parse_list(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("not a number: {s:?}"))))
        .collect()
}

pub fn display_path(p: &Path) -> String {
    p.display().to_string()
}
