use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fairpca_core::{IterateMode, Method, MwConfig, ScaleMode, StepRule};

#[derive(Debug, Parser)]
#[command(name = "fairpca", version, about = "Fair PCA: min-max per-group reconstruction loss")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a small demonstration dataset as CSV.
    Synth(SynthArgs),
    /// Fit a fair projection and save it as a JSON model.
    Fit(FitArgs),
    /// Embed rows with a saved model.
    Transform(TransformArgs),
    /// Per-group loss report for vanilla and fair PCA over a range of dimensions.
    Audit(AuditArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Two groups of four points on the coordinate axes of the plane.
    Cross,
    /// One group on both axes, one group on the first axis only.
    Skew,
    /// Three groups in 3-space, one per coordinate axis.
    Kaxes,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub preset: Preset,
    /// Nonzero seeds add uniform noise of magnitude at most 1e-6.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Options shared by `fit` and `audit`.
#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Initial MW step size.
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    /// Oracle-call budget for MW.
    #[arg(long, default_value_t = 200)]
    pub max_iters: usize,
    /// Duality gap at which MW stops.
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    /// Which iterate MW reports: average, last or best.
    #[arg(long, default_value = "best", value_parser = parse_from_str::<IterateMode>)]
    pub iterate_mode: IterateMode,
    /// Step-size rule: model-search (adaptive) or fixed (always --eta).
    #[arg(long, default_value = "model-search", value_parser = parse_from_str::<StepRule>)]
    pub step_rule: StepRule,
    /// Preprocessing: none, pixel or unit-variance.
    #[arg(long, default_value = "none", value_parser = parse_from_str::<ScaleMode>)]
    pub scale: ScaleMode,
    /// Skip rescaling the data so every group's covariance has top eigenvalue <= 1.
    #[arg(long)]
    pub no_width_norm: bool,
}

impl SolverArgs {
    pub fn config(&self) -> MwConfig {
        MwConfig {
            eta: self.eta,
            max_iters: self.max_iters,
            tol: self.tol,
            iterate_mode: self.iterate_mode,
            step_rule: self.step_rule,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub group_col: String,
    /// Target dimension d.
    #[arg(long)]
    pub dims: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the per-iteration duality gap as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub group_col: String,
    /// Inclusive range "a..b", or a single dimension.
    #[arg(long, value_parser = parse_dims)]
    pub dims: DimRange,
    /// Comma-separated subset of vanilla,fair.
    #[arg(long, value_delimiter = ',', default_value = "vanilla,fair", value_parser = parse_method)]
    pub methods: Vec<Method>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: PathBuf,
}

/// Inclusive, nonempty range of target dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DimRange {
    pub start: usize,
    pub end: usize,
}

impl DimRange {
    pub fn dims(&self) -> Vec<usize> {
        (self.start..=self.end).collect()
    }
}

fn parse_dims(s: &str) -> Result<DimRange, String> {
    let parse = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| format!("{t:?} is not a nonnegative integer"))
    };
    let (start, end) = match s.split_once("..") {
        Some((a, b)) => (parse(a)?, parse(b.strip_prefix('=').unwrap_or(b))?),
        None => {
            let d = parse(s)?;
            (d, d)
        }
    };
    if start > end {
        return Err(format!("empty dimension range {s:?}"));
    }
    if start == 0 {
        return Err("dimensions start at 1".into());
    }
    Ok(DimRange { start, end })
}

fn parse_method(s: &str) -> Result<Method, String> {
    match s.trim() {
        "vanilla" => Ok(Method::Vanilla),
        "fair" => Ok(Method::Fair),
        other => Err(format!("unknown method {other:?} (expected vanilla or fair)")),
    }
}

fn parse_from_str<T>(s: &str) -> Result<T, String>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    s.parse::<T>().map_err(|e| e.to_string())
}
