//! Flag definitions and config-file merging.
//!
//! Every option can come from the command line or from a flat JSON config
//! file whose keys mirror the long flag names (`{"gamma": 0.5, "p-extrap":
//! "l1", ...}`). Command-line values always win over file values, which win
//! over the built-in defaults.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use extrabal::data::{HolderParams, PExtrap, PImbalance, ProblemConfig, SolverConfig};
use extrabal::error::{Error, Result};
use extrabal::sensitivity::{log_grid, BaselineFlags};
use serde_json::Value;

#[derive(Debug, Parser)]
#[command(
    name = "extrabal",
    about = "Extrapolation-regularized balancing weights: solver, baselines, error bounds, diagnostics, and sensitivity sweeps",
    long_about = None,
    version
)]
pub struct Cli {
    /// Increase verbosity (-v: info, -vv: per-epoch debug)
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    /// Flat JSON config file mirroring the long flag names; command-line
    /// flags override file values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate weights by minimizing the penalized balancing objective
    Solve(SolveArgs),
    /// Run the (gamma, lambda) sensitivity sweep and emit CSV + SVG charts
    Sweep(SweepArgs),
    /// Compute the OLS/ridge/IPW implied-weight baselines
    Baselines(BaselinesArgs),
    /// Compute an error-bound report for a weights file
    Bound(BoundArgs),
    /// Print diagnostics for a weights file
    Diagnose(DiagnoseArgs),
    /// Generate a synthetic scenario and run a replication study
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PImbalanceArg {
    L2,
    Linf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PExtrapArg {
    L1,
    L2,
    Linf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundArg {
    Worst,
    Prop1,
    Prop2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Linear,
    Nonlinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Solver,
    Ols,
    Ridge,
}

/// Data location flags shared by the data-driven subcommands.
#[derive(Debug, Args, Default, Clone)]
pub struct IoArgs {
    /// Source CSV (feature columns + outcome column)
    #[arg(long)]
    pub source: Option<PathBuf>,
    /// Target CSV (one row = point, several rows = sample)
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// Output directory (created if absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Name of the outcome column in the source file
    #[arg(long)]
    pub y_col: Option<String>,
    /// Name of a unit-id column in the source file
    #[arg(long)]
    pub id_col: Option<String>,
}

/// Objective hyperparameters shared by solve/sweep/bound.
#[derive(Debug, Args, Default, Clone)]
pub struct ProblemArgs {
    /// Extrapolation penalty weight gamma
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    /// Dispersion penalty weight lambda
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// Holder exponent alpha
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    /// Holder constant a
    #[arg(long, allow_negative_numbers = true)]
    pub holder_a: Option<f64>,
    /// Sub-Gaussian noise scale sigma
    #[arg(long, allow_negative_numbers = true)]
    pub sigma: Option<f64>,
    /// Bound confidence level delta
    #[arg(long, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    /// Norm for the imbalance term
    #[arg(long, value_enum)]
    pub p_imbalance: Option<PImbalanceArg>,
    /// Norm for the extrapolation term
    #[arg(long, value_enum)]
    pub p_extrap: Option<PExtrapArg>,
    /// Rescale weights to sum to one after every step (default)
    #[arg(long, overrides_with = "no_normalize")]
    pub normalize: bool,
    /// Keep weights unnormalized
    #[arg(long)]
    pub no_normalize: bool,
    /// Min-max scale features (and the target with the same map) first
    #[arg(long, overrides_with = "no_scale")]
    pub scale: bool,
    /// Leave features unscaled (default)
    #[arg(long)]
    pub no_scale: bool,
    /// Use ||X_i - x*||^alpha instead of ||X_i||^alpha as the penalty scale
    #[arg(long)]
    pub centered_penalty: bool,
}

/// First-order solver settings.
#[derive(Debug, Args, Default, Clone)]
pub struct SolverArgs {
    /// Adam learning rate
    #[arg(long, allow_negative_numbers = true)]
    pub lr: Option<f64>,
    /// Number of epochs
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Early-stop tolerance on the objective change
    #[arg(long, allow_negative_numbers = true)]
    pub tolerance: Option<f64>,
    /// Root random seed
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Gamma grid, `lo:hi:k` (log-spaced) or a comma list
    #[arg(long)]
    pub grid_gamma: Option<String>,
    /// Lambda grid, `lo:hi:k` (log-spaced) or a comma list
    #[arg(long)]
    pub grid_lambda: Option<String>,
    /// Baselines to co-compute, comma list from {ols, ridge, ipw}
    #[arg(long)]
    pub baselines: Option<String>,
}

#[derive(Debug, Args)]
pub struct BaselinesArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Baselines to compute, comma list from {ols, ridge, ipw}
    #[arg(long)]
    pub baselines: Option<String>,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Weights CSV (unit_id,weight) to evaluate
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Bound variant
    #[arg(long, value_enum)]
    pub bound: Option<BoundArg>,
    /// Even-part oracle for prop1 as radial polynomial coefficients
    /// `c0,c1,c2,...` meaning c0 + c1·||x||^2 + c2·||x||^4 + ...
    #[arg(long)]
    pub mu_even: Option<String>,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub io: IoArgs,
    /// Weights CSV (unit_id,weight) to diagnose
    #[arg(long)]
    pub weights: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Outcome family of the scenario
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    /// Number of noise replications
    #[arg(long)]
    pub reps: Option<usize>,
    /// Outcome noise standard deviation
    #[arg(long, allow_negative_numbers = true)]
    pub noise_sd: Option<f64>,
    /// Distance of the target from the training hull
    #[arg(long, allow_negative_numbers = true)]
    pub hull_gap: Option<f64>,
    /// Number of training units
    #[arg(long)]
    pub n: Option<usize>,
    /// Feature dimension
    #[arg(long)]
    pub d: Option<usize>,
    /// Linear coefficients, comma list of length d
    #[arg(long)]
    pub beta: Option<String>,
    /// Estimator under study
    #[arg(long, value_enum)]
    pub estimator: Option<EstimatorArg>,
}

/// Flat JSON config file contents.
#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    map: serde_json::Map<String, Value>,
}

impl FileConfig {
    pub fn load(path: Option<&std::path::Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidConfig(format!("config file: {e}")))?;
        match value {
            Value::Object(map) => Ok(Self { map }),
            _ => Err(Error::InvalidConfig(
                "config file must be a flat JSON object".to_string(),
            )),
        }
    }

    fn entry(&self, key: &str) -> Option<&Value> {
        self.map.get(key)
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        match self.entry(key) {
            None => Ok(None),
            Some(v) => v
                .as_f64()
                .map(Some)
                .ok_or_else(|| Error::InvalidConfig(format!("config key `{key}` must be a number"))),
        }
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>> {
        match self.entry(key) {
            None => Ok(None),
            Some(v) => v
                .as_u64()
                .map(|u| Some(u as usize))
                .ok_or_else(|| Error::InvalidConfig(format!("config key `{key}` must be an integer"))),
        }
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>> {
        match self.entry(key) {
            None => Ok(None),
            Some(v) => v
                .as_u64()
                .map(Some)
                .ok_or_else(|| Error::InvalidConfig(format!("config key `{key}` must be an integer"))),
        }
    }

    pub fn bool(&self, key: &str) -> Result<Option<bool>> {
        match self.entry(key) {
            None => Ok(None),
            Some(v) => v
                .as_bool()
                .map(Some)
                .ok_or_else(|| Error::InvalidConfig(format!("config key `{key}` must be a boolean"))),
        }
    }

    pub fn string(&self, key: &str) -> Result<Option<String>> {
        match self.entry(key) {
            None => Ok(None),
            Some(v) => v
                .as_str()
                .map(|s| Some(s.to_string()))
                .ok_or_else(|| Error::InvalidConfig(format!("config key `{key}` must be a string"))),
        }
    }

    pub fn path(&self, key: &str) -> Result<Option<PathBuf>> {
        Ok(self.string(key)?.map(PathBuf::from))
    }
}

fn opt_bool_pair(yes: bool, no: bool) -> Option<bool> {
    if yes {
        Some(true)
    } else if no {
        Some(false)
    } else {
        None
    }
}

impl ProblemArgs {
    /// Resolves the objective configuration against the file config and the
    /// defaults.
    pub fn resolve(&self, file: &FileConfig) -> Result<(ProblemConfig, bool)> {
        let defaults = ProblemConfig::default();
        let p_imbalance = match self.p_imbalance {
            Some(PImbalanceArg::L2) => PImbalance::L2,
            Some(PImbalanceArg::Linf) => PImbalance::Linf,
            None => match file.string("p-imbalance")?.as_deref() {
                Some("l2") => PImbalance::L2,
                Some("linf") => PImbalance::Linf,
                Some(other) => {
                    return Err(Error::InvalidConfig(format!("unknown p-imbalance `{other}`")))
                }
                None => defaults.p_imbalance,
            },
        };
        let p_extrap = match self.p_extrap {
            Some(PExtrapArg::L1) => PExtrap::L1,
            Some(PExtrapArg::L2) => PExtrap::L2,
            Some(PExtrapArg::Linf) => PExtrap::Linf,
            None => match file.string("p-extrap")?.as_deref() {
                Some("l1") => PExtrap::L1,
                Some("l2") => PExtrap::L2,
                Some("linf") => PExtrap::Linf,
                Some(other) => return Err(Error::InvalidConfig(format!("unknown p-extrap `{other}`"))),
                None => defaults.p_extrap,
            },
        };
        let holder = HolderParams {
            a: self
                .holder_a
                .or(file.f64("holder-a")?)
                .unwrap_or(HolderParams::default().a),
            alpha: self
                .alpha
                .or(file.f64("alpha")?)
                .unwrap_or(HolderParams::default().alpha),
            sigma: self
                .sigma
                .or(file.f64("sigma")?)
                .unwrap_or(HolderParams::default().sigma),
            delta: self
                .delta
                .or(file.f64("delta")?)
                .unwrap_or(HolderParams::default().delta),
        };
        let cfg = ProblemConfig {
            lambda: self.lambda.or(file.f64("lambda")?).unwrap_or(defaults.lambda),
            gamma: self.gamma.or(file.f64("gamma")?).unwrap_or(defaults.gamma),
            p_imbalance,
            p_extrap,
            normalize_sum_to_one: opt_bool_pair(self.normalize, self.no_normalize)
                .or(file.bool("normalize")?)
                .unwrap_or(defaults.normalize_sum_to_one),
            centered_penalty: if self.centered_penalty {
                true
            } else {
                file.bool("centered-penalty")?.unwrap_or(false)
            },
            holder,
        };
        cfg.validate()?;
        let scale = opt_bool_pair(self.scale, self.no_scale)
            .or(file.bool("scale")?)
            .unwrap_or(false);
        Ok((cfg, scale))
    }

    pub fn sigma_explicit(&self, file: &FileConfig) -> Result<bool> {
        Ok(self.sigma.is_some() || file.f64("sigma")?.is_some())
    }
}

impl SolverArgs {
    pub fn resolve(&self, file: &FileConfig) -> Result<SolverConfig> {
        let defaults = SolverConfig::default();
        let cfg = SolverConfig {
            learning_rate: self.lr.or(file.f64("lr")?).unwrap_or(defaults.learning_rate),
            epochs: self.epochs.or(file.usize("epochs")?).unwrap_or(defaults.epochs),
            tolerance: self
                .tolerance
                .or(file.f64("tolerance")?)
                .unwrap_or(defaults.tolerance),
            seed: self.seed.or(file.u64("seed")?).unwrap_or(defaults.seed),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl IoArgs {
    pub fn source(&self, file: &FileConfig) -> Result<PathBuf> {
        self.source
            .clone()
            .or(file.path("source")?)
            .ok_or_else(|| Error::InvalidConfig("missing --source".to_string()))
    }

    pub fn target(&self, file: &FileConfig) -> Result<PathBuf> {
        self.target
            .clone()
            .or(file.path("target")?)
            .ok_or_else(|| Error::InvalidConfig("missing --target".to_string()))
    }

    pub fn out(&self, file: &FileConfig) -> Result<PathBuf> {
        self.out
            .clone()
            .or(file.path("out")?)
            .ok_or_else(|| Error::InvalidConfig("missing --out".to_string()))
    }

    pub fn y_col(&self, file: &FileConfig) -> Result<String> {
        Ok(self
            .y_col
            .clone()
            .or(file.string("y-col")?)
            .unwrap_or_else(|| "y".to_string()))
    }

    pub fn id_col(&self, file: &FileConfig) -> Result<Option<String>> {
        Ok(self.id_col.clone().or(file.string("id-col")?))
    }
}

/// Parses a grid flag: `lo:hi:k` is a k-point log-spaced grid, otherwise a
/// comma list of values.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::InvalidConfig(format!(
                "grid `{text}` must look like lo:hi:k or v1,v2,..."
            )));
        }
        let lo: f64 = parts[0]
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad grid bound `{}`", parts[0])))?;
        let hi: f64 = parts[1]
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad grid bound `{}`", parts[1])))?;
        let k: usize = parts[2]
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad grid count `{}`", parts[2])))?;
        log_grid(lo, hi, k)
    } else {
        let mut values = Vec::new();
        for piece in text.split(',') {
            values.push(
                piece
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidConfig(format!("bad grid value `{piece}`")))?,
            );
        }
        Ok(values)
    }
}

/// Parses a `ols,ridge,ipw` baselines list.
pub fn parse_baselines(text: &str) -> Result<BaselineFlags> {
    let mut flags = BaselineFlags::default();
    for piece in text.split(',') {
        match piece.trim() {
            "ols" => flags.ols = true,
            "ridge" => flags.ridge = true,
            "ipw" => flags.ipw = true,
            "" => {}
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown baseline `{other}` (expected ols, ridge, ipw)"
                )))
            }
        }
    }
    Ok(flags)
}

/// Parses the radial even-polynomial oracle `c0,c1,...`:
/// μ_e(x) = c0 + c1·||x||² + c2·||x||⁴ + ...
pub fn parse_mu_even(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|piece| {
            piece
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("bad mu-even coefficient `{piece}`")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        let log = parse_grid("0.01:10:4").unwrap();
        assert_eq!(log.len(), 4);
        assert!((log[0] - 0.01).abs() < 1e-12);
        let list = parse_grid("0.5, 1, 2").unwrap();
        assert_eq!(list, vec![0.5, 1.0, 2.0]);
        assert!(parse_grid("1:2").is_err());
    }

    #[test]
    fn baseline_lists() {
        let flags = parse_baselines("ols,ipw").unwrap();
        assert!(flags.ols && flags.ipw && !flags.ridge);
        assert!(parse_baselines("olz").is_err());
    }

    #[test]
    fn cli_flags_override_file_values() {
        let mut map = serde_json::Map::new();
        map.insert("gamma".to_string(), serde_json::json!(5.0));
        map.insert("normalize".to_string(), serde_json::json!(false));
        let file = FileConfig { map };
        let args = ProblemArgs {
            gamma: Some(0.25),
            ..ProblemArgs::default()
        };
        let (cfg, _) = args.resolve(&file).unwrap();
        assert_eq!(cfg.gamma, 0.25);
        assert!(!cfg.normalize_sum_to_one);
    }
}
