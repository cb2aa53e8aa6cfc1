//! Command-line flags, config-file merging and the values derived from them.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use cohexp::experiments::Setting;
use cohexp::gamma::GammaSpec;
use cohexp::{FuzzyExpr, MlpModel, Projection, SamplingSpec};

use crate::CliError;

pub const SEED_ENV: &str = "COHEXP_SEED";

#[derive(Debug, Parser)]
#[command(name = "cohexp", version, about = "Coherence checks, repairs and Boolean explanations of fuzzy functions")]
pub struct Cli {
    /// JSON file whose keys supply any flag not given on the command line.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample an expression and report where it is incoherent.
    Check(CheckArgs),
    /// Print the DNF read off an expression's booleanization.
    Explain(ExplainArgs),
    /// Apply a repair and emit the repaired expression.
    Repair(RepairArgs),
    /// Show that repair does not commute with composition.
    DemoNoncomp(DemoArgs),
    /// Compare the booleanization of a composite with the composed booleanizations.
    FunctorLaw(FunctorLawArgs),
    /// Train a classifier on a synthetic setting and score its explanations.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Text,
    Structured,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct Common {
    /// Threshold of the projection (default 0.5).
    #[arg(long, conflicts_with = "levels")]
    pub alpha: Option<f64>,
    /// Use an n-level quantization instead of a threshold.
    #[arg(long)]
    pub levels: Option<u32>,
    /// Grid sampling with this many points per axis.
    #[arg(long, conflicts_with = "random")]
    pub grid: Option<usize>,
    /// Random sampling with this many points.
    #[arg(long)]
    pub random: Option<usize>,
    /// Seed for random sampling and training (default: $COHEXP_SEED or 0).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write the result here instead of standard output.
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

/// The function under study, as an expression file or a bare weights file.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct Input {
    #[arg(long, value_name = "FILE", conflicts_with = "weights")]
    pub expr: Option<PathBuf>,
    /// Network weights, used as a single network node.
    #[arg(long, value_name = "FILE")]
    pub weights: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct CheckArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub input: Input,
    /// Witnesses shown per component in text output (default 3).
    #[arg(long)]
    pub witnesses: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct ExplainArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub input: Input,
    /// Repair first: `extend`, `output-mod:<fallback-file>` or a repair spec file.
    #[arg(long)]
    pub gamma: Option<String>,
    /// Render with &, | and ! instead of ∧, ∨ and ¬.
    #[arg(long)]
    pub ascii: bool,
    /// Emit one term per true row instead of a minimized formula.
    #[arg(long)]
    pub no_simplify: bool,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct RepairArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub input: Input,
    /// `extend`, `output-mod:<fallback-file>` or a repair spec file.
    #[arg(long)]
    pub gamma: Option<String>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct DemoArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Unary function to repair (default: the step at 0).
    #[arg(long, value_name = "FILE")]
    pub expr: Option<PathBuf>,
    /// `extend` (default), `output-mod:<fallback-file>` or a repair spec file.
    #[arg(long)]
    pub gamma: Option<String>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct FunctorLawArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Inner function `f`.
    #[arg(long, value_name = "FILE")]
    pub expr: Option<PathBuf>,
    /// Outer function `g`, applied after `f`.
    #[arg(long, value_name = "FILE")]
    pub outer: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct ExperimentArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// `xor` or `fuzzy-or`.
    #[arg(long, value_parser = parse_setting)]
    pub setting: Option<Setting>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Weight of the coherence penalty.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    /// Hidden layer widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub train_size: Option<usize>,
    #[arg(long)]
    pub val_size: Option<usize>,
    #[arg(long)]
    pub test_size: Option<usize>,
    /// Write train.csv, val.csv and test.csv here.
    #[arg(long, value_name = "DIR")]
    pub data_dir: Option<PathBuf>,
    /// Write the trained network as an expression file.
    #[arg(long, value_name = "FILE")]
    pub save_model: Option<PathBuf>,
}

fn parse_setting(s: &str) -> Result<Setting, String> {
    s.parse().map_err(|e: cohexp::Error| e.to_string())
}

/// Flags that exclude each other; a flag given on the command line drops
/// its partner from the config file.
const EXCLUSIVE: [(&str, &str); 3] = [("alpha", "levels"), ("grid", "random"), ("expr", "weights")];

pub fn read_config(path: &Path) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(CliError::Usage(format!("config {} must be a JSON object", path.display()))),
        Err(e) => Err(CliError::Usage(format!("config {}: {e}", path.display()))),
    }
}

/// Overlays the flags that were given onto the config values.
pub fn merge<T: Serialize + DeserializeOwned>(
    flags: T,
    config: Option<&Map<String, Value>>,
) -> Result<T, CliError> {
    let Some(config) = config else {
        return Ok(flags);
    };
    let mut merged = config.clone();
    let Value::Object(given) = serde_json::to_value(&flags).map_err(usage)? else {
        return Ok(flags);
    };
    for (key, value) in given {
        if value.is_null() || value == Value::Bool(false) {
            continue;
        }
        for (a, b) in EXCLUSIVE {
            if key == a {
                merged.remove(b);
            } else if key == b {
                merged.remove(a);
            }
        }
        merged.insert(key, value);
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Usage(format!("config: {e}")))
}

fn usage(e: serde_json::Error) -> CliError {
    CliError::Usage(e.to_string())
}

impl Common {
    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }

    pub fn projection(&self) -> Result<Projection, CliError> {
        match (self.alpha, self.levels) {
            (Some(_), Some(_)) => Err(CliError::Usage("--alpha and --levels exclude each other".into())),
            (_, Some(levels)) => Ok(Projection::quantize(levels)?),
            (alpha, None) => Ok(Projection::threshold(alpha.unwrap_or(0.5))?),
        }
    }

    /// Explicit flag, then `$COHEXP_SEED`, then 0.
    pub fn seed(&self) -> Result<u64, CliError> {
        if let Some(s) = self.seed {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("{SEED_ENV} must be an unsigned integer, got '{v}'"))),
            Err(_) => Ok(0),
        }
    }

    /// The requested sample, or the default for `in_arity` inputs.
    pub fn sampling(&self, in_arity: usize) -> Result<SamplingSpec, CliError> {
        let spec = match (self.grid, self.random) {
            (Some(_), Some(_)) => return Err(CliError::Usage("--grid and --random exclude each other".into())),
            (Some(n), None) => SamplingSpec::grid(n)?,
            (None, Some(count)) => SamplingSpec::random(count, self.seed()?)?,
            (None, None) => match SamplingSpec::default_for(in_arity) {
                SamplingSpec::Random { count, .. } => SamplingSpec::random(count, self.seed()?)?,
                grid => grid,
            },
        };
        Ok(spec)
    }
}

pub fn load_expr(path: &Path) -> Result<FuzzyExpr, CliError> {
    if !path.exists() {
        return Err(CliError::Usage(format!("no such file: {}", path.display())));
    }
    Ok(FuzzyExpr::load(path)?)
}

impl Input {
    pub fn load(&self) -> Result<FuzzyExpr, CliError> {
        match (&self.expr, &self.weights) {
            (Some(_), Some(_)) => Err(CliError::Usage("--expr and --weights exclude each other".into())),
            (Some(path), None) => load_expr(path),
            (None, Some(path)) => {
                if !path.exists() {
                    return Err(CliError::Usage(format!("no such file: {}", path.display())));
                }
                let model: MlpModel = serde_json::from_str(&std::fs::read_to_string(path)?)
                    .map_err(cohexp::Error::from)?;
                Ok(FuzzyExpr::mlp(model))
            }
            (None, None) => Err(CliError::Usage("an input is required (--expr or --weights)".into())),
        }
    }
}

/// Parses `extend`, `output-mod:<file>` or the path of a repair spec file.
pub fn gamma_spec(arg: &str, common: &Common, in_arity: usize) -> Result<GammaSpec, CliError> {
    let projection = common.projection()?;
    let sampling = common.sampling(in_arity)?;
    if arg == "extend" {
        return Ok(GammaSpec::domain_extension(projection, sampling));
    }
    if let Some(file) = arg.strip_prefix("output-mod:") {
        let fallback = load_expr(Path::new(file))?;
        return Ok(GammaSpec::output_modification(fallback, projection, sampling));
    }
    let path = Path::new(arg);
    if !path.exists() {
        return Err(CliError::Usage(format!(
            "--gamma expects extend, output-mod:<file> or a spec file, got '{arg}'"
        )));
    }
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?).map_err(cohexp::Error::from)?)
}
