use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "fairscore", version, about = "Fair sparse integer scoring systems")]
pub struct Cli {
    /// JSON file whose keys mirror the long flags; flags win over its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a scoring system and write it as JSON.
    Train(TrainArgs),
    /// Evaluate a trained model on a dataset.
    Evaluate(EvaluateArgs),
    /// Compute discretization and welfare bounds.
    Bounds(BoundsArgs),
    /// Write the training MIP in MPS (or LP) format.
    Export(ExportArgs),
    /// Print a model as a plain-text scorecard.
    Scorecard(ScorecardArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub schema: PathBuf,
}

/// Options shared by every command that builds a problem. All are optional
/// here so that config-file values can fill the gaps.
#[derive(Debug, Args, Default, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct ProblemOpts {
    /// sp, eo, omr, pe or eodds.
    #[arg(long)]
    pub notion: Option<String>,
    /// joint, fixed-delta or accuracy-only.
    #[arg(long)]
    pub mode: Option<String>,
    /// Unfairness cap for fixed-delta mode.
    #[arg(long)]
    pub delta_s: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub rho_bar: Option<String>,
    /// Coefficient bound for every column.
    #[arg(long)]
    pub omega: Option<i64>,
    /// Classification margin.
    #[arg(long)]
    pub gamma: Option<String>,
    /// ℓ1 penalty.
    #[arg(long)]
    pub epsilon: Option<String>,
    /// ℓ0 penalty.
    #[arg(long)]
    pub lambda0: Option<String>,
    /// Per-feature ℓ0 penalty, FEATURE=VALUE (repeatable).
    #[arg(long)]
    pub lambda0_override: Vec<String>,
    #[arg(long)]
    pub model_size_min: Option<usize>,
    #[arg(long)]
    pub model_size_max: Option<usize>,
    /// FEATURE:+ or FEATURE:- (repeatable).
    #[arg(long)]
    pub sign_constraint: Vec<String>,
    #[arg(long)]
    pub force_feature: Vec<String>,
    #[arg(long)]
    pub exclude_feature: Vec<String>,
    /// Allow nonzero points on sensitive columns.
    #[arg(long)]
    pub no_procedural: bool,
    /// Keep the sensitive attribute as input columns.
    #[arg(long)]
    pub sensitive_as_feature: bool,
    /// Comma-separated quantile levels for numeric thresholds.
    #[arg(long)]
    pub quantiles: Option<String>,
    /// Only force ψ = 1 on mistakes, not the converse.
    #[arg(long)]
    pub one_sided: bool,
    /// Among optimal solutions prefer the smallest unfairness level.
    #[arg(long)]
    pub lexicographic: bool,
    /// Seconds.
    #[arg(long)]
    pub time_limit: Option<f64>,
    /// Relative optimality gap.
    #[arg(long)]
    pub gap: Option<f64>,
    #[arg(long)]
    pub node_limit: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
}

impl ProblemOpts {
    /// Flag values, then `fallback` (from the config file) where a flag is unset.
    pub fn merged(self, fallback: ProblemOpts) -> ProblemOpts {
        fn vec(a: Vec<String>, b: Vec<String>) -> Vec<String> {
            if a.is_empty() {
                b
            } else {
                a
            }
        }
        ProblemOpts {
            notion: self.notion.or(fallback.notion),
            mode: self.mode.or(fallback.mode),
            delta_s: self.delta_s.or(fallback.delta_s),
            rho_bar: self.rho_bar.or(fallback.rho_bar),
            omega: self.omega.or(fallback.omega),
            gamma: self.gamma.or(fallback.gamma),
            epsilon: self.epsilon.or(fallback.epsilon),
            lambda0: self.lambda0.or(fallback.lambda0),
            lambda0_override: vec(self.lambda0_override, fallback.lambda0_override),
            model_size_min: self.model_size_min.or(fallback.model_size_min),
            model_size_max: self.model_size_max.or(fallback.model_size_max),
            sign_constraint: vec(self.sign_constraint, fallback.sign_constraint),
            force_feature: vec(self.force_feature, fallback.force_feature),
            exclude_feature: vec(self.exclude_feature, fallback.exclude_feature),
            no_procedural: self.no_procedural || fallback.no_procedural,
            sensitive_as_feature: self.sensitive_as_feature || fallback.sensitive_as_feature,
            quantiles: self.quantiles.or(fallback.quantiles),
            one_sided: self.one_sided || fallback.one_sided,
            lexicographic: self.lexicographic || fallback.lexicographic,
            time_limit: self.time_limit.or(fallback.time_limit),
            gap: self.gap.or(fallback.gap),
            node_limit: self.node_limit.or(fallback.node_limit),
            seed: self.seed.or(fallback.seed),
            threads: self.threads.or(fallback.threads),
        }
    }
}

/// Every setting after defaults are applied; echoed into output artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct Resolved {
    pub notion: String,
    pub mode: String,
    pub delta_s: Option<String>,
    pub rho_bar: String,
    pub omega: i64,
    pub gamma: String,
    pub epsilon: String,
    pub lambda0: String,
    pub lambda0_override: BTreeMap<String, String>,
    pub model_size_min: Option<usize>,
    pub model_size_max: Option<usize>,
    pub sign_constraint: Vec<String>,
    pub force_feature: Vec<String>,
    pub exclude_feature: Vec<String>,
    pub procedural: bool,
    pub sensitive_as_feature: bool,
    pub quantiles: Vec<String>,
    pub one_sided: bool,
    pub lexicographic: bool,
    pub time_limit: Option<f64>,
    pub gap: f64,
    pub node_limit: Option<u64>,
    pub seed: u64,
    pub threads: usize,
}

impl Resolved {
    pub fn from_opts(o: ProblemOpts) -> Resolved {
        Resolved {
            notion: o.notion.unwrap_or_else(|| "sp".into()),
            mode: o.mode.unwrap_or_else(|| "joint".into()),
            delta_s: o.delta_s,
            rho_bar: o.rho_bar.unwrap_or_else(|| "0".into()),
            omega: o.omega.unwrap_or(10),
            gamma: o.gamma.unwrap_or_else(|| "0.1".into()),
            epsilon: o.epsilon.unwrap_or_else(|| "0.01".into()),
            lambda0: o.lambda0.unwrap_or_else(|| "1e-4".into()),
            lambda0_override: o
                .lambda0_override
                .iter()
                .map(|s| match s.rsplit_once('=') {
                    Some((k, v)) => (k.to_string(), v.to_string()),
                    None => (s.clone(), String::new()),
                })
                .collect(),
            model_size_min: o.model_size_min,
            model_size_max: o.model_size_max,
            sign_constraint: o.sign_constraint,
            force_feature: o.force_feature,
            exclude_feature: o.exclude_feature,
            procedural: !o.no_procedural,
            sensitive_as_feature: o.sensitive_as_feature,
            quantiles: o
                .quantiles
                .unwrap_or_else(|| "0.25,0.5,0.75".into())
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect(),
            one_sided: o.one_sided,
            lexicographic: o.lexicographic,
            time_limit: o.time_limit,
            gap: o.gap.unwrap_or(1e-6),
            node_limit: o.node_limit,
            seed: o.seed.unwrap_or(0),
            threads: o.threads.unwrap_or(1),
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub opts: ProblemOpts,
    /// Where to write the model JSON.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Notions to report (repeatable); all five when omitted.
    #[arg(long)]
    pub notion: Vec<String>,
    /// Fairness weight for welfare; defaults to the model's.
    #[arg(long, allow_hyphen_values = true)]
    pub rho_bar: Option<String>,
    /// Write the report here instead of stdout.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub opts: ProblemOpts,
    /// Real coefficient vector (JSON array or whitespace/comma-separated numbers).
    #[arg(long)]
    pub theta: Option<PathBuf>,
    /// Number of small-margin examples allowed to flip.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Optimal unfairness level for the welfare bound.
    #[arg(long)]
    pub delta_star: Option<String>,
    /// Take the unfairness level from a trained model instead.
    #[arg(long, conflicts_with = "delta_star")]
    pub model: Option<PathBuf>,
    /// derived or as-printed.
    #[arg(long, default_value = "derived")]
    pub eo_form: String,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub opts: ProblemOpts,
    /// mps or lp.
    #[arg(long, default_value = "mps")]
    pub format: String,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScorecardArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}
