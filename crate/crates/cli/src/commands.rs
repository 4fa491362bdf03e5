use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use fairscore::data::{binarize, load_csv, BinarizeConfig, Schema};
use fairscore::mip::{export_lp, export_mps};
use fairscore::model::SystemMetadata;
use fairscore::scalar::{format_rational, parse_rational};
use fairscore::theory::{theory_report, EoForm};
use fairscore::{
    evaluate, fit, render_scorecard, Dataset, FairnessNotion, LossLinking, Problem, Rational, ScoringSystem,
    SideConstraints, SignConstraint, SolveMode, SolveStatus, SolverConfig, WelfareParams,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::{BoundsArgs, DataArgs, EvaluateArgs, ExportArgs, ProblemOpts, Resolved, ScorecardArgs, TrainArgs};

/// An error that carries its own process exit code.
#[derive(Debug)]
pub struct Exit {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for Exit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Exit {}

pub fn usage(message: impl Into<String>) -> anyhow::Error {
    Exit {
        code: 2,
        message: message.into(),
    }
    .into()
}

fn exit(code: i32, message: impl Into<String>) -> anyhow::Error {
    Exit {
        code,
        message: message.into(),
    }
    .into()
}

#[derive(Debug, Serialize, Deserialize)]
struct Inputs {
    data: PathBuf,
    schema: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ModelFile {
    coefficients: Vec<i64>,
    omega: Vec<i64>,
    gamma: String,
    feature_names: Vec<String>,
    notion: Option<FairnessNotion>,
    mode: String,
    delta: Option<String>,
    objective: Option<String>,
    status: String,
    best_bound: f64,
    nodes: u64,
    seed: u64,
    config_hash: String,
    config: Resolved,
    inputs: Inputs,
}

impl ModelFile {
    fn load(path: &Path) -> Result<ModelFile> {
        let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read model {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| usage(format!("{} is not a model file: {e}", path.display())))
    }

    fn system(&self) -> Result<ScoringSystem> {
        let mut s = ScoringSystem::new(
            self.coefficients.clone(),
            self.omega.clone(),
            parse_rational(&self.gamma)?,
            self.feature_names.clone(),
        )?;
        s.metadata = SystemMetadata {
            notion: self.notion,
            mode: Some(self.mode.clone()),
            delta: self.delta.as_deref().map(parse_rational).transpose()?,
            objective: self.objective.as_deref().map(parse_rational).transpose()?,
            status: Some(self.status.clone()),
        };
        Ok(s)
    }
}

fn read_config(path: Option<&Path>) -> Result<ProblemOpts> {
    let Some(path) = path else {
        return Ok(ProblemOpts::default());
    };
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))
}

pub fn resolve(opts: ProblemOpts, config: Option<&Path>) -> Result<Resolved> {
    Ok(Resolved::from_opts(opts.merged(read_config(config)?)))
}

fn number(text: &str, what: &str) -> Result<Rational> {
    parse_rational(text).map_err(|_| usage(format!("{what}: cannot parse {text:?} as a number")))
}

fn load_dataset(data: &DataArgs, cfg: &Resolved) -> Result<Dataset> {
    for p in [&data.data, &data.schema] {
        if !p.exists() {
            return Err(usage(format!("file not found: {}", p.display())));
        }
    }
    let mut schema = Schema::load(&data.schema)?;
    schema.sensitive_as_feature |= cfg.sensitive_as_feature;
    let table = load_csv(&data.data, &schema)?;
    if table.dropped_rows > 0 {
        log::info!("dropped {} row(s) with missing values", table.dropped_rows);
    }
    let quantiles = cfg.quantiles.iter().map(|q| number(q, "quantiles")).collect::<Result<Vec<_>>>()?;
    Ok(binarize(&table, &BinarizeConfig { quantiles })?)
}

/// Resolves a feature given by 1-based column index or by name.
fn feature(ds: &Dataset, text: &str) -> Result<usize> {
    let j = match text.trim().parse::<usize>() {
        Ok(j) => j,
        Err(_) => ds
            .feature_names()
            .iter()
            .position(|n| n == text.trim())
            .ok_or_else(|| usage(format!("unknown feature {text:?}")))?,
    };
    if j == 0 || j > ds.d() {
        return Err(usage(format!("feature {text:?} must be a column between 1 and {}", ds.d())));
    }
    Ok(j)
}

fn notion(text: &str) -> Result<FairnessNotion> {
    text.parse().map_err(|_| usage(format!("unknown notion {text:?}; expected sp, eo, omr, pe or eodds")))
}

pub fn build_problem(ds: Dataset, cfg: &Resolved) -> Result<Problem> {
    let n = ds.n();
    let mut params = WelfareParams::unit(n)
        .with_rho_bar(number(&cfg.rho_bar, "rho-bar")?)
        .with_penalties(number(&cfg.lambda0, "lambda0")?, number(&cfg.epsilon, "epsilon")?);
    for (k, v) in &cfg.lambda0_override {
        params.lambda0_overrides.insert(feature(&ds, k)?, number(v, "lambda0-override")?);
    }
    let mode = match cfg.mode.as_str() {
        "joint" => SolveMode::Joint,
        "accuracy-only" => SolveMode::AccuracyOnly,
        "fixed-delta" => {
            let d = cfg.delta_s.as_deref().ok_or_else(|| usage("fixed-delta mode needs --delta-s"))?;
            SolveMode::FixedDelta { delta: number(d, "delta-s")? }
        }
        other => return Err(usage(format!("unknown mode {other:?}; expected joint, fixed-delta or accuracy-only"))),
    };
    let mut side = SideConstraints {
        procedural: cfg.procedural,
        ..SideConstraints::default()
    };
    if cfg.model_size_min.is_some() || cfg.model_size_max.is_some() {
        side.model_size = Some((cfg.model_size_min, cfg.model_size_max));
    }
    for f in &cfg.force_feature {
        side.forced_features.insert(feature(&ds, f)?);
    }
    for f in &cfg.exclude_feature {
        let j = feature(&ds, f)?;
        if side.forced_features.contains(&j) {
            return Err(usage(format!("feature {f:?} is both forced and excluded")));
        }
        side.excluded_features.insert(j);
    }
    for s in &cfg.sign_constraint {
        let (f, sign) = s.rsplit_once(':').ok_or_else(|| usage(format!("sign constraint {s:?} must look like FEATURE:+ or FEATURE:-")))?;
        let sign = match sign.trim() {
            "+" => SignConstraint::Positive,
            "-" | "−" => SignConstraint::Negative,
            other => return Err(usage(format!("sign {other:?} must be + or -"))),
        };
        side.sign_constraints.insert(feature(&ds, f)?, sign);
    }
    let linking = if cfg.one_sided { LossLinking::OneSided } else { LossLinking::Exact };
    let problem = Problem::new(ds, params, notion(&cfg.notion)?)
        .with_mode(mode)
        .with_side(side)
        .with_uniform_omega(cfg.omega)
        .with_gamma(number(&cfg.gamma, "gamma")?)
        .with_linking(linking);
    problem.validate()?;
    Ok(problem)
}

fn solver_config(cfg: &Resolved) -> SolverConfig {
    SolverConfig {
        time_limit_seconds: cfg.time_limit,
        relative_gap: cfg.gap,
        node_limit: cfg.node_limit,
        threads: cfg.threads,
        seed: cfg.seed,
        ..SolverConfig::default()
    }
}

fn config_hash(data: &DataArgs, cfg: &Resolved) -> Result<String> {
    let mut h = Sha256::new();
    for p in [&data.data, &data.schema] {
        h.update(fs::read(p).with_context(|| format!("reading {}", p.display()))?);
        h.update([0u8]);
    }
    h.update(serde_json::to_vec(cfg)?);
    Ok(hex::encode(h.finalize()))
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn train(args: TrainArgs, config: Option<&Path>) -> Result<()> {
    let cfg = resolve(args.opts, config)?;
    let ds = load_dataset(&args.data, &cfg)?;
    let problem = build_problem(ds, &cfg)?;
    let f = fit(&problem, &solver_config(&cfg), cfg.lexicographic)?;
    let status = f.solution.status;
    let Some(system) = f.system else {
        return Err(match status {
            SolveStatus::Infeasible => exit(3, "the problem is infeasible"),
            other => exit(4, format!("stopped at the {other} before finding a feasible model")),
        });
    };
    let model = ModelFile {
        coefficients: system.coefficients.clone(),
        omega: system.omega.clone(),
        gamma: format_rational(&system.gamma),
        feature_names: system.feature_names.clone(),
        notion: system.metadata.notion,
        mode: problem.mode.to_string(),
        delta: f.achieved_delta.as_ref().map(format_rational),
        objective: f.solution.objective.as_ref().map(format_rational),
        status: status.to_string(),
        best_bound: f.solution.best_bound,
        nodes: f.solution.nodes_explored,
        seed: cfg.seed,
        config_hash: config_hash(&args.data, &cfg)?,
        config: cfg,
        inputs: Inputs {
            data: args.data.data.clone(),
            schema: args.data.schema.clone(),
        },
    };
    fs::write(&args.out, serde_json::to_string_pretty(&model)? + "\n").with_context(|| format!("writing {}", args.out.display()))?;
    println!(
        "status {status}, objective {}, model size {}, written to {}",
        model.objective.as_deref().unwrap_or("-"),
        system.model_size(),
        args.out.display()
    );
    match status {
        SolveStatus::TimeLimit | SolveStatus::NodeLimit => Err(exit(4, format!("search stopped by the {status}; the model is the best found"))),
        _ => Ok(()),
    }
}

#[derive(Serialize)]
struct EvaluationOutput<'a> {
    model: &'a Path,
    data: &'a Path,
    schema: &'a Path,
    #[serde(with = "fairscore::scalar::serde_rational")]
    rho_bar: Rational,
    model_config_hash: &'a str,
    report: fairscore::Report,
}

pub fn evaluate_cmd(args: EvaluateArgs) -> Result<()> {
    let model = ModelFile::load(&args.model)?;
    let system = model.system()?;
    let ds = load_dataset(&args.data, &model.config)?;
    if ds.feature_names() != system.feature_names.as_slice() {
        return Err(usage("the data's binarized columns do not match the model's features"));
    }
    let rho = number(args.rho_bar.as_deref().unwrap_or(&model.config.rho_bar), "rho-bar")?;
    let explicit = !args.notion.is_empty();
    let notions = if explicit {
        args.notion.iter().map(|n| notion(n)).collect::<Result<Vec<_>>>()?
    } else {
        FairnessNotion::ALL.to_vec()
    };
    let params = WelfareParams::unit(ds.n()).with_rho_bar(rho.clone());
    let report = evaluate(&system, &ds, &params, &notions)?;
    let undefined: Vec<String> = report
        .notions
        .iter()
        .filter_map(|r| r.error.as_ref().map(|e| format!("{}: {e}", r.notion)))
        .collect();
    let out = EvaluationOutput {
        model: &args.model,
        data: &args.data.data,
        schema: &args.data.schema,
        rho_bar: rho,
        model_config_hash: &model.config_hash,
        report,
    };
    write_output(args.out.as_deref(), &(serde_json::to_string_pretty(&out)? + "\n"))?;
    if explicit && !undefined.is_empty() {
        return Err(exit(3, undefined.join("; ")));
    }
    for u in &undefined {
        log::warn!("{u}");
    }
    Ok(())
}

fn read_theta(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read theta {}: {e}", path.display())))?;
    if let Ok(v) = serde_json::from_str::<Vec<f64>>(&text) {
        return Ok(v);
    }
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| usage(format!("theta entry {t:?} is not a number"))))
        .collect()
}

#[derive(Serialize)]
struct BoundsOutput {
    config: Resolved,
    report: fairscore::theory::TheoryReport,
}

pub fn bounds(args: BoundsArgs, config: Option<&Path>) -> Result<()> {
    let cfg = resolve(args.opts, config)?;
    let ds = load_dataset(&args.data, &cfg)?;
    let problem = build_problem(ds, &cfg)?;
    let theta = args.theta.as_deref().map(read_theta).transpose()?;
    let delta_star = match (&args.delta_star, &args.model) {
        (Some(d), _) => Some(number(d, "delta-star")?),
        (None, Some(m)) => {
            let model = ModelFile::load(m)?;
            let d = model.delta.ok_or_else(|| exit(3, "the model records no unfairness level"))?;
            Some(number(&d, "model delta")?)
        }
        (None, None) => None,
    };
    let eo_form = match args.eo_form.as_str() {
        "derived" => EoForm::Derived,
        "as-printed" => EoForm::AsPrinted,
        other => return Err(usage(format!("unknown eo-form {other:?}; expected derived or as-printed"))),
    };
    let report = theory_report(&problem.dataset, &problem.params, problem.notion, theta.as_deref(), args.k, delta_star.as_ref(), eo_form)?;
    let out = BoundsOutput { config: cfg, report };
    write_output(args.out.as_deref(), &(serde_json::to_string_pretty(&out)? + "\n"))
}

pub fn export(args: ExportArgs, config: Option<&Path>) -> Result<()> {
    let cfg = resolve(args.opts, config)?;
    let ds = load_dataset(&args.data, &cfg)?;
    let model = fairscore::build(&build_problem(ds, &cfg)?)?;
    let text = match args.format.as_str() {
        "mps" => export_mps(&model),
        "lp" => export_lp(&model),
        other => return Err(usage(format!("unknown format {other:?}; expected mps or lp"))),
    };
    write_output(args.out.as_deref(), &text)
}

pub fn scorecard(args: ScorecardArgs) -> Result<()> {
    let model = ModelFile::load(&args.model)?;
    let mut text = render_scorecard(&model.system()?);
    text.push_str(&format!("config hash: {}\n", model.config_hash));
    write_output(args.out.as_deref(), &text)
}
