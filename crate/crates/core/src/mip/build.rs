use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{Constraint, MipModel, VarRole, Variable};
use crate::error::{Error, Result};
use crate::fairness::{group_index_for, FairnessNotion, GroupIndex};
use crate::lp::Sense;
use crate::model::Dataset;
use crate::scalar::{format_rational, ratio, rational_from_i64, serde_rational};
use crate::welfare::WelfareParams;
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SolveMode {
    /// δ is a decision variable priced by ρ̄.
    #[default]
    Joint,
    /// δ is fixed to the given level and dropped from the objective.
    FixedDelta {
        #[serde(with = "serde_rational")]
        delta: Rational,
    },
    /// No fairness rows at all.
    AccuracyOnly,
}

impl SolveMode {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Joint => "joint",
            Self::FixedDelta { .. } => "fixed-delta",
            Self::AccuracyOnly => "accuracy-only",
        }
    }
}

impl fmt::Display for SolveMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::FixedDelta { delta } => write!(f, "fixed-delta({})", format_rational(delta)),
            other => f.write_str(other.label()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignConstraint {
    Positive,
    Negative,
}

/// How the loss indicators are tied to the scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossLinking {
    /// Big-M rows in both directions: `ψ_i = 1` exactly when `y_i wᵀx_i <= 0`.
    #[default]
    Exact,
    /// Only the row forcing `ψ_i = 1` on a mistake. Under fairness pressure the
    /// optimizer may then flag correctly classified examples as errors.
    OneSided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideConstraints {
    /// `(A_l, A_u)` bounds on the number of non-intercept features used.
    pub model_size: Option<(Option<usize>, Option<usize>)>,
    pub forced_features: BTreeSet<usize>,
    pub excluded_features: BTreeSet<usize>,
    pub sign_constraints: BTreeMap<usize, SignConstraint>,
    /// `(antecedent, consequents)`: any consequent used requires the antecedent.
    pub implications: Vec<(usize, Vec<usize>)>,
    /// Keep sensitive columns out of the model.
    pub procedural: bool,
}

impl Default for SideConstraints {
    fn default() -> Self {
        Self {
            model_size: None,
            forced_features: BTreeSet::new(),
            excluded_features: BTreeSet::new(),
            sign_constraints: BTreeMap::new(),
            implications: Vec::new(),
            procedural: true,
        }
    }
}

impl SideConstraints {
    pub fn with_max_size(mut self, max: usize) -> Self {
        let lo = self.model_size.and_then(|(l, _)| l);
        self.model_size = Some((lo, Some(max)));
        self
    }

    pub fn has_size_or_implications(&self) -> bool {
        self.model_size.is_some_and(|(l, _)| l.is_some_and(|l| l > 0)) || !self.implications.is_empty()
    }
}

/// Everything needed to state one training problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub dataset: Dataset,
    pub params: WelfareParams,
    pub notion: FairnessNotion,
    pub mode: SolveMode,
    pub side: SideConstraints,
    pub omega: Vec<i64>,
    pub gamma: Rational,
    pub linking: LossLinking,
}

impl Problem {
    /// Joint mode, `Ω_j = 10`, `γ = 0.1`, no side constraints.
    pub fn new(dataset: Dataset, params: WelfareParams, notion: FairnessNotion) -> Self {
        let width = dataset.width();
        Self {
            dataset,
            params,
            notion,
            mode: SolveMode::Joint,
            side: SideConstraints::default(),
            omega: vec![10; width],
            gamma: ratio(1, 10),
            linking: LossLinking::Exact,
        }
    }

    pub fn with_mode(mut self, mode: SolveMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_side(mut self, side: SideConstraints) -> Self {
        self.side = side;
        self
    }

    pub fn with_uniform_omega(mut self, omega: i64) -> Self {
        self.omega = vec![omega; self.dataset.width()];
        self
    }

    pub fn with_omega(mut self, omega: Vec<i64>) -> Self {
        self.omega = omega;
        self
    }

    pub fn with_gamma(mut self, gamma: Rational) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_linking(mut self, linking: LossLinking) -> Self {
        self.linking = linking;
        self
    }

    pub fn n(&self) -> usize {
        self.dataset.n()
    }

    pub fn d(&self) -> usize {
        self.dataset.d()
    }

    pub fn group_indices(&self) -> Vec<GroupIndex> {
        self.dataset
            .groupings()
            .iter()
            .map(|g| group_index_for(g, self.dataset.labels()))
            .collect()
    }

    /// Columns whose coefficient is forced to zero by procedural fairness.
    pub fn procedural_columns(&self) -> BTreeSet<usize> {
        if self.side.procedural {
            self.dataset.sensitive_columns().clone()
        } else {
            BTreeSet::new()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.d();
        let n = self.n();
        if self.omega.len() != d + 1 {
            return Err(Error::DimensionMismatch {
                expected: d + 1,
                got: self.omega.len(),
            });
        }
        if let Some(o) = self.omega.iter().find(|o| **o < 0) {
            return Err(Error::InvalidParameter(format!("omega {o} is negative")));
        }
        if !self.gamma.is_positive() {
            return Err(Error::InvalidParameter("gamma must be positive".into()));
        }
        self.params.validate(n)?;
        if let SolveMode::FixedDelta { delta } = &self.mode {
            if delta.is_negative() || *delta > Rational::one() {
                return Err(Error::InvalidParameter(format!("fixed delta {delta} outside [0, 1]")));
            }
        }
        if self.mode != SolveMode::AccuracyOnly {
            for idx in self.group_indices() {
                idx.check_notion(self.notion)?;
            }
        }
        self.validate_side()
    }

    fn validate_side(&self) -> Result<()> {
        let d = self.d();
        let side = &self.side;
        let check = |j: usize, what: &str| {
            if j == 0 || j > d {
                Err(Error::InvalidParameter(format!("{what} refers to feature {j}; valid features are 1..={d}")))
            } else {
                Ok(())
            }
        };
        for &j in side.forced_features.iter().chain(&side.excluded_features).chain(side.sign_constraints.keys()) {
            check(j, "side constraint")?;
        }
        for (ante, cons) in &side.implications {
            check(*ante, "implication")?;
            for &j in cons {
                check(j, "implication")?;
            }
        }
        for (j, _) in self.params.lambda0_overrides.iter() {
            check(*j, "lambda0 override")?;
        }
        let infeasible = |m: String| Err(Error::InfeasibleSideConstraints(m));
        if let Some(&j) = side.forced_features.intersection(&side.excluded_features).next() {
            return infeasible(format!("feature {j} is both forced and excluded"));
        }
        let proc = self.procedural_columns();
        if let Some(&j) = side.forced_features.intersection(&proc).next() {
            return infeasible(format!("feature {j} is forced but sensitive"));
        }
        for &j in side.sign_constraints.keys() {
            if side.excluded_features.contains(&j) || proc.contains(&j) || self.omega[j] == 0 {
                return infeasible(format!("feature {j} has a sign constraint but must be zero"));
            }
        }
        if let Some((lo, hi)) = side.model_size {
            if let (Some(l), Some(h)) = (lo, hi) {
                if l > h {
                    return infeasible(format!("model size bounds {l} > {h}"));
                }
            }
            let must = side.forced_features.union(&side.sign_constraints.keys().copied().collect()).count();
            if let Some(h) = hi {
                if must > h {
                    return infeasible(format!("{must} features are required but the model size is at most {h}"));
                }
            }
            if let Some(l) = lo {
                let usable = (1..=d)
                    .filter(|j| !side.excluded_features.contains(j) && !proc.contains(j) && self.omega[*j] > 0)
                    .count();
                if l > usable {
                    return infeasible(format!("model size at least {l} but only {usable} features are usable"));
                }
            }
        }
        Ok(())
    }
}

/// `γ + Σ_j Ω_j |x_ij|`, the largest possible violation of the margin row.
pub fn big_m(x: &[Rational], omega: &[i64], gamma: &Rational) -> Rational {
    gamma + score_range(x, omega)
}

/// `Σ_j Ω_j |x_ij|`.
fn score_range(x: &[Rational], omega: &[i64]) -> Rational {
    x.iter()
        .zip(omega)
        .map(|(v, o)| v.abs() * rational_from_i64(*o))
        .sum()
}

pub fn build(problem: &Problem) -> Result<MipModel> {
    problem.validate()?;
    let ds = &problem.dataset;
    let (n, d) = (ds.n(), ds.d());
    let joint = problem.mode == SolveMode::Joint;
    let zero = Rational::zero;
    let one = Rational::one;

    let mut variables = Vec::with_capacity(n + 3 * d + 2);
    for j in 0..=d {
        let o = rational_from_i64(problem.omega[j]);
        variables.push(Variable {
            name: VarRole::W(j).name(),
            role: VarRole::W(j),
            lower: -o.clone(),
            upper: o,
            integer: true,
        });
    }
    let binary = |role: VarRole| Variable {
        name: role.name(),
        role,
        lower: zero(),
        upper: one(),
        integer: true,
    };
    variables.extend((1..=n).map(|i| binary(VarRole::Psi(i))));
    variables.extend((1..=d).map(|j| binary(VarRole::Alpha(j))));
    for j in 1..=d {
        variables.push(Variable {
            name: VarRole::Beta(j).name(),
            role: VarRole::Beta(j),
            lower: zero(),
            upper: rational_from_i64(problem.omega[j]),
            integer: false,
        });
    }
    if joint {
        variables.push(Variable {
            name: VarRole::Delta.name(),
            role: VarRole::Delta,
            lower: zero(),
            upper: one(),
            integer: false,
        });
    }
    let w = |j: usize| j;
    let psi = |i: usize| d + 1 + i;
    let alpha = |j: usize| d + n + j;
    let beta = |j: usize| d + n + d + j;
    let delta = d + n + 2 * d + 1;

    let mut objective = vec![zero(); variables.len()];
    let n_q = rational_from_i64(n as i64);
    for i in 0..n {
        objective[psi(i)] = &problem.params.b[i] / &n_q;
    }
    for j in 1..=d {
        objective[alpha(j)] = problem.params.lambda0_for(j).clone();
        objective[beta(j)] = problem.params.epsilon.clone();
    }
    if joint {
        objective[delta] = problem.params.rho_bar.clone();
    }

    let mut rows = Vec::new();
    // 0-1 loss linking
    for i in 0..n {
        let x = ds.row(i);
        let y = rational_from_i64(ds.label(i) as i64);
        let mut coeffs: Vec<(usize, Rational)> = Vec::with_capacity(d + 2);
        coeffs.push((psi(i), big_m(x, &problem.omega, &problem.gamma)));
        for (j, v) in x.iter().enumerate() {
            if !v.is_zero() && problem.omega[j] != 0 {
                coeffs.push((w(j), &y * v));
            }
        }
        rows.push(Constraint::new(format!("LOSS{}", i + 1), coeffs.clone(), Sense::Ge, problem.gamma.clone()));
        if problem.linking == LossLinking::Exact {
            let range = score_range(x, &problem.omega);
            coeffs[0].1 = range.clone();
            rows.push(Constraint::new(format!("EXCT{}", i + 1), coeffs, Sense::Le, range));
        }
    }
    // group fairness
    if problem.mode != SolveMode::AccuracyOnly {
        let mut k = 0;
        for idx in problem.group_indices() {
            for (p, q) in idx.pairs() {
                for &part in problem.notion.components() {
                    let (expr, constant, scale) = fairness_expression(part, &idx, p, q);
                    let coeffs: Vec<(usize, Rational)> = expr.iter().map(|(i, c)| (psi(*i), rational_from_i64(*c))).collect();
                    for sign in [1i64, -1] {
                        k += 1;
                        let mut row: Vec<(usize, Rational)> = coeffs.iter().map(|(v, c)| (*v, c * rational_from_i64(sign))).collect();
                        let mut rhs = rational_from_i64(-sign * constant);
                        let s = rational_from_i64(scale);
                        match &problem.mode {
                            SolveMode::FixedDelta { delta: ds_ } => rhs += s * ds_,
                            _ => row.push((delta, -s)),
                        }
                        rows.push(Constraint::new(format!("FAIR{k}"), row, Sense::Le, rhs));
                    }
                }
            }
        }
    }
    // procedural fairness
    for s in problem.procedural_columns() {
        rows.push(Constraint::new(format!("PROC{s}"), vec![(alpha(s), one())], Sense::Eq, zero()));
    }
    // support and magnitude linking
    for j in 1..=d {
        let o = rational_from_i64(problem.omega[j]);
        rows.push(Constraint::new(format!("L0UP{j}"), vec![(w(j), one()), (alpha(j), -o.clone())], Sense::Le, zero()));
        rows.push(Constraint::new(format!("L0LO{j}"), vec![(w(j), -one()), (alpha(j), -o)], Sense::Le, zero()));
    }
    for j in 1..=d {
        rows.push(Constraint::new(format!("L1UP{j}"), vec![(w(j), one()), (beta(j), -one())], Sense::Le, zero()));
        rows.push(Constraint::new(format!("L1LO{j}"), vec![(w(j), -one()), (beta(j), -one())], Sense::Le, zero()));
    }
    // side constraints
    let side = &problem.side;
    if let Some((lo, hi)) = side.model_size {
        let coeffs: Vec<(usize, Rational)> = (1..=d).map(|j| (alpha(j), one())).collect();
        let q = |v: usize| rational_from_i64(v as i64);
        let row = match (lo, hi) {
            (Some(l), Some(h)) => {
                let mut c = Constraint::new("SIZE", coeffs, Sense::Ge, q(l));
                c.range = Some(q(h - l));
                Some(c)
            }
            (Some(l), None) => Some(Constraint::new("SIZE", coeffs, Sense::Ge, q(l))),
            (None, Some(h)) => Some(Constraint::new("SIZE", coeffs, Sense::Le, q(h))),
            (None, None) => None,
        };
        rows.extend(row);
    }
    for &j in &side.forced_features {
        rows.push(Constraint::new(format!("FORCE{j}"), vec![(alpha(j), one())], Sense::Eq, one()));
    }
    for &j in &side.excluded_features {
        rows.push(Constraint::new(format!("EXCL{j}"), vec![(alpha(j), one())], Sense::Eq, zero()));
    }
    for (&j, sign) in &side.sign_constraints {
        let row = match sign {
            SignConstraint::Positive => Constraint::new(format!("SIGN{j}"), vec![(w(j), one())], Sense::Ge, one()),
            SignConstraint::Negative => Constraint::new(format!("SIGN{j}"), vec![(w(j), one())], Sense::Le, -one()),
        };
        rows.push(row);
    }
    for (k, (ante, cons)) in side.implications.iter().enumerate() {
        let mut coeffs: Vec<(usize, Rational)> = cons.iter().map(|&j| (alpha(j), one())).collect();
        coeffs.push((alpha(*ante), -rational_from_i64(cons.len() as i64)));
        rows.push(Constraint::new(format!("IMPL{}", k + 1), coeffs, Sense::Le, zero()));
    }

    for row in &mut rows {
        row.coeffs.retain(|(_, a)| !a.is_zero());
        row.coeffs.sort_by_key(|(j, _)| *j);
    }
    let model = MipModel {
        name: "FAIRSCOR".to_string(),
        variables,
        constraints: rows,
        objective,
        objective_constant: zero(),
    };
    model.validate()?;
    Ok(model)
}

/// Integer coefficients `c_i` over example indices, the constant `K` and the
/// scale `S` such that `S·gap = K + Σ c_i ψ_i` for the pair `(p, q)`.
fn fairness_expression(notion: FairnessNotion, idx: &GroupIndex, p: usize, q: usize) -> (Vec<(usize, i64)>, i64, i64) {
    let mut expr: BTreeMap<usize, i64> = BTreeMap::new();
    let mut add = |ids: &[usize], c: i64| {
        for &i in ids {
            *expr.entry(i).or_insert(0) += c;
        }
    };
    let sz = |v: usize| v as i64;
    let (constant, scale) = match notion {
        FairnessNotion::Omr => {
            add(&idx.members[p], sz(idx.size(q)));
            add(&idx.members[q], -sz(idx.size(p)));
            (0, sz(idx.size(p) * idx.size(q)))
        }
        FairnessNotion::Eo => {
            add(&idx.positives[p], sz(idx.size_pos(q)));
            add(&idx.positives[q], -sz(idx.size_pos(p)));
            (0, sz(idx.size_pos(p) * idx.size_pos(q)))
        }
        FairnessNotion::Pe => {
            add(&idx.negatives[p], sz(idx.size_neg(q)));
            add(&idx.negatives[q], -sz(idx.size_neg(p)));
            (0, sz(idx.size_neg(p) * idx.size_neg(q)))
        }
        FairnessNotion::Sp => {
            let (np, nq) = (sz(idx.size(p)), sz(idx.size(q)));
            add(&idx.negatives[p], nq);
            add(&idx.positives[p], -nq);
            add(&idx.negatives[q], -np);
            add(&idx.positives[q], np);
            (sz(idx.size_pos(p)) * nq - sz(idx.size_pos(q)) * np, np * nq)
        }
        FairnessNotion::Eodds => unreachable!("equalized odds is expanded into its components"),
    };
    (expr.into_iter().filter(|(_, c)| *c != 0).collect(), constant, scale)
}
