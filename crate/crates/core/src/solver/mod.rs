//! Exact MIP solving: LP-based branch-and-bound plus an enumeration oracle.

mod bnb;
mod certify;
mod compiled;
mod oracle;
mod relax;

pub use certify::check_solution;
pub use oracle::{brute_force, brute_force_with_cap, DEFAULT_ENUMERATION_CAP};
pub use relax::{solve_relaxation, Relaxation};

use std::fmt;
use std::time::Duration;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::Sense;
use crate::mip::{Constraint, MipModel, VarRole};
use crate::Rational;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub time_limit_seconds: Option<f64>,
    pub absolute_gap: f64,
    pub relative_gap: f64,
    pub node_limit: Option<u64>,
    pub threads: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            time_limit_seconds: None,
            absolute_gap: 1e-9,
            relative_gap: 1e-6,
            node_limit: None,
            threads: 1,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.absolute_gap >= 0.0 && self.relative_gap >= 0.0) {
            return Err(Error::InvalidParameter("gaps must be nonnegative".into()));
        }
        if self.threads == 0 {
            return Err(Error::InvalidParameter("threads must be at least 1".into()));
        }
        if self.time_limit_seconds.is_some_and(|t| !(t > 0.0)) {
            return Err(Error::InvalidParameter("time limit must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    /// Search finished, but some nodes were pruned only by the relative gap.
    FeasibleGap,
    Infeasible,
    TimeLimit,
    NodeLimit,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Optimal => "optimal",
            Self::FeasibleGap => "feasible-gap",
            Self::Infeasible => "infeasible",
            Self::TimeLimit => "time-limit",
            Self::NodeLimit => "node-limit",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub w_star: Vec<i64>,
    pub psi_star: Vec<bool>,
    pub alpha_star: Vec<bool>,
    pub beta_star: Vec<Rational>,
    /// Value of δ when the model has a δ variable.
    pub delta_star: Option<Rational>,
    /// Full assignment in model variable order (empty when infeasible).
    pub x: Vec<Rational>,
    /// `None` when no feasible point was found.
    pub objective: Option<Rational>,
    pub best_bound: f64,
    pub status: SolveStatus,
    pub nodes_explored: u64,
    pub wall_time: Duration,
}

impl Solution {
    pub(crate) fn empty(status: SolveStatus, best_bound: f64, nodes: u64, wall_time: Duration) -> Self {
        Self {
            w_star: Vec::new(),
            psi_star: Vec::new(),
            alpha_star: Vec::new(),
            beta_star: Vec::new(),
            delta_star: None,
            x: Vec::new(),
            objective: None,
            best_bound,
            status,
            nodes_explored: nodes,
            wall_time,
        }
    }

    /// Splits a full assignment into its role-named parts.
    pub(crate) fn from_assignment(model: &MipModel, x: Vec<Rational>, status: SolveStatus, best_bound: f64, nodes: u64, wall_time: Duration) -> Self {
        let width = model.width();
        let n = model.num_examples();
        let d = width.saturating_sub(1);
        let mut w_star = vec![0i64; width];
        let mut psi_star = vec![false; n];
        let mut alpha_star = vec![false; d];
        let mut beta_star = vec![Rational::zero(); d];
        let mut delta_star = None;
        for (v, val) in model.variables.iter().zip(&x) {
            match v.role {
                VarRole::W(j) => w_star[j] = crate::scalar::rational_to_f64(val).round() as i64,
                VarRole::Psi(i) => psi_star[i - 1] = val.is_one(),
                VarRole::Alpha(j) => alpha_star[j - 1] = val.is_one(),
                VarRole::Beta(j) => beta_star[j - 1] = val.clone(),
                VarRole::Delta => delta_star = Some(val.clone()),
            }
        }
        Self {
            w_star,
            psi_star,
            alpha_star,
            beta_star,
            delta_star,
            objective: Some(model.objective_value(&x)),
            x,
            best_bound,
            status,
            nodes_explored: nodes,
            wall_time,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.objective.is_some()
    }
}

/// Solves the model to the configured tolerances.
pub fn solve(model: &MipModel, config: &SolverConfig) -> Result<Solution> {
    config.validate()?;
    model.validate()?;
    if let Some(v) = model.variables.iter().find(|v| v.integer && (!v.lower.is_integer() || !v.upper.is_integer())) {
        return Err(Error::MalformedModel(format!("integer variable {} has fractional bounds", v.name)));
    }
    bnb::branch_and_bound(model, config)
}

/// Solves, then among optimal solutions minimizes δ (when the model has one).
pub fn solve_lexicographic(model: &MipModel, config: &SolverConfig) -> Result<Solution> {
    let first = solve(model, config)?;
    let (Some(f_star), Some(delta)) = (first.objective.clone(), model.index_of(VarRole::Delta)) else {
        return Ok(first);
    };
    if first.status != SolveStatus::Optimal {
        return Ok(first);
    }
    let mut second = model.clone();
    let coeffs: Vec<(usize, Rational)> = model
        .objective
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(j, c)| (j, c.clone()))
        .collect();
    second
        .constraints
        .push(Constraint::new("OBJCAP", coeffs, Sense::Le, f_star - &model.objective_constant));
    second.objective = vec![Rational::zero(); model.num_vars()];
    second.objective[delta] = Rational::one();
    second.objective_constant = Rational::zero();
    let tie = solve(&second, config)?;
    if tie.status != SolveStatus::Optimal {
        return Ok(first);
    }
    let mut out = Solution::from_assignment(model, tie.x, SolveStatus::Optimal, first.best_bound, first.nodes_explored + tie.nodes_explored, first.wall_time + tie.wall_time);
    // the cap row admits only optimal points, so the original objective is unchanged
    debug_assert_eq!(out.objective, first.objective);
    out.best_bound = first.best_bound;
    Ok(out)
}
