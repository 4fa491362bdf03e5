//! Explicit mixed-integer programs: the in-memory model, the builder that
//! turns a training problem into one, and text formats (MPS, LP-style).

mod build;
mod lp_format;
mod mps;

pub use build::{big_m, build, LossLinking, Problem, SideConstraints, SignConstraint, SolveMode};
pub use lp_format::export_lp;
pub use mps::{export_mps, parse_mps};

use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::lp::Sense;
use crate::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarRole {
    /// Coefficient `w_j`, `j = 0..=d`.
    W(usize),
    /// Loss indicator `ψ_i`, `i = 1..=n`.
    Psi(usize),
    /// Support indicator `α_j`, `j = 1..=d`.
    Alpha(usize),
    /// Magnitude bound `β_j`, `j = 1..=d`.
    Beta(usize),
    Delta,
}

impl VarRole {
    pub fn name(self) -> String {
        match self {
            Self::W(j) => format!("w{j}"),
            Self::Psi(i) => format!("psi{i}"),
            Self::Alpha(j) => format!("alpha{j}"),
            Self::Beta(j) => format!("beta{j}"),
            Self::Delta => "delta".to_string(),
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        if name == "delta" {
            return Some(Self::Delta);
        }
        let split = name.find(|c: char| c.is_ascii_digit())?;
        let (prefix, digits) = name.split_at(split);
        let k: usize = digits.parse().ok()?;
        if digits.len() > 1 && digits.starts_with('0') {
            return None;
        }
        match prefix {
            "w" => Some(Self::W(k)),
            "psi" if k >= 1 => Some(Self::Psi(k)),
            "alpha" if k >= 1 => Some(Self::Alpha(k)),
            "beta" if k >= 1 => Some(Self::Beta(k)),
            _ => None,
        }
    }

    /// Branching priority: coefficients first, then support indicators, then loss indicators.
    pub fn priority(self) -> u8 {
        match self {
            Self::W(_) => 0,
            Self::Alpha(_) => 1,
            Self::Psi(_) => 2,
            Self::Beta(_) | Self::Delta => 3,
        }
    }
}

impl fmt::Display for VarRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub role: VarRole,
    pub lower: Rational,
    pub upper: Rational,
    pub integer: bool,
}

impl Variable {
    pub fn is_binary(&self) -> bool {
        self.integer && self.lower.is_zero() && self.upper.is_one()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(usize, Rational)>,
    pub sense: Sense,
    pub rhs: Rational,
    /// MPS-style range: a `Ge` row becomes `[rhs, rhs + |r|]`, a `Le` row
    /// `[rhs − |r|, rhs]`, an `Eq` row extends towards the sign of `r`.
    pub range: Option<Rational>,
}

impl Constraint {
    pub fn new(name: impl Into<String>, coeffs: Vec<(usize, Rational)>, sense: Sense, rhs: Rational) -> Self {
        Self {
            name: name.into(),
            coeffs,
            sense,
            rhs,
            range: None,
        }
    }

    /// Activity interval `(lo, hi)`; `None` is unbounded.
    pub fn bounds(&self) -> (Option<Rational>, Option<Rational>) {
        let rhs = self.rhs.clone();
        match (self.sense, &self.range) {
            (Sense::Le, None) => (None, Some(rhs)),
            (Sense::Ge, None) => (Some(rhs), None),
            (Sense::Eq, None) => (Some(rhs.clone()), Some(rhs)),
            (Sense::Le, Some(r)) => (Some(&rhs - r.abs()), Some(rhs)),
            (Sense::Ge, Some(r)) => (Some(rhs.clone()), Some(rhs + r.abs())),
            (Sense::Eq, Some(r)) if r.is_negative() => (Some(&rhs + r), Some(rhs)),
            (Sense::Eq, Some(r)) => (Some(rhs.clone()), Some(rhs + r)),
        }
    }

    pub fn activity(&self, x: &[Rational]) -> Rational {
        self.coeffs.iter().map(|(j, a)| a * &x[*j]).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MipModel {
    pub name: String,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    /// Dense objective coefficients (minimized).
    pub objective: Vec<Rational>,
    pub objective_constant: Rational,
}

impl MipModel {
    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_rows(&self) -> usize {
        self.constraints.len()
    }

    pub fn index_of(&self, role: VarRole) -> Option<usize> {
        self.variables.iter().position(|v| v.role == role)
    }

    pub fn indices_where(&self, pred: impl Fn(VarRole) -> bool) -> Vec<usize> {
        (0..self.num_vars()).filter(|&k| pred(self.variables[k].role)).collect()
    }

    /// Number of `w` variables (`d + 1`).
    pub fn width(&self) -> usize {
        self.variables.iter().filter(|v| matches!(v.role, VarRole::W(_))).count()
    }

    pub fn num_examples(&self) -> usize {
        self.variables.iter().filter(|v| matches!(v.role, VarRole::Psi(_))).count()
    }

    pub fn has_delta(&self) -> bool {
        self.index_of(VarRole::Delta).is_some()
    }

    pub fn objective_value(&self, x: &[Rational]) -> Rational {
        self.objective
            .iter()
            .zip(x)
            .filter(|(c, _)| !c.is_zero())
            .map(|(c, v)| c * v)
            .sum::<Rational>()
            + &self.objective_constant
    }

    /// Structural checks: bounds ordered, indices in range, roles unique.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        let bad = |m: String| Err(Error::MalformedModel(m));
        if self.objective.len() != n {
            return bad(format!("objective has {} entries for {n} variables", self.objective.len()));
        }
        let mut roles: Vec<VarRole> = self.variables.iter().map(|v| v.role).collect();
        roles.sort();
        if roles.windows(2).any(|w| w[0] == w[1]) {
            return bad("duplicate variable role".into());
        }
        for v in &self.variables {
            if v.lower > v.upper {
                return bad(format!("variable {} has lower bound above upper bound", v.name));
            }
        }
        for c in &self.constraints {
            if let Some((j, _)) = c.coeffs.iter().find(|(j, _)| *j >= n) {
                return bad(format!("row {} references variable index {j}", c.name));
            }
        }
        Ok(())
    }

    /// Every violated bound, integrality requirement or row at `x`, checked exactly.
    pub fn violations(&self, x: &[Rational]) -> Vec<String> {
        let mut out = Vec::new();
        if x.len() != self.num_vars() {
            out.push(format!("assignment has {} values for {} variables", x.len(), self.num_vars()));
            return out;
        }
        for (v, val) in self.variables.iter().zip(x) {
            if *val < v.lower || *val > v.upper {
                out.push(format!("{} = {val} outside [{}, {}]", v.name, v.lower, v.upper));
            }
            if v.integer && !val.is_integer() {
                out.push(format!("{} = {val} is not integral", v.name));
            }
        }
        for c in &self.constraints {
            let act = c.activity(x);
            let (lo, hi) = c.bounds();
            if lo.as_ref().is_some_and(|l| act < *l) || hi.as_ref().is_some_and(|h| act > *h) {
                out.push(format!("row {} has activity {act} outside its bounds", c.name));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn role_names_round_trip() {
        for role in [VarRole::W(0), VarRole::W(12), VarRole::Psi(3), VarRole::Alpha(1), VarRole::Beta(9), VarRole::Delta] {
            assert_eq!(VarRole::from_name(&role.name()), Some(role));
        }
        assert_eq!(VarRole::from_name("psi0"), None);
        assert_eq!(VarRole::from_name("x1"), None);
        assert_eq!(VarRole::from_name("w01"), None);
    }

    #[test]
    fn ranged_row_bounds() {
        let q = |v: i64| crate::scalar::rational_from_i64(v);
        let mut c = Constraint::new("R", vec![], Sense::Ge, q(2));
        c.range = Some(q(3));
        assert_eq!(c.bounds(), (Some(q(2)), Some(q(5))));
        c.sense = Sense::Le;
        assert_eq!(c.bounds(), (Some(q(-1)), Some(q(2))));
        c.sense = Sense::Eq;
        c.range = Some(q(-1));
        assert_eq!(c.bounds(), (Some(q(1)), Some(q(2))));
    }
}
