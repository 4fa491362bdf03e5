//! Exact completion and verification of candidate solutions.
//!
//! The branch-and-bound works in `f64`; nothing it proposes is trusted.
//! Integer values are rounded, continuous values are recomputed in rational
//! arithmetic, and the full assignment is checked row by row before it can
//! become an incumbent.

use num_traits::{Signed, Zero};

use crate::lp::{LinearProgram, LpStatus, Sense};
use crate::mip::MipModel;
use crate::scalar::rational_from_i64;
use crate::Rational;

/// Every violated bound, integrality requirement or row; empty means feasible.
pub fn check_solution(model: &MipModel, x: &[Rational]) -> Vec<String> {
    model.violations(x)
}

/// Rounds the integer part of `values`, fills in the continuous variables
/// exactly and returns the assignment if it satisfies the model.
pub(crate) fn complete(model: &MipModel, values: &[f64]) -> Option<Vec<Rational>> {
    let ints: Vec<Option<i64>> = model
        .variables
        .iter()
        .zip(values)
        .map(|(v, x)| v.integer.then(|| x.round() as i64))
        .collect();
    complete_integers(model, &ints)
}

pub(crate) fn complete_integers(model: &MipModel, ints: &[Option<i64>]) -> Option<Vec<Rational>> {
    let mut x: Vec<Rational> = ints.iter().map(|v| v.map_or_else(Rational::zero, rational_from_i64)).collect();
    let continuous: Vec<usize> = (0..model.num_vars()).filter(|&j| !model.variables[j].integer).collect();
    if !continuous.is_empty() {
        let is_cont = |j: usize| !model.variables[j].integer;
        let separable = model
            .constraints
            .iter()
            .all(|c| c.coeffs.iter().filter(|(j, a)| is_cont(*j) && !a.is_zero()).count() <= 1);
        let ok = if separable {
            fill_separable(model, &mut x, &continuous)
        } else {
            fill_by_lp(model, &mut x, &continuous)
        };
        if !ok {
            return None;
        }
    }
    model.violations(&x).is_empty().then_some(x)
}

fn fill_separable(model: &MipModel, x: &mut [Rational], continuous: &[usize]) -> bool {
    let mut lo: Vec<Rational> = model.variables.iter().map(|v| v.lower.clone()).collect();
    let mut hi: Vec<Rational> = model.variables.iter().map(|v| v.upper.clone()).collect();
    for c in &model.constraints {
        let Some((k, a)) = c.coeffs.iter().find(|(j, a)| !model.variables[*j].integer && !a.is_zero()) else {
            continue;
        };
        let rest: Rational = c
            .coeffs
            .iter()
            .filter(|(j, _)| j != k)
            .map(|(j, v)| v * &x[*j])
            .sum();
        let (row_lo, row_hi) = c.bounds();
        // row_lo <= rest + a·x_k <= row_hi
        let mut apply = |bound: Rational, is_upper_on_activity: bool| {
            let limit = (bound - &rest) / a;
            if is_upper_on_activity == a.is_positive() {
                if limit < hi[*k] {
                    hi[*k] = limit;
                }
            } else if limit > lo[*k] {
                lo[*k] = limit;
            }
        };
        if let Some(h) = row_hi {
            apply(h, true);
        }
        if let Some(l) = row_lo {
            apply(l, false);
        }
    }
    for &k in continuous {
        if lo[k] > hi[k] {
            return false;
        }
        x[k] = if model.objective[k].is_negative() { hi[k].clone() } else { lo[k].clone() };
    }
    true
}

fn fill_by_lp(model: &MipModel, x: &mut [Rational], continuous: &[usize]) -> bool {
    let pos: std::collections::HashMap<usize, usize> = continuous.iter().enumerate().map(|(p, &k)| (k, p)).collect();
    let mut lp = LinearProgram::new(
        continuous.iter().map(|&k| model.objective[k].clone()).collect(),
        continuous.iter().map(|&k| Some(model.variables[k].lower.clone())).collect(),
        continuous.iter().map(|&k| Some(model.variables[k].upper.clone())).collect(),
    );
    for c in &model.constraints {
        let mut coeffs = Vec::new();
        let mut rest = Rational::zero();
        for (j, a) in &c.coeffs {
            match pos.get(j) {
                Some(&p) => coeffs.push((p, a.clone())),
                None => rest += a * &x[*j],
            }
        }
        if coeffs.is_empty() {
            continue;
        }
        let (lo, hi) = c.bounds();
        if let Some(h) = hi {
            lp.add_row(coeffs.clone(), Sense::Le, h - &rest);
        }
        if let Some(l) = lo {
            lp.add_row(coeffs, Sense::Ge, l - &rest);
        }
    }
    match lp.solve() {
        Ok(sol) if sol.status == LpStatus::Optimal => {
            for (p, &k) in continuous.iter().enumerate() {
                x[k] = sol.x[p].clone();
            }
            true
        }
        _ => false,
    }
}
