//! Exhaustive search over integer coefficient vectors, for small problems.
//!
//! Used as a reference for the branch-and-bound. Scores are compared in
//! scaled integer arithmetic; objectives are exact.

use std::collections::HashMap;
use std::time::Instant;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{Solution, SolveStatus};
use crate::error::{Error, Result};
use crate::fairness::fairness_level_all;
use crate::mip::{build, LossLinking, Problem, SignConstraint, SolveMode, VarRole};
use crate::scalar::{rational_from_i64, rational_to_f64};
use crate::Rational;

pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

pub fn brute_force(problem: &Problem) -> Result<Solution> {
    brute_force_with_cap(problem, DEFAULT_ENUMERATION_CAP)
}

/// Rows scaled to integers: `score_i · scale_i = Σ_j x̃_ij w_j`.
struct IntRows {
    rows: Vec<Vec<i128>>,
    /// `γ · scale_i · y_i`-free margin threshold, also scaled: `γ_num · scale_i`.
    margin: Vec<i128>,
    gamma_den: i128,
}

fn to_i128(v: &BigInt) -> Result<i128> {
    v.to_i128()
        .ok_or_else(|| Error::InvalidParameter("feature values too large for exhaustive search".into()))
}

fn int_rows(problem: &Problem) -> Result<IntRows> {
    let ds = &problem.dataset;
    let mut rows = Vec::with_capacity(ds.n());
    let mut margin = Vec::with_capacity(ds.n());
    for (i, x) in ds.rows().iter().enumerate() {
        let scale = x.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
        let y = BigInt::from(ds.label(i));
        let row = x
            .iter()
            .map(|v| to_i128(&(v.numer() * (&scale / v.denom()) * &y)))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
        margin.push(to_i128(&(problem.gamma.numer() * &scale))?);
    }
    Ok(IntRows {
        rows,
        margin,
        gamma_den: to_i128(problem.gamma.denom())?,
    })
}

/// Per-coordinate value ranges after exclusions and sign constraints.
fn ranges(problem: &Problem) -> Vec<(i64, i64)> {
    let proc = problem.procedural_columns();
    let side = &problem.side;
    (0..=problem.d())
        .map(|j| {
            let o = problem.omega[j];
            if j > 0 && (side.excluded_features.contains(&j) || proc.contains(&j)) {
                return (0, 0);
            }
            match side.sign_constraints.get(&j) {
                Some(SignConstraint::Positive) => (1, o),
                Some(SignConstraint::Negative) => (-o, -1),
                None => (-o, o),
            }
        })
        .collect()
}

/// Cheapest support vector containing `used`, or `None` when the size and
/// implication rules cannot be met.
fn cheapest_support(problem: &Problem, used: &[bool]) -> Option<(Vec<bool>, Rational)> {
    let d = problem.d();
    let side = &problem.side;
    let proc = problem.procedural_columns();
    let mut base = used.to_vec();
    for &j in &side.forced_features {
        base[j - 1] = true;
    }
    let cost = |a: &[bool]| -> Rational {
        (1..=d)
            .filter(|j| a[j - 1])
            .map(|j| problem.params.lambda0_for(j).clone())
            .sum()
    };
    let ok = |a: &[bool]| -> bool {
        let size = a.iter().filter(|v| **v).count();
        if let Some((lo, hi)) = side.model_size {
            if lo.is_some_and(|l| size < l) || hi.is_some_and(|h| size > h) {
                return false;
            }
        }
        side.implications
            .iter()
            .all(|(ante, cons)| a[ante - 1] || cons.iter().all(|&j| !a[j - 1]))
    };
    if !side.has_size_or_implications() {
        return ok(&base).then(|| {
            let c = cost(&base);
            (base, c)
        });
    }
    let optional: Vec<usize> = (1..=d)
        .filter(|&j| !base[j - 1] && !side.excluded_features.contains(&j) && !proc.contains(&j))
        .collect();
    let mut best: Option<(Vec<bool>, Rational)> = None;
    for mask in 0u64..(1u64 << optional.len()) {
        let mut a = base.clone();
        for (k, &j) in optional.iter().enumerate() {
            if mask >> k & 1 == 1 {
                a[j - 1] = true;
            }
        }
        if !ok(&a) {
            continue;
        }
        let c = cost(&a);
        if best.as_ref().map_or(true, |(_, bc)| c < *bc) {
            best = Some((a, c));
        }
    }
    best
}

/// Loss indicators of `w`, or `None` when some example lands strictly
/// between zero and the margin.
fn losses(rows: &IntRows, w: &[i64]) -> Option<Vec<bool>> {
    let mut psi = Vec::with_capacity(rows.rows.len());
    for (row, m) in rows.rows.iter().zip(&rows.margin) {
        let s: i128 = row.iter().zip(w).map(|(a, &b)| a * b as i128).sum();
        if s <= 0 {
            psi.push(true);
        } else if s * rows.gamma_den >= *m {
            psi.push(false);
        } else {
            return None;
        }
    }
    Some(psi)
}

/// Enumerates every admissible `w` and returns an exactly optimal solution;
/// ties go to the lexicographically smallest `w`. Requires exact loss linking.
pub fn brute_force_with_cap(problem: &Problem, cap: u128) -> Result<Solution> {
    let start = Instant::now();
    problem.validate()?;
    if problem.linking != LossLinking::Exact {
        return Err(Error::InvalidParameter("exhaustive search needs exact loss linking".into()));
    }
    let ranges = ranges(problem);
    let size = ranges
        .iter()
        .try_fold(1u128, |acc, (lo, hi)| acc.checked_mul((hi - lo + 1) as u128))
        .unwrap_or(u128::MAX);
    if size > cap {
        return Err(Error::EnumerationCap { size, cap });
    }
    let model = build(problem)?;
    let rows = int_rows(problem)?;
    let indices = problem.group_indices();
    let n_q = rational_from_i64(problem.n() as i64);
    let params = &problem.params;

    // (loss part + fairness part, δ) per loss vector; None when infeasible
    let mut by_psi: HashMap<Vec<bool>, Option<(Rational, Option<Rational>)>> = HashMap::new();
    let mut by_support: HashMap<Vec<bool>, Option<(Vec<bool>, Rational)>> = HashMap::new();
    let mut best: Option<(Rational, Vec<i64>, Vec<bool>, Vec<bool>, Option<Rational>)> = None;

    let mut w: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    let mut visited: u128 = 0;
    'outer: loop {
        visited += 1;
        if let Some(psi) = losses(&rows, &w) {
            let entry = match by_psi.get(&psi) {
                Some(e) => e.clone(),
                None => {
                    let e = psi_value(problem, &psi, &indices, &n_q)?;
                    by_psi.insert(psi.clone(), e.clone());
                    e
                }
            };
            let used: Vec<bool> = w[1..].iter().map(|v| *v != 0).collect();
            let support = by_support
                .entry(used.clone())
                .or_insert_with(|| cheapest_support(problem, &used))
                .clone();
            if let (Some((base, delta)), Some((alpha, l0))) = (entry, support) {
                let l1: Rational = &params.epsilon * rational_from_i64(w[1..].iter().map(|v| v.abs()).sum());
                let value = base + l0 + l1;
                if best.as_ref().map_or(true, |b| value < b.0) {
                    best = Some((value, w.clone(), psi, alpha, delta));
                }
            }
        }
        // odometer step, last coordinate fastest
        for j in (0..w.len()).rev() {
            if w[j] < ranges[j].1 {
                w[j] += 1;
                continue 'outer;
            }
            w[j] = ranges[j].0;
        }
        break;
    }
    log::debug!("exhaustive search visited {visited} coefficient vectors");
    let wall = start.elapsed();
    let Some((value, w, psi, alpha, delta)) = best else {
        return Ok(Solution::empty(SolveStatus::Infeasible, f64::INFINITY, 0, wall));
    };
    let x: Vec<Rational> = model
        .variables
        .iter()
        .map(|v| match v.role {
            VarRole::W(j) => rational_from_i64(w[j]),
            VarRole::Psi(i) => bool_q(psi[i - 1]),
            VarRole::Alpha(j) => bool_q(alpha[j - 1]),
            VarRole::Beta(j) => rational_from_i64(w[j].abs()),
            VarRole::Delta => delta.clone().unwrap_or_else(Rational::zero),
        })
        .collect();
    debug_assert!(model.violations(&x).is_empty(), "{:?}", model.violations(&x));
    debug_assert_eq!(model.objective_value(&x), value);
    Ok(Solution::from_assignment(&model, x, SolveStatus::Optimal, rational_to_f64(&value), visited as u64, wall))
}

fn bool_q(b: bool) -> Rational {
    if b {
        Rational::one()
    } else {
        Rational::zero()
    }
}

fn psi_value(
    problem: &Problem,
    psi: &[bool],
    indices: &[crate::fairness::GroupIndex],
    n_q: &Rational,
) -> Result<Option<(Rational, Option<Rational>)>> {
    let params = &problem.params;
    let loss: Rational = params
        .b
        .iter()
        .zip(psi)
        .filter(|(_, p)| **p)
        .map(|(b, _)| b / n_q)
        .sum();
    Ok(match &problem.mode {
        SolveMode::AccuracyOnly => Some((loss, None)),
        SolveMode::FixedDelta { delta } => {
            let level: Rational = fairness_level_all(problem.notion, psi, indices)?;
            (level <= *delta).then_some((loss, None))
        }
        SolveMode::Joint => {
            let level: Rational = fairness_level_all(problem.notion, psi, indices)?;
            let delta = if params.rho_bar.is_negative() { Rational::one() } else { level };
            let value = loss + &params.rho_bar * &delta;
            Some((value, Some(delta)))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fairness::FairnessNotion;
    use crate::model::Dataset;
    use crate::scalar::ratio;
    use crate::welfare::WelfareParams;

    fn toy() -> Problem {
        let ds = Dataset::from_integers(
            &[vec![1, 1, 0], vec![1, 0, 1], vec![1, 1, 1], vec![1, 0, 0], vec![1, 1, 0], vec![1, 0, 1]],
            vec![1, -1, 1, -1, -1, 1],
            vec![0, 0, 0, 1, 1, 1],
        )
        .unwrap();
        Problem::new(ds, WelfareParams::unit(6), FairnessNotion::Sp).with_uniform_omega(2)
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let err = brute_force_with_cap(&toy(), 100).unwrap_err();
        assert!(matches!(err, Error::EnumerationCap { size: 125, cap: 100 }));
    }

    #[test]
    fn solution_is_feasible_and_consistent() {
        let p = toy().with_mode(SolveMode::AccuracyOnly);
        let sol = brute_force(&p).unwrap();
        let m = build(&p).unwrap();
        assert!(m.violations(&sol.x).is_empty());
        let psi = crate::model::loss_vector_for(&sol.w_star, &p.dataset).unwrap();
        assert_eq!(psi, sol.psi_star);
    }

    #[test]
    fn excluded_and_signed_features_respected() {
        let mut p = toy();
        p.side.excluded_features.insert(1);
        p.side.sign_constraints.insert(2, SignConstraint::Negative);
        let sol = brute_force(&p).unwrap();
        assert_eq!(sol.w_star[1], 0);
        assert!(sol.w_star[2] <= -1);
    }

    #[test]
    fn size_lower_bound_can_force_unused_support() {
        let mut p = toy();
        p.params = p.params.clone().with_penalties(ratio(1, 100), ratio(0, 1));
        p.side.model_size = Some((Some(2), None));
        let sol = brute_force(&p).unwrap();
        assert_eq!(sol.alpha_star.iter().filter(|a| **a).count(), 2);
    }
}
