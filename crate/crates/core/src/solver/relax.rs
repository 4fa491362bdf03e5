//! LP relaxations over a box of variable bounds.

use super::compiled::Compiled;
use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpStatus, Sense};
use crate::mip::MipModel;

const FIX_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub(crate) enum NodeBound {
    Infeasible,
    /// Lower bound on the objective over the box, with the LP point when the
    /// simplex finished.
    Bound { value: f64, x: Option<Vec<f64>> },
}

/// Relaxation of the box `[lo, hi]`. With `tighten`, Big-M coefficients of
/// free binaries are shrunk to the smallest values valid inside the box.
pub(crate) fn node_relaxation(c: &Compiled, lo: &[f64], hi: &[f64], tighten: bool) -> NodeBound {
    let n = c.num_vars();
    let mut pos = vec![usize::MAX; n];
    let mut free = Vec::new();
    for j in 0..n {
        if hi[j] - lo[j] > FIX_TOL {
            pos[j] = free.len();
            free.push(j);
        }
    }
    let fixed_cost: f64 = (0..n).filter(|&j| pos[j] == usize::MAX).map(|j| c.cost[j] * lo[j]).sum();
    let mut lp = LinearProgram::<f64>::new(
        free.iter().map(|&j| c.cost[j]).collect(),
        free.iter().map(|&j| Some(lo[j])).collect(),
        free.iter().map(|&j| Some(hi[j])).collect(),
    );
    let is_free_binary = |j: usize| c.integer[j] && lo[j] == 0.0 && hi[j] == 1.0;
    for row in &c.rows {
        let mut rhs = row.rhs;
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(row.idx.len());
        for (&j, &a) in row.idx.iter().zip(&row.val) {
            if pos[j] == usize::MAX {
                rhs -= a * lo[j];
            } else if a != 0.0 {
                entries.push((j, a));
            }
        }
        let scale = 1.0 + rhs.abs();
        if entries.is_empty() {
            if rhs < -1e-7 * scale {
                return NodeBound::Infeasible;
            }
            continue;
        }
        if tighten {
            for k in 0..entries.len() {
                let (z, a) = entries[k];
                if !is_free_binary(z) {
                    continue;
                }
                let maxrest: f64 = entries
                    .iter()
                    .enumerate()
                    .filter(|(m, _)| *m != k)
                    .map(|(_, &(j, v))| if v > 0.0 { v * hi[j] } else { v * lo[j] })
                    .sum::<f64>()
                    + 1e-9 * scale;
                if a < 0.0 && maxrest < rhs - a {
                    entries[k].1 = (rhs - maxrest).min(0.0);
                } else if a > 0.0 && maxrest < rhs {
                    entries[k].1 = (a - (rhs - maxrest)).max(0.0);
                    rhs = maxrest;
                }
            }
        }
        let (minact, maxact) = entries.iter().fold((0.0, 0.0), |(mn, mx), &(j, a)| {
            if a > 0.0 {
                (mn + a * lo[j], mx + a * hi[j])
            } else {
                (mn + a * hi[j], mx + a * lo[j])
            }
        });
        if minact > rhs + 1e-7 * scale {
            return NodeBound::Infeasible;
        }
        if maxact <= rhs + 1e-12 * scale {
            continue;
        }
        let coeffs: Vec<(usize, f64)> = entries.into_iter().filter(|(_, a)| *a != 0.0).map(|(j, a)| (pos[j], a)).collect();
        lp.add_row(coeffs, Sense::Le, rhs);
    }
    if free.is_empty() {
        return NodeBound::Bound {
            value: fixed_cost,
            x: Some(lo.to_vec()),
        };
    }
    match lp.solve() {
        Ok(sol) => match sol.status {
            LpStatus::Optimal => {
                if !primal_feasible(&lp, &sol.x) {
                    return NodeBound::Bound {
                        value: c.interval_bound(lo, hi),
                        x: None,
                    };
                }
                let mut x = lo.to_vec();
                for (p, &j) in free.iter().enumerate() {
                    x[j] = sol.x[p];
                }
                NodeBound::Bound {
                    value: sol.value + fixed_cost,
                    x: Some(x),
                }
            }
            LpStatus::Infeasible => NodeBound::Infeasible,
            LpStatus::Unbounded | LpStatus::IterationLimit => NodeBound::Bound {
                value: c.interval_bound(lo, hi),
                x: None,
            },
        },
        Err(_) => NodeBound::Bound {
            value: c.interval_bound(lo, hi),
            x: None,
        },
    }
}

/// Guards against numerical breakdown in the floating-point simplex.
fn primal_feasible(lp: &LinearProgram<f64>, x: &[f64]) -> bool {
    let tol = 1e-6;
    let in_box = x.iter().enumerate().all(|(j, v)| {
        lp.lower[j].map_or(true, |l| *v >= l - tol) && lp.upper[j].map_or(true, |u| *v <= u + tol)
    });
    in_box
        && lp.rows.iter().all(|r| {
            let act: f64 = r.coeffs.iter().map(|(j, a)| a * x[*j]).sum();
            act <= r.rhs + tol * (1.0 + r.rhs.abs())
        })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Relaxation {
    /// `None` when the relaxation is infeasible.
    pub x: Option<Vec<f64>>,
    pub value: f64,
    /// `false` when the simplex gave up and `value` is the interval bound.
    pub from_simplex: bool,
}

/// LP relaxation of the model with integrality dropped, optionally over a
/// narrower box given as `(variable, lower, upper)` overrides.
pub fn solve_relaxation(model: &MipModel, overrides: &[(usize, f64, f64)]) -> Result<Relaxation> {
    let c = Compiled::new(model);
    let mut lo = c.lower.clone();
    let mut hi = c.upper.clone();
    for &(j, l, u) in overrides {
        if j >= c.num_vars() {
            return Err(Error::InvalidParameter(format!("override refers to variable {j}")));
        }
        lo[j] = lo[j].max(l);
        hi[j] = hi[j].min(u);
    }
    if (0..lo.len()).any(|j| lo[j] > hi[j]) {
        return Ok(Relaxation {
            x: None,
            value: f64::INFINITY,
            from_simplex: true,
        });
    }
    Ok(match node_relaxation(&c, &lo, &hi, false) {
        NodeBound::Infeasible => Relaxation {
            x: None,
            value: f64::INFINITY,
            from_simplex: true,
        },
        NodeBound::Bound { value, x } => Relaxation {
            from_simplex: x.is_some(),
            x,
            value,
        },
    })
}
