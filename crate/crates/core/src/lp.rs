//! Dense-tableau bounded-variable primal simplex.
//!
//! Written over [`Scalar`] so the same code serves as the fast `f64`
//! relaxation engine inside branch-and-bound and as an exact rational
//! solver when certificates need exact continuous values.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpRow<T> {
    pub coeffs: Vec<(usize, T)>,
    pub sense: Sense,
    pub rhs: T,
}

/// `min c·x` subject to rows and `lower <= x <= upper`. `None` is an infinite bound.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram<T> {
    pub objective: Vec<T>,
    pub lower: Vec<Option<T>>,
    pub upper: Vec<Option<T>>,
    pub rows: Vec<LpRow<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct LpSolution<T> {
    pub status: LpStatus,
    pub x: Vec<T>,
    pub value: T,
    pub iterations: usize,
}

impl<T: Scalar> LinearProgram<T> {
    pub fn new(objective: Vec<T>, lower: Vec<Option<T>>, upper: Vec<Option<T>>) -> Self {
        Self {
            objective,
            lower,
            upper,
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, T)>, sense: Sense, rhs: T) {
        self.rows.push(LpRow { coeffs, sense, rhs });
    }

    pub fn solve(&self) -> Result<LpSolution<T>> {
        self.solve_with_limit(None)
    }

    pub fn solve_with_limit(&self, max_iterations: Option<usize>) -> Result<LpSolution<T>> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.lower.len().min(self.upper.len()),
            });
        }
        for j in 0..n {
            if self.lower[j].is_none() && self.upper[j].is_none() {
                return Err(Error::InvalidParameter(format!("LP variable {j} is free; give it a bound")));
            }
            if let (Some(l), Some(u)) = (&self.lower[j], &self.upper[j]) {
                if l > u {
                    return Ok(self.infeasible());
                }
            }
        }
        for row in &self.rows {
            if let Some(&(j, _)) = row.coeffs.iter().find(|(j, _)| *j >= n) {
                return Err(Error::InvalidParameter(format!("LP row references variable {j} of {n}")));
            }
        }
        let limit = max_iterations.unwrap_or(50 * (n + self.rows.len()) + 1000);
        Tableau::build(self).run(limit, self)
    }

    fn infeasible(&self) -> LpSolution<T> {
        LpSolution {
            status: LpStatus::Infeasible,
            x: Vec::new(),
            value: T::zero(),
            iterations: 0,
        }
    }
}

struct Tableau<T> {
    m: usize,
    /// structural + slack + artificial
    total: usize,
    first_art: usize,
    t: Vec<Vec<T>>,
    basis: Vec<usize>,
    x: Vec<T>,
    lower: Vec<Option<T>>,
    upper: Vec<Option<T>>,
    is_basic: Vec<bool>,
    tol: T,
    /// Smallest tableau entry accepted as a pivot.
    pivot_tol: T,
}

impl<T: Scalar> Tableau<T> {
    fn build(lp: &LinearProgram<T>) -> Self {
        let n = lp.num_vars();
        let m = lp.rows.len();
        let mut lower = lp.lower.clone();
        let mut upper = lp.upper.clone();
        for row in &lp.rows {
            match row.sense {
                Sense::Le => {
                    lower.push(Some(T::zero()));
                    upper.push(None);
                }
                Sense::Ge => {
                    lower.push(None);
                    upper.push(Some(T::zero()));
                }
                Sense::Eq => {
                    lower.push(Some(T::zero()));
                    upper.push(Some(T::zero()));
                }
            }
        }
        let mut x: Vec<T> = (0..n + m)
            .map(|j| match (&lower[j], &upper[j]) {
                (Some(l), _) => l.clone(),
                (None, Some(u)) => u.clone(),
                (None, None) => T::zero(),
            })
            .collect();
        // residual of each row with every structural variable at its starting bound
        let mut residual: Vec<T> = lp
            .rows
            .iter()
            .map(|row| {
                row.coeffs
                    .iter()
                    .fold(row.rhs.clone(), |acc, (j, a)| acc - a.clone() * x[*j].clone())
            })
            .collect();
        let mut needs_art = Vec::new();
        for i in 0..m {
            let s = n + i;
            let fits = lower[s].as_ref().map_or(true, |l| residual[i] >= *l) && upper[s].as_ref().map_or(true, |u| residual[i] <= *u);
            if fits {
                x[s] = residual[i].clone();
            } else {
                x[s] = T::zero();
                needs_art.push(i);
            }
        }
        let first_art = n + m;
        let total = first_art + needs_art.len();
        let mut t = vec![vec![T::zero(); total]; m];
        let mut basis: Vec<usize> = (0..m).map(|i| n + i).collect();
        for (i, row) in lp.rows.iter().enumerate() {
            for (j, a) in &row.coeffs {
                t[i][*j] = t[i][*j].clone() + a.clone();
            }
            t[i][n + i] = T::one();
        }
        for (k, &i) in needs_art.iter().enumerate() {
            let a = first_art + k;
            // a x + s + σ·art = rhs, with art = σ·residual >= 0
            let sigma = if residual[i] >= T::zero() { T::one() } else { -T::one() };
            t[i][a] = sigma.clone();
            x.push(sigma.clone() * residual[i].clone());
            lower.push(Some(T::zero()));
            upper.push(None);
            basis[i] = a;
            // make the artificial the basic variable of row i
            let scale = sigma;
            for v in t[i].iter_mut() {
                *v = v.clone() * scale.clone();
            }
            residual[i] = x[a].clone();
        }
        let mut is_basic = vec![false; total];
        for &b in &basis {
            is_basic[b] = true;
        }
        Tableau {
            m,
            total,
            first_art,
            t,
            basis,
            x,
            lower,
            upper,
            is_basic,
            tol: if T::EXACT { T::zero() } else { T::from_f64(1e-9).expect("tolerance") },
            pivot_tol: if T::EXACT { T::zero() } else { T::from_f64(1e-7).expect("tolerance") },
        }
    }

    fn run(mut self, limit: usize, lp: &LinearProgram<T>) -> Result<LpSolution<T>> {
        let mut iterations = 0;
        if self.total > self.first_art {
            let mut phase1 = vec![T::zero(); self.total];
            for c in phase1.iter_mut().skip(self.first_art) {
                *c = T::one();
            }
            match self.optimize(&phase1, limit, &mut iterations) {
                LpStatus::Optimal => {}
                LpStatus::IterationLimit => return Ok(self.finish(LpStatus::IterationLimit, lp, iterations)),
                // phase 1 is bounded below by zero
                LpStatus::Unbounded | LpStatus::Infeasible => return Ok(self.finish(LpStatus::Infeasible, lp, iterations)),
            }
            let infeas = (self.first_art..self.total).fold(T::zero(), |acc, a| acc + self.x[a].clone());
            let feas_tol = if T::EXACT { T::zero() } else { T::from_f64(1e-7).expect("tolerance") };
            if infeas > feas_tol {
                return Ok(self.finish(LpStatus::Infeasible, lp, iterations));
            }
            for a in self.first_art..self.total {
                self.upper[a] = Some(T::zero());
                if !self.is_basic[a] {
                    self.x[a] = T::zero();
                }
            }
        }
        let mut cost = lp.objective.clone();
        cost.resize(self.total, T::zero());
        let status = self.optimize(&cost, limit, &mut iterations);
        Ok(self.finish(status, lp, iterations))
    }

    fn finish(&self, status: LpStatus, lp: &LinearProgram<T>, iterations: usize) -> LpSolution<T> {
        let n = lp.num_vars();
        let x: Vec<T> = self.x[..n].to_vec();
        let value = lp
            .objective
            .iter()
            .zip(&x)
            .fold(T::zero(), |acc, (c, v)| acc + c.clone() * v.clone());
        LpSolution {
            status,
            x: if status == LpStatus::Infeasible { Vec::new() } else { x },
            value,
            iterations,
        }
    }

    fn reduced_costs(&self, cost: &[T]) -> Vec<T> {
        let mut d = cost.to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = &cost[b];
            if cb.is_zero() {
                continue;
            }
            for (dj, tij) in d.iter_mut().zip(&self.t[i]) {
                if !tij.is_zero() {
                    *dj = dj.clone() - cb.clone() * tij.clone();
                }
            }
        }
        d
    }

    fn optimize(&mut self, cost: &[T], limit: usize, iterations: &mut usize) -> LpStatus {
        let mut degenerate_streak = 0usize;
        loop {
            if *iterations >= limit {
                return LpStatus::IterationLimit;
            }
            let bland = degenerate_streak > 50;
            let d = self.reduced_costs(cost);
            let mut entering: Option<(usize, bool)> = None;
            let mut best = T::zero();
            for j in 0..self.total {
                if self.is_basic[j] || self.is_fixed(j) {
                    continue;
                }
                let at_upper = self.at_upper(j);
                let can_increase = !at_upper && d[j] < -self.tol.clone();
                let can_decrease = !self.at_lower(j) && d[j] > self.tol;
                if !(can_increase || can_decrease) {
                    continue;
                }
                let score = d[j].abs();
                if bland {
                    entering = Some((j, can_increase));
                    break;
                }
                if entering.is_none() || score > best {
                    best = score;
                    entering = Some((j, can_increase));
                }
            }
            let Some((j, increase)) = entering else {
                return LpStatus::Optimal;
            };
            *iterations += 1;
            let dir = if increase { T::one() } else { -T::one() };

            // ratio test
            let mut step: Option<T> = match (&self.lower[j], &self.upper[j]) {
                (Some(l), Some(u)) => Some(u.clone() - l.clone()),
                _ => None,
            };
            let mut leave: Option<(usize, bool)> = None;
            let mut leave_pivot = T::zero();
            for i in 0..self.m {
                let alpha = self.t[i][j].clone() * dir.clone();
                if alpha.abs() <= self.pivot_tol {
                    continue;
                }
                let b = self.basis[i];
                let (limit_i, to_lower) = if alpha > T::zero() {
                    match &self.lower[b] {
                        Some(l) => ((self.x[b].clone() - l.clone()) / alpha.clone(), true),
                        None => continue,
                    }
                } else {
                    match &self.upper[b] {
                        Some(u) => ((u.clone() - self.x[b].clone()) / (-alpha.clone()), false),
                        None => continue,
                    }
                };
                let limit_i = if limit_i < T::zero() { T::zero() } else { limit_i };
                let better = match &step {
                    None => true,
                    Some(s) => {
                        if limit_i < s.clone() - self.tol.clone() {
                            true
                        } else if limit_i <= s.clone() + self.tol.clone() {
                            match leave {
                                // ties with the bound flip keep the flip (no pivot)
                                None => false,
                                Some((r, _)) => {
                                    if bland {
                                        b < self.basis[r]
                                    } else {
                                        alpha.abs() > leave_pivot
                                    }
                                }
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    step = Some(limit_i);
                    leave = Some((i, to_lower));
                    leave_pivot = alpha.abs();
                }
            }
            let Some(theta) = step else {
                return LpStatus::Unbounded;
            };
            if theta.is_negligible() {
                degenerate_streak += 1;
            } else {
                degenerate_streak = 0;
            }
            // move basic variables
            let delta = theta.clone() * dir.clone();
            for i in 0..self.m {
                let tij = self.t[i][j].clone();
                if !tij.is_zero() {
                    let b = self.basis[i];
                    self.x[b] = self.x[b].clone() - tij * delta.clone();
                }
            }
            self.x[j] = self.x[j].clone() + delta;
            match leave {
                None => {
                    // bound flip
                    self.x[j] = if increase {
                        self.upper[j].clone().expect("finite upper")
                    } else {
                        self.lower[j].clone().expect("finite lower")
                    };
                }
                Some((r, to_lower)) => {
                    let b = self.basis[r];
                    self.x[b] = if to_lower {
                        self.lower[b].clone().expect("finite lower")
                    } else {
                        self.upper[b].clone().expect("finite upper")
                    };
                    self.pivot(r, j);
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let p = self.t[r][j].clone();
        for v in self.t[r].iter_mut() {
            if !v.is_zero() {
                *v = v.clone() / p.clone();
            }
        }
        let pivot_row = self.t[r].clone();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i][j].clone();
            if f.is_zero() {
                continue;
            }
            for (v, pr) in self.t[i].iter_mut().zip(&pivot_row) {
                if !pr.is_zero() {
                    *v = v.clone() - f.clone() * pr.clone();
                }
            }
            if !T::EXACT {
                self.t[i][j] = T::zero();
            }
        }
        let old = self.basis[r];
        self.is_basic[old] = false;
        self.is_basic[j] = true;
        self.basis[r] = j;
    }

    fn is_fixed(&self, j: usize) -> bool {
        matches!((&self.lower[j], &self.upper[j]), (Some(l), Some(u)) if u.clone() - l.clone() <= self.tol)
    }

    fn at_lower(&self, j: usize) -> bool {
        self.lower[j].as_ref().is_some_and(|l| (self.x[j].clone() - l.clone()).abs() <= self.tol)
    }

    fn at_upper(&self, j: usize) -> bool {
        self.upper[j].as_ref().is_some_and(|u| (self.x[j].clone() - u.clone()).abs() <= self.tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{ratio, rational_from_i64};
    use crate::Rational;
    use proptest::prelude::*;

    fn q(v: i64) -> Rational {
        rational_from_i64(v)
    }

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18
        let mut lp = LinearProgram::new(vec![q(-3), q(-5)], vec![Some(q(0)), Some(q(0))], vec![None, None]);
        lp.add_row(vec![(0, q(1))], Sense::Le, q(4));
        lp.add_row(vec![(1, q(2))], Sense::Le, q(12));
        lp.add_row(vec![(0, q(3)), (1, q(2))], Sense::Le, q(18));
        let s = lp.solve().unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.value, q(-36));
        assert_eq!(s.x, vec![q(2), q(6)]);
    }

    #[test]
    fn equality_and_ge_rows_need_phase_one() {
        // min x + y, x + y >= 2, x - y = 1, 0 <= x,y <= 5
        let mut lp = LinearProgram::<f64>::new(vec![1.0, 1.0], vec![Some(0.0); 2], vec![Some(5.0); 2]);
        lp.add_row(vec![(0, 1.0), (1, 1.0)], Sense::Ge, 2.0);
        lp.add_row(vec![(0, 1.0), (1, -1.0)], Sense::Eq, 1.0);
        let s = lp.solve().unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.value - 2.0).abs() < 1e-9);
        assert!((s.x[0] - 1.5).abs() < 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(vec![q(1)], vec![Some(q(0))], vec![Some(q(1))]);
        lp.add_row(vec![(0, q(1))], Sense::Ge, q(2));
        assert_eq!(lp.solve().unwrap().status, LpStatus::Infeasible);
        let lp = LinearProgram::new(vec![q(-1)], vec![Some(q(0))], vec![None]);
        assert_eq!(lp.solve().unwrap().status, LpStatus::Unbounded);
        let lp = LinearProgram::new(vec![q(1)], vec![Some(q(1))], vec![Some(q(0))]);
        assert_eq!(lp.solve().unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn bound_flips_and_negative_bounds() {
        // min -x - y over the box [-2, 3]^2 with x + y <= 4
        let mut lp = LinearProgram::new(vec![q(-1), q(-1)], vec![Some(q(-2)); 2], vec![Some(q(3)); 2]);
        lp.add_row(vec![(0, q(1)), (1, q(1))], Sense::Le, q(4));
        let s = lp.solve().unwrap();
        assert_eq!(s.value, q(-4));
        // upper-bounded only variable
        let lp = LinearProgram::new(vec![q(1)], vec![None], vec![Some(q(-3))]);
        assert_eq!(lp.solve().unwrap().status, LpStatus::Unbounded);
        let lp = LinearProgram::new(vec![q(-1)], vec![None], vec![Some(ratio(-7, 2))]);
        assert_eq!(lp.solve().unwrap().value, ratio(7, 2));
    }

    #[test]
    fn free_variables_are_rejected() {
        let lp = LinearProgram::new(vec![q(1)], vec![None], vec![None]);
        assert!(lp.solve().is_err());
    }

    /// Optimum of a bounded 2-variable LP by enumerating every intersection
    /// of two constraint lines (rows and box sides).
    fn vertex_oracle(lp: &LinearProgram<Rational>) -> Option<Rational> {
        let mut lines: Vec<([Rational; 2], Rational)> = Vec::new();
        for row in &lp.rows {
            let mut a = [q(0), q(0)];
            for (j, c) in &row.coeffs {
                a[*j] += c;
            }
            lines.push((a, row.rhs.clone()));
        }
        for j in 0..2 {
            let mut a = [q(0), q(0)];
            a[j] = q(1);
            lines.push((a.clone(), lp.lower[j].clone().unwrap()));
            lines.push((a, lp.upper[j].clone().unwrap()));
        }
        let feasible = |x: &[Rational; 2]| {
            (0..2).all(|j| x[j] >= *lp.lower[j].as_ref().unwrap() && x[j] <= *lp.upper[j].as_ref().unwrap())
                && lp.rows.iter().all(|row| {
                    let lhs: Rational = row.coeffs.iter().map(|(j, c)| c * &x[*j]).sum();
                    match row.sense {
                        Sense::Le => lhs <= row.rhs,
                        Sense::Ge => lhs >= row.rhs,
                        Sense::Eq => lhs == row.rhs,
                    }
                })
        };
        let mut best: Option<Rational> = None;
        for a in 0..lines.len() {
            for b in a + 1..lines.len() {
                let ([a1, a2], r1) = &lines[a];
                let ([b1, b2], r2) = &lines[b];
                let det = a1 * b2 - a2 * b1;
                if det == q(0) {
                    continue;
                }
                let x = [(r1 * b2 - a2 * r2) / &det, (a1 * r2 - r1 * b1) / &det];
                if feasible(&x) {
                    let v = &lp.objective[0] * &x[0] + &lp.objective[1] * &x[1];
                    if best.as_ref().map_or(true, |b| v < *b) {
                        best = Some(v);
                    }
                }
            }
        }
        best
    }

    fn random_lp() -> impl Strategy<Value = LinearProgram<Rational>> {
        (
            prop::collection::vec(-5i64..6, 2),
            prop::collection::vec((prop::collection::vec(-4i64..5, 2), 0usize..3, -6i64..7), 0..5),
            prop::collection::vec((-4i64..1, 0i64..5), 2),
        )
            .prop_map(|(c, rows, bounds)| {
                let mut lp = LinearProgram::new(
                    c.into_iter().map(q).collect(),
                    bounds.iter().map(|(l, _)| Some(q(*l))).collect(),
                    bounds.iter().map(|(_, u)| Some(q(*u))).collect(),
                );
                for (a, s, r) in rows {
                    let sense = [Sense::Le, Sense::Ge, Sense::Eq][s];
                    lp.add_row(vec![(0, q(a[0])), (1, q(a[1]))], sense, q(r));
                }
                lp
            })
    }

    proptest! {
        #[test]
        fn matches_vertex_enumeration(lp in random_lp()) {
            let oracle = vertex_oracle(&lp);
            let exact = lp.solve().unwrap();
            match &oracle {
                None => prop_assert_eq!(exact.status, LpStatus::Infeasible),
                Some(v) => {
                    prop_assert_eq!(exact.status, LpStatus::Optimal);
                    prop_assert_eq!(&exact.value, v);
                }
            }
            let float = LinearProgram {
                objective: lp.objective.iter().map(crate::scalar::rational_to_f64).collect(),
                lower: lp.lower.iter().map(|b| b.as_ref().map(crate::scalar::rational_to_f64)).collect(),
                upper: lp.upper.iter().map(|b| b.as_ref().map(crate::scalar::rational_to_f64)).collect(),
                rows: lp.rows.iter().map(|r| LpRow {
                    coeffs: r.coeffs.iter().map(|(j, c)| (*j, crate::scalar::rational_to_f64(c))).collect(),
                    sense: r.sense,
                    rhs: crate::scalar::rational_to_f64(&r.rhs),
                }).collect(),
            };
            let fs = float.solve().unwrap();
            if let Some(v) = oracle {
                prop_assert_eq!(fs.status, LpStatus::Optimal);
                prop_assert!((fs.value - crate::scalar::rational_to_f64(&v)).abs() < 1e-7);
            }
        }
    }
}
