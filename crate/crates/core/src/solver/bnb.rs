//! Branch-and-bound driver.
//!
//! Nodes store only their branching decisions; bounds are rebuilt from the
//! root box and re-propagated when a node is processed. Search is
//! depth-first until the first incumbent, then best-first on the parent
//! bound. With several threads the node pool sits behind a mutex and the
//! incumbent only ever improves.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::{Condvar, Mutex};
use std::time::Instant;

use log::{debug, info};

use super::certify::complete;
use super::compiled::{Compiled, Row};
use super::relax::{node_relaxation, NodeBound};
use super::{Solution, SolveStatus, SolverConfig};
use crate::error::Result;
use crate::mip::MipModel;
use crate::scalar::rational_to_f64;
use crate::Rational;

const INT_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
struct Node {
    bound: f64,
    depth: u32,
    key: u64,
    changes: Vec<(u32, f64, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    /// Max-heap order: the "greatest" node is the one to explore next.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.key.cmp(&self.key))
    }
}

fn mix(seed: u64, id: u64) -> u64 {
    // splitmix64
    let mut z = seed ^ id.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

enum Pool {
    Depth(Vec<Node>),
    Best(BinaryHeap<Node>),
}

impl Pool {
    fn pop(&mut self) -> Option<Node> {
        match self {
            Pool::Depth(v) => v.pop(),
            Pool::Best(h) => h.pop(),
        }
    }

    fn push(&mut self, node: Node) {
        match self {
            Pool::Depth(v) => v.push(node),
            Pool::Best(h) => h.push(node),
        }
    }

    fn is_empty(&self) -> bool {
        match self {
            Pool::Depth(v) => v.is_empty(),
            Pool::Best(h) => h.is_empty(),
        }
    }

    fn min_bound(&self) -> f64 {
        let it: Box<dyn Iterator<Item = &Node>> = match self {
            Pool::Depth(v) => Box::new(v.iter()),
            Pool::Best(h) => Box::new(h.iter()),
        };
        it.map(|n| n.bound).fold(f64::INFINITY, f64::min)
    }

    fn switch_to_best_first(&mut self) {
        if let Pool::Depth(v) = self {
            let nodes = std::mem::take(v);
            *self = Pool::Best(nodes.into_iter().collect());
        }
    }
}

struct Incumbent {
    value: Rational,
    value_f: f64,
    x: Vec<Rational>,
}

struct State {
    pool: Pool,
    active: usize,
    incumbent: Option<Incumbent>,
    nodes: u64,
    next_key: u64,
    stop: Option<SolveStatus>,
    /// Smallest bound among nodes pruned by the relative gap only.
    gap_pruned: f64,
}

struct Search<'a> {
    model: &'a MipModel,
    c: Compiled,
    config: &'a SolverConfig,
    root_lo: Vec<f64>,
    root_hi: Vec<f64>,
    cost_row: Row,
    offset: f64,
    start: Instant,
}

enum Outcome {
    Pruned,
    GapPruned(f64),
    Branch(Vec<Node>),
}

pub(crate) fn branch_and_bound(model: &MipModel, config: &SolverConfig) -> Result<Solution> {
    let start = Instant::now();
    let c = Compiled::new(model);
    let mut lo = c.lower.clone();
    let mut hi = c.upper.clone();
    let cost_row = Row {
        idx: (0..c.num_vars()).filter(|&j| c.cost[j] != 0.0).collect(),
        val: c.cost.iter().copied().filter(|v| *v != 0.0).collect(),
        rhs: f64::INFINITY,
    };
    if !propagate(&c, &mut lo, &mut hi, None) {
        info!("root propagation proves infeasibility");
        return Ok(Solution::empty(SolveStatus::Infeasible, f64::INFINITY, 0, start.elapsed()));
    }
    let search = Search {
        model,
        c,
        config,
        root_lo: lo,
        root_hi: hi,
        cost_row,
        offset: rational_to_f64(&model.objective_constant),
        start,
    };
    let mut state = State {
        pool: Pool::Depth(Vec::new()),
        active: 0,
        incumbent: None,
        nodes: 0,
        next_key: 1,
        stop: None,
        gap_pruned: f64::INFINITY,
    };
    // starting point: all coefficients zero
    let zero_guide = vec![0.0; search.c.num_vars()];
    if let Some(x) = search.fix_and_propagate(search.root_lo.clone(), search.root_hi.clone(), &zero_guide) {
        search.offer(&mut state, x);
    }
    state.pool.push(Node {
        bound: f64::NEG_INFINITY,
        depth: 0,
        key: mix(config.seed, 0),
        changes: Vec::new(),
    });
    if state.incumbent.is_some() {
        state.pool.switch_to_best_first();
    }
    let shared = (Mutex::new(state), Condvar::new());
    if config.threads <= 1 {
        search.worker(&shared);
    } else {
        std::thread::scope(|s| {
            for _ in 0..config.threads {
                s.spawn(|| search.worker(&shared));
            }
        });
    }
    let state = shared.0.into_inner().expect("no worker panicked");
    Ok(search.finish(state))
}

impl Search<'_> {
    fn worker(&self, shared: &(Mutex<State>, Condvar)) {
        let (lock, cv) = shared;
        loop {
            let (node, incumbent) = {
                let mut st = lock.lock().expect("state lock");
                loop {
                    if st.stop.is_some() {
                        cv.notify_all();
                        return;
                    }
                    if !st.pool.is_empty() {
                        break;
                    }
                    if st.active == 0 {
                        cv.notify_all();
                        return;
                    }
                    st = cv.wait(st).expect("state lock");
                }
                if let Some(limit) = self.config.node_limit {
                    if st.nodes >= limit {
                        st.stop = Some(SolveStatus::NodeLimit);
                        continue;
                    }
                }
                if let Some(t) = self.config.time_limit_seconds {
                    if self.start.elapsed().as_secs_f64() > t {
                        st.stop = Some(SolveStatus::TimeLimit);
                        continue;
                    }
                }
                let node = st.pool.pop().expect("non-empty pool");
                st.active += 1;
                st.nodes += 1;
                if st.nodes % 1000 == 0 {
                    debug!(
                        "nodes {} open {} incumbent {:?} bound {}",
                        st.nodes,
                        st.active,
                        st.incumbent.as_ref().map(|i| i.value_f),
                        node.bound
                    );
                }
                let inc = st.incumbent.as_ref().map(|i| i.value_f);
                (node, inc)
            };
            let mut found = Vec::new();
            let outcome = self.process(&node, incumbent, &mut found, node.key);
            let mut st = lock.lock().expect("state lock");
            let had = st.incumbent.is_some();
            for x in found {
                self.offer(&mut st, x);
            }
            if !had && st.incumbent.is_some() {
                st.pool.switch_to_best_first();
            }
            match outcome {
                Outcome::Pruned => {}
                Outcome::GapPruned(b) => st.gap_pruned = st.gap_pruned.min(b),
                Outcome::Branch(children) => {
                    let cut = st.incumbent.as_ref().map(|i| self.abs_cut(i.value_f));
                    for mut child in children {
                        if cut.is_some_and(|cut| child.bound >= cut) {
                            continue;
                        }
                        child.key = mix(self.config.seed, st.next_key);
                        st.next_key += 1;
                        st.pool.push(child);
                    }
                }
            }
            st.active -= 1;
            cv.notify_all();
        }
    }

    fn abs_cut(&self, inc: f64) -> f64 {
        inc - self.config.absolute_gap
    }

    fn gap_cut(&self, inc: f64) -> f64 {
        inc - self.config.absolute_gap.max(self.config.relative_gap * inc.abs())
    }

    /// Verifies a candidate exactly and installs it if it improves the incumbent.
    fn offer(&self, st: &mut State, x: Vec<Rational>) {
        let value = self.model.objective_value(&x);
        if st.incumbent.as_ref().is_some_and(|i| i.value <= value) {
            return;
        }
        let value_f = rational_to_f64(&value);
        debug!("new incumbent {value_f} after {} nodes", st.nodes);
        st.incumbent = Some(Incumbent { value, value_f, x });
    }

    fn node_box(&self, node: &Node) -> (Vec<f64>, Vec<f64>) {
        let mut lo = self.root_lo.clone();
        let mut hi = self.root_hi.clone();
        for &(j, l, u) in &node.changes {
            let j = j as usize;
            lo[j] = lo[j].max(l);
            hi[j] = hi[j].min(u);
        }
        (lo, hi)
    }

    fn process(&self, node: &Node, incumbent: Option<f64>, found: &mut Vec<Vec<Rational>>, key: u64) -> Outcome {
        let (mut lo, mut hi) = self.node_box(node);
        if (0..lo.len()).any(|j| lo[j] > hi[j]) {
            return Outcome::Pruned;
        }
        let cutoff = incumbent.map(|inc| {
            let mut r = self.cost_row.clone();
            r.rhs = self.abs_cut(inc) - self.offset;
            r
        });
        if !propagate(&self.c, &mut lo, &mut hi, cutoff.as_ref()) {
            return Outcome::Pruned;
        }
        let (bound, x) = match node_relaxation(&self.c, &lo, &hi, true) {
            NodeBound::Infeasible => return Outcome::Pruned,
            NodeBound::Bound { value, x } => ((value + self.offset).max(node.bound), x),
        };
        if let Some(inc) = incumbent {
            if bound >= self.abs_cut(inc) {
                return Outcome::Pruned;
            }
            if bound >= self.gap_cut(inc) {
                return Outcome::GapPruned(bound);
            }
        }
        let Some(x) = x else {
            return self.split_widest(node, &lo, &hi, bound);
        };
        let fractional = self.pick_fractional(&x, &lo, &hi);
        if fractional.is_none() {
            if let Some(sol) = complete(self.model, &x) {
                found.push(sol);
                return Outcome::Pruned;
            }
            // an integral LP point that fails exact verification: keep splitting the box
            return self.split_widest(node, &lo, &hi, bound);
        }
        if incumbent.is_none() || key % 8 == 0 {
            if let Some(sol) = self.fix_and_propagate(lo.clone(), hi.clone(), &x) {
                found.push(sol);
            }
        }
        let j = fractional.expect("fractional variable");
        let v = x[j];
        let (down, up) = (v.floor(), v.ceil());
        let mk = |l: f64, u: f64| {
            let mut changes = node.changes.clone();
            changes.push((j as u32, l, u));
            Node {
                bound,
                depth: node.depth + 1,
                key: 0,
                changes,
            }
        };
        let down_child = mk(f64::NEG_INFINITY, down);
        let up_child = mk(up, f64::INFINITY);
        // the last child pushed is explored first in depth-first mode
        if v - down < up - v {
            Outcome::Branch(vec![up_child, down_child])
        } else {
            Outcome::Branch(vec![down_child, up_child])
        }
    }

    /// Highest-priority role, then most fractional, then lowest index.
    fn pick_fractional(&self, x: &[f64], lo: &[f64], hi: &[f64]) -> Option<usize> {
        let mut best: Option<(u8, f64, usize)> = None;
        for j in 0..x.len() {
            if !self.c.integer[j] || hi[j] - lo[j] < 0.5 {
                continue;
            }
            let frac = (x[j] - x[j].floor()).min(x[j].ceil() - x[j]);
            if frac <= INT_TOL {
                continue;
            }
            let pr = self.c.roles[j].priority();
            let better = match best {
                None => true,
                Some((bp, bf, _)) => pr < bp || (pr == bp && frac > bf + 1e-12),
            };
            if better {
                best = Some((pr, frac, j));
            }
        }
        best.map(|(_, _, j)| j)
    }

    /// Branches on the unfixed integer variable of highest priority at the
    /// middle of its range; used when no LP point is available.
    fn split_widest(&self, node: &Node, lo: &[f64], hi: &[f64], bound: f64) -> Outcome {
        let pick = (0..lo.len())
            .filter(|&j| self.c.integer[j] && hi[j] - lo[j] >= 0.5)
            .min_by_key(|&j| (self.c.roles[j].priority(), j));
        let Some(j) = pick else {
            return Outcome::Pruned;
        };
        let mid = ((lo[j] + hi[j]) / 2.0).floor();
        let mk = |l: f64, u: f64| {
            let mut changes = node.changes.clone();
            changes.push((j as u32, l, u));
            Node {
                bound,
                depth: node.depth + 1,
                key: 0,
                changes,
            }
        };
        Outcome::Branch(vec![mk(mid + 1.0, f64::INFINITY), mk(f64::NEG_INFINITY, mid)])
    }

    /// Rounds integer variables one at a time in priority order, following
    /// `guide`, and propagates after each fix.
    fn fix_and_propagate(&self, mut lo: Vec<f64>, mut hi: Vec<f64>, guide: &[f64]) -> Option<Vec<Rational>> {
        let mut order: Vec<usize> = (0..lo.len()).filter(|&j| self.c.integer[j]).collect();
        order.sort_by_key(|&j| (self.c.roles[j].priority(), j));
        for j in order {
            if hi[j] - lo[j] < 0.5 {
                continue;
            }
            let target = guide[j].round().clamp(lo[j], hi[j]);
            let mut candidates = vec![target];
            for step in 1..=2 {
                for v in [target - step as f64, target + step as f64] {
                    if v >= lo[j] && v <= hi[j] {
                        candidates.push(v);
                    }
                }
            }
            let mut fixed = false;
            for v in candidates {
                let (mut l2, mut h2) = (lo.clone(), hi.clone());
                l2[j] = v;
                h2[j] = v;
                if propagate(&self.c, &mut l2, &mut h2, None) {
                    lo = l2;
                    hi = h2;
                    fixed = true;
                    break;
                }
            }
            if !fixed {
                return None;
            }
        }
        complete(self.model, &lo)
    }

    fn finish(&self, st: State) -> Solution {
        let wall = self.start.elapsed();
        let open = st.pool.min_bound();
        match st.incumbent {
            None => {
                let status = st.stop.unwrap_or(SolveStatus::Infeasible);
                let bound = if status == SolveStatus::Infeasible { f64::INFINITY } else { open.min(st.gap_pruned) };
                info!("search ended without a feasible point: {status}");
                Solution::empty(status, bound, st.nodes, wall)
            }
            Some(inc) => {
                let best_bound = inc.value_f.min(open).min(st.gap_pruned);
                let status = match st.stop {
                    Some(s) => s,
                    None if st.gap_pruned < self.abs_cut(inc.value_f) => SolveStatus::FeasibleGap,
                    None => SolveStatus::Optimal,
                };
                info!("{status}: objective {} bound {best_bound} nodes {}", inc.value_f, st.nodes);
                Solution::from_assignment(self.model, inc.x, status, best_bound, st.nodes, wall)
            }
        }
    }
}

/// Activity-based bound tightening on `a·x <= b` rows; returns `false` when
/// the box is proven empty.
pub(crate) fn propagate(c: &Compiled, lo: &mut [f64], hi: &mut [f64], extra: Option<&Row>) -> bool {
    let nrows = c.rows.len() + extra.is_some() as usize;
    let row_at = |r: usize| -> &Row {
        if r < c.rows.len() {
            &c.rows[r]
        } else {
            extra.expect("extra row")
        }
    };
    let mut queued = vec![true; nrows];
    let mut queue: std::collections::VecDeque<usize> = (0..nrows).collect();
    let mut budget = 20 * nrows + 100;
    while let Some(r) = queue.pop_front() {
        queued[r] = false;
        if budget == 0 {
            break;
        }
        budget -= 1;
        let row = row_at(r);
        if !row.rhs.is_finite() {
            continue;
        }
        let minact: f64 = row
            .idx
            .iter()
            .zip(&row.val)
            .map(|(&j, &a)| if a > 0.0 { a * lo[j] } else { a * hi[j] })
            .sum();
        let scale = 1.0 + row.rhs.abs();
        let slack = row.rhs - minact;
        if slack < -1e-7 * scale {
            return false;
        }
        for (&j, &a) in row.idx.iter().zip(&row.val) {
            if a.abs() < 1e-12 {
                continue;
            }
            let changed = if a > 0.0 {
                let mut nh = lo[j] + slack / a;
                if c.integer[j] {
                    nh = (nh + INT_TOL).floor();
                } else {
                    nh += 1e-9 * scale;
                }
                if nh < hi[j] - 1e-7 {
                    hi[j] = nh;
                    true
                } else {
                    false
                }
            } else {
                let mut nl = hi[j] + slack / a;
                if c.integer[j] {
                    nl = (nl - INT_TOL).ceil();
                } else {
                    nl -= 1e-9 * scale;
                }
                if nl > lo[j] + 1e-7 {
                    lo[j] = nl;
                    true
                } else {
                    false
                }
            };
            if changed {
                if lo[j] > hi[j] + 1e-9 {
                    return false;
                }
                if lo[j] > hi[j] {
                    hi[j] = lo[j];
                }
                for &r2 in &c.col_rows[j] {
                    if !queued[r2] {
                        queued[r2] = true;
                        queue.push_back(r2);
                    }
                }
                if extra.is_some() && !queued[nrows - 1] && c.cost[j] != 0.0 {
                    queued[nrows - 1] = true;
                    queue.push_back(nrows - 1);
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fairness::FairnessNotion;
    use crate::mip::{build, Problem, SolveMode};
    use crate::model::Dataset;
    use crate::scalar::ratio;
    use crate::solver::{brute_force, solve};
    use crate::welfare::WelfareParams;
    use proptest::prelude::*;

    fn small(rows: &[Vec<i64>], labels: Vec<i8>, groups: Vec<usize>) -> Problem {
        let n = labels.len();
        let ds = Dataset::from_integers(rows, labels, groups).unwrap();
        Problem::new(ds, WelfareParams::unit(n), FairnessNotion::Sp).with_uniform_omega(2)
    }

    #[test]
    fn separable_data_has_zero_loss() {
        let p = small(&[vec![1, 1], vec![1, 1], vec![1, -1], vec![1, -1]], vec![1, 1, -1, -1], vec![0, 1, 0, 1])
            .with_mode(SolveMode::AccuracyOnly);
        let sol = solve(&build(&p).unwrap(), &SolverConfig::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_eq!(sol.objective, Some(ratio(0, 1)));
        assert!(sol.psi_star.iter().all(|p| !p));
    }

    #[test]
    fn heavy_sparsity_penalty_gives_intercept_only() {
        let mut p = small(&[vec![1, 1], vec![1, 1], vec![1, -1], vec![1, -1]], vec![1, 1, -1, -1], vec![0, 1, 0, 1])
            .with_mode(SolveMode::AccuracyOnly);
        p.params = p.params.clone().with_penalties(ratio(2, 1), ratio(0, 1));
        let sol = solve(&build(&p).unwrap(), &SolverConfig::default()).unwrap();
        assert_eq!(sol.w_star[1], 0);
        assert_eq!(sol.objective, Some(ratio(1, 2)));
    }

    #[test]
    fn thread_count_does_not_change_the_optimum() {
        let p = small(
            &[vec![1, 1, 0], vec![1, 0, 1], vec![1, 1, 1], vec![1, 0, 0], vec![1, 1, 0], vec![1, 0, 1], vec![1, 1, 1]],
            vec![1, -1, 1, -1, -1, 1, -1],
            vec![0, 0, 0, 1, 1, 1, 1],
        );
        let mut p = p;
        p.params = p.params.clone().with_rho_bar(ratio(1, 3));
        let m = build(&p).unwrap();
        let a = solve(&m, &SolverConfig::default()).unwrap();
        let b = solve(&m, &SolverConfig { threads: 4, ..Default::default() }).unwrap();
        let again = solve(&m, &SolverConfig::default()).unwrap();
        assert_eq!(a.objective, b.objective);
        assert_eq!(a.w_star, again.w_star);
        assert_eq!(a.nodes_explored, again.nodes_explored);
    }

    #[test]
    fn node_limit_reports_status() {
        let p = small(
            &[vec![1, 1, 0], vec![1, 0, 1], vec![1, 1, 1], vec![1, 0, 0], vec![1, 1, 0], vec![1, 0, 1]],
            vec![1, -1, 1, -1, -1, 1],
            vec![0, 0, 0, 1, 1, 1],
        );
        let sol = solve(&build(&p).unwrap(), &SolverConfig { node_limit: Some(1), ..Default::default() }).unwrap();
        assert!(matches!(sol.status, SolveStatus::NodeLimit | SolveStatus::Optimal));
        if let Some(obj) = &sol.objective {
            assert!(sol.best_bound <= rational_to_f64(obj) + 1e-9);
        }
    }

    fn problem_strategy() -> impl Strategy<Value = (Problem, u8)> {
        (3usize..=7, 1usize..=2).prop_flat_map(|(n, d)| {
            (
                proptest::collection::vec(proptest::collection::vec(-1i64..=1, d), n),
                proptest::collection::vec(prop_oneof![Just(1i8), Just(-1i8)], n),
                0u8..5,
                0u8..4,
                0i64..=4,
            )
                .prop_map(move |(feats, mut labels, notion, mode, rho)| {
                    let mut groups: Vec<usize> = (0..n).map(|i| i % 2).collect();
                    groups.sort();
                    // every group needs both labels for the label-conditional notions
                    labels[0] = 1;
                    labels[1] = -1;
                    labels[n - 1] = 1;
                    labels[n - 2] = -1;
                    let rows: Vec<Vec<i64>> = feats.iter().map(|f| std::iter::once(1).chain(f.iter().copied()).collect()).collect();
                    let ds = Dataset::from_integers(&rows, labels, groups).unwrap();
                    let params = WelfareParams::unit(n)
                        .with_rho_bar(ratio(rho - 1, 4))
                        .with_penalties(ratio(1, 50), ratio(1, 200));
                    let notion = FairnessNotion::ALL[notion as usize];
                    let mode = match mode {
                        0 => SolveMode::AccuracyOnly,
                        1 => SolveMode::FixedDelta { delta: ratio(1, 3) },
                        _ => SolveMode::Joint,
                    };
                    (Problem::new(ds, params, notion).with_uniform_omega(2).with_mode(mode), 0)
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(120))]
        #[test]
        fn agrees_with_exhaustive_search((p, _) in problem_strategy()) {
            prop_assume!(p.validate().is_ok());
            let oracle = brute_force(&p).unwrap();
            let m = build(&p).unwrap();
            let cfg = SolverConfig { relative_gap: 0.0, ..Default::default() };
            let sol = solve(&m, &cfg).unwrap();
            prop_assert_eq!(sol.is_feasible(), oracle.is_feasible());
            prop_assert_eq!(&sol.objective, &oracle.objective);
            if let Some(obj) = &sol.objective {
                prop_assert!(m.violations(&sol.x).is_empty());
                prop_assert!(sol.best_bound <= rational_to_f64(obj) + 1e-9);
            }
        }
    }
}
