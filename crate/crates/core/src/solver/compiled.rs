//! Floating-point copy of a [`MipModel`] with every row written as `a·x <= b`.

use crate::mip::{MipModel, VarRole};
use crate::scalar::rational_to_f64;

#[derive(Debug, Clone)]
pub(crate) struct Row {
    pub idx: Vec<usize>,
    pub val: Vec<f64>,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Compiled {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub integer: Vec<bool>,
    pub roles: Vec<VarRole>,
    pub cost: Vec<f64>,
    pub rows: Vec<Row>,
    /// Rows containing each variable.
    pub col_rows: Vec<Vec<usize>>,
}

impl Compiled {
    pub fn new(model: &MipModel) -> Self {
        let n = model.num_vars();
        let mut rows = Vec::new();
        for c in &model.constraints {
            let idx: Vec<usize> = c.coeffs.iter().map(|(j, _)| *j).collect();
            let val: Vec<f64> = c.coeffs.iter().map(|(_, a)| rational_to_f64(a)).collect();
            let (lo, hi) = c.bounds();
            if let Some(h) = hi {
                rows.push(Row {
                    idx: idx.clone(),
                    val: val.clone(),
                    rhs: rational_to_f64(&h),
                });
            }
            if let Some(l) = lo {
                rows.push(Row {
                    idx,
                    val: val.iter().map(|v| -v).collect(),
                    rhs: -rational_to_f64(&l),
                });
            }
        }
        let mut col_rows = vec![Vec::new(); n];
        for (r, row) in rows.iter().enumerate() {
            for &j in &row.idx {
                col_rows[j].push(r);
            }
        }
        Self {
            lower: model.variables.iter().map(|v| rational_to_f64(&v.lower)).collect(),
            upper: model.variables.iter().map(|v| rational_to_f64(&v.upper)).collect(),
            integer: model.variables.iter().map(|v| v.integer).collect(),
            roles: model.variables.iter().map(|v| v.role).collect(),
            cost: model.objective.iter().map(rational_to_f64).collect(),
            rows,
            col_rows,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.lower.len()
    }

    /// Smallest objective over the box (the interval bound).
    pub fn interval_bound(&self, lo: &[f64], hi: &[f64]) -> f64 {
        self.cost
            .iter()
            .enumerate()
            .map(|(j, &c)| if c >= 0.0 { c * lo[j] } else { c * hi[j] })
            .sum()
    }
}
