//! Datasets, integer scoring systems and the 0-1 loss they induce.
//!
//! Scores are evaluated in exact rational arithmetic. The loss indicator
//! counts `y * score <= 0` as an error, so a score of exactly zero is a
//! mistake for both classes, while [`predict`] maps zero to `-1`.

use std::collections::BTreeSet;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairness::FairnessNotion;
use crate::scalar::{rational_from_i64, serde_rational, Scalar};
use crate::Rational;

/// One assignment of examples to groups (one sensitive attribute, or the
/// product of several when intersectional groups are requested).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grouping {
    pub name: String,
    pub ids: Vec<usize>,
    /// Human-readable value for each group id.
    pub labels: Vec<String>,
}

impl Grouping {
    pub fn new(name: impl Into<String>, ids: Vec<usize>, labels: Vec<String>) -> Self {
        Self {
            name: name.into(),
            ids,
            labels,
        }
    }

    /// Groups named `g0..g{c-1}`.
    pub fn anonymous(ids: Vec<usize>) -> Self {
        let c = ids.iter().copied().max().map_or(0, |m| m + 1);
        let labels = (0..c).map(|g| format!("g{g}")).collect();
        Self::new("group", ids, labels)
    }

    pub fn num_groups(&self) -> usize {
        self.labels.len()
    }
}

/// Binarized examples with an intercept column, ±1 labels and group ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<Vec<Rational>>,
    labels: Vec<i8>,
    groupings: Vec<Grouping>,
    feature_names: Vec<String>,
    sensitive_columns: BTreeSet<usize>,
}

impl Dataset {
    /// Builds a dataset with a single group assignment.
    pub fn new(
        features: Vec<Vec<Rational>>,
        labels: Vec<i8>,
        groups: Vec<usize>,
        feature_names: Vec<String>,
        sensitive_columns: BTreeSet<usize>,
    ) -> Result<Self> {
        Self::with_groupings(
            features,
            labels,
            vec![Grouping::anonymous(groups)],
            feature_names,
            sensitive_columns,
        )
    }

    pub fn with_groupings(
        features: Vec<Vec<Rational>>,
        labels: Vec<i8>,
        groupings: Vec<Grouping>,
        feature_names: Vec<String>,
        sensitive_columns: BTreeSet<usize>,
    ) -> Result<Self> {
        let n = features.len();
        let invalid = |m: String| Err(Error::InvalidDataset(m));
        if n == 0 {
            return invalid("dataset has no examples".into());
        }
        let width = feature_names.len();
        if width == 0 {
            return invalid("dataset has no columns".into());
        }
        for (i, row) in features.iter().enumerate() {
            if row.len() != width {
                return invalid(format!("row {i} has {} entries, expected {width}", row.len()));
            }
            if !row[0].is_one() {
                return invalid(format!("row {i}: intercept column must be 1"));
            }
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: labels.len(),
            });
        }
        if let Some(i) = labels.iter().position(|&y| y != 1 && y != -1) {
            return invalid(format!("label at row {i} is {}, expected -1 or +1", labels[i]));
        }
        if groupings.is_empty() {
            return invalid("at least one group assignment is required".into());
        }
        for g in &groupings {
            if g.ids.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: g.ids.len(),
                });
            }
            let c = g.num_groups();
            if c < 2 {
                return invalid(format!("grouping {:?} has {c} group(s); at least 2 are required", g.name));
            }
            let mut seen = vec![false; c];
            for (i, &id) in g.ids.iter().enumerate() {
                if id >= c {
                    return invalid(format!("row {i}: group id {id} out of range 0..{c}"));
                }
                seen[id] = true;
            }
            if let Some(missing) = seen.iter().position(|s| !s) {
                return invalid(format!("group {missing} of {:?} has no members", g.name));
            }
        }
        if let Some(&s) = sensitive_columns.iter().find(|&&s| s == 0 || s >= width) {
            return invalid(format!("sensitive column {s} is not a feature column"));
        }
        Ok(Self {
            features,
            labels,
            groupings,
            feature_names,
            sensitive_columns,
        })
    }

    /// Convenience constructor from small integer matrices (tests, fixtures).
    pub fn from_integers(rows: &[Vec<i64>], labels: Vec<i8>, groups: Vec<usize>) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        let features = rows
            .iter()
            .map(|r| r.iter().map(|&v| rational_from_i64(v)).collect())
            .collect();
        let names = default_feature_names(width);
        Self::new(features, labels, groups, names, BTreeSet::new())
    }

    pub fn n(&self) -> usize {
        self.features.len()
    }

    /// Number of non-intercept features.
    pub fn d(&self) -> usize {
        self.feature_names.len() - 1
    }

    pub fn width(&self) -> usize {
        self.feature_names.len()
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.features[i]
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.features
    }

    pub fn label(&self, i: usize) -> i8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    /// Group ids of the primary grouping.
    pub fn groups(&self) -> &[usize] {
        &self.groupings[0].ids
    }

    pub fn num_groups(&self) -> usize {
        self.groupings[0].num_groups()
    }

    pub fn groupings(&self) -> &[Grouping] {
        &self.groupings
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn sensitive_columns(&self) -> &BTreeSet<usize> {
        &self.sensitive_columns
    }

    /// Every non-intercept entry is 0 or 1.
    pub fn is_binary(&self) -> bool {
        self.features
            .iter()
            .all(|r| r[1..].iter().all(|v| v.is_zero() || v.is_one()))
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&y| y > 0).count()
    }

    /// Keeps the listed rows, in the given order.
    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        let groupings = self
            .groupings
            .iter()
            .map(|g| Grouping {
                name: g.name.clone(),
                ids: rows.iter().map(|&i| g.ids[i]).collect(),
                labels: g.labels.clone(),
            })
            .collect();
        Self::with_groupings(
            rows.iter().map(|&i| self.features[i].clone()).collect(),
            rows.iter().map(|&i| self.labels[i]).collect(),
            groupings,
            self.feature_names.clone(),
            self.sensitive_columns.clone(),
        )
    }

    /// Concatenation of `k` copies of the dataset.
    pub fn replicate(&self, k: usize) -> Result<Self> {
        let rows: Vec<usize> = (0..k).flat_map(|_| 0..self.n()).collect();
        self.subset(&rows)
    }
}

pub fn default_feature_names(width: usize) -> Vec<String> {
    (0..width)
        .map(|j| if j == 0 { "(intercept)".to_string() } else { format!("x{j}") })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SystemMetadata {
    pub notion: Option<FairnessNotion>,
    pub mode: Option<String>,
    #[serde(with = "serde_rational::option", default)]
    pub delta: Option<Rational>,
    #[serde(with = "serde_rational::option", default)]
    pub objective: Option<Rational>,
    pub status: Option<String>,
}

/// A linear classifier with small integer points per feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoringSystem {
    pub coefficients: Vec<i64>,
    pub omega: Vec<i64>,
    #[serde(with = "serde_rational")]
    pub gamma: Rational,
    pub feature_names: Vec<String>,
    #[serde(default)]
    pub metadata: SystemMetadata,
}

impl ScoringSystem {
    pub fn new(coefficients: Vec<i64>, omega: Vec<i64>, gamma: Rational, feature_names: Vec<String>) -> Result<Self> {
        let system = Self {
            coefficients,
            omega,
            gamma,
            feature_names,
            metadata: SystemMetadata::default(),
        };
        system.validate()?;
        Ok(system)
    }

    /// Unbounded-looking system for ad hoc evaluation: `Ω_j = max(|w_j|, 1)`, γ = 1/10.
    pub fn from_coefficients(coefficients: Vec<i64>) -> Self {
        let omega = coefficients.iter().map(|w| w.abs().max(1)).collect();
        let names = default_feature_names(coefficients.len());
        Self {
            coefficients,
            omega,
            gamma: crate::scalar::ratio(1, 10),
            feature_names: names,
            metadata: SystemMetadata::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.coefficients.len();
        for len in [self.omega.len(), self.feature_names.len()] {
            if len != k {
                return Err(Error::DimensionMismatch { expected: k, got: len });
            }
        }
        if !self.gamma.is_positive() {
            return Err(Error::InvalidParameter("gamma must be positive".into()));
        }
        for (j, (w, o)) in self.coefficients.iter().zip(&self.omega).enumerate() {
            if *o < 0 || w.abs() > *o {
                return Err(Error::InvalidParameter(format!("|w_{j}| = {} exceeds omega {o}", w.abs())));
            }
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.coefficients.len()
    }

    /// Non-zero non-intercept coefficients.
    pub fn model_size(&self) -> usize {
        self.coefficients[1..].iter().filter(|&&w| w != 0).count()
    }
}

/// `Σ_j w_j x_j`, exactly.
pub fn score(system: &ScoringSystem, x: &[Rational]) -> Result<Rational> {
    score_coefficients(&system.coefficients, x)
}

pub fn score_coefficients(w: &[i64], x: &[Rational]) -> Result<Rational> {
    if x.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            got: x.len(),
        });
    }
    let mut total = BigRational::zero();
    for (wj, xj) in w.iter().zip(x) {
        if *wj != 0 && !xj.is_zero() {
            total += rational_from_i64(*wj) * xj;
        }
    }
    Ok(total)
}

/// `+1` iff the score is strictly positive.
pub fn predict(system: &ScoringSystem, x: &[Rational]) -> Result<i8> {
    Ok(if score(system, x)?.is_positive() { 1 } else { -1 })
}

/// `ψ_i = 1` iff `y_i · score(x_i) <= 0`.
pub fn loss_vector(system: &ScoringSystem, dataset: &Dataset) -> Result<Vec<bool>> {
    loss_vector_for(&system.coefficients, dataset)
}

pub fn loss_vector_for(w: &[i64], dataset: &Dataset) -> Result<Vec<bool>> {
    if w.len() != dataset.width() {
        return Err(Error::DimensionMismatch {
            expected: dataset.width(),
            got: w.len(),
        });
    }
    (0..dataset.n())
        .map(|i| {
            let s = score_coefficients(w, dataset.row(i))?;
            Ok(if dataset.label(i) > 0 { !s.is_positive() } else { !s.is_negative() })
        })
        .collect()
}

/// `(1/n) Σ b_i ψ_i`.
pub fn weighted_error<T: Scalar>(psi: &[bool], b: &[T]) -> Result<T> {
    if psi.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: psi.len(),
            got: b.len(),
        });
    }
    if psi.is_empty() {
        return Err(Error::InvalidParameter("empty loss vector".into()));
    }
    let mut total = T::zero();
    for (i, (p, bi)) in psi.iter().zip(b).enumerate() {
        if bi.is_negative() {
            return Err(Error::NegativeWeight {
                index: i,
                value: bi.to_string(),
            });
        }
        if *p {
            total = total + bi.clone();
        }
    }
    Ok(total / T::from_usize(psi.len()).expect("n fits scalar"))
}

/// Fraction of examples with `y · score > 0`.
pub fn accuracy<T: Scalar>(psi: &[bool]) -> T {
    let correct = psi.iter().filter(|p| !**p).count();
    T::from_ratio(correct, psi.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;
    use proptest::prelude::*;

    fn q(v: i64) -> Rational {
        rational_from_i64(v)
    }

    #[test]
    fn score_examples() {
        let zero = ScoringSystem::from_coefficients(vec![0, 0, 0]);
        assert_eq!(score(&zero, &[q(1), q(1), q(0)]).unwrap(), q(0));
        let s = ScoringSystem::from_coefficients(vec![1, 2, -3]);
        assert_eq!(score(&s, &[q(1), q(1), q(1)]).unwrap(), q(0));
        let s = ScoringSystem::from_coefficients(vec![-2, 5]);
        assert_eq!(score(&s, &[q(1), q(0)]).unwrap(), q(-2));
        assert!(matches!(score(&s, &[q(1)]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn predict_ties_map_to_negative() {
        let s = ScoringSystem::from_coefficients(vec![3]);
        assert_eq!(predict(&s, &[q(1)]).unwrap(), 1);
        let s = ScoringSystem::from_coefficients(vec![-1]);
        assert_eq!(predict(&s, &[q(1)]).unwrap(), -1);
        let s = ScoringSystem::from_coefficients(vec![0]);
        assert_eq!(predict(&s, &[q(1)]).unwrap(), -1);
    }

    #[test]
    fn loss_vector_edge_cases() {
        let ds = Dataset::from_integers(&[vec![1, 1], vec![1, 0], vec![1, 1], vec![1, 0]], vec![1, -1, 1, -1], vec![0, 0, 1, 1])
            .unwrap();
        let perfect = ScoringSystem::from_coefficients(vec![-1, 2]);
        assert_eq!(loss_vector(&perfect, &ds).unwrap(), vec![false; 4]);
        let zero = ScoringSystem::from_coefficients(vec![0, 0]);
        assert_eq!(loss_vector(&zero, &ds).unwrap(), vec![true; 4]);
    }

    #[test]
    fn weighted_error_examples() {
        assert_eq!(weighted_error(&[false; 4], &[q(1), q(1), q(1), q(1)]).unwrap(), q(0));
        let psi = [true, true, true, false, false, false];
        assert_eq!(weighted_error(&psi, &vec![q(1); 6]).unwrap(), ratio(1, 2));
        // cost-sensitive 4:1 normalized to b_pos + b_neg = 2
        let b = [ratio(8, 5), ratio(8, 5), ratio(2, 5), ratio(2, 5)];
        let psi = [true, false, true, false];
        assert_eq!(weighted_error(&psi, &b).unwrap(), ratio(1, 2));
        assert!(matches!(
            weighted_error(&psi, &[q(1), q(-1), q(1), q(1)]),
            Err(Error::NegativeWeight { index: 1, .. })
        ));
    }

    #[test]
    fn dataset_invariants() {
        assert!(Dataset::from_integers(&[vec![1, 0], vec![1, 1]], vec![1, -1], vec![0, 0]).is_err());
        assert!(Dataset::from_integers(&[vec![0, 0], vec![1, 1]], vec![1, -1], vec![0, 1]).is_err());
        assert!(Dataset::from_integers(&[vec![1, 0], vec![1, 1]], vec![1, 0], vec![0, 1]).is_err());
        assert!(Dataset::from_integers(&[vec![1, 0], vec![1, 1]], vec![1, -1], vec![0, 2]).is_err());
        assert!(Dataset::from_integers(&[], vec![], vec![]).is_err());
    }

    fn random_instance() -> impl Strategy<Value = (Vec<Vec<i64>>, Vec<i8>, Vec<i64>)> {
        (1usize..5).prop_flat_map(|d| {
            (
                prop::collection::vec(prop::collection::vec(0i64..2, d), 20),
                prop::collection::vec(prop::bool::ANY, 20),
                prop::collection::vec(-3i64..4, d + 1),
            )
                .prop_map(|(rows, ys, w)| {
                    let rows = rows.into_iter().map(|r| std::iter::once(1).chain(r).collect()).collect();
                    let ys = ys.into_iter().map(|b| if b { 1 } else { -1 }).collect();
                    (rows, ys, w)
                })
        })
    }

    proptest! {
        #[test]
        fn loss_matches_per_example_recomputation((rows, ys, w) in random_instance()) {
            let groups = (0..rows.len()).map(|i| i % 2).collect();
            let ds = Dataset::from_integers(&rows, ys.clone(), groups).unwrap();
            let s = ScoringSystem::from_coefficients(w.clone());
            let psi = loss_vector(&s, &ds).unwrap();
            for (i, row) in rows.iter().enumerate() {
                let raw: i64 = row.iter().zip(&w).map(|(x, c)| x * c).sum();
                prop_assert_eq!(psi[i], ys[i] as i64 * raw <= 0);
                let yhat = predict(&s, ds.row(i)).unwrap();
                if yhat == 1 {
                    prop_assert_eq!(psi[i], ys[i] == -1);
                }
                if raw != 0 {
                    prop_assert_eq!(!psi[i], yhat == ys[i]);
                }
            }
            let ones = vec![q(1); psi.len()];
            prop_assert_eq!(weighted_error(&psi, &ones).unwrap(), q(1) - accuracy::<Rational>(&psi));
        }
    }
}
