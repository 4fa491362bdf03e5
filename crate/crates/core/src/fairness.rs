//! Group-fairness gaps written in terms of the loss indicators ψ.
//!
//! Every gap is a function of ψ and the group partition only, the same
//! expressions the fairness rows of the MIP encode. Rates are computed in
//! the caller's scalar type; use [`Rational`](crate::Rational) for exact values.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dataset, Grouping};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FairnessNotion {
    /// Statistical parity: equal predicted-positive rates.
    Sp,
    /// Equality of opportunity: equal false-negative rates.
    Eo,
    /// Equal overall misclassification rate.
    Omr,
    /// Predictive equality: equal false-positive rates.
    Pe,
    /// Equalized odds: EO and PE together.
    Eodds,
}

impl FairnessNotion {
    pub const ALL: [FairnessNotion; 5] = [Self::Sp, Self::Eo, Self::Omr, Self::Pe, Self::Eodds];

    /// The single-gap notions whose rows make up this notion.
    pub fn components(self) -> &'static [FairnessNotion] {
        match self {
            Self::Eodds => &[Self::Eo, Self::Pe],
            Self::Sp => &[Self::Sp],
            Self::Eo => &[Self::Eo],
            Self::Omr => &[Self::Omr],
            Self::Pe => &[Self::Pe],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Sp => "sp",
            Self::Eo => "eo",
            Self::Omr => "omr",
            Self::Pe => "pe",
            Self::Eodds => "eodds",
        }
    }
}

impl fmt::Display for FairnessNotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FairnessNotion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sp" => Ok(Self::Sp),
            "eo" => Ok(Self::Eo),
            "omr" => Ok(Self::Omr),
            "pe" => Ok(Self::Pe),
            "eodds" => Ok(Self::Eodds),
            other => Err(Error::InvalidParameter(format!("unknown fairness notion {other:?}"))),
        }
    }
}

/// Member lists and counts per group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupIndex {
    pub members: Vec<Vec<usize>>,
    pub positives: Vec<Vec<usize>>,
    pub negatives: Vec<Vec<usize>>,
    pub n_pos: usize,
    pub n_neg: usize,
}

impl GroupIndex {
    pub fn num_groups(&self) -> usize {
        self.members.len()
    }

    pub fn n(&self) -> usize {
        self.n_pos + self.n_neg
    }

    pub fn size(&self, p: usize) -> usize {
        self.members[p].len()
    }

    pub fn size_pos(&self, p: usize) -> usize {
        self.positives[p].len()
    }

    pub fn size_neg(&self, p: usize) -> usize {
        self.negatives[p].len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.members.iter().map(Vec::len).collect()
    }

    pub fn sizes_pos(&self) -> Vec<usize> {
        self.positives.iter().map(Vec::len).collect()
    }

    pub fn sizes_neg(&self) -> Vec<usize> {
        self.negatives.iter().map(Vec::len).collect()
    }

    /// Unordered pairs `(p, q)` with `p < q`.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let c = self.num_groups();
        (0..c).flat_map(|p| (p + 1..c).map(move |q| (p, q))).collect()
    }

    /// Checks that the notion is defined on every group.
    pub fn check_notion(&self, notion: FairnessNotion) -> Result<()> {
        for &part in notion.components() {
            for p in 0..self.num_groups() {
                match part {
                    FairnessNotion::Eo if self.size_pos(p) == 0 => {
                        return Err(Error::UndefinedMetric {
                            metric: "EO",
                            group: p,
                            missing: "positive",
                        })
                    }
                    FairnessNotion::Pe if self.size_neg(p) == 0 => {
                        return Err(Error::UndefinedMetric {
                            metric: "PE",
                            group: p,
                            missing: "negative",
                        })
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }
}

/// Index of the dataset's primary grouping.
pub fn group_index(dataset: &Dataset) -> GroupIndex {
    group_index_for(&dataset.groupings()[0], dataset.labels())
}

pub fn group_index_for(grouping: &Grouping, labels: &[i8]) -> GroupIndex {
    let c = grouping.num_groups();
    let mut idx = GroupIndex {
        members: vec![Vec::new(); c],
        positives: vec![Vec::new(); c],
        negatives: vec![Vec::new(); c],
        n_pos: 0,
        n_neg: 0,
    };
    for (i, (&g, &y)) in grouping.ids.iter().zip(labels).enumerate() {
        idx.members[g].push(i);
        if y > 0 {
            idx.positives[g].push(i);
            idx.n_pos += 1;
        } else {
            idx.negatives[g].push(i);
            idx.n_neg += 1;
        }
    }
    idx
}

fn count(psi: &[bool], ids: &[usize]) -> usize {
    ids.iter().filter(|&&i| psi[i]).count()
}

fn check_len(psi: &[bool], idx: &GroupIndex) -> Result<()> {
    if psi.len() != idx.n() {
        return Err(Error::DimensionMismatch {
            expected: idx.n(),
            got: psi.len(),
        });
    }
    Ok(())
}

/// Predicted-positive rate of group `p` under the ψ convention: positives
/// not in error plus negatives in error.
pub fn positive_rate<T: Scalar>(psi: &[bool], idx: &GroupIndex, p: usize) -> T {
    let accepted = idx.size_pos(p) - count(psi, &idx.positives[p]) + count(psi, &idx.negatives[p]);
    T::from_ratio(accepted, idx.size(p))
}

/// Signed statistical-parity gap between `p` and `q`.
pub fn gap_sp_signed<T: Scalar>(psi: &[bool], idx: &GroupIndex, p: usize, q: usize) -> Result<T> {
    check_len(psi, idx)?;
    Ok(positive_rate::<T>(psi, idx, p) - positive_rate::<T>(psi, idx, q))
}

pub fn gap_sp<T: Scalar>(psi: &[bool], idx: &GroupIndex, p: usize, q: usize) -> Result<T> {
    Ok(gap_sp_signed::<T>(psi, idx, p, q)?.abs())
}

/// Statistical-parity gap from hard predictions instead of ψ.
pub fn gap_sp_predictions<T: Scalar>(predictions: &[i8], idx: &GroupIndex, p: usize, q: usize) -> Result<T> {
    if predictions.len() != idx.n() {
        return Err(Error::DimensionMismatch {
            expected: idx.n(),
            got: predictions.len(),
        });
    }
    let rate = |g: usize| {
        let k = idx.members[g].iter().filter(|&&i| predictions[i] > 0).count();
        T::from_ratio(k, idx.size(g))
    };
    Ok((rate(p) - rate(q)).abs())
}

pub fn gap_omr<T: Scalar>(psi: &[bool], idx: &GroupIndex, p: usize, q: usize) -> Result<T> {
    check_len(psi, idx)?;
    let rate = |g: usize| T::from_ratio(count(psi, &idx.members[g]), idx.size(g));
    Ok((rate(p) - rate(q)).abs())
}

/// False-negative-rate gap.
pub fn gap_eo<T: Scalar>(psi: &[bool], idx: &GroupIndex, p: usize, q: usize) -> Result<T> {
    check_len(psi, idx)?;
    for g in [p, q] {
        if idx.size_pos(g) == 0 {
            return Err(Error::UndefinedMetric {
                metric: "EO",
                group: g,
                missing: "positive",
            });
        }
    }
    let rate = |g: usize| T::from_ratio(count(psi, &idx.positives[g]), idx.size_pos(g));
    Ok((rate(p) - rate(q)).abs())
}

/// False-positive-rate gap.
pub fn gap_pe<T: Scalar>(psi: &[bool], idx: &GroupIndex, p: usize, q: usize) -> Result<T> {
    check_len(psi, idx)?;
    for g in [p, q] {
        if idx.size_neg(g) == 0 {
            return Err(Error::UndefinedMetric {
                metric: "PE",
                group: g,
                missing: "negative",
            });
        }
    }
    let rate = |g: usize| T::from_ratio(count(psi, &idx.negatives[g]), idx.size_neg(g));
    Ok((rate(p) - rate(q)).abs())
}

pub fn gap<T: Scalar>(notion: FairnessNotion, psi: &[bool], idx: &GroupIndex, p: usize, q: usize) -> Result<T> {
    match notion {
        FairnessNotion::Sp => gap_sp(psi, idx, p, q),
        FairnessNotion::Eo => gap_eo(psi, idx, p, q),
        FairnessNotion::Omr => gap_omr(psi, idx, p, q),
        FairnessNotion::Pe => gap_pe(psi, idx, p, q),
        FairnessNotion::Eodds => Ok(gap_eo::<T>(psi, idx, p, q)?.max_of(gap_pe(psi, idx, p, q)?)),
    }
}

/// Largest pairwise gap over all unordered group pairs.
pub fn fairness_level<T: Scalar>(notion: FairnessNotion, psi: &[bool], idx: &GroupIndex) -> Result<T> {
    check_len(psi, idx)?;
    idx.check_notion(notion)?;
    let mut level = T::zero();
    for (p, q) in idx.pairs() {
        level = level.max_of(gap(notion, psi, idx, p, q)?);
    }
    Ok(level)
}

/// Level over several groupings (one constraint set per sensitive attribute).
pub fn fairness_level_all<T: Scalar>(notion: FairnessNotion, psi: &[bool], indices: &[GroupIndex]) -> Result<T> {
    let mut level = T::zero();
    for idx in indices {
        level = level.max_of(fairness_level(notion, psi, idx)?);
    }
    Ok(level)
}

pub fn group_indices(dataset: &Dataset) -> Vec<GroupIndex> {
    dataset
        .groupings()
        .iter()
        .map(|g| group_index_for(g, dataset.labels()))
        .collect()
}
