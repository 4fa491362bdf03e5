//! The six-patient sepsis example and three hand-built scoring systems on it.
//!
//! Columns: intercept, fever, female, lactate, sofa. Group 0 is male, group 1
//! female; the `female` column is flagged as sensitive.

use std::collections::BTreeSet;

use crate::model::{Dataset, Grouping, ScoringSystem};
use crate::scalar::rational_from_i64;

pub fn six_patient_example() -> Dataset {
    let rows: [[i64; 5]; 6] = [
        [1, 1, 0, 0, 1], // M1, septic
        [1, 0, 0, 0, 1], // M2, septic
        [1, 1, 0, 0, 0], // M3
        [1, 1, 1, 0, 1], // F1, septic
        [1, 1, 1, 0, 1], // F2, septic
        [1, 1, 1, 1, 0], // F3
    ];
    let features = rows.iter().map(|r| r.iter().map(|&v| rational_from_i64(v)).collect()).collect();
    let names = ["(intercept)", "fever", "female", "lactate", "sofa"].map(String::from).to_vec();
    Dataset::with_groupings(
        features,
        vec![1, 1, -1, 1, 1, -1],
        vec![Grouping::new("sex", vec![0, 0, 0, 1, 1, 1], vec!["male".into(), "female".into()])],
        names,
        BTreeSet::from([2]),
    )
    .expect("fixture is valid")
}

fn system(w: [i64; 5]) -> ScoringSystem {
    let mut s = ScoringSystem::from_coefficients(w.to_vec());
    s.feature_names = six_patient_example().feature_names().to_vec();
    s
}

/// Classifies every patient correctly.
pub fn system_d1() -> ScoringSystem {
    system([-1, 0, 0, 0, 2])
}

/// Fever rule with a lactate penalty: misses M2 and flags M3.
pub fn system_d2() -> ScoringSystem {
    system([-1, 2, 0, -3, 0])
}

/// Fever alone: misses M2, flags M3 and F3.
pub fn system_d3() -> ScoringSystem {
    system([-1, 2, 0, 0, 0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fairness::{fairness_level, group_index, FairnessNotion};
    use crate::model::loss_vector;
    use crate::scalar::ratio;
    use crate::Rational;

    #[test]
    fn gaps_match_the_story() {
        let ds = six_patient_example();
        let idx = group_index(&ds);
        let level = |s: &ScoringSystem, n| fairness_level::<Rational>(n, &loss_vector(s, &ds).unwrap(), &idx).unwrap();
        assert_eq!(level(&system_d3(), FairnessNotion::Sp), ratio(1, 3));
        assert_eq!(level(&system_d3(), FairnessNotion::Omr), ratio(1, 3));
        assert_eq!(level(&system_d3(), FairnessNotion::Eo), ratio(1, 2));
        assert_eq!(level(&system_d2(), FairnessNotion::Eo), ratio(1, 2));
        assert!(loss_vector(&system_d1(), &ds).unwrap().iter().all(|p| !p));
    }
}
