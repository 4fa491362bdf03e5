//! Social welfare and the penalized empirical-risk objective.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{ratio, Scalar};
use crate::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    /// ζ_i = 1/n
    #[default]
    Normalized,
    /// ζ_i = 1
    Total,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WelfareParams {
    pub a: Vec<Rational>,
    pub b: Vec<Rational>,
    pub rho_bar: Rational,
    pub lambda0: Rational,
    /// Per-feature ℓ0 penalties replacing `lambda0` for the listed columns.
    pub lambda0_overrides: BTreeMap<usize, Rational>,
    pub epsilon: Rational,
    pub weight_mode: WeightMode,
}

impl WelfareParams {
    /// `a = b = 1`, no fairness preference, no penalties.
    pub fn unit(n: usize) -> Self {
        Self {
            a: vec![Rational::one(); n],
            b: vec![Rational::one(); n],
            rho_bar: Rational::zero(),
            lambda0: Rational::zero(),
            lambda0_overrides: BTreeMap::new(),
            epsilon: Rational::zero(),
            weight_mode: WeightMode::Normalized,
        }
    }

    /// Class-dependent error weights with `b_pos + b_neg = 2` in the ratio `c_fn : c_fp`.
    pub fn cost_sensitive(labels: &[i8], c_fn: &Rational, c_fp: &Rational) -> Result<Self> {
        if c_fn.is_negative() || c_fp.is_negative() || (c_fn + c_fp).is_zero() {
            return Err(Error::InvalidParameter("misclassification costs must be nonnegative and not both zero".into()));
        }
        let total = c_fn + c_fp;
        let two = ratio(2, 1);
        let b_pos = &two * c_fn / &total;
        let b_neg = &two * c_fp / &total;
        let mut params = Self::unit(labels.len());
        params.b = labels.iter().map(|&y| if y > 0 { b_pos.clone() } else { b_neg.clone() }).collect();
        Ok(params)
    }

    pub fn with_rho_bar(mut self, rho: Rational) -> Self {
        self.rho_bar = rho;
        self
    }

    pub fn with_penalties(mut self, lambda0: Rational, epsilon: Rational) -> Self {
        self.lambda0 = lambda0;
        self.epsilon = epsilon;
        self
    }

    pub fn with_weight_mode(mut self, mode: WeightMode) -> Self {
        self.weight_mode = mode;
        self
    }

    pub fn n(&self) -> usize {
        self.b.len()
    }

    /// ℓ0 penalty of column `j` (1-based over non-intercept columns).
    pub fn lambda0_for(&self, j: usize) -> &Rational {
        self.lambda0_overrides.get(&j).unwrap_or(&self.lambda0)
    }

    pub fn max_b(&self) -> Rational {
        self.b.iter().cloned().fold(Rational::zero(), |m, v| m.max(v))
    }

    pub fn sum_a(&self) -> Rational {
        self.a.iter().sum()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        for len in [self.a.len(), self.b.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, got: len });
            }
        }
        for (name, values) in [("a", &self.a), ("b", &self.b)] {
            if let Some(i) = values.iter().position(Signed::is_negative) {
                if name == "b" {
                    return Err(Error::NegativeWeight {
                        index: i,
                        value: values[i].to_string(),
                    });
                }
                return Err(Error::InvalidParameter(format!("a_{i} is negative")));
            }
        }
        if self.lambda0.is_negative() || self.lambda0_overrides.values().any(Signed::is_negative) {
            return Err(Error::InvalidParameter("lambda0 must be nonnegative".into()));
        }
        if self.epsilon.is_negative() {
            return Err(Error::InvalidParameter("epsilon must be nonnegative".into()));
        }
        Ok(())
    }
}

fn zeta<T: Scalar>(mode: WeightMode, n: usize) -> T {
    match mode {
        WeightMode::Normalized => T::from_ratio(1, n),
        WeightMode::Total => T::one(),
    }
}

/// `Σ ζ_i (a_i − b_i ψ_i)`.
pub fn data_utility<T: Scalar>(psi: &[bool], params: &WelfareParams) -> Result<T> {
    let n = psi.len();
    params.validate(n)?;
    let mut total = T::zero();
    for (i, &p) in psi.iter().enumerate() {
        total = total + T::from_rational(&params.a[i]);
        if p {
            total = total - T::from_rational(&params.b[i]);
        }
    }
    Ok(total * zeta::<T>(params.weight_mode, n))
}

/// Data utility minus the fairness cost `(Σζ_i)·ρ̄·δ`.
pub fn swf<T: Scalar>(psi: &[bool], delta: &T, params: &WelfareParams) -> Result<T> {
    if *delta < T::zero() || *delta > T::one() {
        return Err(Error::InvalidParameter(format!("delta {delta} outside [0, 1]")));
    }
    let n = psi.len();
    let weight = zeta::<T>(params.weight_mode, n) * T::from_usize(n).expect("n fits scalar");
    Ok(data_utility::<T>(psi, params)? - weight * T::from_rational(&params.rho_bar) * delta.clone())
}

/// `(1/n)Σ b_i ψ_i + ρ̄δ + Σ_j λ0_j α_j + ε Σ_j β_j`; pass `None` for δ to drop
/// the fairness term (fixed-δ and accuracy-only training).
pub fn erm_objective<T: Scalar>(
    psi: &[bool],
    alpha: &[bool],
    beta: &[T],
    delta: Option<&T>,
    params: &WelfareParams,
) -> Result<T> {
    if alpha.len() != beta.len() {
        return Err(Error::DimensionMismatch {
            expected: alpha.len(),
            got: beta.len(),
        });
    }
    let mut total: T = crate::model::weighted_error(psi, &params.b.iter().map(T::from_rational).collect::<Vec<_>>())?;
    if let Some(d) = delta {
        total = total + T::from_rational(&params.rho_bar) * d.clone();
    }
    let eps = T::from_rational(&params.epsilon);
    for (j, (a, b)) in alpha.iter().zip(beta).enumerate() {
        if *a {
            total = total + T::from_rational(params.lambda0_for(j + 1));
        }
        if b.is_negative() {
            return Err(Error::InvalidParameter(format!("beta_{} is negative", j + 1)));
        }
        total = total + eps.clone() * b.clone();
    }
    Ok(total)
}

/// Objective of an integer coefficient vector with canonical α, β.
pub fn erm_objective_for_w<T: Scalar>(w: &[i64], psi: &[bool], delta: Option<&T>, params: &WelfareParams) -> Result<T> {
    let alpha: Vec<bool> = w[1..].iter().map(|&v| v != 0).collect();
    let beta: Vec<T> = w[1..].iter().map(|&v| T::from_i64_exact(v.abs())).collect();
    erm_objective(psi, &alpha, &beta, delta, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational_from_i64;
    use proptest::prelude::*;

    #[test]
    fn utility_examples() {
        let p = WelfareParams::unit(4);
        assert_eq!(data_utility::<Rational>(&[false; 4], &p).unwrap(), ratio(1, 1));
        assert_eq!(data_utility::<Rational>(&[true, false, false, false], &p).unwrap(), ratio(3, 4));
        let p = WelfareParams::unit(10).with_weight_mode(WeightMode::Total);
        let mut psi = [false; 10];
        psi[..3].fill(true);
        assert_eq!(data_utility::<Rational>(&psi, &p).unwrap(), ratio(7, 1));
    }

    #[test]
    fn swf_examples() {
        let p = WelfareParams::unit(4).with_rho_bar(ratio(1, 5));
        let psi = [true, false, false, false];
        assert_eq!(swf(&psi, &ratio(1, 20), &p).unwrap(), ratio(74, 100));
        let p0 = WelfareParams::unit(4);
        for d in [ratio(0, 1), ratio(1, 2), ratio(1, 1)] {
            assert_eq!(swf(&psi, &d, &p0).unwrap(), data_utility::<Rational>(&psi, &p0).unwrap());
        }
        assert!(swf(&psi, &ratio(3, 2), &p).is_err());
        let total = p.clone().with_weight_mode(WeightMode::Total);
        assert_eq!(swf(&psi, &ratio(1, 20), &total).unwrap(), ratio(3, 1) - ratio(4, 100));
    }

    #[test]
    fn objective_examples() {
        let p = WelfareParams::unit(4).with_rho_bar(ratio(1, 2)).with_penalties(ratio(1, 100), ratio(1, 10));
        let v: Rational = erm_objective(&[true; 4], &[false, false], &[ratio(0, 1), ratio(0, 1)], Some(&ratio(1, 4)), &p).unwrap();
        assert_eq!(v, ratio(1, 1) + ratio(1, 8));
        let v: Rational = erm_objective_for_w(&[5, 0, -2], &[false; 4], None, &p).unwrap();
        assert_eq!(v, ratio(1, 100) + ratio(2, 10));
        let plain = WelfareParams::unit(4).with_rho_bar(ratio(1, 2));
        let psi = [true, false, true, false];
        let v: Rational = erm_objective_for_w(&[1, 3, 3], &psi, Some(&ratio(1, 3)), &plain).unwrap();
        assert_eq!(v, ratio(1, 2) + ratio(1, 6));
    }

    #[test]
    fn overrides_and_validation() {
        let mut p = WelfareParams::unit(2).with_penalties(ratio(1, 10), ratio(0, 1));
        p.lambda0_overrides.insert(2, ratio(3, 1));
        let v: Rational = erm_objective_for_w(&[0, 1, 1], &[false, false], None, &p).unwrap();
        assert_eq!(v, ratio(31, 10));
        p.b[1] = ratio(-1, 1);
        assert!(matches!(data_utility::<Rational>(&[false, false], &p), Err(Error::NegativeWeight { index: 1, .. })));
        let cs = WelfareParams::cost_sensitive(&[1, -1], &ratio(4, 1), &ratio(1, 1)).unwrap();
        assert_eq!(cs.b, vec![ratio(8, 5), ratio(2, 5)]);
    }

    proptest! {
        #[test]
        fn swf_monotone_in_delta(errs in 0usize..8, rho in -5i64..6, d1 in 0i64..=10, d2 in 0i64..=10) {
            let mut psi = vec![false; 8];
            psi[..errs].fill(true);
            let p = WelfareParams::unit(8).with_rho_bar(ratio(rho, 5));
            let (lo, hi) = (ratio(d1.min(d2), 10), ratio(d1.max(d2), 10));
            let s_lo: Rational = swf(&psi, &lo, &p).unwrap();
            let s_hi: Rational = swf(&psi, &hi, &p).unwrap();
            if rho > 0 { prop_assert!(s_hi <= s_lo); }
            if rho < 0 { prop_assert!(s_hi >= s_lo); }
        }

        #[test]
        fn intercept_is_never_penalized(w0 in -10i64..11) {
            let p = WelfareParams::unit(2).with_penalties(ratio(1, 1), ratio(1, 1));
            let v: Rational = erm_objective_for_w(&[w0, 0], &[false, false], None, &p).unwrap();
            prop_assert_eq!(v, rational_from_i64(0));
        }

        #[test]
        fn normalized_swf_is_affine_in_erm(errs in 0usize..6, rho in 0i64..5, d in 0i64..=4) {
            let mut psi = vec![false; 6];
            psi[..errs].fill(true);
            let p = WelfareParams::unit(6).with_rho_bar(ratio(rho, 4));
            let delta = ratio(d, 4);
            let s: Rational = swf(&psi, &delta, &p).unwrap();
            let e: Rational = erm_objective(&psi, &[], &[], Some(&delta), &p).unwrap();
            prop_assert_eq!(s + e, ratio(1, 1));
        }
    }
}
