//! Evaluation reports and plain-text scorecards.

use std::fmt::Write as _;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairness::{fairness_level_all, group_indices, FairnessNotion};
use crate::model::{accuracy, loss_vector, score, weighted_error, Dataset, ScoringSystem};
use crate::scalar::{format_rational, rational_to_f64, serde_rational};
use crate::welfare::{data_utility, swf, WeightMode, WelfareParams};
use crate::Rational;

pub const ACCURACY_CONVENTION: &str =
    "an example counts as correct only when y * score > 0; a score of exactly 0 is an error for both classes";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NotionReport {
    pub notion: FairnessNotion,
    /// Achieved level, absent when the notion is undefined on this data.
    #[serde(with = "serde_rational::option", default, skip_serializing_if = "Option::is_none")]
    pub level: Option<Rational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(with = "serde_rational::option", default, skip_serializing_if = "Option::is_none")]
    pub swf_normalized: Option<Rational>,
    #[serde(with = "serde_rational::option", default, skip_serializing_if = "Option::is_none")]
    pub swf_total: Option<Rational>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub note: String,
    pub n: usize,
    pub model_size: usize,
    /// Every score is zero, so every example is counted as an error.
    pub degenerate: bool,
    #[serde(with = "serde_rational")]
    pub accuracy: Rational,
    pub accuracy_f64: f64,
    #[serde(with = "serde_rational")]
    pub weighted_error: Rational,
    #[serde(with = "serde_rational")]
    pub data_utility_normalized: Rational,
    #[serde(with = "serde_rational")]
    pub data_utility_total: Rational,
    #[serde(with = "serde_rational")]
    pub rho_bar: Rational,
    pub notions: Vec<NotionReport>,
}

impl Report {
    pub fn notion(&self, notion: FairnessNotion) -> Option<&NotionReport> {
        self.notions.iter().find(|r| r.notion == notion)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Exact metrics of `system` on `dataset`. A notion that is undefined on the
/// data is reported with its error rather than failing the whole call.
pub fn evaluate(system: &ScoringSystem, dataset: &Dataset, params: &WelfareParams, notions: &[FairnessNotion]) -> Result<Report> {
    if system.width() != dataset.width() {
        return Err(Error::DimensionMismatch {
            expected: dataset.width(),
            got: system.width(),
        });
    }
    params.validate(dataset.n())?;
    let psi = loss_vector(system, dataset)?;
    let mut degenerate = true;
    for row in dataset.rows() {
        if !score(system, row)?.is_zero() {
            degenerate = false;
            break;
        }
    }
    let normalized = params.clone().with_weight_mode(WeightMode::Normalized);
    let total = params.clone().with_weight_mode(WeightMode::Total);
    let indices = group_indices(dataset);
    let mut rows = Vec::new();
    for &notion in notions {
        rows.push(match fairness_level_all::<Rational>(notion, &psi, &indices) {
            Ok(level) => NotionReport {
                notion,
                swf_normalized: Some(swf(&psi, &level, &normalized)?),
                swf_total: Some(swf(&psi, &level, &total)?),
                level: Some(level),
                error: None,
            },
            Err(e) => NotionReport {
                notion,
                level: None,
                error: Some(e.to_string()),
                swf_normalized: None,
                swf_total: None,
            },
        });
    }
    let acc: Rational = accuracy(&psi);
    Ok(Report {
        note: ACCURACY_CONVENTION.to_string(),
        n: dataset.n(),
        model_size: system.model_size(),
        degenerate,
        accuracy_f64: rational_to_f64(&acc),
        accuracy: acc,
        weighted_error: weighted_error(&psi, &params.b)?,
        data_utility_normalized: data_utility(&psi, &normalized)?,
        data_utility_total: data_utility(&psi, &total)?,
        rho_bar: params.rho_bar.clone(),
        notions: rows,
    })
}

const RULE: &str = "predict +1 if total > 0";

/// Fixed-width scorecard: one row per nonzero non-intercept coefficient,
/// largest |points| first, then the base score and the decision rule.
pub fn render_scorecard(system: &ScoringSystem) -> String {
    let mut rows: Vec<(usize, &str, i64)> = (1..system.width())
        .filter(|&j| system.coefficients[j] != 0)
        .map(|j| (j, system.feature_names[j].as_str(), system.coefficients[j]))
        .collect();
    rows.sort_by_key(|&(j, _, w)| (std::cmp::Reverse(w.unsigned_abs()), j));
    let name_w = rows
        .iter()
        .map(|r| r.1.chars().count())
        .chain(["base score".len(), "feature".len()])
        .max()
        .unwrap_or(10);
    let col_w = system.width().to_string().len().max(3);
    let line = "-".repeat(col_w + name_w + 14);
    let meta = &system.metadata;
    let opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());

    let mut out = String::new();
    let _ = writeln!(out, "SCORECARD");
    let _ = writeln!(out, "columns:   {}", system.width());
    let _ = writeln!(out, "notion:    {}", opt(meta.notion.map(|n| n.to_string())));
    let _ = writeln!(out, "mode:      {}", opt(meta.mode.clone()));
    let _ = writeln!(out, "delta:     {}", opt(meta.delta.as_ref().map(format_rational)));
    let _ = writeln!(out, "objective: {}", opt(meta.objective.as_ref().map(format_rational)));
    let _ = writeln!(out, "status:    {}", opt(meta.status.clone()));
    let _ = writeln!(out, "{line}");
    let _ = writeln!(out, "{:>col_w$}  {:<name_w$}  {:>10}", "col", "feature", "points");
    let _ = writeln!(out, "{line}");
    for (j, name, w) in &rows {
        let _ = writeln!(out, "{j:>col_w$}  {name:<name_w$}  {w:>+10}");
    }
    let _ = writeln!(out, "{line}");
    let _ = writeln!(out, "{:>col_w$}  {:<name_w$}  {:>+10}", 0, "base score", system.coefficients[0]);
    let _ = writeln!(out, "{line}");
    let _ = writeln!(out, "total = base score + points of every row whose feature equals 1");
    let _ = writeln!(out, "{RULE}");
    out
}

/// Recovers the coefficient vector from a rendered scorecard.
pub fn parse_scorecard(text: &str) -> Result<Vec<i64>> {
    let bad = |m: &str| Error::Scorecard(m.to_string());
    let width: usize = text
        .lines()
        .find_map(|l| l.strip_prefix("columns:"))
        .ok_or_else(|| bad("missing columns line"))?
        .trim()
        .parse()
        .map_err(|_| bad("unreadable column count"))?;
    let mut w = vec![0i64; width];
    let mut seen_base = false;
    let mut in_table = false;
    for l in text.lines() {
        if l.starts_with('-') {
            in_table = true;
            continue;
        }
        if !in_table {
            continue;
        }
        let tokens: Vec<&str> = l.split_whitespace().collect();
        if tokens.len() < 3 || tokens[0] == "col" {
            continue;
        }
        let (Ok(j), Ok(points)) = (tokens[0].parse::<usize>(), tokens[tokens.len() - 1].parse::<i64>()) else {
            continue;
        };
        if j >= width {
            return Err(bad(&format!("column {j} out of range")));
        }
        w[j] = points;
        seen_base |= j == 0;
    }
    if !seen_base {
        return Err(bad("missing base score"));
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{ratio, rational_from_i64};

    fn data() -> Dataset {
        Dataset::from_integers(
            &[vec![1, 1, 0], vec![1, 0, 1], vec![1, 1, 1], vec![1, 0, 0]],
            vec![1, -1, 1, -1],
            vec![0, 0, 1, 1],
        )
        .unwrap()
    }

    #[test]
    fn zero_model_is_degenerate() {
        let ds = data();
        let r = evaluate(&ScoringSystem::from_coefficients(vec![0, 0, 0]), &ds, &WelfareParams::unit(4), &FairnessNotion::ALL).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.accuracy, Rational::zero());
        assert_eq!(r.model_size, 0);
    }

    #[test]
    fn perfect_separator() {
        let ds = data();
        let sys = ScoringSystem::from_coefficients(vec![-1, 2, 0]);
        let params = WelfareParams::unit(4).with_rho_bar(ratio(1, 2));
        let r = evaluate(&sys, &ds, &params, &FairnessNotion::ALL).unwrap();
        assert_eq!(r.accuracy, rational_from_i64(1));
        assert!(!r.degenerate);
        for n in [FairnessNotion::Omr, FairnessNotion::Eo] {
            assert_eq!(r.notion(n).unwrap().level, Some(Rational::zero()));
        }
        // swf = utility - rho * level, exactly
        let sp = r.notion(FairnessNotion::Sp).unwrap();
        assert_eq!(sp.swf_normalized.clone().unwrap(), &r.data_utility_normalized - ratio(1, 2) * sp.level.clone().unwrap());
    }

    #[test]
    fn undefined_notion_is_not_fatal() {
        let ds = Dataset::from_integers(&[vec![1, 1], vec![1, 0], vec![1, 1]], vec![1, -1, -1], vec![0, 0, 1]).unwrap();
        let r = evaluate(&ScoringSystem::from_coefficients(vec![0, 1]), &ds, &WelfareParams::unit(3), &[FairnessNotion::Eo, FairnessNotion::Sp]).unwrap();
        assert!(r.notion(FairnessNotion::Eo).unwrap().error.is_some());
        assert!(r.notion(FairnessNotion::Sp).unwrap().level.is_some());
    }

    #[test]
    fn scorecard_orders_and_round_trips() {
        let sys = ScoringSystem::from_coefficients(vec![-2, 1, -3, 0, 3]);
        let text = render_scorecard(&sys);
        assert_eq!(text, render_scorecard(&sys));
        let pos: Vec<usize> = ["x2", "x4", "x1"].iter().map(|n| text.find(&format!(" {n} ")).unwrap()).collect();
        assert!(pos[0] < pos[1] && pos[1] < pos[2]);
        assert!(!text.contains(" x3 "));
        assert!(text.contains("predict +1 if total > 0"));
        assert_eq!(parse_scorecard(&text).unwrap(), sys.coefficients);
    }

    #[test]
    fn intercept_only_scorecard() {
        let sys = ScoringSystem::from_coefficients(vec![4, 0, 0]);
        let text = render_scorecard(&sys);
        assert!(text.contains("base score"));
        assert_eq!(text.lines().filter(|l| l.contains(" x")).count(), 0);
        assert_eq!(parse_scorecard(&text).unwrap(), vec![4, 0, 0]);
    }
}
