//! Tabular input: CSV loading against a JSON schema, binarization, splitting
//! and class balancing.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::Path;

use log::warn;
use num_traits::{One, Zero};
use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dataset, Grouping};
use crate::scalar::{parse_rational, ratio};
use crate::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
    Binary,
    Label,
    Sensitive,
}

/// Column kinds keyed by header name, plus the raw label value counted as positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: BTreeMap<String, ColumnKind>,
    pub positive_label: String,
    /// Keep the sensitive attribute as (flagged) input columns too.
    #[serde(default)]
    pub sensitive_as_feature: bool,
}

impl Schema {
    pub fn from_json(text: &str) -> Result<Self> {
        let schema: Schema = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let count = |k: ColumnKind| self.columns.values().filter(|v| **v == k).count();
        match count(ColumnKind::Label) {
            1 => {}
            0 => return Err(Error::Schema("no label column declared".into())),
            m => return Err(Error::Schema(format!("{m} label columns declared; exactly one is allowed"))),
        }
        if count(ColumnKind::Sensitive) == 0 {
            return Err(Error::Schema("no sensitive column declared".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawColumn {
    pub name: String,
    pub kind: ColumnKind,
}

/// Validated cells in header order, restricted to the schema's columns.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub columns: Vec<RawColumn>,
    pub rows: Vec<Vec<String>>,
    pub labels: Vec<i8>,
    /// Rows removed because a cell was missing.
    pub dropped_rows: usize,
    pub sensitive_as_feature: bool,
}

impl RawTable {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }
}

fn is_missing(cell: &str) -> bool {
    matches!(cell.to_ascii_lowercase().as_str(), "" | "na" | "nan" | "?" | "null")
}

fn parse_binary(cell: &str) -> Option<bool> {
    match cell.to_ascii_lowercase().as_str() {
        "1" | "true" => Some(true),
        "0" | "false" => Some(false),
        _ => None,
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<RawTable> {
    read_csv(std::fs::File::open(path)?, schema)
}

/// Reads CSV text with a header row. Columns absent from the schema are
/// ignored; schema columns absent from the header are an error.
pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<RawTable> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    for name in schema.columns.keys() {
        if !header.contains(name) {
            return Err(Error::UnknownColumn(name.clone()));
        }
    }
    for name in &header {
        if !schema.columns.contains_key(name) {
            warn!("column {name:?} is not in the schema and is ignored");
        }
    }
    let kept: Vec<(usize, RawColumn)> = header
        .iter()
        .enumerate()
        .filter_map(|(pos, name)| {
            schema.columns.get(name).map(|&kind| {
                (
                    pos,
                    RawColumn {
                        name: name.clone(),
                        kind,
                    },
                )
            })
        })
        .collect();
    let label_pos = kept.iter().position(|(_, c)| c.kind == ColumnKind::Label).expect("validated schema");

    let mut rows = Vec::new();
    let mut dropped = 0;
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let cells: Vec<String> = kept
            .iter()
            .map(|(pos, _)| record.get(*pos).unwrap_or("").to_string())
            .collect();
        if cells.iter().any(|c| is_missing(c)) {
            dropped += 1;
            continue;
        }
        for ((_, col), cell) in kept.iter().zip(&cells) {
            let ok = match col.kind {
                ColumnKind::Numeric => parse_rational(cell).is_ok(),
                ColumnKind::Binary => parse_binary(cell).is_some(),
                _ => true,
            };
            if !ok {
                return Err(Error::UnparseableCell {
                    row: r + 1,
                    column: col.name.clone(),
                    value: cell.clone(),
                });
            }
        }
        rows.push(cells);
    }
    if dropped > 0 {
        warn!("dropped {dropped} row(s) with missing values");
    }
    let distinct: BTreeSet<&str> = rows.iter().map(|r| r[label_pos].as_str()).collect();
    if distinct.len() > 2 {
        return Err(Error::InvalidDataset(format!(
            "label column {:?} has {} distinct values; expected at most 2",
            kept[label_pos].1.name,
            distinct.len()
        )));
    }
    if distinct.len() == 2 && !distinct.contains(schema.positive_label.as_str()) {
        return Err(Error::InvalidDataset(format!(
            "positive label {:?} does not occur in column {:?}",
            schema.positive_label, kept[label_pos].1.name
        )));
    }
    let labels = rows
        .iter()
        .map(|r| if r[label_pos] == schema.positive_label { 1 } else { -1 })
        .collect();
    Ok(RawTable {
        columns: kept.into_iter().map(|(_, c)| c).collect(),
        rows,
        labels,
        dropped_rows: dropped,
        sensitive_as_feature: schema.sensitive_as_feature,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinarizeConfig {
    /// Quantile levels in (0, 1) at which numeric thresholds are placed.
    pub quantiles: Vec<Rational>,
}

impl Default for BinarizeConfig {
    fn default() -> Self {
        Self {
            quantiles: vec![ratio(1, 4), ratio(1, 2), ratio(3, 4)],
        }
    }
}

/// Lower empirical quantile: the `⌈q·m⌉`-th smallest of `m` sorted values.
fn quantile_index(q: &Rational, m: usize) -> usize {
    let pos = (q * Rational::from_integer((m as i64).into())).ceil();
    let pos: i64 = pos.to_integer().try_into().unwrap_or(1);
    (pos.max(1) as usize - 1).min(m - 1)
}

/// Turns every column into 0/1 indicators and prepends the intercept.
/// Numeric columns holding only 0 and 1 pass through unchanged.
pub fn binarize(table: &RawTable, config: &BinarizeConfig) -> Result<Dataset> {
    if let Some(q) = config.quantiles.iter().find(|q| !(**q > Rational::zero() && **q < Rational::one())) {
        return Err(Error::InvalidParameter(format!("quantile {q} outside (0, 1)")));
    }
    let n = table.n();
    let one = Rational::one;
    let zero = Rational::zero;
    let mut names = vec!["(intercept)".to_string()];
    let mut cols: Vec<Vec<Rational>> = vec![vec![one(); n]];
    let mut sensitive = BTreeSet::new();
    let mut groupings = Vec::new();
    let indicator = |pred: &dyn Fn(&str) -> bool, c: usize| -> Vec<Rational> {
        table.rows.iter().map(|r| if pred(&r[c]) { one() } else { zero() }).collect()
    };
    for (c, col) in table.columns.iter().enumerate() {
        match col.kind {
            ColumnKind::Label => {}
            ColumnKind::Binary => {
                names.push(col.name.clone());
                cols.push(indicator(&|v| parse_binary(v) == Some(true), c));
            }
            ColumnKind::Categorical | ColumnKind::Sensitive => {
                let values: BTreeSet<&str> = table.rows.iter().map(|r| r[c].as_str()).collect();
                let values: Vec<&str> = values.into_iter().collect();
                if col.kind == ColumnKind::Sensitive {
                    let ids = table
                        .rows
                        .iter()
                        .map(|r| values.iter().position(|v| *v == r[c]).expect("value listed"))
                        .collect();
                    groupings.push(Grouping::new(col.name.clone(), ids, values.iter().map(|v| v.to_string()).collect()));
                    if !table.sensitive_as_feature {
                        continue;
                    }
                }
                for v in &values {
                    names.push(format!("{}={}", col.name, v));
                    cols.push(indicator(&|x| x == *v, c));
                    if col.kind == ColumnKind::Sensitive {
                        sensitive.insert(cols.len() - 1);
                    }
                }
            }
            ColumnKind::Numeric => {
                let mut vals: Vec<(Rational, &str)> = table
                    .rows
                    .iter()
                    .map(|r| (parse_rational(&r[c]).expect("validated cell"), r[c].as_str()))
                    .collect();
                let values: Vec<Rational> = vals.iter().map(|v| v.0.clone()).collect();
                if values.iter().all(|v| v.is_zero() || v.is_one()) {
                    names.push(col.name.clone());
                    cols.push(values);
                    continue;
                }
                vals.sort_by(|a, b| a.0.cmp(&b.0));
                let max = vals.last().expect("non-empty table").0.clone();
                let mut thresholds: Vec<(Rational, String)> = Vec::new();
                for q in &config.quantiles {
                    let (t, raw) = &vals[quantile_index(q, vals.len())];
                    if *t < max && !thresholds.iter().any(|(u, _)| u == t) {
                        thresholds.push((t.clone(), raw.to_string()));
                    }
                }
                if thresholds.is_empty() {
                    warn!("numeric column {:?} is constant and is dropped", col.name);
                    continue;
                }
                thresholds.sort_by(|a, b| a.0.cmp(&b.0));
                for (t, raw) in thresholds {
                    names.push(format!("{}≤{}", col.name, raw));
                    cols.push(values.iter().map(|v| if *v <= t { one() } else { zero() }).collect());
                }
            }
        }
    }
    let features: Vec<Vec<Rational>> = (0..n).map(|i| cols.iter().map(|col| col[i].clone()).collect()).collect();
    Dataset::with_groupings(features, table.labels.clone(), groupings, names, sensitive)
}

fn parts_cover_groups(ds: &Dataset, part: &[usize]) -> bool {
    ds.groupings().iter().all(|g| {
        let mut seen = vec![false; g.num_groups()];
        for &i in part {
            seen[g.ids[i]] = true;
        }
        seen.into_iter().all(|s| s)
    })
}

/// Random train/test partition of `round(fraction·n)` training rows, with
/// swaps so that every group appears on both sides when that is possible.
pub fn split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!("train fraction {train_fraction} must lie strictly between 0 and 1")));
    }
    let n = ds.n();
    if n < 2 {
        return Err(Error::InvalidDataset("at least two rows are needed to split".into()));
    }
    let n_train = ((train_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let (mut train, mut test) = (order[..n_train].to_vec(), order[n_train..].to_vec());
    repair_groups(ds, &mut train, &mut test);
    if !(parts_cover_groups(ds, &train) && parts_cover_groups(ds, &test)) {
        return Err(Error::InvalidDataset(
            "a group is too small to appear in both the training and the test part".into(),
        ));
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((ds.subset(&train)?, ds.subset(&test)?))
}

/// Moves members of groups missing from one side across, trading back a row
/// whose group stays represented.
fn repair_groups(ds: &Dataset, a: &mut Vec<usize>, b: &mut Vec<usize>) {
    for _ in 0..4 * ds.n() {
        let mut changed = false;
        for to in 0..2 {
            let (dst, src) = if to == 0 { (&mut *a, &mut *b) } else { (&mut *b, &mut *a) };
            for g in ds.groupings() {
                let count = |part: &[usize], id: usize| part.iter().filter(|&&i| g.ids[i] == id).count();
                for id in 0..g.num_groups() {
                    if count(dst, id) > 0 || count(src, id) < 2 {
                        continue;
                    }
                    let give = src.iter().position(|&i| g.ids[i] == id).expect("counted");
                    // trade back a row whose groups are all plentiful on the destination side
                    let back = dst.iter().position(|&j| {
                        ds.groupings().iter().all(|h| dst.iter().filter(|&&k| h.ids[k] == h.ids[j]).count() > 1)
                    });
                    if let Some(back) = back {
                        let x = src.remove(give);
                        let y = dst.remove(back);
                        dst.push(x);
                        src.push(y);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
}

/// Randomly drops majority-class rows until both classes have the minority count.
pub fn undersample(ds: &Dataset, seed: u64) -> Result<Dataset> {
    let pos: Vec<usize> = (0..ds.n()).filter(|&i| ds.label(i) > 0).collect();
    let neg: Vec<usize> = (0..ds.n()).filter(|&i| ds.label(i) < 0).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::InvalidDataset("undersampling needs both classes".into()));
    }
    let (major, minor) = if pos.len() >= neg.len() { (pos, neg) } else { (neg, pos) };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = index::sample(&mut rng, major.len(), minor.len());
    let mut rows: Vec<usize> = picked.into_iter().map(|k| major[k]).chain(minor).collect();
    rows.sort_unstable();
    ds.subset(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCHEMA: &str = r#"{
        "columns": {"fever": "binary", "age": "numeric", "ward": "categorical", "sex": "sensitive", "sepsis": "label"},
        "positive_label": "yes"
    }"#;

    const CSV: &str = "id,fever,age,ward,sex,sepsis\n\
        1,1,70,A,M,yes\n\
        2,0,45,B,M,yes\n\
        3,1,80,A,M,no\n\
        4,1,30,B,F,yes\n\
        5,1,55,A,F,yes\n\
        6,1,62,B,F,no\n";

    fn table() -> RawTable {
        read_csv(CSV.as_bytes(), &Schema::from_json(SCHEMA).unwrap()).unwrap()
    }

    #[test]
    fn loads_and_maps_labels() {
        let t = table();
        assert_eq!(t.n(), 6);
        assert_eq!(t.labels, vec![1, 1, -1, 1, 1, -1]);
        assert_eq!(t.columns.len(), 5);
    }

    #[test]
    fn missing_cell_drops_row() {
        let csv = CSV.replace("3,1,80,A,M,no", "3,1,,A,M,no");
        let t = read_csv(csv.as_bytes(), &Schema::from_json(SCHEMA).unwrap()).unwrap();
        assert_eq!((t.n(), t.dropped_rows), (5, 1));
    }

    #[test]
    fn three_label_values_rejected() {
        let csv = CSV.replace("6,1,62,B,F,no", "6,1,62,B,F,maybe");
        assert!(matches!(read_csv(csv.as_bytes(), &Schema::from_json(SCHEMA).unwrap()), Err(Error::InvalidDataset(_))));
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(Schema::from_json(r#"{"columns": {"a": "numeric"}, "positive_label": "1"}"#), Err(Error::Schema(_))));
        let schema = Schema::from_json(&SCHEMA.replace("\"fever\"", "\"temp\"")).unwrap();
        assert!(matches!(read_csv(CSV.as_bytes(), &schema), Err(Error::UnknownColumn(c)) if c == "temp"));
        let bad = CSV.replace("2,0,45", "2,0,old");
        assert!(matches!(
            read_csv(bad.as_bytes(), &Schema::from_json(SCHEMA).unwrap()),
            Err(Error::UnparseableCell { row: 2, .. })
        ));
    }

    #[test]
    fn binarization_layout() {
        let ds = binarize(&table(), &BinarizeConfig::default()).unwrap();
        // intercept, fever, three age thresholds, two ward indicators
        assert_eq!(ds.width(), 7);
        assert_eq!(ds.feature_names()[2], "age≤45");
        assert_eq!(ds.feature_names()[5], "ward=A");
        for i in 0..ds.n() {
            assert_eq!(&ds.row(i)[5] + &ds.row(i)[6], Rational::one());
        }
        assert_eq!(ds.groupings()[0].labels, vec!["F", "M"]);
        assert!(ds.sensitive_columns().is_empty());
    }

    #[test]
    fn sensitive_columns_flagged_when_kept() {
        let mut t = table();
        t.sensitive_as_feature = true;
        let ds = binarize(&t, &BinarizeConfig::default()).unwrap();
        assert_eq!(ds.sensitive_columns().len(), 2);
        assert!(ds.feature_names().contains(&"sex=F".to_string()));
    }

    #[test]
    fn binary_table_is_identity() {
        let schema = Schema::from_json(r#"{"columns": {"a": "binary", "b": "numeric", "g": "sensitive", "y": "label"}, "positive_label": "1"}"#).unwrap();
        let csv = "a,b,g,y\n1,0,x,1\n0,1,y,0\n1,1,x,0\n0,0,y,1\n";
        let ds = binarize(&read_csv(csv.as_bytes(), &schema).unwrap(), &BinarizeConfig::default()).unwrap();
        let expect = [[1, 1, 0], [1, 0, 1], [1, 1, 1], [1, 0, 0]];
        for (i, row) in expect.iter().enumerate() {
            let got: Vec<Rational> = row.iter().map(|&v| Rational::from_integer(v.into())).collect();
            assert_eq!(ds.row(i), got.as_slice());
        }
    }

    #[test]
    fn constant_numeric_column_dropped() {
        let schema = Schema::from_json(r#"{"columns": {"b": "numeric", "g": "sensitive", "y": "label"}, "positive_label": "1"}"#).unwrap();
        let csv = "b,g,y\n5,x,1\n5,y,0\n5,x,0\n";
        let ds = binarize(&read_csv(csv.as_bytes(), &schema).unwrap(), &BinarizeConfig::default()).unwrap();
        assert_eq!(ds.width(), 1);
    }

    fn ten() -> Dataset {
        let rows: Vec<Vec<i64>> = (0..10).map(|i| vec![1, i % 2]).collect();
        Dataset::from_integers(&rows, (0..10).map(|i| if i < 6 { 1 } else { -1 }).collect(), (0..10).map(|i| i % 2).collect()).unwrap()
    }

    #[test]
    fn split_sizes_and_reproducibility() {
        let ds = ten();
        let (a, b) = split(&ds, 0.7, 3).unwrap();
        assert_eq!((a.n(), b.n()), (7, 3));
        let (a2, _) = split(&ds, 0.7, 3).unwrap();
        assert_eq!(a, a2);
        assert!(split(&ds, 1.0, 3).is_err());
        assert!(split(&ds, 0.0, 3).is_err());
    }

    #[test]
    fn undersampling_balances() {
        let ds = ten();
        let u = undersample(&ds, 1).unwrap();
        assert_eq!(u.positives(), 4);
        assert_eq!(u.n(), 8);
        let again = undersample(&u, 9).unwrap();
        assert_eq!(again, u);
    }
}
