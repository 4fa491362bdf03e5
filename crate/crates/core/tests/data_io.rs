use std::io::Write;

use fairscore::data::{binarize, load_csv, split, undersample, BinarizeConfig, Schema};
use fairscore::Dataset;

fn fixture() -> (Schema, fairscore::data::RawTable) {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");
    let schema = Schema::load(format!("{dir}/patients.schema.json")).unwrap();
    let table = load_csv(format!("{dir}/patients.csv"), &schema).unwrap();
    (schema, table)
}

#[test]
fn fixture_loads_with_one_dropped_row() {
    let (_, table) = fixture();
    assert_eq!(table.n(), 11);
    assert_eq!(table.dropped_rows, 1);
    assert_eq!(table.labels.iter().filter(|&&y| y > 0).count(), 6);
}

#[test]
fn binarized_fixture_is_zero_one() {
    let (_, table) = fixture();
    let ds = binarize(&table, &BinarizeConfig::default()).unwrap();
    assert!(ds.is_binary());
    let names = ds.feature_names();
    assert_eq!(names[0], "(intercept)");
    assert_eq!(names.iter().filter(|n| n.starts_with("age≤")).count(), 3);
    assert!(names.contains(&"ward=icu".to_string()));
    assert_eq!(ds.groupings()[0].name, "sex");
}

#[test]
fn loading_from_a_temp_file() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "x,g,y\n\"3\",a,1\n4,b,0\n5,a,0\n6,b,1").unwrap();
    let schema = Schema::from_json(r#"{"columns": {"x": "numeric", "g": "sensitive", "y": "label"}, "positive_label": "1"}"#).unwrap();
    let table = load_csv(file.path(), &schema).unwrap();
    assert_eq!(table.n(), 4);
    let ds = binarize(&table, &BinarizeConfig::default()).unwrap();
    // quartile thresholds 3, 4, 5 below the maximum 6
    assert_eq!(ds.width(), 4);
}

fn groups_of(ds: &Dataset) -> Vec<usize> {
    let mut g = ds.groups().to_vec();
    g.sort_unstable();
    g.dedup();
    g
}

#[test]
fn split_partitions_and_keeps_groups() {
    let (_, table) = fixture();
    let ds = binarize(&table, &BinarizeConfig::default()).unwrap();
    let (train, test) = split(&ds, 0.7, 11).unwrap();
    assert_eq!(train.n() + test.n(), ds.n());
    assert_eq!(groups_of(&train), vec![0, 1]);
    assert_eq!(groups_of(&test), vec![0, 1]);
    let mut rows: Vec<_> = train.rows().iter().chain(test.rows()).cloned().collect();
    let mut all = ds.rows().to_vec();
    rows.sort();
    all.sort();
    assert_eq!(rows, all);
}

#[test]
fn different_seeds_give_different_splits() {
    let rows: Vec<Vec<i64>> = (0..40).map(|i| vec![1, i % 2, (i / 2) % 2]).collect();
    let ds = Dataset::from_integers(&rows, (0..40).map(|i| if i % 3 == 0 { 1 } else { -1 }).collect(), (0..40).map(|i| i % 2).collect()).unwrap();
    let a = split(&ds, 0.5, 1).unwrap().0;
    let b = split(&ds, 0.5, 2).unwrap().0;
    assert_ne!(a, b);
}

#[test]
fn undersample_thirty_ten() {
    let rows: Vec<Vec<i64>> = (0..40).map(|i| vec![1, i % 2]).collect();
    let labels = (0..40).map(|i| if i < 30 { 1 } else { -1 }).collect();
    let ds = Dataset::from_integers(&rows, labels, (0..40).map(|i| i % 2).collect()).unwrap();
    let u = undersample(&ds, 5).unwrap();
    assert_eq!((u.positives(), u.n()), (10, 20));
    assert_eq!(undersample(&ds, 5).unwrap(), u);
}
