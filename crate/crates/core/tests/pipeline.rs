use fairscore::data::{binarize, load_csv, BinarizeConfig, Schema};
use fairscore::fixtures::{six_patient_example, system_d1, system_d3};
use fairscore::mip::{export_lp, export_mps, parse_mps};
use fairscore::scalar::ratio;
use fairscore::*;

fn exact() -> SolverConfig {
    SolverConfig {
        relative_gap: 0.0,
        ..SolverConfig::default()
    }
}

#[test]
fn six_patient_reports() {
    let ds = six_patient_example();
    let params = WelfareParams::unit(6);
    let r = evaluate(&system_d3(), &ds, &params, &FairnessNotion::ALL).unwrap();
    assert_eq!(r.notion(FairnessNotion::Sp).unwrap().level, Some(ratio(1, 3)));
    assert_eq!(r.notion(FairnessNotion::Omr).unwrap().level, Some(ratio(1, 3)));
    let perfect = evaluate(&system_d1(), &ds, &params, &FairnessNotion::ALL).unwrap();
    assert_eq!(perfect.accuracy, ratio(1, 1));
    assert!(perfect.to_json().unwrap().contains("\"accuracy\": \"1\""));
}

#[test]
fn training_on_six_patients_matches_the_oracle() {
    let ds = six_patient_example();
    let params = WelfareParams::unit(6).with_rho_bar(ratio(1, 2)).with_penalties(ratio(1, 100), ratio(1, 1000));
    let p = Problem::new(ds, params, FairnessNotion::Omr).with_uniform_omega(2);
    let f = fit(&p, &exact(), false).unwrap();
    assert_eq!(f.solution.objective, brute_force(&p).unwrap().objective);
    let sys = f.system.unwrap();
    assert_eq!(parse_scorecard(&render_scorecard(&sys)).unwrap(), sys.coefficients);
}

#[test]
fn csv_to_scorecard() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");
    let schema = Schema::load(format!("{dir}/patients.schema.json")).unwrap();
    let ds = binarize(&load_csv(format!("{dir}/patients.csv"), &schema).unwrap(), &BinarizeConfig::default()).unwrap();
    let params = WelfareParams::unit(ds.n()).with_rho_bar(ratio(1, 2)).with_penalties(ratio(1, 100), ratio(1, 100));
    let mut p = Problem::new(ds, params, FairnessNotion::Omr).with_uniform_omega(3);
    p.side = SideConstraints::default().with_max_size(3);
    let f = fit(&p, &exact(), false).unwrap();
    let sys = f.system.unwrap();
    assert!(sys.model_size() <= 3);
    let card = render_scorecard(&sys);
    assert_eq!(card.lines().filter(|l| l.contains("≤") || l.contains('=') && !l.contains("total")).count(), sys.model_size());
}

#[test]
fn seven_rule_scorecard_has_seven_rows() {
    let sys = ScoringSystem::from_coefficients(vec![-3, 1, -2, 3, 1, 1, -1, 2, 0, 0]);
    let card = render_scorecard(&sys);
    let rows = card.lines().filter(|l| l.split_whitespace().nth(1).is_some_and(|t| t.starts_with('x'))).count();
    assert_eq!(rows, 7);
}

#[test]
fn mps_round_trip_preserves_the_model() {
    let ds = six_patient_example();
    let params = WelfareParams::unit(6).with_rho_bar(ratio(1, 3)).with_penalties(ratio(1, 50), ratio(1, 500));
    let p = Problem::new(ds, params, FairnessNotion::Eodds).with_uniform_omega(2);
    let model = build(&p).unwrap();
    let text = export_mps(&model);
    let back = parse_mps(&text).unwrap();
    assert_eq!(export_mps(&back), text);
    let a = solve(&model, &exact()).unwrap();
    let b = solve(&back, &exact()).unwrap();
    assert_eq!(a.objective, b.objective);
    assert!(export_lp(&model).contains("Minimize"));
}

#[test]
fn fixed_delta_respects_the_cap() {
    let ds = six_patient_example();
    let p = Problem::new(ds, WelfareParams::unit(6), FairnessNotion::Sp)
        .with_uniform_omega(2)
        .with_mode(SolveMode::FixedDelta { delta: ratio(0, 1) });
    let f = fit(&p, &exact(), false).unwrap();
    assert_eq!(f.achieved_delta, Some(ratio(0, 1)));
}
