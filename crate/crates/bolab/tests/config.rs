use std::fs;

use bolab::{execute, DataKind, ExperimentConfig, Scenario};
use bolab_core::data::gaussian_derivative;
use bolab_core::Grid;

#[test]
fn every_reference_config_round_trips_and_checks() {
    for s in Scenario::ALL {
        let cfg = ExperimentConfig::reference(s);
        cfg.check().unwrap();
        let back = ExperimentConfig::parse(s, &cfg.to_text(), std::path::Path::new(".")).unwrap();
        assert_eq!(back, cfg, "{s}");
    }
    assert_ne!(ExperimentConfig::reference(Scenario::Pairdiff).data.shift, 0.0);
    assert_eq!(ExperimentConfig::reference(Scenario::Twotime).data.kind, DataKind::GaussianSecondDerivative);
}

#[test]
fn samples_file_reproduces_the_analytic_datum() {
    let dir = tempfile::tempdir().unwrap();
    let sub = dir.path().join("cfg");
    fs::create_dir(&sub).unwrap();
    let g = Grid::new(2048, 200.0).unwrap();
    let u = gaussian_derivative(g, 1.0, 1.0, 0.0).unwrap();
    let text: Vec<String> = u.values().iter().map(|v| format!("{v:e}")).collect();
    fs::write(sub.join("u0.txt"), text.join("\n")).unwrap();
    let path = sub.join("run.cfg");
    fs::write(
        &path,
        "# samples of the canonical datum\nscenario = eterm_table\ngrid.n = 2048\ngrid.length = 200\n\
         data.kind = custom_samples\ndata.samples = u0.txt\n",
    )
    .unwrap();
    let custom = ExperimentConfig::from_file(Scenario::EtermTable, &path).unwrap();
    assert_eq!(custom.data.samples.as_deref(), Some(sub.join("u0.txt").as_path()));

    let mut analytic = custom.clone();
    analytic.data.kind = DataKind::GaussianDerivative;
    analytic.data.samples = None;
    let (_, a) = execute(&analytic, 0).unwrap();
    let (_, c) = execute(&custom, 0).unwrap();
    let table = |ts: &[bolab::Table]| ts.iter().find(|t| t.name == "eterm").unwrap().to_csv().unwrap();
    assert_eq!(table(&a), table(&c));
}

#[test]
fn scenario_key_must_match_the_request() {
    let err = ExperimentConfig::parse(Scenario::Tstar, "scenario = momentum\n", std::path::Path::new(".")).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}
