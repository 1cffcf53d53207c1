use std::fs;
use std::path::Path;

use fscontrol::cli_io::scenario::{solve_scenario, MANIFEST_FILE};
use fscontrol::cli_io::{
    export_from_manifest, load_config, parse_config, read_signal_csv, run_scenario, Manifest,
    ScenarioConfig,
};
use fscontrol::galerkin_system::simulate_controlled;
use fscontrol::Error;

fn example(name: &str) -> ScenarioConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../examples").join(name);
    load_config(path).unwrap()
}

fn read(dir: &Path, file: &str) -> String {
    fs::read_to_string(dir.join(file)).unwrap()
}

#[test]
fn shipped_reference_config_has_expected_settings() {
    let cfg = example("reference_2d.cfg");
    assert_eq!(cfg.lengths, vec![1.0, 1.0]);
    assert_eq!(cfg.order, 5);
    assert_eq!(cfg.rho_f, 8000.0);
    assert_eq!(cfg.t_final, 1.0);
    let c = cfg.constraint.as_ref().unwrap();
    assert_eq!(c.mu, vec![100.0]);
    assert_eq!(c.n_lambda, 30);
    assert_eq!(cfg.actuators.len(), 1);
}

#[test]
fn canonical_text_round_trips() {
    for name in ["reference_2d.cfg", "heat_1d.cfg"] {
        let cfg = example(name);
        let again = parse_config(&cfg.to_text()).unwrap();
        assert_eq!(again.to_text(), cfg.to_text(), "{name}");
    }
}

#[test]
fn run_writes_complete_manifest_and_csvs() {
    let cfg = example("heat_1d.cfg");
    let tmp = tempfile::tempdir().unwrap();
    let m = run_scenario(&cfg, tmp.path()).unwrap();

    let loaded = Manifest::load(tmp.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(loaded.to_json().unwrap(), m.to_json().unwrap());
    let json = read(tmp.path(), MANIFEST_FILE);
    for key in [
        "cost_j",
        "l2_norm_u",
        "linf_norm_u",
        "final_error_projected",
        "truncation_bound",
        "dual_value",
        "duality_gap",
        "relative_gap",
    ] {
        assert!(json.contains(&format!("\"{key}\"")), "{key} missing");
    }
    assert!(m.unconstrained.truncation.is_some());
    let c = m.constrained.as_ref().unwrap();
    assert!(c.report.linf_norm_u <= 10.0);
    assert!(c.report.duality_gap.unwrap() >= 0.0);

    for f in &m.files {
        assert!(tmp.path().join(f).is_file(), "{f}");
    }
    let n = cfg.output.samples;
    for f in ["control_unconstrained.csv", "control_constrained.csv"] {
        let text = read(tmp.path(), f);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,u1"));
        assert_eq!(lines.count(), n, "{f}");
    }
    let grid = cfg.output.field_grid;
    for f in ["target.csv", "final_state_unconstrained.csv", "final_state_constrained.csv"] {
        let text = read(tmp.path(), f);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,theta"));
        assert_eq!(lines.count(), grid, "{f}");
    }
}

#[test]
fn csv_signal_reproduces_final_state() {
    let cfg = example("heat_1d.cfg");
    let tmp = tempfile::tempdir().unwrap();
    let m = run_scenario(&cfg, tmp.path()).unwrap();
    let outcome = solve_scenario(&cfg).unwrap();
    let sys = &outcome.built.system;
    let u = read_signal_csv(tmp.path().join("control_constrained.csv")).unwrap();
    let err = (simulate_controlled(sys, &u).unwrap() - sys.theta_ro()).norm();
    let want = m.constrained.unwrap().report.final_error_projected;
    assert!((err - want).abs() <= 1e-6 * want.max(1.0), "{err} vs {want}");
}

#[test]
fn runs_are_deterministic_and_export_matches() {
    let cfg = example("heat_1d.cfg");
    let (a, b, c) = (
        tempfile::tempdir().unwrap(),
        tempfile::tempdir().unwrap(),
        tempfile::tempdir().unwrap(),
    );
    let m = run_scenario(&cfg, a.path()).unwrap();
    run_scenario(&cfg, b.path()).unwrap();
    let manifest = Manifest::load(a.path().join(MANIFEST_FILE)).unwrap();
    let written = export_from_manifest(&manifest, c.path()).unwrap();
    for f in m.files.iter().filter(|f| f.ends_with(".csv")) {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f} differs between runs");
        assert!(written.contains(f), "{f} not exported");
        assert_eq!(read(a.path(), f), read(c.path(), f), "{f} differs after export");
    }
}

#[test]
fn reference_manifest_cost_matches_table() {
    let mut cfg = example("reference_2d.cfg");
    cfg.constraint = None;
    let tmp = tempfile::tempdir().unwrap();
    let m = run_scenario(&cfg, tmp.path()).unwrap();
    let j = m.unconstrained.report.cost_j;
    assert!((j - 4978.0).abs() <= 0.01 * 4978.0, "{j}");
    assert_eq!(m.target.frustum_form.as_deref(), Some("min"));
    assert!((m.target.theta_ro_norm - 1.7289).abs() <= 5e-3);
}

#[test]
fn generous_bound_closes_the_gap() {
    let mut cfg = example("heat_1d.cfg");
    let free = solve_scenario(&ScenarioConfig {
        constraint: None,
        ..cfg.clone()
    })
    .unwrap();
    let peak = free.unconstrained_report.linf_norm_u;
    cfg.constraint.as_mut().unwrap().mu = vec![10.0 * peak];
    let out = solve_scenario(&cfg).unwrap();
    let c = out.constrained.unwrap();
    assert!(c.report.relative_gap.unwrap().abs() < 1e-6, "{:?}", c.report.relative_gap);
}

#[test]
fn unstable_operator_fails_at_a_named_stage() {
    let text = fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../examples/heat_1d.cfg"),
    )
    .unwrap()
    .replace("kind = heat\ndiffusivity = 1", "kind = general1d\n[coefficient.a]\nkind = constant\nvalue = 0.01\n[coefficient.b]\nkind = constant\nvalue = 0\n[coefficient.c]\nkind = constant\nvalue = -50");
    let cfg = parse_config(&text).unwrap();
    match solve_scenario(&cfg) {
        Err(Error::Stage { source, .. }) => {
            assert!(matches!(*source, Error::SpectralInstability { .. }), "{source}")
        }
        Err(e) => panic!("unexpected error {e}"),
        Ok(_) => panic!("unstable generator accepted"),
    }
}

#[test]
fn missing_file_is_an_io_error() {
    let err = load_config("/nonexistent/scenario.cfg").unwrap_err();
    assert!(matches!(err, Error::Io { .. }), "{err}");
}

#[test]
fn bad_value_names_its_key() {
    let text = "[scenario]\nname = x\n[domain]\nlengths = -1\n";
    match parse_config(text) {
        Err(Error::Validation { key, .. }) => assert!(key.contains("lengths"), "{key}"),
        other => panic!("{other:?}"),
    }
}
