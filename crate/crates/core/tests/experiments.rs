use std::fs;

use lyapunov_gates::config::{scenario_from_kv, KeyValues};
use lyapunov_gates::experiments::{
    equivalence_run, evaluate_scenario, preset, run_scenario, tau_sweep, tau_sweep_values, write_equivalence,
    ScenarioConfig,
};
use lyapunov_gates::invariants::free_ising_distance;

fn short(name: &str, t_max: f64) -> ScenarioConfig {
    ScenarioConfig { t_max, ..preset(name).unwrap() }
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for sub in ["a", "b"] {
        let s = ScenarioConfig { output_path: dir.path().join(sub), ..short("fig2", 20.0) };
        run_scenario(&s).unwrap();
        texts.push(fs::read(dir.path().join(sub).join("fig2.csv")).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn metadata_sidecar_reproduces_the_preset() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["fig1", "fig2", "fig4"] {
        let s = ScenarioConfig { output_path: dir.path().to_path_buf(), ..short(name, 0.5) };
        run_scenario(&s).unwrap();
        let meta = dir.path().join(format!("{name}.meta"));
        let parsed = scenario_from_kv(&KeyValues::read(&meta).unwrap()).unwrap();
        assert_eq!(parsed, s);
        let text = fs::read_to_string(&meta).unwrap();
        let expected: &[&str] = match name {
            "fig1" => &["omega1 = 1", "gain = 0.05", "tau = 1"],
            "fig2" => &["omega1 = 1", "omega2 = 2", "coupling = 0.05", "gain = 0.1", "tau = 0.3"],
            _ => &["omega1 = 1", "omega2 = 2", "coupling = 0.2", "gain = 0.2", "tau = 0.2"],
        };
        for line in expected {
            assert!(text.lines().any(|l| l == *line), "{name}: missing `{line}`");
        }
    }
}

#[test]
fn csv_gains_distance_column_with_invariants() {
    let dir = tempfile::tempdir().unwrap();
    let s = ScenarioConfig { output_path: dir.path().to_path_buf(), record_invariants: true, ..short("fig2", 1.0) };
    run_scenario(&s).unwrap();
    let text = fs::read_to_string(dir.path().join("fig2.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("t,V,F,f1,D"));
    assert_eq!(text.lines().count(), 1 + 21);
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let s = ScenarioConfig { output_path: blocker.join("sub"), ..short("fig1", 0.1) };
    let err = run_scenario(&s).unwrap_err();
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn sweep_rows_match_standalone_runs() {
    let base = short("fig2", 10.0);
    let grid = tau_sweep(&base, -1.0, 1.0, 3, 10.0).unwrap();
    assert_eq!(grid.tau_values, vec![-1.0, 0.0, 1.0]);
    assert_eq!(grid.fidelity.len(), 3);
    for (tau, row) in grid.tau_values.iter().zip(&grid.fidelity) {
        assert_eq!(row.len(), grid.t_values.len());
        let single = evaluate_scenario(&ScenarioConfig { tau: *tau, ..base.clone() }).unwrap();
        for (f, s) in row.iter().zip(&single.trace.samples) {
            assert!((f - s.fidelity).abs() <= 1e-12);
        }
        assert!(row.iter().all(|f| (0.0..=1.0 + 1e-9).contains(f)));
    }
}

#[test]
fn repeated_tau_gives_identical_rows() {
    let grid = tau_sweep_values(&short("fig2", 5.0), &[0.3, 0.3], 5.0).unwrap();
    assert_eq!(grid.fidelity[0], grid.fidelity[1]);
}

#[test]
fn degenerate_tau_row_stands_out() {
    let base = short("fig2", 30.0);
    let grid = tau_sweep_values(&base, &[-0.3, 0.0, 0.3], 30.0).unwrap();
    let degenerate = evaluate_scenario(&ScenarioConfig { tau: 0.0, ..base.clone() }).unwrap();
    assert!(degenerate.degenerate_start);
    assert!(degenerate.trace.samples.iter().take(20).all(|s| s.fields[0].abs() < 1e-12));
    let neighbour = evaluate_scenario(&ScenarioConfig { tau: 0.3, ..base }).unwrap();
    assert!(!neighbour.degenerate_start);
    let gap = grid.fidelity[1].iter().zip(&grid.fidelity[2]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(gap > 0.05, "gap {gap}");
}

#[test]
fn ising_equivalence_persists_after_switch_off() {
    let base = ScenarioConfig { t_max: 500.0, ..preset("fig5a").unwrap() };
    let out = equivalence_run(&base, None).unwrap();
    assert!(out.settled);
    let d_off = out.distance_at_off().unwrap();
    assert!(out.max_distance_after_off() < 1e-2);
    assert!(out.max_distance_after_off() <= 2.0 * d_off.max(1e-6), "{} vs {d_off}", out.max_distance_after_off());
    assert!((out.baseline[0].1 - 5.0f64.sqrt()).abs() < 1e-12);
    for &(t, d) in &out.baseline {
        assert!((d - free_ising_distance(0.05, t)).abs() < 1e-9);
    }
    // Controls are silent after the switch-off.
    assert!(out.trace.samples.iter().filter(|s| s.t > out.t_off).all(|s| s.fields[0] == 0.0));

    let dir = tempfile::tempdir().unwrap();
    write_equivalence(&ScenarioConfig { output_path: dir.path().to_path_buf(), ..base }, &out).unwrap();
    let baseline = fs::read_to_string(dir.path().join("fig5a_baseline.csv")).unwrap();
    assert_eq!(baseline.lines().next(), Some("t,D"));
    let meta = fs::read_to_string(dir.path().join("fig5a.meta")).unwrap();
    assert!(meta.contains("control_off_time = "));
    assert!(!meta.contains("control_off_time = none"));
}

#[test]
fn heisenberg_equivalence_is_looser_than_ising() {
    let ising = equivalence_run(&ScenarioConfig { t_max: 500.0, ..preset("fig5a").unwrap() }, Some(300.0)).unwrap();
    let heis = equivalence_run(&ScenarioConfig { t_max: 500.0, ..preset("fig5b").unwrap() }, Some(300.0)).unwrap();
    assert!(heis.min_distance() > ising.min_distance());
    let after = heis.max_distance_after_off();
    assert!(after > 1e-3 && after < 1.0, "{after}");
}

#[test]
fn coarse_ising_sweep_reaches_high_fidelity() {
    // τ across [−1/J, 1/J] for J = 0.05.
    let grid = tau_sweep(&preset("fig2").unwrap(), -20.0, 20.0, 5, 500.0).unwrap();
    let (_, _, f) = grid.global_max();
    assert!(f >= 0.99, "max F {f}");
}
