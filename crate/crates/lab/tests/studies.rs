use sfc_lab::{run_experiment, Config, Experiment};

#[test]
fn crr_study_stays_in_its_envelope() {
    let r = run_experiment(Experiment::CrrConverge, &Config::default()).unwrap();
    let slope = r.summary_value("slope.abs_error").unwrap();
    assert!((-1.3..=-0.7).contains(&slope), "{slope}");
    assert!(r.summary_value("final_abs_error").unwrap() < 5e-3);
}

#[test]
fn beta_check_separates_exact_and_bumped_prices() {
    let r = run_experiment(Experiment::BetaCheck, &Config::default()).unwrap();
    assert!((r.summary_value("one_step.c").unwrap() - 50.0 / 7.0).abs() < 1e-12);
    assert!(r.summary_value("one_step.gap").unwrap().abs() <= 1e-12);
    assert!(r.summary_value("bumped.gap").unwrap().abs() >= 1e-4);
    assert!(r.summary_value("lattice.max_abs_gap").unwrap() <= 1e-12);
}

#[test]
fn greeks_report_satisfies_identities() {
    let r = run_experiment(Experiment::Greeks, &Config::default()).unwrap();
    assert!(r.summary_value("identity_value").unwrap().abs() <= 1e-12 * 100.0);
    assert!(r.summary_value("identity_drift").unwrap().abs() <= 1e-10 * 100.0);
    assert!(r.summary_value("pde_residual").unwrap().abs() <= 1e-10 * 100.0);
}

#[test]
fn theta_check_passes_on_a_modest_ensemble() {
    let r = run_experiment(Experiment::ThetaCheck, &Config { n_paths: 2000, ..Config::default() }).unwrap();
    assert_eq!(r.summary_value("passed"), Some(1.0));
    assert!(r.summary_value("max_abs_terminal_theta").unwrap() <= 1e-6);
}
