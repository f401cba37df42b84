use std::f64::consts::PI;
use std::path::PathBuf;

use spde_lab_core::config::InitialCondition;
use spde_lab_core::theory::{concavity_monitor, MonitorInput, DEFAULT_A};
use spde_lab_core::{DiffusionSpec, Experiment, ExperimentConfig, Functional, TheoryVerdict};

fn load(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    ExperimentConfig::from_path(&path).unwrap()
}

#[test]
fn eigen_moment_demo_reports_every_labeled_bound() {
    let exp = Experiment::new(load("eigen_moment.toml")).unwrap();
    let eig = exp.oracle("eigen_moment_threshold").unwrap();
    let bounds = eig.report["bounds"].as_array().unwrap();
    let t = |label: &str| {
        bounds.iter().find(|b| b["label"] == label).unwrap()["t_star"].as_f64().unwrap()
    };
    let l1 = exp.simulator().lambda1();
    let eta0 = 4.0 * PI * PI;
    // ∫_{η0}^∞ dr / (g·r² − d·r) = ln(g·η0 / (g·η0 − d)) / d
    let closed = |d: f64, g: f64| (g * eta0 / (g * eta0 - d)).ln() / d;
    assert!((t("ode_as_stated") - closed(2.0 * l1, 2.0)).abs() < 1e-8);
    assert!((t("integral_as_printed") - closed(l1, 1.0)).abs() < 1e-8);
    assert!((t("ito_consistent") - closed(2.0 * l1, 1.0)).abs() < 1e-8);
    let cov = exp.oracle("covariance_bounds").unwrap();
    assert_eq!((cov.report["q1"].as_f64(), cov.report["q0"].as_f64()), (Some(1.0), Some(1.0)));
}

#[test]
fn zero_noise_gives_zero_stderr() {
    let mut cfg = load("eigen_moment.toml");
    cfg.model.diffusion = DiffusionSpec::zero();
    cfg.ensemble.m_paths = 16;
    let result = Experiment::new(cfg).unwrap().ensemble().unwrap();
    for s in &result.series.scalars {
        assert!(s.stderr.iter().all(|&e| e == 0.0), "{}", s.functional.name());
    }
}

#[test]
fn eps_threshold_applies_to_positive_power_drift() {
    let mut cfg = load("linear.toml");
    cfg.model.drift = spde_lab_core::DriftSpec::PowerPos { c0: 1.0, p: 2.0 };
    cfg.initial_condition = InitialCondition::ScaledEigenmode { c: 11.0 };
    let exp = Experiment::new(cfg).unwrap();
    let r = exp.oracle("eps_moment_threshold").unwrap();
    assert!(r.applicable);
    let l1 = exp.simulator().lambda1();
    let lambda_hat = 0.5 * l1 + 0.125;
    assert!((r.report["threshold"].as_f64().unwrap() - 2.0 * lambda_hat).abs() < 1e-12);
    assert_eq!(r.verdict, Some(TheoryVerdict::BlowupPredicted));
}

#[test]
fn additive_concavity_certificate_and_monitor() {
    let mut cfg = load("additive.toml");
    cfg.ensemble.m_paths = 32;
    let exp = Experiment::new(cfg).unwrap();
    let cert = exp.oracle("concavity_certificate").unwrap();
    assert_eq!(cert.verdict, Some(TheoryVerdict::BlowupPredicted));

    let result = exp.ensemble().unwrap();
    let v = result.series.scalar(&Functional::LpMoment { p: 2.0 }).unwrap();
    let h = result.series.scalar(&Functional::EnergyBalance).unwrap();
    let censored_from = v.censored.iter().position(|&c| c).unwrap_or(v.censored.len());
    let upto = censored_from.min(h.censored.iter().position(|&c| c).unwrap_or(usize::MAX));
    assert!(upto >= 3, "too few uncensored times: {upto}");
    let input = MonitorInput {
        times: result.series.times[..upto].to_vec(),
        v: v.estimates[..upto].to_vec(),
        h: h.estimates[..upto].to_vec(),
        h_stderr: h.stderr[..upto].to_vec(),
    };
    let traces = concavity_monitor(&input, 0.05, &DEFAULT_A).unwrap();
    assert!(traces.iter().any(|t| t.all_hold), "{traces:?}");
}

#[test]
fn whole_space_oracles() {
    let exp = Experiment::new(load("fujita.toml")).unwrap();
    let all = exp.oracles().unwrap();
    assert_eq!(all.len(), 2);
    assert_eq!(all[0].verdict, Some(TheoryVerdict::BlowupPredicted));
    assert!(exp.simulator().config().whole_space);
}
