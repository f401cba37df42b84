//! Binds a validated [`ExperimentConfig`] to a simulator and evaluates the
//! analytic oracles whose hypotheses the configured model satisfies.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::ensemble::{run_ensemble, EnsembleResult};
use crate::error::{Error, Result};
use crate::integrator::{PathResult, Simulator};
use crate::model::{verify_bounds, DiffusionKind, DriftSpec};
use crate::noise::{covariance_bounds, NoiseModel};
use crate::theory::{
    concavity_certificate, eigen_moment_threshold, eps_moment_threshold, fujita_classify, global_existence_condition,
    growth_conditions_check, kaplan_ode_solve, whole_space_noise_classify, FujitaClass, KaplanParams, TheoryVerdict,
    WholeSpaceCase, WholeSpaceNoise,
};

/// Outcome of one oracle. Oracles whose hypotheses do not apply are listed
/// with `applicable = false` and the reason in `note`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub name: String,
    pub applicable: bool,
    pub verdict: Option<TheoryVerdict>,
    pub note: Option<String>,
    pub report: Value,
}

impl OracleResult {
    fn skipped(name: &str, why: impl Into<String>) -> Self {
        OracleResult {
            name: name.into(),
            applicable: false,
            verdict: None,
            note: Some(why.into()),
            report: Value::Null,
        }
    }

    fn done(name: &str, verdict: Option<TheoryVerdict>, report: impl Serialize) -> Result<Self> {
        Ok(OracleResult {
            name: name.into(),
            applicable: true,
            verdict,
            note: None,
            report: serde_json::to_value(report)?,
        })
    }
}

/// Labels of the three comparison ODEs reported for the eigen moment.
pub const ODE_LABELS: [&str; 3] = ["ode_as_stated", "integral_as_printed", "ito_consistent"];

#[derive(Debug, Clone)]
pub struct Experiment {
    config: ExperimentConfig,
    simulator: Simulator,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let grid = config.grid()?;
        let (_, phi) = crate::grid::principal_eigenpair(&grid)?;
        let u0 = config.initial_condition.field(grid, &phi)?;
        let mut solver = config.solver.clone();
        solver.whole_space |= config.is_whole_space();
        let simulator = Simulator::new(config.model, u0, config.noise, solver)?;
        Ok(Experiment { config, simulator })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn simulator(&self) -> &Simulator {
        &self.simulator
    }

    /// One path of the configured ensemble.
    pub fn simulate(&self, path_index: u64) -> PathResult {
        self.simulator.run(self.config.ensemble.base_seed, path_index)
    }

    pub fn ensemble(&self) -> Result<EnsembleResult> {
        run_ensemble(&self.simulator, &self.config.ensemble)
    }

    /// `(q1, q0)`, the extremes of the spatial covariance, when the noise has one.
    pub fn covariance_constants(&self) -> Option<(f64, f64)> {
        match self.config.noise {
            NoiseModel::Correlated { covariance } => {
                Some(covariance_bounds(|x, y| covariance.eval(x, y), self.simulator.grid()))
            }
            NoiseModel::ScalarBrownian => Some((1.0, 1.0)),
            _ => None,
        }
    }

    /// The three eigen-moment comparison ODEs, in [`ODE_LABELS`] order, or
    /// the reason they do not apply.
    pub fn eigen_moment_odes(&self) -> std::result::Result<Vec<(String, KaplanParams)>, String> {
        let report = self.eigen_threshold_report()?;
        Ok(report
            .bounds
            .iter()
            .map(|b| {
                let p = KaplanParams {
                    lambda1: self.simulator.lambda1(),
                    gain: b.gain,
                    damp: b.damp,
                    gamma_exp: b.gamma_exp,
                    eta0: b.eta0,
                };
                (b.label.clone(), p)
            })
            .collect())
    }

    fn eigen_threshold_report(&self) -> std::result::Result<crate::theory::ThresholdReport, String> {
        if self.config.is_whole_space() {
            return Err("requires a bounded domain".into());
        }
        let b = self.config.model.diffusion.bounds.ok_or("requires declared diffusion bounds")?;
        if !(b.gamma > 1.0) {
            return Err(format!("requires a superlinear lower bound, gamma = {}", b.gamma));
        }
        let (q1, _) = self.covariance_constants().ok_or("requires correlated or scalar noise")?;
        if !(q1 > 0.0) {
            return Err(format!("requires q1 > 0, got {q1}"));
        }
        let sim = &self.simulator;
        eigen_moment_threshold(sim.u0(), sim.phi(), b.gamma, q1, b.c1, sim.lambda1()).map_err(|e| e.to_string())
    }

    /// Evaluates every selected oracle, in canonical order.
    pub fn oracles(&self) -> Result<Vec<OracleResult>> {
        self.config.selected_oracles().into_iter().map(|n| self.oracle(n)).collect()
    }

    pub fn oracle(&self, name: &str) -> Result<OracleResult> {
        let cfg = &self.config;
        let sim = &self.simulator;
        let model = &cfg.model;
        match name {
            "diffusion_bounds" => match model.diffusion.bounds {
                Some(_) => OracleResult::done(name, None, verify_bounds(&model.diffusion)),
                None => Ok(OracleResult::skipped(name, "no diffusion bounds declared")),
            },
            "covariance_bounds" => match self.covariance_constants() {
                Some((q1, q0)) => OracleResult::done(name, None, json!({ "q1": q1, "q0": q0 })),
                None => Ok(OracleResult::skipped(name, "noise has no bounded spatial covariance")),
            },
            "eigen_moment_threshold" => match self.eigen_threshold_report() {
                Ok(r) => OracleResult::done(name, Some(r.verdict), &r),
                Err(why) => Ok(OracleResult::skipped(name, why)),
            },
            "kaplan_ode" => match self.eigen_moment_odes() {
                Ok(odes) => {
                    let mut out = serde_json::Map::new();
                    for (label, p) in odes {
                        let traj = kaplan_ode_solve(p, cfg.solver.t_end, &cfg.solver.record_times)?;
                        out.insert(label, serde_json::to_value(traj)?);
                    }
                    let verdict = out
                        .get("ito_consistent")
                        .and_then(|t| t.get("verdict"))
                        .and_then(|v| serde_json::from_value(v.clone()).ok());
                    OracleResult::done(name, verdict, Value::Object(out))
                }
                Err(why) => Ok(OracleResult::skipped(name, why)),
            },
            "eps_moment_threshold" => {
                let DriftSpec::PowerPos { c0, p } = model.drift else {
                    return Ok(OracleResult::skipped(name, "requires a drift c0·max(u,0)^p, nonnegative below zero"));
                };
                let Some(b) = model.diffusion.bounds.filter(|b| b.gamma1 == 1.0) else {
                    return Ok(OracleResult::skipped(name, "requires a linear upper diffusion bound |σ| ≤ c2·|u|"));
                };
                let Some((_, q0)) = self.covariance_constants() else {
                    return Ok(OracleResult::skipped(name, "requires correlated or scalar noise"));
                };
                if cfg.is_whole_space() || !(p > 1.0) {
                    return Ok(OracleResult::skipped(name, "requires a bounded domain and p > 1"));
                }
                let eps = cfg.oracle_params.eps;
                let r = eps_moment_threshold(sim.u0(), sim.phi(), eps, p, q0, c0, b.c2, sim.lambda1())?;
                OracleResult::done(name, Some(r.verdict), &r)
            }
            "global_existence_condition" => {
                let Some((_, p)) = model.drift.power() else {
                    return Ok(OracleResult::skipped(name, "requires a power drift"));
                };
                let Some(b) = model.diffusion.bounds.filter(|b| b.gamma == b.gamma1) else {
                    return Ok(OracleResult::skipped(name, "requires σ² bounded above and below by the same power"));
                };
                // σ² ~ u^m
                let m = 2.0 * b.gamma;
                let c = global_existence_condition(m, p, Some(cfg.oracle_params.eps));
                let hypotheses = model.drift.nonnegative_below_zero()
                    && self.covariance_constants().is_some_and(|(q1, _)| q1 > 0.0)
                    && !cfg.is_whole_space();
                let verdict = if c.holds && hypotheses {
                    TheoryVerdict::GlobalPredicted
                } else {
                    TheoryVerdict::Indeterminate
                };
                OracleResult::done(name, Some(verdict), json!({ "m": m, "p": p, "condition": c }))
            }
            "growth_conditions" => {
                let drift = model.drift.power().filter(|&(_, p)| p > 1.0);
                let noise = model
                    .diffusion
                    .bounds
                    .zip(self.covariance_constants())
                    .filter(|(b, (q1, _))| b.gamma > 0.5 && *q1 > 0.0);
                if cfg.is_whole_space() || (drift.is_none() && noise.is_none()) {
                    return Ok(OracleResult::skipped(name, "requires a bounded domain and a superlinear drift or noise"));
                }
                let f = drift.map(|(c0, p)| move |r: f64| c0 * r.powf(p));
                let g = noise.map(|(b, _)| move |r: f64| b.c1 * b.c1 * r.powf(2.0 * b.gamma));
                let q1 = noise.map_or(0.0, |(_, (q1, _))| q1);
                let u_hat = crate::grid::inner_product(sim.u0(), sim.phi())?;
                let r0 = cfg.oracle_params.scan_start;
                let r = growth_conditions_check(
                    f.as_ref().map(|f| f as &dyn Fn(f64) -> f64),
                    g.as_ref().map(|g| g as &dyn Fn(f64) -> f64),
                    q1,
                    sim.lambda1(),
                    r0,
                    r0,
                    u_hat,
                )?;
                OracleResult::done(name, Some(r.verdict), &r)
            }
            "concavity_certificate" => {
                let DiffusionKind::Additive { amplitude } = model.diffusion.kind else {
                    return Ok(OracleResult::skipped(name, "requires additive noise"));
                };
                let Some((_, p)) = model.drift.power().filter(|&(c0, p)| p > 1.0 && c0 == 1.0) else {
                    return Ok(OracleResult::skipped(name, "requires the drift |u|^(p−1)·u or u^p with unit coefficient"));
                };
                let grad = move |x: f64, t: f64| amplitude.gradient(x, t);
                let c = concavity_certificate(sim.u0(), &grad, p, cfg.oracle_params.concavity_horizon)?;
                OracleResult::done(name, Some(c.verdict), &c)
            }
            "fujita_classify" => {
                let Some((_, p)) = model.drift.power() else {
                    return Ok(OracleResult::skipped(name, "requires a power drift"));
                };
                if !cfg.is_whole_space() {
                    return Ok(OracleResult::skipped(name, "requires a whole-space domain"));
                }
                let class = fujita_classify(p, 1);
                let verdict = match class {
                    FujitaClass::BlowupAllNontrivial => TheoryVerdict::BlowupPredicted,
                    FujitaClass::SublinearGlobalNonunique => TheoryVerdict::GlobalPredicted,
                    _ => TheoryVerdict::Indeterminate,
                };
                OracleResult::done(name, Some(verdict), json!({ "p": p, "d": 1, "class": class }))
            }
            "whole_space_classify" => {
                if !cfg.is_whole_space() {
                    return Ok(OracleResult::skipped(name, "requires a whole-space domain"));
                }
                let noise = match cfg.noise {
                    NoiseModel::SpaceTimeWhite => WholeSpaceNoise::SpaceTimeWhite,
                    NoiseModel::ScalarBrownian => WholeSpaceNoise::ScalarBrownian,
                    NoiseModel::Correlated { .. } => WholeSpaceNoise::Correlated,
                    NoiseModel::AdditiveAmplitude => {
                        return Ok(OracleResult::skipped(name, "additive noise is not classified"));
                    }
                };
                let Some(m) = model.diffusion.exponent() else {
                    return Ok(OracleResult::skipped(name, "requires a power-law diffusion"));
                };
                let case = WholeSpaceCase {
                    noise,
                    m,
                    d: 1,
                    drift_exponent: model.drift.power().map(|(_, p)| p),
                };
                OracleResult::done(name, Some(whole_space_noise_classify(&case)), case)
            }
            other => Err(Error::UnknownOracle {
                name: other.into(),
                valid: crate::config::ORACLE_NAMES.join(", "),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn demo() -> ExperimentConfig {
        ExperimentConfig::from_toml(crate::config::tests::DEMO).unwrap()
    }

    #[test]
    fn demo_thresholds_carry_labeled_bounds() {
        let mut cfg = demo();
        cfg.oracles.clear();
        let exp = Experiment::new(cfg).unwrap();
        let results = exp.oracles().unwrap();
        assert_eq!(results.len(), crate::config::ORACLE_NAMES.len());
        let eig = results.iter().find(|r| r.name == "eigen_moment_threshold").unwrap();
        assert!(eig.applicable);
        assert_eq!(eig.verdict, Some(TheoryVerdict::BlowupPredicted));
        let labels: Vec<&str> = eig.report["bounds"]
            .as_array()
            .unwrap()
            .iter()
            .map(|b| b["label"].as_str().unwrap())
            .collect();
        assert_eq!(labels, ODE_LABELS);
        let u_hat = eig.report["hypotheses"]["u0_phi"].as_f64().unwrap();
        assert!((u_hat - 2.0 * PI).abs() < 1e-9);

        let ode = results.iter().find(|r| r.name == "kaplan_ode").unwrap();
        let t = ode.report["ito_consistent"]["blowup_time"].as_f64().unwrap();
        // η' = −2λ1η + η², η0 = 4π²
        let l1 = exp.simulator().lambda1();
        let exact = -(1.0 - 2.0 * l1 / (4.0 * PI * PI)).ln() / (2.0 * l1);
        assert!((t - exact).abs() < 1e-6 * exact);

        let fujita = results.iter().find(|r| r.name == "fujita_classify").unwrap();
        assert!(!fujita.applicable && fujita.note.is_some());
    }

    #[test]
    fn unknown_oracle_is_an_error() {
        let exp = Experiment::new(demo()).unwrap();
        assert!(matches!(exp.oracle("nope"), Err(Error::UnknownOracle { .. })));
    }

    #[test]
    fn whole_space_flag_follows_domain() {
        let text = crate::config::tests::DEMO
            .replace("domain = { kind = \"bounded\", a = 0.0, b = 1.0 }", "domain = { kind = \"whole_space\", half_width = 5.0 }");
        let exp = Experiment::new(ExperimentConfig::from_toml(&text).unwrap()).unwrap();
        assert!(exp.simulator().config().whole_space);
        let r = exp.oracle("whole_space_classify").unwrap();
        assert_eq!(r.verdict, Some(TheoryVerdict::Indeterminate));
        assert!(!exp.oracle("eigen_moment_threshold").unwrap().applicable);
    }
}
