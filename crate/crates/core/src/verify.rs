//! Acceptance criteria, each a self-contained run with pinned parameters
//! and tolerances, grouped into named suites.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::ensemble::{empirical_vs_ode_lower_bound, run_ensemble, EnsembleConfig, Functional};
use crate::error::{Error, Result};
use crate::grid::{inner_product, principal_eigenpair, Field, GridSpec};
use crate::integrator::{SolverConfig, Simulator, Verdict};
use crate::kernel::{kernel_1d, kernel_mass, kernel_product_bound_scan, kernel_self_convolution, KernelConvention};
use crate::model::{DiffusionSpec, DriftSpec, ModelSpec};
use crate::noise::{Covariance, NoiseModel};
use crate::theory::*;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub elapsed_secs: f64,
    pub budget_secs: f64,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:>2} {} {}: {} ({:.2} s of {:.0} s)",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.elapsed_secs,
            self.budget_secs
        )
    }
}

/// Collects named sub-checks; the criterion passes when all of them do.
#[derive(Default)]
struct Checks {
    failures: Vec<String>,
    count: usize,
}

impl Checks {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.count += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    fn close(&mut self, label: &str, got: f64, want: f64, tol: f64) {
        self.check((got - want).abs() <= tol, || format!("{label}: {got} vs {want} (tol {tol:e})"));
    }

    fn summary(&self) -> String {
        if self.failures.is_empty() {
            format!("{} checks", self.count)
        } else {
            format!("{} of {} checks failed: {}", self.failures.len(), self.count, self.failures.join("; "))
        }
    }
}

fn timed(id: u8, name: &str, budget_secs: f64, body: impl FnOnce() -> Result<(bool, String)>) -> Result<CriterionResult> {
    let start = Instant::now();
    let (ok, detail) = body()?;
    let elapsed_secs = start.elapsed().as_secs_f64();
    let in_budget = elapsed_secs <= budget_secs;
    let detail = if in_budget { detail } else { format!("{detail}; over the time budget") };
    Ok(CriterionResult {
        id,
        name: name.into(),
        passed: ok && in_budget,
        detail,
        elapsed_secs,
        budget_secs,
    })
}

fn from_checks(c: Checks) -> Result<(bool, String)> {
    Ok((c.failures.is_empty(), c.summary()))
}

/// Principal eigenpair on (0, 1) with n = 256.
pub fn criterion_1() -> Result<CriterionResult> {
    timed(1, "eigenpair accuracy", 1.0, || {
        let g = GridSpec::new(0.0, 1.0, 256)?;
        let (l1, phi) = principal_eigenpair(&g)?;
        let mut c = Checks::default();
        c.close("lambda1 relative error", (l1 - PI * PI).abs() / (PI * PI), 0.0, 1e-3);
        c.close("∫φ", phi.integral(), 1.0, 1e-12);
        c.check(phi.min() >= 0.0, || format!("min φ = {}", phi.min()));
        from_checks(c)
    })
}

/// Blowup-time quadrature against the separable closed forms.
pub fn criterion_2() -> Result<CriterionResult> {
    timed(2, "blowup-time quadrature", 1.0, || {
        let mut c = Checks::default();
        let pi2 = PI * PI;
        let a = blowup_time_bound(2.0 * pi2, pi2, 1.0, 2.0).t_star.unwrap_or(f64::NAN);
        c.close("T*(gain 1, damp π²)", a, LN_2 / pi2, 1e-8);
        let b = blowup_time_bound(2.0 * pi2, 2.0 * pi2, 2.0, 2.0).t_star.unwrap_or(f64::NAN);
        c.close("T*(gain 2, damp 2π²)", b, LN_2 / (2.0 * pi2), 1e-8);
        from_checks(c)
    })
}

/// Outcome of the eigen-moment comparison over repeated seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub seeds: usize,
    pub checkpoints: usize,
    /// Checkpoints passing against the chosen (Itô-consistent) bound.
    pub passed: usize,
    /// Of those, checkpoints that pass only because the estimate is censored.
    pub passed_censored: usize,
    /// Checkpoints passing against the bound with gain `2q1C1²`.
    pub passed_as_stated: usize,
    pub ode_blowup_time: f64,
    /// Blown fraction at twice the ODE blowup time, per seed.
    pub blown_at_twice: Vec<f64>,
}

pub const C3_SEEDS: u64 = 20;
pub const C3_PATHS: usize = 200;

/// The comparison experiment: σ = u², constant covariance, (u0, φ) = 2π.
pub fn eigen_moment_comparison(seeds: u64, m_paths: usize) -> Result<ComparisonSummary> {
    let g = GridSpec::new(0.0, 1.0, 64)?;
    let (l1, phi) = principal_eigenpair(&g)?;
    let u0 = phi.scaled(2.0 * PI / inner_product(&phi, &phi)?);
    let eta0 = inner_product(&u0, &phi)?.powi(2);
    let ode = |gain: f64, times: &[f64]| {
        kaplan_ode_solve(KaplanParams { lambda1: l1, gain, damp: 2.0 * l1, gamma_exp: 2.0, eta0 }, 1.0, times)
    };
    let t_b = ode(1.0, &[])?
        .blowup_time
        .ok_or_else(|| Error::invalid("comparison ODE does not blow up"))?;
    let checkpoints: Vec<f64> = (1..=5).map(|k| k as f64 * t_b / 6.0).collect();
    let ito = ode(1.0, &checkpoints)?.checkpoints;
    let stated = ode(2.0, &checkpoints)?.checkpoints;

    let mut times = checkpoints.clone();
    times.push(2.0 * t_b);
    let model = ModelSpec {
        drift: DriftSpec::Zero,
        diffusion: DiffusionSpec::power_abs(1.0, 2.0),
    };
    let noise = NoiseModel::Correlated {
        covariance: Covariance::Constant { value: 1.0 },
    };
    let sim = Simulator::new(model, u0, noise, SolverConfig::new(1e-4, 2.0 * t_b, times))?;

    let mut out = ComparisonSummary {
        seeds: seeds as usize,
        checkpoints: 0,
        passed: 0,
        passed_censored: 0,
        passed_as_stated: 0,
        ode_blowup_time: t_b,
        blown_at_twice: Vec::new(),
    };
    for seed in 0..seeds {
        let cfg = EnsembleConfig {
            m_paths,
            base_seed: 1000 + seed,
            functionals: vec![Functional::SquaredEigenMoment],
        };
        let r = run_ensemble(&sim, &cfg)?;
        let check = empirical_vs_ode_lower_bound(&r.series, &ito, 0.0)?;
        let as_stated = empirical_vs_ode_lower_bound(&r.series, &stated, 0.0)?;
        out.checkpoints += check.checkpoints.len();
        out.passed += check.checkpoints.iter().filter(|c| c.pass).count();
        out.passed_censored += check.checkpoints.iter().filter(|c| c.pass && c.censored).count();
        out.passed_as_stated += as_stated.checkpoints.iter().filter(|c| c.pass).count();
        out.blown_at_twice.push(*r.series.blown_fraction.last().unwrap_or(&0.0));
    }
    Ok(out)
}

/// Eigen-moment lower bound and blowup fraction for σ = u².
pub fn criterion_3() -> Result<CriterionResult> {
    timed(3, "eigen-moment comparison", 600.0, || {
        let s = eigen_moment_comparison(C3_SEEDS, C3_PATHS)?;
        let fraction = s.passed as f64 / s.checkpoints as f64;
        let min_blown = s.blown_at_twice.iter().copied().fold(f64::INFINITY, f64::min);
        let max_blown = s.blown_at_twice.iter().copied().fold(0.0, f64::max);
        let ok = fraction >= 0.95 && min_blown >= 0.5;
        let detail = format!(
            "(a) {}/{} checkpoints pass the Itô-consistent bound ({} only by censoring), {}/{} pass the as-stated bound; \
             (b) blown fraction at 2T = {:.4} ranges {min_blown:.3}..{max_blown:.3} over seeds, need ≥ 0.5",
            s.passed, s.checkpoints, s.passed_censored, s.passed_as_stated, s.checkpoints, 2.0 * s.ode_blowup_time
        );
        Ok((ok, detail))
    })
}

/// σ = u with a scalar Brownian motion: `E(u, φ)² = û0²·e^{(1 − 2λ1)t}`.
pub fn criterion_4() -> Result<CriterionResult> {
    timed(4, "linear closed-form moment", 60.0, || {
        let g = GridSpec::new(0.0, 1.0, 64)?;
        let (l1, phi) = principal_eigenpair(&g)?;
        let u0 = phi.scaled(1.0 / inner_product(&phi, &phi)?);
        let times = vec![0.05, 0.1, 0.2];
        let model = ModelSpec { drift: DriftSpec::Zero, diffusion: DiffusionSpec::linear(1.0) };
        let sim = Simulator::new(model, u0, NoiseModel::ScalarBrownian, SolverConfig::new(1e-4, 0.2, times))?;
        let cfg = EnsembleConfig { m_paths: 500, base_seed: 4, functionals: vec![Functional::SquaredEigenMoment] };
        let r = run_ensemble(&sim, &cfg)?;
        let s = r.series.scalar(&Functional::SquaredEigenMoment).expect("requested");
        let mut c = Checks::default();
        for (k, &t) in r.series.times.iter().enumerate() {
            let exact = ((1.0 - 2.0 * l1) * t).exp();
            let z = (s.estimates[k] - exact).abs() / s.stderr[k];
            c.check(z <= 3.0 && !s.censored[k], || format!("t={t}: {} ± {} vs {exact}", s.estimates[k], s.stderr[k]));
        }
        from_checks(c)
    })
}

/// Solutions with σ = |u| under space-time white noise stay nonnegative.
pub fn criterion_5() -> Result<CriterionResult> {
    timed(5, "positivity", 60.0, || {
        let g = GridSpec::new(0.0, 1.0, 64)?;
        let u0 = Field::from_fn(g, |x| (PI * x).sin());
        let model = ModelSpec { drift: DriftSpec::Zero, diffusion: DiffusionSpec::power_abs(1.0, 1.0) };
        let times: Vec<f64> = (0..=10).map(|k| k as f64 * 0.01).collect();
        let sim = Simulator::new(model, u0, NoiseModel::SpaceTimeWhite, SolverConfig::new(1e-4, 0.1, times))?;
        let cfg = EnsembleConfig { m_paths: 100, base_seed: 5, functionals: vec![Functional::SquaredEigenMoment] };
        let r = run_ensemble(&sim, &cfg)?;
        let worst = r
            .paths
            .iter()
            .map(|p| p.min_value / p.max_sup.max(1.0))
            .fold(f64::INFINITY, f64::min);
        let blown = r.blown_paths();
        Ok((worst >= -1e-6 && blown == 0, format!("worst min u / max(1, sup|u|) = {worst:.3e}, {blown} blowups")))
    })
}

fn fujita_run(p: f64, u0: impl Fn(f64) -> f64, dt0: f64, t_end: f64, times: Vec<f64>) -> Result<crate::integrator::PathResult> {
    let g = GridSpec::symmetric(20.0, 1024)?;
    let model = ModelSpec { drift: DriftSpec::PowerPos { c0: 1.0, p }, diffusion: DiffusionSpec::zero() };
    let mut cfg = SolverConfig::new(dt0, t_end, times);
    cfg.whole_space = true;
    cfg.u_max = 1e7;
    let sim = Simulator::new(model, Field::from_fn(g, u0), NoiseModel::ScalarBrownian, cfg)?;
    Ok(sim.run(6, 0))
}

/// Deterministic Fujita behavior on the truncated line.
pub fn criterion_6() -> Result<CriterionResult> {
    timed(6, "Fujita reproduction", 120.0, || {
        let mut c = Checks::default();
        let sub = fujita_run(2.0, |x| 0.1 * (-0.5 * x * x).exp(), 1e-2, 500.0, vec![])?;
        let sup_at_blowup = sub.blowup_state.as_ref().map_or(0.0, |s| s.field.sup_norm());
        c.check(sub.verdict.is_blowup() && sup_at_blowup >= 1e6, || {
            format!("p=2: {:?} with sup {sup_at_blowup:e}", sub.verdict)
        });

        let times: Vec<f64> = (5..=50).map(|k| k as f64 * 0.1).collect();
        let small = fujita_run(4.0, |x| 1e-2 * kernel_1d(1.0, x, KernelConvention::Laplacian), 1e-3, 5.0, times)?;
        c.check(matches!(small.verdict, Verdict::CompletedAt { t } if t == 5.0), || {
            format!("p=4: {:?}", small.verdict)
        });
        let sups: Vec<f64> = small.series.iter().filter(|r| r.t >= 0.5).map(|r| r.sup).collect();
        c.check(sups.len() == 46 && sups.windows(2).all(|w| w[1] < w[0]), || {
            format!("p=4: sup not decreasing after t = 0.5: {sups:?}")
        });
        let blowup = sub.verdict.blowup_time().map_or("none".into(), |t| format!("{t:.2}"));
        Ok((c.failures.is_empty(), format!("{}; p=2 blowup at t = {blowup}", c.summary())))
    })
}

/// Calculus of the mollified negative-part functions.
pub fn criterion_7() -> Result<CriterionResult> {
    timed(7, "mollifier calculus", 5.0, || {
        let mut c = Checks::default();
        let big_c = mollifier_constant();
        c.close("mollifier C", big_c, 2.25228, 1e-4);
        let hat = hat_c();
        c.check(hat < 2.0, || format!("Ĉ = {hat}"));
        for eps in [0.05, 0.2, 1.0] {
            let h = 1e-4 * eps;
            let rs: Vec<f64> = (0..=80).map(|k| -4.0 * eps + k as f64 * 0.0625 * eps).collect();
            for &r in &rs {
                let b = beta_eps(eps, r)?;
                let fd = (beta_eps(eps, r + h)?.beta - beta_eps(eps, r - h)?.beta) / (2.0 * h);
                c.close(&format!("β' + ρ at eps={eps}, r={r}"), fd + b.rho, 0.0, 1e-6);
                let second = beta_eps(eps, r + h)?.beta - 2.0 * b.beta + beta_eps(eps, r - h)?.beta;
                c.check(second >= -1e-10, || format!("second difference {second:e} at eps={eps}, r={r}"));
                if r >= 0.0 {
                    c.check(b.beta == 0.0 && b.rho == 0.0, || format!("β nonzero at r={r}"));
                }
                if r <= -2.0 * eps {
                    c.close(&format!("β linear at r={r}"), b.beta, -2.0 * eps - r + eps * hat, 1e-10);
                }
                if (-2.0 * eps..=0.0).contains(&r) {
                    c.check(b.j <= big_c / eps, || format!("β'' = {} > C/ε at r={r}", b.j));
                }
            }
        }
        from_checks(c)
    })
}

/// Heat kernel normalization, semigroup identity and product bounds.
pub fn criterion_8() -> Result<CriterionResult> {
    timed(8, "heat kernel", 30.0, || {
        let mut c = Checks::default();
        for conv in [KernelConvention::HalfLaplacian, KernelConvention::Laplacian] {
            for t in [0.01, 1.0, 100.0] {
                c.close(&format!("{conv:?} mass at t={t}"), kernel_mass(t, conv)?, 1.0, 1e-8);
            }
            for (t, s) in [(0.5, 0.25), (1.0, 1.0), (2.0, 0.1)] {
                for x in [0.0, 0.5, -1.5] {
                    let lhs = kernel_self_convolution(t, s, x, conv)?;
                    c.close(&format!("{conv:?} semigroup t={t} s={s} x={x}"), lhs, kernel_1d(t + s, x, conv), 1e-6);
                }
            }
            let scan = kernel_product_bound_scan(
                &[0.25, 0.5, 0.75],
                &[1.0, 2.0, 4.0],
                &[0.0, 1.0, -1.0, 3.0, -3.0],
                conv,
            )?;
            c.check(scan.c3_mean_form > 0.0 && scan.c3_square_form > 0.0, || {
                format!("{conv:?}: C3 = ({}, {})", scan.c3_mean_form, scan.c3_square_form)
            });
        }
        from_checks(c)
    })
}

/// Derived example values of the analytic oracles.
pub fn criterion_9() -> Result<CriterionResult> {
    timed(9, "threshold and classifier oracles", 5.0, || {
        let mut c = Checks::default();
        let pi2 = PI * PI;

        let g = GridSpec::new(0.0, 1.0, 256)?;
        let (_, phi) = principal_eigenpair(&g)?;
        let pp = inner_product(&phi, &phi)?;
        let at = |u_hat: f64| phi.scaled(u_hat / pp);
        let u_pi = at(PI);
        let u_hat = inner_product(&u_pi, &phi)?;
        let boundary = eigen_moment_threshold(&u_pi, &phi, 2.0, 1.0, 1.0, u_hat * u_hat)?;
        c.check(boundary.verdict == TheoryVerdict::BlowupPredicted, || "threshold boundary not predicted".into());
        let below = eigen_moment_threshold(&at(PI / 2.0), &phi, 2.0, 1.0, 1.0, pi2)?;
        c.check(below.verdict == TheoryVerdict::Indeterminate, || "π/2 datum predicted".into());
        let cubic = eigen_moment_threshold(&u_pi, &phi, 3.0, 1.0, 1.0, pi2)?;
        let scaled = eigen_moment_threshold(&at(3.0 * PI), &phi, 3.0, 1.0, 1.0, pi2)?;
        c.close("homogeneity", scaled.observed / cubic.observed, 81.0, 1e-9);

        let eps = eps_moment_threshold(&at(11.0), &phi, 0.5, 2.0, 1.0, 1.0, 1.0, pi2)?;
        c.close("λ̂", eps.hypotheses["lambda_hat"], pi2 / 2.0 + 0.125, 1e-12);
        c.close("eps threshold", eps.threshold, 10.1196, 1e-4);
        c.check(eps.verdict == TheoryVerdict::BlowupPredicted, || "eps datum 11 not predicted".into());
        let near_one = eps_moment_threshold(&at(11.0), &phi, 1.0 - 1e-9, 2.0, 1.0, 1.0, 1.0, pi2)?;
        c.close("λ̂ as ε → 1", near_one.hypotheses["lambda_hat"], pi2, 1e-6);

        let t = blowup_time_bound(2.0 * pi2, pi2, 1.0, 2.0).t_star.unwrap_or(f64::NAN);
        c.close("ln2/π²", t, 0.0702302, 1e-6);
        c.check(blowup_time_bound(pi2, pi2, 1.0, 2.0).t_star.is_none(), || "equilibrium not divergent".into());
        let traj = kaplan_ode_solve(
            KaplanParams { lambda1: pi2, gain: 2.0, damp: 2.0 * pi2, gamma_exp: 2.0, eta0: 2.0 * pi2 },
            1.0,
            &[],
        )?;
        c.close("ODE blowup time", traj.blowup_time.unwrap_or(f64::NAN), 0.035116, 1e-6);

        let yes = global_existence_condition(5.0, 2.0, Some(0.5));
        c.check(yes.holds && yes.lhs == 27.0 && yes.rhs == 10.0, || format!("(5, 2): {yes:?}"));
        c.check(!global_existence_condition(2.0, 1.5, None).holds, || "(2, 1.5) holds".into());
        c.check(!global_existence_condition(3.0, 3.0, None).holds, || "m = p holds".into());

        let ip = interpolation_coeffs(1.0, 2.0, 3.0, 0.5)?;
        c.close("β(1, 2, 3)", ip.beta, 0.5, 1e-15);
        for (r, m, n, e) in [(1.0, 2.0, 3.0, 0.5), (0.5, 1.5, 4.0, 0.1), (1.0, 1.1, 2.0, 2.0)] {
            let ip = interpolation_coeffs(r, m, n, e)?;
            c.check(ip.scan_residual <= 1e-12, || format!("scan residual {:e} at ({r},{m},{n},{e})", ip.scan_residual));
        }

        let sq = |r: f64| r * r;
        let rep = growth_conditions_check(Some(&sq), None, 0.0, pi2, 1.0, 1.0, 2.0 * pi2)?;
        let d = rep.drift.as_ref().expect("drift branch");
        c.close("crossing M1", d.crossing.unwrap_or(f64::NAN), pi2, 1e-10);
        c.close("∫ dr/(r² − π²r)", d.integral.unwrap_or(f64::NAN), LN_2 / pi2, 1e-8);
        let logf = |r: f64| pi2 * r + r / r.ln().powi(2);
        let rep = growth_conditions_check(Some(&logf), None, 0.0, pi2, 3.0, 1.0, 100.0)?;
        c.check(rep.drift.as_ref().is_some_and(|d| d.tail == TailVerdict::Divergent), || "log case not divergent".into());
        let slow = |r: f64| 0.5 * pi2 * r;
        let rep = growth_conditions_check(Some(&slow), None, 0.0, pi2, 1.0, 1.0, 1e3)?;
        c.check(rep.verdict == TheoryVerdict::Indeterminate && rep.drift.is_some_and(|d| d.crossing.is_none()), || {
            "slow linear drift crossed".into()
        });

        c.check(fujita_classify(2.0, 1) == FujitaClass::BlowupAllNontrivial, || "fujita (2, 1)".into());
        c.check(fujita_classify(4.0, 1) == FujitaClass::SmallDataGlobalLargeDataBlowup, || "fujita (4, 1)".into());
        c.check(fujita_classify(0.5, 3) == FujitaClass::SublinearGlobalNonunique, || "fujita (0.5, 3)".into());
        let ws = |noise, m| whole_space_noise_classify(&WholeSpaceCase { noise, m, d: 1, drift_exponent: None });
        c.check(ws(WholeSpaceNoise::SpaceTimeWhite, 1.2) == TheoryVerdict::BlowupPredicted, || "white 1.2".into());
        c.check(ws(WholeSpaceNoise::SpaceTimeWhite, 1.6) == TheoryVerdict::Indeterminate, || "white 1.6".into());
        c.check(ws(WholeSpaceNoise::ScalarBrownian, 2.0) == TheoryVerdict::BlowupPredicted, || "brownian 2".into());

        let sine = |a: f64| Field::from_fn(GridSpec::new(0.0, 1.0, 400).expect("grid"), |x| a * (PI * x).sin());
        let cert = concavity_certificate(&sine(6.0), &|_, _| 0.0, 3.0, 1.0)?;
        let exact = -36.0 * pi2 / 4.0 + 6f64.powi(4) * 3.0 / 32.0;
        c.close("concavity certificate", cert.value, exact, 1e-4 * exact.abs());

        let line = GridSpec::symmetric(30.0, 3001)?;
        let one = kernel_weighted_moment(&Field::from_fn(line, |_| 1.0), 2.0, KernelConvention::Laplacian)?;
        c.close("G for v ≡ 1", one.value, 1.0, 1e-8);
        let k0 = Field::from_fn(line, |x| kernel_1d(1.0, x, KernelConvention::Laplacian));
        let gk = kernel_weighted_moment(&k0, 2.0, KernelConvention::Laplacian)?;
        c.close("G for v = K(1)", gk.value, kernel_1d(3.0, 0.0, KernelConvention::Laplacian), 1e-8);

        from_checks(c)
    })
}

/// The ensemble CSV does not depend on the worker count.
pub fn criterion_10() -> Result<CriterionResult> {
    timed(10, "determinism across thread counts", 120.0, || {
        let g = GridSpec::new(0.0, 1.0, 64)?;
        let u0 = Field::from_fn(g, |x| 3.0 * (PI * x).sin());
        let model = ModelSpec { drift: DriftSpec::PowerPos { c0: 1.0, p: 2.0 }, diffusion: DiffusionSpec::power_abs(1.0, 1.5) };
        let times: Vec<f64> = (0..=10).map(|k| k as f64 * 0.02).collect();
        let sim = Simulator::new(model, u0, NoiseModel::SpaceTimeWhite, SolverConfig::new(1e-4, 0.2, times))?;
        let cfg = EnsembleConfig {
            m_paths: 64,
            base_seed: 10,
            functionals: vec![Functional::SquaredEigenMoment, Functional::LpMoment { p: 2.0 }],
        };
        let csv_with = |threads: usize| -> Result<String> {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::invalid(e.to_string()))?;
            pool.install(|| run_ensemble(&sim, &cfg)).map(|r| r.series.to_csv())
        };
        let one = csv_with(1)?;
        let four = csv_with(4)?;
        Ok((one == four, format!("{} bytes, identical: {}", one.len(), one == four)))
    })
}

/// Sublinear drift and diffusion on the truncated line: no blowup.
pub fn criterion_11() -> Result<CriterionResult> {
    timed(11, "sublinear global moments", 120.0, || {
        let g = GridSpec::symmetric(20.0, 401)?;
        let u0 = Field::from_fn(g, |x| (-0.5 * x * x).exp());
        let model = ModelSpec {
            drift: DriftSpec::PowerOdd { c0: 1.0, p: 0.5 },
            diffusion: DiffusionSpec::power_abs(1.0, 0.5),
        };
        let times: Vec<f64> = (0..=20).map(|k| k as f64 * 0.1).collect();
        let mut solver = SolverConfig::new(1e-3, 2.0, times);
        solver.whole_space = true;
        let sim = Simulator::new(model, u0, NoiseModel::ScalarBrownian, solver)?;
        let cfg = EnsembleConfig { m_paths: 100, base_seed: 11, functionals: vec![Functional::SquaredEigenMoment] };
        let r = run_ensemble(&sim, &cfg)?;
        let s = r.series.scalar(&Functional::SquaredEigenMoment).expect("requested");
        let sup = s.estimates.iter().copied().fold(0.0, f64::max);
        let blown = r.series.blown_fraction.iter().copied().fold(0.0, f64::max);
        let ok = sup.is_finite() && blown == 0.0 && s.censored.iter().all(|c| !c);
        Ok((ok, format!("sup E(u,φ)² = {sup:.4e}, max blown fraction {blown}")))
    })
}

pub const SUITES: &[&str] = &["acceptance", "quick"];

/// Runs a named suite: `acceptance` (all criteria) or `quick` (the
/// deterministic ones).
pub fn run_suite(name: &str) -> Result<Vec<CriterionResult>> {
    suite_ids(name)?.iter().map(|&id| run_criterion(id)).collect()
}

/// Criterion ids of a named suite.
pub fn suite_ids(name: &str) -> Result<&'static [u8]> {
    match name {
        "acceptance" => Ok(&[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11]),
        "quick" => Ok(&[1, 2, 7, 8, 9]),
        other => Err(Error::invalid(format!("unknown suite `{other}`; valid suites: {}", SUITES.join(", ")))),
    }
}

pub fn run_criterion(id: u8) -> Result<CriterionResult> {
    match id {
        1 => criterion_1(),
        2 => criterion_2(),
        3 => criterion_3(),
        4 => criterion_4(),
        5 => criterion_5(),
        6 => criterion_6(),
        7 => criterion_7(),
        8 => criterion_8(),
        9 => criterion_9(),
        10 => criterion_10(),
        11 => criterion_11(),
        _ => Err(Error::invalid(format!("no criterion {id}"))),
    }
}
