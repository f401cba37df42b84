//! Scalar moment comparison ODE `η' = −damp·η + gain·η^γ` and its blowup time.

use serde::{Deserialize, Serialize};

use super::TheoryVerdict;
use crate::error::{Error, Result};
use crate::quad;

/// Level at which the numerical ODE solution is declared blown up.
pub const ODE_BLOWUP_LEVEL: f64 = 1e12;

const RTOL: f64 = 1e-12;
const ATOL: f64 = 1e-13;
const MAX_STEPS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KaplanParams {
    pub lambda1: f64,
    pub gain: f64,
    pub damp: f64,
    pub gamma_exp: f64,
    pub eta0: f64,
}

impl KaplanParams {
    fn validate(&self) -> Result<()> {
        if !(self.eta0 >= 0.0 && self.eta0.is_finite()) {
            return Err(Error::invalid(format!("eta0 must be finite and ≥ 0, got {}", self.eta0)));
        }
        if !(self.gain >= 0.0 && self.damp >= 0.0 && self.gain.is_finite() && self.damp.is_finite()) {
            return Err(Error::invalid("gain and damp must be finite and ≥ 0"));
        }
        if !(self.gamma_exp > 1.0) {
            return Err(Error::invalid(format!("gamma_exp must exceed 1, got {}", self.gamma_exp)));
        }
        Ok(())
    }

    /// `gain·eta0^(γ−1) > damp`: the nonlinear term dominates from the start.
    pub fn grows(&self) -> bool {
        self.gain * self.eta0.powf(self.gamma_exp - 1.0) > self.damp
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeTrajectory {
    pub params: KaplanParams,
    /// `(t, η(t))` at the requested checkpoints; `∞` at or after blowup.
    pub checkpoints: Vec<(f64, f64)>,
    pub blowup_time: Option<f64>,
    /// Verdict for the comparison ODE itself, not for the stochastic equation.
    pub verdict: TheoryVerdict,
    pub steps: usize,
}

impl OdeTrajectory {
    pub fn eta_at(&self, t: f64) -> Option<f64> {
        self.checkpoints
            .iter()
            .find(|(s, _)| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
            .map(|&(_, e)| e)
    }
}

/// Remaining time to blowup from level `eta`, in closed form.
///
/// With `v = (eta/r)^(γ−1)` the integral `∫_eta^∞ dr/(gain·r^γ − damp·r)` becomes
/// `∫_0^1 dv / ((γ−1)(G − D·v))` with `G = gain·eta^(γ−1)`, `D = damp`.
pub fn blowup_time_closed_form(eta: f64, damp: f64, gain: f64, gamma: f64) -> Option<f64> {
    let g = gain * eta.powf(gamma - 1.0);
    if !(gamma > 1.0 && eta > 0.0 && g > damp) {
        return None;
    }
    let k = gamma - 1.0;
    if damp == 0.0 {
        Some(1.0 / (k * g))
    } else {
        Some(-(-damp / g).ln_1p() / (k * damp))
    }
}

/// Level `η` from which the remaining time to blowup is `tau`.
fn level_for_remaining_time(tau: f64, damp: f64, gain: f64, gamma: f64) -> f64 {
    let k = gamma - 1.0;
    let g = if damp == 0.0 {
        1.0 / (k * tau)
    } else {
        -damp / (-damp * k * tau).exp_m1()
    };
    (g / gain).powf(1.0 / k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupTimeBound {
    pub t_star: Option<f64>,
    pub verdict: TheoryVerdict,
}

/// `T* = ∫_{eta0}^∞ dr / (gain·r^γ − damp·r)` by quadrature after the
/// substitution `v = (eta0/r)^(γ−1)`, which maps the range onto `[0, 1]`
/// with a bounded integrand.
///
/// A divergent integral (`γ ≤ 1` or `gain·eta0^(γ−1) ≤ damp`) yields an
/// indeterminate verdict.
pub fn blowup_time_bound(eta0: f64, damp: f64, gain: f64, gamma: f64) -> BlowupTimeBound {
    let indeterminate = BlowupTimeBound {
        t_star: None,
        verdict: TheoryVerdict::Indeterminate,
    };
    if !(gamma > 1.0 && eta0 > 0.0 && damp >= 0.0 && gain > 0.0) || !eta0.is_finite() {
        return indeterminate;
    }
    let k = gamma - 1.0;
    let g = gain * eta0.powf(k);
    if !(g > damp) || !g.is_finite() {
        return indeterminate;
    }
    let integrand = |v: f64| 1.0 / (k * (g - damp * v));
    let scale = integrand(1.0);
    match quad::integrate(integrand, 0.0, 1.0, 1e-13 * scale.max(1e-300)) {
        Ok(t) => BlowupTimeBound {
            t_star: Some(t),
            verdict: TheoryVerdict::BlowupPredicted,
        },
        Err(e) => {
            log::warn!("blowup-time quadrature failed: {e}");
            indeterminate
        }
    }
}

// Dormand–Prince 5(4) tableau; the right-hand side is autonomous so the nodes are unused.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One embedded step; returns the fifth-order value and the error estimate.
fn dp_step(f: &impl Fn(f64) -> f64, y: f64, h: f64) -> (f64, f64) {
    let mut k = [0.0; 7];
    for i in 0..7 {
        let mut yi = y;
        for j in 0..i {
            yi += h * A[i][j] * k[j];
        }
        k[i] = f(yi);
    }
    let y5 = y + h * (0..7).map(|i| B5[i] * k[i]).sum::<f64>();
    let y4 = y + h * (0..7).map(|i| B4[i] * k[i]).sum::<f64>();
    (y5, (y5 - y4).abs())
}

/// Integrates the comparison ODE in `y = ln η` with an adaptive
/// Dormand–Prince scheme, stopping once `η ≥ 1e12` and adding the closed-form
/// remaining time.
pub fn kaplan_ode_solve(p: KaplanParams, t_end: f64, checkpoints: &[f64]) -> Result<OdeTrajectory> {
    p.validate()?;
    if !(t_end > 0.0) {
        return Err(Error::invalid(format!("t_end must be positive, got {t_end}")));
    }
    if checkpoints.windows(2).any(|w| !(w[0] <= w[1])) || checkpoints.iter().any(|&c| !(c >= 0.0)) {
        return Err(Error::invalid("checkpoints must be sorted and nonnegative"));
    }
    let verdict = if p.grows() {
        TheoryVerdict::BlowupPredicted
    } else {
        TheoryVerdict::GlobalPredicted
    };
    if p.eta0 == 0.0 {
        return Ok(OdeTrajectory {
            params: p,
            checkpoints: checkpoints.iter().map(|&c| (c, 0.0)).collect(),
            blowup_time: None,
            verdict,
            steps: 0,
        });
    }
    let k = p.gamma_exp - 1.0;
    let rhs = |y: f64| -p.damp + p.gain * (k * y).exp();
    let y_stop = ODE_BLOWUP_LEVEL.ln();
    let horizon = checkpoints.last().copied().unwrap_or(0.0).max(t_end);

    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = 0;
    let mut t = 0.0;
    let mut y = p.eta0.ln();
    let mut h = 1e-6 * horizon;
    let mut steps = 0;
    while next < checkpoints.len() && checkpoints[next] <= 0.0 {
        out.push((checkpoints[next], p.eta0));
        next += 1;
    }
    let mut blowup_time = None;
    while t < horizon && steps < MAX_STEPS {
        let target = checkpoints.get(next).copied().unwrap_or(horizon).min(horizon);
        let h_try = h.min(target - t);
        let (y_new, err) = dp_step(&rhs, y, h_try);
        let tol = ATOL + RTOL * y.abs().max(y_new.abs());
        if err <= tol && y_new.is_finite() {
            steps += 1;
            t = if h_try == target - t { target } else { t + h_try };
            y = y_new;
            while next < checkpoints.len() && checkpoints[next] <= t {
                out.push((checkpoints[next], y.exp()));
                next += 1;
            }
            if y >= y_stop {
                let eta = y.exp();
                let tail = blowup_time_closed_form(eta, p.damp, p.gain, p.gamma_exp)
                    .expect("growing regime past the blowup level");
                blowup_time = Some(t + tail);
                break;
            }
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * (tol / err).powf(0.2)).clamp(0.2, 5.0)
        };
        h = h_try * factor;
        if !(y_new.is_finite() && err.is_finite()) {
            h = 0.2 * h_try;
        }
    }
    if let Some(tb) = blowup_time {
        for &c in &checkpoints[next..] {
            let eta = if c < tb {
                level_for_remaining_time(tb - c, p.damp, p.gain, p.gamma_exp)
            } else {
                f64::INFINITY
            };
            out.push((c, eta));
        }
    } else if next < checkpoints.len() {
        return Err(Error::invalid(format!(
            "ODE integration stopped at t={t} after {steps} steps"
        )));
    }
    Ok(OdeTrajectory {
        params: p,
        checkpoints: out,
        blowup_time,
        verdict,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{LN_2, PI};

    fn params(gain: f64, damp: f64, gamma: f64, eta0: f64) -> KaplanParams {
        KaplanParams {
            lambda1: PI * PI,
            gain,
            damp,
            gamma_exp: gamma,
            eta0,
        }
    }

    #[test]
    fn linear_decay_when_gain_vanishes() {
        let tr = kaplan_ode_solve(params(0.0, 3.0, 2.0, 2.0), 1.0, &[0.0, 0.5, 1.0]).unwrap();
        for &(t, e) in &tr.checkpoints {
            assert!((e - 2.0 * (-3.0 * t).exp()).abs() < 1e-10);
        }
        assert_eq!(tr.verdict, TheoryVerdict::GlobalPredicted);
        assert!(tr.blowup_time.is_none());
    }

    #[test]
    fn equilibrium_is_stationary() {
        let (damp, gain, gamma): (f64, f64, f64) = (2.0, 0.5, 3.0);
        let eta0 = (damp / gain).powf(1.0 / (gamma - 1.0));
        let tr = kaplan_ode_solve(params(gain, damp, gamma, eta0), 2.0, &[1.0, 2.0]).unwrap();
        for &(_, e) in &tr.checkpoints {
            assert!((e / eta0 - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn separable_blowup_time() {
        let tr = kaplan_ode_solve(params(2.0, 2.0 * PI * PI, 2.0, 2.0 * PI * PI), 1.0, &[]).unwrap();
        let exact = LN_2 / (2.0 * PI * PI);
        let tb = tr.blowup_time.unwrap();
        assert!((tb / exact - 1.0).abs() < 1e-6, "{tb} vs {exact}");
        assert!((exact - 0.035116).abs() < 1e-6);
    }

    #[test]
    fn trajectory_matches_logistic_solution() {
        // γ = 2: η(t) = D / (gain + (D/η0 − gain)·e^{Dt})
        let (gain, damp, eta0) = (1.0, PI * PI, 2.0 * PI * PI);
        let ts = [0.0, 0.01, 0.03, 0.05, 0.0702];
        let tr = kaplan_ode_solve(params(gain, damp, 2.0, eta0), 0.05, &ts).unwrap();
        for &(t, e) in &tr.checkpoints {
            let exact = damp / (gain + (damp / eta0 - gain) * (damp * t).exp());
            assert!((e / exact - 1.0).abs() < 1e-8, "t={t}: {e} vs {exact}");
        }
    }

    #[test]
    fn bound_matches_closed_forms() {
        let t = blowup_time_bound(2.0 * PI * PI, PI * PI, 1.0, 2.0);
        assert!((t.t_star.unwrap() - LN_2 / (PI * PI)).abs() < 1e-8);
        // the commonly quoted 0.0702302 is truncated; the value is 0.07023049…
        assert!((LN_2 / (PI * PI) - 0.0702302).abs() < 1e-6);
        let t = blowup_time_bound(2.0 * PI * PI, 2.0 * PI * PI, 2.0, 2.0);
        assert!((t.t_star.unwrap() - LN_2 / (2.0 * PI * PI)).abs() < 1e-8);
    }

    #[test]
    fn bound_for_non_integer_exponent() {
        // original integral in log variables, truncated, plus its power-law tail
        let (eta0, damp, gain, gamma) = (3.0, 1.0, 0.8, 1.5);
        let t = blowup_time_bound(eta0, damp, gain, gamma).t_star.unwrap();
        let f = |x: f64| {
            let r = eta0 * x.exp();
            r / (gain * r.powf(gamma) - damp * r)
        };
        let head = quad::integrate(f, 0.0, 80.0, 1e-12).unwrap();
        // tail beyond r = eta0·e^80 is ≈ ∫ dr/(gain r^1.5) = 2/(gain·sqrt(R))
        let tail = 2.0 / (gain * (eta0 * 80f64.exp()).sqrt());
        assert!((t - head - tail).abs() < 1e-9, "{t} vs {}", head + tail);
    }

    #[test]
    fn divergent_integral_is_indeterminate() {
        let r = blowup_time_bound(1.0, 2.0, 2.0, 2.0);
        assert_eq!(r.verdict, TheoryVerdict::Indeterminate);
        assert!(r.t_star.is_none());
        assert_eq!(blowup_time_bound(1.0, 0.0, 1.0, 1.0).verdict, TheoryVerdict::Indeterminate);
    }

    #[test]
    fn large_eta0_gives_short_times() {
        let a = blowup_time_bound(1e3, 1.0, 1.0, 2.0).t_star.unwrap();
        let b = blowup_time_bound(1e9, 1.0, 1.0, 2.0).t_star.unwrap();
        assert!(b < a && b < 1e-8);
    }

    #[test]
    fn checkpoints_after_stop_use_the_exact_tail() {
        let (gain, damp, eta0) = (1.0, PI * PI, 2.0 * PI * PI);
        let exact_tb = LN_2 / (PI * PI);
        let c = exact_tb - 1e-14;
        let tr = kaplan_ode_solve(params(gain, damp, 2.0, eta0), 1.0, &[c, exact_tb + 1e-3]).unwrap();
        assert!(tr.checkpoints[0].1 > 1e12);
        assert!(tr.checkpoints[1].1.is_infinite());
    }

    proptest! {
        #[test]
        fn bound_monotonicity(eta0 in 1.0f64..50.0, damp in 0.1f64..5.0, gain in 0.5f64..3.0, gamma in 1.2f64..3.5) {
            let base = blowup_time_bound(eta0, damp, gain, gamma);
            prop_assume!(base.t_star.is_some());
            let t = base.t_star.unwrap();
            let more_eta = blowup_time_bound(eta0 * 1.5, damp, gain, gamma).t_star.unwrap();
            let more_gain = blowup_time_bound(eta0, damp, gain * 1.5, gamma).t_star.unwrap();
            prop_assert!(more_eta < t);
            prop_assert!(more_gain < t);
            let more_damp = blowup_time_bound(eta0, damp * 1.1, gain, gamma);
            if let Some(td) = more_damp.t_star {
                prop_assert!(td > t);
            }
        }

        #[test]
        fn quadrature_agrees_with_closed_form(eta0 in 0.5f64..100.0, damp in 0.0f64..5.0, gain in 0.1f64..3.0, gamma in 1.05f64..4.0) {
            let q = blowup_time_bound(eta0, damp, gain, gamma).t_star;
            let c = blowup_time_closed_form(eta0, damp, gain, gamma);
            prop_assert_eq!(q.is_some(), c.is_some());
            if let (Some(q), Some(c)) = (q, c) {
                prop_assert!((q - c).abs() <= 1e-9 * c.max(1.0));
            }
        }
    }
}
