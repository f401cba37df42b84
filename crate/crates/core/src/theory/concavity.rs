//! Energy certificate for mean-square blowup under additive noise, and the
//! monitor for `I''·I − (1 + α)·I'² > 0` on ensemble series.

use serde::{Deserialize, Serialize};

use super::TheoryVerdict;
use crate::error::{Error, Result};
use crate::grid::{h1_seminorm, lp_integral, Field};
use crate::quad::integrate;

/// Values of `A` scanned by default in [`concavity_monitor`].
pub const DEFAULT_A: [f64; 3] = [1.0, 10.0, 100.0];
/// `h` is flagged as noisy when its standard error exceeds this fraction of `|h|`.
pub const NOISY_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcavityCertificate {
    /// `½∫|∇u0|²`
    pub gradient_energy: f64,
    /// `∫|u0|^{p+1} / (p + 1)`
    pub potential: f64,
    /// `½∫_0^T∫|∇σ|²`
    pub noise_energy: f64,
    /// Exponential-decay estimate of `½∫_T^∞∫|∇σ|²`.
    pub noise_tail: f64,
    pub t_horizon: f64,
    pub value: f64,
    pub verdict: TheoryVerdict,
    pub notes: Vec<String>,
}

/// `−½∫|∇u0|² + ∫|u0|^{p+1}/(p+1) − ½∫_0^∞∫|∇σ|²`, positive ⇒ blowup.
///
/// The noise energy is integrated to `t_horizon`; the remainder is
/// estimated by fitting an exponential rate between `T/2` and `T`. A noise
/// energy that is not decaying there makes the verdict indeterminate.
pub fn concavity_certificate(
    u0: &Field,
    grad_sigma: &dyn Fn(f64, f64) -> f64,
    p: f64,
    t_horizon: f64,
) -> Result<ConcavityCertificate> {
    if !(p > 1.0) {
        return Err(Error::invalid(format!("p must exceed 1, got {p}")));
    }
    if !(t_horizon > 0.0 && t_horizon.is_finite()) {
        return Err(Error::invalid(format!("t_horizon must be positive, got {t_horizon}")));
    }
    let g = u0.grid();
    let (a, b) = (g.a(), g.b());
    let gradient_energy = 0.5 * h1_seminorm(u0);
    let potential = lp_integral(u0, p + 1.0) / (p + 1.0);

    let energy_at = |t: f64| -> Result<f64> {
        integrate(|x| grad_sigma(x, t).powi(2), a, b, 1e-13)
    };
    let e0 = energy_at(0.0)?;
    let e_half = energy_at(0.5 * t_horizon)?;
    let e_end = energy_at(t_horizon)?;
    let scale = e0.max(e_half).max(1.0);
    let body = integrate(
        |t| energy_at(t).unwrap_or(f64::NAN),
        0.0,
        t_horizon,
        1e-11 * scale,
    )?;
    let mut notes = Vec::new();
    let tail = if e_end == 0.0 {
        Some(0.0)
    } else {
        let rate = (e_half / e_end).ln() / (0.5 * t_horizon);
        if rate > 0.0 && rate.is_finite() {
            Some(e_end / rate)
        } else {
            notes.push("noise energy is not decaying at the horizon".into());
            None
        }
    };
    let noise_energy = 0.5 * body;
    let noise_tail = 0.5 * tail.unwrap_or(f64::INFINITY);
    let value = -gradient_energy + potential - noise_energy - noise_tail;
    let verdict = if tail.is_some() && value > 0.0 {
        TheoryVerdict::BlowupPredicted
    } else {
        TheoryVerdict::Indeterminate
    };
    Ok(ConcavityCertificate {
        gradient_energy,
        potential,
        noise_energy,
        noise_tail,
        t_horizon,
        value,
        verdict,
        notes,
    })
}

/// Ensemble series on a uniform time grid starting at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorInput {
    pub times: Vec<f64>,
    /// `v(t) = E∫u²`
    pub v: Vec<f64>,
    /// `h(t) = E∫(−2|∇u|² + 2|u|^{p+1} + σ²)`
    pub h: Vec<f64>,
    pub h_stderr: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorTrace {
    pub alpha: f64,
    pub a: f64,
    pub times: Vec<f64>,
    /// `I(t) = A + ∫_0^t v`
    pub i: Vec<f64>,
    /// `I''·I − (1 + α)·I'²`
    pub q: Vec<f64>,
    pub holds: Vec<bool>,
    pub noisy: Vec<bool>,
    pub all_hold: bool,
}

/// Evaluates the concavity inequality at each recorded time, once per `A`.
pub fn concavity_monitor(input: &MonitorInput, alpha: f64, a_values: &[f64]) -> Result<Vec<MonitorTrace>> {
    let MonitorInput { times, v, h, h_stderr } = input;
    let n = times.len();
    if n < 2 || v.len() != n || h.len() != n || h_stderr.len() != n {
        return Err(Error::invalid("monitor series need equal lengths of at least 2"));
    }
    if times[0] != 0.0 {
        return Err(Error::invalid(format!("monitor series must start at t = 0, got {}", times[0])));
    }
    let step = times[1] - times[0];
    if !(step > 0.0) || times.windows(2).any(|w| ((w[1] - w[0]) - step).abs() > 1e-9 * step) {
        return Err(Error::invalid("monitor series must lie on a uniform time grid"));
    }
    if !(alpha >= 0.0) || a_values.iter().any(|&a| !(a > 0.0)) {
        return Err(Error::invalid("need alpha ≥ 0 and A > 0"));
    }
    let mut integral = vec![0.0; n];
    for k in 1..n {
        integral[k] = integral[k - 1] + 0.5 * step * (v[k - 1] + v[k]);
    }
    let noisy: Vec<bool> = h.iter().zip(h_stderr).map(|(h, s)| *s > NOISY_FRACTION * h.abs()).collect();
    Ok(a_values
        .iter()
        .map(|&a| {
            let i: Vec<f64> = integral.iter().map(|s| a + s).collect();
            let q: Vec<f64> = (0..n).map(|k| h[k] * i[k] - (1.0 + alpha) * v[k] * v[k]).collect();
            let holds: Vec<bool> = q.iter().map(|&x| x > 0.0).collect();
            MonitorTrace {
                alpha,
                a,
                times: times.clone(),
                all_hold: holds.iter().all(|&b| b),
                i,
                q,
                holds,
                noisy: noisy.clone(),
            }
        })
        .collect())
}
