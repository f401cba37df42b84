//! Initial-data thresholds for eigenfunction moments, the global existence
//! exponent condition, and the interpolation inequality behind it.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::ode::blowup_time_bound;
use super::TheoryVerdict;
use crate::error::{Error, Result};
use crate::grid::{inner_product, Field};

/// A blowup-time bound for one choice of comparison ODE coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledBound {
    pub label: String,
    pub eta0: f64,
    pub damp: f64,
    pub gain: f64,
    pub gamma_exp: f64,
    pub t_star: Option<f64>,
}

impl LabeledBound {
    fn new(label: &str, eta0: f64, damp: f64, gain: f64, gamma_exp: f64) -> Self {
        LabeledBound {
            label: label.into(),
            eta0,
            damp,
            gain,
            gamma_exp,
            t_star: blowup_time_bound(eta0, damp, gain, gamma_exp).t_star,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub name: String,
    pub hypotheses: BTreeMap<String, f64>,
    pub threshold: f64,
    pub observed: f64,
    pub verdict: TheoryVerdict,
    pub bounds: Vec<LabeledBound>,
    pub notes: Vec<String>,
}

impl ThresholdReport {
    pub fn bound(&self, label: &str) -> Option<&LabeledBound> {
        self.bounds.iter().find(|b| b.label == label)
    }
}

fn hypotheses(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
}

/// Blowup of `E(u, φ)²` for `σ` bounded below by `c1|u|^γ` and covariance
/// bounded below by `q1`: predicted when `(u0, φ)^{2(γ−1)} ≥ λ1 / (q1·c1²)`.
///
/// Three labeled blowup-time bounds are attached, all with `η0 = (u0, φ)²`:
/// `ode_as_stated` (damp `2λ1`, gain `2q1c1²`), `integral_as_printed`
/// (damp `λ1`, gain `q1c1²`) and `ito_consistent` (damp `2λ1`, gain `q1c1²`).
pub fn eigen_moment_threshold(
    u0: &Field,
    phi: &Field,
    gamma: f64,
    q1: f64,
    c1: f64,
    lambda1: f64,
) -> Result<ThresholdReport> {
    if !(gamma > 1.0 && q1 > 0.0 && c1 > 0.0 && lambda1 > 0.0) {
        return Err(Error::invalid(format!(
            "need gamma > 1, q1 > 0, c1 > 0, lambda1 > 0; got gamma={gamma}, q1={q1}, c1={c1}, lambda1={lambda1}"
        )));
    }
    let u_hat = inner_product(u0, phi)?;
    let threshold = lambda1 / (q1 * c1 * c1);
    let mut notes = Vec::new();
    let (observed, verdict) = if u_hat > 0.0 {
        let obs = u_hat.powf(2.0 * (gamma - 1.0));
        let v = if obs >= threshold {
            TheoryVerdict::BlowupPredicted
        } else {
            TheoryVerdict::Indeterminate
        };
        (obs, v)
    } else {
        notes.push("(u0, φ) ≤ 0: the threshold requires a positive projection".into());
        (0.0, TheoryVerdict::Indeterminate)
    };
    let eta0 = u_hat * u_hat;
    let k = q1 * c1 * c1;
    let bounds = vec![
        LabeledBound::new("ode_as_stated", eta0, 2.0 * lambda1, 2.0 * k, gamma),
        LabeledBound::new("integral_as_printed", eta0, lambda1, k, gamma),
        LabeledBound::new("ito_consistent", eta0, 2.0 * lambda1, k, gamma),
    ];
    Ok(ThresholdReport {
        name: "eigen_moment_threshold".into(),
        hypotheses: hypotheses(&[
            ("gamma", gamma),
            ("q1", q1),
            ("c1", c1),
            ("lambda1", lambda1),
            ("u0_phi", u_hat),
        ]),
        threshold,
        observed,
        verdict,
        bounds,
        notes,
    })
}

/// Blowup of `E(u, φ)^ε` for `f(r) ≥ c0·r^p`, `q ≤ q0`, `σ² ≤ c1·u²`.
///
/// `λ̂ = ε·λ1 + (ε/2)(1 − ε)·q0·c1²`; blowup is predicted when
/// `(u0, φ)^{p−1} > λ̂ / (c0·ε)`.
#[allow(clippy::too_many_arguments)]
pub fn eps_moment_threshold(
    u0: &Field,
    phi: &Field,
    eps: f64,
    p: f64,
    q0: f64,
    c0: f64,
    c1: f64,
    lambda1: f64,
) -> Result<ThresholdReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!("eps must lie in (0, 1), got {eps}")));
    }
    if !(p > 1.0 && c0 > 0.0 && q0 >= 0.0 && lambda1 > 0.0) {
        return Err(Error::invalid(format!(
            "need p > 1, c0 > 0, q0 ≥ 0, lambda1 > 0; got p={p}, c0={c0}, q0={q0}, lambda1={lambda1}"
        )));
    }
    let u_hat = inner_product(u0, phi)?;
    let lambda_hat = eps * lambda1 + 0.5 * eps * (1.0 - eps) * q0 * c1 * c1;
    let threshold = lambda_hat / (c0 * eps);
    let exponent = (p + eps - 1.0) / eps;
    let mut notes = Vec::new();
    let (observed, verdict) = if u_hat > 0.0 {
        let obs = u_hat.powf(p - 1.0);
        let v = if obs > threshold {
            TheoryVerdict::BlowupPredicted
        } else {
            TheoryVerdict::Indeterminate
        };
        (obs, v)
    } else {
        notes.push("(u0, φ) ≤ 0: the threshold requires a positive projection".into());
        (0.0, TheoryVerdict::Indeterminate)
    };
    let eta0 = if u_hat > 0.0 { u_hat.powf(eps) } else { 0.0 };
    Ok(ThresholdReport {
        name: "eps_moment_threshold".into(),
        hypotheses: hypotheses(&[
            ("eps", eps),
            ("p", p),
            ("q0", q0),
            ("c0", c0),
            ("c1", c1),
            ("lambda1", lambda1),
            ("lambda_hat", lambda_hat),
            ("ode_exponent", exponent),
            ("u0_phi", u_hat),
        ]),
        threshold,
        observed,
        verdict,
        bounds: vec![LabeledBound::new("as_printed", eta0, lambda_hat, c0 * eps, exponent)],
        notes,
    })
}

/// Exponent ordering `ε < (2m/(2m−p))(2p − pε − 1 + ε) < 2m + ε − 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderingWitness {
    pub eps: f64,
    pub lower: f64,
    pub middle: f64,
    pub upper: f64,
    pub ordered: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalCondition {
    pub holds: bool,
    /// `(m − p)(2m − 1)`
    pub lhs: f64,
    /// `m·p`
    pub rhs: f64,
    pub exponents_ordered: bool,
    pub witness: Option<OrderingWitness>,
}

/// `m > p > 1` and `(m − p)(2m − 1) > m·p`; when these hold and `eps` is in
/// `(0, 1)`, the exponent ordering used in the moment estimate is evaluated.
pub fn global_existence_condition(m: f64, p: f64, eps: Option<f64>) -> GlobalCondition {
    let lhs = (m - p) * (2.0 * m - 1.0);
    let rhs = m * p;
    let exponents_ordered = m > p && p > 1.0;
    let holds = exponents_ordered && lhs > rhs;
    let witness = eps.filter(|&e| holds && e > 0.0 && e < 1.0).map(|e| {
        let middle = 2.0 * m / (2.0 * m - p) * (2.0 * p - p * e - 1.0 + e);
        let upper = 2.0 * m + e - 2.0;
        OrderingWitness {
            eps: e,
            lower: e,
            middle,
            upper,
            ordered: e < middle && middle < upper,
        }
    });
    GlobalCondition {
        holds,
        lhs,
        rhs,
        exponents_ordered,
        witness,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interpolation {
    /// `r(n − m)/(n − r)`
    pub beta: f64,
    /// Constant with `u^m ≤ eps·u^n + c_eps·u^r` for all `u > 0`.
    pub c_eps: f64,
    /// Largest `u^m − eps·u^n − c_eps·u^r` over `u ∈ [1e-6, 1e6]`.
    pub scan_residual: f64,
}

/// Young's inequality split `u^m = u^{θn}·u^{(1−θ)r}`, `θ = (m − r)/(n − r)`,
/// with conjugate exponents `P = 1/θ`, `Q = 1/(1 − θ)`: the constant is
/// `c_eps = (eps·P)^{−Q/P} / Q`.
pub fn interpolation_coeffs(r: f64, m: f64, n: f64, eps: f64) -> Result<Interpolation> {
    if !(r < m && m < n) || !(r.is_finite() && n.is_finite()) {
        return Err(Error::invalid(format!("need r < m < n, got r={r}, m={m}, n={n}")));
    }
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    let beta = r * (n - m) / (n - r);
    let big_p = (n - r) / (m - r);
    let big_q = (n - r) / (n - m);
    let c_eps = (eps * big_p).powf(-big_q / big_p) / big_q;
    let scan_residual = (0..=1200)
        .map(|k| 10f64.powf(-6.0 + k as f64 * 0.01))
        .map(|u| u.powf(m) - eps * u.powf(n) - c_eps * u.powf(r))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Interpolation {
        beta,
        c_eps,
        scan_residual,
    })
}
