//! Checks of the superlinear growth conditions on the drift lower bound `F`
//! and the noise lower bound `q1·G` that guarantee blowup of `(u, φ)`.
//!
//! "For all r ≥ M" is only certified on a logarithmic scan up to `1e12`,
//! backed by monotonicity of `h(r)/r` on that range.

use serde::{Deserialize, Serialize};

use super::TheoryVerdict;
use crate::error::{Error, Result};
use crate::quad::integrate;

const SCAN_MAX: f64 = 1e12;
const POINTS_PER_DECADE: usize = 50;
const TAIL_FROM: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailVerdict {
    Convergent,
    Divergent,
    Indeterminate,
}

/// Result for one growth function `h` (the drift bound `F`, or `q1·G`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchReport {
    pub label: String,
    pub r_start: f64,
    pub positive: bool,
    pub increasing: bool,
    pub convex: bool,
    /// `h(r)/r` nondecreasing on the scan beyond the crossing.
    pub ratio_monotone: bool,
    /// Smallest `M ≥ r_start` with `h(r) > λ1·r` on the scanned range above it.
    pub crossing: Option<f64>,
    pub datum_exceeds_crossing: bool,
    /// Log-log slope of `1/(h(r) − λ1·r)` over the top four scanned decades.
    pub tail_slope: Option<f64>,
    pub tail: TailVerdict,
    /// `∫_{(u0,φ)}^∞ dr / (h(r) − λ1·r)` when the datum lies above the crossing
    /// and the tail converges.
    pub integral: Option<f64>,
    pub scan_certified: bool,
    pub verdict: TheoryVerdict,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthConditionsReport {
    pub lambda1: f64,
    pub u0_phi: f64,
    pub drift: Option<BranchReport>,
    pub noise: Option<BranchReport>,
    pub verdict: TheoryVerdict,
}

fn log_grid(from: f64, to: f64) -> Vec<f64> {
    let decades = (to / from).log10();
    let n = ((decades * POINTS_PER_DECADE as f64).ceil() as usize).max(2);
    (0..=n).map(|k| from * (to / from).powf(k as f64 / n as f64)).collect()
}

fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    // g(lo) ≤ 0 < g(hi)
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn check_branch(label: &str, h: &dyn Fn(f64) -> f64, lambda1: f64, r_start: f64, u0_phi: f64) -> BranchReport {
    let mut notes = Vec::new();
    let rs = log_grid(r_start, SCAN_MAX);
    let hs: Vec<f64> = rs.iter().map(|&r| h(r)).collect();
    let finite = hs.iter().all(|v| v.is_finite());
    let positive = finite && hs.iter().all(|&v| v > 0.0);
    let increasing = finite && hs.windows(2).all(|w| w[1] > w[0]);
    let convex = finite
        && (1..rs.len() - 1).all(|k| {
            let s0 = (hs[k] - hs[k - 1]) / (rs[k] - rs[k - 1]);
            let s1 = (hs[k + 1] - hs[k]) / (rs[k + 1] - rs[k]);
            s1 >= s0 - 1e-9 * s0.abs().max(s1.abs())
        });

    let excess = |r: f64| h(r) - lambda1 * r;
    let last_bad = rs.iter().rposition(|&r| !(excess(r) > 0.0));
    let crossing = match last_bad {
        None => Some(r_start),
        Some(k) if k + 1 == rs.len() => None,
        Some(k) => Some(bisect(excess, rs[k], rs[k + 1])),
    };
    if crossing.is_none() {
        notes.push(format!("h(r) > λ1·r never holds up to r = {SCAN_MAX:e}"));
    }

    let ratio_monotone = crossing.is_some_and(|m| {
        rs.iter()
            .zip(&hs)
            .filter(|(&r, _)| r >= m)
            .map(|(&r, &v)| v / r)
            .collect::<Vec<_>>()
            .windows(2)
            .all(|w| w[1] >= w[0] * (1.0 - 1e-12))
    });

    let tail_slope = {
        let g0 = 1.0 / excess(TAIL_FROM);
        let g1 = 1.0 / excess(SCAN_MAX);
        (g0 > 0.0 && g1 > 0.0 && g0.is_finite() && g1.is_finite())
            .then(|| (g1.ln() - g0.ln()) / (SCAN_MAX / TAIL_FROM).ln())
    };
    let tail = match tail_slope {
        Some(k) if k < -1.02 => TailVerdict::Convergent,
        Some(k) if k > -0.98 => TailVerdict::Divergent,
        _ => TailVerdict::Indeterminate,
    };

    let datum_exceeds_crossing = crossing.is_some_and(|m| u0_phi > m);
    let integral = match (datum_exceeds_crossing, tail, tail_slope) {
        (true, TailVerdict::Convergent, Some(k)) if u0_phi < SCAN_MAX => {
            // in s = ln r the integrand is r / (h(r) − λ1·r)
            let body = integrate(|s: f64| {
                let r = s.exp();
                r / excess(r)
            }, u0_phi.ln(), SCAN_MAX.ln(), 1e-12);
            let tail_part = SCAN_MAX / excess(SCAN_MAX) / (-k - 1.0);
            match body {
                Ok(b) => Some(b + tail_part),
                Err(e) => {
                    notes.push(format!("quadrature failed: {e}"));
                    None
                }
            }
        }
        (true, TailVerdict::Convergent, Some(k)) => Some(u0_phi / excess(u0_phi) / (-k - 1.0)),
        _ => None,
    };

    let scan_certified = positive && increasing && convex && ratio_monotone;
    if !scan_certified {
        notes.push("shape conditions not certified on the scan".into());
    }
    if crossing.is_some() && !datum_exceeds_crossing {
        notes.push("the initial projection does not exceed the crossing".into());
    }
    let verdict = if scan_certified && datum_exceeds_crossing && integral.is_some() {
        TheoryVerdict::BlowupPredicted
    } else {
        TheoryVerdict::Indeterminate
    };
    BranchReport {
        label: label.into(),
        r_start,
        positive,
        increasing,
        convex,
        ratio_monotone,
        crossing,
        datum_exceeds_crossing,
        tail_slope,
        tail,
        integral,
        scan_certified,
        verdict,
        notes,
    }
}

/// Checks the drift branch (`F` from `r1`) and/or the noise branch (`q1·G`
/// from `r2`). Blowup is predicted when either branch passes every check.
pub fn growth_conditions_check(
    f: Option<&dyn Fn(f64) -> f64>,
    g: Option<&dyn Fn(f64) -> f64>,
    q1: f64,
    lambda1: f64,
    r1: f64,
    r2: f64,
    u0_phi: f64,
) -> Result<GrowthConditionsReport> {
    if !(lambda1 > 0.0) {
        return Err(Error::invalid(format!("lambda1 must be positive, got {lambda1}")));
    }
    if f.is_some() && !(r1 > 0.0 && r1 < SCAN_MAX) {
        return Err(Error::invalid(format!("r1 must lie in (0, {SCAN_MAX:e}), got {r1}")));
    }
    if g.is_some() && !(r2 > 0.0 && r2 < SCAN_MAX && q1 > 0.0) {
        return Err(Error::invalid(format!("need r2 in (0, {SCAN_MAX:e}) and q1 > 0, got r2={r2}, q1={q1}")));
    }
    let drift = f.map(|f| check_branch("drift", f, lambda1, r1, u0_phi));
    let noise = g.map(|g| {
        let h = move |r: f64| q1 * g(r);
        check_branch("noise", &h, lambda1, r2, u0_phi)
    });
    let verdict = if [&drift, &noise]
        .iter()
        .any(|b| b.as_ref().is_some_and(|b| b.verdict == TheoryVerdict::BlowupPredicted))
    {
        TheoryVerdict::BlowupPredicted
    } else {
        TheoryVerdict::Indeterminate
    };
    Ok(GrowthConditionsReport { lambda1, u0_phi, drift, noise, verdict })
}
