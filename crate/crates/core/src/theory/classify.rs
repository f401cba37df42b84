//! Exponent classifiers for the deterministic Fujita problem and the
//! whole-space noise-driven equations.

use serde::{Deserialize, Serialize};

use super::TheoryVerdict;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FujitaClass {
    /// `0 < p < 1`: nonnegative solutions are global, uniqueness may fail.
    SublinearGlobalNonunique,
    /// `1 < p ≤ 1 + 2/d`: every nontrivial nonnegative solution blows up.
    BlowupAllNontrivial,
    /// `p > 1 + 2/d`: small data are global, large data blow up.
    SmallDataGlobalLargeDataBlowup,
    /// `p = 1`, or arguments outside `p > 0`, `d ≥ 1`.
    Indeterminate,
}

impl FujitaClass {
    pub fn predicts_blowup_for_all(&self) -> bool {
        matches!(self, FujitaClass::BlowupAllNontrivial)
    }
}

/// Classifies `u_t = Δu + u^p` on `ℝ^d` by the critical exponent `1 + 2/d`.
pub fn fujita_classify(p: f64, d: u32) -> FujitaClass {
    if !(p > 0.0) || !p.is_finite() || d == 0 || p == 1.0 {
        return FujitaClass::Indeterminate;
    }
    if p < 1.0 {
        FujitaClass::SublinearGlobalNonunique
    } else if p <= 1.0 + 2.0 / d as f64 {
        FujitaClass::BlowupAllNontrivial
    } else {
        FujitaClass::SmallDataGlobalLargeDataBlowup
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WholeSpaceNoise {
    SpaceTimeWhite,
    ScalarBrownian,
    /// White in time, bounded spatial covariance.
    Correlated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WholeSpaceCase {
    pub noise: WholeSpaceNoise,
    /// Exponent of the diffusion bound: `σ² ≥ c·u^{2m}` for blowup,
    /// `|σ| ≤ c·|u|^m` for the sublinear case.
    pub m: f64,
    pub d: u32,
    /// Exponent of the drift bound `|f| ≤ c·|u|^p`; `None` when there is no drift.
    pub drift_exponent: Option<f64>,
}

/// Whole-space verdicts:
/// space-time white noise blows up for `d = 1`, `1 < m ≤ 3/2`;
/// a scalar Brownian motion blows up for `d = 1`, `m = 2`;
/// sublinear drift and diffusion give global moments unless the noise is
/// white in space, where the kernel is not square integrable.
pub fn whole_space_noise_classify(case: &WholeSpaceCase) -> TheoryVerdict {
    let WholeSpaceCase { noise, m, d, drift_exponent } = *case;
    if d == 0 || !m.is_finite() {
        return TheoryVerdict::Indeterminate;
    }
    let sublinear = |e: f64| e > 0.0 && e < 1.0;
    match noise {
        WholeSpaceNoise::SpaceTimeWhite if d == 1 && m > 1.0 && m <= 1.5 => TheoryVerdict::BlowupPredicted,
        WholeSpaceNoise::ScalarBrownian if d == 1 && m == 2.0 => TheoryVerdict::BlowupPredicted,
        WholeSpaceNoise::ScalarBrownian | WholeSpaceNoise::Correlated
            if sublinear(m) && drift_exponent.is_none_or(sublinear) =>
        {
            TheoryVerdict::GlobalPredicted
        }
        _ => TheoryVerdict::Indeterminate,
    }
}
