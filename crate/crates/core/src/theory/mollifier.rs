//! Smooth convex approximations of the negative part `r ↦ max(−r, 0)`.
//!
//! `J(x) = C·exp(1/(x² − 1))` on `|x| < 1` is the standard bump normalized to
//! unit mass, `J_ε(x) = J(x/ε)/ε`, `ρ_ε(r) = ∫_{r+ε}^∞ J_ε` and
//! `β_ε(r) = ∫_r^∞ ρ_ε`. Then `β_ε` vanishes on `r ≥ 0`, is affine with slope
//! −1 on `r ≤ −2ε`, and `β_ε'' = J_ε(· + ε) ≥ 0`.

use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::quad::integrate;

const QUAD_TOL: f64 = 1e-14;

fn bump(x: f64) -> f64 {
    if x.abs() < 1.0 {
        (1.0 / (x * x - 1.0)).exp()
    } else {
        0.0
    }
}

fn quad(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    // the integrands are smooth and bounded on finite intervals
    integrate(f, a, b, tol).expect("quadrature of a smooth bounded integrand")
}

/// Normalizing constant `C = 1 / ∫_{−1}^1 exp(1/(x² − 1)) dx ≈ 2.25228`.
pub fn mollifier_constant() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| 1.0 / quad(bump, -1.0, 1.0, QUAD_TOL))
}

fn j(x: f64) -> f64 {
    mollifier_constant() * bump(x)
}

/// `∫_{−1}^a J`.
fn cdf(a: f64) -> f64 {
    if a <= -1.0 {
        0.0
    } else if a >= 1.0 {
        1.0
    } else if a <= 0.0 {
        quad(j, -1.0, a, QUAD_TOL)
    } else {
        1.0 - quad(j, a, 1.0, QUAD_TOL)
    }
}

/// `Ĉ = ∫_{−2}^0 ∫_{t+1}^1 J(s) ds dt`, evaluated by nested quadrature.
pub fn hat_c() -> f64 {
    static HAT_C: OnceLock<f64> = OnceLock::new();
    *HAT_C.get_or_init(|| quad(|t| 1.0 - cdf(t + 1.0), -2.0, 0.0, 1e-12))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaEps {
    pub beta: f64,
    /// `ρ_ε(r) = −β_ε'(r)`
    pub rho: f64,
    /// `J_ε(r + ε) = β_ε''(r)`
    pub j: f64,
}

/// Evaluates `β_ε`, `ρ_ε` and `β_ε''` at `r`.
pub fn beta_eps(eps: f64, r: f64) -> Result<BetaEps> {
    if !(eps > 0.0 && eps.is_finite()) || !r.is_finite() {
        return Err(Error::invalid(format!("need eps > 0 and finite r, got eps={eps}, r={r}")));
    }
    let a = (r + eps) / eps;
    let out = if a >= 1.0 {
        BetaEps { beta: 0.0, rho: 0.0, j: 0.0 }
    } else if a <= -1.0 {
        BetaEps { beta: -2.0 * eps - r + eps * hat_c(), rho: 1.0, j: 0.0 }
    } else {
        let rho = 1.0 - cdf(a);
        // ∫_a^1 (1 − F) = −a(1 − F(a)) + ∫_a^1 y J(y) dy
        let first_moment = quad(|y| y * j(y), a, 1.0, QUAD_TOL);
        BetaEps {
            beta: eps * (-a * rho + first_moment),
            rho,
            j: j(a) / eps,
        }
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constants() {
        let c = mollifier_constant();
        assert!((c - 2.25228).abs() < 1e-4, "{c}");
        assert!((1.0 / c - 0.443994).abs() < 1e-6);
        let h = hat_c();
        assert!(h < 2.0);
        // J is even with unit mass, so the inner integral averages to one half over [−2, 0]
        assert!((h - 1.0).abs() < 1e-9, "{h}");
    }

    #[test]
    fn regimes() {
        for eps in [0.01, 0.3, 2.0] {
            let b = beta_eps(eps, 0.5 * eps).unwrap();
            assert_eq!((b.beta, b.rho, b.j), (0.0, 0.0, 0.0));
            let r = -3.0 * eps;
            let b = beta_eps(eps, r).unwrap();
            assert!((b.beta - (-2.0 * eps - r + eps * hat_c())).abs() < 1e-15);
            assert_eq!(b.rho, 1.0);
            // continuity at both ends of the transition layer
            let inner = beta_eps(eps, -2.0 * eps + 1e-12).unwrap();
            assert!((inner.beta - eps).abs() < 1e-9 * eps.max(1.0));
            assert!(beta_eps(eps, -1e-12).unwrap().beta.abs() < 1e-9);
        }
        assert!(beta_eps(0.0, 1.0).is_err());
    }

    #[test]
    fn second_derivative_peak() {
        let eps = 0.1;
        let peak = beta_eps(eps, -eps).unwrap().j;
        let c = mollifier_constant();
        assert!((peak - c / (std::f64::consts::E * eps)).abs() < 1e-12);
        assert!(peak <= c / eps);
    }

    #[test]
    fn vanishing_weighted_curvature() {
        // u²·β_ε''(u) at u = −ε equals ε·C/e
        let vals: Vec<f64> = [0.1, 0.01, 0.001]
            .iter()
            .map(|&e| e * e * beta_eps(e, -e).unwrap().j)
            .collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
        assert!(vals[2] < 1e-3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn derivative_matches_rho(eps in 0.05f64..2.0, s in -2.5f64..0.5) {
            let r = s * eps;
            let h = 1e-4 * eps;
            let fd = (beta_eps(eps, r + h).unwrap().beta - beta_eps(eps, r - h).unwrap().beta) / (2.0 * h);
            prop_assert!((fd + beta_eps(eps, r).unwrap().rho).abs() < 1e-6);
        }

        #[test]
        fn convex(eps in 0.05f64..2.0, s in -2.5f64..0.5) {
            let r = s * eps;
            let h = 1e-3 * eps;
            let b = |x: f64| beta_eps(eps, x).unwrap().beta;
            prop_assert!(b(r + h) - 2.0 * b(r) + b(r - h) >= -1e-10);
        }

        #[test]
        fn curvature_bounded(eps in 0.01f64..2.0, s in -2.0f64..0.0) {
            let b = beta_eps(eps, s * eps).unwrap();
            prop_assert!(b.j >= 0.0 && b.j <= mollifier_constant() / eps);
            prop_assert!(b.rho >= 0.0 && b.rho <= 1.0);
        }
    }
}
