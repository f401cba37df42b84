//! Drift and diffusion coefficient families.
//!
//! Every family is a closed power law so analytic oracles can read its
//! constants directly.

use serde::{Deserialize, Serialize};

use crate::grid::Field;

/// Drift term `f(u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftSpec {
    Zero,
    /// `c0·|u|^(p−1)·u`
    PowerOdd { c0: f64, p: f64 },
    /// `c0·u^p` for `u > 0`, zero otherwise.
    PowerPos { c0: f64, p: f64 },
}

impl DriftSpec {
    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            DriftSpec::Zero => 0.0,
            DriftSpec::PowerOdd { c0, p } => c0 * u.abs().powf(p).copysign(u),
            DriftSpec::PowerPos { c0, p } => {
                if u > 0.0 {
                    c0 * u.powf(p)
                } else {
                    0.0
                }
            }
        }
    }

    /// `(c0, p)` when the drift is a power law.
    pub fn power(&self) -> Option<(f64, f64)> {
        match *self {
            DriftSpec::Zero => None,
            DriftSpec::PowerOdd { c0, p } | DriftSpec::PowerPos { c0, p } => Some((c0, p)),
        }
    }

    /// True when `f(r) ≥ 0` for every `r ≤ 0`.
    pub fn nonnegative_below_zero(&self) -> bool {
        !matches!(self, DriftSpec::PowerOdd { .. })
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, DriftSpec::Zero)
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if let Some((c0, p)) = self.power() {
            if !(c0 > 0.0 && c0.is_finite()) {
                return Err(format!("drift c0 must be positive, got {c0}"));
            }
            if !(p > 0.0 && p.is_finite()) {
                return Err(format!("drift p must be positive, got {p}"));
            }
        }
        Ok(())
    }
}

/// Spatial shape of an additive amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Uniform,
    /// `sin(wavenumber·(x − origin))`
    Sine { wavenumber: f64, origin: f64 },
    /// `exp(−(x − center)² / (2 width²))`
    Gaussian { center: f64, width: f64 },
}

impl Profile {
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Profile::Uniform => 1.0,
            Profile::Sine { wavenumber, origin } => (wavenumber * (x - origin)).sin(),
            Profile::Gaussian { center, width } => (-0.5 * ((x - center) / width).powi(2)).exp(),
        }
    }

    pub fn gradient(&self, x: f64) -> f64 {
        match *self {
            Profile::Uniform => 0.0,
            Profile::Sine { wavenumber, origin } => wavenumber * (wavenumber * (x - origin)).cos(),
            Profile::Gaussian { center, width } => {
                -(x - center) / (width * width) * self.value(x)
            }
        }
    }
}

/// Additive noise amplitude `σ(x, t) = amp·exp(−rate·t)·profile(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Amplitude {
    pub amp: f64,
    pub rate: f64,
    pub profile: Profile,
}

impl Amplitude {
    pub fn value(&self, x: f64, t: f64) -> f64 {
        self.amp * (-self.rate * t).exp() * self.profile.value(x)
    }

    pub fn gradient(&self, x: f64, t: f64) -> f64 {
        self.amp * (-self.rate * t).exp() * self.profile.gradient(x)
    }

    pub fn scaled(&self, c: f64) -> Amplitude {
        Amplitude {
            amp: c * self.amp,
            ..*self
        }
    }
}

/// Functional form of `σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DiffusionKind {
    Zero,
    /// `c·|u|^gamma`
    PowerAbs { c: f64, gamma: f64 },
    /// `c·u`
    Linear { c: f64 },
    /// `σ(x, t)`, independent of `u`.
    Additive { amplitude: Amplitude },
}

/// Declared envelope `c1·|u|^gamma ≤ |σ(u)| ≤ c2·|u|^gamma1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionBounds {
    pub c1: f64,
    pub c2: f64,
    pub gamma: f64,
    pub gamma1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionSpec {
    pub kind: DiffusionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<DiffusionBounds>,
}

impl DiffusionSpec {
    pub fn zero() -> Self {
        DiffusionSpec {
            kind: DiffusionKind::Zero,
            bounds: None,
        }
    }

    pub fn power_abs(c: f64, gamma: f64) -> Self {
        DiffusionSpec {
            kind: DiffusionKind::PowerAbs { c, gamma },
            bounds: Some(DiffusionBounds {
                c1: c,
                c2: c,
                gamma,
                gamma1: gamma,
            }),
        }
    }

    pub fn linear(c: f64) -> Self {
        DiffusionSpec {
            kind: DiffusionKind::Linear { c },
            bounds: Some(DiffusionBounds {
                c1: c.abs(),
                c2: c.abs(),
                gamma: 1.0,
                gamma1: 1.0,
            }),
        }
    }

    pub fn additive(amplitude: Amplitude) -> Self {
        DiffusionSpec {
            kind: DiffusionKind::Additive { amplitude },
            bounds: None,
        }
    }

    pub fn with_bounds(self, bounds: DiffusionBounds) -> Self {
        DiffusionSpec {
            bounds: Some(bounds),
            ..self
        }
    }

    #[inline]
    pub fn eval(&self, u: f64, x: f64, t: f64) -> f64 {
        match self.kind {
            DiffusionKind::Zero => 0.0,
            DiffusionKind::PowerAbs { c, gamma } => c * u.abs().powf(gamma),
            DiffusionKind::Linear { c } => c * u,
            DiffusionKind::Additive { amplitude } => amplitude.value(x, t),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, DiffusionKind::Zero)
    }

    pub fn is_additive(&self) -> bool {
        matches!(self.kind, DiffusionKind::Additive { .. })
    }

    /// Power-law exponent of `|σ(u)|`, when there is one.
    pub fn exponent(&self) -> Option<f64> {
        match self.kind {
            DiffusionKind::PowerAbs { gamma, .. } => Some(gamma),
            DiffusionKind::Linear { .. } => Some(1.0),
            _ => None,
        }
    }

    /// True when `σ(0) = 0` at every `(x, t)`.
    pub fn vanishes_at_zero(&self) -> bool {
        match self.kind {
            DiffusionKind::Zero | DiffusionKind::Linear { .. } => true,
            DiffusionKind::PowerAbs { gamma, .. } => gamma > 0.0,
            DiffusionKind::Additive { .. } => false,
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        match self.kind {
            DiffusionKind::PowerAbs { c, gamma } if !(c.is_finite() && gamma > 0.0) => {
                return Err(format!("power diffusion needs finite c and gamma > 0, got c={c}, gamma={gamma}"));
            }
            DiffusionKind::Additive { amplitude } if !(amplitude.rate >= 0.0) => {
                return Err(format!("additive amplitude rate must be ≥ 0, got {}", amplitude.rate));
            }
            _ => {}
        }
        if let Some(b) = self.bounds {
            if !(b.c1 > 0.0 && b.c2 > 0.0 && b.gamma1 >= b.gamma) {
                return Err(format!(
                    "bounds need c1 > 0, c2 > 0 and gamma1 ≥ gamma, got {b:?}"
                ));
            }
        }
        Ok(())
    }
}

/// Drift and diffusion together.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub drift: DriftSpec,
    pub diffusion: DiffusionSpec,
}

pub fn evaluate_drift(spec: &DriftSpec, u: &Field) -> Field {
    u.map(|v| spec.eval(v))
}

pub fn evaluate_diffusion(spec: &DiffusionSpec, u: &Field, t: f64) -> Field {
    let grid = *u.grid();
    let values = grid
        .nodes()
        .zip(u.values())
        .map(|(x, &v)| spec.eval(v, x, t))
        .collect();
    Field::new(grid, values).expect("sized to grid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSide {
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    /// Largest of `c1|u|^γ / |σ(u)|` and `|σ(u)| / (c2|u|^γ1)` over the samples.
    pub worst_ratio: f64,
    pub worst_at: f64,
    pub worst_side: BoundSide,
    pub passed: bool,
    pub note: Option<String>,
}

/// Checks the declared envelope on `u ∈ {±10^k : k = −6..6}`.
pub fn verify_bounds(spec: &DiffusionSpec) -> BoundsReport {
    let Some(b) = spec.bounds else {
        return BoundsReport {
            worst_ratio: 1.0,
            worst_at: 0.0,
            worst_side: BoundSide::Lower,
            passed: true,
            note: Some("no bounds declared".into()),
        };
    };
    if spec.is_additive() {
        return BoundsReport {
            worst_ratio: f64::INFINITY,
            worst_at: 0.0,
            worst_side: BoundSide::Lower,
            passed: false,
            note: Some("additive amplitude does not depend on u; power bounds do not apply".into()),
        };
    }
    let mut worst = (0.0_f64, 0.0, BoundSide::Lower);
    for k in -6..=6 {
        for sign in [1.0, -1.0] {
            let u = sign * 10f64.powi(k);
            let s = spec.eval(u, 0.0, 0.0).abs();
            let lower = b.c1 * u.abs().powf(b.gamma);
            let upper = b.c2 * u.abs().powf(b.gamma1);
            let lo_ratio = if s > 0.0 { lower / s } else { f64::INFINITY };
            let hi_ratio = if upper > 0.0 {
                s / upper
            } else if s > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            if lo_ratio > worst.0 {
                worst = (lo_ratio, u, BoundSide::Lower);
            }
            if hi_ratio > worst.0 {
                worst = (hi_ratio, u, BoundSide::Upper);
            }
        }
    }
    BoundsReport {
        worst_ratio: worst.0,
        worst_at: worst.1,
        worst_side: worst.2,
        passed: worst.0 <= 1.0 + 1e-12,
        note: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use proptest::prelude::*;

    #[test]
    fn drift_examples() {
        assert_eq!(DriftSpec::PowerOdd { c0: 1.0, p: 2.0 }.eval(-3.0), -9.0);
        assert_eq!(DriftSpec::PowerPos { c0: 1.0, p: 2.0 }.eval(-3.0), 0.0);
        assert_eq!(DriftSpec::PowerOdd { c0: 1.0, p: 0.5 }.eval(0.0), 0.0);
        let g = GridSpec::new(0.0, 1.0, 8).unwrap();
        let u = Field::from_fn(g, |x| x - 0.5);
        let f = evaluate_drift(&DriftSpec::Zero, &u);
        assert!(f.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn diffusion_examples() {
        assert_eq!(DiffusionSpec::power_abs(1.0, 1.5).eval(4.0, 0.0, 0.0), 8.0);
        assert_eq!(DiffusionSpec::linear(2.0).eval(-1.5, 0.0, 0.0), -3.0);
        let a = Amplitude {
            amp: 2.0,
            rate: 1.0,
            profile: Profile::Uniform,
        };
        let s = DiffusionSpec::additive(a);
        assert!((s.eval(123.0, 0.3, 1.0) - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn overflow_maps_to_infinity() {
        let f = DriftSpec::PowerOdd { c0: 1.0, p: 4.0 }.eval(1e100);
        assert!(f.is_infinite() && f > 0.0);
        let s = DiffusionSpec::power_abs(1.0, 4.0).eval(-1e100, 0.0, 0.0);
        assert!(s.is_infinite());
    }

    #[test]
    fn bounds_examples() {
        let tight = DiffusionSpec::power_abs(2.0, 1.5);
        assert!(verify_bounds(&tight).passed);
        let loose = tight.with_bounds(DiffusionBounds {
            c1: 3.0,
            c2: 2.0,
            gamma: 1.5,
            gamma1: 1.5,
        });
        let r = verify_bounds(&loose);
        assert!(!r.passed);
        assert!((r.worst_ratio - 1.5).abs() < 1e-12);
        assert_eq!(r.worst_side, BoundSide::Lower);
        assert!(verify_bounds(&DiffusionSpec::linear(1.0)).passed);
    }

    #[test]
    fn upper_bound_violation() {
        let s = DiffusionSpec::power_abs(1.0, 2.0).with_bounds(DiffusionBounds {
            c1: 1.0,
            c2: 0.5,
            gamma: 2.0,
            gamma1: 2.0,
        });
        let r = verify_bounds(&s);
        assert!(!r.passed);
        assert!((r.worst_ratio - 2.0).abs() < 1e-12);
        assert_eq!(r.worst_side, BoundSide::Upper);
    }

    #[test]
    fn amplitude_gradient_matches_difference() {
        let a = Amplitude {
            amp: 1.3,
            rate: 0.7,
            profile: Profile::Gaussian { center: 0.2, width: 0.3 },
        };
        let b = Amplitude {
            profile: Profile::Sine { wavenumber: 3.0, origin: 0.1 },
            ..a
        };
        for amp in [a, b] {
            for &x in &[-0.4, 0.0, 0.35, 0.9] {
                let h = 1e-6;
                let fd = (amp.value(x + h, 0.5) - amp.value(x - h, 0.5)) / (2.0 * h);
                assert!((fd - amp.gradient(x, 0.5)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn serde_round_trip() {
        let m = ModelSpec {
            drift: DriftSpec::PowerPos { c0: 1.0, p: 2.0 },
            diffusion: DiffusionSpec::additive(Amplitude {
                amp: 0.5,
                rate: 2.0,
                profile: Profile::Sine { wavenumber: std::f64::consts::PI, origin: 0.0 },
            }),
        };
        let s = serde_json::to_string(&m).unwrap();
        let back: ModelSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(m, back);
    }

    proptest! {
        #[test]
        fn power_pos_nonnegative_for_nonpositive(u in -1e6f64..=0.0, c0 in 0.01f64..10.0, p in 0.1f64..6.0) {
            let f = DriftSpec::PowerPos { c0, p };
            prop_assert!(f.eval(u) >= 0.0);
        }

        #[test]
        fn power_odd_is_odd(u in -1e3f64..1e3, c0 in 0.01f64..10.0, p in 0.1f64..6.0) {
            let f = DriftSpec::PowerOdd { c0, p };
            prop_assert_eq!(f.eval(-u), -f.eval(u));
        }

        #[test]
        fn power_abs_is_even_and_vanishes(u in -1e3f64..1e3, c in 0.01f64..10.0, g in 0.1f64..4.0) {
            let s = DiffusionSpec::power_abs(c, g);
            prop_assert_eq!(s.eval(u, 0.0, 0.0), s.eval(-u, 0.0, 0.0));
            prop_assert_eq!(s.eval(0.0, 0.0, 0.0), 0.0);
        }
    }
}
