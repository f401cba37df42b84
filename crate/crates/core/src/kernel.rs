//! Gaussian heat kernels, convolution quadrature and numerical checks of the
//! kernel product inequalities used in whole-space moment estimates.
//!
//! Two conventions are provided. [`KernelConvention::HalfLaplacian`] is
//! `(2πt)^{-d/2} exp(-|x|²/2t)`, which solves `∂_t K = ½ΔK`.
//! [`KernelConvention::Laplacian`] is `(4πt)^{-d/2} exp(-|x|²/4t)`, the kernel
//! of `∂_t - Δ` and the one consistent with the simulator. Neither is
//! silently substituted for the other.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::quad;

/// Gaussian tails are cut at this many standard deviations.
pub const TAIL_SIGMAS: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelConvention {
    /// Variance `t` per coordinate.
    HalfLaplacian,
    /// Variance `2t` per coordinate.
    Laplacian,
}

impl KernelConvention {
    /// Per-coordinate variance of `K(t, ·)`.
    pub fn variance(self, t: f64) -> f64 {
        match self {
            KernelConvention::HalfLaplacian => t,
            KernelConvention::Laplacian => 2.0 * t,
        }
    }

    /// Diffusivity `κ` with `∂_t K = κΔK`.
    pub fn diffusivity(self) -> f64 {
        match self {
            KernelConvention::HalfLaplacian => 0.5,
            KernelConvention::Laplacian => 1.0,
        }
    }
}

/// `K(t, x)` for `x ∈ ℝ^d`, `d = x.len()`.
pub fn heat_kernel(t: f64, x: &[f64], conv: KernelConvention) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::invalid(format!("heat kernel needs t > 0, got {t}")));
    }
    if x.is_empty() {
        return Err(Error::invalid("heat kernel needs dimension d >= 1"));
    }
    let v = conv.variance(t);
    let r2: f64 = x.iter().map(|c| c * c).sum();
    let d = x.len() as i32;
    Ok((2.0 * PI * v).powf(-0.5 * d as f64) * (-r2 / (2.0 * v)).exp())
}

/// One-dimensional kernel without argument checks, for inner loops.
#[inline]
pub fn kernel_1d(t: f64, x: f64, conv: KernelConvention) -> f64 {
    let v = conv.variance(t);
    (-x * x / (2.0 * v)).exp() / (2.0 * PI * v).sqrt()
}

/// Integrates `f` against an implicit Gaussian envelope of the given mean and
/// standard deviation, truncating at [`TAIL_SIGMAS`].
pub fn gaussian_window_integral(
    f: impl Fn(f64) -> f64,
    mean: f64,
    sd: f64,
    tol: f64,
) -> Result<f64> {
    quad::integrate(f, mean - TAIL_SIGMAS * sd, mean + TAIL_SIGMAS * sd, tol)
}

/// `∫ K(t, x) dx` by quadrature (one dimension).
pub fn kernel_mass(t: f64, conv: KernelConvention) -> Result<f64> {
    let sd = conv.variance(t).sqrt();
    gaussian_window_integral(|x| kernel_1d(t, x, conv), 0.0, sd, 1e-13)
}

/// `(K(t) ∗ K(s))(x)` by quadrature, to compare with `K(t + s, x)`.
pub fn kernel_self_convolution(t: f64, s: f64, x: f64, conv: KernelConvention) -> Result<f64> {
    let (vt, vs) = (conv.variance(t), conv.variance(s));
    let mean = x * vs / (vt + vs);
    let sd = (vt * vs / (vt + vs)).sqrt();
    let scale = kernel_1d(t + s, x, conv);
    gaussian_window_integral(
        |y| kernel_1d(t, x - y, conv) * kernel_1d(s, y, conv),
        mean,
        sd,
        1e-12 * scale.max(1e-300),
    )
}

/// Result of [`kernel_convolve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Convolution {
    pub value: f64,
    /// Set when `dx > √t / 4`; the nodal sum under-resolves the kernel.
    pub coarse_mesh: bool,
}

/// `∫ K(t, x − y) u0(y) dy` for `u0` sampled on a truncated mesh.
pub fn kernel_convolve(u0: &Field, t: f64, x: f64, conv: KernelConvention) -> Result<Convolution> {
    if !(t > 0.0) {
        return Err(Error::invalid(format!("convolution needs t > 0, got {t}")));
    }
    let g = u0.grid();
    let dx = g.dx();
    let coarse_mesh = dx > t.sqrt() / 4.0;
    if coarse_mesh {
        log::warn!("mesh spacing {dx} is coarse relative to sqrt(t) = {}", t.sqrt());
    }
    let value = g
        .nodes()
        .zip(u0.values())
        .map(|(y, v)| kernel_1d(t, x - y, conv) * v)
        .sum::<f64>()
        * dx;
    Ok(Convolution { value, coarse_mesh })
}

/// Constant `C` for the lower bound `I(t, x) ≥ C (2πt)^{-1/2} exp(-x²/2t)`,
/// `t ≥ 1`, where `I = K ∗ u0` under [`KernelConvention::HalfLaplacian`] and
/// `u0 ≥ c1` on `(-1, 1)`.
///
/// Keeping only the half of the unit ball on the same side as `x` gives
/// `(x − y)² ≤ x² + y²`, hence `C = c1 ∫_0^1 exp(-y²/2) dy`.
pub fn indicator_lower_bound_constant(c1: f64) -> f64 {
    c1 * quad::integrate(|y| (-0.5 * y * y).exp(), 0.0, 1.0, 1e-14).expect("smooth integrand")
}

/// Right-hand side of the indicator lower bound at `(t, x)`.
pub fn indicator_lower_bound(c1: f64, t: f64, x: f64) -> f64 {
    indicator_lower_bound_constant(c1) * kernel_1d(t, x, KernelConvention::HalfLaplacian)
}

/// One `(s, t, y)` sample of the kernel product ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProductBoundRow {
    pub s: f64,
    pub t: f64,
    pub y: f64,
    /// `∫K(t,x)K(t−s,x−y)dx / [K(s,y)(s/t)^{1/2}]`
    pub mean_form: f64,
    /// `∫K(t,x)K²(t−s,x−y)dx / [K(s,y)(2πs)^{1/2}(2πt)^{-1/2}(2π(t−s))^{-1}(t−s)^{1/2}]`
    pub square_form: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductBoundScan {
    pub convention: KernelConvention,
    pub rows: Vec<ProductBoundRow>,
    /// Empirical constant for the single-kernel product bound (minimum ratio).
    pub c3_mean_form: f64,
    /// Empirical constant for the squared-kernel product bound.
    pub c3_square_form: f64,
}

/// `∫ K(t, x) K(τ, x − y)^power dx` for `power ∈ {1, 2}` by quadrature.
pub fn kernel_product_integral(
    t: f64,
    tau: f64,
    y: f64,
    squared: bool,
    conv: KernelConvention,
) -> Result<f64> {
    let v1 = conv.variance(t);
    let v2 = if squared {
        0.5 * conv.variance(tau)
    } else {
        conv.variance(tau)
    };
    let mean = y * v1 / (v1 + v2);
    let var = v1 * v2 / (v1 + v2);
    let integrand = |x: f64| {
        let k = kernel_1d(tau, x - y, conv);
        kernel_1d(t, x, conv) * if squared { k * k } else { k }
    };
    let peak = integrand(mean) * (2.0 * PI * var).sqrt();
    gaussian_window_integral(integrand, mean, var.sqrt(), 1e-10 * peak.max(1e-300))
}

/// Scans the two kernel product ratios over `s = frac·t`, `t`, `y`, and
/// returns the minima as empirical constants.
pub fn kernel_product_bound_scan(
    s_fractions: &[f64],
    t_grid: &[f64],
    y_grid: &[f64],
    conv: KernelConvention,
) -> Result<ProductBoundScan> {
    let mut rows = Vec::new();
    for &t in t_grid {
        for &frac in s_fractions {
            let s = frac * t;
            if !(s > 0.0 && s < t) {
                return Err(Error::invalid(format!(
                    "kernel product scan needs 0 < s < t, got s = {s}, t = {t}"
                )));
            }
            let tau = t - s;
            for &y in y_grid {
                let ks = kernel_1d(s, y, conv);
                let mean_num = kernel_product_integral(t, tau, y, false, conv)?;
                let mean_den = ks * (s / t).sqrt();
                let sq_num = kernel_product_integral(t, tau, y, true, conv)?;
                let sq_den = ks * (2.0 * PI * s).sqrt() / (2.0 * PI * t).sqrt()
                    / (2.0 * PI * tau)
                    * tau.sqrt();
                rows.push(ProductBoundRow {
                    s,
                    t,
                    y,
                    mean_form: mean_num / mean_den,
                    square_form: sq_num / sq_den,
                });
            }
        }
    }
    let c3_mean_form = rows.iter().map(|r| r.mean_form).fold(f64::INFINITY, f64::min);
    let c3_square_form = rows.iter().map(|r| r.square_form).fold(f64::INFINITY, f64::min);
    Ok(ProductBoundScan {
        convention: conv,
        rows,
        c3_mean_form,
        c3_square_form,
    })
}
