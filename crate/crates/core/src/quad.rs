//! Adaptive Simpson quadrature on finite intervals.
//!
//! Improper integrals are handled by callers through a change of variables
//! onto a finite interval, or by truncating Gaussian tails.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 48;
const INITIAL_PANELS: usize = 8;

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
}

impl Panel {
    fn new<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fb: f64) -> Self {
        let m = 0.5 * (a + b);
        let fm = f(m);
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        Panel { a, b, fa, fm, fb, whole }
    }
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
///
/// The interval is first cut into a few panels so that narrow features near
/// the middle of a wide interval are not skipped by the first probe.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::invalid(format!(
            "quadrature bounds must be finite, got [{a}, {b}]"
        )));
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let h = (hi - lo) / INITIAL_PANELS as f64;
    let panel_tol = tol / INITIAL_PANELS as f64;
    let mut total = 0.0;
    let mut worst = 0.0_f64;
    let mut ok = true;
    let mut left = lo;
    let mut f_left = f(lo);
    for k in 0..INITIAL_PANELS {
        let right = if k + 1 == INITIAL_PANELS {
            hi
        } else {
            lo + (k + 1) as f64 * h
        };
        let f_right = f(right);
        let panel = Panel::new(&f, left, right, f_left, f_right);
        let (value, err, converged) = refine(&f, panel, panel_tol, MAX_DEPTH);
        total += value;
        worst += err;
        ok &= converged;
        left = right;
        f_left = f_right;
    }
    if !total.is_finite() {
        return Err(Error::Quadrature {
            achieved: f64::INFINITY,
            requested: tol,
        });
    }
    if !ok {
        return Err(Error::Quadrature {
            achieved: worst,
            requested: tol,
        });
    }
    Ok(sign * total)
}

fn refine<F: Fn(f64) -> f64>(f: &F, p: Panel, tol: f64, depth: u32) -> (f64, f64, bool) {
    let m = 0.5 * (p.a + p.b);
    let left = Panel::new(f, p.a, m, p.fa, p.fm);
    let right = Panel::new(f, m, p.b, p.fm, p.fb);
    let delta = left.whole + right.whole - p.whole;
    if !delta.is_finite() {
        return (f64::INFINITY, f64::INFINITY, false);
    }
    if delta.abs() <= 15.0 * tol {
        return (left.whole + right.whole + delta / 15.0, delta.abs() / 15.0, true);
    }
    if depth == 0 || (m - p.a) <= f64::EPSILON * m.abs().max(1.0) {
        return (left.whole + right.whole + delta / 15.0, delta.abs() / 15.0, false);
    }
    let (lv, le, lok) = refine(f, left, 0.5 * tol, depth - 1);
    let (rv, re, rok) = refine(f, right, 0.5 * tol, depth - 1);
    (lv + rv, le + re, lok && rok)
}
