//! Uniform interval meshes with homogeneous Dirichlet boundary values.
//!
//! All functionals share one quadrature rule: each interior node carries the
//! weight `dx`. Since boundary values are zero this coincides with the
//! composite trapezoid rule, so normalizations such as `∫φ = 1` close exactly
//! when evaluated by the same module.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

const EIGEN_MAX_ITERATIONS: usize = 500;
const EIGEN_TOLERANCE: f64 = 1e-15;

/// Interval `(a, b)` with `n` interior nodes `x_i = a + i·dx`, `i = 1..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct GridSpec {
    a: f64,
    b: f64,
    n: usize,
}

#[derive(Deserialize)]
struct RawGrid {
    a: f64,
    b: f64,
    n: usize,
}

impl TryFrom<RawGrid> for GridSpec {
    type Error = Error;
    fn try_from(r: RawGrid) -> Result<Self> {
        GridSpec::new(r.a, r.b, r.n)
    }
}

impl GridSpec {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || b <= a {
            return Err(Error::InvalidGrid(format!(
                "need finite endpoints with b > a, got ({a}, {b})"
            )));
        }
        if n < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 interior nodes, got {n}"
            )));
        }
        Ok(GridSpec { a, b, n })
    }

    /// Symmetric truncation `(-half_width, half_width)` of the real line.
    pub fn symmetric(half_width: f64, n: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn dx(&self) -> f64 {
        (self.b - self.a) / (self.n + 1) as f64
    }

    /// Coordinate of interior node `i` (zero based).
    pub fn node(&self, i: usize) -> f64 {
        self.a + (i + 1) as f64 * self.dx()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.node(i))
    }

    /// Closed-form smallest eigenvalue of the discrete operator `-Δ_h`.
    pub fn discrete_lambda1(&self) -> f64 {
        let dx = self.dx();
        let s = (PI * dx / (2.0 * self.length())).sin();
        4.0 * s * s / (dx * dx)
    }

    /// Smallest eigenvalue of the continuous Dirichlet Laplacian on `(a, b)`.
    pub fn continuum_lambda1(&self) -> f64 {
        (PI / self.length()).powi(2)
    }

    pub(crate) fn check(&self, f: &Field) -> Result<()> {
        if f.grid != *self {
            return Err(Error::GridMismatch {
                expected: self.n,
                found: f.values.len(),
            });
        }
        Ok(())
    }
}

/// Nodal values on the interior of a [`GridSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawField")]
pub struct Field {
    grid: GridSpec,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct RawField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl TryFrom<RawField> for Field {
    type Error = Error;
    fn try_from(r: RawField) -> Result<Self> {
        Field::new(r.grid, r.values)
    }
}

impl Field {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::GridMismatch {
                expected: grid.n,
                found: values.len(),
            });
        }
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Field {
            grid,
            values: vec![0.0; grid.n],
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> f64) -> Self {
        Field {
            grid,
            values: grid.nodes().map(f).collect(),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn scaled(&self, c: f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `∫ f dx` with the module's nodal rule.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dx()
    }
}

/// Three-point Dirichlet Laplacian `(f_{i-1} - 2 f_i + f_{i+1}) / dx²`.
pub fn dirichlet_laplacian_apply(g: &GridSpec, f: &Field) -> Result<Field> {
    g.check(f)?;
    let inv = 1.0 / (g.dx() * g.dx());
    let v = &f.values;
    let n = v.len();
    let out = (0..n)
        .map(|i| {
            let left = if i == 0 { 0.0 } else { v[i - 1] };
            let right = if i + 1 == n { 0.0 } else { v[i + 1] };
            (left - 2.0 * v[i] + right) * inv
        })
        .collect();
    Ok(Field {
        grid: *g,
        values: out,
    })
}

/// Solves `(shift·I − scale·Δ_h) x = rhs` by the Thomas algorithm.
///
/// The matrix is symmetric, diagonally dominant for `shift ≥ 0, scale > 0`,
/// so no pivoting is needed.
pub fn solve_shifted_laplacian(g: &GridSpec, shift: f64, scale: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let inv = scale / (g.dx() * g.dx());
    let diag = shift + 2.0 * inv;
    let off = -inv;
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = off / diag;
    d[0] = rhs[0] / diag;
    for i in 1..n {
        let denom = diag - off * c[i - 1];
        c[i] = off / denom;
        d[i] = (rhs[i] - off * d[i - 1]) / denom;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    x
}

/// Principal Dirichlet eigenpair `-Δ_h φ = λ1 φ`, with `φ ≥ 0` and `∫φ = 1`.
///
/// Computed by inverse power iteration; [`GridSpec::discrete_lambda1`] gives
/// the closed form used as a cross-check.
pub fn principal_eigenpair(g: &GridSpec) -> Result<(f64, Field)> {
    let n = g.n;
    let mut x = vec![1.0; n];
    let mut last_change = f64::INFINITY;
    for iteration in 1..=EIGEN_MAX_ITERATIONS {
        let mut y = solve_shifted_laplacian(g, 0.0, 1.0, &x);
        let scale = y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        y.iter_mut().for_each(|v| *v /= scale);
        last_change = x
            .iter()
            .zip(&y)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        x = y;
        if last_change <= EIGEN_TOLERANCE {
            log::debug!("inverse iteration converged in {iteration} iterations");
            return Ok(finish_eigenpair(g, x));
        }
    }
    Err(Error::EigenNotConverged {
        iterations: EIGEN_MAX_ITERATIONS,
        last_change,
    })
}

fn finish_eigenpair(g: &GridSpec, mut x: Vec<f64>) -> (f64, Field) {
    let field = Field { grid: *g, values: x.clone() };
    let lap = dirichlet_laplacian_apply(g, &field).expect("same grid");
    let num: f64 = x.iter().zip(lap.values()).map(|(a, b)| -a * b).sum();
    let den: f64 = x.iter().map(|a| a * a).sum();
    let lambda = num / den;

    if x.iter().sum::<f64>() < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
    let mass = x.iter().sum::<f64>() * g.dx();
    x.iter_mut().for_each(|v| *v /= mass);
    (lambda, Field { grid: *g, values: x })
}

/// `(f, w)` with the nodal rule.
pub fn inner_product(f: &Field, w: &Field) -> Result<f64> {
    f.grid.check(w)?;
    Ok(f.values.iter().zip(&w.values).map(|(a, b)| a * b).sum::<f64>() * f.grid.dx())
}

/// `(∫|f|^p)^{1/p}` for `p ≥ 1`.
pub fn lp_norm(f: &Field, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::invalid(format!(
            "lp_norm needs p >= 1, got {p}; use lp_integral for fractional powers"
        )));
    }
    Ok(lp_integral(f, p).powf(1.0 / p))
}

/// `∫|f|^p` without the root; defined for any `p > 0`.
pub fn lp_integral(f: &Field, p: f64) -> f64 {
    f.values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * f.grid.dx()
}

/// `∫|∇f|²` by forward differences over all `n + 1` cells, with zero boundary values.
pub fn h1_seminorm(f: &Field) -> f64 {
    let dx = f.grid.dx();
    let v = &f.values;
    let n = v.len();
    let mut acc = v[0] * v[0] + v[n - 1] * v[n - 1];
    for i in 0..n - 1 {
        let d = v[i + 1] - v[i];
        acc += d * d;
    }
    acc / dx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> GridSpec {
        GridSpec::new(0.0, 1.0, n).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(1.0, 1.0, 8).is_err());
        assert!(GridSpec::new(0.0, 1.0, 1).is_err());
        assert!(GridSpec::new(0.0, f64::NAN, 8).is_err());
    }

    #[test]
    fn laplacian_of_zero_is_zero() {
        let g = unit(16);
        let lap = dirichlet_laplacian_apply(&g, &Field::zeros(g)).unwrap();
        assert!(lap.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn laplacian_stencil_by_hand() {
        // n = 4 on (0, 5) gives dx = 1
        let g = GridSpec::new(0.0, 5.0, 4).unwrap();
        let f = Field::new(g, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let lap = dirichlet_laplacian_apply(&g, &f).unwrap();
        assert_eq!(lap.values(), &[-2.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn laplacian_grid_mismatch() {
        let f = Field::zeros(unit(8));
        assert!(matches!(
            dirichlet_laplacian_apply(&unit(9), &f),
            Err(Error::GridMismatch { .. })
        ));
    }

    #[test]
    fn laplacian_of_sine_is_second_order() {
        // max error / dx² should stay bounded under refinement
        let mut ratios = Vec::new();
        for n in [31, 63, 127, 255] {
            let g = unit(n);
            let f = Field::from_fn(g, |x| (PI * x).sin());
            let lap = dirichlet_laplacian_apply(&g, &f).unwrap();
            let err = lap
                .values()
                .iter()
                .zip(f.values())
                .fold(0.0_f64, |m, (l, v)| m.max((l + PI * PI * v).abs()));
            ratios.push(err / (g.dx() * g.dx()));
        }
        let first = ratios[0];
        for r in &ratios {
            assert!(*r < 1.1 * first && *r > 0.5 * first, "{ratios:?}");
        }
        // continuum bound: |f''''|/12 = π⁴/12
        assert!(first <= PI.powi(4) / 12.0 + 1e-6);
    }

    #[test]
    fn eigenpair_unit_interval() {
        let g = unit(256);
        let (lambda, phi) = principal_eigenpair(&g).unwrap();
        assert!(((lambda - PI * PI) / (PI * PI)).abs() < 1e-3);
        assert!((lambda - g.discrete_lambda1()).abs() < 1e-9 * lambda);
        assert!((phi.integral() - 1.0).abs() < 1e-12);
        assert!(phi.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn eigenfunction_converges_to_normalized_sine() {
        let mut prev = f64::INFINITY;
        for n in [15, 63, 255] {
            let g = unit(n);
            let (_, phi) = principal_eigenpair(&g).unwrap();
            let dev = g
                .nodes()
                .zip(phi.values())
                .fold(0.0_f64, |m, (x, v)| m.max((v - 0.5 * PI * (PI * x).sin()).abs()));
            assert!(dev < prev, "deviation not decreasing: {dev} >= {prev}");
            prev = dev;
        }
        assert!(prev < 1e-4);
    }

    #[test]
    fn eigenvalue_scales_with_length() {
        let target = PI * PI / 4.0;
        let mut prev = f64::INFINITY;
        for n in [32, 128, 512] {
            let g = GridSpec::new(0.0, 2.0, n).unwrap();
            let (lambda, _) = principal_eigenpair(&g).unwrap();
            let err = (lambda - target).abs();
            assert!(lambda < target);
            assert!(err < prev);
            prev = err;
        }
        assert!(prev / target < 1e-5);
    }

    #[test]
    fn inner_product_examples() {
        let g = unit(64);
        let (_, phi) = principal_eigenpair(&g).unwrap();
        let one = Field::from_fn(g, |_| 1.0);
        assert!((inner_product(&one, &phi).unwrap() - 1.0).abs() < 1e-10);
        assert_eq!(inner_product(&Field::zeros(g), &phi).unwrap(), 0.0);

        let h = 3.0;
        let mut spike = Field::zeros(g);
        spike.values_mut()[10] = h;
        let v = inner_product(&spike, &spike).unwrap();
        assert!((v - h * h * g.dx()).abs() < 1e-15);
    }

    #[test]
    fn lp_norm_of_constant() {
        let g = unit(100);
        let c = -2.5;
        let f = Field::from_fn(g, |_| c);
        let v = lp_norm(&f, 2.0).unwrap();
        assert!((v - c.abs()).abs() <= g.dx() * c.abs());
        assert!(lp_norm(&f, 0.5).is_err());
    }

    #[test]
    fn h1_of_sine_converges() {
        let target = PI * PI / 2.0;
        let mut prev = f64::INFINITY;
        for n in [31, 127, 511] {
            let g = unit(n);
            let f = Field::from_fn(g, |x| (PI * x).sin());
            let err = (h1_seminorm(&f) - target).abs();
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 1e-4);
    }

    #[test]
    fn zero_field_norms() {
        let f = Field::zeros(unit(8));
        assert_eq!(lp_norm(&f, 3.0).unwrap(), 0.0);
        assert_eq!(h1_seminorm(&f), 0.0);
    }

    #[test]
    fn thomas_solve_matches_apply() {
        let g = unit(20);
        let x: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).cos()).collect();
        let f = Field::new(g, x.clone()).unwrap();
        let lap = dirichlet_laplacian_apply(&g, &f).unwrap();
        let dt = 0.01;
        let rhs: Vec<f64> = x.iter().zip(lap.values()).map(|(a, l)| a - dt * l).collect();
        let back = solve_shifted_laplacian(&g, 1.0, dt, &rhs);
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
