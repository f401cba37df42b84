//! Discrete noise increments for every driving noise the solver supports.
//!
//! Increments are keyed by `(base_seed, path, step, substep)` so a path's
//! realization does not depend on which worker draws it, or when.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};

/// Relative diagonal jitter applied after a failed Cholesky attempt.
pub const CHOLESKY_JITTER: f64 = 1e-12;

/// Spatial covariance `q(x, y)` of a Wiener random field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Covariance {
    /// `q ≡ value`
    Constant { value: f64 },
    /// `q = intercept − slope·|x − y|`
    Linear { intercept: f64, slope: f64 },
    /// `q = amplitude·exp(−|x − y| / length)`
    Exponential { amplitude: f64, length: f64 },
    /// `q = amplitude·exp(−(x − y)² / (2 length²))`
    Gaussian { amplitude: f64, length: f64 },
}

impl Covariance {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let r = (x - y).abs();
        match *self {
            Covariance::Constant { value } => value,
            Covariance::Linear { intercept, slope } => intercept - slope * r,
            Covariance::Exponential { amplitude, length } => amplitude * (-r / length).exp(),
            Covariance::Gaussian { amplitude, length } => {
                amplitude * (-0.5 * (r / length).powi(2)).exp()
            }
        }
    }
}

/// Driving noise of the stochastic heat equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseModel {
    /// White in time and space; cell-averaged increments `N(0, dt/dx)`.
    SpaceTimeWhite,
    /// White in time with spatial covariance `q`.
    Correlated { covariance: Covariance },
    /// One Brownian motion shared by all nodes.
    ScalarBrownian,
    /// Scalar Brownian increment multiplied by an additive amplitude
    /// `σ(x, t)` supplied by the diffusion model.
    AdditiveAmplitude,
}

impl NoiseModel {
    pub fn name(&self) -> &'static str {
        match self {
            NoiseModel::SpaceTimeWhite => "space_time_white",
            NoiseModel::Correlated { .. } => "correlated",
            NoiseModel::ScalarBrownian => "scalar_brownian",
            NoiseModel::AdditiveAmplitude => "additive_amplitude",
        }
    }
}

/// Counter-based stream coordinates.
///
/// `substep` identifies a node of the binary refinement tree of a time step:
/// `1` is the whole step, and node `k` has children `2k` and `2k + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub base_seed: u64,
    pub path_index: u64,
    pub step_index: u64,
    pub substep: u64,
}

impl RngStream {
    pub fn new(base_seed: u64, path_index: u64, step_index: u64) -> Self {
        RngStream {
            base_seed,
            path_index,
            step_index,
            substep: 1,
        }
    }

    pub fn at_step(self, step_index: u64) -> Self {
        RngStream {
            step_index,
            substep: 1,
            ..self
        }
    }

    pub fn child(self, right: bool) -> Self {
        RngStream {
            substep: (self.substep << 1) | right as u64,
            ..self
        }
    }

    fn key(&self) -> u64 {
        let mut h = splitmix64(self.base_seed);
        for word in [self.path_index, self.step_index, self.substep] {
            h = splitmix64(h ^ word);
        }
        h
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.key())
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Noise model bound to a grid, with any covariance factorization cached.
#[derive(Debug, Clone)]
pub struct NoiseSampler {
    model: NoiseModel,
    grid: GridSpec,
    cholesky: Option<Vec<f64>>,
}

impl NoiseSampler {
    pub fn new(model: NoiseModel, grid: GridSpec) -> Result<Self> {
        let cholesky = match model {
            NoiseModel::Correlated { covariance } => Some(factor_covariance(&covariance, &grid)?),
            _ => None,
        };
        Ok(NoiseSampler {
            model,
            grid,
            cholesky,
        })
    }

    pub fn model(&self) -> &NoiseModel {
        &self.model
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Increment over a step of length `dt`. Deterministic given `stream`.
    pub fn sample(&self, dt: f64, stream: RngStream) -> Field {
        let n = self.grid.n();
        let mut rng = stream.rng();
        let mut z = || -> f64 { StandardNormal.sample(&mut rng) };
        let values = match self.model {
            NoiseModel::SpaceTimeWhite => {
                let sd = (dt / self.grid.dx()).sqrt();
                (0..n).map(|_| sd * z()).collect()
            }
            NoiseModel::ScalarBrownian | NoiseModel::AdditiveAmplitude => {
                vec![dt.sqrt() * z(); n]
            }
            NoiseModel::Correlated { .. } => {
                let l = self.cholesky.as_ref().expect("factored at construction");
                let draws: Vec<f64> = (0..n).map(|_| z()).collect();
                let sd = dt.sqrt();
                (0..n)
                    .map(|i| {
                        let row = &l[i * n..i * n + i + 1];
                        sd * row.iter().zip(&draws).map(|(a, b)| a * b).sum::<f64>()
                    })
                    .collect()
            }
        };
        Field::new(self.grid, values).expect("sized to grid")
    }
}

/// One increment for `(model, grid, dt, stream)`.
///
/// Builds a fresh [`NoiseSampler`]; hold on to a sampler when drawing many
/// correlated increments.
pub fn sample_increment(model: NoiseModel, g: &GridSpec, dt: f64, stream: RngStream) -> Result<Field> {
    if !(dt > 0.0) {
        return Err(Error::invalid(format!("increment needs dt > 0, got {dt}")));
    }
    Ok(NoiseSampler::new(model, *g)?.sample(dt, stream))
}

/// `(q1, q0)`: minimum and maximum of `q` over node pairs of the closed
/// interval, endpoints included.
pub fn covariance_bounds(q: impl Fn(f64, f64) -> f64, g: &GridSpec) -> (f64, f64) {
    let pts: Vec<f64> = std::iter::once(g.a())
        .chain(g.nodes())
        .chain(std::iter::once(g.b()))
        .collect();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in &pts {
        for &y in &pts {
            let v = q(x, y);
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    (lo, hi)
}

fn factor_covariance(q: &Covariance, g: &GridSpec) -> Result<Vec<f64>> {
    let n = g.n();
    let nodes: Vec<f64> = g.nodes().collect();
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = q.eval(nodes[i], nodes[j]);
        }
    }
    for i in 0..n {
        if m[i * n + i] < 0.0 {
            return Err(Error::NotPositiveSemidefinite {
                index: i,
                pivot: m[i * n + i],
            });
        }
    }
    match cholesky(&m, n) {
        Ok(l) => Ok(l),
        Err(_) => {
            let trace: f64 = (0..n).map(|i| m[i * n + i]).sum();
            let jitter = CHOLESKY_JITTER * trace;
            log::debug!("covariance Cholesky retried with diagonal jitter {jitter:e}");
            for i in 0..n {
                m[i * n + i] += jitter;
            }
            cholesky(&m, n).map_err(|(index, pivot)| Error::NotPositiveSemidefinite { index, pivot })
        }
    }
}

/// Dense lower Cholesky factor, row-major. Fails on pivots that are not
/// clearly positive relative to the diagonal scale.
fn cholesky(m: &[f64], n: usize) -> std::result::Result<Vec<f64>, (usize, f64)> {
    let scale = (0..n).map(|i| m[i * n + i].abs()).fold(0.0_f64, f64::max);
    let floor = 1e-14 * scale;
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = m[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > floor) {
                    return Err((i, s));
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> GridSpec {
        GridSpec::new(0.0, 1.0, n).unwrap()
    }

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn scalar_brownian_replicates() {
        let g = unit(16);
        let f = sample_increment(NoiseModel::ScalarBrownian, &g, 0.01, RngStream::new(7, 0, 0)).unwrap();
        assert!(f.values().iter().all(|&v| v == f.values()[0]));
        assert!(f.values()[0] != 0.0);
    }

    #[test]
    fn deterministic_per_stream() {
        let g = unit(8);
        let models = [
            NoiseModel::SpaceTimeWhite,
            NoiseModel::ScalarBrownian,
            NoiseModel::Correlated {
                covariance: Covariance::Exponential { amplitude: 1.0, length: 0.3 },
            },
        ];
        for m in models {
            let s = RngStream::new(42, 3, 11);
            let a = sample_increment(m, &g, 1e-3, s).unwrap();
            let b = sample_increment(m, &g, 1e-3, s).unwrap();
            assert_eq!(a, b);
            let c = sample_increment(m, &g, 1e-3, s.child(true)).unwrap();
            assert_ne!(a, c);
            let d = sample_increment(m, &g, 1e-3, RngStream::new(42, 4, 11)).unwrap();
            assert_ne!(a, d);
        }
    }

    #[test]
    fn white_noise_variance() {
        let g = unit(20);
        let dt = 1e-3;
        let sampler = NoiseSampler::new(NoiseModel::SpaceTimeWhite, g).unwrap();
        let draws: Vec<f64> = (0..100_000)
            .map(|k| sampler.sample(dt, RngStream::new(1, 0, k)).values()[7])
            .collect();
        let (_, var) = mean_var(&draws);
        let target = dt / g.dx();
        // standard error of a Gaussian sample variance: σ²·sqrt(2/(N−1))
        let se = target * (2.0 / (draws.len() as f64 - 1.0)).sqrt();
        assert!((var - target).abs() < 3.0 * se, "{var} vs {target} ± {se}");
    }

    #[test]
    fn white_noise_isometry() {
        let dt = 0.01;
        for n in [16, 64] {
            let g = unit(n);
            let test = Field::from_fn(g, |x| x * (1.0 - x));
            let target = dt * crate::grid::inner_product(&test, &test).unwrap();
            let sampler = NoiseSampler::new(NoiseModel::SpaceTimeWhite, g).unwrap();
            let draws: Vec<f64> = (0..40_000)
                .map(|k| {
                    let xi = sampler.sample(dt, RngStream::new(5, 0, k));
                    crate::grid::inner_product(&test, &xi).unwrap()
                })
                .collect();
            let (_, var) = mean_var(&draws);
            let se = target * (2.0 / (draws.len() as f64 - 1.0)).sqrt();
            assert!((var - target).abs() < 4.0 * se, "n={n}: {var} vs {target}");
        }
    }

    #[test]
    fn correlated_constant_matches_scalar_brownian() {
        let g = unit(12);
        let dt = 0.02;
        let sampler = NoiseSampler::new(
            NoiseModel::Correlated {
                covariance: Covariance::Constant { value: 1.0 },
            },
            g,
        )
        .unwrap();
        let mut firsts = Vec::new();
        for k in 0..50_000 {
            let f = sampler.sample(dt, RngStream::new(9, 0, k));
            let v = f.values();
            let spread = v.iter().fold(0.0_f64, |m, x| m.max((x - v[0]).abs()));
            assert!(spread < 1e-4 * (1.0 + v[0].abs()));
            firsts.push(v[0]);
        }
        let (_, var) = mean_var(&firsts);
        let se = dt * (2.0 / (firsts.len() as f64 - 1.0)).sqrt();
        assert!((var - dt).abs() < 4.0 * se);
    }

    #[test]
    fn correlated_empirical_covariance() {
        let g = unit(4);
        let q = Covariance::Exponential { amplitude: 1.5, length: 0.4 };
        let dt = 0.1;
        let sampler = NoiseSampler::new(NoiseModel::Correlated { covariance: q }, g).unwrap();
        let m = 100_000;
        let samples: Vec<Vec<f64>> = (0..m)
            .map(|k| sampler.sample(dt, RngStream::new(2, 1, k)).into_values())
            .collect();
        let nodes: Vec<f64> = g.nodes().collect();
        for i in 0..4 {
            for j in 0..4 {
                let prods: Vec<f64> = samples.iter().map(|s| s[i] * s[j]).collect();
                let (mean, var) = mean_var(&prods);
                let se = (var / m as f64).sqrt();
                let target = dt * q.eval(nodes[i], nodes[j]);
                assert!((mean - target).abs() < 5.0 * se, "({i},{j}) {mean} vs {target}");
            }
        }
    }

    #[test]
    fn indefinite_covariance_is_rejected() {
        let g = unit(6);
        let q = Covariance::Linear { intercept: 0.1, slope: 5.0 };
        let r = NoiseSampler::new(NoiseModel::Correlated { covariance: q }, g);
        assert!(matches!(r, Err(Error::NotPositiveSemidefinite { .. })));
    }

    #[test]
    fn bounds_examples() {
        let g = unit(50);
        assert_eq!(covariance_bounds(|_, _| 3.0, &g), (3.0, 3.0));
        let (q1, q0) = covariance_bounds(|x, y| 2.0 - (x - y).abs(), &g);
        assert!((q1 - 1.0).abs() < 1e-15 && (q0 - 2.0).abs() < 1e-15);
        let (q1, q0) = covariance_bounds(|x, y| (-(x - y).abs()).exp(), &g);
        assert!((q1 - (-1.0f64).exp()).abs() < 1e-15 && q0 == 1.0);
    }

    #[test]
    fn zero_dt_rejected() {
        assert!(sample_increment(NoiseModel::SpaceTimeWhite, &unit(4), 0.0, RngStream::new(0, 0, 0)).is_err());
    }
}
