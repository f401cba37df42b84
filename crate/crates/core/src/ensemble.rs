//! Monte Carlo moment estimation over independent paths.
//!
//! Paths run in parallel; statistics are reduced in path-index order so the
//! output does not depend on scheduling. A path that has blown up contributes
//! the functional evaluated at the state that triggered the verdict, and
//! every estimate receiving such a contribution is flagged as censored.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::grid::{h1_seminorm, inner_product, lp_integral, Field};
use crate::integrator::{Simulator, Verdict};
use crate::model::evaluate_diffusion;
use crate::noise::NoiseModel;

/// Quantity averaged over paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Functional {
    /// `E (u, φ)²`
    SquaredEigenMoment,
    /// `E (u, φ)^eps`, paths with `(u, φ) ≤ 0` contributing zero.
    EpsEigenMoment { eps: f64 },
    /// `E ∫|u|^p`
    LpMoment { p: f64 },
    /// `E ∫|∇u|²`
    GradientEnergy,
    /// `E[−2∫|∇u|² + 2∫u·f(u) + Itô correction]`, the drift of `E ∫u²`.
    EnergyBalance,
    /// `E u(x, t)` at every node.
    MeanField,
    /// `E u(x, t)²` at every node.
    SecondMomentField,
}

impl Functional {
    pub fn name(&self) -> String {
        match *self {
            Functional::SquaredEigenMoment => "squared_eigen_moment".into(),
            Functional::EpsEigenMoment { eps } => format!("eps_eigen_moment({eps})"),
            Functional::LpMoment { p } => format!("lp_moment({p})"),
            Functional::GradientEnergy => "gradient_energy".into(),
            Functional::EnergyBalance => "energy_balance".into(),
            Functional::MeanField => "mean_field".into(),
            Functional::SecondMomentField => "second_moment_field".into(),
        }
    }

    pub fn is_field(&self) -> bool {
        matches!(self, Functional::MeanField | Functional::SecondMomentField)
    }

    fn scalar(&self, u: &Field, t: f64, sim: &Simulator) -> f64 {
        let phi = sim.phi();
        match *self {
            Functional::SquaredEigenMoment => inner_product(u, phi).expect("same grid").powi(2),
            Functional::EpsEigenMoment { eps } => {
                let v = inner_product(u, phi).expect("same grid");
                if v > 0.0 {
                    v.powf(eps)
                } else {
                    0.0
                }
            }
            Functional::LpMoment { p } => lp_integral(u, p),
            Functional::GradientEnergy => h1_seminorm(u),
            Functional::EnergyBalance => energy_balance(u, t, sim),
            Functional::MeanField | Functional::SecondMomentField => {
                unreachable!("field functional evaluated as scalar")
            }
        }
    }

    fn field(&self, u: &Field) -> Vec<f64> {
        match self {
            Functional::MeanField => u.values().to_vec(),
            Functional::SecondMomentField => u.values().iter().map(|v| v * v).collect(),
            _ => unreachable!("scalar functional evaluated as field"),
        }
    }
}

/// `−2∫|∇u|² + 2∫u·f(u) + Σ_i q(x_i, x_i)·σ_i²·w_i`, where the Itô weight
/// `w_i` is 1 for space-time white noise and `dx` otherwise.
fn energy_balance(u: &Field, t: f64, sim: &Simulator) -> f64 {
    let model = sim.model();
    let g = u.grid();
    let dx = g.dx();
    let sigma = evaluate_diffusion(&model.diffusion, u, t);
    let forcing: f64 = u.values().iter().map(|&v| v * model.drift.eval(v)).sum::<f64>() * dx;
    let ito: f64 = match sim.noise() {
        NoiseModel::SpaceTimeWhite => sigma.values().iter().map(|s| s * s).sum(),
        NoiseModel::Correlated { covariance } => g
            .nodes()
            .zip(sigma.values())
            .map(|(x, s)| covariance.eval(x, x) * s * s)
            .sum::<f64>()
            * dx,
        NoiseModel::ScalarBrownian | NoiseModel::AdditiveAmplitude => {
            sigma.values().iter().map(|s| s * s).sum::<f64>() * dx
        }
    };
    -2.0 * h1_seminorm(u) + 2.0 * forcing + ito
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub m_paths: usize,
    pub base_seed: u64,
    pub functionals: Vec<Functional>,
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m_paths == 0 {
            return Err(Error::invalid("m_paths must be at least 1"));
        }
        for f in &self.functionals {
            match *f {
                Functional::EpsEigenMoment { eps } if !(eps > 0.0 && eps < 1.0) => {
                    return Err(Error::invalid(format!("eps moment needs 0 < eps < 1, got {eps}")));
                }
                Functional::LpMoment { p } if !(p > 0.0) => {
                    return Err(Error::invalid(format!("lp moment needs p > 0, got {p}")));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarSeries {
    pub functional: Functional,
    pub estimates: Vec<f64>,
    pub stderr: Vec<f64>,
    pub censored: Vec<bool>,
    /// Paths whose value was replaced by zero (`(u, φ) ≤ 0` for eps moments).
    pub excluded: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSeries {
    pub functional: Functional,
    /// `estimates[k][i]`: time index `k`, node `i`.
    pub estimates: Vec<Vec<f64>>,
    pub stderr: Vec<Vec<f64>>,
    pub censored: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSeries {
    pub m_paths: usize,
    pub times: Vec<f64>,
    pub nodes: Vec<f64>,
    pub scalars: Vec<ScalarSeries>,
    pub fields: Vec<FieldSeries>,
    pub blown_fraction: Vec<f64>,
}

impl MomentSeries {
    pub fn scalar(&self, functional: &Functional) -> Option<&ScalarSeries> {
        self.scalars.iter().find(|s| &s.functional == functional)
    }

    pub fn field(&self, functional: &Functional) -> Option<&FieldSeries> {
        self.fields.iter().find(|s| &s.functional == functional)
    }

    /// Scalar series as CSV with columns
    /// `t,functional,estimate,stderr,censored,blown_fraction`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,functional,estimate,stderr,censored,blown_fraction\n");
        for (k, &t) in self.times.iter().enumerate() {
            for s in &self.scalars {
                let _ = writeln!(
                    out,
                    "{t},{},{},{},{},{}",
                    s.functional.name(),
                    s.estimates[k],
                    s.stderr[k],
                    s.censored[k],
                    self.blown_fraction[k]
                );
            }
        }
        out
    }

    /// Field series as CSV with columns `t,functional,x,estimate,stderr,censored`.
    pub fn fields_csv(&self) -> String {
        let mut out = String::from("t,functional,x,estimate,stderr,censored\n");
        for (k, &t) in self.times.iter().enumerate() {
            for s in &self.fields {
                for (i, &x) in self.nodes.iter().enumerate() {
                    let _ = writeln!(
                        out,
                        "{t},{},{x},{},{},{}",
                        s.functional.name(),
                        s.estimates[k][i],
                        s.stderr[k][i],
                        s.censored[k]
                    );
                }
            }
        }
        out
    }
}

/// Compact per-path outcome kept after the functionals have been extracted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSummary {
    pub path_index: u64,
    pub verdict: Verdict,
    pub min_value: f64,
    pub max_sup: f64,
    pub boundary_leak: bool,
    pub steps: u64,
    pub refinements: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub series: MomentSeries,
    pub paths: Vec<PathSummary>,
}

impl EnsembleResult {
    pub fn blown_paths(&self) -> usize {
        self.paths.iter().filter(|p| p.verdict.is_blowup()).count()
    }
}

struct PathValues {
    summary: PathSummary,
    /// `scalars[k][j]`: time `k`, scalar functional `j`.
    scalars: Vec<Vec<f64>>,
    /// `fields[k][j]`: time `k`, field functional `j`.
    fields: Vec<Vec<Vec<f64>>>,
    /// `censored[k]`: value at time `k` came from the blowup state.
    censored: Vec<bool>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn stderr(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
        }
    }
}

fn evaluate_path(sim: &Simulator, cfg: &EnsembleConfig, index: u64) -> PathValues {
    let result = sim.run(cfg.base_seed, index);
    let times = &sim.config().record_times;
    let (scalar_fs, field_fs): (Vec<&Functional>, Vec<&Functional>) = cfg.functionals.iter().partition(|f| !f.is_field());
    let mut scalars = Vec::with_capacity(times.len());
    let mut fields = Vec::with_capacity(times.len());
    let mut censored = Vec::with_capacity(times.len());
    let mut max_sup = sim.u0().sup_norm();
    for s in &result.series {
        max_sup = max_sup.max(s.sup);
    }
    if let Some(b) = &result.blowup_state {
        max_sup = max_sup.max(b.field.sup_norm());
    }
    for &t in times {
        let (state, state_t, is_censored) = match result.snapshots.iter().find(|s| s.t == t) {
            Some(s) => (&s.field, s.t, false),
            None => {
                let b = result
                    .blowup_state
                    .as_ref()
                    .expect("a missing snapshot implies a blowup verdict");
                (&b.field, b.t, true)
            }
        };
        scalars.push(scalar_fs.iter().map(|f| f.scalar(state, state_t, sim)).collect());
        fields.push(field_fs.iter().map(|f| f.field(state)).collect());
        censored.push(is_censored);
    }
    PathValues {
        summary: PathSummary {
            path_index: index,
            verdict: result.verdict,
            min_value: result.min_value,
            max_sup,
            boundary_leak: result.boundary_leak,
            steps: result.steps,
            refinements: result.refinements,
        },
        scalars,
        fields,
        censored,
    }
}

/// Runs paths `0..m_paths` and reduces the configured functionals.
pub fn run_ensemble(sim: &Simulator, cfg: &EnsembleConfig) -> Result<EnsembleResult> {
    cfg.validate()?;
    let values: Vec<PathValues> = (0..cfg.m_paths as u64)
        .into_par_iter()
        .map(|i| evaluate_path(sim, cfg, i))
        .collect();
    Ok(reduce(sim, cfg, values))
}

fn reduce(sim: &Simulator, cfg: &EnsembleConfig, values: Vec<PathValues>) -> EnsembleResult {
    let times = sim.config().record_times.clone();
    let nt = times.len();
    let n = sim.grid().n();
    let scalar_fs: Vec<Functional> = cfg.functionals.iter().copied().filter(|f| !f.is_field()).collect();
    let field_fs: Vec<Functional> = cfg.functionals.iter().copied().filter(|f| f.is_field()).collect();

    let mut scalar_acc = vec![vec![Welford::default(); scalar_fs.len()]; nt];
    let mut excluded = vec![vec![0usize; scalar_fs.len()]; nt];
    let mut field_acc = vec![vec![vec![Welford::default(); n]; field_fs.len()]; nt];
    let mut censored = vec![false; nt];
    let mut blown = vec![0usize; nt];

    for pv in &values {
        let tb = pv.summary.verdict.blowup_time();
        for k in 0..nt {
            if tb.is_some_and(|tb| tb <= times[k]) {
                blown[k] += 1;
            }
            censored[k] |= pv.censored[k];
            for (j, &v) in pv.scalars[k].iter().enumerate() {
                scalar_acc[k][j].push(v);
                if matches!(scalar_fs[j], Functional::EpsEigenMoment { .. }) && v == 0.0 {
                    excluded[k][j] += 1;
                }
            }
            for (j, field) in pv.fields[k].iter().enumerate() {
                for (i, &v) in field.iter().enumerate() {
                    field_acc[k][j][i].push(v);
                }
            }
        }
    }

    let scalars = scalar_fs
        .iter()
        .enumerate()
        .map(|(j, &functional)| ScalarSeries {
            functional,
            estimates: (0..nt).map(|k| scalar_acc[k][j].mean).collect(),
            stderr: (0..nt).map(|k| scalar_acc[k][j].stderr()).collect(),
            censored: censored.clone(),
            excluded: (0..nt).map(|k| excluded[k][j]).collect(),
        })
        .collect();
    let fields = field_fs
        .iter()
        .enumerate()
        .map(|(j, &functional)| FieldSeries {
            functional,
            estimates: (0..nt)
                .map(|k| field_acc[k][j].iter().map(|w| w.mean).collect())
                .collect(),
            stderr: (0..nt)
                .map(|k| field_acc[k][j].iter().map(|w| w.stderr()).collect())
                .collect(),
            censored: censored.clone(),
        })
        .collect();
    let m = values.len() as f64;
    let series = MomentSeries {
        m_paths: values.len(),
        times,
        nodes: sim.grid().nodes().collect(),
        scalars,
        fields,
        blown_fraction: blown.iter().map(|&b| b as f64 / m).collect(),
    };
    EnsembleResult {
        series,
        paths: values.into_iter().map(|v| v.summary).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub t: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub eta: f64,
    pub censored: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundCheck {
    pub checkpoints: Vec<Checkpoint>,
    pub pass_fraction: f64,
}

/// Compares `E (u, φ)²` with an ODE lower bound `η` given as `(t, η(t))`
/// pairs on the series' time grid.
///
/// A checkpoint passes when `estimate + 2·stderr ≥ η·(1 − tol)`, or when the
/// estimate is censored.
pub fn empirical_vs_ode_lower_bound(series: &MomentSeries, eta: &[(f64, f64)], tol: f64) -> Result<LowerBoundCheck> {
    let s = series
        .scalar(&Functional::SquaredEigenMoment)
        .ok_or_else(|| Error::invalid("series lacks the squared eigen moment"))?;
    let mut checkpoints = Vec::with_capacity(eta.len());
    for &(t, e) in eta {
        let k = series
            .times
            .iter()
            .position(|&st| (st - t).abs() <= 1e-12 * t.abs().max(1.0))
            .ok_or_else(|| Error::invalid(format!("time {t} is not on the series grid")))?;
        let estimate = s.estimates[k];
        let stderr = s.stderr[k];
        let censored = s.censored[k];
        let pass = censored || estimate + 2.0 * stderr >= e * (1.0 - tol);
        checkpoints.push(Checkpoint {
            t,
            estimate,
            stderr,
            eta: e,
            censored,
            pass,
        });
    }
    let passed = checkpoints.iter().filter(|c| c.pass).count();
    let pass_fraction = if checkpoints.is_empty() {
        1.0
    } else {
        passed as f64 / checkpoints.len() as f64
    };
    Ok(LowerBoundCheck {
        checkpoints,
        pass_fraction,
    })
}
