//! Single-path time stepping of `du = (Δu + f(u)) dt + σ(u) dW`.
//!
//! The Laplacian is treated implicitly and `f`, `σ` explicitly. A step whose
//! sup-norm grows too fast is split in two, with the two half increments drawn
//! from a Brownian bridge so the path's noise is unchanged by refinement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{h1_seminorm, inner_product, lp_integral, principal_eigenpair, Field, GridSpec};
use crate::model::ModelSpec;
use crate::noise::{NoiseModel, NoiseSampler, RngStream};

pub const DEFAULT_U_MAX: f64 = 1e8;
pub const DEFAULT_DT_MIN: f64 = 1e-12;
pub const DEFAULT_GROWTH_CAP: f64 = 2.0;
/// Boundary-to-sup ratio above which a truncated whole-space run is flagged.
pub const BOUNDARY_LEAK_RATIO: f64 = 1e-10;

const MAX_REFINEMENT_LEVEL: u32 = 60;

fn default_dt_min() -> f64 {
    DEFAULT_DT_MIN
}
fn default_u_max() -> f64 {
    DEFAULT_U_MAX
}
fn default_growth_cap() -> f64 {
    DEFAULT_GROWTH_CAP
}
fn default_lp_powers() -> Vec<f64> {
    vec![2.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub dt0: f64,
    #[serde(default = "default_dt_min")]
    pub dt_min: f64,
    #[serde(default = "default_u_max")]
    pub u_max: f64,
    #[serde(default = "default_growth_cap")]
    pub growth_cap: f64,
    pub t_end: f64,
    #[serde(default)]
    pub record_times: Vec<f64>,
    /// Powers `p` of the `∫|u|^p` columns in the scalar series.
    #[serde(default = "default_lp_powers")]
    pub lp_powers: Vec<f64>,
    /// Marks a truncated whole-space run; enables the boundary leak check.
    #[serde(default)]
    pub whole_space: bool,
}

impl SolverConfig {
    pub fn new(dt0: f64, t_end: f64, record_times: Vec<f64>) -> Self {
        SolverConfig {
            dt0,
            dt_min: DEFAULT_DT_MIN,
            u_max: DEFAULT_U_MAX,
            growth_cap: DEFAULT_GROWTH_CAP,
            t_end,
            record_times,
            lp_powers: default_lp_powers(),
            whole_space: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::invalid(m));
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt0) {
            return bad(format!("need 0 < dt_min ≤ dt0, got dt_min={}, dt0={}", self.dt_min, self.dt0));
        }
        if !(self.u_max > 0.0) {
            return bad(format!("u_max must be positive, got {}", self.u_max));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.growth_cap > 1.0) {
            return bad(format!("growth_cap must exceed 1, got {}", self.growth_cap));
        }
        if self.record_times.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("record_times must be strictly increasing".into());
        }
        if self
            .record_times
            .iter()
            .any(|&t| !(t >= 0.0 && t <= self.t_end))
        {
            return bad(format!("record_times must lie in [0, {}]", self.t_end));
        }
        if self.lp_powers.iter().any(|&p| !(p > 0.0)) {
            return bad("lp_powers must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowupCause {
    SupNorm,
    StepCollapse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    CompletedAt { t: f64 },
    BlowupAt { t: f64, cause: BlowupCause },
}

impl Verdict {
    pub fn blowup_time(&self) -> Option<f64> {
        match *self {
            Verdict::BlowupAt { t, .. } => Some(t),
            Verdict::CompletedAt { .. } => None,
        }
    }

    pub fn is_blowup(&self) -> bool {
        matches!(self, Verdict::BlowupAt { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub field: Field,
}

/// Scalar functionals of one path at one record time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub t: f64,
    pub u_hat: f64,
    pub sup: f64,
    /// `∫|u|^p` for each configured power.
    pub lp: Vec<f64>,
    pub h1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathResult {
    pub path_index: u64,
    pub verdict: Verdict,
    pub snapshots: Vec<Snapshot>,
    pub series: Vec<SeriesRow>,
    /// State that triggered a blowup verdict; finite by construction.
    pub blowup_state: Option<Snapshot>,
    /// Smallest nodal value over all accepted steps.
    pub min_value: f64,
    /// Largest `max(|u_1|, |u_n|) / sup|u|` over all accepted steps.
    pub max_boundary_ratio: f64,
    pub boundary_leak: bool,
    pub steps: u64,
    pub refinements: u64,
}

/// Pure blowup predicate for a state reached with step `dt`.
pub fn detect_blowup(u: &Field, dt: f64, config: &SolverConfig) -> Option<BlowupCause> {
    let sup = u.sup_norm();
    if !u.is_finite() || sup >= config.u_max {
        Some(BlowupCause::SupNorm)
    } else if dt < config.dt_min {
        Some(BlowupCause::StepCollapse)
    } else {
        None
    }
}

/// LU factors of `I − dt·Δ_h`, reusable across steps of equal length.
#[derive(Debug, Clone)]
struct ImplicitFactor {
    dt: f64,
    off: f64,
    upper: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl ImplicitFactor {
    fn new(g: &GridSpec, dt: f64) -> Self {
        let n = g.n();
        let k = dt / (g.dx() * g.dx());
        let diag = 1.0 + 2.0 * k;
        let off = -k;
        let mut upper = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        let mut prev = 0.0;
        for i in 0..n {
            let pivot = diag - off * prev;
            inv_pivot[i] = 1.0 / pivot;
            upper[i] = off / pivot;
            prev = upper[i];
        }
        ImplicitFactor {
            dt,
            off,
            upper,
            inv_pivot,
        }
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        let n = x.len();
        let mut prev = 0.0;
        for i in 0..n {
            x[i] = (x[i] - self.off * prev) * self.inv_pivot[i];
            prev = x[i];
        }
        for i in (0..n - 1).rev() {
            x[i] -= self.upper[i] * x[i + 1];
        }
    }
}

fn explicit_rhs(u: &[f64], nodes: &[f64], t: f64, dt: f64, model: &ModelSpec, dw: Option<&[f64]>) -> Vec<f64> {
    let mut rhs = Vec::with_capacity(u.len());
    for i in 0..u.len() {
        let mut v = u[i] + dt * model.drift.eval(u[i]);
        if let Some(dw) = dw {
            v += model.diffusion.eval(u[i], nodes[i], t) * dw[i];
        }
        rhs.push(v);
    }
    rhs
}

/// One semi-implicit Euler–Maruyama step:
/// `(I − dt·Δ_h) u_new = u + dt·f(u) + σ(u)·ΔW`.
pub fn step(u: &Field, t: f64, dt: f64, model: &ModelSpec, noise_increment: &Field) -> Result<Field> {
    if !(dt > 0.0) {
        return Err(Error::invalid(format!("step needs dt > 0, got {dt}")));
    }
    let g = *u.grid();
    g.check(noise_increment)?;
    let nodes: Vec<f64> = g.nodes().collect();
    let mut x = explicit_rhs(u.values(), &nodes, t, dt, model, Some(noise_increment.values()));
    ImplicitFactor::new(&g, dt).solve_in_place(&mut x);
    Field::new(g, x)
}

/// Per-problem data shared by every path: eigenfunction, noise factor, nodes.
#[derive(Debug, Clone)]
pub struct Simulator {
    model: ModelSpec,
    u0: Field,
    sampler: NoiseSampler,
    config: SolverConfig,
    phi: Field,
    lambda1: f64,
    nodes: Vec<f64>,
}

impl Simulator {
    pub fn new(model: ModelSpec, u0: Field, noise: NoiseModel, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        if !u0.is_finite() {
            return Err(Error::invalid("initial datum must be finite"));
        }
        let g = *u0.grid();
        if model.diffusion.is_additive() != matches!(noise, NoiseModel::AdditiveAmplitude) {
            return Err(Error::invalid(
                "additive diffusion and the additive_amplitude noise must be used together",
            ));
        }
        let sampler = NoiseSampler::new(noise, g)?;
        let (lambda1, phi) = principal_eigenpair(&g)?;
        Ok(Simulator {
            model,
            sampler,
            config,
            phi,
            lambda1,
            nodes: g.nodes().collect(),
            u0,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        self.u0.grid()
    }

    pub fn phi(&self) -> &Field {
        &self.phi
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn u0(&self) -> &Field {
        &self.u0
    }

    pub fn noise(&self) -> &NoiseModel {
        self.sampler.model()
    }

    /// Stop times: record times and `t_end`, strictly increasing, all `> 0`.
    fn stops(&self) -> Vec<f64> {
        let mut stops: Vec<f64> = self
            .config
            .record_times
            .iter()
            .copied()
            .filter(|&t| t > 0.0)
            .collect();
        if stops.last().is_none_or(|&t| t < self.config.t_end) {
            stops.push(self.config.t_end);
        }
        stops
    }

    pub fn series_row(&self, t: f64, u: &Field) -> SeriesRow {
        SeriesRow {
            t,
            u_hat: inner_product(u, &self.phi).expect("same grid"),
            sup: u.sup_norm(),
            lp: self.config.lp_powers.iter().map(|&p| lp_integral(u, p)).collect(),
            h1: h1_seminorm(u),
        }
    }

    /// Simulates path `path_index` of the ensemble seeded by `base_seed`.
    pub fn run(&self, base_seed: u64, path_index: u64) -> PathResult {
        let mut run = PathRun {
            sim: self,
            stream: RngStream::new(base_seed, path_index, 0),
            factors: Vec::new(),
            min_value: self.u0.min(),
            max_boundary_ratio: boundary_ratio(self.u0.values()),
            steps: 0,
            refinements: 0,
        };
        let mut u = self.u0.clone();
        let mut snapshots = Vec::new();
        let mut series = Vec::new();
        if self.config.record_times.first() == Some(&0.0) {
            series.push(self.series_row(0.0, &u));
            snapshots.push(Snapshot { t: 0.0, field: u.clone() });
        }
        let mut verdict = Verdict::CompletedAt { t: self.config.t_end };
        let mut blowup_state = None;
        let mut t = 0.0;
        let mut macro_index: u64 = 0;
        if let Some(cause) = detect_blowup(&u, self.config.dt0, &self.config) {
            verdict = Verdict::BlowupAt { t: 0.0, cause };
            blowup_state = Some(Snapshot { t: 0.0, field: u.clone() });
        } else {
            'outer: for stop in self.stops() {
                let span = stop - t;
                let count = ((span / self.config.dt0) * (1.0 - 1e-12)).ceil().max(1.0) as u64;
                let h = span / count as f64;
                for j in 0..count {
                    let t0 = if j == 0 { t } else { t + j as f64 * h };
                    let stream = run.stream.at_step(macro_index);
                    macro_index += 1;
                    let dw = run.draw(h, stream);
                    match run.advance(&mut u, t0, h, dw, stream, 0) {
                        Ok(()) => {}
                        Err((tb, cause)) => {
                            verdict = Verdict::BlowupAt { t: tb, cause };
                            blowup_state = Some(Snapshot { t: tb, field: u.clone() });
                            break 'outer;
                        }
                    }
                }
                t = stop;
                if self.config.record_times.contains(&stop) {
                    series.push(self.series_row(stop, &u));
                    snapshots.push(Snapshot { t: stop, field: u.clone() });
                }
            }
        }
        let boundary_leak = self.config.whole_space && run.max_boundary_ratio > BOUNDARY_LEAK_RATIO;
        PathResult {
            path_index,
            verdict,
            snapshots,
            series,
            blowup_state,
            min_value: run.min_value,
            max_boundary_ratio: run.max_boundary_ratio,
            boundary_leak,
            steps: run.steps,
            refinements: run.refinements,
        }
    }
}

fn boundary_ratio(u: &[f64]) -> f64 {
    let sup = u.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if sup == 0.0 {
        0.0
    } else {
        u[0].abs().max(u[u.len() - 1].abs()) / sup
    }
}

struct PathRun<'a> {
    sim: &'a Simulator,
    stream: RngStream,
    factors: Vec<ImplicitFactor>,
    min_value: f64,
    max_boundary_ratio: f64,
    steps: u64,
    refinements: u64,
}

impl PathRun<'_> {
    fn draw(&self, h: f64, stream: RngStream) -> Option<Vec<f64>> {
        if self.sim.model.diffusion.is_zero() {
            None
        } else {
            Some(self.sim.sampler.sample(h, stream).into_values())
        }
    }

    fn factor(&mut self, dt: f64) -> &ImplicitFactor {
        let pos = match self.factors.iter().position(|f| f.dt == dt) {
            Some(p) => p,
            None => {
                if self.factors.len() >= 64 {
                    self.factors.clear();
                }
                self.factors.push(ImplicitFactor::new(self.sim.grid(), dt));
                self.factors.len() - 1
            }
        };
        &self.factors[pos]
    }

    /// Advances `u` over `[t, t + h]` with increment `dw`, splitting the step
    /// through a Brownian bridge while the growth check fails.
    fn advance(
        &mut self,
        u: &mut Field,
        t: f64,
        h: f64,
        dw: Option<Vec<f64>>,
        stream: RngStream,
        level: u32,
    ) -> std::result::Result<(), (f64, BlowupCause)> {
        let cfg = &self.sim.config;
        let mut x = explicit_rhs(u.values(), &self.sim.nodes, t, h, &self.sim.model, dw.as_deref());
        self.factor(h).solve_in_place(&mut x);
        let sup_old = u.sup_norm();
        let sup_new = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let finite = x.iter().all(|v| v.is_finite());
        if finite && sup_new <= cfg.growth_cap * sup_old.max(1.0) {
            self.steps += 1;
            self.min_value = x.iter().fold(self.min_value, |m, &v| m.min(v));
            self.max_boundary_ratio = self.max_boundary_ratio.max(boundary_ratio(&x));
            u.values_mut().copy_from_slice(&x);
            if sup_new >= cfg.u_max {
                return Err((t + h, BlowupCause::SupNorm));
            }
            return Ok(());
        }
        let half = 0.5 * h;
        if half < cfg.dt_min || level >= MAX_REFINEMENT_LEVEL {
            return Err((t, BlowupCause::StepCollapse));
        }
        self.refinements += 1;
        let (left, right) = match dw {
            None => (None, None),
            Some(dw) => {
                // bridge midpoint: halves are ΔW/2 ± ξ/2 with ξ ~ N(0, h·Q)
                let xi = self.sim.sampler.sample(h, stream).into_values();
                let l: Vec<f64> = dw.iter().zip(&xi).map(|(w, z)| 0.5 * (w + z)).collect();
                let r: Vec<f64> = dw.iter().zip(&xi).map(|(w, z)| 0.5 * (w - z)).collect();
                (Some(l), Some(r))
            }
        };
        self.advance(u, t, half, left, stream.child(false), level + 1)?;
        self.advance(u, t + half, half, right, stream.child(true), level + 1)
    }
}

/// Builds a [`Simulator`] and runs a single path.
pub fn simulate_path(
    model: &ModelSpec,
    u0: &Field,
    noise: NoiseModel,
    config: &SolverConfig,
    base_seed: u64,
    path_index: u64,
) -> Result<PathResult> {
    let sim = Simulator::new(*model, u0.clone(), noise, config.clone())?;
    Ok(sim.run(base_seed, path_index))
}
