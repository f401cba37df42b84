//! Fixtures shared by the benchmarks.

use std::f64::consts::PI;

use spde_lab_core::{
    DiffusionSpec, DriftSpec, EnsembleConfig, Field, Functional, GridSpec, ModelSpec, NoiseModel, Simulator,
    SolverConfig,
};

/// `u_t = Δu + u² + |u|^1.5 Ẇ` on (0, 1) from `3 sin(πx)`, recorded ten times up to `t_end`.
pub fn reaction_simulator(n: usize, t_end: f64) -> Simulator {
    let g = GridSpec::new(0.0, 1.0, n).expect("grid");
    let u0 = Field::from_fn(g, |x| 3.0 * (PI * x).sin());
    let model = ModelSpec {
        drift: DriftSpec::PowerPos { c0: 1.0, p: 2.0 },
        diffusion: DiffusionSpec::power_abs(1.0, 1.5),
    };
    let times = (0..=10).map(|k| k as f64 * t_end / 10.0).collect();
    Simulator::new(model, u0, NoiseModel::SpaceTimeWhite, SolverConfig::new(1e-4, t_end, times)).expect("simulator")
}

pub fn small_ensemble(m_paths: usize) -> EnsembleConfig {
    EnsembleConfig {
        m_paths,
        base_seed: 1,
        functionals: vec![Functional::SquaredEigenMoment, Functional::LpMoment { p: 2.0 }],
    }
}
