//! Simulation and analysis of stochastic heat equations
//! `du = [Δu + f(u)]dt + σ(u)dW` with moment blowup detection.
//!
//! The solver is a semi-implicit Euler–Maruyama scheme on a uniform
//! Dirichlet mesh with counter-based noise streams, so ensembles are
//! reproducible regardless of thread count. Analytic oracles in [`theory`]
//! predict blowup or global existence from the model constants, and
//! [`ensemble`] produces the Monte Carlo series they are checked against.

pub mod config;
pub mod ensemble;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod integrator;
pub mod kernel;
pub mod model;
pub mod noise;
pub mod quad;
pub mod report;
pub mod store;
pub mod theory;
pub mod verify;

pub use config::{Domain, ExperimentConfig, InitialCondition, OracleParams, Problem, ORACLE_NAMES, SCHEMA_VERSION};
pub use ensemble::{run_ensemble, EnsembleConfig, EnsembleResult, Functional, MomentSeries};
pub use error::{Error, Result};
pub use experiment::{Experiment, OracleResult};
pub use grid::{Field, GridSpec};
pub use integrator::{PathResult, Simulator, SolverConfig, Verdict};
pub use kernel::KernelConvention;
pub use model::{DiffusionSpec, DriftSpec, ModelSpec};
pub use noise::{Covariance, NoiseModel, RngStream};
pub use store::{RunManifest, RunRecord, RunStore};
pub use theory::TheoryVerdict;
pub use verify::CriterionResult;
