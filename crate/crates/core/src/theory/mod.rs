//! Analytic oracles: comparison ODEs, blowup-time integrals, threshold and
//! growth-condition checks, concavity certificates, exponent classifiers and
//! the mollified negative-part test functions.
//!
//! Every result is one-sided. A failed hypothesis yields
//! [`TheoryVerdict::Indeterminate`], never the opposite prediction.

use serde::{Deserialize, Serialize};

pub mod classify;
pub mod concavity;
pub mod conditions;
pub mod mollifier;
pub mod ode;
pub mod thresholds;
pub mod whole_space;

pub use classify::{fujita_classify, whole_space_noise_classify, FujitaClass, WholeSpaceCase, WholeSpaceNoise};
pub use concavity::{concavity_certificate, concavity_monitor, ConcavityCertificate, MonitorInput, MonitorTrace, DEFAULT_A};
pub use conditions::{growth_conditions_check, BranchReport, GrowthConditionsReport, TailVerdict};
pub use mollifier::{beta_eps, hat_c, mollifier_constant, BetaEps};
pub use ode::{blowup_time_bound, kaplan_ode_solve, BlowupTimeBound, KaplanParams, OdeTrajectory};
pub use thresholds::{
    eigen_moment_threshold, eps_moment_threshold, global_existence_condition, interpolation_coeffs, GlobalCondition,
    Interpolation, LabeledBound, OrderingWitness, ThresholdReport,
};
pub use whole_space::{
    expectation_supersolution_check, kernel_weighted_moment, recursion_check, MeanFieldSeries, RecursionReport,
    SupersolutionPoint, SupersolutionReport, WeightedMoment,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoryVerdict {
    BlowupPredicted,
    GlobalPredicted,
    Indeterminate,
}
