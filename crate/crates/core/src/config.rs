//! Experiment configuration: a versioned TOML document describing the
//! domain, model, noise, initial datum, solver, ensemble and oracles.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::PathBuf;

use crate::ensemble::EnsembleConfig;
use crate::error::{Error, Result};
use crate::grid::{inner_product, Field, GridSpec};
use crate::integrator::SolverConfig;
use crate::kernel::{kernel_1d, KernelConvention};
use crate::model::{verify_bounds, ModelSpec};
use crate::noise::NoiseModel;

pub const SCHEMA_VERSION: u32 = 1;

/// Oracle names accepted in `oracles`.
pub const ORACLE_NAMES: &[&str] = &[
    "diffusion_bounds",
    "eigen_moment_threshold",
    "eps_moment_threshold",
    "global_existence_condition",
    "growth_conditions",
    "kaplan_ode",
    "concavity_certificate",
    "fujita_classify",
    "whole_space_classify",
    "covariance_bounds",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Domain {
    Bounded { a: f64, b: f64 },
    /// `[−half_width, half_width]` with Dirichlet conditions.
    WholeSpace { half_width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    pub domain: Domain,
    pub n: usize,
}

fn default_convention() -> KernelConvention {
    KernelConvention::Laplacian
}

/// Named families of initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    /// Multiple of the principal eigenfunction with `(u0, φ) = c`.
    ScaledEigenmode { c: f64 },
    /// `amp·exp(−(x − center)² / (2·width²))`
    GaussianBump { amp: f64, center: f64, width: f64 },
    /// `c` on `|x − center| < radius`, zero elsewhere.
    Indicator {
        c: f64,
        radius: f64,
        #[serde(default)]
        center: f64,
    },
    /// `scale·K(t, x)`
    HeatKernel {
        scale: f64,
        t: f64,
        #[serde(default = "default_convention")]
        convention: KernelConvention,
    },
    /// Piecewise-linear interpolation of a table, zero outside it.
    Custom { x: Vec<f64>, u: Vec<f64> },
}

impl InitialCondition {
    /// Samples the datum on `grid`; `phi` is the principal eigenfunction.
    pub fn field(&self, grid: GridSpec, phi: &Field) -> Result<Field> {
        Ok(match self {
            InitialCondition::ScaledEigenmode { c } => {
                let norm = inner_product(phi, phi)?;
                phi.scaled(c / norm)
            }
            &InitialCondition::GaussianBump { amp, center, width } => {
                Field::from_fn(grid, |x| amp * (-0.5 * ((x - center) / width).powi(2)).exp())
            }
            &InitialCondition::Indicator { c, radius, center } => {
                Field::from_fn(grid, |x| if (x - center).abs() < radius { c } else { 0.0 })
            }
            &InitialCondition::HeatKernel { scale, t, convention } => {
                Field::from_fn(grid, |x| scale * kernel_1d(t, x, convention))
            }
            InitialCondition::Custom { x, u } => Field::from_fn(grid, |y| interpolate(x, u, y)),
        })
    }

    fn validate(&self) -> std::result::Result<(), String> {
        match self {
            InitialCondition::GaussianBump { width, .. } if !(*width > 0.0) => {
                Err(format!("width must be positive, got {width}"))
            }
            InitialCondition::Indicator { radius, .. } if !(*radius > 0.0) => {
                Err(format!("radius must be positive, got {radius}"))
            }
            InitialCondition::HeatKernel { t, .. } if !(*t > 0.0) => Err(format!("t must be positive, got {t}")),
            InitialCondition::Custom { x, u } => {
                if x.len() != u.len() || x.len() < 2 {
                    Err("x and u need equal lengths of at least 2".into())
                } else if x.windows(2).any(|w| !(w[0] < w[1])) {
                    Err("x must be strictly increasing".into())
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

fn interpolate(x: &[f64], u: &[f64], y: f64) -> f64 {
    if y < x[0] || y > x[x.len() - 1] {
        return 0.0;
    }
    let k = x.partition_point(|&v| v <= y).clamp(1, x.len() - 1);
    let w = (y - x[k - 1]) / (x[k] - x[k - 1]);
    u[k - 1] + w * (u[k] - u[k - 1])
}

fn default_eps() -> f64 {
    0.5
}
fn default_horizon() -> f64 {
    10.0
}
fn default_scan_start() -> f64 {
    1e-6
}

/// Inputs for oracles that the model does not determine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleParams {
    /// Moment exponent for the eps-moment threshold and the exponent ordering.
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Time horizon of the noise-energy integral in the concavity certificate.
    #[serde(default = "default_horizon")]
    pub concavity_horizon: f64,
    /// Lower end of the growth-condition scans.
    #[serde(default = "default_scan_start")]
    pub scan_start: f64,
}

impl Default for OracleParams {
    fn default() -> Self {
        OracleParams {
            eps: default_eps(),
            concavity_horizon: default_horizon(),
            scan_start: default_scan_start(),
        }
    }
}

/// Optional artifact formats: plot and field CSV, JSON reports, markdown.
pub const FORMATS: &[&str] = &["csv", "json", "md"];

fn default_dir() -> PathBuf {
    PathBuf::from("runs")
}
fn default_formats() -> Vec<String> {
    vec!["csv".into(), "json".into(), "md".into()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: default_dir(),
            formats: default_formats(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    pub problem: Problem,
    pub model: ModelSpec,
    pub noise: NoiseModel,
    pub initial_condition: InitialCondition,
    pub solver: SolverConfig,
    pub ensemble: EnsembleConfig,
    /// Oracle names to evaluate; empty means all of them.
    #[serde(default)]
    pub oracles: Vec<String>,
    #[serde(default)]
    pub oracle_params: OracleParams,
    #[serde(default)]
    pub output: OutputSpec,
}

impl ExperimentConfig {
    /// Parses and validates a TOML document. Errors carry the dotted path of
    /// the offending field.
    pub fn from_toml(text: &str) -> Result<Self> {
        let de = toml::de::Deserializer::parse(text).map_err(|e| Error::config("", e.to_string()))?;
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("", e.to_string()))
    }

    /// Hex SHA-256 of the canonical JSON form, ignoring the base seed and
    /// the output location so that runs of one experiment share a hash.
    pub fn hash(&self) -> String {
        let mut key = self.clone();
        key.ensemble.base_seed = 0;
        key.output = OutputSpec::default();
        let json = serde_json::to_string(&key).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn grid(&self) -> Result<GridSpec> {
        match self.problem.domain {
            Domain::Bounded { a, b } => GridSpec::new(a, b, self.problem.n),
            Domain::WholeSpace { half_width } => GridSpec::symmetric(half_width, self.problem.n),
        }
    }

    pub fn is_whole_space(&self) -> bool {
        matches!(self.problem.domain, Domain::WholeSpace { .. })
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        self.grid().map_err(|e| Error::config("problem", e.to_string()))?;
        self.model.drift.validate().map_err(|m| Error::config("model.drift", m))?;
        self.model.diffusion.validate().map_err(|m| Error::config("model.diffusion", m))?;
        if self.model.diffusion.bounds.is_some() {
            let report = verify_bounds(&self.model.diffusion);
            if !report.passed {
                return Err(Error::config(
                    "model.diffusion.bounds",
                    format!(
                        "bounds violated: ratio {:.6} at u = {:e} ({:?} side)",
                        report.worst_ratio, report.worst_at, report.worst_side
                    ),
                ));
            }
        }
        let additive_noise = matches!(self.noise, NoiseModel::AdditiveAmplitude);
        if additive_noise != self.model.diffusion.is_additive() {
            return Err(Error::config(
                "noise",
                "additive_amplitude noise requires additive diffusion and vice versa",
            ));
        }
        self.initial_condition
            .validate()
            .map_err(|m| Error::config("initial_condition", m))?;
        for (field, v) in [("dt0", self.solver.dt0), ("t_end", self.solver.t_end)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("solver.{field}"), format!("must be positive and finite, got {v}")));
            }
        }
        self.solver.validate().map_err(|e| Error::config("solver", e.to_string()))?;
        self.ensemble
            .validate()
            .map_err(|e| Error::config("ensemble", e.to_string()))?;
        for name in &self.oracles {
            if !ORACLE_NAMES.contains(&name.as_str()) {
                return Err(Error::UnknownOracle {
                    name: name.clone(),
                    valid: ORACLE_NAMES.join(", "),
                });
            }
        }
        if let Some(f) = self.output.formats.iter().find(|f| !FORMATS.contains(&f.as_str())) {
            return Err(Error::config(
                "output.formats",
                format!("unknown format `{f}`; valid formats: {}", FORMATS.join(", ")),
            ));
        }
        let p = &self.oracle_params;
        if !(p.eps > 0.0 && p.eps < 1.0) {
            return Err(Error::config("oracle_params.eps", format!("must lie in (0, 1), got {}", p.eps)));
        }
        if !(p.concavity_horizon > 0.0) || !(p.scan_start > 0.0) {
            return Err(Error::config("oracle_params", "horizon and scan start must be positive"));
        }
        Ok(())
    }

    /// Oracle names to evaluate, in canonical order.
    pub fn selected_oracles(&self) -> Vec<&'static str> {
        ORACLE_NAMES
            .iter()
            .copied()
            .filter(|n| self.oracles.is_empty() || self.oracles.iter().any(|o| o == n))
            .collect()
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) const DEMO: &str = r#"
schema_version = 1
name = "demo"
oracles = ["eigen_moment_threshold", "kaplan_ode"]

[problem]
n = 64
domain = { kind = "bounded", a = 0.0, b = 1.0 }

[model.drift]
kind = "zero"

[model.diffusion]
kind = { kind = "power_abs", c = 1.0, gamma = 2.0 }
bounds = { c1 = 1.0, c2 = 1.0, gamma = 2.0, gamma1 = 2.0 }

[noise]
kind = "correlated"
covariance = { kind = "constant", value = 1.0 }

[initial_condition]
kind = "scaled_eigenmode"
c = 6.283185307179586

[solver]
dt0 = 1e-4
t_end = 0.05
record_times = [0.0, 0.01, 0.02]

[ensemble]
m_paths = 8
base_seed = 7
functionals = [{ kind = "squared_eigen_moment" }]
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = ExperimentConfig::from_toml(DEMO).unwrap();
        assert_eq!(cfg.problem.n, 64);
        let text = cfg.to_toml().unwrap();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        let mut reseeded = cfg.clone();
        reseeded.ensemble.base_seed = 99;
        assert_eq!(reseeded.hash(), cfg.hash());
        reseeded.ensemble.m_paths = 9;
        assert_ne!(reseeded.hash(), cfg.hash());
    }

    #[test]
    fn field_path_in_errors() {
        let bad = DEMO.replace("dt0 = 1e-4", "dt0 = \"fast\"");
        match ExperimentConfig::from_toml(&bad) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "solver.dt0"),
            other => panic!("unexpected {other:?}"),
        }
        let bad = DEMO.replace("m_paths = 8", "m_paths = 0");
        assert!(matches!(ExperimentConfig::from_toml(&bad), Err(Error::Config { path, .. }) if path == "ensemble"));
    }

    #[test]
    fn unknown_oracle_lists_valid_names() {
        let bad = DEMO.replace("\"kaplan_ode\"", "\"kaplan\"");
        match ExperimentConfig::from_toml(&bad) {
            Err(Error::UnknownOracle { name, valid }) => {
                assert_eq!(name, "kaplan");
                assert!(valid.contains("kaplan_ode"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn inconsistent_bounds_rejected() {
        let bad = DEMO.replace("c1 = 1.0, c2 = 1.0", "c1 = 2.0, c2 = 1.0");
        assert!(matches!(
            ExperimentConfig::from_toml(&bad),
            Err(Error::Config { path, .. }) if path == "model.diffusion.bounds"
        ));
    }

    #[test]
    fn schema_version_checked() {
        let bad = DEMO.replace("schema_version = 1", "schema_version = 2");
        assert!(matches!(
            ExperimentConfig::from_toml(&bad),
            Err(Error::Config { path, .. }) if path == "schema_version"
        ));
    }

    #[test]
    fn initial_families() {
        let g = GridSpec::new(-2.0, 2.0, 399).unwrap();
        let (_, phi) = crate::grid::principal_eigenpair(&g).unwrap();
        let eig = InitialCondition::ScaledEigenmode { c: 3.0 }.field(g, &phi).unwrap();
        assert!((inner_product(&eig, &phi).unwrap() - 3.0).abs() < 1e-12);
        let ind = InitialCondition::Indicator { c: 2.0, radius: 1.0, center: 0.0 }.field(g, &phi).unwrap();
        assert!((ind.integral() - 4.0).abs() < 0.05);
        let table = InitialCondition::Custom { x: vec![-1.0, 0.0, 1.0], u: vec![0.0, 1.0, 0.0] };
        let hat = table.field(g, &phi).unwrap();
        assert!((hat.integral() - 1.0).abs() < 1e-3);
        assert_eq!(interpolate(&[0.0, 1.0], &[1.0, 3.0], 0.25), 1.5);
        let k = InitialCondition::HeatKernel { scale: 1.0, t: 0.1, convention: KernelConvention::Laplacian };
        assert!((k.field(g, &phi).unwrap().integral() - 1.0).abs() < 1e-4);
    }
}
