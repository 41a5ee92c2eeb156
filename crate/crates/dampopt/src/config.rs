//! JSON run configuration.

use std::fs;
use std::path::{Path, PathBuf};

use dampopt_core::bench::{build_oscillator, OscillatorSpec, Problem, NAIVE_SIZE_LIMIT};
use dampopt_core::linalg::RMat;
use dampopt_core::linf::{DenseNormConfig, GreedyConfig};
use dampopt_core::modal::critical_damping;
use dampopt_core::model::VibrationalSystem;
use dampopt_core::optim::{AlgorithmConfig, InitMode, OptimizerConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::mtx::read_matrix_market;

/// Where the system matrices come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSource {
    /// The n-mass chain; n = 700 is the full-size configuration, other n the
    /// scaled analog. Every (j, k) pair becomes one sweep row.
    Oscillator {
        #[serde(default = "default_n")]
        n: usize,
        j: Vec<usize>,
        k: Vec<usize>,
    },
    /// MatrixMarket files. Without `internal_damping`, `alpha_c · C_crit` is used.
    Files {
        mass: PathBuf,
        stiffness: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        internal_damping: Option<PathBuf>,
        damper_geometry: PathBuf,
        input_map: PathBuf,
        output_map: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSource,
    /// "a", "b" or "custom" (then `alpha_c` is required).
    #[serde(default = "default_problem")]
    pub problem: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_c: Option<f64>,
    /// "i" or "iii".
    #[serde(default = "default_mode")]
    pub mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_gains: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_count")]
    pub heuristic_count: usize,
    #[serde(default = "default_tol6")]
    pub tol_gains: f64,
    #[serde(default = "default_tol6")]
    pub tol_value: f64,
    #[serde(default = "default_tol8")]
    pub dense_tol: f64,
    #[serde(default = "default_tol8")]
    pub greedy_tol: f64,
    #[serde(default = "default_tol12")]
    pub stationarity_tol: f64,
    #[serde(default = "default_outer")]
    pub max_outer: usize,
    /// Also run the naive full-order optimization and report relative errors.
    #[serde(default)]
    pub oracle: bool,
    #[serde(default)]
    pub seed: u64,
    /// Write wall-clock seconds into results.csv (makes the file run-dependent).
    #[serde(default)]
    pub csv_timing: bool,
    /// Output directory; `--out` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn default_n() -> usize {
    50
}
fn default_problem() -> String {
    "b".into()
}
fn default_mode() -> String {
    "iii".into()
}
fn default_count() -> usize {
    30
}
fn default_tol6() -> f64 {
    1e-6
}
fn default_tol8() -> f64 {
    1e-8
}
fn default_tol12() -> f64 {
    1e-12
}
fn default_outer() -> usize {
    30
}

/// One system to optimize.
#[derive(Debug, Clone)]
pub struct RowSpec {
    pub config_id: usize,
    pub j: Option<usize>,
    pub k: Option<usize>,
    pub system: VibrationalSystem,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn problem(&self) -> Result<Problem> {
        match (self.problem.as_str(), self.alpha_c) {
            ("a", None) => Ok(Problem::A),
            ("b", None) => Ok(Problem::B),
            ("custom", Some(a)) if a >= 0.0 => Ok(Problem::Custom(a)),
            ("custom", _) => Err(CliError::Config("problem \"custom\" needs a nonnegative alpha_c".into())),
            ("a" | "b", Some(_)) => Err(CliError::Config("alpha_c is only allowed with problem \"custom\"".into())),
            (other, _) => Err(CliError::Config(format!("unknown problem {other:?}"))),
        }
    }

    pub fn init_mode(&self) -> Result<InitMode> {
        match self.mode.as_str() {
            "i" => Ok(InitMode::Mode1),
            "iii" => Ok(InitMode::Mode3),
            "ii" | "iv" => Err(CliError::SamdpNotImplemented(self.mode.clone())),
            other => Err(CliError::Config(format!("unknown mode {other:?}, expected \"i\" or \"iii\""))),
        }
    }

    /// Checks the config and fills in defaults that depend on other fields.
    pub fn resolve(mut self, long: bool) -> Result<Self> {
        let problem = self.problem()?;
        self.init_mode()?;
        for (name, v) in [
            ("tol_gains", self.tol_gains),
            ("tol_value", self.tol_value),
            ("dense_tol", self.dense_tol),
            ("greedy_tol", self.greedy_tol),
            ("stationarity_tol", self.stationarity_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!("{name} must be positive")));
            }
        }
        if self.max_outer == 0 || self.heuristic_count == 0 {
            return Err(CliError::Config("max_outer and heuristic_count must be positive".into()));
        }
        let gains = self.initial_gains.take().unwrap_or_else(|| problem.initial_gains());
        if gains.is_empty() {
            return Err(CliError::Config("initial_gains is empty".into()));
        }
        for g in &gains {
            if let Some(v) = g.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
                return Err(CliError::Config(format!("initial gain {v} is not a nonnegative number")));
            }
        }
        self.initial_gains = Some(gains);
        if let SystemSource::Oscillator { n, j, k } = &self.system {
            if j.is_empty() || k.is_empty() {
                return Err(CliError::Config("damper position sets must be nonempty".into()));
            }
            if *n > NAIVE_SIZE_LIMIT && !long {
                return Err(CliError::Config(format!("n = {n} exceeds {NAIVE_SIZE_LIMIT}; pass --long to run it")));
            }
        }
        Ok(self)
    }

    pub fn algorithm(&self) -> Result<AlgorithmConfig> {
        Ok(AlgorithmConfig {
            mode: self.init_mode()?,
            optimizer: self.optimizer(),
            dense: self.dense(),
            greedy: GreedyConfig { tol: self.greedy_tol, ..GreedyConfig::default() },
            heuristic_count: self.heuristic_count,
            tol_gains: self.tol_gains,
            tol_value: self.tol_value,
            max_outer: self.max_outer,
            ..AlgorithmConfig::default()
        })
    }

    pub fn optimizer(&self) -> OptimizerConfig {
        OptimizerConfig { stationarity_tol: self.stationarity_tol, seed: self.seed, ..OptimizerConfig::default() }
    }

    pub fn dense(&self) -> DenseNormConfig {
        DenseNormConfig { tol: self.dense_tol, ..DenseNormConfig::default() }
    }

    /// Builds every system of the run, in sweep order (j outer, k inner).
    pub fn rows(&self) -> Result<Vec<RowSpec>> {
        let problem = self.problem()?;
        match &self.system {
            SystemSource::Oscillator { n, j, k } => {
                let mut rows = Vec::new();
                for &jj in j {
                    for &kk in k {
                        let spec = if *n == 700 {
                            OscillatorSpec::paper(problem, jj, kk)
                        } else {
                            OscillatorSpec::desk(*n, problem, jj, kk)
                        };
                        let system = build_oscillator(&spec)?;
                        rows.push(RowSpec { config_id: rows.len() + 1, j: Some(jj), k: Some(kk), system });
                    }
                }
                Ok(rows)
            }
            SystemSource::Files { mass, stiffness, internal_damping, damper_geometry, input_map, output_map } => {
                let m = read_matrix_market(mass)?;
                let kmat = read_matrix_market(stiffness)?;
                let cint: RMat = match internal_damping {
                    Some(p) => read_matrix_market(p)?,
                    None => critical_damping(&m, &kmat)? * problem.alpha_c(),
                };
                let system = VibrationalSystem::new(
                    m,
                    cint,
                    kmat,
                    read_matrix_market(damper_geometry)?,
                    read_matrix_market(input_map)?,
                    read_matrix_market(output_map)?,
                )?;
                Ok(vec![RowSpec { config_id: 1, j: None, k: None, system }])
            }
        }
    }
}
