//! TOML experiment files.
//!
//! ```toml
//! [state.hamiltonian]
//! g_matrix = [[1]]
//! r = 1.0
//!
//! [subtraction]
//! tau = 0.01
//! pattern = [1]
//!
//! [target]
//! kind = "plus"
//! gamma_q = 0.3
//! gamma_p = 0.0
//!
//! [sweep]
//! variable = "gamma_q"
//! from = 0.01
//! to = 1.2
//! steps = 60
//!
//! [oracle]
//! enabled = false
//! cutoff = 30
//! ```

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::gaussian_state::GaussianState;
use crate::linalg::RMat;
use crate::subtraction::SubtractionSpec;
use crate::targets::{gamma_from_quadratures, BinaryPhaseTarget, TargetKind};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid [{section}] {field}: {reason}")]
    Invalid {
        section: &'static str,
        field: &'static str,
        reason: String,
    },
}

fn invalid(section: &'static str, field: &'static str, reason: impl ToString) -> ConfigError {
    ConfigError::Invalid {
        section,
        field,
        reason: reason.to_string(),
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub state: StateConfig,
    pub subtraction: SubtractionConfig,
    pub target: TargetConfig,
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub oracle: OracleConfig,
    pub search: Option<SearchConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    pub hamiltonian: Option<HamiltonianConfig>,
    pub covariance: Option<CovarianceConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianConfig {
    pub g_matrix: Vec<Vec<i64>>,
    pub r: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovarianceConfig {
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubtractionConfig {
    pub tau: f64,
    pub pattern: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKindConfig {
    CatEven,
    CatOdd,
    Plus,
    Ghz,
    Cccs,
}

impl From<TargetKindConfig> for TargetKind {
    fn from(k: TargetKindConfig) -> Self {
        match k {
            TargetKindConfig::CatEven => TargetKind::CatEven,
            TargetKindConfig::CatOdd => TargetKind::CatOdd,
            TargetKindConfig::Plus => TargetKind::Plus,
            TargetKindConfig::Ghz => TargetKind::Ghz,
            TargetKindConfig::Cccs => TargetKind::Cccs,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub kind: TargetKindConfig,
    pub gamma_q: f64,
    #[serde(default)]
    pub gamma_p: f64,
    pub modes: Option<usize>,
    #[serde(default)]
    pub edges: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    GammaQ,
    GammaP,
    Tau,
    R,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub variable: SweepVariable,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

impl SweepConfig {
    pub fn values(&self) -> Vec<f64> {
        let n = self.steps;
        (0..n)
            .map(|k| self.from + (self.to - self.from) * k as f64 / (n - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "default_cutoff")]
    pub cutoff: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            cutoff: default_cutoff(),
        }
    }
}

fn default_cutoff() -> usize {
    30
}

/// Grid for the `search` subcommand. Unset `g_matrices` enumerates every symmetric
/// `{−1, 0, 1}` matrix of the state's size.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub r: Vec<f64>,
    pub tau: Vec<f64>,
    pub max_photons: u32,
    pub g_matrices: Option<Vec<Vec<Vec<i64>>>>,
    #[serde(default = "default_top")]
    pub top: usize,
}

fn default_top() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateSource {
    Hamiltonian { g: RMat, r: f64 },
    Covariance(RMat),
}

impl StateSource {
    pub fn n_modes(&self) -> usize {
        match self {
            StateSource::Hamiltonian { g, .. } => g.nrows(),
            StateSource::Covariance(v) => v.nrows() / 2,
        }
    }

    pub fn build(&self) -> crate::Result<GaussianState> {
        match self {
            StateSource::Hamiltonian { g, r } => GaussianState::from_hamiltonian(g.clone(), *r),
            StateSource::Covariance(v) => GaussianState::from_covariance(v.clone()),
        }
    }

    pub fn with_r(&self, r: f64) -> Option<Self> {
        match self {
            StateSource::Hamiltonian { g, .. } => {
                Some(StateSource::Hamiltonian { g: g.clone(), r })
            }
            StateSource::Covariance(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    pub kind: TargetKind,
    pub gamma_q: f64,
    pub gamma_p: f64,
    pub modes: usize,
    pub edges: Vec<(usize, usize)>,
}

impl TargetSpec {
    pub fn build(&self) -> crate::Result<BinaryPhaseTarget> {
        let gamma = gamma_from_quadratures(self.gamma_q, self.gamma_p);
        match self.kind {
            TargetKind::CatEven => BinaryPhaseTarget::cat_even(gamma),
            TargetKind::CatOdd => BinaryPhaseTarget::cat_odd(gamma),
            TargetKind::Plus => BinaryPhaseTarget::plus_state(gamma),
            TargetKind::Ghz => BinaryPhaseTarget::ghz(self.modes, gamma),
            TargetKind::Cccs => BinaryPhaseTarget::cccs(self.modes, &self.edges, gamma),
        }
    }
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub state: StateSource,
    pub tau: f64,
    pub pattern: Vec<u32>,
    pub target: TargetSpec,
    pub sweep: Option<SweepConfig>,
    pub oracle_enabled: bool,
    pub oracle_cutoff: usize,
    pub search: Option<SearchConfig>,
}

impl PartialEq for SweepConfig {
    fn eq(&self, o: &Self) -> bool {
        self.variable == o.variable
            && self.from == o.from
            && self.to == o.to
            && self.steps == o.steps
    }
}

impl PartialEq for SearchConfig {
    fn eq(&self, o: &Self) -> bool {
        self.r == o.r
            && self.tau == o.tau
            && self.max_photons == o.max_photons
            && self.g_matrices == o.g_matrices
            && self.top == o.top
    }
}

pub fn g_matrix_from_rows(rows: &[Vec<i64>], section: &'static str) -> Result<RMat, ConfigError> {
    let n = rows.len();
    if n == 0 {
        return Err(invalid(section, "g_matrix", "matrix is empty"));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(invalid(
                section,
                "g_matrix",
                format!("row {i} has {} entries, expected {n}", row.len()),
            ));
        }
        if let Some(bad) = row.iter().find(|x| !(-1..=1).contains(*x)) {
            return Err(invalid(
                section,
                "g_matrix",
                format!("entry {bad} is not in {{-1, 0, 1}}"),
            ));
        }
    }
    let g = RMat::from_fn(n, n, |i, j| rows[i][j] as f64);
    if g != g.transpose() {
        return Err(invalid(section, "g_matrix", "matrix is not symmetric"));
    }
    Ok(g)
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// Checks cross-section consistency and builds every object once to surface errors early.
    pub fn validate(&self) -> Result<Experiment, ConfigError> {
        let state = match (&self.state.hamiltonian, &self.state.covariance) {
            (Some(h), None) => StateSource::Hamiltonian {
                g: g_matrix_from_rows(&h.g_matrix, "state.hamiltonian")?,
                r: h.r,
            },
            (None, Some(c)) => {
                let n = c.matrix.len();
                if c.matrix.iter().any(|row| row.len() != n) {
                    return Err(invalid(
                        "state.covariance",
                        "matrix",
                        "matrix is not square",
                    ));
                }
                StateSource::Covariance(RMat::from_fn(n, n, |i, j| c.matrix[i][j]))
            }
            _ => {
                return Err(invalid(
                    "state",
                    "hamiltonian/covariance",
                    "exactly one of [state.hamiltonian] or [state.covariance] is required",
                ))
            }
        };
        state
            .build()
            .map_err(|e| invalid("state", "definition", e))?;
        let n = state.n_modes();

        SubtractionSpec::new(self.subtraction.tau, self.subtraction.pattern.clone())
            .map_err(|e| invalid("subtraction", "tau/pattern", e))?;
        if self.subtraction.pattern.len() != n {
            return Err(invalid(
                "subtraction",
                "pattern",
                format!(
                    "pattern has {} entries but the state has {n} modes",
                    self.subtraction.pattern.len()
                ),
            ));
        }

        let kind: TargetKind = self.target.kind.into();
        let modes = match kind {
            TargetKind::CatEven | TargetKind::CatOdd | TargetKind::Plus => 1,
            TargetKind::Ghz | TargetKind::Cccs => self.target.modes.unwrap_or(n),
        };
        if let Some(m) = self.target.modes {
            if m != modes {
                return Err(invalid(
                    "target",
                    "modes",
                    format!("{kind:?} target has {modes} mode(s), got {m}"),
                ));
            }
        }
        if modes != n {
            return Err(invalid(
                "target",
                "modes",
                format!("target has {modes} modes but the state has {n}"),
            ));
        }
        if !self.target.edges.is_empty() && kind != TargetKind::Cccs {
            return Err(invalid(
                "target",
                "edges",
                "edges apply only to cccs targets",
            ));
        }
        let target = TargetSpec {
            kind,
            gamma_q: self.target.gamma_q,
            gamma_p: self.target.gamma_p,
            modes,
            edges: self.target.edges.iter().map(|e| (e[0], e[1])).collect(),
        };
        target
            .build()
            .map_err(|e| invalid("target", "definition", e))?;

        if let Some(s) = &self.sweep {
            if s.steps < 2 {
                return Err(invalid("sweep", "steps", "need at least 2 steps"));
            }
            if !s.from.is_finite() || !s.to.is_finite() {
                return Err(invalid("sweep", "from/to", "bounds must be finite"));
            }
            if s.variable == SweepVariable::R && matches!(state, StateSource::Covariance(_)) {
                return Err(invalid(
                    "sweep",
                    "variable",
                    "r can only be swept for [state.hamiltonian]",
                ));
            }
        }
        if self.oracle.cutoff < 2 {
            return Err(invalid("oracle", "cutoff", "cutoff must be at least 2"));
        }
        if let Some(s) = &self.search {
            if s.r.is_empty() || s.tau.is_empty() {
                return Err(invalid("search", "r/tau", "grids must not be empty"));
            }
            for g in s.g_matrices.iter().flatten() {
                let g = g_matrix_from_rows(g, "search")?;
                if g.nrows() != n {
                    return Err(invalid(
                        "search",
                        "g_matrices",
                        format!("matrix size {} does not match {n} modes", g.nrows()),
                    ));
                }
            }
        }
        Ok(Experiment {
            state,
            tau: self.subtraction.tau,
            pattern: self.subtraction.pattern.clone(),
            target,
            sweep: self.sweep.clone(),
            oracle_enabled: self.oracle.enabled,
            oracle_cutoff: self.oracle.cutoff,
            search: self.search.clone(),
        })
    }
}
