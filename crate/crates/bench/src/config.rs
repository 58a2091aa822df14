//! Flat TOML run configuration.
//!
//! Every key is a top-level field of [`RunConfig`]; unknown keys are
//! rejected so a typo cannot silently fall back to a default.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ppl_core::problems::{DEFAULT_RADIUS, DEFAULT_TOLERANCE_C};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Syntax(String),
    #[error("invalid config: {0}")]
    Incompatible(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemName {
    Disk,
    Qp,
    FairnessDp,
    FairnessEo,
    Intersectional,
    Mnpc,
}

impl ProblemName {
    /// Whether the constraint oracle is a true Jacobian.
    pub fn smooth_constraints(self) -> bool {
        matches!(self, ProblemName::Disk | ProblemName::Qp | ProblemName::Mnpc)
    }

    pub fn uses_data(self) -> bool {
        matches!(
            self,
            ProblemName::FairnessDp | ProblemName::FairnessEo | ProblemName::Intersectional
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    Plada,
    Ppala,
    Penalty,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataFormat {
    #[default]
    Libsvm,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EoForm {
    #[default]
    MaxSingleConstraint,
    TwoConstraints,
}

/// One run: a problem, a method, its parameters and where to write results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub problem: ProblemName,
    pub method: MethodName,

    pub alpha: f64,
    pub beta: f64,
    /// PLADA μ-step cap.
    pub gamma0: f64,
    /// PLADA `δ_k = κ/(k+1)`.
    pub kappa: f64,
    /// PPALA `δ_k = 1/(p k^q + 1)`.
    pub p: f64,
    pub q: f64,
    pub eta: Option<f64>,
    pub tau: Option<f64>,
    pub lambda_cap: Option<f64>,
    pub max_iters: usize,
    pub tol: f64,
    pub tol_stationarity: Option<f64>,
    pub tol_feasibility: Option<f64>,
    pub tol_complementarity: Option<f64>,
    pub stop_on_kkt: bool,

    pub rho0: f64,
    pub growth: f64,
    pub rounds: usize,
    pub inner_iters: usize,

    pub qp_n: usize,
    pub qp_m: usize,
    pub mnpc_classes: usize,
    pub mnpc_per_class: usize,
    /// Loss bound for every non-target class.
    pub mnpc_kappa: f64,
    pub mnpc_theta: f64,
    pub tolerance_c: f64,
    pub radius: f64,
    pub eo_formulation: EoForm,

    /// Rows of the generated dataset when `data_path` is unset.
    pub synthetic_rows: usize,
    pub data_path: Option<PathBuf>,
    pub data_format: DataFormat,
    pub zero_one_labels: bool,
    pub label_column: Option<String>,
    pub positive_label: Option<String>,
    pub group_name: String,
    pub group_column: Option<String>,
    pub group_values: Vec<String>,
    pub group_feature: Option<usize>,
    pub group_threshold: f64,
    pub scale_features: bool,

    pub output_dir: PathBuf,
    pub seed: u64,
    pub trace_every: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: ProblemName::Disk,
            method: MethodName::Plada,
            alpha: 10.0,
            beta: 0.1,
            gamma0: ppl_core::plada::DEFAULT_GAMMA0,
            kappa: 1.0,
            p: ppl_core::ppala::DEFAULT_P,
            q: 1.0,
            eta: None,
            tau: None,
            lambda_cap: None,
            max_iters: DEFAULT_CLI_MAX_ITERS,
            tol: 1e-3,
            tol_stationarity: None,
            tol_feasibility: None,
            tol_complementarity: None,
            stop_on_kkt: true,
            rho0: 1.0,
            growth: 10.0,
            rounds: 3,
            inner_iters: 2_000,
            qp_n: 10,
            qp_m: 3,
            mnpc_classes: 3,
            mnpc_per_class: 100,
            mnpc_kappa: 1.0,
            mnpc_theta: 1.0,
            tolerance_c: DEFAULT_TOLERANCE_C,
            radius: DEFAULT_RADIUS,
            eo_formulation: EoForm::default(),
            synthetic_rows: 500,
            data_path: None,
            data_format: DataFormat::default(),
            zero_one_labels: false,
            label_column: None,
            positive_label: None,
            group_name: ppl_core::problems::SYNTHETIC_GROUP.to_string(),
            group_column: None,
            group_values: Vec::new(),
            group_feature: None,
            group_threshold: 0.5,
            scale_features: false,
            output_dir: PathBuf::from("runs"),
            seed: 0,
            trace_every: 1,
        }
    }
}

/// Iteration budget for command-line runs. Larger than the library default
/// because PLADA on the disk problem from the box center needs about 8.5e4
/// iterations to meet a 1e-3 tolerance.
pub const DEFAULT_CLI_MAX_ITERS: usize = 100_000;

impl RunConfig {
    /// Parses TOML text and checks cross-field rules.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn tolerances(&self) -> ppl_core::KktTolerances {
        ppl_core::KktTolerances {
            eps_stationarity: self.tol_stationarity.unwrap_or(self.tol),
            eps_feasibility: self.tol_feasibility.unwrap_or(self.tol),
            eps_complementarity: self.tol_complementarity.unwrap_or(self.tol),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Incompatible(m));
        if !self.problem.smooth_constraints() && self.method != MethodName::Plada {
            let method = match self.method {
                MethodName::Ppala => "ppala",
                _ => "penalty",
            };
            return bad(format!(
                "method = \"{method}\" requires smooth constraints, but problem = \"{}\" has a nonsmooth constraint oracle; use method = \"plada\"",
                problem_key(self.problem)
            ));
        }
        if self.trace_every == 0 {
            return bad("trace_every must be a positive integer".into());
        }
        if self.problem.uses_data() {
            if let Some(path) = &self.data_path {
                if self.data_format == DataFormat::Csv && (self.label_column.is_none() || self.positive_label.is_none())
                {
                    return bad(format!(
                        "data_path = {path:?} is CSV, so label_column and positive_label are required"
                    ));
                }
                if self.group_column.is_some() == self.group_feature.is_some() {
                    return bad("a data file needs exactly one of group_column or group_feature".into());
                }
                if self.group_column.is_some() && self.group_values.is_empty() {
                    return bad("group_column is set but group_values is empty".into());
                }
            }
        } else if self.data_path.is_some() {
            return bad(format!(
                "problem = \"{}\" does not read data_path",
                problem_key(self.problem)
            ));
        }
        self.tolerances()
            .validate()
            .map_err(|e| ConfigError::Incompatible(e.to_string()))?;
        Ok(())
    }
}

pub fn problem_key(p: ProblemName) -> &'static str {
    match p {
        ProblemName::Disk => "disk",
        ProblemName::Qp => "qp",
        ProblemName::FairnessDp => "fairness-dp",
        ProblemName::FairnessEo => "fairness-eo",
        ProblemName::Intersectional => "intersectional",
        ProblemName::Mnpc => "mnpc",
    }
}

/// Reads and validates a config file. A relative `data_path` is resolved
/// against the directory containing the config.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let mut cfg = RunConfig::from_toml(&text)?;
    if let (Some(data), Some(dir)) = (&cfg.data_path, path.parent()) {
        if data.is_relative() {
            cfg.data_path = Some(dir.join(data));
        }
    }
    Ok(cfg)
}
