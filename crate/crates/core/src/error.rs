use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("covariance matrix is not positive semi-definite (eigenvalues {0:?})")]
    NotPsd([f64; 2]),

    #[error("persistence {0} is outside (-1, 1)")]
    NonStationary(f64),

    #[error("cross-persistence must be zero (got rho12={rho12}, rho21={rho21})")]
    CrossPersistence { rho12: f64, rho21: f64 },

    #[error("profile covers {got} ages but the model needs {expected}")]
    ProfileLength { expected: usize, got: usize },

    #[error("simulated mass {mass:.3e} reached infeasible state (age {age}, child {child}, asset {ia}, z {iz}, e {ie})")]
    InfeasibleReached {
        age: u32,
        child: bool,
        ia: usize,
        iz: usize,
        ie: usize,
        mass: f64,
    },

    #[error("type weights must sum to 1 (got {0})")]
    WeightSum(f64),

    #[error("expected {expected} weights, got {got}")]
    WeightCount { expected: usize, got: usize },

    #[error("profiles do not cover ages {from}..={to}")]
    AgeCoverage { from: u32, to: u32 },

    #[error("config: {0}")]
    Config(String),

    #[error("override key `{0}` is not allowed in a counterfactual")]
    OverrideKey(String),

    #[error("{path}:{line}: {reason}")]
    Data {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, ModelError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> ModelError {
    ModelError::InvalidParam {
        name,
        reason: reason.into(),
    }
}
