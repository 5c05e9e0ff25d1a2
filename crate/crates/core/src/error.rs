use thiserror::Error;

/// Hard failures of the LP/QP engines. Infeasibility and unboundedness are
/// statuses on the solution, not errors.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("singular basis {basis:?}")]
    SingularBasis { basis: Vec<usize> },
    #[error("iteration limit {0} reached")]
    MaxIterations(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("proximal weight {0} must be at least 1")]
    BadSigma(f64),
}

#[derive(Debug, Error)]
pub enum MslpError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("stage {stage} problem infeasible at state {state:?} (complete recourse violated)")]
    Infeasible { stage: usize, state: Vec<f64> },
    #[error("stage {stage} problem unbounded")]
    Unbounded { stage: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("observation not in pool for stage {0}")]
    UnknownObservation(usize),
    #[error("stage mismatch: pool holds stage {pool}, observation is for stage {obs}")]
    StageMismatch { pool: usize, obs: usize },
    #[error("extensive form has {paths} paths, above the cap of {cap}")]
    TooManyPaths { paths: usize, cap: usize },
    #[error("cost relaxation unbounded below at stage {0}")]
    UnboundedCost(usize),
    #[error("{file}:{line}: {msg}")]
    Parse { file: String, line: usize, msg: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, MslpError>;
