use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("topology mismatch: {0}")]
    TopologyMismatch(String),

    #[error("incomplete connection schedule: {0}")]
    IncompleteSchedule(String),

    #[error("invalid conductance law: {0}")]
    InvalidLaw(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("solver did not converge after {iterations} iterations (best scaled residual {best_residual:e})")]
    Convergence {
        iterations: usize,
        best_residual: f64,
    },

    #[error("classification does not belong to this operating point: {0}")]
    ClassificationMismatch(String),

    #[error("component law is not part of the total law: {0}")]
    Composition(String),

    #[error("netlist error: {0}")]
    Netlist(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
