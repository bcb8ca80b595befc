use thiserror::Error;

use crate::linalg::SolveReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-conforming mesh: {0}")]
    NonConforming(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite value while interpolating on edge {edge}")]
    NonFinite { edge: usize },

    #[error("field does not belong to this finite element space")]
    SpaceMismatch,

    #[error("missing input: {0}")]
    Missing(&'static str),

    #[error("linear solver failed: {reason} (iterations {}, relative residual {:.3e})", report.iterations, report.relative_residual)]
    Solver { reason: String, report: SolveReport },

    #[error("semi-smooth Newton did not converge in {iterations} iterations (last residual {:.3e})", history.last().copied().unwrap_or(f64::NAN))]
    NonConvergence {
        iterations: usize,
        history: Vec<f64>,
    },

    #[error("refinement closure did not terminate within {0} rounds")]
    RefinementCap(usize),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
