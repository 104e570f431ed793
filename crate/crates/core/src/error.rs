use thiserror::Error;

use crate::engine::DecompositionTrace;
use crate::matcore::SingularTriple;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("degenerate direction: {0}")]
    DegenerateDirection(&'static str),

    #[error("matrix is zero")]
    ZeroMatrix,

    #[error("power iteration did not converge after {iterations} iterations (best sigma {:.6e})", best.sigma)]
    Convergence {
        iterations: usize,
        best: Box<SingularTriple>,
    },

    #[error("Jacobi sweep limit of {sweeps} reached without convergence")]
    JacobiConvergence { sweeps: usize },

    #[error("enumeration budget exceeded for {what}: needs {needed}, budget {budget}")]
    BudgetExceeded {
        what: &'static str,
        needed: String,
        budget: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("decomposition aborted after {} rounds: {source}", trace.rounds.len())]
    Aborted {
        trace: Box<DecompositionTrace>,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn budget(what: &'static str, needed: impl ToString, budget: impl ToString) -> Self {
        Error::BudgetExceeded {
            what,
            needed: needed.to_string(),
            budget: budget.to_string(),
        }
    }

    /// Innermost cause, looking through `Aborted` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Aborted { source, .. } => source.root(),
            other => other,
        }
    }
}
