use thiserror::Error;

use crate::offline::EgSolution;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed instance, allocation, or mismatched dimensions.
    #[error("structural error: {0}")]
    Structure(String),

    /// An operation was called outside its documented domain.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Balance or impartiality ratio is undefined because some agents have zero utility.
    #[error("ratio undefined: agents {agents:?} have zero {quantity}")]
    UndefinedRatio { quantity: &'static str, agents: Vec<usize> },

    /// An online algorithm beat the offline benchmark by more than the tolerance.
    #[error("benchmark inconsistency: algorithm welfare {alg} exceeds optimum {opt}")]
    Inconsistent { opt: f64, alg: f64 },

    /// The Eisenberg-Gale solver hit its iteration cap before certifying the tolerance.
    #[error("solver did not converge: gap {gap:e} after {iterations} iterations")]
    Nonconvergence { gap: f64, iterations: usize, best: Box<EgSolution> },

    /// Request exceeds a hard size limit (brute-force search space, value range).
    #[error("refused: {0}")]
    Refused(String),
}
