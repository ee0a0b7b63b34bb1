use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid problem instance: {0}")]
    InvalidInstance(String),

    #[error("invalid design parameters: {0}")]
    InvalidParams(String),

    /// The optimizers divide by the mean infected count.
    #[error("mean infected count must be positive")]
    ZeroMean,

    #[error("infeasible instance: {0}")]
    Infeasible(String),

    #[error("enumeration needs {states} states, budget is {budget}")]
    BudgetExceeded { states: u128, budget: u128 },

    #[error("stage-one result has {got} pools, design has {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("malformed design dump at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
