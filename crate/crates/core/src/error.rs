use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("order mismatch: left has order {left}, right has order {right}")]
    OrderMismatch { left: usize, right: usize },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("schedule/grid inconsistency: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, Error>;
