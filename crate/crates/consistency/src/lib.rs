//! Register histories and the checks applied to them: regularity for a
//! single writer and reader, linearizability, and weak regularity.

mod check;
mod history;

pub use check::{check_atomic, check_atomic_with_budget, check_regular, check_weakly_regular, Verdict, Violation, DEFAULT_MAX_OPS};
pub use history::{Event, History, OpKind, Operation, Phase};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConsistencyError {
    #[error("malformed history: {0}")]
    MalformedHistory(String),
    #[error("history has {ops} operations, search budget is {max}")]
    SearchBudgetExceeded { ops: usize, max: usize },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("parse error: {0}")]
    Parse(String),
}
