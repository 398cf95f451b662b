//! Systematic-free Vandermonde MDS code over small binary extension fields.
//!
//! Symbol `i` (1-based) of a value is the evaluation of the value's
//! coefficient polynomial at `alpha_i = g^(i-1)`, one evaluation per stripe
//! of `k` field elements.

mod code;
mod gf;
mod layout;

pub use code::{ambiguity_count, decode, encode, CodeParams, Codeword};
pub use gf::Gf;
pub use layout::ValueLayout;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodingError {
    #[error("invalid code parameters: {0}")]
    InvalidParams(String),
    #[error("singular system: duplicate symbol index {0}")]
    SingularSystem(usize),
    #[error("need {need} symbols, got {got}")]
    NotEnoughSymbols { need: usize, got: usize },
    #[error("symbol {0} is inconsistent with the decoded value")]
    InconsistentSymbols(usize),
    #[error("brute-force space too large: {0}")]
    FieldTooLarge(String),
}
