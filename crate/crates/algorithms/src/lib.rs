//! Register emulations run by the simulator: ABD replication, a CAS-style
//! erasure-coded register (optionally finalizing through server gossip), and
//! a joint-sum demo store that is not a consistent register.

mod abd;
mod coded;
mod plan;
mod tag;
mod validate;
mod xor;

pub use abd::{abd_spec, abd_spec_unchecked, Abd, AbdMsg, AbdOptions, AbdReader, AbdServer, AbdWriter, AbdClient};
pub use coded::{coded_gossip_spec, coded_spec, Coded, CodedClient, CodedMsg, CodedOptions, CodedServer};
pub use plan::{PhasePlan, PhaseSpec, QuorumSystem, RestrictedProtocol, StorageMeasure};
pub use tag::Tag;
pub use validate::{assumption_report, validate_assumptions, AssumptionReport, Clause};
pub use xor::{appendix_a, xor_demo_spec, AppendixA, XorDemo, XorMsg};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlgoError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("assumption {clause} violated: {detail}")]
    AssumptionViolation { clause: String, detail: String },
    #[error(transparent)]
    Sim(#[from] regmem_sim::SimError),
}
