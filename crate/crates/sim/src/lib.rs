//! Deterministic simulator for register emulations over reliable
//! asynchronous channels with crash failures.
//!
//! A point is the configuration after a single step. Steps are taken by
//! clients (invocations) and by channels (delivery of one message together
//! with the receiver's transition).

mod config;
mod encode;
mod engine;
mod execution;
mod ids;
mod ledger;
mod protocol;

pub use config::{ChannelStats, ClientSlot, Configuration, DropRecord, Envelope};
pub use encode::Encode;
pub use engine::{Outcome, RunSummary, SendRecord, Sim, StepRecord, DEFAULT_STEP_BUDGET};
pub use execution::{changed_channels, changed_servers, digest_b64, digest_hex, Execution};
pub use ids::{ActorId, ChannelId, Node};
pub use ledger::ReachableStateLedger;
pub use protocol::{Done, MsgClass, Op, Outbox, Protocol, Value};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("{0} has no enabled action")]
    NoEnabledAction(String),
    #[error("{0} is failed or frozen")]
    ActorUnavailable(String),
    #[error("no termination after {steps} steps (quiescent: {quiescent})")]
    NonTermination { steps: u64, quiescent: bool },
    #[error("server {0} is failed and cannot be fingerprinted")]
    FailedServerInFingerprint(usize),
    #[error("no server {0}")]
    UnknownServer(usize),
}
