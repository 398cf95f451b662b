//! Adversarial executions behind the storage lower bounds: valency probes,
//! critical points, staged deliveries and the state fingerprints they
//! induce, checked for injectivity and against the product-form counts.

mod fingerprint;
mod report;
mod staged;
mod thm1;
mod twowrite;

pub use fingerprint::{StateFingerprint, Variant};
pub use report::{Check, Collision, FingerprintEntry, ProductCheck, Splice, WitnessParams, WitnessReport, PROBE_DISCLOSURE};
pub use staged::{build_alpha0, build_staged_execution, lemma2_search, probe_restrained, witness_thm4, Lemma2Outcome, StagedExecution};
pub use thm1::witness_thm1;
pub use twowrite::{
    build_two_write_execution, find_flip_point, valency_probe, witness_thm2, witness_thm3, FlipScan, ProbeMode, ValencyProbeResult,
};

use regmem_algorithms::AlgoError;
use regmem_consistency::ConsistencyError;
use regmem_sim::SimError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AdversaryError {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),
    #[error("no flip point: {0}")]
    NoFlip(String),
    #[error("threshold search failed: {0}")]
    SearchFailed(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Algo(#[from] AlgoError),
    #[error(transparent)]
    Consistency(#[from] ConsistencyError),
}

pub type Result<T> = std::result::Result<T, AdversaryError>;

use std::collections::BTreeSet;

use regmem_sim::{ActorId, ChannelId, Configuration, Node, Protocol, Sim};

pub(crate) const WRITER: Node = Node::Writer(0);
pub(crate) const READER: Node = Node::Reader(0);

pub(crate) fn all_channels<P: Protocol>(sim: &Sim<P>, cfg: &Configuration<P>) -> Vec<ChannelId> {
    sim.actors(cfg)
        .into_iter()
        .filter_map(|a| match a {
            ActorId::Channel(c) => Some(c),
            ActorId::Node(_) => None,
        })
        .collect()
}

pub(crate) fn states<P: Protocol>(cfg: &Configuration<P>, servers: &[usize]) -> Result<Vec<(usize, Vec<u8>)>> {
    Ok(servers.iter().copied().zip(cfg.snapshot_fingerprint(servers)?).collect())
}

/// Fails every server outside `live`.
pub(crate) fn fail_complement<P: Protocol>(sim: &Sim<P>, cfg: &Configuration<P>, live: &[usize]) -> Result<Configuration<P>> {
    let n = cfg.n();
    if live.is_empty() || live.iter().any(|&s| s == 0 || s > n) {
        return Err(AdversaryError::Precondition(format!("live set {live:?} is not a nonempty subset of 1..={n}")));
    }
    let dead: BTreeSet<usize> = (1..=n).filter(|s| !live.contains(s)).collect();
    Ok(sim.fail_servers(cfg, &dead)?)
}

pub(crate) fn unfreeze<P: Protocol>(cfg: &mut Configuration<P>, n: Node) {
    cfg.frozen.remove(&ActorId::Node(n));
}
