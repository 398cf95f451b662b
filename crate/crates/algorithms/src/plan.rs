use std::collections::BTreeSet;

use regmem_sim::{Protocol, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QuorumSystem {
    /// Every subset of `of` with at least `size` members.
    Threshold { of: BTreeSet<usize>, size: usize },
}

impl QuorumSystem {
    pub fn is_quorum(&self, set: &BTreeSet<usize>) -> bool {
        match self {
            QuorumSystem::Threshold { of, size } => set.intersection(of).count() >= *size,
        }
    }

    pub fn members(&self) -> &BTreeSet<usize> {
        match self {
            QuorumSystem::Threshold { of, .. } => of,
        }
    }

    pub fn min_size(&self) -> usize {
        match self {
            QuorumSystem::Threshold { size, .. } => *size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseSpec {
    pub name: &'static str,
    pub destinations: BTreeSet<usize>,
    pub quorums: QuorumSystem,
    pub value_dependent: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhasePlan {
    pub phases: Vec<PhaseSpec>,
}

impl PhasePlan {
    pub fn value_dependent_phases(&self) -> Vec<usize> {
        (0..self.phases.len()).filter(|&i| self.phases[i].value_dependent).collect()
    }
}

/// Writers decompose into phases and expose their state as a value plus
/// metadata that evolves independently of the value.
pub trait RestrictedProtocol: Protocol {
    fn phase_plan(&self) -> PhasePlan;
    /// Index into the phase plan of the writer's current phase.
    fn writer_phase(&self, st: &Self::Client) -> Option<usize>;
    /// Canonical bytes of (m, h(m, v)), excluding v.
    fn writer_metadata(&self, st: &Self::Client) -> Vec<u8>;
    fn writer_value(&self, st: &Self::Client) -> Option<Value>;
}

pub trait StorageMeasure: Protocol {
    /// Bits of value payload held by a server in this state.
    fn stored_value_bits(&self, st: &Self::Server) -> u64;
}
