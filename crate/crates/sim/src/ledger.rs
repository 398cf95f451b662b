use std::collections::{BTreeMap, BTreeSet};

use crate::{Configuration, Protocol};

/// Distinct canonical server states seen across a family of executions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReachableStateLedger {
    seen: BTreeMap<usize, BTreeSet<Vec<u8>>>,
}

impl ReachableStateLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, server: usize, state: Vec<u8>) {
        self.seen.entry(server).or_default().insert(state);
    }

    pub fn record_config<P: Protocol>(&mut self, cfg: &Configuration<P>, servers: &[usize]) {
        for &s in servers {
            self.record(s, cfg.server_bytes(s));
        }
    }

    pub fn count(&self, server: usize) -> usize {
        self.seen.get(&server).map_or(0, |s| s.len())
    }

    pub fn counts(&self, servers: &[usize]) -> Vec<usize> {
        servers.iter().map(|&s| self.count(s)).collect()
    }

    pub fn merge(&mut self, other: &ReachableStateLedger) {
        for (s, set) in &other.seen {
            self.seen.entry(*s).or_default().extend(set.iter().cloned());
        }
    }
}
