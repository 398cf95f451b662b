use regmem_sim::{digest_hex, Encode};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Thm1,
    Thm2,
    Thm3,
    Thm4,
}

/// Server states extracted from an adversarial execution. Two inputs with
/// equal fingerprints are indistinguishable to the servers involved.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateFingerprint {
    pub variant: Variant,
    /// (server, canonical state) for the ordered server tuple.
    pub states: Vec<(usize, Vec<u8>)>,
    /// Changed-server records taken at a later point.
    pub changed: Vec<(usize, Vec<u8>)>,
    pub sigma: Vec<usize>,
    pub thresholds: Vec<usize>,
}

impl StateFingerprint {
    pub fn plain(variant: Variant, states: Vec<(usize, Vec<u8>)>) -> Self {
        StateFingerprint { variant, states, changed: vec![], sigma: vec![], thresholds: vec![] }
    }

    pub fn bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        (self.variant as usize).encode(&mut out);
        self.states.encode(&mut out);
        self.changed.encode(&mut out);
        self.sigma.encode(&mut out);
        self.thresholds.encode(&mut out);
        out
    }

    pub fn digest(&self) -> String {
        digest_hex(&self.bytes())
    }
}
