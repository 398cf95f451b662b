use base64::Engine;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::{ChannelId, Configuration, Encode, Protocol, StepRecord};

pub fn digest_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn digest_b64(bytes: &[u8]) -> String {
    base64::engine::general_purpose::STANDARD.encode(Sha256::digest(bytes))
}

/// A sequence of steps with the configuration after each one.
/// `points[0]` is the initial configuration and `points[i]` follows step i.
#[derive(Debug, Clone)]
pub struct Execution<P: Protocol> {
    pub steps: Vec<StepRecord>,
    pub points: Vec<Configuration<P>>,
}

#[derive(Serialize)]
struct TraceLine<'a> {
    step: u64,
    actor: String,
    action: &'a str,
    states: Vec<String>,
}

impl<P: Protocol> Execution<P> {
    pub fn new(initial: Configuration<P>) -> Self {
        Execution { steps: Vec::new(), points: vec![initial] }
    }

    pub fn push(&mut self, rec: StepRecord, cfg: Configuration<P>) {
        self.steps.push(rec);
        self.points.push(cfg);
    }

    /// Appends an execution that starts at this one's last point.
    pub fn append(&mut self, other: Execution<P>) {
        let mut pts = other.points.into_iter();
        pts.next();
        self.steps.extend(other.steps);
        self.points.extend(pts);
    }

    pub fn initial(&self) -> &Configuration<P> {
        &self.points[0]
    }

    pub fn last(&self) -> &Configuration<P> {
        self.points.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for (rec, cfg) in self.steps.iter().zip(&self.points[1..]) {
            let line = TraceLine {
                step: rec.step,
                actor: rec.actor.to_string(),
                action: &rec.label,
                states: cfg.servers.iter().map(|s| digest_b64(&s.to_bytes())).collect(),
            };
            out.push_str(&serde_json::to_string(&line).unwrap());
            out.push('\n');
        }
        out
    }
}

/// Servers whose canonical state differs between two configurations.
pub fn changed_servers<P: Protocol>(a: &Configuration<P>, b: &Configuration<P>) -> Vec<usize> {
    (1..=a.n()).filter(|&s| a.server_bytes(s) != b.server_bytes(s)).collect()
}

/// Channels whose contents differ between two configurations.
pub fn changed_channels<P: Protocol>(a: &Configuration<P>, b: &Configuration<P>) -> Vec<ChannelId> {
    let mut ids: Vec<ChannelId> = a.channels.keys().chain(b.channels.keys()).copied().collect();
    ids.sort();
    ids.dedup();
    ids.into_iter().filter(|&id| a.channel_bytes(id) != b.channel_bytes(id)).collect()
}
