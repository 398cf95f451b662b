use std::collections::{BTreeMap, BTreeSet, VecDeque};

use regmem_consistency::{History, OpKind};
use serde::Serialize;

use crate::{digest_hex, ActorId, ChannelId, Encode, Node, Op, Protocol, SimError, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct Envelope<M> {
    pub id: u64,
    pub msg: M,
    pub vd: bool,
}

impl<M: Encode> Encode for Envelope<M> {
    fn encode(&self, out: &mut Vec<u8>) {
        self.msg.encode(out);
        self.vd.encode(out);
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ChannelStats {
    pub sent: u64,
    pub delivered: u64,
    pub dropped: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DropRecord {
    pub step: u64,
    pub channel: ChannelId,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientSlot<C> {
    pub state: C,
    pub pending: VecDeque<Op>,
    /// Operation id and kind of the operation in progress.
    pub current: Option<(u64, OpKind)>,
    pub completed: u64,
    pub last_read: Option<Value>,
}

/// A global snapshot: every automaton state plus channel contents and the
/// failure and freeze sets.
#[derive(Debug)]
pub struct Configuration<P: Protocol> {
    /// Server `s` lives at index `s - 1`.
    pub servers: Vec<P::Server>,
    pub clients: BTreeMap<Node, ClientSlot<P::Client>>,
    pub channels: BTreeMap<ChannelId, VecDeque<Envelope<P::Msg>>>,
    pub stats: BTreeMap<ChannelId, ChannelStats>,
    pub failed: BTreeSet<usize>,
    pub frozen: BTreeSet<ActorId>,
    /// Clients whose value-dependent messages may neither be sent nor delivered.
    pub held: BTreeSet<Node>,
    pub step_count: u64,
    pub history: History,
    pub drops: Vec<DropRecord>,
    pub(crate) next_msg: u64,
    pub(crate) next_op: u64,
}

impl<P: Protocol> Clone for Configuration<P> {
    fn clone(&self) -> Self {
        Configuration {
            servers: self.servers.clone(),
            clients: self.clients.clone(),
            channels: self.channels.clone(),
            stats: self.stats.clone(),
            failed: self.failed.clone(),
            frozen: self.frozen.clone(),
            held: self.held.clone(),
            step_count: self.step_count,
            history: self.history.clone(),
            drops: self.drops.clone(),
            next_msg: self.next_msg,
            next_op: self.next_op,
        }
    }
}

impl<P: Protocol> Configuration<P> {
    pub fn n(&self) -> usize {
        self.servers.len()
    }

    pub fn server(&self, s: usize) -> &P::Server {
        &self.servers[s - 1]
    }

    pub fn server_bytes(&self, s: usize) -> Vec<u8> {
        self.servers[s - 1].to_bytes()
    }

    pub fn client(&self, c: Node) -> &ClientSlot<P::Client> {
        &self.clients[&c]
    }

    pub fn channel(&self, c: ChannelId) -> impl Iterator<Item = &Envelope<P::Msg>> {
        self.channels.get(&c).into_iter().flatten()
    }

    pub fn channel_len(&self, c: ChannelId) -> usize {
        self.channels.get(&c).map_or(0, |q| q.len())
    }

    pub fn channel_bytes(&self, c: ChannelId) -> Vec<u8> {
        let mut out = Vec::new();
        match self.channels.get(&c) {
            Some(q) => q.encode(&mut out),
            None => 0u32.encode(&mut out),
        }
        out
    }

    pub fn is_failed(&self, n: Node) -> bool {
        matches!(n, Node::Server(s) if self.failed.contains(&s))
    }

    pub fn is_frozen(&self, a: ActorId) -> bool {
        if self.frozen.contains(&a) {
            return true;
        }
        match a {
            ActorId::Channel(c) => {
                self.frozen.contains(&ActorId::Node(c.src)) || self.frozen.contains(&ActorId::Node(c.dst))
            }
            ActorId::Node(_) => false,
        }
    }

    /// Freezes a node together with every channel touching it.
    pub fn freeze_node(&mut self, n: Node) {
        self.frozen.insert(ActorId::Node(n));
    }

    pub fn schedule(&mut self, c: Node, op: Op) {
        self.clients.get_mut(&c).expect("unknown client").pending.push_back(op);
    }

    pub fn is_idle(&self, c: Node) -> bool {
        let slot = &self.clients[&c];
        slot.current.is_none() && slot.pending.is_empty()
    }

    pub fn completed(&self, c: Node) -> u64 {
        self.clients[&c].completed
    }

    pub fn all_idle(&self) -> bool {
        self.clients.keys().all(|c| self.is_idle(*c))
    }

    pub fn has_vd_from(&self, c: Node) -> bool {
        self.channels.iter().any(|(id, q)| id.src == c && q.iter().any(|e| e.vd))
    }

    pub fn server_to_server_empty(&self) -> bool {
        self.channels.iter().all(|(id, q)| !id.is_server_to_server() || q.is_empty())
    }

    /// A server-to-server message was ever sent in the history of this
    /// configuration.
    pub fn gossip_observed(&self) -> bool {
        self.stats.iter().any(|(id, s)| id.is_server_to_server() && s.sent > 0)
    }

    pub fn server_digests(&self) -> Vec<String> {
        self.servers.iter().map(|s| digest_hex(&s.to_bytes())).collect()
    }

    /// Canonical bytes for the listed servers. Failed servers are refused.
    pub fn snapshot_fingerprint(&self, servers: &[usize]) -> Result<Vec<Vec<u8>>, SimError> {
        servers
            .iter()
            .map(|&s| {
                if s == 0 || s > self.n() {
                    return Err(SimError::UnknownServer(s));
                }
                if self.failed.contains(&s) {
                    return Err(SimError::FailedServerInFingerprint(s));
                }
                Ok(self.server_bytes(s))
            })
            .collect()
    }

    /// Canonical bytes of the whole configuration except bookkeeping
    /// (history, drop log and counters).
    pub fn state_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for s in &self.servers {
            s.encode(&mut out);
        }
        for (n, slot) in &self.clients {
            n.encode(&mut out);
            slot.state.encode(&mut out);
        }
        for (id, q) in &self.channels {
            if !q.is_empty() {
                id.src.encode(&mut out);
                id.dst.encode(&mut out);
                q.encode(&mut out);
            }
        }
        out
    }

    pub fn drop_log_csv(&self) -> String {
        let mut s = String::from("step,channel,digest\n");
        for d in &self.drops {
            s.push_str(&format!("{},{},{}\n", d.step, d.channel, d.digest));
        }
        s
    }
}
