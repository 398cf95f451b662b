use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regmem_consistency::{Event, History, OpKind, Phase};
use serde::Serialize;

use crate::config::{ClientSlot, DropRecord, Envelope};
use crate::{digest_hex, ActorId, ChannelId, Configuration, Done, Encode, Execution, MsgClass, Node, Op, Outbox, Protocol, SimError};

pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SendRecord {
    pub channel: ChannelId,
    pub label: &'static str,
    pub vd: bool,
    pub dropped: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StepRecord {
    pub step: u64,
    pub actor: ActorId,
    pub label: String,
    pub sent: Vec<SendRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Stopped,
    Quiescent,
}

/// Result of a run that keeps only the final configuration.
#[derive(Debug, Clone)]
pub struct RunSummary<P: Protocol> {
    pub config: Configuration<P>,
    pub steps: u64,
    pub outcome: Outcome,
    /// Digest of the sequence of (actor, label) pairs taken.
    pub trace_digest: String,
}

#[derive(Debug, Clone, Copy)]
enum Sched {
    RoundRobin,
    Random,
}

/// The engine: a protocol plus a step budget.
#[derive(Debug, Clone)]
pub struct Sim<P: Protocol> {
    pub proto: P,
    pub budget: u64,
}

impl<P: Protocol> Sim<P> {
    pub fn new(proto: P) -> Self {
        Sim { proto, budget: DEFAULT_STEP_BUDGET }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    /// Initial configuration with the given numbers of writers and readers.
    pub fn initial(&self, writers: usize, readers: usize) -> Configuration<P> {
        let n = self.proto.servers();
        let servers = (1..=n).map(|s| self.proto.init_server(s)).collect();
        let mut clients = BTreeMap::new();
        let nodes = (0..writers).map(Node::Writer).chain((0..readers).map(Node::Reader));
        for c in nodes {
            clients.insert(
                c,
                ClientSlot { state: self.proto.init_client(c), pending: VecDeque::new(), current: None, completed: 0, last_read: None },
            );
        }
        Configuration {
            servers,
            clients,
            channels: BTreeMap::new(),
            stats: BTreeMap::new(),
            failed: BTreeSet::new(),
            frozen: BTreeSet::new(),
            held: BTreeSet::new(),
            step_count: 0,
            history: History::new(self.proto.initial_value()),
            drops: Vec::new(),
            next_msg: 0,
            next_op: 1,
        }
    }

    /// Every actor in fixed order: servers, clients, then channels.
    pub fn actors(&self, cfg: &Configuration<P>) -> Vec<ActorId> {
        let mut nodes: Vec<Node> = (1..=cfg.n()).map(Node::Server).collect();
        nodes.extend(cfg.clients.keys().copied());
        let mut out: Vec<ActorId> = nodes.iter().map(|n| ActorId::Node(*n)).collect();
        for &a in &nodes {
            for &b in &nodes {
                if a != b && (a.is_server() || b.is_server()) {
                    out.push(ActorId::Channel(ChannelId::new(a, b)));
                }
            }
        }
        out.sort();
        out
    }

    pub fn server_channels(&self, cfg: &Configuration<P>) -> Vec<ChannelId> {
        let n = cfg.n();
        let mut v = vec![];
        for a in 1..=n {
            for b in 1..=n {
                if a != b {
                    v.push(ChannelId::new(Node::Server(a), Node::Server(b)));
                }
            }
        }
        v
    }

    pub fn channels_from(&self, cfg: &Configuration<P>, src: Node) -> Vec<ChannelId> {
        self.actors(cfg)
            .into_iter()
            .filter_map(|a| match a {
                ActorId::Channel(c) if c.src == src => Some(c),
                _ => None,
            })
            .collect()
    }

    pub fn fail_servers(&self, cfg: &Configuration<P>, which: &BTreeSet<usize>) -> Result<Configuration<P>, SimError> {
        let mut cfg = cfg.clone();
        for &s in which {
            if s == 0 || s > cfg.n() {
                return Err(SimError::UnknownServer(s));
            }
            cfg.failed.insert(s);
        }
        let dead: Vec<ChannelId> = cfg.channels.keys().filter(|c| cfg.is_failed(c.src) || cfg.is_failed(c.dst)).copied().collect();
        for id in dead {
            let q = cfg.channels.get_mut(&id).unwrap();
            let drained: Vec<_> = q.drain(..).collect();
            for e in drained {
                cfg.stats.entry(id).or_default().dropped += 1;
                cfg.drops.push(DropRecord { step: cfg.step_count, channel: id, digest: digest_hex(&e.msg.to_bytes()) });
            }
        }
        Ok(cfg)
    }

    fn send(&self, cfg: &mut Configuration<P>, from: Node, out: Outbox<P::Msg>) -> Vec<SendRecord> {
        let mut recs = Vec::with_capacity(out.len());
        for (dst, msg) in out {
            let id = ChannelId::new(from, dst);
            let vd = self.proto.classify(&msg) == MsgClass::ValueDependent;
            let label = self.proto.msg_label(&msg);
            cfg.stats.entry(id).or_default().sent += 1;
            let dropped = cfg.is_failed(dst);
            if dropped {
                cfg.stats.entry(id).or_default().dropped += 1;
                cfg.drops.push(DropRecord { step: cfg.step_count, channel: id, digest: digest_hex(&msg.to_bytes()) });
            } else {
                cfg.next_msg += 1;
                cfg.channels.entry(id).or_default().push_back(Envelope { id: cfg.next_msg, msg, vd });
            }
            recs.push(SendRecord { channel: id, label, vd, dropped });
        }
        recs
    }

    fn has_vd(&self, out: &Outbox<P::Msg>) -> bool {
        out.iter().any(|(_, m)| self.proto.classify(m) == MsgClass::ValueDependent)
    }

    fn check_available(&self, cfg: &Configuration<P>, actor: ActorId) -> Result<(), SimError> {
        let failed = match actor {
            ActorId::Node(n) => cfg.is_failed(n),
            ActorId::Channel(c) => cfg.is_failed(c.src) || cfg.is_failed(c.dst),
        };
        if failed || cfg.is_frozen(actor) {
            return Err(SimError::ActorUnavailable(actor.to_string()));
        }
        if let ActorId::Node(n) = actor {
            if n.server_index().is_some_and(|s| s > cfg.n()) || (n.is_client() && !cfg.clients.contains_key(&n)) {
                return Err(SimError::ActorUnavailable(actor.to_string()));
            }
        }
        Ok(())
    }

    /// Returns a new configuration after one step of `actor`.
    pub fn step(&self, cfg: &Configuration<P>, actor: ActorId) -> Result<(Configuration<P>, StepRecord), SimError> {
        let mut next = cfg.clone();
        let rec = self.step_in_place(&mut next, actor)?;
        Ok((next, rec))
    }

    /// Applies one step of `actor`. On error the configuration is untouched.
    pub fn step_in_place(&self, cfg: &mut Configuration<P>, actor: ActorId) -> Result<StepRecord, SimError> {
        self.check_available(cfg, actor)?;
        match actor {
            ActorId::Node(Node::Server(_)) => Err(SimError::NoEnabledAction(actor.to_string())),
            ActorId::Node(c) => self.invoke(cfg, c, actor),
            ActorId::Channel(id) => self.deliver(cfg, id, actor),
        }
    }

    fn invoke(&self, cfg: &mut Configuration<P>, c: Node, actor: ActorId) -> Result<StepRecord, SimError> {
        let slot = &cfg.clients[&c];
        let Some(&op) = slot.pending.front() else {
            return Err(SimError::NoEnabledAction(actor.to_string()));
        };
        if slot.current.is_some() {
            return Err(SimError::NoEnabledAction(actor.to_string()));
        }
        let mut st = slot.state.clone();
        let mut out = Vec::new();
        self.proto.client_invoke(c, &mut st, op, &mut out);
        if cfg.held.contains(&c) && self.has_vd(&out) {
            return Err(SimError::NoEnabledAction(actor.to_string()));
        }
        cfg.step_count += 1;
        let op_id = cfg.next_op;
        cfg.next_op += 1;
        let (kind, value, label) = match op {
            Op::Write(v) => (OpKind::Write, Some(v), format!("invoke write({v})")),
            Op::Read => (OpKind::Read, None, "invoke read".to_string()),
        };
        let slot = cfg.clients.get_mut(&c).unwrap();
        slot.pending.pop_front();
        slot.state = st;
        slot.current = Some((op_id, kind));
        cfg.history.push(Event { op: op_id, client: c.to_string(), kind, phase: Phase::Invoke, value, point: cfg.step_count });
        let sent = self.send(cfg, c, out);
        Ok(StepRecord { step: cfg.step_count, actor, label, sent })
    }

    fn deliver(&self, cfg: &mut Configuration<P>, id: ChannelId, actor: ActorId) -> Result<StepRecord, SimError> {
        let src_held = cfg.held.contains(&id.src);
        let Some(pos) = cfg.channels.get(&id).and_then(|q| q.iter().position(|e| !(e.vd && src_held))) else {
            return Err(SimError::NoEnabledAction(actor.to_string()));
        };
        let msg = cfg.channels[&id][pos].msg.clone();
        let label = format!("deliver {}", self.proto.msg_label(&msg));
        let mut out = Vec::new();
        match id.dst {
            Node::Server(s) => {
                cfg.channels.get_mut(&id).unwrap().remove(pos);
                self.proto.server_receive(s, &mut cfg.servers[s - 1], id.src, &msg, &mut out);
            }
            c => {
                let mut st = cfg.clients[&c].state.clone();
                let done = self.proto.client_receive(c, &mut st, id.src, &msg, &mut out);
                if cfg.held.contains(&c) && self.has_vd(&out) {
                    return Err(SimError::NoEnabledAction(actor.to_string()));
                }
                cfg.channels.get_mut(&id).unwrap().remove(pos);
                let point = cfg.step_count + 1;
                let slot = cfg.clients.get_mut(&c).unwrap();
                slot.state = st;
                if let Some(d) = done {
                    let (op_id, kind) = slot.current.take().expect("completion without an operation in progress");
                    slot.completed += 1;
                    let value = match d {
                        Done::Read(v) => {
                            slot.last_read = Some(v);
                            Some(v)
                        }
                        Done::Write => None,
                    };
                    cfg.history.push(Event { op: op_id, client: c.to_string(), kind, phase: Phase::Respond, value, point });
                }
            }
        }
        cfg.stats.entry(id).or_default().delivered += 1;
        cfg.step_count += 1;
        let sent = self.send(cfg, id.dst, out);
        Ok(StepRecord { step: cfg.step_count, actor, label, sent })
    }

    fn run_inner(
        &self,
        cfg: &Configuration<P>,
        stop: &dyn Fn(&Configuration<P>) -> bool,
        seed: u64,
        sched: Sched,
        mut record: Option<&mut Execution<P>>,
    ) -> Result<RunSummary<P>, SimError> {
        let actors = self.actors(cfg);
        let mut cur = cfg.clone();
        let mut cursor = (seed % actors.len() as u64) as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..actors.len()).collect();
        let mut steps = 0u64;
        let mut trace = Vec::new();
        loop {
            if stop(&cur) {
                return Ok(RunSummary { config: cur, steps, outcome: Outcome::Stopped, trace_digest: digest_hex(&trace) });
            }
            if steps >= self.budget {
                return Err(SimError::NonTermination { steps, quiescent: false });
            }
            if let Sched::Random = sched {
                order.shuffle(&mut rng);
            }
            let mut acted = None;
            for (k, &shuffled) in order.iter().enumerate() {
                let idx = match sched {
                    Sched::RoundRobin => (cursor + k) % actors.len(),
                    Sched::Random => shuffled,
                };
                if !self.maybe_enabled(&cur, actors[idx]) {
                    continue;
                }
                match self.step_in_place(&mut cur, actors[idx]) {
                    Ok(rec) => {
                        acted = Some((idx, rec));
                        break;
                    }
                    Err(SimError::NoEnabledAction(_)) | Err(SimError::ActorUnavailable(_)) => {}
                    Err(e) => return Err(e),
                }
            }
            let Some((idx, rec)) = acted else {
                return Ok(RunSummary { config: cur, steps, outcome: Outcome::Quiescent, trace_digest: digest_hex(&trace) });
            };
            cursor = idx + 1;
            steps += 1;
            rec.actor.to_string().encode(&mut trace);
            rec.label.encode(&mut trace);
            if let Some(ex) = record.as_deref_mut() {
                ex.push(rec, cur.clone());
            }
        }
    }

    fn maybe_enabled(&self, cfg: &Configuration<P>, a: ActorId) -> bool {
        match a {
            ActorId::Node(Node::Server(_)) => false,
            ActorId::Node(c) => cfg.clients.get(&c).is_some_and(|s| s.current.is_none() && !s.pending.is_empty()),
            ActorId::Channel(id) => cfg.channel_len(id) > 0,
        }
    }

    /// Fair round-robin run from `cfg` with `frozen` added to the frozen set,
    /// until `stop` holds. Running out of enabled actors or of budget first
    /// is a liveness failure.
    pub fn run_fair(
        &self,
        cfg: &Configuration<P>,
        frozen: &BTreeSet<ActorId>,
        stop: &dyn Fn(&Configuration<P>) -> bool,
        seed: u64,
    ) -> Result<Execution<P>, SimError> {
        let mut start = cfg.clone();
        start.frozen.extend(frozen.iter().copied());
        let mut ex = Execution::new(start.clone());
        let sum = self.run_inner(&start, stop, seed, Sched::RoundRobin, Some(&mut ex))?;
        match sum.outcome {
            Outcome::Stopped => Ok(ex),
            Outcome::Quiescent => Err(SimError::NonTermination { steps: sum.steps, quiescent: true }),
        }
    }

    /// Like `run_fair` but keeps only the final configuration and reports
    /// quiescence instead of failing on it.
    pub fn run_fair_summary(
        &self,
        cfg: &Configuration<P>,
        stop: &dyn Fn(&Configuration<P>) -> bool,
        seed: u64,
    ) -> Result<RunSummary<P>, SimError> {
        self.run_inner(cfg, stop, seed, Sched::RoundRobin, None)
    }

    /// Uniformly random enabled actor at each step, from a seeded generator.
    pub fn run_random(
        &self,
        cfg: &Configuration<P>,
        stop: &dyn Fn(&Configuration<P>) -> bool,
        seed: u64,
    ) -> Result<RunSummary<P>, SimError> {
        self.run_inner(cfg, stop, seed, Sched::Random, None)
    }

    /// Drains the listed channels in the given order, repeating until none
    /// of them has a deliverable message.
    pub fn deliver_all(&self, cfg: &Configuration<P>, channels: &[ChannelId]) -> Result<Execution<P>, SimError> {
        let mut ex = Execution::new(cfg.clone());
        let mut cur = cfg.clone();
        let mut steps = 0u64;
        loop {
            let mut progressed = false;
            for &id in channels {
                loop {
                    if cur.channel_len(id) == 0 {
                        break;
                    }
                    match self.step_in_place(&mut cur, ActorId::Channel(id)) {
                        Ok(rec) => {
                            steps += 1;
                            if steps > self.budget {
                                return Err(SimError::NonTermination { steps, quiescent: false });
                            }
                            progressed = true;
                            ex.push(rec, cur.clone());
                        }
                        Err(SimError::NoEnabledAction(_)) | Err(SimError::ActorUnavailable(_)) => break,
                        Err(e) => return Err(e),
                    }
                }
            }
            if !progressed {
                return Ok(ex);
            }
        }
    }
}
