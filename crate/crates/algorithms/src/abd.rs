use std::collections::BTreeSet;

use regmem_sim::{Done, Encode, MsgClass, Node, Op, Outbox, Protocol, Value};

use crate::{AlgoError, PhasePlan, PhaseSpec, QuorumSystem, RestrictedProtocol, StorageMeasure, Tag};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AbdOptions {
    /// Bug injection: once a server holds a written value it keeps it and
    /// only advances the tag.
    pub ignore_second_value: bool,
}

/// Multi-writer ABD with quorums of size N - f.
#[derive(Debug, Clone)]
pub struct Abd {
    pub n: usize,
    pub f: usize,
    pub domain: u64,
    pub opts: AbdOptions,
}

pub fn abd_spec(n: usize, f: usize, domain: u64) -> Result<Abd, AlgoError> {
    if n <= 2 * f {
        return Err(AlgoError::InvalidParams(format!("ABD needs N > 2f, got N={n} f={f}")));
    }
    abd_spec_unchecked(n, f, domain, AbdOptions::default())
}

/// Quorums of size N - f even when they need not intersect. Only meaningful
/// in runs where the same N - f servers stay live throughout.
pub fn abd_spec_unchecked(n: usize, f: usize, domain: u64, opts: AbdOptions) -> Result<Abd, AlgoError> {
    if f >= n || domain < 1 {
        return Err(AlgoError::InvalidParams(format!("need 0 <= f < N and a nonempty domain, got N={n} f={f}")));
    }
    Ok(Abd { n, f, domain, opts })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbdServer {
    pub tag: Tag,
    pub value: Value,
}

impl Encode for AbdServer {
    fn encode(&self, out: &mut Vec<u8>) {
        self.tag.encode(out);
        self.value.encode(out);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WPhase {
    Idle,
    Query,
    Store,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbdWriter {
    pub id: usize,
    pub seq: u64,
    pub phase: WPhase,
    pub value: Value,
    pub tag: Tag,
    pub acks: BTreeSet<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RPhase {
    Idle,
    Query,
    WriteBack,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbdReader {
    pub seq: u64,
    pub phase: RPhase,
    pub best: (Tag, Value),
    pub acks: BTreeSet<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AbdClient {
    Writer(AbdWriter),
    Reader(AbdReader),
}

impl AbdWriter {
    fn metadata(&self, out: &mut Vec<u8>) {
        self.id.encode(out);
        self.seq.encode(out);
        (self.phase as u8).encode(out);
        self.tag.encode(out);
        self.acks.encode(out);
    }
}

impl Encode for AbdClient {
    fn encode(&self, out: &mut Vec<u8>) {
        match self {
            AbdClient::Writer(w) => {
                out.push(0);
                w.metadata(out);
                w.value.encode(out);
            }
            AbdClient::Reader(r) => {
                out.push(1);
                r.seq.encode(out);
                (r.phase as u8).encode(out);
                r.best.encode(out);
                r.acks.encode(out);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AbdMsg {
    WQuery { seq: u64 },
    WQueryAck { seq: u64, tag: Tag },
    Store { seq: u64, tag: Tag, value: Value },
    StoreAck { seq: u64 },
    RQuery { seq: u64 },
    RQueryAck { seq: u64, tag: Tag, value: Value },
}

impl Encode for AbdMsg {
    fn encode(&self, out: &mut Vec<u8>) {
        match self {
            AbdMsg::WQuery { seq } => (0u8, *seq).encode(out),
            AbdMsg::WQueryAck { seq, tag } => (1u8, *seq, *tag).encode(out),
            AbdMsg::Store { seq, tag, value } => {
                (2u8, *seq, *tag).encode(out);
                value.encode(out);
            }
            AbdMsg::StoreAck { seq } => (3u8, *seq).encode(out),
            AbdMsg::RQuery { seq } => (4u8, *seq).encode(out),
            AbdMsg::RQueryAck { seq, tag, value } => {
                (5u8, *seq, *tag).encode(out);
                value.encode(out);
            }
        }
    }
}

impl Abd {
    pub fn quorum(&self) -> usize {
        self.n - self.f
    }

    fn all(&self, msg: AbdMsg, out: &mut Outbox<AbdMsg>) {
        for s in 1..=self.n {
            out.push((Node::Server(s), msg.clone()));
        }
    }

    pub fn value_bits(&self) -> u64 {
        (64 - self.domain.saturating_sub(1).leading_zeros()).max(1) as u64
    }
}

impl Protocol for Abd {
    type Server = AbdServer;
    type Client = AbdClient;
    type Msg = AbdMsg;

    fn name(&self) -> String {
        if self.opts.ignore_second_value {
            "abd-mutant".into()
        } else {
            "abd".into()
        }
    }

    fn servers(&self) -> usize {
        self.n
    }

    fn init_server(&self, _s: usize) -> AbdServer {
        AbdServer { tag: Tag::default(), value: self.initial_value() }
    }

    fn init_client(&self, c: Node) -> AbdClient {
        match c {
            Node::Writer(id) => AbdClient::Writer(AbdWriter {
                id,
                seq: 0,
                phase: WPhase::Idle,
                value: self.initial_value(),
                tag: Tag::default(),
                acks: BTreeSet::new(),
            }),
            _ => AbdClient::Reader(AbdReader {
                seq: 0,
                phase: RPhase::Idle,
                best: (Tag::default(), self.initial_value()),
                acks: BTreeSet::new(),
            }),
        }
    }

    fn server_receive(&self, _s: usize, st: &mut AbdServer, from: Node, msg: &AbdMsg, out: &mut Outbox<AbdMsg>) {
        match *msg {
            AbdMsg::WQuery { seq } => out.push((from, AbdMsg::WQueryAck { seq, tag: st.tag })),
            AbdMsg::RQuery { seq } => out.push((from, AbdMsg::RQueryAck { seq, tag: st.tag, value: st.value })),
            AbdMsg::Store { seq, tag, value } => {
                if tag > st.tag {
                    if !(self.opts.ignore_second_value && st.tag != Tag::default()) {
                        st.value = value;
                    }
                    st.tag = tag;
                }
                out.push((from, AbdMsg::StoreAck { seq }));
            }
            _ => {}
        }
    }

    fn client_invoke(&self, _c: Node, st: &mut AbdClient, op: Op, out: &mut Outbox<AbdMsg>) {
        match (st, op) {
            (AbdClient::Writer(w), Op::Write(v)) => {
                w.seq += 1;
                w.value = v;
                w.phase = WPhase::Query;
                w.tag = Tag::default();
                w.acks.clear();
                self.all(AbdMsg::WQuery { seq: w.seq }, out);
            }
            (AbdClient::Reader(r), Op::Read) => {
                r.seq += 1;
                r.phase = RPhase::Query;
                r.best = (Tag::default(), self.initial_value());
                r.acks.clear();
                self.all(AbdMsg::RQuery { seq: r.seq }, out);
            }
            (c, op) => panic!("operation {op:?} not supported by client {c:?}"),
        }
    }

    fn client_receive(&self, _c: Node, st: &mut AbdClient, from: Node, msg: &AbdMsg, out: &mut Outbox<AbdMsg>) -> Option<Done> {
        let Node::Server(s) = from else { return None };
        match st {
            AbdClient::Writer(w) => match *msg {
                AbdMsg::WQueryAck { seq, tag } if seq == w.seq && w.phase == WPhase::Query => {
                    w.acks.insert(s);
                    w.tag = w.tag.max(tag);
                    if w.acks.len() >= self.quorum() {
                        w.tag = w.tag.next_for(w.id);
                        w.seq += 1;
                        w.phase = WPhase::Store;
                        w.acks.clear();
                        self.all(AbdMsg::Store { seq: w.seq, tag: w.tag, value: w.value }, out);
                    }
                    None
                }
                AbdMsg::StoreAck { seq } if seq == w.seq && w.phase == WPhase::Store => {
                    w.acks.insert(s);
                    if w.acks.len() >= self.quorum() {
                        w.phase = WPhase::Idle;
                        w.acks.clear();
                        return Some(Done::Write);
                    }
                    None
                }
                _ => None,
            },
            AbdClient::Reader(r) => match *msg {
                AbdMsg::RQueryAck { seq, tag, value } if seq == r.seq && r.phase == RPhase::Query => {
                    r.acks.insert(s);
                    if tag > r.best.0 {
                        r.best = (tag, value);
                    }
                    if r.acks.len() >= self.quorum() {
                        r.seq += 1;
                        r.phase = RPhase::WriteBack;
                        r.acks.clear();
                        self.all(AbdMsg::Store { seq: r.seq, tag: r.best.0, value: r.best.1 }, out);
                    }
                    None
                }
                AbdMsg::StoreAck { seq } if seq == r.seq && r.phase == RPhase::WriteBack => {
                    r.acks.insert(s);
                    if r.acks.len() >= self.quorum() {
                        r.phase = RPhase::Idle;
                        r.acks.clear();
                        return Some(Done::Read(r.best.1));
                    }
                    None
                }
                _ => None,
            },
        }
    }

    fn classify(&self, msg: &AbdMsg) -> MsgClass {
        match msg {
            AbdMsg::Store { .. } => MsgClass::ValueDependent,
            _ => MsgClass::ValueIndependent,
        }
    }

    fn msg_label(&self, msg: &AbdMsg) -> &'static str {
        match msg {
            AbdMsg::WQuery { .. } => "query",
            AbdMsg::WQueryAck { .. } => "query-ack",
            AbdMsg::Store { .. } => "store",
            AbdMsg::StoreAck { .. } => "store-ack",
            AbdMsg::RQuery { .. } => "read-query",
            AbdMsg::RQueryAck { .. } => "read-query-ack",
        }
    }
}

impl RestrictedProtocol for Abd {
    fn phase_plan(&self) -> PhasePlan {
        let all: BTreeSet<usize> = (1..=self.n).collect();
        let q = QuorumSystem::Threshold { of: all.clone(), size: self.quorum() };
        PhasePlan {
            phases: vec![
                PhaseSpec { name: "query", destinations: all.clone(), quorums: q.clone(), value_dependent: false },
                PhaseSpec { name: "store", destinations: all, quorums: q, value_dependent: true },
            ],
        }
    }

    fn writer_phase(&self, st: &AbdClient) -> Option<usize> {
        match st {
            AbdClient::Writer(w) => match w.phase {
                WPhase::Idle => None,
                WPhase::Query => Some(0),
                WPhase::Store => Some(1),
            },
            AbdClient::Reader(_) => None,
        }
    }

    fn writer_metadata(&self, st: &AbdClient) -> Vec<u8> {
        let mut out = Vec::new();
        if let AbdClient::Writer(w) = st {
            w.metadata(&mut out);
        }
        out
    }

    fn writer_value(&self, st: &AbdClient) -> Option<Value> {
        match st {
            AbdClient::Writer(w) => Some(w.value),
            AbdClient::Reader(_) => None,
        }
    }
}

impl StorageMeasure for Abd {
    fn stored_value_bits(&self, _st: &AbdServer) -> u64 {
        self.value_bits()
    }
}
