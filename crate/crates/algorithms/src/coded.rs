use std::collections::{BTreeMap, BTreeSet};

use regmem_coding::{decode, encode, CodeParams, ValueLayout};
use regmem_sim::{Done, Encode, MsgClass, Node, Op, Outbox, Protocol, Value};
use sha2::{Digest, Sha256};

use crate::{AlgoError, PhasePlan, PhaseSpec, QuorumSystem, RestrictedProtocol, StorageMeasure, Tag};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CodedOptions {
    /// Servers finalize a version once they hear that k servers stored it,
    /// and acknowledge the store only then. Writers skip the finalize phase.
    pub gossip: bool,
    /// Bug injection: the finalize message carries a digest of the value.
    pub hash_in_finalize: bool,
}

/// CAS-style register: query, coded store of symbol i at server i, finalize.
#[derive(Debug, Clone)]
pub struct Coded {
    pub n: usize,
    pub f: usize,
    pub nu: usize,
    pub domain: u64,
    pub code: CodeParams,
    pub layout: ValueLayout,
    pub opts: CodedOptions,
}

pub fn coded_spec(n: usize, f: usize, nu: usize, domain: u64) -> Result<Coded, AlgoError> {
    Coded::new(n, f, nu, domain, CodedOptions::default())
}

pub fn coded_gossip_spec(n: usize, f: usize, nu: usize, domain: u64) -> Result<Coded, AlgoError> {
    Coded::new(n, f, nu, domain, CodedOptions { gossip: true, hash_in_finalize: false })
}

impl Coded {
    pub fn new(n: usize, f: usize, nu: usize, domain: u64, opts: CodedOptions) -> Result<Coded, AlgoError> {
        if f >= n || nu == 0 || domain < 1 {
            return Err(AlgoError::InvalidParams(format!("need f < N, nu >= 1 and a nonempty domain, got N={n} f={f} nu={nu}")));
        }
        let m = if n <= 15 { 4 } else { 8 };
        let code = CodeParams::new(n, n - f, m).map_err(|e| AlgoError::InvalidParams(e.to_string()))?;
        let layout = ValueLayout::new(domain, n - f, m).map_err(|e| AlgoError::InvalidParams(e.to_string()))?;
        Ok(Coded { n, f, nu, domain, code, layout, opts })
    }

    pub fn k(&self) -> usize {
        self.code.k
    }

    fn quorum(&self) -> usize {
        self.n - self.f
    }

    pub fn symbol(&self, v: Value, s: usize) -> Vec<u8> {
        let cw = encode(&self.layout.to_elements(v), &self.code).expect("layout fits the code");
        cw.symbols[&s].clone()
    }

    fn decode(&self, syms: &BTreeMap<usize, Vec<u8>>) -> Value {
        let pairs: Vec<(usize, Vec<u8>)> = syms.iter().take(self.k()).map(|(i, s)| (*i, s.clone())).collect();
        let elems = decode(&pairs, &self.code, self.layout.elems).expect("k distinct symbols of one version");
        self.layout.from_elements(&elems)
    }

    /// Bits of value information in one symbol.
    pub fn symbol_bits(&self) -> u64 {
        (self.layout.elems / self.k()) as u64 * self.layout.chunk as u64
    }

    fn all(&self, msg: CodedMsg, out: &mut Outbox<CodedMsg>) {
        for s in 1..=self.n {
            out.push((Node::Server(s), msg.clone()));
        }
    }

    fn finalize_hash(&self, v: Value) -> u64 {
        let d = Sha256::digest(v.to_be_bytes());
        u64::from_be_bytes(d[..8].try_into().unwrap())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CodedServer {
    pub fin: Tag,
    pub syms: BTreeMap<Tag, Vec<u8>>,
    /// Gossip only: servers known to have stored each version.
    pub heard: BTreeMap<Tag, BTreeSet<usize>>,
    /// Gossip only: store acknowledgements deferred until finalization.
    pub waiting: BTreeMap<Tag, BTreeSet<(Node, u64)>>,
    /// Reads waiting for a symbol this server does not have yet.
    pub gets: BTreeSet<(Tag, Node, u64)>,
}

impl Encode for CodedServer {
    fn encode(&self, out: &mut Vec<u8>) {
        self.fin.encode(out);
        self.syms.encode(out);
        self.heard.encode(out);
        self.waiting.encode(out);
        self.gets.encode(out);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CPhase {
    Idle,
    Query,
    Store,
    Finalize,
    Get,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedClient {
    pub node: Node,
    pub seq: u64,
    pub phase: CPhase,
    pub value: Value,
    pub tag: Tag,
    pub acks: BTreeSet<usize>,
    pub syms: BTreeMap<usize, Vec<u8>>,
}

impl CodedClient {
    fn metadata(&self, out: &mut Vec<u8>) {
        self.node.encode(out);
        self.seq.encode(out);
        (self.phase as u8).encode(out);
        self.tag.encode(out);
        self.acks.encode(out);
        self.syms.encode(out);
    }
}

impl Encode for CodedClient {
    fn encode(&self, out: &mut Vec<u8>) {
        self.metadata(out);
        self.value.encode(out);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CodedMsg {
    Query { seq: u64 },
    QueryAck { seq: u64, fin: Tag },
    Store { seq: u64, tag: Tag, sym: Vec<u8> },
    StoreAck { seq: u64 },
    Finalize { seq: u64, tag: Tag, hash: Option<u64> },
    FinalizeAck { seq: u64 },
    Get { seq: u64, tag: Tag },
    GetAck { seq: u64, tag: Tag, sym: Option<Vec<u8>>, fin: Tag },
    Stored { tag: Tag },
}

impl Encode for CodedMsg {
    fn encode(&self, out: &mut Vec<u8>) {
        match self {
            CodedMsg::Query { seq } => (0u8, *seq).encode(out),
            CodedMsg::QueryAck { seq, fin } => (1u8, *seq, *fin).encode(out),
            CodedMsg::Store { seq, tag, sym } => {
                (2u8, *seq, *tag).encode(out);
                sym.encode(out);
            }
            CodedMsg::StoreAck { seq } => (3u8, *seq).encode(out),
            CodedMsg::Finalize { seq, tag, hash } => {
                (4u8, *seq, *tag).encode(out);
                hash.encode(out);
            }
            CodedMsg::FinalizeAck { seq } => (5u8, *seq).encode(out),
            CodedMsg::Get { seq, tag } => (6u8, *seq, *tag).encode(out),
            CodedMsg::GetAck { seq, tag, sym, fin } => {
                (7u8, *seq, *tag).encode(out);
                sym.encode(out);
                fin.encode(out);
            }
            CodedMsg::Stored { tag } => (8u8, *tag).encode(out),
        }
    }
}

impl Coded {
    /// Raises the finalized label and applies retention: the finalized
    /// version's symbol plus at most nu newer ones, oldest evicted first.
    fn advance(&self, st: &mut CodedServer, t: Tag, out: &mut Outbox<CodedMsg>) {
        if t > st.fin {
            st.fin = t;
        }
        let fin = st.fin;
        st.syms.retain(|tag, _| *tag >= fin);
        while st.syms.range((std::ops::Bound::Excluded(fin), std::ops::Bound::Unbounded)).count() > self.nu {
            let oldest = *st.syms.range((std::ops::Bound::Excluded(fin), std::ops::Bound::Unbounded)).next().unwrap().0;
            st.syms.remove(&oldest);
        }
        st.heard.retain(|tag, _| *tag >= fin);
        let done: Vec<Tag> = st.waiting.range(..=fin).map(|(t, _)| *t).collect();
        for t in done {
            for (c, seq) in st.waiting.remove(&t).unwrap() {
                out.push((c, CodedMsg::StoreAck { seq }));
            }
        }
        self.answer_gets(st, out);
    }

    fn answer_gets(&self, st: &mut CodedServer, out: &mut Outbox<CodedMsg>) {
        let gets: Vec<(Tag, Node, u64)> = st.gets.iter().copied().collect();
        for g @ (t, c, seq) in gets {
            if let Some(sym) = st.syms.get(&t) {
                out.push((c, CodedMsg::GetAck { seq, tag: t, sym: Some(sym.clone()), fin: st.fin }));
                st.gets.remove(&g);
            } else if t < st.fin {
                out.push((c, CodedMsg::GetAck { seq, tag: t, sym: None, fin: st.fin }));
                st.gets.remove(&g);
            }
        }
    }

    fn check_heard(&self, st: &mut CodedServer, t: Tag, out: &mut Outbox<CodedMsg>) {
        if st.heard.get(&t).is_some_and(|h| h.len() >= self.k()) {
            self.advance(st, t, out);
        }
    }
}

impl Protocol for Coded {
    type Server = CodedServer;
    type Client = CodedClient;
    type Msg = CodedMsg;

    fn name(&self) -> String {
        match (self.opts.gossip, self.opts.hash_in_finalize) {
            (true, _) => "coded-gossip".into(),
            (false, true) => "coded-hash".into(),
            (false, false) => "coded".into(),
        }
    }

    fn servers(&self) -> usize {
        self.n
    }

    fn init_server(&self, s: usize) -> CodedServer {
        let mut st = CodedServer::default();
        st.syms.insert(Tag::default(), self.symbol(self.initial_value(), s));
        st
    }

    fn init_client(&self, c: Node) -> CodedClient {
        CodedClient {
            node: c,
            seq: 0,
            phase: CPhase::Idle,
            value: self.initial_value(),
            tag: Tag::default(),
            acks: BTreeSet::new(),
            syms: BTreeMap::new(),
        }
    }

    fn server_receive(&self, s: usize, st: &mut CodedServer, from: Node, msg: &CodedMsg, out: &mut Outbox<CodedMsg>) {
        match msg {
            CodedMsg::Query { seq } => out.push((from, CodedMsg::QueryAck { seq: *seq, fin: st.fin })),
            CodedMsg::Store { seq, tag, sym } => {
                if *tag >= st.fin {
                    st.syms.insert(*tag, sym.clone());
                }
                if self.opts.gossip {
                    for o in (1..=self.n).filter(|&o| o != s) {
                        out.push((Node::Server(o), CodedMsg::Stored { tag: *tag }));
                    }
                    if *tag <= st.fin {
                        out.push((from, CodedMsg::StoreAck { seq: *seq }));
                    } else {
                        st.waiting.entry(*tag).or_default().insert((from, *seq));
                        st.heard.entry(*tag).or_default().insert(s);
                    }
                    self.check_heard(st, *tag, out);
                } else {
                    out.push((from, CodedMsg::StoreAck { seq: *seq }));
                }
                self.advance(st, Tag::default(), out);
            }
            CodedMsg::Stored { tag } => {
                if *tag > st.fin {
                    let Node::Server(o) = from else { return };
                    st.heard.entry(*tag).or_default().insert(o);
                    self.check_heard(st, *tag, out);
                }
            }
            CodedMsg::Finalize { seq, tag, .. } => {
                self.advance(st, *tag, out);
                out.push((from, CodedMsg::FinalizeAck { seq: *seq }));
            }
            CodedMsg::Get { seq, tag } => {
                self.advance(st, *tag, out);
                st.gets.insert((*tag, from, *seq));
                self.answer_gets(st, out);
            }
            _ => {}
        }
    }

    fn client_invoke(&self, _c: Node, st: &mut CodedClient, op: Op, out: &mut Outbox<CodedMsg>) {
        st.seq += 1;
        st.phase = CPhase::Query;
        st.acks.clear();
        st.syms.clear();
        st.tag = Tag::default();
        match (st.node, op) {
            (Node::Writer(_), Op::Write(v)) => st.value = v,
            (Node::Reader(_), Op::Read) => st.value = self.initial_value(),
            (c, op) => panic!("operation {op:?} not supported by client {c}"),
        }
        self.all(CodedMsg::Query { seq: st.seq }, out);
    }

    fn client_receive(&self, _c: Node, st: &mut CodedClient, from: Node, msg: &CodedMsg, out: &mut Outbox<CodedMsg>) -> Option<Done> {
        let Node::Server(s) = from else { return None };
        let writer = matches!(st.node, Node::Writer(_));
        match msg {
            CodedMsg::QueryAck { seq, fin } if *seq == st.seq && st.phase == CPhase::Query => {
                st.acks.insert(s);
                st.tag = st.tag.max(*fin);
                if st.acks.len() >= self.quorum() {
                    st.seq += 1;
                    st.acks.clear();
                    if writer {
                        let Node::Writer(id) = st.node else { unreachable!() };
                        st.tag = st.tag.next_for(id);
                        st.phase = CPhase::Store;
                        let cw = encode(&self.layout.to_elements(st.value), &self.code).expect("layout fits the code");
                        for (i, sym) in cw.symbols {
                            out.push((Node::Server(i), CodedMsg::Store { seq: st.seq, tag: st.tag, sym }));
                        }
                    } else {
                        st.phase = CPhase::Get;
                        self.all(CodedMsg::Get { seq: st.seq, tag: st.tag }, out);
                    }
                }
                None
            }
            CodedMsg::StoreAck { seq } if *seq == st.seq && st.phase == CPhase::Store => {
                st.acks.insert(s);
                if st.acks.len() < self.quorum() {
                    return None;
                }
                st.acks.clear();
                if self.opts.gossip {
                    st.phase = CPhase::Idle;
                    return Some(Done::Write);
                }
                st.seq += 1;
                st.phase = CPhase::Finalize;
                let hash = self.opts.hash_in_finalize.then(|| self.finalize_hash(st.value));
                self.all(CodedMsg::Finalize { seq: st.seq, tag: st.tag, hash }, out);
                None
            }
            CodedMsg::FinalizeAck { seq } if *seq == st.seq && st.phase == CPhase::Finalize => {
                st.acks.insert(s);
                if st.acks.len() >= self.quorum() {
                    st.acks.clear();
                    st.phase = CPhase::Idle;
                    return Some(Done::Write);
                }
                None
            }
            CodedMsg::GetAck { seq, tag, sym, fin } if *seq == st.seq && st.phase == CPhase::Get && *tag == st.tag => {
                match sym {
                    Some(sym) => {
                        st.syms.insert(s, sym.clone());
                        if st.syms.len() >= self.k() {
                            st.value = self.decode(&st.syms);
                            st.syms.clear();
                            st.phase = CPhase::Idle;
                            return Some(Done::Read(st.value));
                        }
                    }
                    None if *fin > st.tag => {
                        // the version was superseded before enough symbols arrived
                        st.seq += 1;
                        st.tag = *fin;
                        st.syms.clear();
                        self.all(CodedMsg::Get { seq: st.seq, tag: st.tag }, out);
                    }
                    None => {}
                }
                None
            }
            _ => None,
        }
    }

    fn classify(&self, msg: &CodedMsg) -> MsgClass {
        match msg {
            CodedMsg::Store { .. } => MsgClass::ValueDependent,
            CodedMsg::Finalize { hash: Some(_), .. } => MsgClass::ValueDependent,
            _ => MsgClass::ValueIndependent,
        }
    }

    fn msg_label(&self, msg: &CodedMsg) -> &'static str {
        match msg {
            CodedMsg::Query { .. } => "query",
            CodedMsg::QueryAck { .. } => "query-ack",
            CodedMsg::Store { .. } => "store",
            CodedMsg::StoreAck { .. } => "store-ack",
            CodedMsg::Finalize { .. } => "finalize",
            CodedMsg::FinalizeAck { .. } => "finalize-ack",
            CodedMsg::Get { .. } => "get",
            CodedMsg::GetAck { .. } => "get-ack",
            CodedMsg::Stored { .. } => "stored",
        }
    }
}

impl RestrictedProtocol for Coded {
    fn phase_plan(&self) -> PhasePlan {
        let all: BTreeSet<usize> = (1..=self.n).collect();
        let q = QuorumSystem::Threshold { of: all.clone(), size: self.quorum() };
        let mut phases = vec![
            PhaseSpec { name: "query", destinations: all.clone(), quorums: q.clone(), value_dependent: false },
            PhaseSpec { name: "store", destinations: all.clone(), quorums: q.clone(), value_dependent: true },
        ];
        if !self.opts.gossip {
            phases.push(PhaseSpec { name: "finalize", destinations: all, quorums: q, value_dependent: self.opts.hash_in_finalize });
        }
        PhasePlan { phases }
    }

    fn writer_phase(&self, st: &CodedClient) -> Option<usize> {
        match st.phase {
            CPhase::Query => Some(0),
            CPhase::Store => Some(1),
            CPhase::Finalize => Some(2),
            CPhase::Idle | CPhase::Get => None,
        }
    }

    fn writer_metadata(&self, st: &CodedClient) -> Vec<u8> {
        let mut out = Vec::new();
        st.metadata(&mut out);
        out
    }

    fn writer_value(&self, st: &CodedClient) -> Option<Value> {
        Some(st.value)
    }
}

impl StorageMeasure for Coded {
    fn stored_value_bits(&self, st: &CodedServer) -> u64 {
        st.syms.len() as u64 * self.symbol_bits()
    }
}
