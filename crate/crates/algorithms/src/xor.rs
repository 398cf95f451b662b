use std::collections::BTreeSet;

use regmem_coding::Gf;
use regmem_sim::{Done, Encode, MsgClass, Node, Op, Outbox, Protocol, Value};

use crate::StorageMeasure;

/// Two servers that each keep the field sum of every value delivered to
/// them. Reads return server 1's sum, so this is not a register.
#[derive(Debug, Clone)]
pub struct XorDemo {
    pub m: u8,
}

pub fn xor_demo_spec() -> XorDemo {
    XorDemo { m: 4 }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum XorMsg {
    Add { seq: u64, v: u8 },
    AddAck { seq: u64 },
    Query { seq: u64 },
    QueryAck { seq: u64, acc: u8 },
}

impl Encode for XorMsg {
    fn encode(&self, out: &mut Vec<u8>) {
        match self {
            XorMsg::Add { seq, v } => (0u8, *seq, *v).encode(out),
            XorMsg::AddAck { seq } => (1u8, *seq).encode(out),
            XorMsg::Query { seq } => (2u8, *seq).encode(out),
            XorMsg::QueryAck { seq, acc } => (3u8, *seq, *acc).encode(out),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XorClient {
    pub seq: u64,
    pub busy: bool,
    pub acks: BTreeSet<usize>,
}

impl Encode for XorClient {
    fn encode(&self, out: &mut Vec<u8>) {
        (self.seq, self.busy, self.acks.clone()).encode(out);
    }
}

/// A server's accumulator is one field element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct XorServer(pub u8);

impl Encode for XorServer {
    fn encode(&self, out: &mut Vec<u8>) {
        self.0.encode(out)
    }
}

impl XorDemo {
    fn gf(&self) -> &'static Gf {
        Gf::get(self.m).expect("supported field")
    }
}

impl Protocol for XorDemo {
    type Server = XorServer;
    type Client = XorClient;
    type Msg = XorMsg;

    fn name(&self) -> String {
        "xor-demo".into()
    }

    fn servers(&self) -> usize {
        2
    }

    fn init_server(&self, _s: usize) -> XorServer {
        XorServer(0)
    }

    fn init_client(&self, _c: Node) -> XorClient {
        XorClient { seq: 0, busy: false, acks: BTreeSet::new() }
    }

    fn server_receive(&self, _s: usize, st: &mut XorServer, from: Node, msg: &XorMsg, out: &mut Outbox<XorMsg>) {
        match *msg {
            XorMsg::Add { seq, v } => {
                st.0 = self.gf().add(st.0, v);
                out.push((from, XorMsg::AddAck { seq }));
            }
            XorMsg::Query { seq } => out.push((from, XorMsg::QueryAck { seq, acc: st.0 })),
            _ => {}
        }
    }

    fn client_invoke(&self, _c: Node, st: &mut XorClient, op: Op, out: &mut Outbox<XorMsg>) {
        st.seq += 1;
        st.busy = true;
        st.acks.clear();
        for s in 1..=2 {
            let msg = match op {
                Op::Write(v) => XorMsg::Add { seq: st.seq, v: (v % self.gf().size() as u64) as u8 },
                Op::Read => XorMsg::Query { seq: st.seq },
            };
            out.push((Node::Server(s), msg));
        }
    }

    fn client_receive(&self, _c: Node, st: &mut XorClient, from: Node, msg: &XorMsg, _out: &mut Outbox<XorMsg>) -> Option<Done> {
        let Node::Server(s) = from else { return None };
        match *msg {
            XorMsg::AddAck { seq } if seq == st.seq && st.busy => {
                st.acks.insert(s);
                if st.acks.len() == 2 {
                    st.busy = false;
                    return Some(Done::Write);
                }
                None
            }
            XorMsg::QueryAck { seq, acc } if seq == st.seq && st.busy && s == 1 => {
                st.busy = false;
                Some(Done::Read(acc as Value))
            }
            _ => None,
        }
    }

    fn classify(&self, msg: &XorMsg) -> MsgClass {
        match msg {
            XorMsg::Add { .. } => MsgClass::ValueDependent,
            _ => MsgClass::ValueIndependent,
        }
    }

    fn msg_label(&self, msg: &XorMsg) -> &'static str {
        match msg {
            XorMsg::Add { .. } => "add",
            XorMsg::AddAck { .. } => "add-ack",
            XorMsg::Query { .. } => "query",
            XorMsg::QueryAck { .. } => "query-ack",
        }
    }
}

impl StorageMeasure for XorDemo {
    fn stored_value_bits(&self, _st: &XorServer) -> u64 {
        self.m as u64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppendixA {
    pub values: [u8; 3],
    /// Server contents after v1, v2, v3 are delivered to both.
    pub joint: [u8; 2],
    /// Server contents after server 1 receives v2 a second time.
    pub after: [u8; 2],
    pub recovered: u8,
    pub bits_before: [usize; 2],
    pub bits_after: [usize; 2],
    pub transcript: Vec<String>,
}

/// Both servers accumulate v1 + v2 + v3; then server 1 cancels v2. The
/// difference of the two servers is v2 although neither server's size
/// changed.
pub fn appendix_a(v1: u8, v2: u8, v3: u8) -> AppendixA {
    let demo = xor_demo_spec();
    let gf = demo.gf();
    let writer = Node::Writer(0);
    let mut servers = [demo.init_server(1), demo.init_server(2)];
    let mut transcript = Vec::new();
    let mut sink = Vec::new();
    for (i, v) in [v1, v2, v3].into_iter().enumerate() {
        for (s, st) in servers.iter_mut().enumerate() {
            demo.server_receive(s + 1, st, writer, &XorMsg::Add { seq: i as u64 + 1, v }, &mut sink);
        }
        transcript.push(format!("deliver v{}={:#x} to both servers: s1={:#x} s2={:#x}", i + 1, v, servers[0].0, servers[1].0));
    }
    let joint = [servers[0].0, servers[1].0];
    let bits = |s: &XorServer| demo.stored_value_bits(s) as usize;
    let bits_before = [bits(&servers[0]), bits(&servers[1])];
    demo.server_receive(1, &mut servers[0], writer, &XorMsg::Add { seq: 4, v: v2 }, &mut sink);
    transcript.push(format!("server 1 cancels v2: s1={:#x} s2={:#x}", servers[0].0, servers[1].0));
    let after = [servers[0].0, servers[1].0];
    let bits_after = [bits(&servers[0]), bits(&servers[1])];
    let recovered = gf.add(after[1], after[0]);
    transcript.push(format!("s2 - s1 = {recovered:#x}"));
    AppendixA { values: [v1, v2, v3], joint, after, recovered, bits_before, bits_after, transcript }
}
