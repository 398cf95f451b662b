//! Engine behaviour with a small counting protocol: servers count the
//! deliveries they receive and echo each one; a write completes after
//! `need` echoes.

use std::collections::{BTreeSet, VecDeque};

use proptest::prelude::*;
use regmem_sim::*;

#[derive(Debug, Clone)]
struct Echo {
    n: usize,
    need: usize,
    gossip: bool,
}

#[derive(Debug, Clone, PartialEq)]
struct Count(u64, Vec<u64>);
impl Encode for Count {
    fn encode(&self, out: &mut Vec<u8>) {
        self.0.encode(out);
        self.1.encode(out);
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Cl(u64, u64);
impl Encode for Cl {
    fn encode(&self, out: &mut Vec<u8>) {
        (self.0, self.1).encode(out);
    }
}

#[derive(Debug, Clone, PartialEq)]
enum M {
    Put(u64),
    Ack,
    Gossip(u64),
}
impl Encode for M {
    fn encode(&self, out: &mut Vec<u8>) {
        match self {
            M::Put(v) => (0u8, *v).encode(out),
            M::Ack => out.push(1),
            M::Gossip(v) => (2u8, *v).encode(out),
        }
    }
}

impl Protocol for Echo {
    type Server = Count;
    type Client = Cl;
    type Msg = M;
    fn name(&self) -> String {
        "echo".into()
    }
    fn servers(&self) -> usize {
        self.n
    }
    fn init_server(&self, _s: usize) -> Count {
        Count(0, vec![])
    }
    fn init_client(&self, _c: Node) -> Cl {
        Cl(0, 0)
    }
    fn server_receive(&self, s: usize, st: &mut Count, from: Node, msg: &M, out: &mut Outbox<M>) {
        st.0 += 1;
        match msg {
            M::Put(v) => {
                st.1.push(*v);
                out.push((from, M::Ack));
                if self.gossip {
                    for o in (1..=self.n).filter(|&o| o != s) {
                        out.push((Node::Server(o), M::Gossip(*v)));
                    }
                }
            }
            M::Gossip(v) => st.1.push(*v),
            M::Ack => {}
        }
    }
    fn client_invoke(&self, _c: Node, st: &mut Cl, op: Op, out: &mut Outbox<M>) {
        st.1 = 0;
        let v = match op {
            Op::Write(v) => v,
            Op::Read => 0,
        };
        st.0 = v;
        for s in 1..=self.n {
            out.push((Node::Server(s), M::Put(v)));
        }
    }
    fn client_receive(&self, c: Node, st: &mut Cl, _from: Node, _msg: &M, _out: &mut Outbox<M>) -> Option<Done> {
        st.1 += 1;
        if st.1 == self.need as u64 {
            return Some(match c {
                Node::Reader(_) => Done::Read(st.0),
                _ => Done::Write,
            });
        }
        None
    }
    fn classify(&self, msg: &M) -> MsgClass {
        match msg {
            M::Put(_) => MsgClass::ValueDependent,
            _ => MsgClass::ValueIndependent,
        }
    }
    fn msg_label(&self, msg: &M) -> &'static str {
        match msg {
            M::Put(_) => "put",
            M::Ack => "ack",
            M::Gossip(_) => "gossip",
        }
    }
}

const W: Node = Node::Writer(0);

fn echo(n: usize) -> Sim<Echo> {
    Sim::new(Echo { n, need: n, gossip: false })
}

fn ch(a: Node, b: Node) -> ActorId {
    ActorId::Channel(ChannelId::new(a, b))
}

#[test]
fn empty_channel_has_nothing_to_deliver() {
    let sim = echo(2);
    let cfg = sim.initial(1, 0);
    assert!(matches!(sim.step(&cfg, ch(W, Node::Server(1))), Err(SimError::NoEnabledAction(_))));
    assert!(matches!(sim.step(&cfg, ActorId::Node(W)), Err(SimError::NoEnabledAction(_))));
}

#[test]
fn delivery_consumes_one_message_and_changes_receiver() {
    let sim = echo(2);
    let mut cfg = sim.initial(1, 0);
    cfg.schedule(W, Op::Write(4));
    let (cfg, _) = sim.step(&cfg, ActorId::Node(W)).unwrap();
    let id = ChannelId::new(W, Node::Server(1));
    assert_eq!(cfg.channel_len(id), 1);
    let (next, rec) = sim.step(&cfg, ActorId::Channel(id)).unwrap();
    assert_eq!(next.channel_len(id), 0);
    assert_eq!(next.server(1), &Count(1, vec![4]));
    assert_eq!(changed_servers(&cfg, &next), vec![1]);
    assert_eq!(rec.label, "deliver put");
    assert_eq!(next.step_count, cfg.step_count + 1);
}

#[test]
fn two_deliveries_change_exactly_two_servers() {
    let sim = echo(3);
    let mut cfg = sim.initial(1, 0);
    cfg.schedule(W, Op::Write(1));
    let (c1, _) = sim.step(&cfg, ActorId::Node(W)).unwrap();
    let (c2, _) = sim.step(&c1, ch(W, Node::Server(1))).unwrap();
    let (c3, _) = sim.step(&c2, ch(W, Node::Server(3))).unwrap();
    assert_eq!(changed_servers(&c1, &c3), vec![1, 3]);
}

#[test]
fn failed_server_is_unavailable_and_drops_messages() {
    let sim = echo(3);
    let cfg = sim.initial(1, 0);
    let cfg = sim.fail_servers(&cfg, &BTreeSet::from([1])).unwrap();
    assert!(matches!(sim.step(&cfg, ActorId::Node(Node::Server(1))), Err(SimError::ActorUnavailable(_))));
    let mut cfg = cfg;
    cfg.schedule(W, Op::Write(1));
    let (cfg, rec) = sim.step(&cfg, ActorId::Node(W)).unwrap();
    assert_eq!(rec.sent.iter().filter(|s| s.dropped).count(), 1);
    assert_eq!(cfg.drops.len(), 1);
    assert!(cfg.drop_log_csv().starts_with("step,channel,digest\n1,w0->s1,"));
    assert!(matches!(sim.step(&cfg, ch(W, Node::Server(1))), Err(SimError::ActorUnavailable(_))));
}

#[test]
fn failing_nobody_changes_nothing() {
    let sim = echo(3);
    let cfg = sim.initial(1, 0);
    let after = sim.fail_servers(&cfg, &BTreeSet::new()).unwrap();
    assert_eq!(after.state_bytes(), cfg.state_bytes());
    assert!(after.failed.is_empty());
}

#[test]
fn failing_the_last_f_servers() {
    let sim = echo(5);
    let cfg = sim.initial(1, 0);
    let cfg = sim.fail_servers(&cfg, &(4..=5).collect()).unwrap();
    assert_eq!(cfg.failed, BTreeSet::from([4, 5]));
    assert!(sim.fail_servers(&cfg, &BTreeSet::from([6])).is_err());
}

#[test]
fn run_fair_completes_a_write() {
    let sim = echo(3);
    let mut cfg = sim.initial(1, 0);
    cfg.schedule(W, Op::Write(9));
    let ex = sim.run_fair(&cfg, &BTreeSet::new(), &|c| c.completed(W) == 1, 0).unwrap();
    assert_eq!(ex.last().completed(W), 1);
    let last = ex.steps.last().unwrap();
    assert_eq!(last.label, "deliver ack");
    assert!(matches!(last.actor, ActorId::Channel(c) if c.dst == W));
}

#[test]
fn frozen_servers_block_termination() {
    let sim = echo(3).with_budget(1000);
    let mut cfg = sim.initial(1, 0);
    cfg.schedule(W, Op::Write(9));
    let frozen: BTreeSet<ActorId> = (1..=3).map(|s| ActorId::Node(Node::Server(s))).collect();
    let err = sim.run_fair(&cfg, &frozen, &|c| c.completed(W) == 1, 0).unwrap_err();
    assert!(matches!(err, SimError::NonTermination { quiescent: true, .. }));
}

#[test]
fn budget_exhaustion_is_an_error() {
    let sim = echo(3).with_budget(3);
    let mut cfg = sim.initial(1, 0);
    cfg.schedule(W, Op::Write(9));
    let err = sim.run_fair(&cfg, &BTreeSet::new(), &|c| c.completed(W) == 1, 0).unwrap_err();
    assert_eq!(err, SimError::NonTermination { steps: 3, quiescent: false });
}

#[test]
fn runs_are_deterministic() {
    let sim = Sim::new(Echo { n: 4, need: 3, gossip: true });
    let mut cfg = sim.initial(2, 0);
    cfg.schedule(W, Op::Write(1));
    cfg.schedule(Node::Writer(1), Op::Write(2));
    let stop = |c: &Configuration<Echo>| c.completed(W) == 1 && c.completed(Node::Writer(1)) == 1;
    for seed in 0..5 {
        let a = sim.run_fair(&cfg, &BTreeSet::new(), &stop, seed).unwrap();
        let b = sim.run_fair(&cfg, &BTreeSet::new(), &stop, seed).unwrap();
        assert_eq!(a.to_jsonl(), b.to_jsonl());
        assert_eq!(a.steps, b.steps);
        let r1 = sim.run_random(&cfg, &stop, seed).unwrap();
        let r2 = sim.run_random(&cfg, &stop, seed).unwrap();
        assert_eq!(r1.trace_digest, r2.trace_digest);
    }
}

#[test]
fn deliver_all_drains_in_fifo_order() {
    let sim = Sim::new(Echo { n: 3, need: 3, gossip: true });
    let mut cfg = sim.initial(3, 0);
    for w in 0..3 {
        cfg.schedule(Node::Writer(w), Op::Write(10 + w as u64));
        cfg = sim.step(&cfg, ActorId::Node(Node::Writer(w))).unwrap().0;
    }
    let into_s1: Vec<ChannelId> = (0..3).map(|w| ChannelId::new(Node::Writer(w), Node::Server(1))).collect();
    let ex = sim.deliver_all(&cfg, &into_s1).unwrap();
    assert_eq!(ex.len(), 3);
    assert_eq!(ex.last().server(1), &Count(3, vec![10, 11, 12]));
    let ex = sim.deliver_all(ex.last(), &sim.server_channels(ex.last())).unwrap();
    assert!(ex.last().server_to_server_empty());
    assert!(sim.deliver_all(ex.last(), &[]).unwrap().is_empty());
}

#[test]
fn held_value_dependent_messages_stay_queued() {
    let sim = echo(2);
    let mut cfg = sim.initial(1, 0);
    cfg.schedule(W, Op::Write(3));
    cfg.held.insert(W);
    // the invocation itself would send value-dependent messages
    assert!(matches!(sim.step(&cfg, ActorId::Node(W)), Err(SimError::NoEnabledAction(_))));
    cfg.held.clear();
    let (mut cfg, _) = sim.step(&cfg, ActorId::Node(W)).unwrap();
    cfg.held.insert(W);
    assert!(matches!(sim.step(&cfg, ch(W, Node::Server(1))), Err(SimError::NoEnabledAction(_))));
    assert!(cfg.has_vd_from(W));
}

#[test]
fn fingerprint_refuses_failed_servers() {
    let sim = echo(3);
    let cfg = sim.fail_servers(&sim.initial(1, 0), &BTreeSet::from([3])).unwrap();
    assert_eq!(cfg.snapshot_fingerprint(&[1, 2]).unwrap(), cfg.snapshot_fingerprint(&[1, 2]).unwrap());
    assert_eq!(cfg.snapshot_fingerprint(&[3]), Err(SimError::FailedServerInFingerprint(3)));
}

#[test]
fn trace_export_has_one_line_per_step() {
    let sim = echo(2);
    let mut cfg = sim.initial(1, 0);
    cfg.schedule(W, Op::Write(1));
    let ex = sim.run_fair(&cfg, &BTreeSet::new(), &|c| c.completed(W) == 1, 0).unwrap();
    let text = ex.to_jsonl();
    assert_eq!(text.lines().count(), ex.len());
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["actor"], "w0");
    assert_eq!(first["states"].as_array().unwrap().len(), 2);
}

fn conserved(cfg: &Configuration<Echo>) -> bool {
    cfg.stats.iter().all(|(id, s)| s.sent - s.delivered - s.dropped == cfg.channel_len(*id) as u64)
}

proptest! {
    #[test]
    fn conservation_and_locality(seed in any::<u64>(), n in 2usize..5, fail in 0usize..2, writers in 1usize..3, gossip in any::<bool>()) {
        let sim = Sim::new(Echo { n, need: n - fail, gossip }).with_budget(5_000);
        let mut cfg = sim.initial(writers, 0);
        cfg = sim.fail_servers(&cfg, &(n - fail + 1..=n).collect()).unwrap();
        for w in 0..writers {
            cfg.schedule(Node::Writer(w), Op::Write(w as u64 + 1));
            cfg.schedule(Node::Writer(w), Op::Write(w as u64 + 5));
        }
        let stop = |c: &Configuration<Echo>| c.all_idle() && c.channels.values().all(VecDeque::is_empty);
        let ex = sim.run_fair(&cfg, &BTreeSet::new(), &stop, seed).unwrap();
        for (i, (rec, pt)) in ex.steps.iter().zip(&ex.points[1..]).enumerate() {
            prop_assert!(conserved(pt));
            let prev = &ex.points[i];
            let changed = changed_servers(prev, pt);
            prop_assert!(changed.len() <= 1);
            let client_acted = match rec.actor {
                ActorId::Node(n) => n.is_client(),
                ActorId::Channel(c) => c.dst.is_client(),
            };
            if client_acted {
                prop_assert!(changed.is_empty());
            }
            prop_assert!(pt.step_count > prev.step_count);
        }
    }

    #[test]
    fn every_enabled_actor_acts_within_a_rotation(seed in any::<u64>()) {
        let sim = Sim::new(Echo { n: 3, need: 3, gossip: true });
        let mut cfg = sim.initial(2, 0);
        for w in 0..2 {
            cfg.schedule(Node::Writer(w), Op::Write(w as u64 + 1));
        }
        let stop = |c: &Configuration<Echo>| c.all_idle() && c.channels.values().all(VecDeque::is_empty);
        let ex = sim.run_fair(&cfg, &BTreeSet::new(), &stop, seed).unwrap();
        let window = sim.actors(&cfg).len();
        // a message enqueued at step i is delivered by step i + window * (queue position)
        for (i, pt) in ex.points.iter().enumerate() {
            for (id, q) in &pt.channels {
                if let Some(front) = q.front() {
                    let gone = ex.points[i..].iter().take(window + 1).any(|p| p.channel(*id).all(|e| e.id != front.id));
                    prop_assert!(gone || i + window >= ex.points.len());
                }
            }
        }
    }
}
