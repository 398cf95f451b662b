use std::collections::BTreeSet;

use regmem_algorithms::*;
use regmem_consistency::check_atomic;
use regmem_sim::{Node, Op, Protocol, Sim};

const W: Node = Node::Writer(0);
const R: Node = Node::Reader(0);

fn write_then_read<P: Protocol + Clone>(p: P, v: u64) -> (u64, regmem_consistency::History) {
    let sim = Sim::new(p);
    let mut cfg = sim.initial(1, 1);
    cfg.schedule(W, Op::Write(v));
    let ex = sim.run_fair(&cfg, &BTreeSet::new(), &|c| c.completed(W) == 1, 0).unwrap();
    let mut cfg = ex.last().clone();
    cfg.schedule(R, Op::Read);
    let ex = sim.run_fair(&cfg, &BTreeSet::new(), &|c| c.completed(R) == 1, 0).unwrap();
    let last = ex.last();
    (last.client(R).last_read.unwrap(), last.history.clone())
}

#[test]
fn abd_write_then_read() {
    for v in 0..8 {
        let (r, h) = write_then_read(abd_spec(3, 1, 8).unwrap(), v);
        assert_eq!(r, v);
        assert!(check_atomic(&h).unwrap().ok);
    }
}

#[test]
fn coded_write_then_read() {
    for (n, f) in [(3, 1), (4, 1), (5, 2), (5, 1)] {
        for v in 0..16 {
            let (r, _) = write_then_read(coded_spec(n, f, 1, 16).unwrap(), v);
            assert_eq!(r, v, "n={n} f={f}");
            let (r, _) = write_then_read(coded_gossip_spec(n, f, 1, 16).unwrap(), v);
            assert_eq!(r, v, "gossip n={n} f={f}");
        }
    }
}

#[test]
fn abd_requires_majority() {
    assert!(abd_spec(4, 2, 4).is_err());
    assert!(abd_spec_unchecked(4, 2, 4, AbdOptions::default()).is_ok());
}

#[test]
fn abd_server_holds_one_tagged_value() {
    let sim = Sim::new(abd_spec(3, 1, 8).unwrap());
    let mut cfg = sim.initial(1, 0);
    cfg.schedule(W, Op::Write(5));
    let ex = sim.run_fair(&cfg, &BTreeSet::new(), &|c| c.completed(W) == 1 && c.channels.values().all(|q| q.is_empty()), 0).unwrap();
    for s in 1..=3 {
        let st = ex.last().server(s);
        assert_eq!(st.value, 5);
        assert_eq!(st.tag, Tag { counter: 1, writer: 1 });
    }
}

#[test]
fn mutant_keeps_first_value() {
    let sim = Sim::new(abd_spec_unchecked(3, 1, 8, AbdOptions { ignore_second_value: true }).unwrap());
    let mut cfg = sim.initial(1, 1);
    cfg.schedule(W, Op::Write(1));
    cfg.schedule(W, Op::Write(2));
    cfg.schedule(R, Op::Read);
    let ex = sim.run_fair(&cfg, &BTreeSet::new(), &|c| c.completed(W) == 2, 0).unwrap();
    let mut cfg = ex.last().clone();
    cfg.schedule(R, Op::Read);
    let ex = sim.run_fair(&cfg, &BTreeSet::new(), &|c| c.completed(R) == 2, 0).unwrap();
    assert_eq!(ex.last().client(R).last_read, Some(1));
    assert!(!check_atomic(&ex.last().history).unwrap().ok);
}

#[test]
fn reference_specs_pass_assumptions() {
    let r = validate_assumptions(&abd_spec(3, 1, 8).unwrap()).unwrap();
    assert!(r.all_ok());
    let r = validate_assumptions(&coded_spec(4, 1, 2, 16).unwrap()).unwrap();
    assert!(r.all_ok());
    let r = validate_assumptions(&coded_gossip_spec(4, 2, 1, 16).unwrap()).unwrap();
    assert!(r.all_ok());
}

#[test]
fn hash_in_finalize_breaks_single_vd_phase() {
    let p = Coded::new(4, 1, 1, 16, CodedOptions { gossip: false, hash_in_finalize: true }).unwrap();
    match validate_assumptions(&p) {
        Err(AlgoError::AssumptionViolation { clause, .. }) => assert_eq!(clause, "3(b)"),
        other => panic!("expected a violation, got {other:?}"),
    }
}

#[test]
fn coded_classification() {
    let p = coded_spec(3, 1, 1, 16).unwrap();
    let t = Tag::default();
    assert_eq!(p.classify(&CodedMsg::Query { seq: 1 }), regmem_sim::MsgClass::ValueIndependent);
    assert_eq!(p.classify(&CodedMsg::Finalize { seq: 1, tag: t, hash: None }), regmem_sim::MsgClass::ValueIndependent);
    assert_eq!(p.classify(&CodedMsg::Store { seq: 1, tag: t, sym: vec![0] }), regmem_sim::MsgClass::ValueDependent);
    assert_eq!(p.phase_plan().value_dependent_phases(), vec![1]);
}

#[test]
fn stalled_writers_leave_nu_versions() {
    // N=5, f=2: k=3 and 12-bit values give one 4-bit symbol per version
    for nu in 1..=3usize {
        let p = coded_spec(5, 2, nu, 4096).unwrap();
        assert_eq!(p.symbol_bits(), 4);
        let sim = Sim::new(p.clone());
        let mut cfg = sim.initial(nu, 0);
        for w in 0..nu {
            cfg.schedule(Node::Writer(w), Op::Write(100 + w as u64));
        }
        // writers stop acting once their store messages are out
        let ex = sim.run_fair(&cfg, &BTreeSet::new(), &|c| (0..nu).all(|w| c.has_vd_from(Node::Writer(w))), 0).unwrap();
        let mut cfg = ex.last().clone();
        for w in 0..nu {
            cfg.freeze_node(Node::Writer(w));
        }
        for w in 0..nu {
            let chans = sim.channels_from(&cfg, Node::Writer(w));
            let mut c2 = cfg.clone();
            c2.frozen.clear();
            let d = sim.deliver_all(&c2, &chans).unwrap();
            cfg.servers = d.last().servers.clone();
            cfg.channels = d.last().channels.clone();
        }
        let total: u64 = (1..=5).map(|s| p.stored_value_bits(cfg.server(s))).sum();
        // nu stalled versions plus the finalized initial one
        assert_eq!(total, 5 * 4 * (nu as u64 + 1));
        let normalized = (total - 5 * 4) as f64 / 12.0;
        assert!((normalized - nu as f64 * 5.0 / 3.0).abs() < 1e-9);
    }
}

#[test]
fn appendix_a_recovers_v2() {
    let a = appendix_a(3, 9, 12);
    assert_eq!(a.joint, [3 ^ 9 ^ 12, 3 ^ 9 ^ 12]);
    assert_eq!(a.after[0], 3 ^ 12);
    assert_eq!(a.recovered, 9);
    assert_eq!(a.bits_before, a.bits_after);
}
