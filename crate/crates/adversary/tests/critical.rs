use std::collections::BTreeSet;

use proptest::prelude::*;
use regmem_adversary::*;
use regmem_algorithms::*;
use regmem_sim::{changed_servers, Encode, Node, Sim};

fn abd(n: usize, f: usize, domain: u64) -> Sim<Abd> {
    Sim::new(abd_spec_unchecked(n, f, domain, AbdOptions::default()).unwrap())
}

fn mutant(n: usize, f: usize, domain: u64) -> Sim<Abd> {
    Sim::new(abd_spec_unchecked(n, f, domain, AbdOptions { ignore_second_value: true }).unwrap())
}

fn abd_state(counter: u64, value: u64) -> Vec<u8> {
    let mut out = Vec::new();
    counter.encode(&mut out);
    1u32.encode(&mut out);
    value.encode(&mut out);
    out
}

#[test]
fn two_writes_complete_over_live_servers() {
    let sim = Sim::new(abd_spec(3, 1, 4).unwrap());
    let ex = build_two_write_execution(&sim, &[1, 2], 1, 2, false).unwrap();
    let last = ex.last();
    assert_eq!(last.failed, BTreeSet::from([3]));
    assert_eq!(last.completed(Node::Writer(0)), 2);
    assert_eq!(ex.initial().completed(Node::Writer(0)), 1);
    assert_eq!(last.server_bytes(1), abd_state(2, 2));
    assert_eq!(last.server_bytes(2), abd_state(2, 2));
    assert!(last.channels.values().all(|q| q.is_empty()));
}

#[test]
fn equal_values_are_refused() {
    let sim = Sim::new(abd_spec(3, 1, 4).unwrap());
    let err = build_two_write_execution(&sim, &[1, 2], 3, 3, false).unwrap_err();
    assert!(matches!(err, AdversaryError::Precondition(_)));
}

#[test]
fn coded_register_never_gossips() {
    let sim = Sim::new(coded_spec(4, 2, 1, 4).unwrap());
    let ex = build_two_write_execution(&sim, &[1, 2], 0, 3, false).unwrap();
    assert!(ex.points.iter().all(|p| !p.gossip_observed() && p.server_to_server_empty()));
}

#[test]
fn gossip_is_a_hypothesis_violation_without_the_flag() {
    let sim = Sim::new(coded_gossip_spec(4, 2, 1, 4).unwrap());
    let err = build_two_write_execution(&sim, &[1, 2], 0, 3, false).unwrap_err();
    assert!(matches!(err, AdversaryError::HypothesisViolation(_)));
    assert!(witness_thm2(&sim, &[1, 2], &[0, 1]).is_err());
    assert!(build_two_write_execution(&sim, &[1, 2], 0, 3, true).is_ok());
}

#[test]
fn endpoint_probes() {
    let sim = abd(4, 2, 4);
    let ex = build_two_write_execution(&sim, &[1, 2], 3, 1, false).unwrap();
    let first = valency_probe(&sim, &ex, 0, ProbeMode::Plain).unwrap();
    let last = valency_probe(&sim, &ex, ex.len(), ProbeMode::Plain).unwrap();
    assert_eq!((first.value, last.value), (3, 1));
    assert_eq!(first.frozen, vec!["w0".to_string()]);
    assert!(valency_probe(&sim, &ex, ex.len() + 1, ProbeMode::Plain).is_err());
}

#[test]
fn abd_flip_is_the_first_store_of_the_new_value() {
    let sim = abd(4, 2, 4);
    let ex = build_two_write_execution(&sim, &[1, 2], 0, 2, false).unwrap();
    let (i, scan) = find_flip_point(&sim, &ex, 0, ProbeMode::Plain).unwrap();
    // Oracle: the read takes the highest tag from both live servers, so it
    // returns the new value exactly once some server holds it.
    let holds_new = |k: usize| (1..=2).any(|s| ex.points[k].server(s).value == 2);
    let first = (0..ex.points.len()).find(|&k| holds_new(k)).unwrap();
    assert_eq!(i + 1, first);
    assert!(i > 0 && i < ex.len());
    assert_eq!(changed_servers(&ex.points[i], &ex.points[i + 1]).len(), 1);
    assert_eq!(scan.flips, vec![i]);
}

#[test]
fn thm1_abd_separates_four_values() {
    let sim = Sim::new(abd_spec(3, 1, 4).unwrap());
    let r = witness_thm1(&sim, &[1, 2], &[0, 1, 2, 3]).unwrap();
    assert!(r.injective && r.product.holds && r.ok());
    assert_eq!(r.distinct, 4);
    assert_eq!(r.product.rhs, "4");
    // Each live server ends with the written value under the first tag, and
    // passes through the initial state on the way.
    assert_eq!(r.product_fingerprint_only.counts, vec![(1, 4), (2, 4)]);
    assert_eq!(r.product.counts, vec![(1, 5), (2, 5)]);
    assert_eq!(r.product.lhs, "25");
}

#[test]
fn thm1_single_value_is_trivial() {
    let sim = Sim::new(abd_spec(3, 1, 4).unwrap());
    let r = witness_thm1(&sim, &[1, 2], &[2]).unwrap();
    assert!(r.injective && r.product.holds);
    assert_eq!(r.distinct, 1);
}

#[test]
fn thm1_coded_two_servers_sixteen_values() {
    let sim = Sim::new(coded_spec(4, 2, 1, 16).unwrap());
    let r = witness_thm1(&sim, &[1, 2], &(0..16).collect::<Vec<_>>()).unwrap();
    assert!(r.ok());
    assert_eq!(r.distinct, 16);
}

#[test]
fn thm1_rejects_bad_live_sets() {
    let sim = Sim::new(abd_spec(3, 1, 4).unwrap());
    assert!(matches!(witness_thm1(&sim, &[], &[0, 1]), Err(AdversaryError::Precondition(_))));
    assert!(matches!(witness_thm1(&sim, &[1, 4], &[0, 1]), Err(AdversaryError::Precondition(_))));
}

#[test]
fn thm2_abd_three_values() {
    let r = witness_thm2(&abd(4, 2, 3), &[1, 2], &[0, 1, 2]).unwrap();
    assert!(r.ok(), "{}", r.to_json());
    assert_eq!(r.distinct, 6);
    assert_eq!(r.params.hypothesis, "within stated hypothesis");
    assert!(r.fingerprints.iter().all(|e| e.changed_servers.len() == 1));
    assert_eq!(r.product.rhs, "6");
    assert!(r.splices.is_empty());
}

#[test]
fn thm2_two_values() {
    let r = witness_thm2(&abd(4, 2, 2), &[1, 2], &[0, 1]).unwrap();
    assert!(r.ok());
    assert_eq!(r.params.family_size, 2);
}

#[test]
fn thm2_single_failure_is_labelled() {
    let r = witness_thm2(&Sim::new(abd_spec(3, 1, 3).unwrap()), &[1, 2], &[0, 1, 2]).unwrap();
    assert!(r.params.hypothesis.starts_with("outside stated hypothesis"));
    assert!(r.injective);
}

#[test]
fn mutant_collides_and_splices_into_a_violation() {
    let values = [0, 1, 2];
    let r = witness_thm2(&mutant(4, 2, 3), &[1, 2], &values).unwrap();
    assert!(!r.injective && !r.ok());
    // The mutant keeps the first written value, so pairs agreeing on it
    // are indistinguishable.
    let mut expected = vec![];
    for &a in &values {
        let pairs: Vec<Vec<u64>> = values.iter().filter(|&&b| b != a).map(|&b| vec![a, b]).collect();
        for i in 0..pairs.len() {
            for j in i + 1..pairs.len() {
                expected.push((pairs[i].clone(), pairs[j].clone()));
            }
        }
    }
    let got: Vec<_> = r.collisions.iter().map(|c| (c.a.clone(), c.b.clone())).collect();
    assert_eq!(got, expected);
    assert!(r.splices.iter().any(|s| s.replayed && !s.regular));
    assert!(r.check("splice_violation").unwrap().ok);
    assert!(!r.check("endpoint_valency").unwrap().ok);
}

#[test]
fn thm3_gossip_fingerprints_carry_two_records() {
    let r = witness_thm3(&Sim::new(coded_gossip_spec(4, 2, 1, 3).unwrap()), &[1, 2], &[0, 1, 2]).unwrap();
    assert!(r.ok(), "{}", r.to_json());
    assert_eq!(r.distinct, 6);
    assert!(r.fingerprints.iter().all(|e| e.changed_servers.len() == 2));
    assert!(r.check("flip_locality").unwrap().ok);
}

#[test]
fn reports_are_deterministic() {
    let a = witness_thm2(&mutant(4, 2, 3), &[1, 2], &[0, 1, 2]).unwrap().to_json();
    let b = witness_thm2(&mutant(4, 2, 3), &[1, 2], &[0, 1, 2]).unwrap().to_json();
    assert_eq!(a, b);
    assert!(a.contains(PROBE_DISCLOSURE));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn probes_return_one_of_the_written_values(v1 in 0u64..6, v2 in 0u64..6, coded in any::<bool>(), n in 3usize..6) {
        prop_assume!(v1 != v2);
        let live: Vec<usize> = (1..n).collect();
        let scan = if coded {
            let sim = Sim::new(coded_spec(n, 1, 1, 6).unwrap());
            let ex = build_two_write_execution(&sim, &live, v1, v2, false).unwrap();
            FlipScan::run(&sim, &ex, v1, ProbeMode::Plain).unwrap()
        } else {
            let sim = Sim::new(abd_spec(n, 1, 6).unwrap());
            let ex = build_two_write_execution(&sim, &live, v1, v2, false).unwrap();
            FlipScan::run(&sim, &ex, v1, ProbeMode::Plain).unwrap()
        };
        prop_assert!(scan.probes.iter().all(|&p| p == v1 || p == v2));
        prop_assert_eq!(scan.probes[0], v1);
        prop_assert_eq!(*scan.probes.last().unwrap(), v2);
        prop_assert!(!scan.flips.is_empty());
    }
}
