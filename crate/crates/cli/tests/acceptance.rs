//! Exit criteria. Run with `--nocapture` to see one line per criterion.

use std::collections::BTreeSet;
use std::process::Command;
use std::time::{Duration, Instant};

use regmem_adversary::{build_alpha0, witness_thm1, witness_thm2, witness_thm3, witness_thm4, WitnessReport};
use regmem_algorithms::*;
use regmem_cli::sweep;
use regmem_coding::{ambiguity_count, decode, encode, CodeParams};
use regmem_sim::{Node, Sim};

const GOLDEN: &str = include_str!("../../bounds/tests/data/figure1_n21_f10.csv");

fn verdict(n: u32, name: &str, pass: bool, detail: String) {
    println!("criterion {n} {}: {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} ({name}) failed: {detail}");
}

fn regmem(args: &[&str]) -> (i32, Vec<u8>, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_regmem")).args(args).output().unwrap();
    (out.status.code().unwrap(), out.stdout, String::from_utf8(out.stderr).unwrap())
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn ratio(p: u64, q: u64) -> String {
    let g = gcd(p, q);
    if q / g == 1 {
        format!("{}", p / g)
    } else {
        format!("{}/{}", p / g, q / g)
    }
}

fn abd(n: usize, f: usize, domain: u64) -> Sim<Abd> {
    Sim::new(abd_spec_unchecked(n, f, domain, AbdOptions::default()).unwrap())
}

#[test]
fn c01_figure_reproduction() {
    let dir = std::env::temp_dir().join(format!("regmem-acc-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("figure1.csv");
    let t = Instant::now();
    let (code, stdout, _) = regmem(&["bounds", "--N", "21", "--f", "10", "--nu-max", "15", "--out", out.to_str().unwrap()]);
    let elapsed = t.elapsed();
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut expected = String::from("nu,abd,erasure,thm1,thm3,thm4\n");
    for nu in 1..=15u64 {
        let m = nu.min(11);
        expected.push_str(&format!("{nu},11,{},{},{},{}\n", ratio(21 * nu, 11), ratio(21, 11), ratio(42, 13), ratio(m * 21, 10 + m)));
    }
    let pass = code == 0 && csv == GOLDEN && csv == expected && stdout == b"crossover nu=6\n" && elapsed < Duration::from_secs(1);
    verdict(1, "figure table", pass, format!("golden match {}, formula match {}, {:?}", csv == GOLDEN, csv == expected, elapsed));
}

#[test]
fn c02_single_write_witness() {
    let mut lines = vec![];
    let mut pass = true;
    for n in [3, 4] {
        for f in [1, 2] {
            let live: Vec<usize> = (1..=n - f).collect();
            for v in [4u64, 8, 16] {
                let values: Vec<u64> = (0..v).collect();
                let t = Instant::now();
                let a = witness_thm1(&abd(n, f, v), &live, &values).unwrap();
                let c = witness_thm1(&Sim::new(coded_spec(n, f, 1, v).unwrap()), &live, &values).unwrap();
                let el = t.elapsed();
                for r in [&a, &c] {
                    let ok = r.distinct == v as usize && r.injective && r.product.holds && el < Duration::from_secs(10);
                    pass &= ok;
                    if !ok {
                        lines.push(format!("{} N={n} f={f} V={v}", r.params.algorithm));
                    }
                }
            }
        }
    }
    verdict(2, "single-write fingerprints", pass, format!("24 configurations, failing {lines:?}"));
}

fn critical_ok(r: &WitnessReport, pairs: usize) -> bool {
    r.distinct == pairs
        && r.injective
        && r.product.holds
        && r.check("probe_soundness").is_some_and(|c| c.ok)
        && r.check("endpoint_valency").is_some_and(|c| c.ok)
}

#[test]
fn c03_critical_point_witness() {
    let t = Instant::now();
    let mut detail = vec![];
    let mut pass = true;
    for v in [3u64, 4] {
        let r = witness_thm2(&abd(4, 2, v), &[1, 2], &(0..v).collect::<Vec<_>>()).unwrap();
        let pairs = (v * (v - 1)) as usize;
        pass &= critical_ok(&r, pairs);
        detail.push(format!("V={v}: {}/{pairs} distinct, {} >= {}", r.distinct, r.product.lhs, r.product.rhs));
    }
    pass &= t.elapsed() < Duration::from_secs(60);
    verdict(3, "two-write witness", pass, format!("{detail:?} in {:?}", t.elapsed()));
}

#[test]
fn c04_gossip_witness() {
    let t = Instant::now();
    let r = witness_thm3(&Sim::new(coded_gossip_spec(4, 2, 1, 3).unwrap()), &[1, 2], &[0, 1, 2]).unwrap();
    let pass = critical_ok(&r, 6)
        && r.fingerprints.iter().all(|e| e.changed_servers.len() == 2)
        && r.check("flip_locality").is_some_and(|c| c.ok)
        && t.elapsed() < Duration::from_secs(120);
    verdict(4, "gossip witness", pass, format!("{}/6 distinct, {} >= {}, {:?}", r.distinct, r.product.lhs, r.product.rhs, t.elapsed()));
}

#[test]
fn c05_staged_witness() {
    let t = Instant::now();
    let reports = [witness_thm4(&abd(4, 2, 4), 2, 4, 2).unwrap(), witness_thm4(&Sim::new(coded_spec(4, 2, 2, 4).unwrap()), 2, 4, 2).unwrap()];
    let mut pass = t.elapsed() < Duration::from_secs(300);
    let mut detail = vec![];
    for r in &reports {
        let first = r.check("lemma2_first_threshold_positive").unwrap();
        let inc = r.check("lemma2_strictly_increasing").unwrap();
        pass &= first.ok && inc.ok && r.injective && r.distinct == 6 && r.product.holds;
        detail.push(format!(
            "{}: a1>=1 {}, increasing {} ({}), {}/6 distinct, {} >= {}",
            r.params.algorithm, first.ok, inc.ok, inc.detail, r.distinct, r.product.lhs, r.product.rhs
        ));
    }
    verdict(5, "staged-delivery witness", pass, detail.join("; "));
}

#[test]
fn c06_consistency_sweeps() {
    let seeds: Vec<u64> = (0..1000).collect();
    let mut pass = true;
    let mut detail = vec![];
    for n in [3, 4, 5] {
        let a = sweep(&Sim::new(abd_spec(n, 1, 8).unwrap()), 1, 5, 8, &seeds).unwrap();
        let c = sweep(&Sim::new(coded_spec(n, 1, 1, 8).unwrap()), 1, 5, 8, &seeds).unwrap();
        pass &= a.ok && c.ok;
        detail.push(format!("N={n}: abd {} coded {}", a.violations, c.violations));
    }
    let m = sweep(&Sim::new(abd_spec_unchecked(3, 1, 8, AbdOptions { ignore_second_value: true }).unwrap()), 1, 5, 8, &seeds).unwrap();
    let witness = m.first_violation.as_ref().and_then(|v| v.verdict.as_ref()).is_some_and(|v| !v.ok && v.violation.is_some());
    let mw = witness_thm2(&Sim::new(abd_spec_unchecked(4, 2, 3, AbdOptions { ignore_second_value: true }).unwrap()), &[1, 2], &[0, 1, 2]).unwrap();
    let splice = mw.splices.iter().any(|s| s.replayed && !s.regular);
    pass &= !m.ok && witness && !mw.collisions.is_empty() && splice;
    detail.push(format!("mutant sweep violations {}, collisions {}, replayed splice violation {splice}", m.violations, mw.collisions.len()));
    verdict(6, "consistency sweeps", pass, detail.join("; "));
}

#[test]
fn c07_mds_property() {
    let mut pass = true;
    let mut cases = 0;
    for n in 1..=6usize {
        for k in 1..=n {
            let p = CodeParams::new(n, k, 4).unwrap();
            let value: Vec<u8> = (0..2 * k).map(|i| ((i * 11 + n + 3 * k) % 16) as u8).collect();
            let cw = encode(&value, &p).unwrap();
            for mask in 0u32..1 << n {
                if mask.count_ones() as usize != k {
                    continue;
                }
                let sym: Vec<_> = (1..=n).filter(|i| mask >> (i - 1) & 1 == 1).map(|i| (i, cw.symbols[&i].clone())).collect();
                pass &= decode(&sym, &p, value.len()).unwrap() == value;
                cases += 1;
            }
            if (2..=4).contains(&k) {
                let sym: Vec<_> = (1..k).map(|i| (i, cw.symbols[&i].clone())).collect();
                pass &= ambiguity_count(&sym, &p, 2).unwrap() == 16 * 16;
            }
        }
    }
    verdict(7, "MDS roundtrip", pass, format!("{cases} subsets decoded"));
}

fn writer_meta<P: RestrictedProtocol>(p: &P, c: &regmem_sim::Configuration<P>) -> Vec<Vec<u8>> {
    (0..2).map(|i| p.writer_metadata(&c.client(Node::Writer(i)).state)).collect()
}

fn p0_invariant<P: RestrictedProtocol + Clone>(sim: &Sim<P>) -> bool {
    let a = build_alpha0(sim, 2, &[1, 2]).unwrap();
    let b = build_alpha0(sim, 2, &[3, 1]).unwrap();
    (1..=3).all(|s| a.server_bytes(s) == b.server_bytes(s)) && writer_meta(&sim.proto, &a) == writer_meta(&sim.proto, &b)
}

#[test]
fn c08_assumptions_and_metadata() {
    let abd_spec = abd_spec_unchecked(4, 2, 4, AbdOptions::default()).unwrap();
    let coded = coded_spec(4, 2, 2, 4).unwrap();
    let va = validate_assumptions(&abd_spec).is_ok() && validate_assumptions(&abd(3, 1, 4).proto).is_ok();
    let vc = validate_assumptions(&coded).is_ok();
    let p0 = p0_invariant(&Sim::new(abd_spec.clone())) && p0_invariant(&Sim::new(coded.clone()));
    let staged = [witness_thm4(&Sim::new(abd_spec), 2, 4, 2).unwrap(), witness_thm4(&Sim::new(coded), 2, 4, 2).unwrap()]
        .iter()
        .all(|r| r.check("metadata_invariance").is_some_and(|c| c.ok));
    verdict(8, "assumptions and metadata invariance", va && vc && p0 && staged, format!("abd {va}, coded {vc}, P0 {p0}, staged points {staged}"));
}

#[test]
fn c09_joint_sum_demo() {
    let mut ok = 0;
    for v1 in 0..16u8 {
        for v2 in 0..16u8 {
            for v3 in 0..16u8 {
                let d = appendix_a(v1, v2, v3);
                if d.recovered == v2 && d.bits_before == d.bits_after && d.bits_before == [4, 4] {
                    ok += 1;
                }
            }
        }
    }
    verdict(9, "joint-sum recovery", ok == 4096, format!("{ok}/4096 triples"));
}

#[test]
fn c10_determinism() {
    let runs: [&[&str]; 4] = [
        &["witness", "--theorem", "2", "--algorithm", "abd", "--N", "4", "--f", "2", "--domain", "3"],
        &["witness", "--theorem", "4", "--algorithm", "coded", "--N", "4", "--f", "2", "--domain", "4"],
        &["witness", "--theorem", "3", "--algorithm", "coded-gossip", "--N", "4", "--f", "2", "--domain", "3"],
        &["simulate", "--algorithm", "abd-mutant", "--seeds", "300"],
    ];
    let mut same = BTreeSet::new();
    for args in runs {
        let a = regmem(args);
        let b = regmem(args);
        same.insert(a == b && !a.1.is_empty());
    }
    verdict(10, "determinism", same == BTreeSet::from([true]), format!("{} commands repeated", runs.len()));
}

