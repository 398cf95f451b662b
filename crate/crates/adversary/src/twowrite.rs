use std::collections::BTreeSet;

use regmem_bounds::{BoundParams, ProductForm, Theorem};
use regmem_consistency::check_regular;
use regmem_sim::{changed_channels, changed_servers, digest_hex, Configuration, Encode, Execution, Op, Protocol, Sim, Value};
use serde::Serialize;

use crate::report::{summarize, Family};
use crate::{
    all_channels, fail_complement, states, unfreeze, AdversaryError, Check, Result, Splice, StateFingerprint, Variant, WitnessParams, WitnessReport,
    READER, WRITER,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeMode {
    Plain,
    /// Server-to-server channels drain before the read starts.
    GossipFlush,
    /// Some writers may not send value-dependent messages.
    Restrained,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValencyProbeResult {
    pub value: Value,
    pub mode: ProbeMode,
    pub frozen: Vec<String>,
    pub trace_digest: String,
}

/// Write `v1` to completion over `live`, then write `v2` to completion and
/// drain every channel. The returned execution starts at the point where
/// the first write has just completed.
pub fn build_two_write_execution<P: Protocol + Clone>(sim: &Sim<P>, live: &[usize], v1: Value, v2: Value, gossip: bool) -> Result<Execution<P>> {
    if v1 == v2 {
        return Err(AdversaryError::Precondition(format!("the two written values must differ, both are {v1}")));
    }
    let mut cfg = fail_complement(sim, &sim.initial(1, 1), live)?;
    cfg.freeze_node(READER);
    cfg.schedule(WRITER, Op::Write(v1));
    let first = sim.run_fair(&cfg, &BTreeSet::new(), &|c| c.completed(WRITER) == 1, 0)?;
    let mut p0 = first.last().clone();
    p0.schedule(WRITER, Op::Write(v2));
    let mut ex = sim.run_fair(&p0, &BTreeSet::new(), &|c| c.completed(WRITER) == 2, 0)?;
    let flush = sim.deliver_all(ex.last(), &all_channels(sim, &p0))?;
    ex.append(flush);
    if !gossip && ex.last().gossip_observed() {
        return Err(AdversaryError::HypothesisViolation(format!("{} sent a server-to-server message", sim.proto.name())));
    }
    Ok(ex)
}

fn probe_start<P: Protocol>(sim: &Sim<P>, cfg: &Configuration<P>, mode: ProbeMode) -> Result<Configuration<P>> {
    let mut c = cfg.clone();
    unfreeze(&mut c, READER);
    c.freeze_node(WRITER);
    if mode == ProbeMode::GossipFlush {
        c = sim.deliver_all(&c, &sim.server_channels(&c))?.last().clone();
    }
    Ok(c)
}

pub(crate) fn trace_digest(ex_steps: &[regmem_sim::StepRecord]) -> String {
    let mut t = Vec::new();
    for s in ex_steps {
        s.actor.to_string().encode(&mut t);
        s.label.encode(&mut t);
    }
    digest_hex(&t)
}

/// One read from `start` under the canonical fair scheduler.
pub(crate) fn read_from<P: Protocol>(sim: &Sim<P>, start: &Configuration<P>) -> Result<(Value, Execution<P>)> {
    let mut c = start.clone();
    let before = c.completed(READER);
    c.schedule(READER, Op::Read);
    let ex = sim.run_fair(&c, &BTreeSet::new(), &move |x| x.completed(READER) > before, 0)?;
    let v = ex.last().client(READER).last_read.expect("completed read has a value");
    Ok((v, ex))
}

fn probe_exec<P: Protocol>(sim: &Sim<P>, cfg: &Configuration<P>, mode: ProbeMode) -> Result<(ValencyProbeResult, Execution<P>)> {
    let start = probe_start(sim, cfg, mode)?;
    let (value, ex) = read_from(sim, &start)?;
    let res = ValencyProbeResult { value, mode, frozen: vec![WRITER.to_string()], trace_digest: trace_digest(&ex.steps) };
    Ok((res, ex))
}

/// Starts a read at point `i` with the writer and its channels frozen.
pub fn valency_probe<P: Protocol>(sim: &Sim<P>, ex: &Execution<P>, i: usize, mode: ProbeMode) -> Result<ValencyProbeResult> {
    let cfg = ex.points.get(i).ok_or_else(|| AdversaryError::Precondition(format!("point {i} is past the end ({})", ex.len())))?;
    Ok(probe_exec(sim, cfg, mode)?.0)
}

/// Probe values at every point and every index where the value written
/// first stops being returned.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FlipScan {
    pub probes: Vec<Value>,
    pub flips: Vec<usize>,
}

impl FlipScan {
    pub fn run<P: Protocol>(sim: &Sim<P>, ex: &Execution<P>, v1: Value, mode: ProbeMode) -> Result<Self> {
        let probes = (0..ex.points.len()).map(|i| valency_probe(sim, ex, i, mode).map(|r| r.value)).collect::<Result<Vec<_>>>()?;
        let flips = (0..probes.len().saturating_sub(1)).filter(|&i| probes[i] == v1 && probes[i + 1] != v1).collect();
        Ok(FlipScan { probes, flips })
    }
}

/// First index `i` whose probe returns `v1` while the probe at `i + 1`
/// does not. The scan is linear because valency need not be monotone.
pub fn find_flip_point<P: Protocol>(sim: &Sim<P>, ex: &Execution<P>, v1: Value, mode: ProbeMode) -> Result<(usize, FlipScan)> {
    let scan = FlipScan::run(sim, ex, v1, mode)?;
    match scan.flips.first() {
        Some(&i) => Ok((i, scan)),
        None => Err(AdversaryError::NoFlip(format!("probes {:?}", scan.probes))),
    }
}

struct PairRun<P: Protocol> {
    input: Vec<Value>,
    /// Probe start configurations at Q1 and Q2.
    starts: [Configuration<P>; 2],
    /// Probe extensions from those starts.
    probes: [Execution<P>; 2],
}

#[derive(Default)]
struct Tally {
    probes: usize,
    unsound: Vec<String>,
    endpoints: Vec<String>,
    no_flip: Vec<String>,
    nonlocal: Vec<String>,
}

fn critical_pair_witness<P: Protocol + Clone>(sim: &Sim<P>, live: &[usize], values: &[Value], gossip: bool) -> Result<WitnessReport> {
    if values.len() < 2 {
        return Err(AdversaryError::Precondition(format!("need at least two values, got {}", values.len())));
    }
    let n = sim.proto.servers();
    let f = n - live.len();
    let mode = if gossip { ProbeMode::GossipFlush } else { ProbeMode::Plain };
    let mut fam = Family::default();
    let mut runs: Vec<PairRun<P>> = vec![];
    let mut tally = Tally::default();
    for &v1 in values {
        for &v2 in values {
            if v1 == v2 {
                continue;
            }
            let tag = format!("({v1},{v2})");
            let ex = build_two_write_execution(sim, live, v1, v2, gossip)?;
            for p in &ex.points {
                fam.observe(p, live);
            }
            let scan = FlipScan::run(sim, &ex, v1, mode)?;
            tally.probes += scan.probes.len();
            if let Some(bad) = scan.probes.iter().position(|p| *p != v1 && *p != v2) {
                tally.unsound.push(format!("{tag} point {bad} returned {}", scan.probes[bad]));
            }
            let last = scan.probes.len() - 1;
            if scan.probes[0] != v1 || scan.probes[last] != v2 {
                tally.endpoints.push(format!("{tag} probe(0)={} probe(M)={}", scan.probes[0], scan.probes[last]));
            }
            let i = match scan.flips.first() {
                Some(&i) => i,
                None => {
                    tally.no_flip.push(tag.clone());
                    last.saturating_sub(1)
                }
            };
            let (q1, q2) = (&ex.points[i], &ex.points[(i + 1).min(last)]);
            let changed: Vec<usize> = changed_servers(q1, q2).into_iter().filter(|s| live.contains(s)).collect();
            let ss: Vec<_> = changed_channels(q1, q2).into_iter().filter(|c| c.is_server_to_server()).collect();
            if changed.len() > 1 || (gossip && ss.len() > 1) {
                tally.nonlocal.push(format!("{tag} at {i}: servers {changed:?}, channels {}", ss.len()));
            }
            let s = changed.first().copied().unwrap_or(live[0]);
            let starts = [probe_start(sim, q1, mode)?, probe_start(sim, q2, mode)?];
            let fp = if gossip {
                let s2 = ss.first().and_then(|c| c.dst.server_index()).unwrap_or(live[0]);
                for r in &starts {
                    fam.observe(r, live);
                }
                StateFingerprint {
                    variant: Variant::Thm3,
                    states: states(&starts[0], live)?,
                    changed: vec![(s, starts[1].server_bytes(s)), (s2, starts[1].server_bytes(s2))],
                    sigma: vec![],
                    thresholds: vec![],
                }
            } else {
                StateFingerprint { variant: Variant::Thm2, states: states(q1, live)?, changed: vec![(s, q2.server_bytes(s))], sigma: vec![], thresholds: vec![] }
            };
            fam.insert(vec![v1, v2], fp);
            let probes = [read_from(sim, &starts[0])?.1, read_from(sim, &starts[1])?.1];
            runs.push(PairRun { input: vec![v1, v2], starts, probes });
        }
    }
    let mut splices = vec![];
    for c in fam.collisions() {
        let a = runs.iter().find(|r| r.input == c.a).unwrap();
        let b = runs.iter().find(|r| r.input == c.b).unwrap();
        for (x, y) in [(a, b), (b, a)] {
            for k in 0..2 {
                splices.push(splice(sim, x, y, k)?);
            }
        }
    }
    let mut checks = vec![
        Check::new("probe_soundness", tally.unsound.is_empty(), summarize(tally.probes, &tally.unsound)),
        Check::new("endpoint_valency", tally.endpoints.is_empty(), summarize(runs.len(), &tally.endpoints)),
        Check::new("flip_found", tally.no_flip.is_empty(), summarize(runs.len(), &tally.no_flip)),
        Check::new("flip_locality", tally.nonlocal.is_empty(), summarize(runs.len(), &tally.nonlocal)),
    ];
    if !splices.is_empty() {
        let ok = splices.iter().any(|s| !s.regular);
        checks.push(Check::new("splice_violation", ok, format!("{} of {} splices violate regularity", splices.iter().filter(|s| !s.regular).count(), splices.len())));
    }
    let mut notes = vec![];
    if tally.no_flip.is_empty() {
        notes.push("the first flip of each scan is used".to_string());
    } else {
        notes.push("pairs without a flip use the last two points".to_string());
    }
    let (theorem, t, hypothesis) = if gossip {
        (3, Theorem::Three, "within stated hypothesis".to_string())
    } else if f >= 2 {
        (2, Theorem::Two, "within stated hypothesis".to_string())
    } else {
        (2, Theorem::Two, format!("outside stated hypothesis (f = {f})"))
    };
    let bp = BoundParams::new(n as u64, f as u64, 1, values.len() as u64).map_err(|e| AdversaryError::Precondition(e.to_string()))?;
    let params = WitnessParams {
        theorem,
        algorithm: sim.proto.name(),
        n,
        f,
        nu: 1,
        domain: values.len() as u64,
        servers: live.to_vec(),
        family_size: fam.len(),
        hypothesis,
    };
    Ok(fam.report(params, &ProductForm::for_theorem(t, &bp), checks, splices, notes))
}


/// The prefix of `keep` up to Q_k followed by the probe extension recorded
/// for `other` at its own Q_k.
fn splice<P: Protocol>(sim: &Sim<P>, keep: &PairRun<P>, other: &PairRun<P>, k: usize) -> Result<Splice> {
    let mut cfg = keep.starts[k].clone();
    let before = cfg.completed(READER);
    cfg.schedule(READER, Op::Read);
    let mut replayed = true;
    for rec in &other.probes[k].steps {
        if sim.step_in_place(&mut cfg, rec.actor).is_err() {
            replayed = false;
            break;
        }
    }
    if !replayed || cfg.completed(READER) == before {
        replayed = false;
        cfg = read_from(sim, &keep.starts[k])?.1.last().clone();
    }
    let read_value = cfg.client(READER).last_read.expect("read completed");
    let verdict = check_regular(&cfg.history)?;
    Ok(Splice {
        prefix: keep.input.clone(),
        extension: other.input.clone(),
        point: format!("Q{}", k + 1),
        replayed,
        read_value,
        regular: verdict.ok,
        reason: verdict.violation.map(|v| v.reason),
    })
}

/// Critical-point witness without server gossip.
pub fn witness_thm2<P: Protocol + Clone>(sim: &Sim<P>, live: &[usize], values: &[Value]) -> Result<WitnessReport> {
    critical_pair_witness(sim, live, values, false)
}

/// Critical-point witness where server-to-server channels drain before
/// each probe.
pub fn witness_thm3<P: Protocol + Clone>(sim: &Sim<P>, live: &[usize], values: &[Value]) -> Result<WitnessReport> {
    critical_pair_witness(sim, live, values, true)
}

