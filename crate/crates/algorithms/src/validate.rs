use std::collections::BTreeSet;

use regmem_sim::{ActorId, Encode, Execution, Node, Op, Sim, Value};

use crate::{AlgoError, RestrictedProtocol};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub ok: bool,
    pub detail: String,
}

impl Clause {
    fn pass(detail: impl Into<String>) -> Self {
        Clause { ok: true, detail: detail.into() }
    }

    fn fail(detail: impl Into<String>) -> Self {
        Clause { ok: false, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssumptionReport {
    /// Writer state splits into value and metadata, metadata value-oblivious.
    pub black_box: Clause,
    /// Writes decompose into quorum phases.
    pub phases: Clause,
    /// At most one value-dependent phase, and only value-independent sends after it.
    pub single_vd_phase: Clause,
}

impl AssumptionReport {
    pub fn all_ok(&self) -> bool {
        self.black_box.ok && self.phases.ok && self.single_vd_phase.ok
    }

    fn first_failure(&self) -> Option<(&'static str, &Clause)> {
        [("1", &self.black_box), ("2", &self.phases), ("3(b)", &self.single_vd_phase)].into_iter().find(|(_, c)| !c.ok)
    }
}

struct WriterStep {
    actor: ActorId,
    phase: Option<usize>,
    metadata: Vec<u8>,
    /// (destination server, value-dependent, canonical message bytes)
    sends: Vec<(usize, bool, Vec<u8>)>,
    /// Server whose message the writer received in this step.
    heard_from: Option<usize>,
}

fn trace<P: RestrictedProtocol + Clone>(sim: &Sim<P>, v: Value, seed: u64) -> Result<Vec<WriterStep>, AlgoError> {
    let w = Node::Writer(0);
    let mut cfg = sim.initial(1, 0);
    cfg.schedule(w, Op::Write(v));
    let ex: Execution<P> = sim.run_fair(&cfg, &BTreeSet::new(), &|c| c.completed(w) == 1, seed)?;
    let mut out = Vec::new();
    for (rec, pt) in ex.steps.iter().zip(&ex.points[1..]) {
        let st = &pt.client(w).state;
        let writer_acted = match rec.actor {
            ActorId::Node(n) => n == w,
            ActorId::Channel(c) => c.dst == w,
        };
        let sends = if writer_acted {
            pt_sends(rec, pt, w)
        } else {
            vec![]
        };
        out.push(WriterStep {
            actor: rec.actor,
            phase: sim.proto.writer_phase(st),
            metadata: sim.proto.writer_metadata(st),
            sends,
            heard_from: match rec.actor {
                ActorId::Channel(c) if c.dst == w => c.src.server_index(),
                _ => None,
            },
        });
    }
    Ok(out)
}

/// Messages the writer emitted in this step, read back from the tails of
/// its outgoing channels.
fn pt_sends<P: RestrictedProtocol>(
    rec: &regmem_sim::StepRecord,
    pt: &regmem_sim::Configuration<P>,
    w: Node,
) -> Vec<(usize, bool, Vec<u8>)> {
    let mut out = Vec::new();
    for s in rec.sent.iter().filter(|s| s.channel.src == w) {
        let dst = s.channel.dst.server_index().unwrap_or(0);
        let bytes = if s.dropped {
            vec![]
        } else {
            // the newest envelope on that channel is the one just sent
            pt.channel(s.channel).last().map(|e| e.msg.to_bytes()).unwrap_or_default()
        };
        out.push((dst, s.vd, bytes));
    }
    out
}

/// Runs one write of two different values under the same schedule and checks
/// the three structural assumptions against the protocol's phase plan.
pub fn validate_assumptions<P: RestrictedProtocol + Clone>(proto: &P) -> Result<AssumptionReport, AlgoError> {
    let report = assumption_report(proto)?;
    match report.first_failure() {
        None => Ok(report),
        Some((clause, c)) => Err(AlgoError::AssumptionViolation { clause: clause.into(), detail: c.detail.clone() }),
    }
}

pub fn assumption_report<P: RestrictedProtocol + Clone>(proto: &P) -> Result<AssumptionReport, AlgoError> {
    let sim = Sim::new(proto.clone());
    let plan = proto.phase_plan();
    let (va, vb) = (1, 2);
    let mut black_box = Clause::pass("metadata trajectories identical for two values under two schedules");
    let mut phases = Clause::pass(format!("{} phases, each ends on a quorum of responses", plan.phases.len()));
    let mut single = Clause::pass("one value-dependent phase, later sends value-independent");

    let vd_phases = plan.value_dependent_phases();
    if vd_phases.len() > 1 {
        single = Clause::fail(format!("phase plan marks {} phases value-dependent: {:?}", vd_phases.len(), vd_phases));
    }
    for (i, p) in plan.phases.iter().enumerate() {
        if p.destinations.is_empty() || !p.quorums.members().is_subset(&p.destinations) || p.quorums.min_size() == 0 {
            phases = Clause::fail(format!("phase {i} ({}) has an ill-formed quorum system", p.name));
        }
    }

    for seed in [0u64, 7] {
        let ta = trace(&sim, va, seed)?;
        let tb = trace(&sim, vb, seed)?;
        if ta.len() != tb.len() || ta.iter().zip(&tb).any(|(a, b)| a.actor != b.actor) {
            black_box = Clause::fail(format!("schedules diverge for values {va} and {vb} (seed {seed})"));
            continue;
        }
        for (i, (a, b)) in ta.iter().zip(&tb).enumerate() {
            if black_box.ok && (a.metadata != b.metadata || a.phase != b.phase) {
                black_box = Clause::fail(format!("writer metadata differs at step {} (seed {seed})", i + 1));
            }
            for ((da, vda, ba), (_, vdb, bb)) in a.sends.iter().zip(&b.sends) {
                if vda != vdb && single.ok {
                    single = Clause::fail(format!("message to server {da} classified differently across values"));
                }
                if !vda && ba != bb && single.ok {
                    single = Clause::fail(format!("value-independent message to server {da} depends on the value at step {}", i + 1));
                }
            }
        }
        check_phases(&plan, &ta, &mut phases, &mut single);
    }
    Ok(AssumptionReport { black_box, phases, single_vd_phase: single })
}

fn check_phases(plan: &crate::PhasePlan, t: &[WriterStep], phases: &mut Clause, single: &mut Clause) {
    let mut cur: Option<usize> = None;
    let mut heard: BTreeSet<usize> = BTreeSet::new();
    let mut seen_vd_phase: Option<usize> = None;
    for (i, s) in t.iter().enumerate() {
        if let Some(srv) = s.heard_from {
            heard.insert(srv);
        }
        if s.phase != cur {
            if let Some(p) = cur {
                if !plan.phases[p].quorums.is_quorum(&heard) && phases.ok {
                    *phases = Clause::fail(format!("phase {} ended at step {} without a quorum of responses", plan.phases[p].name, i + 1));
                }
            }
            if let Some(p) = s.phase {
                let dests: BTreeSet<usize> = s.sends.iter().map(|x| x.0).collect();
                if dests != plan.phases[p].destinations && phases.ok {
                    *phases = Clause::fail(format!("phase {} did not start by sending to its destination set", plan.phases[p].name));
                }
                if cur.is_some_and(|c| p <= c) && phases.ok {
                    *phases = Clause::fail(format!("phase order violated at step {}", i + 1));
                }
            }
            cur = s.phase;
            heard.clear();
        }
        for (dst, vd, _) in &s.sends {
            let p = s.phase.or(cur);
            if *vd {
                match p {
                    Some(p) if plan.phases[p].value_dependent => {
                        if seen_vd_phase.is_some_and(|q| q != p) && single.ok {
                            *single = Clause::fail("value-dependent messages sent in two phases");
                        }
                        seen_vd_phase = Some(p);
                    }
                    _ if single.ok => {
                        *single = Clause::fail(format!("value-dependent message to server {dst} outside the value-dependent phase"));
                    }
                    _ => {}
                }
            }
        }
    }
}
