use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regmem_consistency::{check_atomic, Verdict};
use regmem_sim::{Node, Op, Protocol, Sim, SimError};
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SweepViolation {
    pub seed: u64,
    pub failed: Vec<usize>,
    pub reason: String,
    pub verdict: Option<Verdict>,
    pub history: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SweepReport {
    pub algorithm: String,
    pub n: usize,
    pub f: usize,
    pub ops: usize,
    pub seeds: usize,
    pub violations: usize,
    pub first_violation: Option<SweepViolation>,
    pub ok: bool,
}

/// One writer and one reader with `ops` operations between them, up to `f`
/// crashed servers and a random schedule, all drawn from each seed. Every
/// history must be linearizable.
pub fn sweep<P: Protocol + Clone>(sim: &Sim<P>, f: usize, ops: usize, domain: u64, seeds: &[u64]) -> Result<SweepReport, CliError> {
    let n = sim.proto.servers();
    let (w, r) = (Node::Writer(0), Node::Reader(0));
    let mut violations = 0;
    let mut first = None;
    for &seed in seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.gen_range(0..=f.min(n));
        let failed: BTreeSet<usize> = sample(&mut rng, n, k).into_iter().map(|i| i + 1).collect();
        let mut cfg = sim.fail_servers(&sim.initial(1, 1), &failed).map_err(|e| CliError::Config(e.to_string()))?;
        for _ in 0..ops {
            if rng.gen_bool(0.5) {
                cfg.schedule(w, Op::Write(rng.gen_range(0..domain.max(1))));
            } else {
                cfg.schedule(r, Op::Read);
            }
        }
        let (reason, verdict, history) = match sim.run_random(&cfg, &|c| c.all_idle(), seed) {
            Ok(run) if run.outcome == regmem_sim::Outcome::Stopped => {
                let v = check_atomic(&run.config.history).map_err(|e| CliError::Config(e.to_string()))?;
                if v.ok {
                    continue;
                }
                let reason = v.violation.as_ref().map_or(String::new(), |x| x.reason.clone());
                (reason, Some(v), run.config.history.to_jsonl())
            }
            Ok(run) => ("no termination: quiescent".to_string(), None, run.config.history.to_jsonl()),
            Err(e @ SimError::NonTermination { .. }) => (e.to_string(), None, String::new()),
            Err(e) => return Err(CliError::Config(e.to_string())),
        };
        violations += 1;
        if first.is_none() {
            first = Some(SweepViolation { seed, failed: failed.into_iter().collect(), reason, verdict, history });
        }
    }
    Ok(SweepReport { algorithm: sim.proto.name(), n, f, ops, seeds: seeds.len(), violations, ok: violations == 0, first_violation: first })
}
