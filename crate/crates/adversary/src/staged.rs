use std::collections::BTreeSet;

use regmem_algorithms::{validate_assumptions, RestrictedProtocol};
use regmem_bounds::{BoundParams, ProductForm, Theorem, THM4_COUNT_NOTE};
use regmem_sim::{ActorId, ChannelId, Configuration, Node, Op, Outcome, Protocol, Sim, Value};
use serde::Serialize;

use crate::report::{summarize, Family};
use crate::twowrite::{read_from, trace_digest};
use crate::{
    fail_complement, states, unfreeze, AdversaryError, Check, ProbeMode, Result, StateFingerprint, ValencyProbeResult, Variant,
    WitnessParams, WitnessReport, READER,
};

fn writer(i: usize) -> Node {
    Node::Writer(i - 1)
}

/// Points P_1..P_k of a staged delivery, after the common prefix P_0.
#[derive(Debug, Clone)]
pub struct StagedExecution<P: Protocol> {
    pub p0: Configuration<P>,
    pub points: Vec<Configuration<P>>,
    pub sigma: Vec<usize>,
    pub thresholds: Vec<usize>,
}

impl<P: Protocol> StagedExecution<P> {
    /// P_i, with P_0 the prefix.
    pub fn point(&self, i: usize) -> &Configuration<P> {
        if i == 0 {
            &self.p0
        } else {
            &self.points[i - 1]
        }
    }
}

/// The common prefix: the last f + 1 - nu servers fail, writer i runs alone
/// until it has sent its value-dependent messages, which then stay in the
/// channels; finally inter-server and value-independent client messages are
/// delivered.
pub fn build_alpha0<P: RestrictedProtocol + Clone>(sim: &Sim<P>, f: usize, values: &[Value]) -> Result<Configuration<P>> {
    validate_assumptions(&sim.proto)?;
    let n = sim.proto.servers();
    let nu = values.len();
    if nu == 0 || nu > f + 1 || f >= n {
        return Err(AdversaryError::Precondition(format!("need 1 <= nu <= f + 1 and f < N, got nu = {nu}, f = {f}, N = {n}")));
    }
    let distinct: BTreeSet<Value> = values.iter().copied().collect();
    if distinct.len() != nu || distinct.contains(&sim.proto.initial_value()) {
        return Err(AdversaryError::Precondition(format!("values {values:?} must be distinct and differ from the initial value")));
    }
    let live: Vec<usize> = (1..=n - f + nu - 1).collect();
    let mut cfg = fail_complement(sim, &sim.initial(nu, 1), &live)?;
    cfg.freeze_node(READER);
    for i in 1..=nu {
        let w = writer(i);
        cfg.schedule(w, Op::Write(values[i - 1]));
        let others: BTreeSet<ActorId> = (1..=nu).filter(|&j| j != i).map(|j| ActorId::Node(writer(j))).collect();
        let ex = sim.run_fair(&cfg, &others, &|c| c.has_vd_from(w) || c.completed(w) > 0, 0)?;
        let mut next = ex.last().clone();
        if next.completed(w) > 0 {
            return Err(AdversaryError::Precondition(format!("writer {i} completed without a value-dependent send")));
        }
        for a in &others {
            next.frozen.remove(a);
        }
        next.held.insert(w);
        cfg = next;
    }
    cfg = sim.deliver_all(&cfg, &sim.server_channels(&cfg))?.last().clone();
    let from_writers: Vec<ChannelId> = (1..=nu).flat_map(|i| sim.channels_from(&cfg, writer(i))).filter(|c| c.dst.is_server()).collect();
    Ok(sim.deliver_all(&cfg, &from_writers)?.last().clone())
}

fn deliver_vd<P: Protocol>(sim: &Sim<P>, cfg: &Configuration<P>, writers: &[usize], servers: std::ops::RangeInclusive<usize>) -> Result<Configuration<P>> {
    let mut cur = cfg.clone();
    for s in servers {
        for &i in writers {
            let w = writer(i);
            let was_held = cur.held.remove(&w);
            cur = sim.deliver_all(&cur, &[ChannelId::new(w, Node::Server(s))])?.last().clone();
            if was_held {
                cur.held.insert(w);
            }
        }
    }
    Ok(cur)
}

/// Staged delivery from `p0`: servers 1..=a_1 receive the held messages of
/// every writer, then for each later stage i the servers in
/// (a_{i-1}, a_i] receive those of the writers outside sigma(1..i-1).
/// Fewer thresholds than writers yield a prefix of the stages.
pub fn build_staged_execution<P: Protocol>(sim: &Sim<P>, p0: &Configuration<P>, sigma: &[usize], thresholds: &[usize]) -> Result<StagedExecution<P>> {
    let nu = p0.clients.keys().filter(|c| matches!(c, Node::Writer(_))).count();
    let width = p0.n() - p0.failed.len();
    if thresholds.len() > nu || thresholds.windows(2).any(|w| w[0] > w[1]) || thresholds.iter().any(|&a| a > width) {
        return Err(AdversaryError::Precondition(format!("thresholds {thresholds:?} must be nondecreasing, at most {nu} long and at most {width}")));
    }
    if sigma.len() + 1 < thresholds.len() || sigma.iter().any(|&i| i == 0 || i > nu) {
        return Err(AdversaryError::Precondition(format!("order {sigma:?} does not cover {} stages of {nu} writers", thresholds.len())));
    }
    let mut points = vec![];
    let mut cur = p0.clone();
    for (k, &a) in thresholds.iter().enumerate() {
        let lo = if k == 0 { 1 } else { thresholds[k - 1] + 1 };
        let senders: Vec<usize> = (1..=nu).filter(|i| !sigma[..k].contains(i)).collect();
        if a >= lo {
            cur = deliver_vd(sim, &cur, &senders, lo..=a)?;
        }
        points.push(cur.clone());
    }
    Ok(StagedExecution { p0: p0.clone(), points, sigma: sigma.to_vec(), thresholds: thresholds.to_vec() })
}

/// Valency probe where the `restrained` writers neither send nor have
/// delivered any value-dependent message. Everything else runs fairly
/// until some write completes or nothing can move, then the writers stop
/// and one read runs to completion.
pub fn probe_restrained<P: Protocol>(sim: &Sim<P>, cfg: &Configuration<P>, restrained: &BTreeSet<usize>) -> Result<ValencyProbeResult> {
    let mut c = cfg.clone();
    let writers: Vec<Node> = c.clients.keys().copied().filter(|n| matches!(n, Node::Writer(_))).collect();
    for w in &writers {
        c.held.remove(w);
    }
    c.held.extend(restrained.iter().map(|&i| writer(i)));
    let done: Vec<(Node, u64)> = writers.iter().map(|&w| (w, c.completed(w))).collect();
    let run = sim.run_fair_summary(&c, &|x| done.iter().any(|&(w, k)| x.completed(w) > k), 0)?;
    debug_assert!(matches!(run.outcome, Outcome::Stopped | Outcome::Quiescent));
    let mut c = run.config;
    for &w in &writers {
        c.freeze_node(w);
    }
    unfreeze(&mut c, READER);
    let (value, ex) = read_from(sim, &c)?;
    Ok(ValencyProbeResult {
        value,
        mode: ProbeMode::Restrained,
        frozen: restrained.iter().map(|&i| writer(i).to_string()).collect(),
        trace_digest: format!("{}:{}", run.trace_digest, trace_digest(&ex.steps)),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Lemma2Outcome {
    /// Writer order, 1-based.
    pub sigma: Vec<usize>,
    pub a: Vec<usize>,
    /// Qualifying (threshold, writer) pairs at each chosen threshold.
    pub members: Vec<Vec<(usize, usize)>>,
    pub probes: usize,
}

impl Lemma2Outcome {
    pub fn first_positive(&self) -> bool {
        self.a.first().is_some_and(|&a| a >= 1)
    }

    pub fn strictly_increasing(&self) -> bool {
        self.a.windows(2).all(|w| w[0] < w[1])
    }

    /// Thresholds (a_1 - 1, .., a_{i-1} - 1, a_i) used for stage i.
    pub fn stage_thresholds(&self, i: usize) -> Vec<usize> {
        decremented(&self.a[..i - 1], self.a[i - 1])
    }
}

fn decremented(prev: &[usize], last: usize) -> Vec<usize> {
    prev.iter().map(|a| a.saturating_sub(1)).chain([last]).collect()
}

/// Chooses thresholds and an order stage by stage: a_i is the smallest
/// threshold at which some writer j outside sigma(1..i-1) is witnessed
/// j-valent with sigma(1..i-1) and j restrained; sigma(i) is the qualifying
/// writer with the smallest value.
pub fn lemma2_search<P: Protocol>(sim: &Sim<P>, p0: &Configuration<P>, values: &[Value], f: usize) -> Result<Lemma2Outcome> {
    let nu = values.len();
    let n = p0.n();
    let mut out = Lemma2Outcome { sigma: vec![], a: vec![], members: vec![], probes: 0 };
    for i in 1..=nu {
        let lo = out.a.last().copied().unwrap_or(0);
        let hi = n - f + i - 1;
        let mut chosen = None;
        for cand in lo..=hi {
            let th = decremented(&out.a, cand);
            let staged = build_staged_execution(sim, p0, &out.sigma, &th)?;
            let point = staged.point(i);
            let mut members = vec![];
            for j in (1..=nu).filter(|j| !out.sigma.contains(j)) {
                let restrained: BTreeSet<usize> = out.sigma.iter().copied().chain([j]).collect();
                out.probes += 1;
                if probe_restrained(sim, point, &restrained)?.value == values[j - 1] {
                    members.push((cand, j));
                }
            }
            if let Some(&(_, j)) = members.iter().min_by_key(|(_, j)| values[j - 1]) {
                chosen = Some((cand, j, members));
                break;
            }
        }
        let Some((a, j, members)) = chosen else {
            return Err(AdversaryError::SearchFailed(format!("stage {i}: no threshold in {lo}..={hi} qualifies after {:?}", out.a)));
        };
        out.a.push(a);
        out.sigma.push(j);
        out.members.push(members);
    }
    Ok(out)
}

fn metadata_view<P: RestrictedProtocol>(cfg: &Configuration<P>, proto: &P) -> Vec<Vec<u8>> {
    let mut v: Vec<Vec<u8>> = cfg
        .clients
        .iter()
        .filter(|(n, _)| matches!(n, Node::Writer(_)))
        .map(|(_, slot)| proto.writer_metadata(&slot.state))
        .collect();
    v.extend(cfg.channels.keys().filter(|c| c.src.is_server()).map(|&c| cfg.channel_bytes(c)));
    v
}

fn tuples(pool: &[Value], k: usize) -> Vec<Vec<Value>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = vec![];
    for &v in pool {
        let rest: Vec<Value> = pool.iter().copied().filter(|&x| x != v).collect();
        for mut t in tuples(&rest, k - 1) {
            t.insert(0, v);
            out.push(t);
        }
    }
    out
}

/// Staged-delivery witness over every ordered tuple of nu distinct
/// non-initial values from 0..domain.
pub fn witness_thm4<P: RestrictedProtocol + Clone>(sim: &Sim<P>, f: usize, domain: u64, nu: usize) -> Result<WitnessReport> {
    let n = sim.proto.servers();
    let v0 = sim.proto.initial_value();
    let pool: Vec<Value> = (0..domain).filter(|&v| v != v0).collect();
    if nu == 0 || pool.len() < nu {
        return Err(AdversaryError::Precondition(format!("need 1 <= nu <= |V| - 1, got nu = {nu}, |V| = {domain}")));
    }
    let width = n.checked_sub(f).map(|k| k + nu - 1).unwrap_or(0);
    let servers: Vec<usize> = (1..=width).collect();
    let mut fam = Family::default();
    let mut decremented_point = Family::default();
    let (mut not_positive, mut not_increasing, mut meta_bad) = (vec![], vec![], vec![]);
    let mut reference: Option<(Vec<Value>, Configuration<P>)> = None;
    let mut probes = 0;
    for t in tuples(&pool, nu) {
        let p0 = build_alpha0(sim, f, &t)?;
        let out = lemma2_search(sim, &p0, &t, f)?;
        probes += out.probes;
        if !out.first_positive() {
            not_positive.push(format!("{t:?} a = {:?}", out.a));
        }
        if !out.strictly_increasing() {
            not_increasing.push(format!("{t:?} a = {:?}", out.a));
        }
        let staged = build_staged_execution(sim, &p0, &out.sigma, &out.stage_thresholds(nu))?;
        let full = build_staged_execution(sim, &p0, &out.sigma, &out.a)?;
        fam.observe(&p0, &servers);
        for p in staged.points.iter().chain(&full.points) {
            fam.observe(p, &servers);
        }
        let fingerprint = |at: &Configuration<P>| -> Result<StateFingerprint> {
            Ok(StateFingerprint { variant: Variant::Thm4, states: states(at, &servers)?, changed: vec![], sigma: out.sigma.clone(), thresholds: out.a.clone() })
        };
        fam.insert(t.clone(), fingerprint(full.point(nu))?);
        decremented_point.insert(t.clone(), fingerprint(staged.point(nu))?);

        match &reference {
            None => reference = Some((t.clone(), p0.clone())),
            Some((rt, rp0)) => {
                let same0 = states(rp0, &servers)? == states(&p0, &servers)? && metadata_view(rp0, &sim.proto) == metadata_view(&p0, &sim.proto);
                if !same0 {
                    meta_bad.push(format!("{rt:?} vs {t:?} at P0"));
                }
                let other = build_staged_execution(sim, rp0, &out.sigma, &out.stage_thresholds(nu))?;
                for i in 1..=nu {
                    if metadata_view(other.point(i), &sim.proto) != metadata_view(staged.point(i), &sim.proto) {
                        meta_bad.push(format!("{rt:?} vs {t:?} at P{i}"));
                    }
                }
            }
        }
    }
    let family = fam.len();
    let checks = vec![
        Check::new("lemma2_first_threshold_positive", not_positive.is_empty(), summarize(family, &not_positive)),
        Check::new("lemma2_strictly_increasing", not_increasing.is_empty(), summarize(family, &not_increasing)),
        Check::new("metadata_invariance", meta_bad.is_empty(), summarize(family, &meta_bad)),
    ];
    let notes = vec![
        format!(
            "fingerprints are taken at P_nu with thresholds (a_1, .., a_nu); with thresholds (a_1 - 1, .., a_(nu-1) - 1, a_nu) they take {} distinct values over {family} tuples",
            decremented_point.entries().len()
        ),
        format!("{probes} restrained probes"),
        "metadata is compared across value vectors for equal order and thresholds; server replies to delivered messages enter the server-to-writer channels at staged points".into(),
        THM4_COUNT_NOTE.into(),
    ];
    let bp = BoundParams::new(n as u64, f as u64, nu as u64, domain).map_err(|e| AdversaryError::Precondition(e.to_string()))?;
    let params = WitnessParams {
        theorem: 4,
        algorithm: sim.proto.name(),
        n,
        f,
        nu,
        domain,
        servers,
        family_size: family,
        hypothesis: "within stated hypothesis".into(),
    };
    Ok(fam.report(params, &ProductForm::for_theorem(Theorem::Four, &bp), checks, vec![], notes))
}

