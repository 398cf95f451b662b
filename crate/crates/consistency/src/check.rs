use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::{ConsistencyError, History, OpKind, Operation};

pub const DEFAULT_MAX_OPS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub read: u64,
    pub returned: Option<u64>,
    /// Writes the read could have been matched against.
    pub candidates: Vec<u64>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub ok: bool,
    /// Operation ids in serialization order, when one was found.
    pub order: Option<Vec<u64>>,
    pub violation: Option<Violation>,
}

impl Verdict {
    fn pass(order: Option<Vec<u64>>) -> Self {
        Verdict { ok: true, order, violation: None }
    }

    fn fail(v: Violation) -> Self {
        Verdict { ok: false, order: None, violation: Some(v) }
    }
}

fn single_reader(ops: &[Operation]) -> Result<(), ConsistencyError> {
    let readers: BTreeSet<&str> = ops.iter().filter(|o| o.kind == OpKind::Read).map(|o| o.client.as_str()).collect();
    if readers.len() > 1 {
        return Err(ConsistencyError::Precondition(format!("{} readers, expected one", readers.len())));
    }
    Ok(())
}

/// Single-writer regularity. Reads must be complete.
pub fn check_regular(h: &History) -> Result<Verdict, ConsistencyError> {
    let ops = h.operations()?;
    single_reader(&ops)?;
    let writers: BTreeSet<&str> = ops.iter().filter(|o| o.kind == OpKind::Write).map(|o| o.client.as_str()).collect();
    if writers.len() > 1 {
        return Err(ConsistencyError::Precondition(format!("{} writers, expected one", writers.len())));
    }
    let writes: Vec<&Operation> = ops.iter().filter(|o| o.kind == OpKind::Write).collect();
    for r in ops.iter().filter(|o| o.kind == OpKind::Read) {
        let Some(r_end) = r.respond else {
            return Err(ConsistencyError::Precondition(format!("read {} is incomplete", r.id)));
        };
        let latest = writes.iter().filter(|w| w.precedes(r)).max_by_key(|w| w.respond);
        let mut allowed = vec![latest.map_or(h.initial, |w| w.value.unwrap())];
        let mut candidates: Vec<u64> = latest.iter().map(|w| w.id).collect();
        for w in writes.iter().filter(|w| !w.precedes(r) && w.invoke < r_end) {
            allowed.push(w.value.unwrap());
            candidates.push(w.id);
        }
        if !allowed.contains(&r.value.unwrap()) {
            return Ok(Verdict::fail(Violation {
                read: r.id,
                returned: r.value,
                candidates,
                reason: format!("returned {} but only {:?} are allowed", r.value.unwrap(), allowed),
            }));
        }
    }
    Ok(Verdict::pass(None))
}

pub fn check_atomic(h: &History) -> Result<Verdict, ConsistencyError> {
    check_atomic_with_budget(h, DEFAULT_MAX_OPS)
}

pub fn check_atomic_with_budget(h: &History, max_ops: usize) -> Result<Verdict, ConsistencyError> {
    let ops = h.operations()?;
    single_reader(&ops)?;
    let relevant: Vec<Operation> = ops.into_iter().filter(|o| o.kind == OpKind::Write || o.is_complete()).collect();
    if relevant.len() > max_ops {
        return Err(ConsistencyError::SearchBudgetExceeded { ops: relevant.len(), max: max_ops });
    }
    if let Some(order) = linearize(&relevant, h.initial) {
        return Ok(Verdict::pass(Some(order)));
    }
    Ok(Verdict::fail(first_failing_read(&relevant, h.initial)))
}

/// For each read separately, the read plus the complete writes plus some
/// subset of incomplete writes must linearize.
pub fn check_weakly_regular(h: &History) -> Result<Verdict, ConsistencyError> {
    let ops = h.operations()?;
    single_reader(&ops)?;
    let writes: Vec<Operation> = ops.iter().filter(|o| o.kind == OpKind::Write).cloned().collect();
    if writes.len() + 1 > DEFAULT_MAX_OPS {
        return Err(ConsistencyError::SearchBudgetExceeded { ops: writes.len() + 1, max: DEFAULT_MAX_OPS });
    }
    for r in ops.iter().filter(|o| o.kind == OpKind::Read && o.is_complete()) {
        let mut sub = writes.clone();
        sub.push(r.clone());
        if linearize(&sub, h.initial).is_none() {
            return Ok(Verdict::fail(Violation {
                read: r.id,
                returned: r.value,
                candidates: writes.iter().filter(|w| w.invoke < r.respond.unwrap()).map(|w| w.id).collect(),
                reason: "no subset of incomplete writes serializes with this read".into(),
            }));
        }
    }
    Ok(Verdict::pass(None))
}

/// Depth-first search over precedence-respecting orders. Incomplete writes
/// may be left out; everything else must be placed.
fn linearize(ops: &[Operation], initial: u64) -> Option<Vec<u64>> {
    let n = ops.len();
    assert!(n <= 63);
    let preds: Vec<u64> = (0..n)
        .map(|i| (0..n).filter(|&j| ops[j].precedes(&ops[i])).fold(0u64, |m, j| m | 1 << j))
        .collect();
    let required: u64 = (0..n).filter(|&i| ops[i].is_complete()).fold(0, |m, i| m | 1 << i);
    let mut seen: HashSet<(u64, u64)> = HashSet::new();
    let mut order = Vec::new();
    if dfs(ops, &preds, required, 0, initial, &mut seen, &mut order) {
        Some(order.iter().map(|&i| ops[i].id).collect())
    } else {
        None
    }
}

fn dfs(
    ops: &[Operation],
    preds: &[u64],
    required: u64,
    done: u64,
    value: u64,
    seen: &mut HashSet<(u64, u64)>,
    order: &mut Vec<usize>,
) -> bool {
    if done & required == required {
        return true;
    }
    if !seen.insert((done, value)) {
        return false;
    }
    for i in 0..ops.len() {
        if done >> i & 1 == 1 || preds[i] & !done != 0 {
            continue;
        }
        let next = match ops[i].kind {
            OpKind::Write => ops[i].value.unwrap(),
            OpKind::Read => {
                if ops[i].value != Some(value) {
                    continue;
                }
                value
            }
        };
        order.push(i);
        if dfs(ops, preds, required, done | 1 << i, next, seen, order) {
            return true;
        }
        order.pop();
    }
    false
}

/// Names the earliest-responding read whose prefix already fails to linearize.
fn first_failing_read(ops: &[Operation], initial: u64) -> Violation {
    let mut reads: Vec<&Operation> = ops.iter().filter(|o| o.kind == OpKind::Read).collect();
    reads.sort_by_key(|r| r.respond);
    for r in &reads {
        let cut = r.respond.unwrap();
        let prefix: Vec<Operation> = ops
            .iter()
            .filter(|o| o.invoke < cut)
            .map(|o| {
                let mut o = o.clone();
                if o.respond.is_some_and(|x| x > cut) {
                    o.respond = None;
                }
                o
            })
            .filter(|o| o.kind == OpKind::Write || o.is_complete())
            .collect();
        if linearize(&prefix, initial).is_none() {
            return Violation {
                read: r.id,
                returned: r.value,
                candidates: prefix.iter().filter(|o| o.kind == OpKind::Write).map(|o| o.id).collect(),
                reason: "no linearization of the history up to this read's response".into(),
            };
        }
    }
    Violation { read: 0, returned: None, candidates: vec![], reason: "no linearization".into() }
}
