use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ConsistencyError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpKind {
    Write,
    Read,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Invoke,
    Respond,
}

/// One invocation or response. Writes carry their value on invoke, reads on
/// respond.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    pub op: u64,
    pub client: String,
    pub kind: OpKind,
    pub phase: Phase,
    pub value: Option<u64>,
    pub point: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct History {
    pub initial: u64,
    pub events: Vec<Event>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Operation {
    pub id: u64,
    pub client: String,
    pub kind: OpKind,
    /// Written value for writes, returned value for completed reads.
    pub value: Option<u64>,
    pub invoke: u64,
    pub respond: Option<u64>,
}

impl Operation {
    pub fn is_complete(&self) -> bool {
        self.respond.is_some()
    }

    /// Real-time precedence: self responded before other was invoked.
    pub fn precedes(&self, other: &Operation) -> bool {
        matches!(self.respond, Some(r) if r < other.invoke)
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    initial: u64,
}

impl History {
    pub fn new(initial: u64) -> Self {
        History { initial, events: Vec::new() }
    }

    pub fn push(&mut self, e: Event) {
        self.events.push(e);
    }

    /// Pairs invocations with responses and validates the per-client
    /// sequential discipline.
    pub fn operations(&self) -> Result<Vec<Operation>, ConsistencyError> {
        let bad = |s: String| Err(ConsistencyError::MalformedHistory(s));
        let mut ops: BTreeMap<u64, Operation> = BTreeMap::new();
        let mut open: BTreeMap<&str, u64> = BTreeMap::new();
        for e in &self.events {
            match e.phase {
                Phase::Invoke => {
                    if ops.contains_key(&e.op) {
                        return bad(format!("operation {} invoked twice", e.op));
                    }
                    if let Some(prev) = open.get(e.client.as_str()) {
                        return bad(format!("client {} invoked {} while {} pending", e.client, e.op, prev));
                    }
                    match (e.kind, e.value) {
                        (OpKind::Write, None) => return bad(format!("write {} has no value", e.op)),
                        (OpKind::Read, Some(_)) => return bad(format!("read {} carries a value on invoke", e.op)),
                        _ => {}
                    }
                    open.insert(&e.client, e.op);
                    ops.insert(
                        e.op,
                        Operation { id: e.op, client: e.client.clone(), kind: e.kind, value: e.value, invoke: e.point, respond: None },
                    );
                }
                Phase::Respond => {
                    let Some(op) = ops.get_mut(&e.op) else {
                        return bad(format!("response to unknown operation {}", e.op));
                    };
                    if op.respond.is_some() {
                        return bad(format!("operation {} responded twice", e.op));
                    }
                    if op.kind != e.kind || op.client != e.client {
                        return bad(format!("response to {} does not match its invocation", e.op));
                    }
                    if e.point <= op.invoke {
                        return bad(format!("operation {} responds at or before its invocation", e.op));
                    }
                    if op.kind == OpKind::Read {
                        if e.value.is_none() {
                            return bad(format!("read {} returned no value", e.op));
                        }
                        op.value = e.value;
                    }
                    op.respond = Some(e.point);
                    open.remove(e.client.as_str());
                }
            }
        }
        let mut v: Vec<Operation> = ops.into_values().collect();
        v.sort_by_key(|o| (o.invoke, o.id));
        Ok(v)
    }

    /// First line is a header with the initial value, then one event per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&Header { initial: self.initial }).unwrap();
        out.push('\n');
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).unwrap());
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, ConsistencyError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Header = match lines.next() {
            Some(l) => serde_json::from_str(l).map_err(|e| ConsistencyError::Parse(e.to_string()))?,
            None => return Err(ConsistencyError::Parse("missing header line".into())),
        };
        let mut h = History::new(header.initial);
        for l in lines {
            h.push(serde_json::from_str(l).map_err(|e| ConsistencyError::Parse(e.to_string()))?);
        }
        Ok(h)
    }
}
