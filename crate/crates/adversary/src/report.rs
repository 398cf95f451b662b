use std::collections::BTreeMap;

use regmem_bounds::ProductForm;
use regmem_sim::{Configuration, Protocol, ReachableStateLedger, Value};
use serde::Serialize;

use crate::StateFingerprint;

pub const PROBE_DISCLOSURE: &str = "valency is probed with one canonical fair extension per point; a probe returning v witnesses that the point is v-valent, while a probe returning another value only approximates the absence of that valency";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WitnessParams {
    pub theorem: u8,
    pub algorithm: String,
    pub n: usize,
    pub f: usize,
    pub nu: usize,
    pub domain: u64,
    /// Servers whose states enter the fingerprint.
    pub servers: Vec<usize>,
    pub family_size: usize,
    pub hypothesis: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FingerprintEntry {
    pub digest: String,
    pub multiplicity: usize,
    pub inputs: Vec<Vec<Value>>,
    pub changed_servers: Vec<usize>,
    pub sigma: Vec<usize>,
    pub thresholds: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Collision {
    pub a: Vec<Value>,
    pub b: Vec<Value>,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProductCheck {
    /// (server, distinct states observed)
    pub counts: Vec<(usize, u64)>,
    pub lhs: String,
    pub rhs: String,
    pub holds: bool,
}

impl ProductCheck {
    pub fn new(form: &ProductForm, servers: &[usize], ledger: &ReachableStateLedger) -> Self {
        let counts: Vec<u64> = ledger.counts(servers).into_iter().map(|c| c as u64).collect();
        let lhs = form.lhs(&counts);
        ProductCheck {
            counts: servers.iter().copied().zip(counts).collect(),
            holds: lhs >= form.rhs,
            lhs: lhs.to_string(),
            rhs: form.rhs.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, ok: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), ok, detail: detail.into() }
    }
}

/// A prefix of one execution followed by the probe extension of another.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Splice {
    pub prefix: Vec<Value>,
    pub extension: Vec<Value>,
    pub point: String,
    /// The extension's steps applied verbatim; false when a fresh canonical
    /// run had to be used instead.
    pub replayed: bool,
    pub read_value: Value,
    pub regular: bool,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WitnessReport {
    pub params: WitnessParams,
    pub fingerprints: Vec<FingerprintEntry>,
    pub distinct: usize,
    pub injective: bool,
    pub collisions: Vec<Collision>,
    /// Counts over every state recorded along the witness executions.
    pub product: ProductCheck,
    /// Counts over fingerprint states only.
    pub product_fingerprint_only: ProductCheck,
    pub checks: Vec<Check>,
    pub splices: Vec<Splice>,
    pub notes: Vec<String>,
    pub disclosure: String,
}

impl WitnessReport {
    /// Injectivity, the product inequality and every recorded check.
    pub fn ok(&self) -> bool {
        self.injective && self.product.holds && self.checks.iter().all(|c| c.ok)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Fingerprints of a witness family plus the states seen along the way.
#[derive(Debug, Default)]
pub(crate) struct Family {
    map: BTreeMap<StateFingerprint, Vec<Vec<Value>>>,
    pub all: ReachableStateLedger,
    pub fp: ReachableStateLedger,
    size: usize,
}

impl Family {
    pub fn insert(&mut self, input: Vec<Value>, fp: StateFingerprint) {
        for (s, st) in fp.states.iter().chain(&fp.changed) {
            self.fp.record(*s, st.clone());
            self.all.record(*s, st.clone());
        }
        self.map.entry(fp).or_default().push(input);
        self.size += 1;
    }

    pub fn observe<P: Protocol>(&mut self, cfg: &Configuration<P>, servers: &[usize]) {
        self.all.record_config(cfg, servers);
    }

    pub fn entries(&self) -> Vec<FingerprintEntry> {
        let mut v: Vec<FingerprintEntry> = self
            .map
            .iter()
            .map(|(fp, inputs)| FingerprintEntry {
                digest: fp.digest(),
                multiplicity: inputs.len(),
                inputs: inputs.clone(),
                changed_servers: fp.changed.iter().map(|c| c.0).collect(),
                sigma: fp.sigma.clone(),
                thresholds: fp.thresholds.clone(),
            })
            .collect();
        v.sort_by(|a, b| a.inputs.cmp(&b.inputs));
        v
    }

    pub fn collisions(&self) -> Vec<Collision> {
        let mut out = vec![];
        for (fp, inputs) in &self.map {
            for i in 0..inputs.len() {
                for j in i + 1..inputs.len() {
                    out.push(Collision { a: inputs[i].clone(), b: inputs[j].clone(), digest: fp.digest() });
                }
            }
        }
        out.sort_by(|x, y| (&x.a, &x.b).cmp(&(&y.a, &y.b)));
        out
    }

    pub fn report(self, params: WitnessParams, form: &ProductForm, checks: Vec<Check>, splices: Vec<Splice>, notes: Vec<String>) -> WitnessReport {
        let collisions = self.collisions();
        let servers = params.servers.clone();
        WitnessReport {
            fingerprints: self.entries(),
            distinct: self.map.len(),
            injective: collisions.is_empty(),
            collisions,
            product: ProductCheck::new(form, &servers, &self.all),
            product_fingerprint_only: ProductCheck::new(form, &servers, &self.fp),
            checks,
            splices,
            notes,
            disclosure: PROBE_DISCLOSURE.into(),
            params,
        }
    }

    pub fn len(&self) -> usize {
        self.size
    }
}

pub(crate) fn summarize(total: usize, bad: &[String]) -> String {
    match bad.first() {
        None => format!("{total} checked"),
        Some(first) => format!("{} of {total} failed, first {first}", bad.len()),
    }
}
