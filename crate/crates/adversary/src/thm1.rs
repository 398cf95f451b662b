use std::collections::BTreeSet;

use num_bigint::BigUint;
use regmem_bounds::ProductForm;
use regmem_sim::{Op, Protocol, Sim, Value};

use crate::report::Family;
use crate::{all_channels, fail_complement, states, Result, StateFingerprint, Variant, WitnessParams, WitnessReport, READER, WRITER};

/// One write per value over the live servers, then every channel drains;
/// the live server states must separate the values.
pub fn witness_thm1<P: Protocol + Clone>(sim: &Sim<P>, live: &[usize], values: &[Value]) -> Result<WitnessReport> {
    let n = sim.proto.servers();
    let mut base = fail_complement(sim, &sim.initial(1, 1), live)?;
    base.freeze_node(READER);
    let channels = all_channels(sim, &base);
    let mut fam = Family::default();
    for &v in values {
        let mut cfg = base.clone();
        cfg.schedule(WRITER, Op::Write(v));
        let ex = sim.run_fair(&cfg, &BTreeSet::new(), &|c| c.completed(WRITER) == 1, 0)?;
        for p in &ex.points {
            fam.observe(p, live);
        }
        let flush = sim.deliver_all(ex.last(), &channels)?;
        for p in &flush.points {
            fam.observe(p, live);
        }
        fam.insert(vec![v], StateFingerprint::plain(Variant::Thm1, states(flush.last(), live)?));
    }
    let params = WitnessParams {
        theorem: 1,
        algorithm: sim.proto.name(),
        n,
        f: n - live.len(),
        nu: 1,
        domain: values.len() as u64,
        servers: live.to_vec(),
        family_size: fam.len(),
        hypothesis: "within stated hypothesis".into(),
    };
    let form = ProductForm { factor: BigUint::from(1u8), max_power: 0, rhs: BigUint::from(values.len()) };
    Ok(fam.report(params, &form, vec![], vec![], vec![]))
}
