use regmem_algorithms::{abd_spec, abd_spec_unchecked, coded_gossip_spec, coded_spec, xor_demo_spec, Abd, AbdOptions, Coded, CodedOptions, XorDemo};

use crate::CliError;

pub enum AnyAlgorithm {
    Abd(Abd),
    Coded(Coded),
    Xor(XorDemo),
}

impl AnyAlgorithm {
    /// `relaxed` admits ABD with N <= 2f, where only a subset of servers
    /// is ever live.
    pub fn build(name: &str, n: usize, f: usize, nu: usize, domain: u64, relaxed: bool) -> Result<Self, CliError> {
        let bad = |e: regmem_algorithms::AlgoError| CliError::Config(e.to_string());
        Ok(match name {
            "abd" if relaxed => AnyAlgorithm::Abd(abd_spec_unchecked(n, f, domain, AbdOptions::default()).map_err(bad)?),
            "abd" => AnyAlgorithm::Abd(abd_spec(n, f, domain).map_err(bad)?),
            "abd-mutant" => AnyAlgorithm::Abd(abd_spec_unchecked(n, f, domain, AbdOptions { ignore_second_value: true }).map_err(bad)?),
            "coded" => AnyAlgorithm::Coded(coded_spec(n, f, nu, domain).map_err(bad)?),
            "coded-gossip" => AnyAlgorithm::Coded(coded_gossip_spec(n, f, nu, domain).map_err(bad)?),
            "coded-hash" => AnyAlgorithm::Coded(Coded::new(n, f, nu, domain, CodedOptions { gossip: false, hash_in_finalize: true }).map_err(bad)?),
            "xor-demo" => AnyAlgorithm::Xor(xor_demo_spec()),
            other => return Err(CliError::Config(format!("unknown algorithm {other:?}"))),
        })
    }
}
