use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::CliError;

/// Settings that may come from a JSON file. Command-line flags override
/// every field.
#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(alias = "N")]
    pub n: Option<usize>,
    pub f: Option<usize>,
    pub nu: Option<usize>,
    pub nu_max: Option<u64>,
    pub domain: Option<u64>,
    pub algorithm: Option<String>,
    pub theorem: Option<u8>,
    pub live: Option<Vec<usize>>,
    pub seeds: Option<Vec<u64>>,
    pub seed_count: Option<u64>,
    pub ops: Option<usize>,
    pub expect_violation: Option<bool>,
    pub out: Option<PathBuf>,
    pub step_budget: Option<u64>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn load_opt(path: Option<&Path>) -> Result<Self, CliError> {
        path.map_or(Ok(Self::default()), Self::load)
    }

    /// Fields set in `flags` replace those loaded from the file.
    pub fn overlay(self, flags: ExperimentConfig) -> Self {
        ExperimentConfig {
            n: flags.n.or(self.n),
            f: flags.f.or(self.f),
            nu: flags.nu.or(self.nu),
            nu_max: flags.nu_max.or(self.nu_max),
            domain: flags.domain.or(self.domain),
            algorithm: flags.algorithm.or(self.algorithm),
            theorem: flags.theorem.or(self.theorem),
            live: flags.live.or(self.live),
            seeds: flags.seeds.or(self.seeds),
            seed_count: flags.seed_count.or(self.seed_count),
            ops: flags.ops.or(self.ops),
            expect_violation: flags.expect_violation.or(self.expect_violation),
            out: flags.out.or(self.out),
            step_budget: flags.step_budget.or(self.step_budget),
        }
    }

    pub fn require<T: Clone>(v: &Option<T>, name: &str) -> Result<T, CliError> {
        v.clone().ok_or_else(|| CliError::Config(format!("missing {name}")))
    }

    /// Flag or file value, then REGMEM_STEP_BUDGET, then the engine default.
    pub fn budget(&self) -> Result<u64, CliError> {
        if let Some(b) = self.step_budget {
            return Ok(b);
        }
        match std::env::var("REGMEM_STEP_BUDGET") {
            Ok(s) => s.trim().parse().map_err(|_| CliError::Config(format!("REGMEM_STEP_BUDGET={s} is not an integer"))),
            Err(_) => Ok(regmem_sim::DEFAULT_STEP_BUDGET),
        }
    }

    /// Seeds to sweep: an explicit list or 0..seed_count.
    pub fn seed_list(&self, default_count: u64) -> Vec<u64> {
        match (&self.seeds, self.seed_count) {
            (_, Some(k)) => (0..k).collect(),
            (Some(v), None) => v.clone(),
            (None, None) => (0..default_count).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win() {
        let file: ExperimentConfig = serde_json::from_str(r#"{"N": 5, "f": 2, "algorithm": "coded"}"#).unwrap();
        let flags = ExperimentConfig { n: Some(3), ..Default::default() };
        let c = file.overlay(flags);
        assert_eq!((c.n, c.f, c.algorithm.as_deref()), (Some(3), Some(2), Some("coded")));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"nn": 1}"#).is_err());
    }

    #[test]
    fn seed_count_overrides_list() {
        let c = ExperimentConfig { seeds: Some(vec![7, 9]), ..Default::default() };
        assert_eq!(c.seed_list(3), vec![7, 9]);
        let c = ExperimentConfig { seed_count: Some(2), ..c };
        assert_eq!(c.seed_list(3), vec![0, 1]);
    }
}
