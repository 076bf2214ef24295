//! Record of a command run: enough to reproduce its outputs bit for bit.

use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::sim::{StepCounters, RNG_ALGORITHM};

/// Where the effective seed came from; earlier variants take precedence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedSource {
    Flag,
    Environment,
    ConfigFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub code_version: String,
    /// Effective configuration after flags and environment are applied.
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub seed_source: Option<SeedSource>,
    pub rng_algorithm: Option<String>,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
    pub outputs: Vec<PathBuf>,
    pub counters: Option<StepCounters>,
}

pub(crate) fn now_unix_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

impl RunManifest {
    /// Starts a manifest at the current time.
    pub fn start(command: &str, config: serde_json::Value) -> Self {
        let now = now_unix_ms();
        RunManifest {
            command: command.to_string(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            seed: None,
            seed_source: None,
            rng_algorithm: None,
            started_unix_ms: now,
            finished_unix_ms: now,
            outputs: Vec::new(),
            counters: None,
        }
    }

    pub fn with_seed(mut self, seed: u64, source: SeedSource) -> Self {
        self.seed = Some(seed);
        self.seed_source = Some(source);
        self.rng_algorithm = Some(RNG_ALGORITHM.to_string());
        self
    }

    pub fn finish(&mut self, outputs: Vec<PathBuf>, counters: Option<StepCounters>) {
        self.outputs = outputs;
        self.counters = counters;
        self.finished_unix_ms = now_unix_ms();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trips() {
        let mut m = RunManifest::start("simulate", serde_json::json!({"horizon": 10})).with_seed(7, SeedSource::Environment);
        m.finish(vec![PathBuf::from("out.csv")], Some(StepCounters::default()));
        assert!(m.finished_unix_ms >= m.started_unix_ms);
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.contains("\"seed_source\":\"environment\""));
        assert_eq!(serde_json::from_str::<RunManifest>(&json).unwrap(), m);
    }
}
