//! Stochastic engines: full network evolution for the three generative
//! models and the structure-free chain ensemble.
//!
//! Both produce degree histograms at snapshot times; the fraction of nodes at
//! degree `k` estimates the time-averaged `P(k, t)`.

pub mod chains;
pub mod graph;
pub mod models;
pub mod rng;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::{KernelError, ModelPreset, ModelVariant};

pub use chains::{run_chain_ensemble, run_chain_replica, ChainConfig};
pub use graph::{EdgeId, NetworkState, NodeId};
pub use models::{seed_graph, step, step_model1, step_model2, step_model3, MultiEdgePolicy, StepCounters};
pub use rng::{replica_rng, RNG_ALGORITHM};

/// Steps between full recounts of the degree histogram.
pub const CONSISTENCY_INTERVAL: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("infeasible seed graph with m0 = {m0}, N0 = {n0}: {reason}")]
    InfeasibleSeed { m0: u32, n0: u64, reason: String },
    #[error("no admissible edge or endpoint at step {step}")]
    Deadlock { step: u64 },
    #[error("total degree {actual} differs from {expected} after step {step}")]
    DegreeSumViolated { step: u64, expected: u64, actual: u64 },
    #[error("degree histogram disagrees with the adjacency after step {step}")]
    InconsistentHistogram { step: u64 },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}

/// Node counts by degree plus nodes beyond the tracked range.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DegreeHistogram {
    counts: Vec<u64>,
    #[serde(default)]
    overflow: u64,
}

impl DegreeHistogram {
    pub fn new(counts: Vec<u64>, overflow: u64) -> Self {
        DegreeHistogram { counts, overflow }
    }

    /// Histogram of observed degrees.
    pub fn from_degrees<I: IntoIterator<Item = usize>>(degrees: I) -> Self {
        let mut h = DegreeHistogram::default();
        for k in degrees {
            h.add(k, 1);
        }
        h
    }

    pub fn add(&mut self, k: usize, count: u64) {
        if k >= self.counts.len() {
            self.counts.resize(k + 1, 0);
        }
        self.counts[k] += count;
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn overflow(&self) -> u64 {
        self.overflow
    }

    /// All nodes, overflow included.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.overflow
    }

    pub fn count(&self, k: usize) -> u64 {
        self.counts.get(k).copied().unwrap_or(0)
    }

    pub fn max_degree(&self) -> Option<usize> {
        self.counts.iter().rposition(|&c| c > 0)
    }

    pub fn merge(&mut self, other: &DegreeHistogram) {
        for (k, &c) in other.counts.iter().enumerate() {
            if c > 0 {
                self.add(k, c);
            }
        }
        self.overflow += other.overflow;
    }

    /// Fractions of all nodes, overflow included in the denominator.
    pub fn fractions(&self) -> Vec<f64> {
        let total = self.total() as f64;
        self.counts.iter().map(|&c| if total > 0.0 { c as f64 / total } else { 0.0 }).collect()
    }
}

/// Histogram of one replica after step `t`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: u64,
    pub replica: u32,
    pub histogram: DegreeHistogram,
}

/// Output of one replica.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicaRun {
    pub replica: u32,
    pub snapshots: Vec<Snapshot>,
    pub counters: StepCounters,
}

/// Merge of the replicas' histograms at time `t`.
pub fn pool_at(runs: &[ReplicaRun], t: u64) -> Option<DegreeHistogram> {
    let mut pooled: Option<DegreeHistogram> = None;
    for s in runs.iter().flat_map(|r| &r.snapshots).filter(|s| s.t == t) {
        pooled.get_or_insert_with(DegreeHistogram::default).merge(&s.histogram);
    }
    pooled
}

/// Snapshot times present in every replica, ascending.
pub fn snapshot_times(runs: &[ReplicaRun]) -> Vec<u64> {
    runs.first().map(|r| r.snapshots.iter().map(|s| s.t).collect()).unwrap_or_default()
}

/// Network simulation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub preset: ModelPreset,
    pub horizon: u64,
    pub replicas: u32,
    pub seed: u64,
    #[serde(default)]
    pub multi_edge_policy: MultiEdgePolicy,
    #[serde(default)]
    pub snapshots: Vec<u64>,
}

impl SimConfig {
    pub fn new(preset: ModelPreset, horizon: u64, replicas: u32, seed: u64) -> Self {
        SimConfig { preset, horizon, replicas, seed, multi_edge_policy: MultiEdgePolicy::default(), snapshots: Vec::new() }
    }

    pub fn with_snapshots(mut self, snapshots: Vec<u64>) -> Self {
        self.snapshots = snapshots;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.horizon == 0 || self.replicas == 0 {
            return Err(SimError::InvalidConfig("horizon and replicas must be at least 1".into()));
        }
        check_snapshots(&self.snapshots, self.horizon)
    }
}

fn check_snapshots(snapshots: &[u64], horizon: u64) -> Result<(), SimError> {
    match snapshots.iter().find(|&&t| t == 0 || t > horizon) {
        Some(t) => Err(SimError::InvalidConfig(format!("snapshot time {t} outside 1..={horizon}"))),
        None => Ok(()),
    }
}

/// Sorted distinct snapshot times, always ending at the horizon.
fn schedule(snapshots: &[u64], horizon: u64) -> Vec<u64> {
    let mut times: Vec<u64> = snapshots.iter().copied().chain([horizon]).collect();
    times.sort_unstable();
    times.dedup();
    times
}

/// One replica of a network simulation.
pub fn simulate_replica(config: &SimConfig, replica: u32) -> Result<ReplicaRun, SimError> {
    config.validate()?;
    let preset = &config.preset;
    let mut state = seed_graph(preset)?;
    let mut rng = replica_rng(config.seed, replica);
    let mut counters = StepCounters::default();
    let conserves_degree = preset.variant() != ModelVariant::AddRewire;
    let seed_degree = state.total_degree();
    let growth = 2 * (u64::from(preset.edges_per_step()) - 1);
    let schedule = schedule(&config.snapshots, config.horizon);
    let mut next_snapshot = 0;
    let mut snapshots = Vec::with_capacity(schedule.len());
    for t in 1..=config.horizon {
        step(preset, &mut state, config.multi_edge_policy, &mut rng, &mut counters)?;
        if conserves_degree {
            let expected = seed_degree + growth * t;
            if state.total_degree() != expected {
                return Err(SimError::DegreeSumViolated { step: t, expected, actual: state.total_degree() });
            }
        }
        if t % CONSISTENCY_INTERVAL == 0 && !state.is_consistent() {
            return Err(SimError::InconsistentHistogram { step: t });
        }
        if next_snapshot < schedule.len() && schedule[next_snapshot] == t {
            let mut counts = state.degree_counts().to_vec();
            while counts.last() == Some(&0) {
                counts.pop();
            }
            snapshots.push(Snapshot { t, replica, histogram: DegreeHistogram::new(counts, 0) });
            next_snapshot += 1;
        }
    }
    Ok(ReplicaRun { replica, snapshots, counters })
}

/// All replicas in parallel, returned in replica order.
pub fn simulate(config: &SimConfig) -> Result<Vec<ReplicaRun>, SimError> {
    config.validate()?;
    (0..config.replicas).into_par_iter().map(|r| simulate_replica(config, r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_operations() {
        let mut h = DegreeHistogram::from_degrees([1, 3, 3, 0]);
        assert_eq!(h.counts(), &[1, 1, 0, 2]);
        assert_eq!(h.total(), 4);
        assert_eq!(h.max_degree(), Some(3));
        h.merge(&DegreeHistogram::new(vec![0, 0, 0, 0, 0, 2], 1));
        assert_eq!(h.count(5), 2);
        assert_eq!(h.total(), 7);
        let f = h.fractions();
        assert!((f.iter().sum::<f64>() - 6.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn schedule_is_sorted_and_ends_at_the_horizon() {
        assert_eq!(schedule(&[50, 10, 50], 100), vec![10, 50, 100]);
        assert_eq!(schedule(&[], 7), vec![7]);
        assert!(check_snapshots(&[0], 5).is_err());
    }

    #[test]
    fn simulation_is_deterministic_per_seed() {
        let config = SimConfig::new(ModelPreset::edge_deletion(3, 4, 12).unwrap(), 3_000, 3, 99).with_snapshots(vec![1_000]);
        let a = simulate(&config).unwrap();
        assert_eq!(a, simulate(&config).unwrap());
        assert_ne!(a[0].snapshots, a[1].snapshots);
        let pooled = pool_at(&a, 1_000).unwrap();
        assert_eq!(pooled.total(), 3 * 1_004);
        assert_eq!(snapshot_times(&a), vec![1_000, 3_000]);
        let other = simulate(&SimConfig { seed: 100, ..config }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn config_json_round_trip() {
        let json = r#"{"preset": {"variant": "ba-del", "m": 3, "m0": 4, "N0": 12},
                      "horizon": 10, "replicas": 2, "seed": 5, "multi_edge_policy": "allow"}"#;
        let config: SimConfig = serde_json::from_str(json).unwrap();
        assert_eq!(config.multi_edge_policy, MultiEdgePolicy::Allow);
        let back: SimConfig = serde_json::from_str(&serde_json::to_string(&config).unwrap()).unwrap();
        assert_eq!(back, config);
        assert!(serde_json::from_str::<SimConfig>(r#"{"preset": {"variant": "ba-del", "m": 3, "m0": 4, "N0": 12}, "horizon": 1, "replicas": 1, "seed": 0, "extra": 1}"#).is_err());
    }

    #[test]
    fn allow_policy_runs() {
        let mut config = SimConfig::new(ModelPreset::add_rewire(2, 3, 0.2, 0.2).unwrap(), 2_000, 1, 1);
        config.multi_edge_policy = MultiEdgePolicy::Allow;
        let run = simulate_replica(&config, 0).unwrap();
        assert_eq!(run.snapshots[0].histogram.total(), 2_003);
    }
}
