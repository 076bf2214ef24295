//! Structure-free simulation of independent degree chains.
//!
//! One node is born per step with degree drawn from the newborn law. At each
//! later step every live node of degree `k` moves up with probability
//! `F+(k)/tau`, down with probability `F-(k)/tau`, where the rate clock is
//! `tau = t0 + t - 1` and `t0` is the smallest time at which every newborn
//! degree has valid rates. A degree whose rates exceed 1 at the current
//! clock moves surely, split in proportion `F+ : F-`, and is counted as
//! clamped. Nodes are kept in per-degree lists; the number of
//! movers per list is binomial and the movers are a uniform subset.

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::kernels::{InitialDegreeLaw, KernelError, KernelParams};

use super::{rng::replica_rng, DegreeHistogram, ReplicaRun, SimError, Snapshot, StepCounters};

/// Default cap above which nodes leave the dynamics into the overflow bucket.
pub const DEFAULT_DEGREE_CAP: usize = 10_000;

/// Chain-ensemble run parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub params: KernelParams,
    pub law: InitialDegreeLaw,
    pub horizon: u64,
    pub replicas: u32,
    pub seed: u64,
    #[serde(default)]
    pub snapshots: Vec<u64>,
    #[serde(default = "default_cap")]
    pub degree_cap: usize,
}

fn default_cap() -> usize {
    DEFAULT_DEGREE_CAP
}

impl ChainConfig {
    pub fn new(params: KernelParams, law: InitialDegreeLaw, horizon: u64, replicas: u32, seed: u64) -> Self {
        ChainConfig { params, law, horizon, replicas, seed, snapshots: Vec::new(), degree_cap: DEFAULT_DEGREE_CAP }
    }

    pub fn with_snapshots(mut self, snapshots: Vec<u64>) -> Self {
        self.snapshots = snapshots;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.horizon == 0 || self.replicas == 0 {
            return Err(SimError::InvalidConfig("horizon and replicas must be at least 1".into()));
        }
        if self.degree_cap <= self.law.max_degree() {
            return Err(SimError::InvalidConfig(format!(
                "degree cap {} must exceed the largest newborn degree {}",
                self.degree_cap,
                self.law.max_degree()
            )));
        }
        super::check_snapshots(&self.snapshots, self.horizon)
    }

    /// Rate clock offset `t0`.
    pub fn start_time(&self) -> u64 {
        self.params.rate_floor(self.law.max_degree())
    }
}

struct Ensemble {
    classes: Vec<Vec<u32>>,
    /// Index of each node in its class list; `u32::MAX` once overflowed.
    position: Vec<u32>,
    degree: Vec<u32>,
    overflow: u64,
    cap: usize,
}

impl Ensemble {
    fn insert(&mut self, node: u32, k: usize) {
        if k >= self.cap {
            self.position[node as usize] = u32::MAX;
            self.degree[node as usize] = k as u32;
            self.overflow += 1;
            return;
        }
        if k >= self.classes.len() {
            self.classes.resize_with(k + 1, Vec::new);
        }
        self.position[node as usize] = self.classes[k].len() as u32;
        self.degree[node as usize] = k as u32;
        self.classes[k].push(node);
    }

    fn remove(&mut self, node: u32) {
        let k = self.degree[node as usize] as usize;
        let pos = self.position[node as usize] as usize;
        let class = &mut self.classes[k];
        class.swap_remove(pos);
        if let Some(&moved) = class.get(pos) {
            self.position[moved as usize] = pos as u32;
        }
    }

    fn histogram(&self) -> DegreeHistogram {
        let mut counts: Vec<u64> = self.classes.iter().map(|c| c.len() as u64).collect();
        while counts.last() == Some(&0) {
            counts.pop();
        }
        DegreeHistogram::new(counts, self.overflow)
    }
}

/// One replica of the chain ensemble.
pub fn run_chain_replica(config: &ChainConfig, replica: u32) -> Result<ReplicaRun, SimError> {
    config.validate()?;
    let mut rng = replica_rng(config.seed, replica);
    let degrees: Vec<usize> = config.law.iter().map(|(k, _)| k).collect();
    let newborn = WeightedIndex::new(config.law.iter().map(|(_, p)| p))
        .map_err(|e| SimError::InvalidConfig(format!("newborn law: {e}")))?;
    let t0 = config.start_time();
    let capacity = config.horizon.min(1 << 24) as usize;
    let mut ens = Ensemble {
        classes: Vec::new(),
        position: Vec::with_capacity(capacity),
        degree: Vec::with_capacity(capacity),
        overflow: 0,
        cap: config.degree_cap,
    };
    let schedule = super::schedule(&config.snapshots, config.horizon);
    let mut next_snapshot = 0;
    let mut snapshots = Vec::with_capacity(schedule.len());
    let mut moves: Vec<(u32, usize)> = Vec::new();
    let mut counters = StepCounters::default();
    for t in 1..=config.horizon {
        if t > 1 {
            let tau = t0 + t - 1;
            moves.clear();
            for k in 0..ens.classes.len() {
                let n = ens.classes[k].len();
                if n == 0 {
                    continue;
                }
                let (up, down) = match config.params.transition_rates(k, tau) {
                    Ok(rates) => (rates.up(), rates.down()),
                    Err(KernelError::RateOverflow { .. }) => {
                        // Rates scaled so that the node surely moves.
                        counters.rates_clamped += n as u64;
                        let (gain, loss) = config.params.limits(k);
                        (gain / (gain + loss), loss / (gain + loss))
                    }
                    Err(e) => return Err(e.into()),
                };
                let moving = up + down;
                if moving == 0.0 {
                    continue;
                }
                let movers = binomial(&mut rng, n as u64, moving.min(1.0)) as usize;
                if movers == 0 {
                    continue;
                }
                let ups = binomial(&mut rng, movers as u64, (up / moving).min(1.0)) as usize;
                let class = &mut ens.classes[k];
                // Uniform subset of size `movers` swapped to the end of the list.
                for i in 0..movers {
                    let last = n - 1 - i;
                    let j = rng.random_range(0..=last);
                    class.swap(j, last);
                    ens.position[class[j] as usize] = j as u32;
                    ens.position[class[last] as usize] = last as u32;
                }
                for (i, &node) in class[n - movers..].iter().enumerate() {
                    moves.push((node, if i < ups { k + 1 } else { k - 1 }));
                }
            }
            for &(node, to) in &moves {
                ens.remove(node);
                ens.insert(node, to);
            }
        }
        let node = ens.position.len() as u32;
        ens.position.push(0);
        ens.degree.push(0);
        ens.insert(node, degrees[newborn.sample(&mut rng)]);
        while next_snapshot < schedule.len() && schedule[next_snapshot] == t {
            snapshots.push(Snapshot { t, replica, histogram: ens.histogram() });
            next_snapshot += 1;
        }
    }
    Ok(ReplicaRun { replica, snapshots, counters })
}

fn binomial<R: Rng + ?Sized>(rng: &mut R, n: u64, p: f64) -> u64 {
    if p <= 0.0 {
        0
    } else if p >= 1.0 {
        n
    } else {
        Binomial::new(n, p).expect("probability in (0, 1)").sample(rng)
    }
}

/// All replicas, in replica order.
pub fn run_chain_ensemble(config: &ChainConfig) -> Result<Vec<ReplicaRun>, SimError> {
    use rayon::prelude::*;
    config.validate()?;
    (0..config.replicas).into_par_iter().map(|r| run_chain_replica(config, r)).collect()
}
