//! Kernel parameters, newborn degree laws, finite-time transition rates and
//! the three generative model presets.
//!
//! A node of degree `k` at time `t` gains an edge with probability `f+(k,t)`
//! and loses one with probability `f-(k,t)`, where `t f+(k,t) -> A k + B` and
//! `t f-(k,t) -> Abar k + Bbar`. A degree-zero node never loses an edge.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on the total mass of an [`InitialDegreeLaw`].
pub const LAW_MASS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("kernel parameter {name} is not finite ({value})")]
    NonFinite { name: &'static str, value: f64 },
    #[error("kernel slopes must be non-negative (gain {gain}, loss {loss})")]
    NegativeSlope { gain: f64, loss: f64 },
    #[error("gain and loss slopes are both zero")]
    ZeroSlopes,
    #[error("gain intercept must be non-negative (got {0})")]
    NegativeGainIntercept(f64),
    #[error("loss rate at degree one must be non-negative (slope + intercept = {0})")]
    NegativeLossAtOne(f64),
    #[error("invalid initial degree law: {0}")]
    InvalidLaw(String),
    #[error("invalid model preset: {0}")]
    InvalidPreset(String),
    #[error("time must be at least 1")]
    ZeroTime,
    #[error("transition rates at degree {degree}, time {time} sum to {total} > 1")]
    RateOverflow { degree: usize, time: u64, total: f64 },
}

/// Affine limit kernels `F+(k) = A k + B` and `F-(k) = Abar k + Bbar`.
///
/// Serialized as `{"A": .., "B": .., "Abar": .., "Bbar": ..}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelParamsRepr", into = "KernelParamsRepr")]
pub struct KernelParams {
    gain_slope: f64,
    gain_intercept: f64,
    loss_slope: f64,
    loss_intercept: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelParamsRepr {
    #[serde(rename = "A")]
    gain_slope: f64,
    #[serde(rename = "B")]
    gain_intercept: f64,
    #[serde(rename = "Abar")]
    loss_slope: f64,
    #[serde(rename = "Bbar")]
    loss_intercept: f64,
}

impl TryFrom<KernelParamsRepr> for KernelParams {
    type Error = KernelError;

    fn try_from(r: KernelParamsRepr) -> Result<Self, Self::Error> {
        KernelParams::new(r.gain_slope, r.gain_intercept, r.loss_slope, r.loss_intercept)
    }
}

impl From<KernelParams> for KernelParamsRepr {
    fn from(p: KernelParams) -> Self {
        KernelParamsRepr {
            gain_slope: p.gain_slope,
            gain_intercept: p.gain_intercept,
            loss_slope: p.loss_slope,
            loss_intercept: p.loss_intercept,
        }
    }
}

impl KernelParams {
    pub fn new(
        gain_slope: f64,
        gain_intercept: f64,
        loss_slope: f64,
        loss_intercept: f64,
    ) -> Result<Self, KernelError> {
        for (name, value) in [
            ("A", gain_slope),
            ("B", gain_intercept),
            ("Abar", loss_slope),
            ("Bbar", loss_intercept),
        ] {
            if !value.is_finite() {
                return Err(KernelError::NonFinite { name, value });
            }
        }
        if gain_slope < 0.0 || loss_slope < 0.0 {
            return Err(KernelError::NegativeSlope { gain: gain_slope, loss: loss_slope });
        }
        if gain_slope == 0.0 && loss_slope == 0.0 {
            return Err(KernelError::ZeroSlopes);
        }
        if gain_intercept < 0.0 {
            return Err(KernelError::NegativeGainIntercept(gain_intercept));
        }
        if loss_slope + loss_intercept < 0.0 {
            return Err(KernelError::NegativeLossAtOne(loss_slope + loss_intercept));
        }
        Ok(KernelParams { gain_slope, gain_intercept, loss_slope, loss_intercept })
    }

    pub fn gain_slope(&self) -> f64 {
        self.gain_slope
    }

    pub fn gain_intercept(&self) -> f64 {
        self.gain_intercept
    }

    pub fn loss_slope(&self) -> f64 {
        self.loss_slope
    }

    pub fn loss_intercept(&self) -> f64 {
        self.loss_intercept
    }

    /// `F+(k)`.
    pub fn gain(&self, k: usize) -> f64 {
        self.gain_slope * k as f64 + self.gain_intercept
    }

    /// `F-(k)`, zero at `k = 0`.
    pub fn loss(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.loss_slope * k as f64 + self.loss_intercept
        }
    }

    /// `(F+(k), F-(k))`.
    pub fn limits(&self, k: usize) -> (f64, f64) {
        (self.gain(k), self.loss(k))
    }

    /// First-order rates `F+(k)/t`, `F-(k)/t` used by the chain ensemble.
    pub fn transition_rates(&self, k: usize, t: u64) -> Result<TransitionRates, KernelError> {
        if t == 0 {
            return Err(KernelError::ZeroTime);
        }
        let t_f = t as f64;
        TransitionRates::new(self.gain(k) / t_f, self.loss(k) / t_f)
            .map_err(|total| KernelError::RateOverflow { degree: k, time: t, total })
    }

    /// Smallest time at which the first-order rates of every degree up to
    /// `max_degree` are valid probabilities.
    pub fn rate_floor(&self, max_degree: usize) -> u64 {
        (0..=max_degree)
            .map(|k| (self.gain(k) + self.loss(k)).ceil() as u64)
            .max()
            .unwrap_or(0)
            .max(1)
    }
}

impl fmt::Display for KernelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "A={} B={} Abar={} Bbar={}",
            self.gain_slope, self.gain_intercept, self.loss_slope, self.loss_intercept
        )
    }
}

/// One-step transition probabilities of a single node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionRates {
    up: f64,
    down: f64,
    stay: f64,
}

impl TransitionRates {
    /// Fails with the offending total when `up + down > 1`.
    fn new(up: f64, down: f64) -> Result<Self, f64> {
        let moving = up + down;
        if moving.is_nan() || moving > 1.0 || up < 0.0 || down < 0.0 {
            return Err(moving);
        }
        Ok(TransitionRates { up, down, stay: 1.0 - moving })
    }

    pub fn up(&self) -> f64 {
        self.up
    }

    pub fn down(&self) -> f64 {
        self.down
    }

    pub fn stay(&self) -> f64 {
        self.stay
    }

    /// `(up + down) + stay`, which is exactly one.
    pub fn total(&self) -> f64 {
        (self.up + self.down) + self.stay
    }
}

/// Degree law `d_k` of newborn nodes, supported on `[min_degree, max_degree]`.
///
/// Serialized as `{"d": {"k": p, ..}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LawRepr", into = "LawRepr")]
pub struct InitialDegreeLaw {
    min_degree: usize,
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LawRepr {
    d: BTreeMap<usize, f64>,
}

impl TryFrom<LawRepr> for InitialDegreeLaw {
    type Error = KernelError;

    fn try_from(r: LawRepr) -> Result<Self, Self::Error> {
        InitialDegreeLaw::from_pairs(r.d)
    }
}

impl From<InitialDegreeLaw> for LawRepr {
    fn from(law: InitialDegreeLaw) -> Self {
        LawRepr { d: law.iter().collect() }
    }
}

impl InitialDegreeLaw {
    /// All newborn nodes have degree `k`.
    pub fn point_mass(k: usize) -> Self {
        InitialDegreeLaw { min_degree: k, probs: vec![1.0] }
    }

    /// Builds a law from `(degree, probability)` pairs; repeated degrees add.
    pub fn from_pairs<I>(pairs: I) -> Result<Self, KernelError>
    where
        I: IntoIterator<Item = (usize, f64)>,
    {
        let mut map = BTreeMap::new();
        for (k, p) in pairs {
            if !p.is_finite() || p < 0.0 {
                return Err(KernelError::InvalidLaw(format!("d[{k}] = {p} is not a probability")));
            }
            *map.entry(k).or_insert(0.0) += p;
        }
        let support: Vec<usize> = map.iter().filter(|(_, &p)| p > 0.0).map(|(&k, _)| k).collect();
        let (Some(&lo), Some(&hi)) = (support.first(), support.last()) else {
            return Err(KernelError::InvalidLaw("no positive mass".into()));
        };
        let probs: Vec<f64> = (lo..=hi).map(|k| map.get(&k).copied().unwrap_or(0.0)).collect();
        let mass: f64 = probs.iter().sum();
        if (mass - 1.0).abs() > LAW_MASS_TOLERANCE {
            return Err(KernelError::InvalidLaw(format!("total mass {mass} differs from 1")));
        }
        Ok(InitialDegreeLaw { min_degree: lo, probs })
    }

    /// Smallest degree with positive mass.
    pub fn min_degree(&self) -> usize {
        self.min_degree
    }

    /// Largest degree with positive mass; the head/tail seam of the solver.
    pub fn max_degree(&self) -> usize {
        self.min_degree + self.probs.len() - 1
    }

    /// `d_k`, zero outside the support.
    pub fn prob(&self, k: usize) -> f64 {
        k.checked_sub(self.min_degree)
            .and_then(|i| self.probs.get(i))
            .copied()
            .unwrap_or(0.0)
    }

    /// `(k, d_k)` over the support, including interior zeros.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.probs.iter().enumerate().map(move |(i, &p)| (self.min_degree + i, p))
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(k, p)| k as f64 * p).sum()
    }
}

/// Which of the three generative models a preset describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelVariant {
    /// Preferential attachment of `m` edges plus deletion of one edge per step.
    #[serde(rename = "BA_with_deletion", alias = "ba-del", alias = "ba_with_deletion")]
    EdgeDeletion,
    /// Group-preferential attachment plus deletion of one edge per step.
    #[serde(rename = "group_pref_with_deletion", alias = "group-del")]
    GroupPreferential,
    /// Growth mixed with random edge addition and rewiring, `(k+1)` kernel.
    #[serde(rename = "add_rewire", alias = "add-rewire")]
    AddRewire,
}

impl ModelVariant {
    pub fn name(&self) -> &'static str {
        match self {
            ModelVariant::EdgeDeletion => "BA_with_deletion",
            ModelVariant::GroupPreferential => "group_pref_with_deletion",
            ModelVariant::AddRewire => "add_rewire",
        }
    }
}

/// A generative model with concrete parameters.
///
/// Serialized as `{"variant", "m", "m0", "N0", "p", "q"}`; `N0` applies to
/// the deletion models and `p`, `q` to the rewiring model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PresetRepr", into = "PresetRepr")]
pub struct ModelPreset {
    variant: ModelVariant,
    edges_per_step: u32,
    seed_nodes: u32,
    seed_degree_sum: u64,
    add_prob: f64,
    rewire_prob: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PresetRepr {
    variant: ModelVariant,
    m: u32,
    m0: u32,
    #[serde(rename = "N0", default, skip_serializing_if = "Option::is_none")]
    n0: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    q: Option<f64>,
}

impl TryFrom<PresetRepr> for ModelPreset {
    type Error = KernelError;

    fn try_from(r: PresetRepr) -> Result<Self, Self::Error> {
        match r.variant {
            ModelVariant::EdgeDeletion | ModelVariant::GroupPreferential => {
                if r.p.is_some() || r.q.is_some() {
                    return Err(KernelError::InvalidPreset(format!(
                        "{} takes no p or q",
                        r.variant.name()
                    )));
                }
                let n0 = r.n0.ok_or_else(|| {
                    KernelError::InvalidPreset(format!("{} requires N0", r.variant.name()))
                })?;
                ModelPreset::with_seed(r.variant, r.m, r.m0, n0)
            }
            ModelVariant::AddRewire => {
                if r.n0.is_some() {
                    return Err(KernelError::InvalidPreset("add_rewire takes no N0".into()));
                }
                ModelPreset::add_rewire(r.m, r.m0, r.p.unwrap_or(0.0), r.q.unwrap_or(0.0))
            }
        }
    }
}

impl From<ModelPreset> for PresetRepr {
    fn from(p: ModelPreset) -> Self {
        let rewiring = p.variant == ModelVariant::AddRewire;
        PresetRepr {
            variant: p.variant,
            m: p.edges_per_step,
            m0: p.seed_nodes,
            n0: (!rewiring).then_some(p.seed_degree_sum),
            p: rewiring.then_some(p.add_prob),
            q: rewiring.then_some(p.rewire_prob),
        }
    }
}

impl ModelPreset {
    /// Preferential attachment with one edge deletion per step.
    pub fn edge_deletion(m: u32, m0: u32, n0: u64) -> Result<Self, KernelError> {
        Self::with_seed(ModelVariant::EdgeDeletion, m, m0, n0)
    }

    /// Group-preferential attachment with one edge deletion per step.
    pub fn group_preferential(m: u32, m0: u32, n0: u64) -> Result<Self, KernelError> {
        Self::with_seed(ModelVariant::GroupPreferential, m, m0, n0)
    }

    /// Growth with probability `p` of adding edges and `q` of rewiring.
    pub fn add_rewire(m: u32, m0: u32, p: f64, q: f64) -> Result<Self, KernelError> {
        check_edges(m, m0, 1)?;
        if !(p >= 0.0 && q >= 0.0 && p + q < 1.0) {
            return Err(KernelError::InvalidPreset(format!(
                "need p >= 0, q >= 0, p + q < 1 (got p={p}, q={q})"
            )));
        }
        Ok(ModelPreset {
            variant: ModelVariant::AddRewire,
            edges_per_step: m,
            seed_nodes: m0,
            seed_degree_sum: 0,
            add_prob: p,
            rewire_prob: q,
        })
    }

    fn with_seed(variant: ModelVariant, m: u32, m0: u32, n0: u64) -> Result<Self, KernelError> {
        check_edges(m, m0, 2)?;
        Ok(ModelPreset {
            variant,
            edges_per_step: m,
            seed_nodes: m0,
            seed_degree_sum: n0,
            add_prob: 0.0,
            rewire_prob: 0.0,
        })
    }

    pub fn variant(&self) -> ModelVariant {
        self.variant
    }

    /// `m`.
    pub fn edges_per_step(&self) -> u32 {
        self.edges_per_step
    }

    /// `m0`.
    pub fn seed_nodes(&self) -> u32 {
        self.seed_nodes
    }

    /// `N0`; zero for the rewiring model, whose seed nodes are isolated.
    pub fn seed_degree_sum(&self) -> u64 {
        self.seed_degree_sum
    }

    /// `p`.
    pub fn add_prob(&self) -> f64 {
        self.add_prob
    }

    /// `q`.
    pub fn rewire_prob(&self) -> f64 {
        self.rewire_prob
    }

    /// Limit kernels and newborn degree law of the model.
    pub fn kernels(&self) -> (KernelParams, InitialDegreeLaw) {
        let m = f64::from(self.edges_per_step);
        let mk = self.edges_per_step as usize;
        let params = match self.variant {
            ModelVariant::EdgeDeletion => KernelParams::new(m / (2.0 * (m - 1.0)), 0.0, 1.0 / (m - 1.0), 0.0),
            ModelVariant::GroupPreferential => {
                KernelParams::new(1.0 / (2.0 * (m - 1.0)), m - 1.0, 1.0 / (m - 1.0), 0.0)
            }
            ModelVariant::AddRewire => {
                let (p, q) = (self.add_prob, self.rewire_prob);
                let slope = m / ((1.0 - q) * 2.0 * m + 1.0);
                KernelParams::new(slope, slope + p * m, 0.0, q * m)
            }
        }
        .expect("preset invariants imply valid kernels");
        let law = match self.variant {
            ModelVariant::AddRewire => {
                let isolated = self.add_prob + self.rewire_prob;
                InitialDegreeLaw::from_pairs([(0, isolated), (mk, 1.0 - isolated)])
                    .expect("preset invariants imply a valid law")
            }
            _ => InitialDegreeLaw::point_mass(mk),
        };
        (params, law)
    }

    /// Exact per-step transition probabilities of a degree-`k` node at time
    /// `t` in a network of `m0 + t` nodes, before taking `t -> infinity`.
    pub fn finite_time_rates(&self, k: usize, t: u64) -> Result<TransitionRates, KernelError> {
        if t == 0 {
            return Err(KernelError::ZeroTime);
        }
        let m = f64::from(self.edges_per_step);
        let kf = k as f64;
        let tf = t as f64;
        let (up, down) = match self.variant {
            ModelVariant::EdgeDeletion => {
                let gain = m * kf / (2.0 * (m - 1.0) * tf);
                let loss = kf / ((m - 1.0) * tf);
                (gain * (1.0 - loss), loss * (1.0 - gain))
            }
            ModelVariant::GroupPreferential => {
                if t < 2 {
                    return Err(KernelError::ZeroTime);
                }
                let gain = (tf - m) / (tf - 1.0) * kf / (2.0 * (m - 1.0) * tf) + (m - 1.0) / (tf - 1.0);
                let loss = kf / ((m - 1.0) * tf);
                (gain * (1.0 - loss), loss * (1.0 - gain))
            }
            ModelVariant::AddRewire => {
                let (p, q) = (self.add_prob, self.rewire_prob);
                let nodes = f64::from(self.seed_nodes) + tf;
                let weight = nodes + 2.0 * (1.0 - q) * m * tf;
                let share = (kf + 1.0) / weight;
                let up = m * share + p * m / nodes + q * m * share / nodes;
                let down = if k == 0 { 0.0 } else { q * m / nodes * (1.0 - share) };
                (up, down)
            }
        };
        TransitionRates::new(up, down)
            .map_err(|total| KernelError::RateOverflow { degree: k, time: t, total })
    }
}

/// `lowest <= m <= m0`; the deletion models need `m >= 2` for growth.
fn check_edges(m: u32, m0: u32, lowest: u32) -> Result<(), KernelError> {
    if m < lowest || m > m0 {
        return Err(KernelError::InvalidPreset(format!("need {lowest} <= m <= m0 (got m={m}, m0={m0})")));
    }
    Ok(())
}
