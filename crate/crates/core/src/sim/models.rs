//! Seed graphs and single steps of the three generative models.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::kernels::{ModelPreset, ModelVariant};

use super::graph::{NetworkState, NodeId};
use super::SimError;

/// Treatment of duplicate endpoints within a step and of existing edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiEdgePolicy {
    /// Redraw a target already chosen in this step or already adjacent.
    #[default]
    Resample,
    /// Accept parallel edges.
    Allow,
}

/// Redraws allowed per requested endpoint before giving up.
const MAX_REDRAWS: usize = 10_000;

/// Events that did not happen as drawn.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepCounters {
    /// Rewiring picked an isolated node.
    pub rewires_skipped: u64,
    /// No admissible endpoint was found within the redraw budget.
    pub draws_abandoned: u64,
    /// Chain moves whose rates exceeded 1 and were rescaled.
    #[serde(default)]
    pub rates_clamped: u64,
}

impl StepCounters {
    pub fn merge(&mut self, other: &StepCounters) {
        self.rewires_skipped += other.rewires_skipped;
        self.draws_abandoned += other.draws_abandoned;
        self.rates_clamped += other.rates_clamped;
    }
}

/// Initial network of a preset.
///
/// The deletion models start from the circulant graph on `m0` nodes of
/// degree `N0 / m0`; the rewiring model starts from `m0` isolated nodes.
pub fn seed_graph(preset: &ModelPreset) -> Result<NetworkState, SimError> {
    let m0 = preset.seed_nodes();
    let mut g = NetworkState::with_isolated_nodes(m0);
    if preset.variant() == ModelVariant::AddRewire {
        return Ok(g);
    }
    let n0 = preset.seed_degree_sum();
    let nodes = u64::from(m0);
    let infeasible = |reason: &str| SimError::InfeasibleSeed { m0, n0, reason: reason.to_string() };
    if n0 % 2 == 1 {
        return Err(infeasible("odd degree sum"));
    }
    if n0 > nodes * (nodes - 1) {
        return Err(infeasible("exceeds the complete graph"));
    }
    if n0 % nodes != 0 {
        return Err(infeasible("degree sum not divisible by m0"));
    }
    let r = n0 / nodes;
    if r == 0 {
        return Err(infeasible("seed graph has no edges"));
    }
    // Offsets 1..=r/2 on both sides, plus the antipode when r is odd (m0 even).
    for v in 0..nodes {
        for offset in 1..=r / 2 {
            let w = (v + offset) % nodes;
            g.add_edge(NodeId(v as u32), NodeId(w as u32));
        }
        if r % 2 == 1 && v < nodes / 2 {
            g.add_edge(NodeId(v as u32), NodeId((v + nodes / 2) as u32));
        }
    }
    Ok(g)
}

/// `count` endpoints from `draw`, rejecting repeats under `Resample`.
fn draw_distinct<R: Rng + ?Sized>(
    count: usize,
    policy: MultiEdgePolicy,
    rng: &mut R,
    mut draw: impl FnMut(&mut R) -> Option<NodeId>,
    mut admissible: impl FnMut(NodeId) -> bool,
) -> Option<Vec<NodeId>> {
    let mut chosen: Vec<NodeId> = Vec::with_capacity(count);
    let mut redraws = 0;
    while chosen.len() < count {
        let v = draw(rng)?;
        if admissible(v) && (policy == MultiEdgePolicy::Allow || !chosen.contains(&v)) {
            chosen.push(v);
        } else {
            redraws += 1;
            if redraws > MAX_REDRAWS * count {
                return None;
            }
        }
    }
    Some(chosen)
}

/// Removes an edge found by a degree-preferential node and a uniform neighbour.
fn delete_edge<R: Rng + ?Sized>(state: &mut NetworkState, rng: &mut R) -> Result<(), SimError> {
    // Node with probability k/sum k, then a uniform incident edge: a uniform edge.
    let e = state.uniform_edge(rng).ok_or(SimError::Deadlock { step: state.step() })?;
    state.remove_edge(e);
    Ok(())
}

/// New node with `m` edges to distinct nodes drawn with probability
/// `k / sum k`, then one edge deletion.
pub fn step_model1<R: Rng + ?Sized>(
    state: &mut NetworkState,
    m: u32,
    policy: MultiEdgePolicy,
    rng: &mut R,
) -> Result<(), SimError> {
    let deadlock = SimError::Deadlock { step: state.step() };
    if policy == MultiEdgePolicy::Resample && state.connected_nodes() < u64::from(m) {
        return Err(deadlock);
    }
    let snapshot = &*state;
    let targets = draw_distinct(m as usize, policy, rng, |r| snapshot.preferential_node(r), |_| true)
        .ok_or(deadlock)?;
    attach_new_node(state, &targets);
    delete_edge(state, rng)?;
    state.advance_step();
    Ok(())
}

/// New node with one edge to a node drawn with probability `k / sum k` and
/// `m - 1` edges to distinct uniform nodes, then one edge deletion.
///
/// Node `i` receives an edge with probability
/// `(N - m)/(N - 1) k_i / sum k + (m - 1)/(N - 1)` for `N` existing nodes.
pub fn step_model2<R: Rng + ?Sized>(
    state: &mut NetworkState,
    m: u32,
    policy: MultiEdgePolicy,
    rng: &mut R,
) -> Result<(), SimError> {
    let deadlock = SimError::Deadlock { step: state.step() };
    let first = state.preferential_node(rng).ok_or_else(|| deadlock.clone())?;
    let snapshot = &*state;
    let rest = draw_distinct(
        m as usize - 1,
        policy,
        rng,
        |r| Some(snapshot.uniform_node(r)),
        |v| policy == MultiEdgePolicy::Allow || v != first,
    )
    .ok_or(deadlock)?;
    let mut targets = vec![first];
    targets.extend(rest);
    attach_new_node(state, &targets);
    delete_edge(state, rng)?;
    state.advance_step();
    Ok(())
}

fn attach_new_node(state: &mut NetworkState, targets: &[NodeId]) {
    let new = state.add_node();
    for &t in targets {
        state.add_edge(new, t);
    }
}

/// New node, then with probability `p` add `m` edges, with probability `q`
/// rewire `m` edges, otherwise attach the new node by `m` edges; targets are
/// drawn with probability `(k + 1) / sum (k + 1)`.
///
/// Adding picks a uniform start node. Rewiring picks a uniform node `i` and
/// a uniform incident edge `{i, j}`, removes it and joins `j` to a new
/// target, so `i` loses the edge. Weights are re-evaluated after each of the
/// `m` repetitions.
#[allow(clippy::too_many_arguments)]
pub fn step_model3<R: Rng + ?Sized>(
    state: &mut NetworkState,
    m: u32,
    p: f64,
    q: f64,
    policy: MultiEdgePolicy,
    rng: &mut R,
    counters: &mut StepCounters,
) -> Result<(), SimError> {
    let new = state.add_node();
    let u: f64 = rng.random();
    if u < p {
        for _ in 0..m {
            let start = state.uniform_node(rng);
            match shifted_target(state, start, policy, rng) {
                Some(end) => {
                    state.add_edge(start, end);
                }
                None => counters.draws_abandoned += 1,
            }
        }
    } else if u < p + q {
        for _ in 0..m {
            let i = state.uniform_node(rng);
            let Some(e) = state.uniform_incident_edge(i, rng) else {
                counters.rewires_skipped += 1;
                continue;
            };
            let j = state.other_end(e, i);
            state.remove_edge(e);
            match shifted_target(state, j, policy, rng) {
                Some(target) => {
                    state.add_edge(j, target);
                }
                None => {
                    state.add_edge(i, j);
                    counters.draws_abandoned += 1;
                }
            }
        }
    } else {
        let snapshot = &*state;
        let targets =
            draw_distinct(m as usize, policy, rng, |r| Some(snapshot.shifted_preferential_node(r)), |v| v != new)
                .ok_or(SimError::Deadlock { step: state.step() })?;
        for t in targets {
            state.add_edge(new, t);
        }
    }
    state.advance_step();
    Ok(())
}

/// Node other than `from` drawn with weight `k + 1`, not adjacent to `from`
/// under `Resample`.
fn shifted_target<R: Rng + ?Sized>(
    state: &NetworkState,
    from: NodeId,
    policy: MultiEdgePolicy,
    rng: &mut R,
) -> Option<NodeId> {
    for _ in 0..MAX_REDRAWS {
        let v = state.shifted_preferential_node(rng);
        if v != from && (policy == MultiEdgePolicy::Allow || !state.are_adjacent(from, v)) {
            return Some(v);
        }
    }
    None
}

/// One step of the preset's model.
pub fn step<R: Rng + ?Sized>(
    preset: &ModelPreset,
    state: &mut NetworkState,
    policy: MultiEdgePolicy,
    rng: &mut R,
    counters: &mut StepCounters,
) -> Result<(), SimError> {
    let m = preset.edges_per_step();
    match preset.variant() {
        ModelVariant::EdgeDeletion => step_model1(state, m, policy, rng),
        ModelVariant::GroupPreferential => step_model2(state, m, policy, rng),
        ModelVariant::AddRewire => {
            step_model3(state, m, preset.add_prob(), preset.rewire_prob(), policy, rng, counters)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::rng::replica_rng;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn seed_graphs() {
        let g = seed_graph(&ModelPreset::edge_deletion(3, 4, 12).unwrap()).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (4, 6));
        assert_eq!(g.degree_counts(), &[0, 0, 0, 4]);
        for u in 0..4 {
            for v in 0..4 {
                assert_eq!(g.are_adjacent(NodeId(u), NodeId(v)), u != v);
            }
        }
        let g = seed_graph(&ModelPreset::edge_deletion(3, 6, 18).unwrap()).unwrap();
        assert_eq!(g.degree_counts(), &[0, 0, 0, 6]);
        assert!(g.is_consistent());
        let g = seed_graph(&ModelPreset::add_rewire(2, 5, 0.1, 0.1).unwrap()).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (5, 0));
        for (n0, m0) in [(3, 4), (14, 4), (10, 4), (0, 4)] {
            let preset = ModelPreset::edge_deletion(2, m0, n0).unwrap();
            assert!(matches!(seed_graph(&preset), Err(SimError::InfeasibleSeed { .. })));
        }
    }

    #[test]
    fn deletion_models_gain_two_m_minus_one_per_step() {
        for preset in [ModelPreset::edge_deletion(3, 4, 12).unwrap(), ModelPreset::group_preferential(3, 4, 12).unwrap()] {
            let mut g = seed_graph(&preset).unwrap();
            let mut rng = replica_rng(3, 0);
            let mut counters = StepCounters::default();
            for t in 1..=2_000u64 {
                step(&preset, &mut g, MultiEdgePolicy::Resample, &mut rng, &mut counters).unwrap();
                assert_eq!(g.total_degree(), 12 + 4 * t);
                assert_eq!(g.node_count() as u64, 4 + t);
            }
            assert!(g.is_consistent());
            assert_eq!(counters, StepCounters::default());
        }
    }

    #[test]
    fn first_step_from_the_complete_seed() {
        let preset = ModelPreset::group_preferential(3, 4, 12).unwrap();
        let mut g = seed_graph(&preset).unwrap();
        step_model2(&mut g, 3, MultiEdgePolicy::Resample, &mut replica_rng(0, 0)).unwrap();
        assert_eq!(g.node_count(), 5);
    }

    #[test]
    fn rewiring_model_bookkeeping() {
        let preset = ModelPreset::add_rewire(2, 5, 0.1, 0.25).unwrap();
        let mut g = seed_graph(&preset).unwrap();
        let mut rng = replica_rng(11, 2);
        let mut counters = StepCounters::default();
        for _ in 0..5_000 {
            step(&preset, &mut g, MultiEdgePolicy::Resample, &mut rng, &mut counters).unwrap();
        }
        assert_eq!(g.node_count(), 5_005);
        assert!(g.is_consistent());
        assert!(counters.rewires_skipped > 0);
        // Additions and attachments add m edges each; rewiring preserves the count.
        let expected = 2.0 * 5_000.0 * (1.0 - 0.25);
        assert!((g.edge_count() as f64 - expected).abs() < 0.05 * expected);
    }

    #[test]
    fn pure_growth_rewiring_model_only_attaches() {
        let preset = ModelPreset::add_rewire(2, 3, 0.0, 0.0).unwrap();
        let mut g = seed_graph(&preset).unwrap();
        let mut rng = replica_rng(1, 0);
        let mut counters = StepCounters::default();
        for t in 1..=500u64 {
            step(&preset, &mut g, MultiEdgePolicy::Resample, &mut rng, &mut counters).unwrap();
            assert_eq!(g.edge_count() as u64, 2 * t);
        }
    }

    #[test]
    fn single_edge_rewiring_model_runs_from_one_seed_node() {
        let preset = ModelPreset::add_rewire(1, 1, 0.3, 0.3).unwrap();
        let mut g = seed_graph(&preset).unwrap();
        let mut rng = replica_rng(2, 0);
        let mut counters = StepCounters::default();
        for _ in 0..2_000 {
            step(&preset, &mut g, MultiEdgePolicy::Resample, &mut rng, &mut counters).unwrap();
        }
        assert_eq!(g.node_count(), 2_001);
        assert!(g.is_consistent());
    }

    #[test]
    fn preferential_choice_is_degree_proportional() {
        // Frozen 100-node graph; chi-square over attachment choices.
        let mut g = NetworkState::with_isolated_nodes(100);
        let mut rng = replica_rng(5, 0);
        for v in 1..100u32 {
            let extra = 1 + (v % 7);
            for j in 0..extra {
                let w = (v * 31 + j * 17) % v;
                g.add_edge(NodeId(v), NodeId(w));
            }
        }
        let draws = 1_000_000;
        let mut observed = vec![0u64; 100];
        for _ in 0..draws {
            observed[g.preferential_node(&mut rng).unwrap().0 as usize] += 1;
        }
        let total = g.total_degree() as f64;
        let mut chi2 = 0.0;
        for (v, &o) in observed.iter().enumerate() {
            let e = draws as f64 * g.degree(NodeId(v as u32)) as f64 / total;
            chi2 += (o as f64 - e).powi(2) / e;
        }
        let p_value = 1.0 - ChiSquared::new(99.0).unwrap().cdf(chi2);
        assert!(p_value > 0.001, "chi2 = {chi2}, p = {p_value}");
    }

    #[test]
    fn group_preferential_receipt_probability() {
        // Star K_{1,3} plus one isolated node: N = 5, m = 3, sum k = 6.
        let mut g = NetworkState::with_isolated_nodes(5);
        for leaf in 1..4 {
            g.add_edge(NodeId(0), NodeId(leaf));
        }
        let trials = 200_000;
        // Exact receipt probability is (N - m)/(N - 1) k/sum k + (m - 1)/(N - 1).
        let expected_centre = 2.0 / 4.0 * 0.5 + 2.0 / 4.0;
        let expected_isolated = 2.0 / 4.0;
        let mut rng = replica_rng(9, 1);
        let (mut centre, mut isolated) = (0u64, 0u64);
        for _ in 0..trials {
            let first = g.preferential_node(&mut rng).unwrap();
            let snapshot = &g;
            let rest = draw_distinct(2, MultiEdgePolicy::Resample, &mut rng, |r| Some(snapshot.uniform_node(r)), |v| v != first)
                .unwrap();
            let all: Vec<NodeId> = std::iter::once(first).chain(rest).collect();
            centre += all.contains(&NodeId(0)) as u64;
            isolated += all.contains(&NodeId(4)) as u64;
        }
        assert!((centre as f64 / trials as f64 - expected_centre).abs() < 0.01);
        assert!((isolated as f64 / trials as f64 - expected_isolated).abs() < 0.01);
    }
}
