//! Undirected multigraph with O(1) edge insertion and removal.
//!
//! Edges live in a dense array; each edge records its slot in both
//! endpoints' incidence lists, so removal is two swap-removes plus a swap in
//! the edge array. A uniformly random edge endpoint is a node drawn with
//! probability proportional to its degree.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Index of a node, in order of creation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub u32);

/// Index of an edge in the dense edge array; stable only until the next removal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EdgeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Edge {
    ends: [NodeId; 2],
    /// Position of this edge in `incident[ends[s]]`.
    slots: [u32; 2],
}

/// Evolving network: adjacency, degree histogram and step counter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkState {
    edges: Vec<Edge>,
    incident: Vec<Vec<EdgeId>>,
    degree_counts: Vec<u64>,
    step: u64,
}

impl NetworkState {
    pub fn with_isolated_nodes(count: u32) -> Self {
        NetworkState {
            edges: Vec::new(),
            incident: vec![Vec::new(); count as usize],
            degree_counts: vec![u64::from(count)],
            step: 0,
        }
    }

    pub fn node_count(&self) -> usize {
        self.incident.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// `sum_k k count(k) = 2 |E|`.
    pub fn total_degree(&self) -> u64 {
        2 * self.edges.len() as u64
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub(crate) fn advance_step(&mut self) {
        self.step += 1;
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.incident[v.0 as usize].len()
    }

    /// Number of nodes of each degree, indexed by degree.
    pub fn degree_counts(&self) -> &[u64] {
        &self.degree_counts
    }

    /// Nodes with at least one incident edge.
    pub fn connected_nodes(&self) -> u64 {
        self.node_count() as u64 - self.degree_counts[0]
    }

    pub fn add_node(&mut self) -> NodeId {
        let id = NodeId(u32::try_from(self.incident.len()).expect("node count fits in u32"));
        self.incident.push(Vec::new());
        self.degree_counts[0] += 1;
        id
    }

    fn shift_degree(&mut self, old: usize, new: usize) {
        self.degree_counts[old] -= 1;
        if new >= self.degree_counts.len() {
            self.degree_counts.resize(new + 1, 0);
        }
        self.degree_counts[new] += 1;
    }

    /// Adds the edge `{u, v}`; `u != v`.
    pub fn add_edge(&mut self, u: NodeId, v: NodeId) -> EdgeId {
        debug_assert_ne!(u, v, "self-loops are never created");
        let id = EdgeId(u32::try_from(self.edges.len()).expect("edge count fits in u32"));
        let mut slots = [0u32; 2];
        for (s, node) in [u, v].into_iter().enumerate() {
            let list = &mut self.incident[node.0 as usize];
            slots[s] = list.len() as u32;
            list.push(id);
            let d = list.len();
            self.shift_degree(d - 1, d);
        }
        self.edges.push(Edge { ends: [u, v], slots });
        id
    }

    /// Removes an edge and returns its endpoints.
    pub fn remove_edge(&mut self, e: EdgeId) -> [NodeId; 2] {
        let edge = self.edges[e.0 as usize];
        for s in 0..2 {
            let node = edge.ends[s];
            let list = &mut self.incident[node.0 as usize];
            let slot = edge.slots[s] as usize;
            list.swap_remove(slot);
            if let Some(&moved) = list.get(slot) {
                let m = &mut self.edges[moved.0 as usize];
                let side = if m.ends[0] == node && m.slots[0] as usize == list.len() { 0 } else { 1 };
                m.slots[side] = slot as u32;
            }
            let d = list.len();
            self.shift_degree(d + 1, d);
        }
        let last = EdgeId(self.edges.len() as u32 - 1);
        self.edges.swap_remove(e.0 as usize);
        if e != last {
            let moved = self.edges[e.0 as usize];
            for s in 0..2 {
                self.incident[moved.ends[s].0 as usize][moved.slots[s] as usize] = e;
            }
        }
        edge.ends
    }

    pub fn edge_ends(&self, e: EdgeId) -> [NodeId; 2] {
        self.edges[e.0 as usize].ends
    }

    /// Endpoint of `e` other than `v`.
    pub fn other_end(&self, e: EdgeId, v: NodeId) -> NodeId {
        let [a, b] = self.edge_ends(e);
        if a == v {
            b
        } else {
            a
        }
    }

    pub fn are_adjacent(&self, u: NodeId, v: NodeId) -> bool {
        let (small, other) = if self.degree(u) <= self.degree(v) { (u, v) } else { (v, u) };
        self.incident[small.0 as usize].iter().any(|&e| self.other_end(e, small) == other)
    }

    /// Node drawn with probability `k / sum k`; `None` without edges.
    pub fn preferential_node<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<NodeId> {
        if self.edges.is_empty() {
            return None;
        }
        let stub = rng.random_range(0..2 * self.edges.len());
        Some(self.edges[stub / 2].ends[stub % 2])
    }

    /// Node drawn with probability `(k + 1) / sum (k + 1)`.
    pub fn shifted_preferential_node<R: Rng + ?Sized>(&self, rng: &mut R) -> NodeId {
        let n = self.node_count();
        let u = rng.random_range(0..n + 2 * self.edges.len());
        if u < n {
            NodeId(u as u32)
        } else {
            let stub = u - n;
            self.edges[stub / 2].ends[stub % 2]
        }
    }

    pub fn uniform_node<R: Rng + ?Sized>(&self, rng: &mut R) -> NodeId {
        NodeId(rng.random_range(0..self.node_count()) as u32)
    }

    pub fn uniform_edge<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<EdgeId> {
        (!self.edges.is_empty()).then(|| EdgeId(rng.random_range(0..self.edges.len()) as u32))
    }

    pub fn uniform_incident_edge<R: Rng + ?Sized>(&self, v: NodeId, rng: &mut R) -> Option<EdgeId> {
        let list = &self.incident[v.0 as usize];
        (!list.is_empty()).then(|| list[rng.random_range(0..list.len())])
    }

    /// Degree histogram recounted from the incidence lists.
    pub fn recount(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.degree_counts.len()];
        for list in &self.incident {
            if list.len() >= counts.len() {
                counts.resize(list.len() + 1, 0);
            }
            counts[list.len()] += 1;
        }
        counts
    }

    /// Histogram, incidence slots and degree sum agree.
    pub fn is_consistent(&self) -> bool {
        let slots_ok = self.edges.iter().enumerate().all(|(i, edge)| {
            (0..2).all(|s| self.incident[edge.ends[s].0 as usize].get(edge.slots[s] as usize) == Some(&EdgeId(i as u32)))
        });
        let sum: u64 = self.degree_counts.iter().enumerate().map(|(k, &c)| k as u64 * c).sum();
        let trimmed = |v: &[u64]| v.iter().rposition(|&c| c != 0).map_or(0, |i| i + 1);
        let recount = self.recount();
        slots_ok
            && sum == self.total_degree()
            && self.degree_counts[..trimmed(&self.degree_counts)] == recount[..trimmed(&recount)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::rng::replica_rng;
    use proptest::prelude::*;

    #[test]
    fn add_and_remove_keep_the_histogram() {
        let mut g = NetworkState::with_isolated_nodes(4);
        let e01 = g.add_edge(NodeId(0), NodeId(1));
        g.add_edge(NodeId(1), NodeId(2));
        g.add_edge(NodeId(1), NodeId(3));
        assert_eq!(g.degree(NodeId(1)), 3);
        assert_eq!(g.degree_counts(), &[0, 3, 0, 1]);
        assert!(g.are_adjacent(NodeId(3), NodeId(1)));
        assert!(!g.are_adjacent(NodeId(0), NodeId(3)));
        assert_eq!(g.remove_edge(e01), [NodeId(0), NodeId(1)]);
        assert_eq!(g.degree_counts(), &[1, 2, 1, 0]);
        assert!(g.is_consistent());
        assert_eq!(g.connected_nodes(), 3);
    }

    #[test]
    fn preferential_draws_follow_degrees() {
        // Star with centre 0 and 3 leaves: P(centre) = 1/2.
        let mut g = NetworkState::with_isolated_nodes(5);
        for leaf in 1..4 {
            g.add_edge(NodeId(0), NodeId(leaf));
        }
        let mut rng = replica_rng(1, 0);
        let n = 200_000;
        let centre = (0..n).filter(|_| g.preferential_node(&mut rng) == Some(NodeId(0))).count();
        assert!((centre as f64 / n as f64 - 0.5).abs() < 0.01);
        // Shifted weights: centre 4, leaves 2, isolated 1, total 11.
        let isolated = (0..n).filter(|_| g.shifted_preferential_node(&mut rng) == NodeId(4)).count();
        assert!((isolated as f64 / n as f64 - 1.0 / 11.0).abs() < 0.005);
        assert_eq!(NetworkState::with_isolated_nodes(3).preferential_node(&mut rng), None);
    }

    proptest! {
        #[test]
        fn random_edits_stay_consistent(ops in proptest::collection::vec((0u32..12, 0u32..12, any::<bool>(), 0usize..1000), 1..200)) {
            let mut g = NetworkState::with_isolated_nodes(12);
            for (u, v, add, pick) in ops {
                if add || g.edge_count() == 0 {
                    if u != v {
                        g.add_edge(NodeId(u), NodeId(v));
                    }
                } else {
                    g.remove_edge(EdgeId((pick % g.edge_count()) as u32));
                }
                prop_assert!(g.is_consistent());
            }
        }
    }
}
