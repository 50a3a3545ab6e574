//! Network graph, per-slot random link states and interference-free activations.
//!
//! A [`Topology`] is immutable once validated and can be shared freely between
//! concurrent simulation replicas.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};

/// Upper bound on the number of activations [`feasible_activations`] will list.
pub const ENUMERATION_LIMIT: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: usize,
    pub from: usize,
    pub to: usize,
    pub capacity: f64,
}

impl Edge {
    pub fn shares_node(&self, other: &Edge) -> bool {
        self.from == other.from || self.from == other.to || self.to == other.from || self.to == other.to
    }

    /// The endpoint opposite to `node`, if `node` is one of the endpoints.
    pub fn other(&self, node: usize) -> Option<usize> {
        if node == self.from {
            Some(self.to)
        } else if node == self.to {
            Some(self.from)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum Interference {
    /// Wired network: every subset of links may be active together.
    #[default]
    None,
    /// Primary interference: activations are matchings.
    Primary,
    /// An explicit list of feasible edge subsets. The empty set is always feasible.
    Explicit(Vec<Vec<usize>>),
}

/// A traversable direction of an edge as seen from its tail node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arc {
    pub edge: usize,
    pub head: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    node_count: usize,
    edges: Vec<Edge>,
    directed: bool,
    interference: Interference,
    out_arcs: Vec<Vec<Arc>>,
}

impl Topology {
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> &Edge {
        &self.edges[id]
    }

    pub fn capacities(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.capacity).collect()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn interference(&self) -> &Interference {
        &self.interference
    }

    pub fn max_capacity(&self) -> f64 {
        self.edges.iter().map(|e| e.capacity).fold(0.0, f64::max)
    }

    pub fn total_capacity(&self) -> f64 {
        self.edges.iter().map(|e| e.capacity).sum()
    }

    /// Arcs leaving `node`. Undirected edges appear in both endpoint lists.
    pub fn out_arcs(&self, node: usize) -> &[Arc] {
        &self.out_arcs[node]
    }

    /// True when no two of the given edges share an endpoint.
    pub fn is_matching(&self, edges: &[usize]) -> bool {
        let mut used = vec![false; self.node_count];
        for &e in edges {
            let edge = &self.edges[e];
            if used[edge.from] || used[edge.to] {
                return false;
            }
            used[edge.from] = true;
            used[edge.to] = true;
        }
        true
    }

    /// True when `activation` belongs to the interference-free set of this topology.
    pub fn is_feasible(&self, activation: &Activation) -> bool {
        let edges = activation.edges();
        match &self.interference {
            Interference::None => true,
            Interference::Primary => self.is_matching(&edges),
            Interference::Explicit(sets) => {
                edges.is_empty() || sets.iter().any(|set| edges.iter().all(|e| set.contains(e)))
            }
        }
    }
}

/// Configuration form of the interference model.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RawInterference {
    #[default]
    None,
    Primary,
    Explicit {
        sets: Vec<Vec<usize>>,
    },
}

/// Unchecked topology as read from a configuration document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTopology {
    pub nodes: usize,
    #[serde(default)]
    pub directed: bool,
    pub edges: Vec<Edge>,
    #[serde(default)]
    pub interference: RawInterference,
}

/// Checks every invariant of `raw` and reports all violations at once.
pub fn validate_topology(raw: &RawTopology) -> Result<Topology> {
    let mut problems = Vec::new();
    let m = raw.edges.len();
    let mut slot: Vec<Option<&Edge>> = vec![None; m];

    for edge in &raw.edges {
        if edge.from >= raw.nodes || edge.to >= raw.nodes {
            problems.push(Violation(format!(
                "dangling endpoint on edge {} ({}-{}) with {} nodes",
                edge.id, edge.from, edge.to, raw.nodes
            )));
        }
        if edge.from == edge.to {
            problems.push(Violation(format!("self-loop on edge {}", edge.id)));
        }
        // NaN fails this comparison too
        if edge.capacity.is_nan() || edge.capacity <= 0.0 || edge.capacity.is_infinite() {
            problems.push(Violation(format!(
                "non-positive capacity {} on edge {}",
                edge.capacity, edge.id
            )));
        }
        if edge.id >= m {
            problems.push(Violation(format!("edge id {} out of range 0..{}", edge.id, m)));
        } else if slot[edge.id].is_some() {
            problems.push(Violation(format!("duplicate edge id {}", edge.id)));
        } else {
            slot[edge.id] = Some(edge);
        }
    }

    let interference = match &raw.interference {
        RawInterference::None => Interference::None,
        RawInterference::Primary => Interference::Primary,
        RawInterference::Explicit { sets } => {
            let mut cleaned = Vec::with_capacity(sets.len());
            for set in sets {
                let mut set = set.clone();
                for &e in &set {
                    if e >= m {
                        problems.push(Violation(format!("unknown edge in activation set: {e}")));
                    }
                }
                set.sort_unstable();
                set.dedup();
                cleaned.push(set);
            }
            Interference::Explicit(cleaned)
        }
    };

    if !problems.is_empty() {
        return Err(Error::Topology(problems));
    }

    let edges: Vec<Edge> = slot.into_iter().map(|e| e.cloned().unwrap()).collect();
    let mut out_arcs = vec![Vec::new(); raw.nodes];
    for edge in &edges {
        out_arcs[edge.from].push(Arc {
            edge: edge.id,
            head: edge.to,
        });
        if !raw.directed {
            out_arcs[edge.to].push(Arc {
                edge: edge.id,
                head: edge.from,
            });
        }
    }

    Ok(Topology {
        node_count: raw.nodes,
        edges,
        directed: raw.directed,
        interference,
        out_arcs,
    })
}

/// ON probability given either once for all edges or per edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OnProbability {
    Uniform(f64),
    PerEdge(Vec<f64>),
}

impl Default for OnProbability {
    fn default() -> Self {
        OnProbability::Uniform(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RawLinkProcess {
    #[serde(default)]
    pub p_on: OnProbability,
    #[serde(default)]
    pub seed: u64,
}

/// I.i.d. Bernoulli link states, one independent draw per edge per slot.
///
/// The draw for `(seed, slot, edge)` is a pure function: three chained
/// SplitMix64 finalizer rounds over `seed`, `slot` and `edge`, whose top 53
/// bits form a uniform `u` in `[0, 1)`. The edge is ON iff `u < p_on`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkStateProcess {
    p_on: Vec<f64>,
    seed: u64,
}

impl LinkStateProcess {
    pub fn new(p_on: Vec<f64>, seed: u64) -> Result<Self> {
        let bad: Vec<Violation> = p_on
            .iter()
            .enumerate()
            .filter(|(_, p)| !(0.0..=1.0).contains(*p))
            .map(|(e, p)| Violation(format!("p_on {p} on edge {e} outside [0, 1]")))
            .collect();
        if !bad.is_empty() {
            return Err(Error::Topology(bad));
        }
        Ok(LinkStateProcess { p_on, seed })
    }

    pub fn always_on(edge_count: usize) -> Self {
        LinkStateProcess {
            p_on: vec![1.0; edge_count],
            seed: 0,
        }
    }

    pub fn from_raw(raw: &RawLinkProcess, edge_count: usize) -> Result<Self> {
        let p_on = match &raw.p_on {
            OnProbability::Uniform(p) => vec![*p; edge_count],
            OnProbability::PerEdge(ps) => {
                if ps.len() != edge_count {
                    return Err(Error::Topology(vec![Violation(format!(
                        "p_on lists {} values for {} edges",
                        ps.len(),
                        edge_count
                    ))]));
                }
                ps.clone()
            }
        };
        Self::new(p_on, raw.seed)
    }

    pub fn p_on(&self) -> &[f64] {
        &self.p_on
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_always_on(&self) -> bool {
        self.p_on.iter().all(|&p| p >= 1.0)
    }

    pub fn uniform(&self, slot: u64, edge: usize) -> f64 {
        let h = splitmix64(splitmix64(splitmix64(self.seed) ^ slot) ^ edge as u64);
        (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Link-state vector σ(t).
pub type LinkStates = Vec<bool>;

pub fn sample_link_states(process: &LinkStateProcess, slot: u64) -> LinkStates {
    process
        .p_on
        .iter()
        .enumerate()
        .map(|(e, &p)| process.uniform(slot, e) < p)
        .collect()
}

/// A set of simultaneously active edges, stored as a mask over edge ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Activation {
    mask: Vec<bool>,
}

impl Activation {
    pub fn empty(edge_count: usize) -> Self {
        Activation {
            mask: vec![false; edge_count],
        }
    }

    pub fn from_edges(edge_count: usize, edges: &[usize]) -> Self {
        let mut mask = vec![false; edge_count];
        for &e in edges {
            mask[e] = true;
        }
        Activation { mask }
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        Activation { mask }
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn contains(&self, edge: usize) -> bool {
        self.mask[edge]
    }

    pub fn edges(&self) -> Vec<usize> {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(e, &on)| on.then_some(e))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.mask.iter().filter(|&&on| on).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&on| on)
    }

    /// Σ_e weights_e over active edges.
    pub fn weight(&self, weights: &[f64]) -> f64 {
        self.mask
            .iter()
            .zip(weights)
            .filter(|(on, _)| **on)
            .map(|(_, w)| w)
            .sum()
    }
}

/// Lists every feasible activation made of ON edges.
///
/// Intended for oracles and small instances; the scheduler never calls it.
pub fn feasible_activations(topology: &Topology, states: &[bool]) -> Result<Vec<Activation>> {
    let m = topology.edge_count();
    assert_eq!(states.len(), m, "link-state vector length");
    let on: Vec<usize> = (0..m).filter(|&e| states[e]).collect();

    match topology.interference() {
        Interference::None => {
            if on.len() > 20 {
                return Err(Error::TooLarge {
                    what: "wired activations",
                    size: 1usize << on.len().min(63),
                    limit: ENUMERATION_LIMIT,
                });
            }
            Ok((0u64..1 << on.len())
                .map(|bits| {
                    let chosen: Vec<usize> = on
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| bits >> i & 1 == 1)
                        .map(|(_, &e)| e)
                        .collect();
                    Activation::from_edges(m, &chosen)
                })
                .collect())
        }
        Interference::Primary => {
            let mut out = Vec::new();
            let mut used = vec![false; topology.node_count()];
            let mut chosen = Vec::new();
            enumerate_matchings(topology, &on, 0, &mut used, &mut chosen, &mut out)?;
            Ok(out)
        }
        Interference::Explicit(sets) => {
            let mut out = vec![Activation::empty(m)];
            for set in sets {
                let restricted: Vec<usize> = set.iter().copied().filter(|&e| states[e]).collect();
                let act = Activation::from_edges(m, &restricted);
                if !out.contains(&act) {
                    out.push(act);
                }
            }
            Ok(out)
        }
    }
}

fn enumerate_matchings(
    topology: &Topology,
    candidates: &[usize],
    start: usize,
    used: &mut [bool],
    chosen: &mut Vec<usize>,
    out: &mut Vec<Activation>,
) -> Result<()> {
    if out.len() >= ENUMERATION_LIMIT {
        return Err(Error::TooLarge {
            what: "matchings",
            size: out.len(),
            limit: ENUMERATION_LIMIT,
        });
    }
    out.push(Activation::from_edges(topology.edge_count(), chosen));
    for i in start..candidates.len() {
        let edge = topology.edge(candidates[i]);
        if used[edge.from] || used[edge.to] {
            continue;
        }
        used[edge.from] = true;
        used[edge.to] = true;
        chosen.push(edge.id);
        enumerate_matchings(topology, candidates, i + 1, used, chosen, out)?;
        chosen.pop();
        used[edge.from] = false;
        used[edge.to] = false;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn raw(nodes: usize, edges: &[(usize, usize)], directed: bool) -> RawTopology {
        RawTopology {
            nodes,
            directed,
            edges: edges
                .iter()
                .enumerate()
                .map(|(id, &(from, to))| Edge {
                    id,
                    from,
                    to,
                    capacity: 1.0,
                })
                .collect(),
            interference: RawInterference::None,
        }
    }

    #[test]
    fn accepts_minimal_graph() {
        let topo = validate_topology(&raw(3, &[(0, 1), (1, 2)], false)).unwrap();
        assert_eq!(topo.edge_count(), 2);
        assert_eq!(topo.out_arcs(1).len(), 2);
    }

    #[test]
    fn rejects_zero_capacity() {
        let mut r = raw(3, &[(0, 1), (1, 2)], false);
        r.edges[0].capacity = 0.0;
        let err = validate_topology(&r).unwrap_err().to_string();
        assert!(err.contains("non-positive capacity"), "{err}");
    }

    #[test]
    fn rejects_unknown_edge_in_set() {
        let mut r = raw(3, &[(0, 1), (1, 2)], false);
        r.interference = RawInterference::Explicit { sets: vec![vec![99]] };
        let err = validate_topology(&r).unwrap_err().to_string();
        assert!(err.contains("unknown edge in activation set"), "{err}");
    }

    #[test]
    fn reports_every_violation() {
        let mut r = raw(2, &[(0, 1), (1, 5)], false);
        r.edges[1].id = 0;
        r.edges[0].capacity = -1.0;
        match validate_topology(&r).unwrap_err() {
            Error::Topology(v) => {
                let text: Vec<_> = v.iter().map(|v| v.0.clone()).collect();
                assert!(text.iter().any(|t| t.contains("dangling")));
                assert!(text.iter().any(|t| t.contains("duplicate edge id")));
                assert!(text.iter().any(|t| t.contains("non-positive")));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn degenerate_probabilities() {
        let always = LinkStateProcess::new(vec![1.0; 4], 3).unwrap();
        let never = LinkStateProcess::new(vec![0.0; 4], 3).unwrap();
        for slot in 0..100 {
            assert!(sample_link_states(&always, slot).iter().all(|&s| s));
            assert!(sample_link_states(&never, slot).iter().all(|&s| !s));
        }
    }

    #[test]
    fn empirical_on_frequency() {
        let process = LinkStateProcess::new(vec![0.6; 3], 42).unwrap();
        let slots = 100_000u64;
        let mut counts = [0u64; 3];
        for t in 0..slots {
            for (c, on) in counts.iter_mut().zip(sample_link_states(&process, t)) {
                *c += on as u64;
            }
        }
        for c in counts {
            let freq = c as f64 / slots as f64;
            assert!((freq - 0.6).abs() < 0.01, "{freq}");
        }
    }

    #[test]
    fn link_states_are_pure() {
        let a = LinkStateProcess::new(vec![0.3; 5], 9).unwrap();
        let b = a.clone();
        let forward: Vec<_> = (0..50).map(|t| sample_link_states(&a, t)).collect();
        let backward: Vec<_> = (0..50).rev().map(|t| sample_link_states(&b, t)).collect();
        assert!(forward.iter().eq(backward.iter().rev()));
    }

    fn primary(nodes: usize, edges: &[(usize, usize)]) -> Topology {
        let mut r = raw(nodes, edges, false);
        r.interference = RawInterference::Primary;
        validate_topology(&r).unwrap()
    }

    #[test]
    fn path_matchings() {
        let topo = primary(3, &[(0, 1), (1, 2)]);
        let all = feasible_activations(&topo, &[true, true]).unwrap();
        let sets: Vec<_> = all.iter().map(|a| a.edges()).collect();
        assert_eq!(sets, vec![vec![], vec![0], vec![1]]);

        let off = feasible_activations(&topo, &[false, true]).unwrap();
        let sets: Vec<_> = off.iter().map(|a| a.edges()).collect();
        assert_eq!(sets, vec![vec![], vec![1]]);
    }

    #[test]
    fn four_node_path_matching_rule() {
        let topo = primary(4, &[(0, 1), (1, 2), (2, 3)]);
        let all = feasible_activations(&topo, &[true; 3]).unwrap();
        assert!(all.contains(&Activation::from_edges(3, &[0, 2])));
        assert!(!all.contains(&Activation::from_edges(3, &[0, 1])));
        assert!(all.iter().all(|a| topo.is_feasible(a)));
    }

    #[test]
    fn explicit_sets_restricted_to_on_edges() {
        let mut r = raw(3, &[(0, 1), (1, 2)], false);
        r.interference = RawInterference::Explicit {
            sets: vec![vec![0, 1], vec![1]],
        };
        let topo = validate_topology(&r).unwrap();
        let acts = feasible_activations(&topo, &[false, true]).unwrap();
        assert_eq!(acts.len(), 2);
        assert!(acts.contains(&Activation::empty(2)));
        assert!(acts.contains(&Activation::from_edges(2, &[1])));
    }

    #[test]
    fn wired_lists_all_subsets_of_on_edges() {
        let topo = validate_topology(&raw(3, &[(0, 1), (1, 2), (0, 2)], false)).unwrap();
        let acts = feasible_activations(&topo, &[true, false, true]).unwrap();
        assert_eq!(acts.len(), 4);
    }
}
