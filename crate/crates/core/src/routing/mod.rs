//! Minimum-weight routes on an edge-weighted graph, one route family per flow kind.
//!
//! Unicast and anycast classes route on shortest paths, broadcast classes on a
//! minimum spanning tree (a minimum out-arborescence on directed graphs) and
//! multicast classes on a Steiner tree. Among routes of equal weight the one
//! with fewer edges wins, then the lexicographically smallest sorted edge-id
//! sequence. The rule is applied exactly, so two callers handing in the same
//! weights always get the same route.

mod key;
mod paths;
mod steiner;
mod tree;

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::topology::Topology;
use crate::traffic::{FlowKind, TrafficClass};

pub(crate) use key::RouteKey;

/// Largest terminal count solved exactly by the Steiner dynamic program.
pub const DEFAULT_STEINER_EXACT_LIMIT: usize = 8;

/// One traversal of a route edge, oriented away from the route's root.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RouteArc {
    pub edge: usize,
    pub tail: usize,
    pub head: usize,
    /// Hops from the root to `tail`.
    pub depth: u32,
}

/// A path or tree chosen for a class, with its traversal direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub class_id: usize,
    pub root: usize,
    edges: Vec<usize>,
    arcs: Vec<RouteArc>,
    destinations: Vec<usize>,
    /// Set when the route came from the Steiner approximation.
    pub approximate: bool,
}

impl Route {
    /// Builds a route from oriented `(edge, tail, head)` triples forming a tree
    /// rooted at `root`. Arcs are stored in breadth-first order.
    pub(crate) fn from_arcs(
        class_id: usize,
        root: usize,
        node_count: usize,
        arcs: &[(usize, usize, usize)],
        mut destinations: Vec<usize>,
        approximate: bool,
    ) -> Result<Route> {
        let mut children: Vec<Vec<(usize, usize)>> = vec![Vec::new(); node_count];
        for &(edge, tail, head) in arcs {
            children[tail].push((edge, head));
        }
        for list in &mut children {
            list.sort_unstable();
        }
        let mut ordered = Vec::with_capacity(arcs.len());
        let mut seen = vec![false; node_count];
        seen[root] = true;
        let mut frontier = vec![root];
        let mut depth = 0u32;
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for &tail in &frontier {
                for &(edge, head) in &children[tail] {
                    if seen[head] {
                        return Err(Error::Fault(format!(
                            "route for class {class_id} is not a tree (node {head} reached twice)"
                        )));
                    }
                    seen[head] = true;
                    ordered.push(RouteArc {
                        edge,
                        tail,
                        head,
                        depth,
                    });
                    next.push(head);
                }
            }
            frontier = next;
            depth += 1;
        }
        if ordered.len() != arcs.len() {
            return Err(Error::Fault(format!(
                "route for class {class_id} has arcs unreachable from its root {root}"
            )));
        }
        let mut edges: Vec<usize> = ordered.iter().map(|a| a.edge).collect();
        edges.sort_unstable();
        destinations.sort_unstable();
        Ok(Route {
            class_id,
            root,
            edges,
            arcs: ordered,
            destinations,
            approximate,
        })
    }

    /// Edge ids of the route, ascending.
    pub fn edges(&self) -> &[usize] {
        &self.edges
    }

    pub fn arcs(&self) -> &[RouteArc] {
        &self.arcs
    }

    /// Nodes that must receive a copy for a packet to count as delivered.
    pub fn destinations(&self) -> &[usize] {
        &self.destinations
    }

    pub fn contains(&self, edge: usize) -> bool {
        self.edges.binary_search(&edge).is_ok()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Arcs leaving `node` along the route.
    pub fn arcs_from(&self, node: usize) -> impl Iterator<Item = &RouteArc> + '_ {
        self.arcs.iter().filter(move |a| a.tail == node)
    }

    pub fn is_destination(&self, node: usize) -> bool {
        self.destinations.binary_search(&node).is_ok()
    }

    /// Nodes touched by the route, root included.
    pub fn nodes(&self) -> Vec<usize> {
        let mut nodes: Vec<usize> = std::iter::once(self.root)
            .chain(self.arcs.iter().map(|a| a.head))
            .collect();
        nodes.sort_unstable();
        nodes
    }

    /// Checks that the route belongs to the route family of `class`.
    pub fn check(&self, class: &TrafficClass, topology: &Topology) -> Result<()> {
        let fault = |msg: String| Err(Error::Fault(format!("class {}: {msg}", class.id)));
        if self.root != class.kind.source() {
            return fault(format!("route rooted at {} instead of the source", self.root));
        }
        for arc in &self.arcs {
            let edge = topology.edge(arc.edge);
            let forward = edge.from == arc.tail && edge.to == arc.head;
            let backward = edge.to == arc.tail && edge.from == arc.head;
            if !(forward || (backward && !topology.is_directed())) {
                return fault(format!("arc {:?} does not follow edge {}", arc, arc.edge));
            }
        }
        let is_path = self.arcs.iter().all(|a| self.arcs_from(a.tail).count() == 1);
        let end = self.arcs.last().map(|a| a.head);
        let nodes = self.nodes();
        match &class.kind {
            FlowKind::Unicast { dest, .. } => {
                if !is_path || end != Some(*dest) {
                    return fault("unicast route is not a source-destination path".into());
                }
            }
            FlowKind::Anycast { destinations, .. } => {
                if !is_path || !end.is_some_and(|e| destinations.contains(&e)) {
                    return fault("anycast route is not a path to a destination".into());
                }
            }
            FlowKind::Broadcast { .. } => {
                if nodes.len() != topology.node_count() {
                    return fault("broadcast route does not span every node".into());
                }
            }
            FlowKind::Multicast { terminals, .. } => {
                if terminals.iter().any(|t| nodes.binary_search(t).is_err()) {
                    return fault("multicast route misses a terminal".into());
                }
            }
        }
        Ok(())
    }
}

/// Σ_{e in route} weights_e, summed in ascending edge-id order.
pub fn route_cost(route: &Route, weights: &[f64]) -> f64 {
    route.edges.iter().map(|&e| weights[e]).sum()
}

/// Computes minimum-weight routes on one topology.
#[derive(Debug, Clone)]
pub struct Router<'a> {
    topology: &'a Topology,
    steiner_exact_limit: usize,
    penalties: Vec<BigInt>,
}

impl<'a> Router<'a> {
    pub fn new(topology: &'a Topology, steiner_exact_limit: usize) -> Self {
        Router {
            topology,
            steiner_exact_limit,
            penalties: key::edge_penalties(topology.edge_count()),
        }
    }

    pub fn topology(&self) -> &'a Topology {
        self.topology
    }

    pub(crate) fn edge_key(&self, edge: usize, weights: &[f64]) -> RouteKey {
        RouteKey {
            cost: weights[edge],
            edges: 1,
            penalty: self.penalties[edge].clone(),
        }
    }

    /// The minimum-weight route of `class` and its cost under `weights`.
    pub fn shortest_route(&self, class: &TrafficClass, weights: &[f64]) -> Result<(Route, f64)> {
        assert_eq!(weights.len(), self.topology.edge_count(), "weight vector length");
        debug_assert!(weights.iter().all(|&w| w >= 0.0), "negative route weight");
        let n = self.topology.node_count();
        let route = match &class.kind {
            FlowKind::Unicast { source, dest } => {
                let tree = paths::dijkstra(self, *source, weights);
                let arcs = tree
                    .path_to(*dest)
                    .ok_or_else(|| infeasible(class, "destination unreachable"))?;
                Route::from_arcs(class.id, *source, n, &arcs, vec![*dest], false)?
            }
            FlowKind::Anycast { source, destinations } => {
                let tree = paths::dijkstra(self, *source, weights);
                let best = destinations
                    .iter()
                    .filter_map(|&d| tree.label(d).map(|k| (k, d)))
                    .min_by(|a, b| a.0.cmp(b.0))
                    .map(|(_, d)| d)
                    .ok_or_else(|| infeasible(class, "no destination reachable"))?;
                let arcs = tree.path_to(best).expect("reachable destination");
                Route::from_arcs(class.id, *source, n, &arcs, vec![best], false)?
            }
            FlowKind::Broadcast { root } => {
                let arcs = if self.topology.is_directed() {
                    tree::min_arborescence(self, *root, weights)
                } else {
                    tree::min_spanning_tree(self, *root, weights)
                }
                .ok_or_else(|| infeasible(class, "graph has no spanning tree from the root"))?;
                let dests = (0..n).filter(|&v| v != *root).collect();
                Route::from_arcs(class.id, *root, n, &arcs, dests, false)?
            }
            FlowKind::Multicast { source, terminals } => {
                let (arcs, approximate) = if terminals.len() <= self.steiner_exact_limit {
                    (steiner::exact(self, *source, terminals, weights), false)
                } else {
                    (steiner::approximate(self, *source, terminals, weights), true)
                };
                let arcs = arcs.ok_or_else(|| infeasible(class, "a terminal is unreachable"))?;
                Route::from_arcs(class.id, *source, n, &arcs, terminals.clone(), approximate)?
            }
        };
        let cost = route_cost(&route, weights);
        Ok((route, cost))
    }
}

fn infeasible(class: &TrafficClass, reason: &str) -> Error {
    Error::InfeasibleClass {
        class: class.id,
        reason: reason.to_string(),
    }
}

/// Convenience wrapper using [`DEFAULT_STEINER_EXACT_LIMIT`].
pub fn shortest_route(class: &TrafficClass, topology: &Topology, weights: &[f64]) -> Result<(Route, f64)> {
    Router::new(topology, DEFAULT_STEINER_EXACT_LIMIT).shortest_route(class, weights)
}
