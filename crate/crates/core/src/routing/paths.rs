use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{RouteKey, Router};

/// Single-source shortest paths under [`RouteKey`] order.
pub(crate) struct PathTree {
    labels: Vec<Option<RouteKey>>,
    parent: Vec<Option<(usize, usize)>>,
}

impl PathTree {
    pub fn label(&self, node: usize) -> Option<&RouteKey> {
        self.labels[node].as_ref()
    }

    /// Oriented `(edge, tail, head)` arcs from the source to `node`.
    pub fn path_to(&self, node: usize) -> Option<Vec<(usize, usize, usize)>> {
        self.labels[node].as_ref()?;
        let mut arcs = Vec::new();
        let mut at = node;
        while let Some((edge, tail)) = self.parent[at] {
            arcs.push((edge, tail, at));
            at = tail;
        }
        arcs.reverse();
        Some(arcs)
    }
}

pub(crate) fn dijkstra(router: &Router<'_>, source: usize, weights: &[f64]) -> PathTree {
    let topo = router.topology();
    let n = topo.node_count();
    let mut labels: Vec<Option<RouteKey>> = vec![None; n];
    let mut parent = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    labels[source] = Some(RouteKey::zero());
    heap.push(Reverse((RouteKey::zero(), source)));

    while let Some(Reverse((key, node))) = heap.pop() {
        if done[node] {
            continue;
        }
        done[node] = true;
        for arc in topo.out_arcs(node) {
            if done[arc.head] {
                continue;
            }
            let candidate = &key + &router.edge_key(arc.edge, weights);
            let better = match &labels[arc.head] {
                None => true,
                Some(current) => candidate < *current,
            };
            if better {
                labels[arc.head] = Some(candidate.clone());
                parent[arc.head] = Some((arc.edge, node));
                heap.push(Reverse((candidate, arc.head)));
            }
        }
    }
    PathTree { labels, parent }
}
