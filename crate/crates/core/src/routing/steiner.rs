use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use super::paths::dijkstra;
use super::tree::orient_from;
use super::{RouteKey, Router};

#[derive(Clone, Copy)]
enum Back {
    Leaf,
    Arc { edge: usize, child: usize },
    Split(usize),
}

/// Dreyfus-Wagner dynamic program over terminal subsets, rooted at `source`.
///
/// `best[S][v]` is the cheapest tree hanging from `v` that reaches every
/// terminal in `S`; on directed graphs the tree is an out-arborescence.
pub(crate) fn exact(
    router: &Router<'_>,
    source: usize,
    terminals: &[usize],
    weights: &[f64],
) -> Option<Vec<(usize, usize, usize)>> {
    let topo = router.topology();
    let n = topo.node_count();
    let k = terminals.len();
    let full = (1usize << k) - 1;

    // arcs entering each node, as (edge, tail)
    let mut incoming: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for tail in 0..n {
        for arc in topo.out_arcs(tail) {
            incoming[arc.head].push((arc.edge, tail));
        }
    }

    let mut best: Vec<Vec<Option<RouteKey>>> = vec![vec![None; n]; full + 1];
    let mut back: Vec<Vec<Back>> = vec![vec![Back::Leaf; n]; full + 1];

    for mask in 1..=full {
        if mask.is_power_of_two() {
            let t = terminals[mask.trailing_zeros() as usize];
            best[mask][t] = Some(RouteKey::zero());
        } else {
            let low = mask & mask.wrapping_neg();
            for v in 0..n {
                let mut sub = (mask - 1) & mask;
                while sub > 0 {
                    if sub & low != 0 {
                        if let (Some(a), Some(b)) = (&best[sub][v], &best[mask ^ sub][v]) {
                            let candidate = a + b;
                            if best[mask][v].as_ref().is_none_or(|cur| candidate < *cur) {
                                best[mask][v] = Some(candidate);
                                back[mask][v] = Back::Split(sub);
                            }
                        }
                    }
                    sub = (sub - 1) & mask;
                }
            }
        }

        // grow trees upward along incoming arcs
        let mut heap: BinaryHeap<Reverse<(RouteKey, usize)>> = (0..n)
            .filter_map(|v| best[mask][v].clone().map(|key| Reverse((key, v))))
            .collect();
        let mut done = vec![false; n];
        while let Some(Reverse((key, child))) = heap.pop() {
            if done[child] {
                continue;
            }
            done[child] = true;
            for &(edge, parent) in &incoming[child] {
                if done[parent] {
                    continue;
                }
                let candidate = &key + &router.edge_key(edge, weights);
                if best[mask][parent].as_ref().is_none_or(|cur| candidate < *cur) {
                    best[mask][parent] = Some(candidate.clone());
                    back[mask][parent] = Back::Arc { edge, child };
                    heap.push(Reverse((candidate, parent)));
                }
            }
        }
    }

    best[full][source].as_ref()?;
    let mut arcs = Vec::new();
    let mut stack = vec![(full, source)];
    while let Some((mask, v)) = stack.pop() {
        match back[mask][v] {
            Back::Leaf => {}
            Back::Arc { edge, child } => {
                arcs.push((edge, v, child));
                stack.push((mask, child));
            }
            Back::Split(sub) => {
                stack.push((sub, v));
                stack.push((mask ^ sub, v));
            }
        }
    }
    arcs.sort_unstable();
    arcs.dedup();
    Some(into_tree(source, terminals, n, arcs))
}

/// Rounding in summed keys can let the backtrack pick overlapping subtrees.
/// Keeps one entering arc per node (breadth-first from `source`), then prunes
/// non-terminal leaves; the result is a subset of `arcs`.
fn into_tree(
    source: usize,
    terminals: &[usize],
    n: usize,
    arcs: Vec<(usize, usize, usize)>,
) -> Vec<(usize, usize, usize)> {
    let mut indegree = vec![0usize; n];
    for &(_, _, head) in &arcs {
        indegree[head] += 1;
    }
    if indegree[source] == 0 && indegree.iter().all(|&d| d <= 1) {
        return arcs;
    }
    let mut seen = vec![false; n];
    seen[source] = true;
    let mut frontier = vec![source];
    let mut kept = Vec::new();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &tail in &frontier {
            for &(edge, t, head) in &arcs {
                if t == tail && !seen[head] {
                    seen[head] = true;
                    kept.push((edge, tail, head));
                    next.push(head);
                }
            }
        }
        frontier = next;
    }
    loop {
        let before = kept.len();
        let tails: BTreeSet<usize> = kept.iter().map(|a| a.1).collect();
        kept.retain(|&(_, _, head)| tails.contains(&head) || terminals.contains(&head));
        if kept.len() == before {
            break;
        }
    }
    kept.sort_unstable();
    kept
}

/// Metric-closure MST heuristic (within a factor 2 of optimal) on undirected
/// graphs; the union of shortest source-terminal paths on directed graphs.
pub(crate) fn approximate(
    router: &Router<'_>,
    source: usize,
    terminals: &[usize],
    weights: &[f64],
) -> Option<Vec<(usize, usize, usize)>> {
    let topo = router.topology();
    if topo.is_directed() {
        let tree = dijkstra(router, source, weights);
        let mut arcs = BTreeSet::new();
        for &t in terminals {
            arcs.extend(tree.path_to(t)?);
        }
        return Some(arcs.into_iter().collect());
    }

    let points: Vec<usize> = std::iter::once(source).chain(terminals.iter().copied()).collect();
    let trees: Vec<_> = points.iter().map(|&p| dijkstra(router, p, weights)).collect();
    if points.iter().any(|&p| trees[0].label(p).is_none()) {
        return None;
    }

    // Prim over the metric closure
    let mut in_tree = vec![false; points.len()];
    in_tree[0] = true;
    let mut union: BTreeSet<usize> = BTreeSet::new();
    for _ in 1..points.len() {
        let (from, to) = (0..points.len())
            .filter(|&i| in_tree[i])
            .flat_map(|i| (0..points.len()).filter(|&j| !in_tree[j]).map(move |j| (i, j)))
            .min_by(|&(a, b), &(c, d)| {
                trees[a]
                    .label(points[b])
                    .unwrap()
                    .cmp(trees[c].label(points[d]).unwrap())
            })?;
        in_tree[to] = true;
        for (edge, _, _) in trees[from].path_to(points[to])? {
            union.insert(edge);
        }
    }

    // spanning tree of the union, then strip non-terminal leaves
    let mut order: Vec<usize> = union.into_iter().collect();
    order.sort_by(|&a, &b| weights[a].total_cmp(&weights[b]).then(a.cmp(&b)));
    let mut parent: Vec<usize> = (0..topo.node_count()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut kept = Vec::new();
    for e in order {
        let edge = topo.edge(e);
        let (a, b) = (find(&mut parent, edge.from), find(&mut parent, edge.to));
        if a != b {
            parent[a] = b;
            kept.push(e);
        }
    }
    loop {
        let mut degree = vec![0usize; topo.node_count()];
        for &e in &kept {
            degree[topo.edge(e).from] += 1;
            degree[topo.edge(e).to] += 1;
        }
        let before = kept.len();
        kept.retain(|&e| {
            let edge = topo.edge(e);
            let prunable = |v: usize| degree[v] == 1 && !points.contains(&v);
            !(prunable(edge.from) || prunable(edge.to))
        });
        if kept.len() == before {
            break;
        }
    }
    Some(orient_from(router, source, &kept))
}
