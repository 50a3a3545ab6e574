use super::{RouteKey, Router};

/// Union-find with path halving.
struct Components {
    parent: Vec<usize>,
}

impl Components {
    fn new(n: usize) -> Self {
        Components {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

/// Kruskal over edges ordered by `(weight, id)`, oriented away from `root`.
///
/// Minimum-weight spanning trees are the bases of a matroid in which the
/// greedy choice by id within each weight level yields the lexicographically
/// smallest basis, so this order realizes the tie rule without big keys.
pub(crate) fn min_spanning_tree(
    router: &Router<'_>,
    root: usize,
    weights: &[f64],
) -> Option<Vec<(usize, usize, usize)>> {
    let topo = router.topology();
    let n = topo.node_count();
    let mut order: Vec<usize> = (0..topo.edge_count()).collect();
    order.sort_by(|&a, &b| weights[a].total_cmp(&weights[b]).then(a.cmp(&b)));
    let mut comps = Components::new(n);
    let mut chosen = Vec::with_capacity(n.saturating_sub(1));
    for e in order {
        let edge = topo.edge(e);
        if comps.union(edge.from, edge.to) {
            chosen.push(e);
        }
    }
    if chosen.len() + 1 != n {
        return None;
    }
    Some(orient_from(router, root, &chosen))
}

/// Orients an undirected tree given by edge ids away from `root`.
pub(crate) fn orient_from(router: &Router<'_>, root: usize, edges: &[usize]) -> Vec<(usize, usize, usize)> {
    let topo = router.topology();
    let mut adjacent: Vec<Vec<usize>> = vec![Vec::new(); topo.node_count()];
    for &e in edges {
        let edge = topo.edge(e);
        adjacent[edge.from].push(e);
        adjacent[edge.to].push(e);
    }
    let mut arcs = Vec::with_capacity(edges.len());
    let mut seen = vec![false; topo.node_count()];
    seen[root] = true;
    let mut stack = vec![root];
    while let Some(node) = stack.pop() {
        for &e in &adjacent[node] {
            let head = topo.edge(e).other(node).expect("incident edge");
            if !seen[head] {
                seen[head] = true;
                arcs.push((e, node, head));
                stack.push(head);
            }
        }
    }
    arcs
}

struct Candidate {
    tail: usize,
    head: usize,
    key: RouteKey,
    /// Index of the arc this one stands for one contraction level up.
    origin: usize,
}

/// Chu-Liu/Edmonds minimum out-arborescence rooted at `root`.
pub(crate) fn min_arborescence(
    router: &Router<'_>,
    root: usize,
    weights: &[f64],
) -> Option<Vec<(usize, usize, usize)>> {
    let topo = router.topology();
    let base: Vec<Candidate> = topo
        .edges()
        .iter()
        .map(|e| Candidate {
            tail: e.from,
            head: e.to,
            key: router.edge_key(e.id, weights),
            origin: e.id,
        })
        .collect();
    let picked = edmonds(topo.node_count(), root, &base)?;
    let mut arcs: Vec<(usize, usize, usize)> = picked
        .into_iter()
        .map(|i| (base[i].origin, base[i].tail, base[i].head))
        .collect();
    arcs.sort_unstable();
    Some(arcs)
}

/// Returns indices into `arcs` forming the optimal arborescence.
fn edmonds(n: usize, root: usize, arcs: &[Candidate]) -> Option<Vec<usize>> {
    // cheapest incoming arc per node
    let mut best_in: Vec<Option<usize>> = vec![None; n];
    for (i, arc) in arcs.iter().enumerate() {
        if arc.head == root || arc.tail == arc.head {
            continue;
        }
        let better = match best_in[arc.head] {
            None => true,
            Some(j) => arc.key < arcs[j].key,
        };
        if better {
            best_in[arc.head] = Some(i);
        }
    }
    if (0..n).any(|v| v != root && best_in[v].is_none()) {
        return None;
    }

    // detect cycles among the chosen arcs
    let mut component = vec![usize::MAX; n];
    let mut visit = vec![usize::MAX; n];
    let mut cycles: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        let mut v = start;
        while v != root && visit[v] == usize::MAX && component[v] == usize::MAX {
            visit[v] = start;
            v = arcs[best_in[v].unwrap()].tail;
        }
        if v != root && visit[v] == start && component[v] == usize::MAX {
            let mut cycle = vec![v];
            component[v] = cycles.len();
            let mut u = arcs[best_in[v].unwrap()].tail;
            while u != v {
                component[u] = cycles.len();
                cycle.push(u);
                u = arcs[best_in[u].unwrap()].tail;
            }
            cycles.push(cycle);
        }
    }

    if cycles.is_empty() {
        return Some((0..n).filter(|&v| v != root).map(|v| best_in[v].unwrap()).collect());
    }

    // contract each cycle into one node
    let mut next_id = cycles.len();
    for c in component.iter_mut() {
        if *c == usize::MAX {
            *c = next_id;
            next_id += 1;
        }
    }
    let contracted: Vec<Candidate> = arcs
        .iter()
        .enumerate()
        .filter(|(_, a)| component[a.tail] != component[a.head])
        .map(|(i, a)| {
            let key = if component[a.head] < cycles.len() {
                &a.key - &arcs[best_in[a.head].unwrap()].key
            } else {
                a.key.clone()
            };
            Candidate {
                tail: component[a.tail],
                head: component[a.head],
                key,
                origin: i,
            }
        })
        .collect();
    let inner = edmonds(next_id, component[root], &contracted)?;

    let mut chosen: Vec<usize> = inner.iter().map(|&i| contracted[i].origin).collect();
    for cycle in &cycles {
        let entry_head = chosen
            .iter()
            .map(|&i| arcs[i].head)
            .find(|h| cycle.contains(h))
            .expect("contracted cycle has an entering arc");
        chosen.extend(cycle.iter().filter(|&&v| v != entry_head).map(|&v| best_in[v].unwrap()));
    }
    Some(chosen)
}
