//! Brute-force oracles shared by the integration suites. None of them calls
//! the library's routing, scheduling or conjugate code.
#![allow(dead_code)]

use std::collections::VecDeque;

use rand::Rng;
use umwplus::topology::{validate_topology, Edge, RawInterference, RawTopology, Topology};
use umwplus::traffic::{FlowKind, TrafficClass, UtilitySpec};

/// Random connected-ish graph with small integer capacities.
pub fn random_topology(
    rng: &mut impl Rng,
    nodes: usize,
    max_edges: usize,
    directed: bool,
    interference: RawInterference,
) -> Topology {
    let mut pairs = Vec::new();
    // a spanning path keeps most instances feasible
    let mut order: Vec<usize> = (0..nodes).collect();
    for i in (1..nodes).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    for w in order.windows(2) {
        pairs.push((w[0], w[1]));
    }
    let extra = rng.gen_range(0..=max_edges.saturating_sub(pairs.len()));
    for _ in 0..extra {
        let a = rng.gen_range(0..nodes);
        let b = rng.gen_range(0..nodes);
        if a != b {
            pairs.push((a, b));
        }
    }
    let edges = pairs
        .into_iter()
        .enumerate()
        .map(|(id, (from, to))| Edge {
            id,
            from,
            to,
            capacity: rng.gen_range(1..=3) as f64,
        })
        .collect();
    validate_topology(&RawTopology {
        nodes,
        directed,
        edges,
        interference,
    })
    .unwrap()
}

/// Lexicographic comparison of route candidates: cost, edge count, ids.
fn better(a: (f64, &[usize]), b: (f64, &[usize])) -> bool {
    match a.0.partial_cmp(&b.0).unwrap() {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => (a.1.len(), a.1) < (b.1.len(), b.1),
    }
}

/// Nodes reached from `root` if `subset` forms an out-tree rooted there,
/// following edge directions when the graph is directed.
fn out_tree_nodes(topology: &Topology, root: usize, subset: &[usize]) -> Option<Vec<bool>> {
    let n = topology.node_count();
    let mut reached = vec![false; n];
    let mut used = vec![false; subset.len()];
    reached[root] = true;
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        for (i, &e) in subset.iter().enumerate() {
            if used[i] {
                continue;
            }
            let edge = topology.edge(e);
            let next = if edge.from == u {
                Some(edge.to)
            } else if !topology.is_directed() && edge.to == u {
                Some(edge.from)
            } else {
                None
            };
            if let Some(v) = next {
                used[i] = true;
                if reached[v] {
                    return None;
                }
                reached[v] = true;
                queue.push_back(v);
            }
        }
    }
    used.iter().all(|&u| u).then_some(reached)
}

/// Cheapest route of `class` by enumerating every edge subset.
pub fn brute_force_route(class: &TrafficClass, topology: &Topology, weights: &[f64]) -> Option<(Vec<usize>, f64)> {
    let m = topology.edge_count();
    assert!(m <= 16, "too many edges for enumeration");
    let mut best: Option<(Vec<usize>, f64)> = None;
    for mask in 0u32..(1 << m) {
        let subset: Vec<usize> = (0..m).filter(|&e| mask >> e & 1 == 1).collect();
        let Some(reached) = out_tree_nodes(topology, class.kind.source(), &subset) else {
            continue;
        };
        let ok = match &class.kind {
            FlowKind::Unicast { dest, .. } => reached[*dest],
            FlowKind::Broadcast { .. } => reached.iter().all(|&r| r),
            FlowKind::Multicast { terminals, .. } => terminals.iter().all(|&t| reached[t]),
            FlowKind::Anycast { destinations, .. } => destinations.iter().any(|&d| reached[d]),
        };
        if !ok {
            continue;
        }
        let cost: f64 = subset.iter().map(|&e| weights[e]).sum();
        if best.as_ref().is_none_or(|(b, bc)| better((cost, &subset), (*bc, b))) {
            best = Some((subset, cost));
        }
    }
    best
}

/// Maximum-weight matching among ON edges by enumeration, with the same
/// preference order as the scheduler: weight, then fewer edges, then ids.
pub fn brute_force_matching(topology: &Topology, queues: &[f64], states: &[bool]) -> (Vec<usize>, f64) {
    let m = topology.edge_count();
    assert!(m <= 20);
    let w: Vec<f64> = (0..m)
        .map(|e| {
            if states[e] {
                queues[e] * topology.edge(e).capacity
            } else {
                0.0
            }
        })
        .collect();
    let mut best: (Vec<usize>, f64) = (Vec::new(), 0.0);
    for mask in 0u32..(1 << m) {
        let subset: Vec<usize> = (0..m).filter(|&e| mask >> e & 1 == 1).collect();
        if subset.iter().any(|&e| !states[e]) {
            continue;
        }
        let mut used = vec![false; topology.node_count()];
        let mut matching = true;
        for &e in &subset {
            let edge = topology.edge(e);
            if used[edge.from] || used[edge.to] {
                matching = false;
                break;
            }
            used[edge.from] = true;
            used[edge.to] = true;
        }
        if !matching {
            continue;
        }
        let weight: f64 = subset.iter().map(|&e| w[e]).sum();
        let wins = weight > best.1 || (weight == best.1 && (subset.len(), &subset) < (best.0.len(), &best.0));
        if wins {
            best = (subset, weight);
        }
    }
    best
}

/// `sup_{x >= 0} (x z + U(x))` by bracketing and repeated grid refinement.
pub fn grid_conjugate(u: &UtilitySpec, z: f64) -> f64 {
    let f = |x: f64| x * z + u.at(x);
    let mut hi = 1.0;
    while f(2.0 * hi) > f(hi) {
        hi *= 2.0;
        assert!(hi < 1e15, "no bracket");
    }
    let (mut lo, mut hi) = (0.0, 2.0 * hi);
    let points = 1000;
    let mut best = f(0.0);
    for _ in 0..80 {
        let step = (hi - lo) / points as f64;
        let (mut arg, mut val) = (lo, f(lo));
        for i in 1..=points {
            let x = lo + step * i as f64;
            let y = f(x);
            if y > val {
                arg = x;
                val = y;
            }
        }
        best = best.max(val);
        lo = (arg - step).max(0.0);
        hi = arg + step;
        if hi - lo < 1e-13 * hi.max(1.0) {
            break;
        }
    }
    best
}

pub fn log_class(id: usize, kind: FlowKind, gamma: f64, a_max: f64) -> TrafficClass {
    TrafficClass {
        id,
        kind,
        utility: UtilitySpec::log(gamma),
        a_max,
    }
}

/// A random class of the given kind rooted at a random node, or `None` when
/// the graph is too small for it.
pub fn random_class(rng: &mut impl Rng, kind: usize, nodes: usize) -> Option<FlowKind> {
    let source = rng.gen_range(0..nodes);
    let others: Vec<usize> = (0..nodes).filter(|&v| v != source).collect();
    if others.is_empty() {
        return None;
    }
    let mut pick = |count: usize| {
        let mut set: Vec<usize> = others.clone();
        for i in (1..set.len()).rev() {
            set.swap(i, rng.gen_range(0..=i));
        }
        set.truncate(count.max(1));
        set.sort_unstable();
        set
    };
    Some(match kind % 4 {
        0 => FlowKind::Unicast {
            source,
            dest: pick(1)[0],
        },
        1 => FlowKind::Broadcast { root: source },
        2 => {
            let count = 1 + (source % others.len().min(4));
            FlowKind::Multicast {
                source,
                terminals: pick(count),
            }
        }
        _ => {
            let count = 1 + (source % others.len().min(3));
            FlowKind::Anycast {
                source,
                destinations: pick(count),
            }
        }
    })
}
