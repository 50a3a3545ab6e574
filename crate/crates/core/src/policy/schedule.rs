use std::cmp::Ordering;

use crate::topology::{Activation, Interference, Topology};

/// Largest number of positive-weight candidate edges solved exactly.
pub const DEFAULT_MATCHING_EXACT_LIMIT: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub activation: Activation,
    /// False when the greedy matching fallback was used.
    pub exact: bool,
}

/// Link weights `Q_e c_e` for ON links, zero for OFF links.
pub fn link_weights(queues: &[f64], topology: &Topology, states: &[bool]) -> Vec<f64> {
    topology
        .edges()
        .iter()
        .map(|e| if states[e.id] { queues[e.id] * e.capacity } else { 0.0 })
        .collect()
}

/// Total order used to pick among activations: larger weight first, then
/// fewer edges, then the lexicographically smaller sorted edge-id sequence.
pub fn compare_activations(a: &[usize], wa: f64, b: &[usize], wb: f64) -> Ordering {
    wb.total_cmp(&wa).then(a.len().cmp(&b.len())).then_with(|| a.cmp(b))
}

/// Maximum-weight activation with the default exactness threshold.
pub fn max_weight_activation(queues: &[f64], topology: &Topology, states: &[bool]) -> Activation {
    schedule(queues, topology, states, DEFAULT_MATCHING_EXACT_LIMIT).activation
}

/// Picks `argmax_{mu in M} sum_e Q_e c_e mu_e sigma_e`.
///
/// Wired networks activate every ON link. Under primary interference the
/// matching is found by branch and bound when at most `exact_limit` links carry
/// positive weight, otherwise greedily by descending weight.
pub fn schedule(queues: &[f64], topology: &Topology, states: &[bool], exact_limit: usize) -> Schedule {
    let m = topology.edge_count();
    let weights = link_weights(queues, topology, states);
    match topology.interference() {
        Interference::None => Schedule {
            activation: Activation::from_mask(states.to_vec()),
            exact: true,
        },
        Interference::Primary => {
            let candidates: Vec<usize> = (0..m).filter(|&e| states[e] && weights[e] > 0.0).collect();
            if candidates.len() <= exact_limit {
                let mut search = MatchingSearch::new(topology, &weights, &candidates);
                search.run(0, 0.0);
                Schedule {
                    activation: Activation::from_edges(m, &search.best),
                    exact: true,
                }
            } else {
                Schedule {
                    activation: greedy_matching(topology, &weights, candidates),
                    exact: false,
                }
            }
        }
        Interference::Explicit(sets) => {
            let mut best: Vec<usize> = Vec::new();
            let mut best_weight = 0.0;
            for set in sets {
                let restricted: Vec<usize> = set.iter().copied().filter(|&e| states[e]).collect();
                let w: f64 = restricted.iter().map(|&e| weights[e]).sum();
                if compare_activations(&restricted, w, &best, best_weight) == Ordering::Less {
                    best = restricted;
                    best_weight = w;
                }
            }
            Schedule {
                activation: Activation::from_edges(m, &best),
                exact: true,
            }
        }
    }
}

struct MatchingSearch<'a> {
    topology: &'a Topology,
    weights: &'a [f64],
    candidates: &'a [usize],
    /// suffix sums of candidate weights, for the bound
    remaining: Vec<f64>,
    used: Vec<bool>,
    chosen: Vec<usize>,
    best: Vec<usize>,
    best_weight: f64,
}

impl<'a> MatchingSearch<'a> {
    fn new(topology: &'a Topology, weights: &'a [f64], candidates: &'a [usize]) -> Self {
        let mut remaining = vec![0.0; candidates.len() + 1];
        for i in (0..candidates.len()).rev() {
            remaining[i] = remaining[i + 1] + weights[candidates[i]];
        }
        MatchingSearch {
            topology,
            weights,
            candidates,
            remaining,
            used: vec![false; topology.node_count()],
            chosen: Vec::new(),
            best: Vec::new(),
            best_weight: 0.0,
        }
    }

    fn run(&mut self, index: usize, weight: f64) {
        if index == self.candidates.len() {
            // re-sum in id order so ties compare on identical floats
            let w: f64 = self.chosen.iter().map(|&e| self.weights[e]).sum();
            if compare_activations(&self.chosen, w, &self.best, self.best_weight) == Ordering::Less {
                self.best = self.chosen.clone();
                self.best_weight = w;
            }
            return;
        }
        let bound = weight + self.remaining[index];
        if bound + 1e-9 * (1.0 + self.best_weight.abs()) < self.best_weight {
            return;
        }
        let e = self.candidates[index];
        let edge = self.topology.edge(e);
        if !self.used[edge.from] && !self.used[edge.to] {
            self.used[edge.from] = true;
            self.used[edge.to] = true;
            self.chosen.push(e);
            self.run(index + 1, weight + self.weights[e]);
            self.chosen.pop();
            self.used[edge.from] = false;
            self.used[edge.to] = false;
        }
        self.run(index + 1, weight);
    }
}

fn greedy_matching(topology: &Topology, weights: &[f64], mut candidates: Vec<usize>) -> Activation {
    candidates.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    let mut used = vec![false; topology.node_count()];
    let mut chosen = Vec::new();
    for e in candidates {
        let edge = topology.edge(e);
        if !used[edge.from] && !used[edge.to] {
            used[edge.from] = true;
            used[edge.to] = true;
            chosen.push(e);
        }
    }
    Activation::from_edges(topology.edge_count(), &chosen)
}
