use std::cmp::Ordering;
use std::ops::{Add, Sub};

use num_bigint::BigInt;

/// Additive, totally ordered route weight that encodes the tie rule.
///
/// Keys compare by weighted cost, then by edge count, then by `penalty`.
/// Edge `e` of an `m`-edge graph carries penalty `-2^(m-1-e)`, so among
/// edge sets of equal size the smaller penalty sum is exactly the set whose
/// sorted id sequence is lexicographically smaller. Every per-edge key is
/// strictly positive, which keeps zero-cost cycles out of optimal routes.
#[derive(Debug, Clone)]
pub(crate) struct RouteKey {
    pub cost: f64,
    pub edges: i64,
    pub penalty: BigInt,
}

impl RouteKey {
    pub fn zero() -> Self {
        RouteKey {
            cost: 0.0,
            edges: 0,
            penalty: BigInt::from(0),
        }
    }
}

/// Per-edge penalties for a graph with `m` edges.
pub(crate) fn edge_penalties(m: usize) -> Vec<BigInt> {
    (0..m).map(|e| -(BigInt::from(1) << (m - 1 - e))).collect()
}

impl Add for &RouteKey {
    type Output = RouteKey;

    fn add(self, rhs: &RouteKey) -> RouteKey {
        RouteKey {
            cost: self.cost + rhs.cost,
            edges: self.edges + rhs.edges,
            penalty: &self.penalty + &rhs.penalty,
        }
    }
}

impl Sub for &RouteKey {
    type Output = RouteKey;

    fn sub(self, rhs: &RouteKey) -> RouteKey {
        RouteKey {
            cost: self.cost - rhs.cost,
            edges: self.edges - rhs.edges,
            penalty: &self.penalty - &rhs.penalty,
        }
    }
}

impl Ord for RouteKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then(self.edges.cmp(&other.edges))
            .then_with(|| self.penalty.cmp(&other.penalty))
    }
}

impl PartialOrd for RouteKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for RouteKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for RouteKey {}
