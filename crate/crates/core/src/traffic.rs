//! Traffic classes and their utility functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::topology::Topology;

/// Utility family of a class. Both families are strictly concave and
/// increasing on `r >= 0` with `U(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum UtilitySpec {
    /// `gamma * ln(1 + r)`
    Log { gamma: f64 },
    /// `gamma * r^(1 - alpha) / (1 - alpha)` with `alpha` in (0, 1)
    AlphaFair { gamma: f64, alpha: f64 },
}

impl UtilitySpec {
    pub fn log(gamma: f64) -> Self {
        UtilitySpec::Log { gamma }
    }

    pub fn alpha_fair(gamma: f64, alpha: f64) -> Self {
        UtilitySpec::AlphaFair { gamma, alpha }
    }

    pub fn validate(&self) -> std::result::Result<(), Violation> {
        match *self {
            UtilitySpec::Log { gamma } if gamma > 0.0 && gamma.is_finite() => Ok(()),
            UtilitySpec::AlphaFair { gamma, alpha }
                if gamma > 0.0 && gamma.is_finite() && alpha > 0.0 && alpha < 1.0 =>
            {
                Ok(())
            }
            other => Err(Violation(format!("utility parameters out of range: {other:?}"))),
        }
    }

    pub fn gamma(&self) -> f64 {
        match *self {
            UtilitySpec::Log { gamma } | UtilitySpec::AlphaFair { gamma, .. } => gamma,
        }
    }

    /// U(r) for `r >= 0`.
    pub fn value(&self, r: f64) -> Result<f64> {
        if r < 0.0 || r.is_nan() {
            return Err(Error::Domain {
                what: "utility_value",
                value: r,
            });
        }
        Ok(self.at(r))
    }

    /// U(r) without the domain check; callers guarantee `r >= 0`.
    pub fn at(&self, r: f64) -> f64 {
        match *self {
            UtilitySpec::Log { gamma } => gamma * r.ln_1p(),
            UtilitySpec::AlphaFair { gamma, alpha } => gamma * r.powf(1.0 - alpha) / (1.0 - alpha),
        }
    }

    /// U'(r); infinite at zero for the alpha-fair family.
    pub fn derivative(&self, r: f64) -> f64 {
        match *self {
            UtilitySpec::Log { gamma } => gamma / (1.0 + r),
            UtilitySpec::AlphaFair { gamma, alpha } => gamma * r.powf(-alpha),
        }
    }

    /// The rate at which the marginal utility equals `y`, clamped below at 0.
    ///
    /// Returns `None` for `y <= 0`: marginal utility never reaches zero, so the
    /// caller has to fall back on its own rate cap.
    pub fn marginal_inverse(&self, y: f64) -> Option<f64> {
        if y.is_nan() || y <= 0.0 {
            return None;
        }
        Some(match *self {
            UtilitySpec::Log { gamma } => (gamma / y - 1.0).max(0.0),
            UtilitySpec::AlphaFair { gamma, alpha } => (gamma / y).powf(1.0 / alpha),
        })
    }

    /// `sup_{x >= 0} (x z + U(x))`, the conjugate of `-U`.
    ///
    /// `+inf` for `z >= 0`. For the log family the supremum sits at `x = 0`
    /// (value 0) whenever `-gamma / z < 1`.
    pub fn fenchel_conjugate(&self, z: f64) -> f64 {
        if z >= 0.0 {
            return f64::INFINITY;
        }
        match *self {
            UtilitySpec::Log { gamma } => {
                let ratio = -gamma / z;
                if ratio >= 1.0 {
                    gamma * ratio.ln() - (gamma + z)
                } else {
                    log::trace!("log conjugate at z={z} attained on the x=0 boundary");
                    0.0
                }
            }
            UtilitySpec::AlphaFair { gamma, alpha } => {
                alpha / (1.0 - alpha) * gamma.powf(1.0 / alpha) * (-z).powf(1.0 - 1.0 / alpha)
            }
        }
    }

    /// Maximizer of `x z + U(x)` over `0 <= x <= cap`.
    pub fn capped_maximizer(&self, z: f64, cap: f64) -> f64 {
        match self.marginal_inverse(-z) {
            Some(x) => x.min(cap),
            None => cap,
        }
    }

    /// `sup_{0 <= x <= cap} (x z + U(x))`. Finite for every `z`.
    pub fn capped_conjugate(&self, z: f64, cap: f64) -> f64 {
        let x = self.capped_maximizer(z, cap);
        x * z + self.at(x)
    }
}

/// The rate maximizing `V U(x) - cost x` over `[0, cap]`.
///
/// Shared by admission control and the dual rate update so that both compute
/// bit-identical values from identical prices. A zero cost saturates the cap.
pub fn rate_for_price(utility: &UtilitySpec, cost: f64, v: f64, cap: f64) -> f64 {
    if cost <= 0.0 {
        return cap;
    }
    match utility.marginal_inverse(cost / v) {
        Some(x) => x.clamp(0.0, cap),
        None => cap,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlowKind {
    Unicast { source: usize, dest: usize },
    Broadcast { root: usize },
    Multicast { source: usize, terminals: Vec<usize> },
    Anycast { source: usize, destinations: Vec<usize> },
}

impl FlowKind {
    /// Node where packets of the class enter the network.
    pub fn source(&self) -> usize {
        match *self {
            FlowKind::Unicast { source, .. }
            | FlowKind::Multicast { source, .. }
            | FlowKind::Anycast { source, .. } => source,
            FlowKind::Broadcast { root } => root,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FlowKind::Unicast { .. } => "unicast",
            FlowKind::Broadcast { .. } => "broadcast",
            FlowKind::Multicast { .. } => "multicast",
            FlowKind::Anycast { .. } => "anycast",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrafficClass {
    pub id: usize,
    pub kind: FlowKind,
    pub utility: UtilitySpec,
    /// Per-slot admission cap.
    pub a_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RawKind {
    Unicast,
    Broadcast,
    Multicast,
    Anycast,
}

/// A class as declared in the configuration document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawClass {
    pub id: usize,
    pub kind: RawKind,
    pub source: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub destinations: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminals: Option<Vec<usize>>,
    pub utility: UtilitySpec,
    /// Defaults to the total link capacity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_max: Option<f64>,
}

/// Validates class declarations against `topology`. Class ids must be `0..K`.
pub fn validate_classes(raw: &[RawClass], topology: &Topology) -> Result<Vec<TrafficClass>> {
    let n = topology.node_count();
    let mut problems = Vec::new();
    let mut seen = vec![false; raw.len()];
    let mut classes: Vec<Option<TrafficClass>> = vec![None; raw.len()];

    for rc in raw {
        let tag = format!("class {}", rc.id);
        if rc.id >= raw.len() {
            problems.push(Violation(format!("{tag}: id out of range 0..{}", raw.len())));
            continue;
        }
        if seen[rc.id] {
            problems.push(Violation(format!("{tag}: duplicate class id")));
            continue;
        }
        seen[rc.id] = true;
        if rc.source >= n {
            problems.push(Violation(format!("{tag}: source {} does not exist", rc.source)));
        }
        if let Err(v) = rc.utility.validate() {
            problems.push(Violation(format!("{tag}: {v}")));
        }
        let a_max = rc.a_max.unwrap_or_else(|| topology.total_capacity());
        if a_max.is_nan() || a_max <= 0.0 || a_max.is_infinite() {
            problems.push(Violation(format!("{tag}: a_max must be positive, got {a_max}")));
        }

        let node_set = |field: &str, set: &Option<Vec<usize>>, problems: &mut Vec<Violation>| {
            checked_node_set(&tag, field, set, n, rc.source, problems)
        };

        let kind = match rc.kind {
            RawKind::Unicast => {
                let dests = node_set("destinations", &rc.destinations, &mut problems);
                if dests.len() > 1 {
                    problems.push(Violation(format!("{tag}: unicast takes one destination")));
                }
                FlowKind::Unicast {
                    source: rc.source,
                    dest: dests.first().copied().unwrap_or(rc.source),
                }
            }
            RawKind::Broadcast => FlowKind::Broadcast { root: rc.source },
            RawKind::Multicast => FlowKind::Multicast {
                source: rc.source,
                terminals: node_set("terminals", &rc.terminals, &mut problems),
            },
            RawKind::Anycast => FlowKind::Anycast {
                source: rc.source,
                destinations: node_set("destinations", &rc.destinations, &mut problems),
            },
        };
        classes[rc.id] = Some(TrafficClass {
            id: rc.id,
            kind,
            utility: rc.utility,
            a_max,
        });
    }

    if !problems.is_empty() {
        return Err(Error::Class(problems));
    }
    Ok(classes.into_iter().map(Option::unwrap).collect())
}

fn checked_node_set(
    tag: &str,
    field: &str,
    set: &Option<Vec<usize>>,
    n: usize,
    source: usize,
    problems: &mut Vec<Violation>,
) -> Vec<usize> {
    let mut set = set.clone().unwrap_or_default();
    set.sort_unstable();
    set.dedup();
    if set.is_empty() {
        problems.push(Violation(format!("{tag}: {field} must be nonempty")));
    }
    for &v in &set {
        if v >= n {
            problems.push(Violation(format!("{tag}: {field} node {v} does not exist")));
        }
        if v == source {
            problems.push(Violation(format!("{tag}: {field} contains the source {v}")));
        }
    }
    set
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    #[test]
    fn log_values() {
        let u = UtilitySpec::log(1.0);
        assert_eq!(u.value(0.0).unwrap(), 0.0);
        assert!((u.value(1.0).unwrap() - LN_2).abs() < 1e-15);
        assert!(u.value(-1.0).is_err());
    }

    #[test]
    fn alpha_fair_value() {
        let u = UtilitySpec::alpha_fair(1.0, 0.5);
        assert!((u.value(4.0).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn marginal_inverse_examples() {
        let log = UtilitySpec::log(1.0);
        assert!((log.marginal_inverse(0.1).unwrap() - 9.0).abs() < 1e-12);
        assert_eq!(log.marginal_inverse(2.0).unwrap(), 0.0);
        assert_eq!(log.marginal_inverse(0.0), None);
        let af = UtilitySpec::alpha_fair(1.0, 0.5);
        assert!((af.marginal_inverse(0.5).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn conjugate_examples() {
        let log = UtilitySpec::log(1.0);
        assert!((log.fenchel_conjugate(-0.5) - (LN_2 - 0.5)).abs() < 1e-12);
        assert_eq!(log.fenchel_conjugate(-2.0), 0.0);
        assert_eq!(log.fenchel_conjugate(0.0), f64::INFINITY);
        let af = UtilitySpec::alpha_fair(1.0, 0.5);
        assert!((af.fenchel_conjugate(-1.0) - 1.0).abs() < 1e-12);
        assert_eq!(af.fenchel_conjugate(1.0), f64::INFINITY);
    }

    #[test]
    fn capped_conjugate_matches_uncapped_in_interior() {
        let log = UtilitySpec::log(2.0);
        let z = -0.5; // interior maximizer x = 3
        assert!((log.capped_conjugate(z, 10.0) - log.fenchel_conjugate(z)).abs() < 1e-12);
        // cap binds: maximizer is the cap
        assert_eq!(log.capped_maximizer(z, 1.0), 1.0);
        assert!(log.capped_conjugate(0.0, 5.0).is_finite());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(UtilitySpec::log(0.0).validate().is_err());
        assert!(UtilitySpec::alpha_fair(1.0, 1.0).validate().is_err());
        assert!(UtilitySpec::alpha_fair(1.0, 0.3).validate().is_ok());
    }
}
