//! The static utility maximization problem and its Lagrangian dual.
//!
//! With prices `q_e >= 0` on the capacity constraints, each class routes all
//! of its flow on its cheapest route and picks the rate maximizing
//! `V U_k(r) - c_k* r` over `[0, sum_e c_e]`. The dual is minimized by the
//! projected subgradient method with a constant step.

use crate::error::{Error, Result};
use crate::routing::{Route, Router, DEFAULT_STEINER_EXACT_LIMIT};
use crate::topology::Topology;
use crate::traffic::{rate_for_price, TrafficClass, UtilitySpec};

/// Optimal response of one class to the prices.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassResponse {
    pub route: Route,
    /// c_k*(q)
    pub cost: f64,
    /// r_k*(q)
    pub rate: f64,
}

/// One iterate of the subgradient method.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub q: Vec<f64>,
    pub theta: f64,
    pub v: f64,
    pub iteration: u64,
    /// Responses at the prices the last step started from.
    pub responses: Vec<ClassResponse>,
    /// g = c - A(q) from the last step.
    pub subgradient: Vec<f64>,
}

impl DualState {
    pub fn new(q: Vec<f64>, theta: f64, v: f64) -> Result<Self> {
        if let Some(&bad) = q.iter().find(|&&x| !(x >= 0.0 && x.is_finite())) {
            return Err(Error::Domain {
                what: "dual price",
                value: bad,
            });
        }
        if !(theta >= 0.0 && theta.is_finite()) {
            return Err(Error::Domain {
                what: "step size",
                value: theta,
            });
        }
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Domain { what: "V", value: v });
        }
        let m = q.len();
        Ok(DualState {
            q,
            theta,
            v,
            iteration: 0,
            responses: Vec::new(),
            subgradient: vec![0.0; m],
        })
    }

    pub fn zero(edge_count: usize, theta: f64, v: f64) -> Result<Self> {
        Self::new(vec![0.0; edge_count], theta, v)
    }
}

/// Dual machinery bound to one topology and class set.
#[derive(Debug, Clone)]
pub struct DualProblem<'a> {
    router: Router<'a>,
    classes: &'a [TrafficClass],
    cap: f64,
}

impl<'a> DualProblem<'a> {
    pub fn new(topology: &'a Topology, classes: &'a [TrafficClass]) -> Self {
        Self::with_steiner_limit(topology, classes, DEFAULT_STEINER_EXACT_LIMIT)
    }

    pub fn with_steiner_limit(topology: &'a Topology, classes: &'a [TrafficClass], limit: usize) -> Self {
        DualProblem {
            router: Router::new(topology, limit),
            classes,
            cap: topology.total_capacity(),
        }
    }

    pub fn topology(&self) -> &'a Topology {
        self.router.topology()
    }

    pub fn classes(&self) -> &'a [TrafficClass] {
        self.classes
    }

    /// The rate cap `sum_e c_e`.
    pub fn rate_cap(&self) -> f64 {
        self.cap
    }

    pub fn optimal_rate(&self, q: &[f64], class: &TrafficClass, v: f64) -> Result<ClassResponse> {
        let (route, cost) = self.router.shortest_route(class, q)?;
        let rate = rate_for_price(&class.utility, cost, v, self.cap);
        Ok(ClassResponse { route, cost, rate })
    }

    pub fn responses(&self, q: &[f64], v: f64) -> Result<Vec<ClassResponse>> {
        self.classes.iter().map(|c| self.optimal_rate(q, c, v)).collect()
    }

    /// Dual function value; see [`dual_value`].
    pub fn dual_objective(&self, q: &[f64], v: f64) -> Result<f64> {
        let responses = self.responses(q, v)?;
        Ok(dual_value(q, self.classes, &responses, self.topology(), v))
    }

    /// Subgradient at `q`, `g_e = c_e - A_e(q)`.
    pub fn subgradient(&self, q: &[f64], v: f64) -> Result<Vec<f64>> {
        let responses = self.responses(q, v)?;
        let load = edge_load(&responses, self.topology().edge_count());
        Ok(self
            .topology()
            .edges()
            .iter()
            .map(|e| e.capacity - load[e.id])
            .collect())
    }

    /// `q_e <- max(0, q_e + theta (A_e(q) - c_e))`.
    pub fn step(&self, state: &mut DualState) -> Result<()> {
        let responses = self.responses(&state.q, state.v)?;
        let load = edge_load(&responses, state.q.len());
        for edge in self.topology().edges() {
            let e = edge.id;
            state.subgradient[e] = edge.capacity - load[e];
            state.q[e] = (state.q[e] + state.theta * (load[e] - edge.capacity)).max(0.0);
        }
        state.responses = responses;
        state.iteration += 1;
        Ok(())
    }

    /// Checks a primal point against the dual bound. `assignment[k]` routes
    /// all of class k's rate on one route.
    pub fn weak_duality_check(&self, q: &[f64], assignment: &[(f64, Route)], v: f64) -> Result<WeakDualityReport> {
        check_feasible(assignment, self.classes, self.topology(), self.cap)?;
        let dual = self.dual_objective(q, v)?;
        let primal = v * self
            .classes
            .iter()
            .zip(assignment)
            .map(|(c, (r, _))| c.utility.at(*r))
            .sum::<f64>();
        Ok(WeakDualityReport {
            dual,
            primal,
            gap: dual - primal,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakDualityReport {
    pub dual: f64,
    /// V sum_k U_k(r_k)
    pub primal: f64,
    pub gap: f64,
}

impl WeakDualityReport {
    pub fn holds(&self, slack: f64) -> bool {
        self.gap >= -slack
    }
}

/// Free-function form of [`DualProblem::optimal_rate`].
pub fn optimal_rate(q: &[f64], class: &TrafficClass, topology: &Topology, v: f64) -> Result<ClassResponse> {
    DualProblem::new(topology, std::slice::from_ref(class)).optimal_rate(q, class, v)
}

/// `A_e = sum_k r_k* 1(e in p_k*)`, summed in class order.
pub fn edge_load(responses: &[ClassResponse], edge_count: usize) -> Vec<f64> {
    let mut load = vec![0.0; edge_count];
    for r in responses {
        for &e in r.route.edges() {
            load[e] += r.rate;
        }
    }
    load
}

/// `D(q) = sum_k sup_{0 <= x <= cap} (V U_k(x) - c_k* x) + sum_e q_e c_e`.
///
/// Each supremum is the capped conjugate term `V U_k^dagger(-c_k*/V)`; it
/// agrees with the uncapped conjugate whenever the unconstrained maximizer
/// lies below the cap.
pub fn dual_value(
    q: &[f64],
    classes: &[TrafficClass],
    responses: &[ClassResponse],
    topology: &Topology,
    v: f64,
) -> f64 {
    let mut utility_part = 0.0;
    for (class, resp) in classes.iter().zip(responses) {
        if let UtilitySpec::Log { gamma } = class.utility {
            if resp.cost >= gamma * v {
                log::debug!(
                    "class {} priced out: c*={} >= gamma V={}",
                    class.id,
                    resp.cost,
                    gamma * v
                );
            }
        }
        utility_part += v * class.utility.at(resp.rate) - resp.cost * resp.rate;
    }
    let price_part: f64 = topology.edges().iter().map(|e| q[e.id] * e.capacity).sum();
    utility_part + price_part
}

/// Free-function form of [`DualProblem::dual_objective`].
pub fn dual_objective(q: &[f64], classes: &[TrafficClass], topology: &Topology, v: f64) -> Result<f64> {
    DualProblem::new(topology, classes).dual_objective(q, v)
}

/// Bound `b^2 = m (c_max^2 + m (K sum_e c_e)^2)` on `||g||^2`.
pub fn subgradient_norm_bound(classes: &[TrafficClass], topology: &Topology) -> f64 {
    let m = topology.edge_count() as f64;
    let c_max = topology.max_capacity();
    let a_bar = classes.len() as f64 * topology.total_capacity();
    m * (c_max * c_max + m * a_bar * a_bar)
}

fn check_feasible(assignment: &[(f64, Route)], classes: &[TrafficClass], topology: &Topology, cap: f64) -> Result<()> {
    if assignment.len() != classes.len() {
        return Err(Error::InfeasibleRates(format!(
            "{} rates for {} classes",
            assignment.len(),
            classes.len()
        )));
    }
    let mut load = vec![0.0; topology.edge_count()];
    for (class, (rate, route)) in classes.iter().zip(assignment) {
        if !(*rate >= 0.0 && *rate <= cap) {
            return Err(Error::InfeasibleRates(format!(
                "class {} rate {rate} outside [0, {cap}]",
                class.id
            )));
        }
        route
            .check(class, topology)
            .map_err(|e| Error::InfeasibleRates(format!("class {} route: {e}", class.id)))?;
        for &e in route.edges() {
            load[e] += rate;
        }
    }
    for edge in topology.edges() {
        if load[edge.id] > edge.capacity * (1.0 + 1e-12) {
            return Err(Error::InfeasibleRates(format!(
                "edge {} carries {} over capacity {}",
                edge.id, load[edge.id], edge.capacity
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{validate_topology, Edge, RawInterference, RawTopology};
    use crate::traffic::FlowKind;

    fn single_edge() -> (Topology, Vec<TrafficClass>) {
        let topo = validate_topology(&RawTopology {
            nodes: 2,
            directed: true,
            edges: vec![Edge {
                id: 0,
                from: 0,
                to: 1,
                capacity: 1.0,
            }],
            interference: RawInterference::None,
        })
        .unwrap();
        let classes = vec![TrafficClass {
            id: 0,
            kind: FlowKind::Unicast { source: 0, dest: 1 },
            utility: UtilitySpec::log(1.0),
            a_max: 1.0,
        }];
        (topo, classes)
    }

    #[test]
    fn optimal_rate_examples() {
        let (t, c) = single_edge();
        let r = optimal_rate(&[0.5], &c[0], &t, 1.0).unwrap();
        assert_eq!((r.cost, r.rate), (0.5, 1.0));
        assert_eq!(optimal_rate(&[1.5], &c[0], &t, 1.0).unwrap().rate, 0.0);
        assert_eq!(optimal_rate(&[0.0], &c[0], &t, 1.0).unwrap().rate, 1.0);
    }

    #[test]
    fn dual_objective_examples() {
        let (t, c) = single_edge();
        let ln2 = 2f64.ln();
        assert!((dual_objective(&[0.5], &c, &t, 1.0).unwrap() - ln2).abs() < 1e-15);
        assert!((dual_objective(&[1.0], &c, &t, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let big = 1e6;
        assert_eq!(dual_objective(&[big], &c, &t, 1.0).unwrap(), big);
    }

    #[test]
    fn subgradient_step_examples() {
        let (t, c) = single_edge();
        let p = DualProblem::new(&t, &c);
        let mut s = DualState::new(vec![2.0], 1.0, 1.0).unwrap();
        p.step(&mut s).unwrap();
        assert_eq!(s.q, vec![1.0]);
        assert_eq!(s.subgradient, vec![1.0]);
        assert_eq!(s.responses[0].rate, 0.0);

        let mut s = DualState::zero(1, 1.0, 1.0).unwrap();
        p.step(&mut s).unwrap();
        assert_eq!(s.q, vec![0.0]);

        let mut s = DualState::new(vec![0.7], 0.0, 1.0).unwrap();
        p.step(&mut s).unwrap();
        assert_eq!(s.q, vec![0.7]);
    }

    #[test]
    fn edge_load_superposes() {
        let (t, c) = single_edge();
        let r = optimal_rate(&[0.5], &c[0], &t, 1.0).unwrap();
        let mut other = r.clone();
        other.rate = 0.5;
        assert_eq!(edge_load(&[r.clone(), other], 1), vec![1.5]);
        let mut zero = r;
        zero.rate = 0.0;
        assert_eq!(edge_load(&[zero], 1), vec![0.0]);
    }

    #[test]
    fn weak_duality_at_the_optimum() {
        let (t, c) = single_edge();
        let p = DualProblem::new(&t, &c);
        let route = p.optimal_rate(&[0.5], &c[0], 1.0).unwrap().route;
        let report = p.weak_duality_check(&[0.5], &[(1.0, route.clone())], 1.0).unwrap();
        assert!(report.gap.abs() < 1e-9);
        let report = p.weak_duality_check(&[3.0], &[(0.0, route.clone())], 1.0).unwrap();
        assert!(report.holds(0.0) && report.dual >= 0.0);
        assert!(matches!(
            p.weak_duality_check(&[0.5], &[(1.5, route)], 1.0),
            Err(Error::InfeasibleRates(_))
        ));
    }

    #[test]
    fn rejects_negative_prices() {
        assert!(DualState::new(vec![-1.0], 1.0, 1.0).is_err());
        assert!(DualState::new(vec![1.0], 1.0, 0.0).is_err());
    }

    #[test]
    fn norm_bound_formula() {
        let (t, c) = single_edge();
        assert_eq!(subgradient_norm_bound(&c, &t), 2.0);
    }
}
