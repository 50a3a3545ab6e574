//! Virtual-queue control: routing, admission, scheduling and the queue update.

mod schedule;

pub use schedule::{
    compare_activations, link_weights, max_weight_activation, schedule, Schedule, DEFAULT_MATCHING_EXACT_LIMIT,
};

use crate::error::Result;
use crate::routing::{route_cost, Route, Router, DEFAULT_STEINER_EXACT_LIMIT};
use crate::topology::{Activation, Topology};
use crate::traffic::{rate_for_price, TrafficClass};

/// Virtual queue lengths Q̃_e(t) plus cumulative tallies for auditing.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualQueues {
    values: Vec<f64>,
    initial: Vec<f64>,
    slot: u64,
    arrivals: Vec<f64>,
    service: Vec<f64>,
    /// min over 1 <= t1 <= t of (arrivals - service) at t1
    lowest_net: Vec<f64>,
}

impl VirtualQueues {
    pub fn new(edge_count: usize) -> Self {
        Self::with_initial(vec![0.0; edge_count])
    }

    pub fn with_initial(initial: Vec<f64>) -> Self {
        assert!(initial.iter().all(|&q| q >= 0.0), "virtual queues start nonnegative");
        let m = initial.len();
        VirtualQueues {
            values: initial.clone(),
            initial,
            slot: 0,
            arrivals: vec![0.0; m],
            service: vec![0.0; m],
            lowest_net: vec![f64::INFINITY; m],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn slot(&self) -> u64 {
        self.slot
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Quadratic Lyapunov function Σ_e Q̃_e².
    pub fn lyapunov(&self) -> f64 {
        self.values.iter().map(|q| q * q).sum()
    }

    pub fn cumulative_arrivals(&self) -> &[f64] {
        &self.arrivals
    }

    /// Cumulative offered service, counted even while a queue is empty.
    pub fn cumulative_service(&self) -> &[f64] {
        &self.service
    }

    /// Queue length reconstructed from the cumulative tallies alone:
    /// `max(Q(0) + N(t), max_{0 < t1 <= t} N(t) - N(t1))` with `N = A - S`.
    pub fn skorokhod_value(&self, edge: usize) -> f64 {
        if self.slot == 0 {
            return self.initial[edge];
        }
        let net = self.arrivals[edge] - self.service[edge];
        (self.initial[edge] + net).max(net - self.lowest_net[edge])
    }

    /// Largest gap between the recursive queue values and [`Self::skorokhod_value`].
    pub fn skorokhod_gap(&self) -> f64 {
        (0..self.values.len())
            .map(|e| (self.values[e] - self.skorokhod_value(e)).abs())
            .fold(0.0, f64::max)
    }

    fn apply(&mut self, arrivals: &[f64], service: &[f64]) {
        for e in 0..self.values.len() {
            self.values[e] = (self.values[e] + (arrivals[e] - service[e])).max(0.0);
            self.arrivals[e] += arrivals[e];
            self.service[e] += service[e];
            let net = self.arrivals[e] - self.service[e];
            self.lowest_net[e] = self.lowest_net[e].min(net);
        }
        self.slot += 1;
    }
}

/// Everything the controller decided for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotDecision {
    /// A^k(t), fluid.
    pub admitted: Vec<f64>,
    pub routes: Vec<Route>,
    /// C^k(t), the route cost under the virtual queues.
    pub costs: Vec<f64>,
    pub activation: Activation,
    /// False when the scheduler fell back to the greedy matching.
    pub exact_schedule: bool,
}

/// Cheapest route and its cost for every class under virtual-queue weights.
pub fn route_all_classes(router: &Router<'_>, queues: &[f64], classes: &[TrafficClass]) -> Result<Vec<(Route, f64)>> {
    classes.iter().map(|c| router.shortest_route(c, queues)).collect()
}

/// `argmin_{0 <= x <= a_max} (C x - V U(x))`, in closed form.
pub fn admit(class: &TrafficClass, cost: f64, v: f64) -> f64 {
    rate_for_price(&class.utility, cost, v, class.a_max)
}

/// Ã_e = Σ_k A^k 1(e in T^k): admissions reach every route edge at once.
pub fn virtual_arrivals(admitted: &[f64], routes: &[Route], edge_count: usize) -> Vec<f64> {
    let mut arrivals = vec![0.0; edge_count];
    for (amount, route) in admitted.iter().zip(routes) {
        for &e in route.edges() {
            arrivals[e] += amount;
        }
    }
    arrivals
}

/// Offered service `mu_e c_e sigma_e`.
pub fn offered_service(activation: &Activation, topology: &Topology, states: &[bool]) -> Vec<f64> {
    topology
        .edges()
        .iter()
        .map(|e| {
            if activation.contains(e.id) && states[e.id] {
                e.capacity
            } else {
                0.0
            }
        })
        .collect()
}

/// Q̃_e ← max(0, Q̃_e + Ã_e − μ_e c_e σ_e), updating the tallies.
pub fn virtual_step(
    queues: &mut VirtualQueues,
    arrivals: &[f64],
    activation: &Activation,
    states: &[bool],
    topology: &Topology,
) {
    let service = offered_service(activation, topology, states);
    queues.apply(arrivals, &service);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyParams {
    /// Utility weight V.
    pub v: f64,
    pub matching_exact_limit: usize,
    pub steiner_exact_limit: usize,
}

impl PolicyParams {
    pub fn new(v: f64) -> Self {
        PolicyParams {
            v,
            matching_exact_limit: DEFAULT_MATCHING_EXACT_LIMIT,
            steiner_exact_limit: DEFAULT_STEINER_EXACT_LIMIT,
        }
    }
}

/// The per-slot controller for a fixed topology and class set.
#[derive(Debug, Clone)]
pub struct Controller<'a> {
    router: Router<'a>,
    classes: &'a [TrafficClass],
    params: PolicyParams,
}

impl<'a> Controller<'a> {
    pub fn new(topology: &'a Topology, classes: &'a [TrafficClass], params: PolicyParams) -> Self {
        assert!(params.v > 0.0, "V must be positive");
        Controller {
            router: Router::new(topology, params.steiner_exact_limit),
            classes,
            params,
        }
    }

    pub fn topology(&self) -> &'a Topology {
        self.router.topology()
    }

    pub fn classes(&self) -> &'a [TrafficClass] {
        self.classes
    }

    pub fn params(&self) -> PolicyParams {
        self.params
    }

    /// Decides one slot from the current queues and link states, without
    /// touching the queues.
    pub fn decide(&self, queues: &VirtualQueues, states: &[bool]) -> Result<SlotDecision> {
        let routed = route_all_classes(&self.router, queues.values(), self.classes)?;
        let admitted: Vec<f64> = self
            .classes
            .iter()
            .zip(&routed)
            .map(|(class, (_, cost))| admit(class, *cost, self.params.v))
            .collect();
        let sched = schedule(
            queues.values(),
            self.topology(),
            states,
            self.params.matching_exact_limit,
        );
        let (routes, costs) = routed.into_iter().unzip();
        Ok(SlotDecision {
            admitted,
            routes,
            costs,
            activation: sched.activation,
            exact_schedule: sched.exact,
        })
    }

    /// Decides one slot and advances the virtual queues.
    pub fn step(&self, queues: &mut VirtualQueues, states: &[bool]) -> Result<SlotDecision> {
        let decision = self.decide(queues, states)?;
        let arrivals = virtual_arrivals(&decision.admitted, &decision.routes, self.topology().edge_count());
        virtual_step(queues, &arrivals, &decision.activation, states, self.topology());
        Ok(decision)
    }
}

/// One full controller slot: route, admit, schedule, update.
pub fn umw_plus_slot(
    queues: &VirtualQueues,
    classes: &[TrafficClass],
    topology: &Topology,
    states: &[bool],
    v: f64,
) -> Result<(SlotDecision, VirtualQueues)> {
    let controller = Controller::new(topology, classes, PolicyParams::new(v));
    let mut next = queues.clone();
    let decision = controller.step(&mut next, states)?;
    Ok((decision, next))
}

/// The per-slot drift-plus-penalty objective (halved):
/// `Σ_k A^k C^k − Σ_e Q̃_e c_e μ_e σ_e − V Σ_k U_k(A^k)`.
#[allow(clippy::too_many_arguments)]
pub fn slot_objective(
    queues: &[f64],
    classes: &[TrafficClass],
    topology: &Topology,
    states: &[bool],
    v: f64,
    admitted: &[f64],
    routes: &[Route],
    activation: &Activation,
) -> f64 {
    let routing: f64 = admitted
        .iter()
        .zip(routes)
        .map(|(a, r)| a * route_cost(r, queues))
        .sum();
    let scheduling = activation.weight(&link_weights(queues, topology, states));
    let utility: f64 = classes.iter().zip(admitted).map(|(c, &a)| c.utility.at(a)).sum();
    routing - scheduling - v * utility
}

/// Drift bound constant `K m A_max² + m c_max²`.
pub fn drift_constant(classes: &[TrafficClass], topology: &Topology) -> f64 {
    let m = topology.edge_count() as f64;
    let k = classes.len() as f64;
    let a_max = classes.iter().map(|c| c.a_max).fold(0.0, f64::max);
    let c_max = topology.max_capacity();
    k * m * a_max * a_max + m * c_max * c_max
}
