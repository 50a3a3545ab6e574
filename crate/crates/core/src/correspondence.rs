//! Slot-by-slot comparison of the virtual queues with the dual iterates.
//!
//! On a wired network whose links are always ON and whose admission cap is
//! `sum_e c_e`, the subgradient iterates with step `theta` and weight `V`
//! equal `theta` times the virtual queues run with weight `V / theta` from
//! `Q(0) = q(0) / theta`. Costs scale the same way; rates and routes agree.

use std::fmt;

use crate::dual::{DualProblem, DualState};
use crate::error::{Error, Result};
use crate::policy::{Controller, PolicyParams, VirtualQueues};
use crate::topology::{Interference, Topology};
use crate::traffic::TrafficClass;

/// Relative tolerance for trace comparison.
pub const TOLERANCE: f64 = 1e-12;

/// State at the start of one slot (or iteration) and the decisions taken in it.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub queues: Vec<f64>,
    pub costs: Vec<f64>,
    pub rates: Vec<f64>,
    /// Sorted edge ids of each class route.
    pub routes: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Queue,
    Cost,
    Rate,
    Route,
    Length,
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Quantity::Queue => "queue",
            Quantity::Cost => "cost",
            Quantity::Rate => "rate",
            Quantity::Route => "route",
            Quantity::Length => "trace length",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub slot: usize,
    /// Edge id for queues, class id otherwise.
    pub index: usize,
    pub quantity: Quantity,
    /// Virtual-side value, already multiplied by theta where it scales.
    pub virtual_value: f64,
    pub dual_value: f64,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "slot {} {} {}: virtual {} vs dual {}",
            self.slot, self.quantity, self.index, self.virtual_value, self.dual_value
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceReport {
    pub slots: usize,
    pub theta: f64,
    /// Largest relative deviation seen over all compared values.
    pub max_deviation: f64,
    pub first_mismatch: Option<Mismatch>,
}

impl CorrespondenceReport {
    pub fn passed(&self) -> bool {
        self.first_mismatch.is_none()
    }
}

fn require_wired(topology: &Topology, classes: &[TrafficClass], theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::Domain {
            what: "step size",
            value: theta,
        });
    }
    if !matches!(topology.interference(), Interference::None) {
        return Err(Error::Config("correspondence needs a wired topology".into()));
    }
    let cap = topology.total_capacity();
    if let Some(c) = classes.iter().find(|c| c.a_max != cap) {
        return Err(Error::Config(format!(
            "class {} has a_max {} but correspondence needs the total capacity {cap}",
            c.id, c.a_max
        )));
    }
    Ok(())
}

/// Runs the controller with weight `v / theta` from `q0 / theta`, all links ON.
/// Returns `slots + 1` steps; the last carries only the final queues.
pub fn virtual_trace(
    topology: &Topology,
    classes: &[TrafficClass],
    v: f64,
    theta: f64,
    q0: &[f64],
    slots: usize,
) -> Result<Vec<TraceStep>> {
    require_wired(topology, classes, theta)?;
    let controller = Controller::new(topology, classes, PolicyParams::new(v / theta));
    let mut queues = VirtualQueues::with_initial(q0.iter().map(|q| q / theta).collect());
    let states = vec![true; topology.edge_count()];
    let mut trace = Vec::with_capacity(slots + 1);
    for _ in 0..slots {
        let before = queues.values().to_vec();
        let d = controller.step(&mut queues, &states)?;
        trace.push(TraceStep {
            queues: before,
            costs: d.costs,
            rates: d.admitted,
            routes: d.routes.iter().map(|r| r.edges().to_vec()).collect(),
        });
    }
    trace.push(final_step(queues.values().to_vec()));
    Ok(trace)
}

/// Runs the subgradient method from `q0`. Same shape as [`virtual_trace`].
pub fn dual_trace(
    topology: &Topology,
    classes: &[TrafficClass],
    v: f64,
    theta: f64,
    q0: &[f64],
    iterations: usize,
) -> Result<Vec<TraceStep>> {
    let problem = DualProblem::new(topology, classes);
    let mut state = DualState::new(q0.to_vec(), theta, v)?;
    let mut trace = Vec::with_capacity(iterations + 1);
    for _ in 0..iterations {
        let before = state.q.clone();
        problem.step(&mut state)?;
        trace.push(TraceStep {
            queues: before,
            costs: state.responses.iter().map(|r| r.cost).collect(),
            rates: state.responses.iter().map(|r| r.rate).collect(),
            routes: state.responses.iter().map(|r| r.route.edges().to_vec()).collect(),
        });
    }
    trace.push(final_step(state.q));
    Ok(trace)
}

fn final_step(queues: Vec<f64>) -> TraceStep {
    TraceStep {
        queues,
        costs: Vec::new(),
        rates: Vec::new(),
        routes: Vec::new(),
    }
}

fn deviation(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs()).max(1.0)
    }
}

/// Compares `theta * Q`, `theta * C`, `A` and routes against `q`, `c*`, `r*`.
pub fn check_correspondence(sim: &[TraceStep], dual: &[TraceStep], theta: f64) -> CorrespondenceReport {
    let mut report = CorrespondenceReport {
        slots: sim.len().min(dual.len()),
        theta,
        max_deviation: 0.0,
        first_mismatch: None,
    };
    let note = |report: &mut CorrespondenceReport, slot, index, quantity, a: f64, b: f64| {
        let d = deviation(a, b);
        report.max_deviation = report.max_deviation.max(d);
        if d > TOLERANCE && report.first_mismatch.is_none() {
            report.first_mismatch = Some(Mismatch {
                slot,
                index,
                quantity,
                virtual_value: a,
                dual_value: b,
            });
        }
    };
    if sim.len() != dual.len() {
        note(&mut report, 0, 0, Quantity::Length, sim.len() as f64, dual.len() as f64);
    }
    for (t, (s, d)) in sim.iter().zip(dual).enumerate() {
        for (e, (a, b)) in s.queues.iter().zip(&d.queues).enumerate() {
            note(&mut report, t, e, Quantity::Queue, theta * a, *b);
        }
        for (k, (a, b)) in s.costs.iter().zip(&d.costs).enumerate() {
            note(&mut report, t, k, Quantity::Cost, theta * a, *b);
        }
        for (k, (a, b)) in s.rates.iter().zip(&d.rates).enumerate() {
            note(&mut report, t, k, Quantity::Rate, *a, *b);
        }
        for (k, (a, b)) in s.routes.iter().zip(&d.routes).enumerate() {
            if a != b && report.first_mismatch.is_none() {
                report.max_deviation = f64::INFINITY;
                report.first_mismatch = Some(Mismatch {
                    slot: t,
                    index: k,
                    quantity: Quantity::Route,
                    virtual_value: f64::NAN,
                    dual_value: f64::NAN,
                });
            }
        }
    }
    report
}

/// Builds both traces and compares them.
pub fn run_correspondence(
    topology: &Topology,
    classes: &[TrafficClass],
    v: f64,
    theta: f64,
    q0: &[f64],
    slots: usize,
) -> Result<CorrespondenceReport> {
    let sim = virtual_trace(topology, classes, v, theta, q0, slots)?;
    let dual = dual_trace(topology, classes, v, theta, q0, slots)?;
    Ok(check_correspondence(&sim, &dual, theta))
}
