use crate::dual::{subgradient_norm_bound, DualProblem, DualState};
use crate::error::{Error, Result};
use crate::physical::PhysicalState;
use crate::policy::{drift_constant, virtual_arrivals, virtual_step, Controller, PolicyParams, VirtualQueues};
use crate::topology::sample_link_states;

use super::config::ExperimentConfig;

/// Metrics recorded at the end of one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord {
    pub slot: u64,
    /// Σ_k U_k(A^k(t))
    pub utility: f64,
    pub average_utility: f64,
    /// Σ_e Q_e, physical copies waiting
    pub physical_queue: f64,
    /// Σ_e Q̃_e
    pub virtual_queue: f64,
    pub lyapunov: f64,
    /// R_k(t) / t per class
    pub delivered_rates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub v: f64,
    pub slots: u64,
    pub average_utility: f64,
    /// Time average of Σ_e Q_e.
    pub average_queue: f64,
    /// Time average of Σ_e Q̃_e.
    pub average_virtual_queue: f64,
    pub final_queue: f64,
    pub final_virtual_queue: f64,
    pub delivered_rates: Vec<f64>,
    pub drift_constant: f64,
    /// Slots in which the scheduler fell back to the greedy matching.
    pub greedy_slots: u64,
    /// Largest violation of the physical-virtual arrival coupling seen.
    pub max_coupling_excess: f64,
    pub max_skorokhod_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSeries {
    pub class_count: usize,
    pub records: Vec<SlotRecord>,
    pub summary: RunSummary,
}

/// Runs `config.slots` slots of the controller plus the packet network at
/// `config.v()`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<MetricsSeries> {
    config.validate()?;
    let topology = &config.topology;
    let m = topology.edge_count();
    let k = config.classes.len();
    let params = PolicyParams {
        v: config.v(),
        matching_exact_limit: config.matching_exact_limit,
        steiner_exact_limit: config.steiner_exact_limit,
    };
    let controller = Controller::new(topology, &config.classes, params);
    let mut queues = VirtualQueues::new(m);
    let mut physical = PhysicalState::new(m, k, config.rounding, config.seed);

    let mut records = Vec::with_capacity(config.slots as usize);
    let mut utility_sum = 0.0;
    let mut queue_sum = 0.0;
    let mut virtual_sum = 0.0;
    let mut greedy_slots = 0;
    let mut max_coupling = f64::NEG_INFINITY;
    let mut max_gap: f64 = 0.0;

    for t in 0..config.slots {
        let states = sample_link_states(&config.links, t);
        let decision = controller.decide(&queues, &states)?;
        physical.admit(&decision);
        physical.step(&decision.activation, &states, topology)?;
        let arrivals = virtual_arrivals(&decision.admitted, &decision.routes, m);
        virtual_step(&mut queues, &arrivals, &decision.activation, &states, topology);

        if !decision.exact_schedule {
            greedy_slots += 1;
        }
        max_coupling = max_coupling.max(physical.coupling_excess(queues.values()));
        max_gap = max_gap.max(queues.skorokhod_gap());

        let utility: f64 = config
            .classes
            .iter()
            .zip(&decision.admitted)
            .map(|(c, &a)| c.utility.at(a))
            .sum();
        utility_sum += utility;
        let physical_queue = physical.total_queued() as f64;
        let virtual_queue = queues.total();
        queue_sum += physical_queue;
        virtual_sum += virtual_queue;
        let elapsed = t + 1;
        records.push(SlotRecord {
            slot: elapsed,
            utility,
            average_utility: utility_sum / elapsed as f64,
            physical_queue,
            virtual_queue,
            lyapunov: queues.lyapunov(),
            delivered_rates: (0..k).map(|c| physical.delivered_rate(c, elapsed)).collect(),
        });
    }

    let slots = config.slots as f64;
    let last = records.last().expect("at least one slot");
    let summary = RunSummary {
        v: config.v(),
        slots: config.slots,
        average_utility: utility_sum / slots,
        average_queue: queue_sum / slots,
        average_virtual_queue: virtual_sum / slots,
        final_queue: last.physical_queue,
        final_virtual_queue: last.virtual_queue,
        delivered_rates: last.delivered_rates.clone(),
        drift_constant: drift_constant(&config.classes, topology),
        greedy_slots,
        max_coupling_excess: max_coupling,
        max_skorokhod_gap: max_gap,
    };
    log::info!(
        "{}: V={} T={} utility={:.6} queue={:.3}",
        config.name,
        summary.v,
        summary.slots,
        summary.average_utility,
        summary.average_queue
    );
    Ok(MetricsSeries {
        class_count: k,
        records,
        summary,
    })
}

/// One subgradient iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct DualRecord {
    pub iteration: u64,
    /// D(q) at the iterate's starting prices.
    pub objective: f64,
    pub q: Vec<f64>,
    pub rates: Vec<f64>,
    pub costs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSeries {
    pub theta: f64,
    pub v: f64,
    pub records: Vec<DualRecord>,
    pub min_objective: f64,
    /// b²
    pub norm_bound: f64,
    /// Largest ‖g‖² seen.
    pub max_norm: f64,
}

/// Runs `config.slots` subgradient iterations from `q = 0` with step
/// `config.theta` and weight `config.v()`.
pub fn run_dual(config: &ExperimentConfig) -> Result<DualSeries> {
    config.validate()?;
    let problem = DualProblem::with_steiner_limit(&config.topology, &config.classes, config.steiner_exact_limit);
    let mut state = DualState::zero(config.topology.edge_count(), config.theta, config.v())?;
    let mut records = Vec::with_capacity(config.slots as usize);
    let mut min_objective = f64::INFINITY;
    let mut max_norm: f64 = 0.0;
    for i in 0..config.slots {
        let q = state.q.clone();
        problem.step(&mut state)?;
        let objective = crate::dual::dual_value(&q, &config.classes, &state.responses, &config.topology, state.v);
        min_objective = min_objective.min(objective);
        max_norm = max_norm.max(state.subgradient.iter().map(|g| g * g).sum());
        records.push(DualRecord {
            iteration: i,
            objective,
            q,
            rates: state.responses.iter().map(|r| r.rate).collect(),
            costs: state.responses.iter().map(|r| r.cost).collect(),
        });
    }
    Ok(DualSeries {
        theta: config.theta,
        v: config.v(),
        records,
        min_objective,
        norm_bound: subgradient_norm_bound(&config.classes, &config.topology),
        max_norm,
    })
}

/// How independent runs are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Uses the rayon pool when the `parallel` feature is on; sequential otherwise.
    #[default]
    Parallel,
}

fn map_runs<T, R, F>(items: &[T], execution: Execution, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

/// Runs every config; results keep the input order.
pub fn run_grid(configs: &[ExperimentConfig], execution: Execution) -> Result<Vec<RunSummary>> {
    map_runs(configs, execution, |c| run_experiment(c).map(|s| s.summary))
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub v: f64,
    pub average_utility: f64,
    pub average_queue: f64,
    pub average_virtual_queue: f64,
}

/// One run per V with the same seed, rows in the order of `vs`.
pub fn sweep_v(config: &ExperimentConfig, vs: &[f64], execution: Execution) -> Result<Vec<SweepRow>> {
    if vs.is_empty() {
        return Err(Error::Config("V sweep needs at least one value".into()));
    }
    let configs: Vec<ExperimentConfig> = vs.iter().map(|&v| config.clone().with_v(v)).collect();
    Ok(run_grid(&configs, execution)?
        .into_iter()
        .map(|s| SweepRow {
            v: s.v,
            average_utility: s.average_utility,
            average_queue: s.average_queue,
            average_virtual_queue: s.average_virtual_queue,
        })
        .collect())
}
