use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use umwplus::correspondence::run_correspondence;
use umwplus::harness::{
    bundled_instances, export_dual_csv, export_metrics_csv, export_sweep_csv, instance, load_config, run_dual,
    run_experiment, sweep_v, Execution, ExperimentConfig, Mode,
};
use umwplus::Error;

#[derive(Parser)]
#[command(
    name = "umwplus",
    version,
    about = "Utility-optimal network control simulator and dual solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run whatever the config's `run.mode` asks for (simulate by default).
    Run(Common),
    /// One simulation per V value; writes one CSV row per V.
    SweepV {
        #[command(flatten)]
        common: Common,
        /// V values to sweep; defaults to the config's list.
        #[arg(long = "values", value_delimiter = ',')]
        values: Vec<f64>,
        /// Run the sweep points one after another.
        #[arg(long)]
        sequential: bool,
    },
    /// Subgradient iterations on the dual problem from q = 0.
    Dual(Common),
    /// Step the virtual network and the dual solver together and compare.
    CheckCorrespondence {
        #[command(flatten)]
        common: Common,
        /// Initial price on every edge.
        #[arg(long, default_value_t = 0.0)]
        q0: f64,
    },
    /// Print the bundled instance names.
    ListInstances,
}

#[derive(Args)]
struct Common {
    /// TOML or JSON experiment file.
    #[arg(long, conflicts_with = "instance")]
    config: Option<PathBuf>,
    /// Name of a bundled instance.
    #[arg(long)]
    instance: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    v: Option<f64>,
    #[arg(long)]
    slots: Option<u64>,
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Invalid(anyhow::Error),
    Runtime(anyhow::Error),
    Mismatch(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Fault(_) | Error::TooLarge { .. } | Error::InfeasibleRates(_) | Error::Io { .. } => {
                Failure::Runtime(e.into())
            }
            _ => Failure::Invalid(e.into()),
        }
    }
}

fn load(common: &Common) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match (&common.config, &common.instance) {
        (Some(path), _) => load_config(path).map_err(|e| Failure::Invalid(e.into()))?,
        (None, Some(name)) => instance(name)
            .ok_or_else(|| Failure::Invalid(anyhow::anyhow!("unknown instance '{name}' (try list-instances)")))?,
        (None, None) => return Err(Failure::Invalid(anyhow::anyhow!("pass --config or --instance"))),
    };
    if let Some(v) = common.v {
        cfg = cfg.with_v(v);
    }
    if let Some(slots) = common.slots {
        cfg = cfg.with_slots(slots);
    }
    if let Some(theta) = common.theta {
        cfg = cfg.with_theta(theta);
    }
    if let Some(seed) = common.seed {
        cfg = cfg.with_seed(seed);
    }
    if common.out.is_some() {
        cfg.out = common.out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn output(cfg: &ExperimentConfig, suffix: &str) -> PathBuf {
    cfg.out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}-{suffix}.csv", cfg.name)))
}

fn simulate(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let series = run_experiment(cfg)?;
    let path = output(cfg, "metrics");
    export_metrics_csv(&series, &path)?;
    let s = &series.summary;
    println!("instance       {}", cfg.name);
    println!("V              {}", s.v);
    println!("slots          {}", s.slots);
    println!("avg utility    {:.6}", s.average_utility);
    println!("avg queue      {:.4}", s.average_queue);
    println!("avg virtual    {:.4}", s.average_virtual_queue);
    for (k, r) in s.delivered_rates.iter().enumerate() {
        println!("class {k} rate   {r:.6}");
    }
    if s.greedy_slots > 0 {
        println!("greedy slots   {}", s.greedy_slots);
    }
    written(&path);
    Ok(())
}

fn sweep(cfg: &ExperimentConfig, values: &[f64], execution: Execution) -> Result<(), Failure> {
    let vs = if values.is_empty() {
        cfg.v_values.clone()
    } else {
        values.to_vec()
    };
    let rows = sweep_v(cfg, &vs, execution)?;
    let path = output(cfg, "sweep");
    export_sweep_csv(&rows, &path)?;
    println!("{:>10} {:>12} {:>12} {:>12}", "V", "utility", "queue", "virtual");
    for r in &rows {
        println!(
            "{:>10} {:>12.6} {:>12.4} {:>12.4}",
            r.v, r.average_utility, r.average_queue, r.average_virtual_queue
        );
    }
    written(&path);
    Ok(())
}

fn dual(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let series = run_dual(cfg)?;
    let path = output(cfg, "dual");
    export_dual_csv(&series, &path)?;
    println!("theta          {}", series.theta);
    println!("V              {}", series.v);
    println!("iterations     {}", series.records.len());
    println!("min objective  {:.9}", series.min_objective);
    println!("max |g|^2      {:.4} (bound {:.4})", series.max_norm, series.norm_bound);
    written(&path);
    Ok(())
}

fn correspondence(cfg: &ExperimentConfig, q0: f64) -> Result<(), Failure> {
    let q0 = vec![q0; cfg.topology.edge_count()];
    let report = run_correspondence(&cfg.topology, &cfg.classes, cfg.v(), cfg.theta, &q0, cfg.slots as usize)?;
    println!("slots          {}", report.slots);
    println!("theta          {}", report.theta);
    println!("max deviation  {:e}", report.max_deviation);
    match report.first_mismatch {
        None => {
            println!("traces agree");
            Ok(())
        }
        Some(m) => Err(Failure::Mismatch(m.to_string())),
    }
}

fn written(path: &Path) {
    info!("wrote {}", path.display());
    println!("wrote          {}", path.display());
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::ListInstances => {
            for i in bundled_instances() {
                println!("{:<22} {}", i.name, i.description);
            }
            Ok(())
        }
        Command::Run(common) => {
            let cfg = load(&common)?;
            match cfg.mode {
                Mode::Simulate => simulate(&cfg),
                Mode::Dual => dual(&cfg),
                Mode::Correspondence => correspondence(&cfg, 0.0),
                Mode::Sweep => sweep(&cfg, &[], Execution::Parallel),
            }
        }
        Command::SweepV {
            common,
            values,
            sequential,
        } => {
            let cfg = load(&common)?;
            let execution = if sequential {
                Execution::Sequential
            } else {
                Execution::Parallel
            };
            sweep(&cfg, &values, execution)
        }
        Command::Dual(common) => dual(&load(&common)?),
        Command::CheckCorrespondence { common, q0 } => correspondence(&load(&common)?, q0),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("fault: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Mismatch(m)) => {
            eprintln!("correspondence failed: {m}");
            ExitCode::from(3)
        }
    }
}
