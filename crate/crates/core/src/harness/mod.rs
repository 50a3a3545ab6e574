//! Experiment configuration, bundled instances, runs, sweeps and CSV export.

pub mod config;
pub mod experiment;
pub mod instances;
pub mod metrics;

pub use config::{load_config, parse_document, ConfigDocument, DocumentFormat, ExperimentConfig, Mode};
pub use experiment::{
    run_dual, run_experiment, run_grid, sweep_v, DualRecord, DualSeries, Execution, MetricsSeries, RunSummary,
    SlotRecord, SweepRow,
};
pub use instances::{bundled_instances, instance, Instance};
pub use metrics::{export_dual_csv, export_metrics_csv, export_sweep_csv, read_csv_table, CsvTable};
