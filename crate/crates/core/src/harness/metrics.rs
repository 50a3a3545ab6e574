//! CSV export. Floats carry 12 significant digits.
//!
//! Slot series: `slot,utility,average_utility,physical_queue,virtual_queue,lyapunov,rate_0..`.
//! Dual series: `iteration,objective,q_0..,r_0..,c_0..`.
//! Sweeps: `v,average_utility,average_queue,average_virtual_queue`.

use std::path::Path;

use crate::error::{Error, Result};

use super::experiment::{DualSeries, MetricsSeries, SweepRow};

fn fmt(x: f64) -> String {
    format!("{x:.11e}")
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e.to_string()),
    }
}

fn write_table(path: &Path, header: Vec<String>, rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_error(path, e))?;
    w.write_record(&header).map_err(|e| io_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| io_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

fn numbered(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (0..n).map(move |i| format!("{prefix}_{i}"))
}

pub fn export_metrics_csv(series: &MetricsSeries, path: &Path) -> Result<()> {
    let mut header: Vec<String> = [
        "slot",
        "utility",
        "average_utility",
        "physical_queue",
        "virtual_queue",
        "lyapunov",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(numbered("rate", series.class_count));
    let rows = series.records.iter().map(|r| {
        let mut row = vec![
            r.slot.to_string(),
            fmt(r.utility),
            fmt(r.average_utility),
            fmt(r.physical_queue),
            fmt(r.virtual_queue),
            fmt(r.lyapunov),
        ];
        row.extend(r.delivered_rates.iter().map(|&x| fmt(x)));
        row
    });
    write_table(path, header, rows)
}

pub fn export_dual_csv(series: &DualSeries, path: &Path) -> Result<()> {
    let (m, k) = series
        .records
        .first()
        .map(|r| (r.q.len(), r.rates.len()))
        .unwrap_or((0, 0));
    let mut header = vec!["iteration".to_string(), "objective".to_string()];
    header.extend(numbered("q", m));
    header.extend(numbered("r", k));
    header.extend(numbered("c", k));
    let rows = series.records.iter().map(|r| {
        let mut row = vec![r.iteration.to_string(), fmt(r.objective)];
        row.extend(r.q.iter().chain(&r.rates).chain(&r.costs).map(|&x| fmt(x)));
        row
    });
    write_table(path, header, rows)
}

pub fn export_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let header = ["v", "average_utility", "average_queue", "average_virtual_queue"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows = rows.iter().map(|r| {
        vec![
            fmt(r.v),
            fmt(r.average_utility),
            fmt(r.average_queue),
            fmt(r.average_virtual_queue),
        ]
    });
    write_table(path, header, rows)
}

/// A numeric CSV read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn read_csv_table(path: &Path) -> Result<CsvTable> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_error(path, e))?;
    let header = r
        .headers()
        .map_err(|e| io_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| io_error(path, e))?;
        let row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|e| Error::Parse {
                    path: path.display().to_string(),
                    message: format!("{field:?}: {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(CsvTable { header, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::experiment::{run_dual, run_experiment, RunSummary};
    use crate::harness::instances::instance;

    fn empty_series() -> MetricsSeries {
        MetricsSeries {
            class_count: 2,
            records: Vec::new(),
            summary: RunSummary {
                v: 1.0,
                slots: 0,
                average_utility: 0.0,
                average_queue: 0.0,
                average_virtual_queue: 0.0,
                final_queue: 0.0,
                final_virtual_queue: 0.0,
                delivered_rates: vec![0.0; 2],
                drift_constant: 0.0,
                greedy_slots: 0,
                max_coupling_excess: 0.0,
                max_skorokhod_gap: 0.0,
            },
        }
    }

    #[test]
    fn empty_series_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        export_metrics_csv(&empty_series(), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "slot,utility,average_utility,physical_queue,virtual_queue,lyapunov,rate_0,rate_1\n"
        );
    }

    #[test]
    fn metrics_parse_back_at_printed_precision() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.csv");
        let series = run_experiment(&instance("mixed-5node").unwrap().with_slots(200)).unwrap();
        export_metrics_csv(&series, &path).unwrap();
        let table = read_csv_table(&path).unwrap();
        assert_eq!(table.rows.len(), 200);
        for (row, rec) in table.rows.iter().zip(&series.records) {
            assert_eq!(row[0], rec.slot as f64);
            assert_eq!(row[1], fmt(rec.utility).parse::<f64>().unwrap());
            assert_eq!(row[4], fmt(rec.virtual_queue).parse::<f64>().unwrap());
            assert!((row[2] - rec.average_utility).abs() <= 1e-11 * rec.average_utility.abs().max(1.0));
        }
    }

    #[test]
    fn dual_csv_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dual.csv");
        let series = run_dual(&instance("single-edge").unwrap().with_slots(10)).unwrap();
        export_dual_csv(&series, &path).unwrap();
        let table = read_csv_table(&path).unwrap();
        assert_eq!(table.header, vec!["iteration", "objective", "q_0", "r_0", "c_0"]);
        assert_eq!(table.rows.len(), 10);
    }

    #[test]
    fn unwritable_path_names_the_path() {
        let err = export_metrics_csv(&empty_series(), Path::new("/nonexistent/dir/x.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/x.csv"));
    }

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt(std::f64::consts::PI), "3.14159265359e0");
        assert_eq!(fmt(0.0), "0.00000000000e0");
    }
}
