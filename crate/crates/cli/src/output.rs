use std::path::Path;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use tfd_core::oracle::TruncationReport;
use tfd_core::verify::Check;
use tfd_core::DriftReport;

use crate::error::CliError;

/// Numeric table; headers carry units in brackets.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Table {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    #[cfg(test)]
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.headers.iter().position(|h| h == name || h.split(' ').next() == Some(name))?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    /// Append `oracle_<name>` and `diff_<name>` columns; returns the largest
    /// difference.
    pub fn add_comparison(&mut self, name: &str, unit: &str, oracle: &[f64]) -> f64 {
        let k = self
            .headers
            .iter()
            .position(|h| h.split(' ').next() == Some(name))
            .expect("compared column exists");
        self.headers.push(format!("oracle_{name} [{unit}]"));
        self.headers.push(format!("diff_{name} [{unit}]"));
        let mut worst: f64 = 0.0;
        for (row, o) in self.rows.iter_mut().zip(oracle) {
            let d = (row[k] - o).abs();
            worst = worst.max(d);
            row.push(*o);
            row.push(d);
        }
        worst
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), CliError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.headers)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format_number(*v)))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub column: String,
    pub max_abs_difference: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub run_kind: String,
    pub config_digest: String,
    pub timestamp_unix: u64,
    pub duration_seconds: f64,
    pub drift: DriftReport,
    pub truncation: Option<TruncationReport>,
    pub comparisons: Vec<Comparison>,
    pub checks: Vec<Check>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(run_kind: &str, config_digest: String, started: SystemTime, duration: Duration) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            run_kind: run_kind.to_string(),
            config_digest,
            timestamp_unix: started.duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            duration_seconds: duration.as_secs_f64(),
            drift: DriftReport::default(),
            truncation: None,
            comparisons: Vec::new(),
            checks: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Io(e.to_string()))?;
        std::fs::write(dir.join("manifest.json"), text + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, 0.0] {
            let s = format_number(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
        assert_eq!(format_number(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn comparison_columns_follow_the_table() {
        let mut t = Table::new(&["t [time]", "x [1]"]);
        t.push(vec![0.0, 1.0]);
        t.push(vec![1.0, 2.0]);
        let worst = t.add_comparison("x", "1", &[1.5, 2.0]);
        assert_eq!(worst, 0.5);
        assert_eq!(t.headers, ["t [time]", "x [1]", "oracle_x [1]", "diff_x [1]"]);
        assert_eq!(t.column("diff_x").unwrap(), vec![0.5, 0.0]);
    }
}
