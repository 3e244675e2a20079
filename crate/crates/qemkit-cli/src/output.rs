//! CSV and JSON writers. Floats in CSV carry 17 significant digits so every
//! value round-trips exactly.

use std::path::{Path, PathBuf};

use qemkit::analysis::Ratio;
use serde::Serialize;

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

pub fn ratio(r: Ratio) -> String {
    match r {
        Ratio::Value(v) => float(v),
        Ratio::Saturated => "saturated".into(),
    }
}

/// A CSV table held in memory until written.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &'static [&'static str]) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let err = |e: csv::Error| CliError::Output(format!("{}: {e}", path.display()));
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path).map_err(err)?;
        w.write_record(self.columns).map_err(err)?;
        for r in &self.rows {
            w.write_record(r).map_err(err)?;
        }
        w.flush().map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
    }
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Output(e.to_string()))?;
    s.push('\n');
    std::fs::write(path, s).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}

pub fn prepare_dir(dir: &Path) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
    Ok(dir.to_path_buf())
}

pub const SIMULATE_COLUMNS: &[&str] = &["benchmark", "observable", "theta_tau", "engine", "sample", "ideal", "noisy"];

pub const QEM_COLUMNS: &[&str] = &[
    "benchmark",
    "observable",
    "theta_tau",
    "tau",
    "order",
    "mode",
    "engine",
    "sample",
    "ideal",
    "noisy",
    "qem",
    "rt_qem",
    "delta1",
    "delta2",
    "m_first_second",
    "group_size",
];

pub const PEC_COLUMNS: &[&str] = &["benchmark", "observable", "theta_tau", "sample", "ideal", "noisy", "qem", "pec", "rt_pec_qem"];
