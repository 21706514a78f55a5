//! Reports: one JSON document per run plus one CSV per table, with stable
//! file names so downstream plotting scripts can rely on them.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;
use crate::error::Result;

pub const ARTIFACT_VERSION: &str = concat!("shadownet-", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Pass/fail row tied to an acceptance criterion number.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub criterion: u8,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub version: String,
    pub config: RunConfig,
    /// Aggregate statistics; sorted keys keep serialization stable.
    pub summary: BTreeMap<String, Value>,
    pub checks: Vec<CheckRow>,
    pub warnings: Vec<String>,
    pub tables: Vec<Table>,
    /// Wall-clock seconds; the only field expected to differ between
    /// identical runs.
    pub duration_secs: f64,
}

impl Report {
    pub fn new(config: RunConfig) -> Self {
        Report {
            version: ARTIFACT_VERSION.to_string(),
            config,
            summary: BTreeMap::new(),
            checks: Vec::new(),
            warnings: Vec::new(),
            tables: Vec::new(),
            duration_secs: 0.0,
        }
    }

    pub fn put(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_string(), value.into());
    }

    pub fn check(&mut self, criterion: u8, name: &str, passed: bool, detail: String) {
        self.checks.push(CheckRow {
            criterion,
            name: name.to_string(),
            passed,
            detail,
        });
    }

    /// Lowest criterion number among failed checks, if any.
    pub fn first_failed_criterion(&self) -> Option<u8> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.criterion)
            .min()
    }
}

/// Writes report.json plus `<table>.csv` per table; returns the paths.
pub fn write_report(report: &Report, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let mut paths = Vec::new();

    let json_path = out_dir.join("report.json");
    fs::write(&json_path, serde_json::to_string_pretty(report)?)?;
    paths.push(json_path);

    for table in &report.tables {
        let path = out_dir.join(format!("{}.csv", table.name));
        let mut file = fs::File::create(&path)?;
        writeln!(file, "{}", table.columns.join(","))?;
        for row in &table.rows {
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            writeln!(file, "{}", line.join(","))?;
        }
        paths.push(path);
    }
    Ok(paths)
}
