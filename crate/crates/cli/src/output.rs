//! CSV tables with a commented header, plus a JSON sidecar.
//!
//! Each CSV starts with two comment lines,
//!
//! ```text
//! # tongues <command> schema <version>
//! # config <json>
//! ```
//!
//! followed by the column names and the rows. The sidecar `<stem>.json`
//! holds the same config, a summary object and the list of failures.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Shortest round-trip text, switching to exponent form for very small or
/// large magnitudes.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e6).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// `<stem>.csv` and `<stem>.json`; a trailing `.csv` or `.json` on `stem` is dropped.
pub fn output_paths(stem: &Path) -> (PathBuf, PathBuf) {
    let text = stem.to_string_lossy();
    let base = text
        .strip_suffix(".csv")
        .or_else(|| text.strip_suffix(".json"))
        .unwrap_or(&text);
    (
        PathBuf::from(format!("{base}.csv")),
        PathBuf::from(format!("{base}.json")),
    )
}

pub struct Report<'a, C: Serialize> {
    pub command: &'a str,
    pub config: &'a C,
    pub table: &'a Table,
    pub summary: Value,
    pub failures: &'a [String],
}

impl<C: Serialize> Report<'_, C> {
    /// Write both files; returns their paths.
    pub fn write(&self, stem: &Path) -> Result<Vec<PathBuf>, CliError> {
        let (csv_path, json_path) = output_paths(stem);
        if let Some(dir) = csv_path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        let config = serde_json::to_string(self.config)?;

        let file = File::create(&csv_path).map_err(io_err(&csv_path))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "# tongues {} schema {}", self.command, SCHEMA_VERSION).map_err(io_err(&csv_path))?;
        writeln!(out, "# config {config}").map_err(io_err(&csv_path))?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.table.columns)?;
        for row in &self.table.rows {
            w.write_record(row)?;
        }
        w.flush().map_err(io_err(&csv_path))?;

        let sidecar = json!({
            "schema": SCHEMA_VERSION,
            "command": self.command,
            "config": serde_json::from_str::<Value>(&config)?,
            "table": csv_path.file_name().map(|n| n.to_string_lossy().into_owned()),
            "rows": self.table.rows.len(),
            "summary": self.summary,
            "failures": self.failures,
        });
        let mut text = serde_json::to_string_pretty(&sidecar)?;
        text.push('\n');
        std::fs::write(&json_path, text).map_err(io_err(&json_path))?;
        Ok(vec![csv_path, json_path])
    }
}
