//! Rectangular result tables with CSV output, and the run manifest.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};

use super::config::ScenarioConfig;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub config_hash: String,
    pub version: String,
    pub scenario: String,
}

impl Provenance {
    pub fn of(cfg: &ScenarioConfig) -> Self {
        Provenance {
            config_hash: cfg.hash(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            scenario: cfg.scenario.name().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
    pub provenance: Provenance,
}

impl ResultTable {
    pub fn new(columns: Vec<String>, provenance: Provenance) -> Self {
        ResultTable { columns, rows: Vec::new(), provenance }
    }

    /// Appends a row; rejects wrong widths and non-finite entries.
    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::param("row", format!("has {} entries, table has {} columns", row.len(), self.columns.len())));
        }
        if let Some(i) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::param("row", format!("non-finite value in column `{}`", self.columns[i])));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        out.write_record(&self.columns)?;
        let mut buf = Vec::with_capacity(self.columns.len());
        for row in &self.rows {
            buf.clear();
            buf.extend(row.iter().map(|&v| format_value(v)));
            out.write_record(&buf)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut v = Vec::new();
        self.write_csv(&mut v).expect("writing to memory");
        String::from_utf8(v).expect("csv is ascii")
    }
}

/// Shortest round-trip decimal; scientific notation outside [1e-4, 1e15).
pub fn format_value(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 {
        "0".to_string()
    } else if (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Everything about a run that does not fit in the table.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub provenance: Provenance,
    pub config: ScenarioConfig,
    pub columns: Vec<String>,
    pub rows: usize,
    pub derived: Map<String, Value>,
    pub diagnostics: Vec<String>,
    pub timings_s: Map<String, Value>,
}

impl Manifest {
    pub fn new(cfg: &ScenarioConfig) -> Self {
        Manifest {
            provenance: Provenance::of(cfg),
            config: cfg.clone(),
            columns: Vec::new(),
            rows: 0,
            derived: Map::new(),
            diagnostics: Vec::new(),
            timings_s: Map::new(),
        }
    }

    pub fn derive(&mut self, key: impl Into<String>, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.derived.insert(key.into(), v);
    }

    pub fn derived_f64(&self, key: &str) -> Option<f64> {
        self.derived.get(key).and_then(Value::as_f64)
    }

    pub fn note(&mut self, msg: impl Into<String>) {
        self.diagnostics.push(msg.into());
    }

    pub fn time(&mut self, key: impl Into<String>, seconds: f64) {
        self.timings_s.insert(key.into(), Value::from(seconds));
    }
}

/// A finished scenario.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub table: ResultTable,
    pub manifest: Manifest,
}

impl RunOutput {
    /// Path of the manifest next to a CSV file: `out.csv` -> `out.manifest.json`.
    pub fn manifest_path(csv: &Path) -> PathBuf {
        let stem = csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
        csv.with_file_name(format!("{stem}.manifest.json"))
    }

    /// Writes the CSV and its manifest; returns the manifest path.
    pub fn write(&self, csv: &Path) -> Result<PathBuf> {
        if let Some(dir) = csv.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let f = std::io::BufWriter::new(std::fs::File::create(csv)?);
        self.table.write_csv(f)?;
        let mp = Self::manifest_path(csv);
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serialises");
        std::fs::write(&mp, text + "\n")?;
        Ok(mp)
    }
}
