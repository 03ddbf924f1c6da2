//! Report assembly and atomic file output. Every artifact is written to a
//! temporary file in the destination directory and renamed into place, so
//! readers never observe a partial file; identical inputs produce
//! byte-identical outputs.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::{LabError, Result};

/// One gating check: its name, verdict, and a human-readable detail line.
#[derive(Clone, Debug, Serialize)]
pub struct Gate {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Gate {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Gate {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// The run artifact bundle: the report document plus named CSV tables.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub report: Value,
    pub tables: Vec<(String, String)>,
    /// Extra JSON files (name, content), e.g. forest dumps.
    pub extra_json: Vec<(String, String)>,
    pub gates: Vec<Gate>,
}

impl RunArtifacts {
    pub fn all_gates_pass(&self) -> bool {
        self.gates.iter().all(|g| g.passed)
    }
}

/// Assemble the versioned report document.
pub fn report_document(
    command: &str,
    config: &impl Serialize,
    results: Value,
    gates: &[Gate],
) -> Value {
    serde_json::json!({
        "version": "1",
        "command": command,
        "config": serde_json::to_value(config).expect("config serializes"),
        "results": results,
        "gates": serde_json::to_value(gates).expect("gates serialize"),
        "passed": gates.iter().all(|g| g.passed),
    })
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| LabError::io(dir, e))?;
    std::io::Write::write_all(&mut tmp, bytes).map_err(|e| LabError::io(path, e))?;
    tmp.persist(path)
        .map_err(|e| LabError::io(path, e.error))?;
    Ok(())
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes())
}

/// Render rows into CSV text with a header line; always ends in a newline,
/// and an empty row set yields a header-only file.
pub fn csv_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("header writes");
    for row in rows {
        w.write_record(row).expect("row writes");
    }
    String::from_utf8(w.into_inner().expect("csv buffer")).expect("csv is utf-8")
}

/// Write the full artifact bundle under `dir`; returns the report path.
pub fn emit(artifacts: &RunArtifacts, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    let tables_dir = dir.join("tables");
    for (name, text) in &artifacts.tables {
        write_text(&tables_dir.join(name), text)?;
    }
    for (name, text) in &artifacts.extra_json {
        write_text(&dir.join(name), text)?;
    }
    let report_path = dir.join("report.json");
    write_json(&report_path, &artifacts.report)?;
    Ok(report_path)
}
