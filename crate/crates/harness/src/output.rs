use crate::config::ExperimentConfig;
use crate::HarnessError;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::Path;

/// One CSV cell. Floats use the shortest round-trip form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Bool(bool),
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Float(v) => write!(f, "{v:?}"),
            Cell::Bool(v) => write!(f, "{v}"),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<Cell> for f64 {
    fn from(c: Cell) -> f64 {
        match c {
            Cell::Float(v) => v,
            Cell::Int(v) => v as f64,
            Cell::Bool(v) => v as u8 as f64,
        }
    }
}

/// Rows are kept in the order they were pushed; experiments push them sorted
/// by their leading key columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub schema: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl ResultTable {
    pub fn new(schema: &'static str, columns: &[&'static str]) -> Self {
        ResultTable { schema, columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "{} row width", self.schema);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<Cell>> {
        let k = self.columns.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(|c| c.to_string()).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }
}

/// Git-style content hash: SHA-256 of `"blob <len>\0" + bytes`.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    experiment: &'a str,
    library_version: &'a str,
    input_hash: String,
    config: &'a ExperimentConfig,
    outputs: Vec<(String, String)>,
}

pub fn write_file(dir: &Path, name: &str, body: &str) -> Result<(String, String), HarnessError> {
    std::fs::write(dir.join(name), body)?;
    Ok((name.to_string(), content_hash(body.as_bytes())))
}

pub fn write_manifest(
    dir: &Path,
    experiment: &str,
    config_text: &str,
    config: &ExperimentConfig,
    outputs: Vec<(String, String)>,
) -> Result<(), HarnessError> {
    let m = Manifest {
        experiment,
        library_version: env!("CARGO_PKG_VERSION"),
        input_hash: content_hash(config_text.as_bytes()),
        config,
        outputs,
    };
    let body = serde_json::to_string_pretty(&m).map_err(|e| HarnessError::Config(e.to_string()))?;
    std::fs::write(dir.join("manifest.json"), body + "\n")?;
    Ok(())
}
