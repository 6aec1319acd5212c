//! CSV and report writing.

use std::io::Write;
use std::path::Path;

use crate::error::{CliError, CliResult};

/// Shortest decimal text that parses back to the same `f64`; exponent
/// form outside `[1e-4, 1e15)`.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// In-memory CSV table with `#` comment lines before the header.
#[derive(Debug, Clone, Default)]
pub struct Table {
    comments: Vec<String>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            comments: Vec::new(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn comment(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        self.comments.push(format!("{key}: {value}"));
        self
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for c in &self.comments {
            writeln!(out, "# {c}").expect("write to Vec");
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header).expect("write to Vec");
        for r in &self.rows {
            w.write_record(r).expect("write to Vec");
        }
        w.into_inner().expect("flush to Vec")
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| CliError::io(path, e))
    }
}

/// Serializes `value` as TOML into `path`.
pub fn write_toml<T: serde::Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = toml::to_string(value).map_err(|e| CliError::format(path, e.to_string()))?;
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}
