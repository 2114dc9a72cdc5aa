//! CSV, JSON and SVG writers.
//!
//! Numbers are written in their shortest round-trip decimal form, so reading
//! a file back reproduces the stored doubles exactly. CSV uses commas and LF
//! line endings.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::svg::Plot;

#[derive(Debug, thiserror::Error)]
pub enum EmitError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {message}")]
    Format { path: String, message: String },
    #[error("refusing to write an empty dataset to {0}")]
    Empty(String),
}

/// Shortest round-trip decimal; exponent form outside [1e-4, 1e15).
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// A table with named columns; cells are numbers or labels.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => fmt_f64(*x),
            Cell::Int(k) => k.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> EmitError + '_ {
    move |source| EmitError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn emit_csv(path: &Path, table: &Table) -> Result<PathBuf, EmitError> {
    if table.rows.is_empty() {
        return Err(EmitError::Empty(path.display().to_string()));
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| EmitError::Format {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
    let fmt_err = |e: csv::Error| EmitError::Format {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    w.write_record(&table.columns).map_err(fmt_err)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::render)).map_err(fmt_err)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(path.to_path_buf())
}

/// Pretty-printed JSON with a trailing newline.
pub fn emit_json(path: &Path, value: &Value) -> Result<PathBuf, EmitError> {
    if value.is_null() || value.as_object().is_some_and(|o| o.is_empty()) {
        return Err(EmitError::Empty(path.display().to_string()));
    }
    let mut text = serde_json::to_string_pretty(value).map_err(|e| EmitError::Format {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(io_err(path))?;
    Ok(path.to_path_buf())
}

pub fn emit_svg(path: &Path, plot: &Plot) -> Result<PathBuf, EmitError> {
    if plot.series.iter().all(|s| s.points.is_empty()) {
        return Err(EmitError::Empty(path.display().to_string()));
    }
    let mut f = std::fs::File::create(path).map_err(io_err(path))?;
    f.write_all(plot.render().as_bytes()).map_err(io_err(path))?;
    Ok(path.to_path_buf())
}

/// JSON number, or null when not finite.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

/// [re, im] pair.
pub fn complex(z: floqlind_core::C64) -> Value {
    Value::Array(vec![num(z.re), num(z.im)])
}
