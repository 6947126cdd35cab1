//! Tabular command output as CSV or JSON.
//!
//! Floats are written with 17 significant digits in scientific notation,
//! which round-trips every `f64` and does not depend on locale.

use std::collections::BTreeMap;
use std::fmt::Write as _;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
}

impl Cell {
    fn render(&self) -> String {
        match *self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format_float(v),
        }
    }

    fn render_json(&self) -> String {
        match *self {
            Cell::Float(v) if !v.is_finite() => format!("\"{}\"", format_float(v)),
            _ => self.render(),
        }
    }

    pub fn as_f64(&self) -> f64 {
        match *self {
            Cell::Float(v) => v,
            Cell::Int(v) => v as f64,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".to_owned()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_owned()
    } else {
        format!("{v:.16e}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputRecord {
    pub schema_version: String,
    pub command: String,
    pub params: BTreeMap<String, String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl OutputRecord {
    pub fn new(command: &str, columns: &[&str]) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_owned(),
            command: command.to_owned(),
            params: BTreeMap::new(),
            columns: columns.iter().map(|c| (*c).to_owned()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.params.insert(key.to_owned(), value.to_string());
        self
    }

    /// Appends a row.
    ///
    /// # Panics
    /// If the row's arity differs from the header's.
    pub fn push_row(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row arity must match the header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx].as_f64()).collect())
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let s = |v: &str| serde_json::to_string(v).expect("string serialization");
        let mut out = String::new();
        write!(
            out,
            "{{\"schema_version\":{},\"command\":{},\"params\":{},\"columns\":{},\"rows\":[",
            s(&self.schema_version),
            s(&self.command),
            serde_json::to_string(&self.params).expect("map serialization"),
            serde_json::to_string(&self.columns).expect("list serialization"),
        )
        .expect("write to string");
        for (i, row) in self.rows.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let cells: Vec<String> = row.iter().map(Cell::render_json).collect();
            write!(out, "[{}]", cells.join(",")).expect("write to string");
        }
        out.push_str("]}\n");
        out
    }
}
