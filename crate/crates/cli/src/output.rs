// Copyright 2026 chiralwg Contributors
// SPDX-License-Identifier: Apache-2.0

//! Plot-ready artifacts. CSV files start with `# params=<json>` holding the
//! resolved scenario; numbers use the shortest decimal form that reads back
//! to the same double.

use std::fs;
use std::path::{Path, PathBuf};

use chiralwg::C64;
use serde_json::{json, Value};

use crate::error::{CliError, Result};
use crate::scenario::Format;

/// Shortest round-trip text of `x`: plain notation for moderate magnitudes,
/// exponent notation otherwise.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x == 0.0 {
        "0".into()
    } else if (1e-5..1e16).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// `a+bi` with the imaginary part dropped when it is zero.
pub fn format_complex(z: C64) -> String {
    if z.im == 0.0 {
        format_float(z.re)
    } else if z.im < 0.0 {
        format!("{}-{}i", format_float(z.re), format_float(-z.im))
    } else {
        format!("{}+{}i", format_float(z.re), format_float(z.im))
    }
}

/// JSON number, or a string for non-finite values.
pub fn json_float(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::String(format_float(x))
    }
}

pub fn json_complex(z: C64) -> Value {
    json!([json_float(z.re), json_float(z.im)])
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Num(x) => format_float(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => json_float(*x),
            Cell::Int(n) => json!(n),
            Cell::Bool(b) => json!(b),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as u64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Extra comment lines after the params line (without `# `).
    pub comments: Vec<String>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Self::default()
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Output directory plus the provenance string shared by every artifact.
pub struct Sink {
    pub dir: PathBuf,
    pub format: Format,
    pub params: Value,
    pub written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(dir: &Path, format: Format, params: Value) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            format,
            params,
            written: Vec::new(),
        })
    }

    fn write_bytes(&mut self, file: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(file);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    pub fn table(&mut self, table: &Table) -> Result<()> {
        match self.format {
            Format::Csv => self.table_csv(table),
            Format::Json => {
                let doc = json!({
                    "params": self.params,
                    "columns": table.columns,
                    "comments": table.comments,
                    "rows": table
                        .rows
                        .iter()
                        .map(|r| r.iter().map(Cell::json).collect::<Vec<_>>())
                        .collect::<Vec<_>>(),
                });
                self.report(&table.name, &doc)
            }
        }
    }

    /// CSV with LF line endings, even when written as the JSON format's
    /// companion (field maps stay loadable).
    pub fn table_csv(&mut self, table: &Table) -> Result<()> {
        let mut out = format!("# params={}\n", self.params);
        for c in &table.comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&table.columns)?;
        for row in &table.rows {
            w.write_record(row.iter().map(Cell::text))?;
        }
        let body = w
            .into_inner()
            .map_err(|e| CliError::Config(format!("csv buffer: {e}")))?;
        out.push_str(std::str::from_utf8(&body).expect("csv output is UTF-8"));
        let name = format!("{}.csv", table.name);
        self.write_bytes(&name, out.as_bytes())
    }

    /// Pretty JSON report with the resolved parameters under `params`.
    pub fn report(&mut self, name: &str, doc: &Value) -> Result<()> {
        let mut doc = doc.clone();
        if let Value::Object(map) = &mut doc {
            map.entry("params").or_insert_with(|| self.params.clone());
        }
        let mut text = serde_json::to_string_pretty(&doc)
            .map_err(|e| CliError::Config(format!("report {name}: {e}")))?;
        text.push('\n');
        self.write_bytes(&format!("{name}.json"), text.as_bytes())
    }
}

/// Writes `error.json` into `dir`; returns the path when it succeeded.
pub fn write_error(dir: &Path, err: &CliError) -> Option<PathBuf> {
    fs::create_dir_all(dir).ok()?;
    let path = dir.join("error.json");
    let mut text = serde_json::to_string_pretty(&err.to_json()).ok()?;
    text.push('\n');
    fs::write(&path, text).ok()?;
    Some(path)
}
