use std::io::Write;

use serde_json::{json, Map, Value};

use crate::config::{Format, Params};
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Signed(i64),
    Float(f64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Signed(v) => v.to_string(),
            // Display gives the shortest string that parses back to the same bits.
            Cell::Float(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Signed(v) => json!(v),
            Cell::Float(v) if v.is_finite() => json!(v),
            Cell::Float(v) => Value::String(v.to_string()),
            Cell::Bool(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// Tabular command result.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Written to the output header.
    pub notes: Vec<String>,
    /// Written to the output header and echoed on stderr.
    pub warnings: Vec<String>,
}

impl Report {
    pub fn new(command: &'static str, columns: Vec<&'static str>) -> Self {
        Self { command, columns, rows: Vec::new(), notes: Vec::new(), warnings: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Two-column `quantity,value` report.
    pub fn key_values(command: &'static str, items: Vec<(&str, Cell)>) -> Self {
        let mut r = Self::new(command, vec!["quantity", "value"]);
        for (k, v) in items {
            r.push(vec![Cell::Text(k.to_string()), v]);
        }
        r
    }
}

fn write_csv(report: &Report, params: &Params, out: &mut dyn Write) -> Result<(), CliError> {
    writeln!(out, "# schema_version: {SCHEMA_VERSION}")?;
    writeln!(out, "# command: {}", report.command)?;
    writeln!(out, "# config: {}", params.echo())?;
    for note in &report.notes {
        writeln!(out, "# note: {note}")?;
    }
    for warning in &report.warnings {
        writeln!(out, "# warning: {warning}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&report.columns).map_err(csv_err)?;
    for row in &report.rows {
        w.write_record(row.iter().map(Cell::csv)).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

fn write_json(report: &Report, params: &Params, out: &mut dyn Write) -> Result<(), CliError> {
    let rows: Vec<Value> = report
        .rows
        .iter()
        .map(|row| {
            let obj: Map<String, Value> =
                report.columns.iter().zip(row).map(|(c, v)| (c.to_string(), v.json())).collect();
            Value::Object(obj)
        })
        .collect();
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "command": report.command,
        "config": params.echo(),
        "notes": report.notes,
        "warnings": report.warnings,
        "columns": report.columns,
        "rows": rows,
    });
    serde_json::to_writer_pretty(&mut *out, &doc).map_err(|e| CliError::Io(e.into()))?;
    writeln!(out)?;
    Ok(())
}

/// Writes the report to `--output` (or the default directory) or stdout.
pub fn emit(report: &Report, params: &mut Params) -> Result<(), CliError> {
    let format = *params.format.get_or_insert(Format::Csv);
    let dest = params.destination(report.command);
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    let mut sink: Box<dyn Write> = match &dest {
        Some(path) => Box::new(std::io::BufWriter::new(std::fs::File::create(path)?)),
        None => Box::new(std::io::stdout().lock()),
    };
    match format {
        Format::Csv => write_csv(report, params, &mut sink)?,
        Format::Json => write_json(report, params, &mut sink)?,
    }
    sink.flush()?;
    Ok(())
}
