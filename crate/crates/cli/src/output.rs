//! Tables and their CSV/JSON encodings.

use std::fs::File;
use std::io::{self, BufWriter, Write};

use serde_json::{json, Value};

use crate::config::{Command, Format, RunConfig};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format_number(*x),
            Cell::Int(k) => k.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => json!(x),
            Cell::Num(_) | Cell::Empty => Value::Null,
            Cell::Int(k) => json!(k),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
        }
    }
}

/// Shortest round-trip decimal, switching to exponent form outside
/// `[1e-4, 1e15)` so tiny defects stay readable.
pub fn format_number(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Index of `name` among the columns.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

pub fn write_csv(w: &mut impl Write, cmd: Command, cfg: &RunConfig, table: &Table) -> Result<()> {
    writeln!(w, "# qbsim {} {cmd}", env!("CARGO_PKG_VERSION"))?;
    for line in cfg.to_toml().lines() {
        if line.is_empty() {
            writeln!(w, "#")?;
        } else {
            writeln!(w, "# {line}")?;
        }
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(&table.columns)?;
    for row in &table.rows {
        out.write_record(row.iter().map(Cell::csv))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_json(w: &mut impl Write, cmd: Command, cfg: &RunConfig, table: &Table) -> Result<()> {
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
        .collect();
    let doc = json!({
        "generator": format!("qbsim {}", env!("CARGO_PKG_VERSION")),
        "command": cmd.name(),
        "config": serde_json::to_value(cfg)?,
        "columns": table.columns,
        "rows": rows,
    });
    serde_json::to_writer_pretty(&mut *w, &doc)?;
    writeln!(w)?;
    Ok(())
}

/// Write `table` to the configured destination, stdout when no path is set.
pub fn emit(cmd: Command, cfg: &RunConfig, table: &Table) -> Result<()> {
    let mut sink: Box<dyn Write> = match &cfg.output.path {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match cfg.output.format {
        Format::Csv => write_csv(&mut sink, cmd, cfg, table)?,
        Format::Json => write_json(&mut sink, cmd, cfg, table)?,
    }
    sink.flush()?;
    Ok(())
}
