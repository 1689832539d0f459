//! Row-oriented CSV and JSON writers.
//!
//! JSON output is an array of flat objects whose keys are the CSV header,
//! streamed row by row so large ensembles never sit in memory as text.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde_json::{Map, Value};

use crate::args::Format;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn csv_text(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            // Debug formatting is the shortest text that parses back to the same double.
            Cell::Float(v) => format!("{v:?}"),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json_value(&self) -> Value {
        match self {
            Cell::Int(v) => Value::from(*v),
            Cell::Float(v) => Value::from(*v),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Bool(b) => Value::from(*b),
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

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

enum Body {
    Csv(Box<csv::Writer<Box<dyn Write>>>),
    Json { out: Box<dyn Write>, rows: u64 },
}

pub struct TableWriter {
    header: Vec<&'static str>,
    body: Body,
    target: String,
}

fn open_target(path: Option<&Path>) -> Result<(Box<dyn Write>, String), CliError> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| CliError::io(p.display(), e))?;
            Ok((Box::new(BufWriter::new(file)), p.display().to_string()))
        }
        None => Ok((
            Box::new(BufWriter::new(io::stdout().lock())),
            "<stdout>".to_owned(),
        )),
    }
}

impl TableWriter {
    pub fn create(
        path: Option<&Path>,
        format: Format,
        header: Vec<&'static str>,
    ) -> Result<Self, CliError> {
        let (out, target) = open_target(path)?;
        let mut table = Self {
            header,
            body: match format {
                Format::Csv => Body::Csv(Box::new(csv::Writer::from_writer(out))),
                Format::Json => Body::Json { out, rows: 0 },
            },
            target,
        };
        match &mut table.body {
            Body::Csv(w) => w
                .write_record(&table.header)
                .map_err(|e| csv_error(&table.target, e))?,
            Body::Json { out, .. } => out
                .write_all(b"[")
                .map_err(|e| CliError::io(&table.target, e))?,
        }
        Ok(table)
    }

    pub fn row(&mut self, cells: &[Cell]) -> Result<(), CliError> {
        debug_assert_eq!(cells.len(), self.header.len());
        match &mut self.body {
            Body::Csv(w) => w
                .write_record(cells.iter().map(Cell::csv_text))
                .map_err(|e| csv_error(&self.target, e)),
            Body::Json { out, rows } => {
                let object: Map<String, Value> = self
                    .header
                    .iter()
                    .zip(cells)
                    .map(|(key, cell)| ((*key).to_owned(), cell.json_value()))
                    .collect();
                let sep: &[u8] = if *rows == 0 { b"\n" } else { b",\n" };
                *rows += 1;
                out.write_all(sep)
                    .and_then(|_| {
                        serde_json::to_writer(&mut *out, &object).map_err(io::Error::from)
                    })
                    .map_err(|e| CliError::io(&self.target, e))
            }
        }
    }

    /// Appends a `#`-prefixed line after the CSV rows. JSON output has no
    /// place for it, so it goes to standard error instead.
    pub fn finish(self, trailer: Option<&str>) -> Result<(), CliError> {
        let target = self.target;
        match self.body {
            Body::Csv(w) => {
                let mut out = w
                    .into_inner()
                    .map_err(|e| CliError::io(&target, e.into_error()))?;
                if let Some(line) = trailer {
                    writeln!(out, "# {line}").map_err(|e| CliError::io(&target, e))?;
                }
                out.flush().map_err(|e| CliError::io(&target, e))
            }
            Body::Json { mut out, rows } => {
                let end: &[u8] = if rows == 0 { b"]\n" } else { b"\n]\n" };
                out.write_all(end)
                    .and_then(|_| out.flush())
                    .map_err(|e| CliError::io(&target, e))?;
                if let Some(line) = trailer {
                    eprintln!("{line}");
                }
                Ok(())
            }
        }
    }
}

fn csv_error(target: &str, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(target, io),
        other => CliError::io(target, io::Error::other(format!("{other:?}"))),
    }
}
