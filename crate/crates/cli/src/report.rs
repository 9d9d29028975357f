//! Tabular results and their CSV / JSON rendering.

use serde::Serialize;
use serde_json::{Map, Value};

use crate::args::Format;
use crate::CliError;

pub const REPORT_VERSION: &str = "mtlsim-report-v1";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Monte Carlo rows share this column order.
pub const MC_COLUMNS: [&str; 7] = ["quantity", "scenario_id", "learner", "trials", "seed", "mean", "stderr"];

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Str(String),
    Int(u64),
    Num(f64),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Str(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            // shortest round-trip form, so reruns are byte-identical
            Cell::Num(x) => format!("{x:?}"),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Str(s) => Value::String(s.clone()),
            Cell::Int(i) => Value::from(*i),
            Cell::Num(x) => serde_json::Number::from_f64(*x).map(Value::Number).unwrap_or(Value::Null),
            Cell::Bool(b) => Value::Bool(*b),
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Str(s.to_string())
    }
}
impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Str(s)
    }
}
impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}
impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x)
    }
}
impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}
impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn mc_row(&mut self, quantity: &str, scenario_id: &str, learner: &str, e: &mtlsim::mc::RiskEstimate) {
        self.push(vec![
            quantity.into(),
            scenario_id.into(),
            learner.into(),
            e.trials.into(),
            e.seed.into(),
            e.mean.into(),
            e.stderr.into(),
        ]);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

#[derive(Serialize)]
struct JsonReport<'a> {
    version: &'a str,
    tool_version: &'a str,
    command: &'a str,
    config: &'a Value,
    timestamp: &'a str,
    columns: &'a [String],
    rows: Vec<Map<String, Value>>,
}

pub fn render(table: &Table, format: Format, command: &str, config: &Value, timestamp: &str) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Csv => {
            let mut out = Vec::new();
            let cfg = serde_json::to_string(config).map_err(|e| CliError::Usage(e.to_string()))?;
            out.extend_from_slice(
                format!("# mtlsim {TOOL_VERSION}\n# command: {command}\n# config: {cfg}\n# timestamp: {timestamp}\n")
                    .as_bytes(),
            );
            let mut w = csv::Writer::from_writer(out);
            let io = |e: csv::Error| CliError::Usage(format!("csv: {e}"));
            w.write_record(&table.columns).map_err(io)?;
            for r in &table.rows {
                w.write_record(r.iter().map(Cell::csv)).map_err(io)?;
            }
            w.into_inner().map_err(|e| CliError::Usage(format!("csv: {e}")))
        }
        Format::Json => {
            let rows = table
                .rows
                .iter()
                .map(|r| table.columns.iter().cloned().zip(r.iter().map(Cell::json)).collect())
                .collect();
            let rep = JsonReport {
                version: REPORT_VERSION,
                tool_version: TOOL_VERSION,
                command,
                config,
                timestamp,
                columns: &table.columns,
                rows,
            };
            let mut s = serde_json::to_string_pretty(&rep).map_err(|e| CliError::Usage(e.to_string()))?;
            s.push('\n');
            Ok(s.into_bytes())
        }
    }
}
