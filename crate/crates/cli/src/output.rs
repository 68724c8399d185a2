//! Tabular output rendered as CSV or JSON.

use std::str::FromStr;

use serde::Serialize;
use serde_json::{Map, Number, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    UInt(u64),
    Float(f64),
    Text(String),
    Bool(bool),
    /// Value undefined for this row.
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::UInt(v)
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

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// Fixed notation with `precision` decimals in the usual range, scientific
/// notation with `precision` mantissa decimals for tiny or huge values.
pub fn format_float(v: f64, precision: usize) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = v.abs();
    if a == 0.0 || (1e-3..1e15).contains(&a) {
        format!("{v:.precision$}")
    } else {
        format!("{v:.precision$e}")
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(columns: &[S]) -> Self {
        Self { columns: columns.iter().map(|c| c.as_ref().to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// One row per record, one column per serialized field.
    pub fn from_records<T: Serialize>(records: &[T]) -> Self {
        let mut table = Table::default();
        for rec in records {
            let Ok(Value::Object(map)) = serde_json::to_value(rec) else {
                panic!("records must serialize to objects");
            };
            if table.columns.is_empty() {
                table.columns = map.keys().cloned().collect();
            }
            table.rows.push(map.into_values().map(value_cell).collect());
        }
        table
    }

    pub fn render(&self, format: Format, precision: usize) -> String {
        match format {
            Format::Csv => self.to_csv(precision),
            Format::Json => self.to_json(precision),
        }
    }

    fn to_csv(&self, precision: usize) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(|c| text(c, precision))).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
    }

    fn to_json(&self, precision: usize) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> =
                    self.columns.iter().cloned().zip(row.iter().map(|c| json(c, precision))).collect();
                Value::Object(obj)
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&rows).expect("serializable");
        s.push('\n');
        s
    }
}

fn value_cell(v: Value) -> Cell {
    match v {
        Value::Null => Cell::Empty,
        Value::Bool(b) => Cell::Bool(b),
        Value::Number(n) => {
            if let Some(u) = n.as_u64() {
                Cell::UInt(u)
            } else if let Some(i) = n.as_i64() {
                Cell::Int(i)
            } else {
                Cell::Float(n.as_f64().unwrap_or(f64::NAN))
            }
        }
        Value::String(s) => Cell::Text(s),
        other => Cell::Text(other.to_string()),
    }
}

fn text(cell: &Cell, precision: usize) -> String {
    match cell {
        Cell::Int(v) => v.to_string(),
        Cell::UInt(v) => v.to_string(),
        Cell::Float(v) => format_float(*v, precision),
        Cell::Text(s) => s.clone(),
        Cell::Bool(b) => b.to_string(),
        Cell::Empty => String::new(),
    }
}

fn json(cell: &Cell, precision: usize) -> Value {
    match cell {
        Cell::Int(v) => Value::from(*v),
        Cell::UInt(v) => Value::from(*v),
        // Same rounding as the CSV text.
        Cell::Float(v) => f64::from_str(&format_float(*v, precision))
            .ok()
            .and_then(Number::from_f64)
            .map_or(Value::Null, Value::Number),
        Cell::Text(s) => Value::String(s.clone()),
        Cell::Bool(b) => Value::Bool(*b),
        Cell::Empty => Value::Null,
    }
}
