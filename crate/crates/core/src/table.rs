//! Column-ordered result tables with CSV and JSON output.

use std::fmt;
use std::io::Write;

use serde_json::{Map, Value};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Float(v) => write!(f, "{}", fmt_float(*v)),
            Cell::Text(s) => f.write_str(s),
            Cell::Bool(b) => write!(f, "{b}"),
        }
    }
}

/// Shortest round-trip representation; non-finite values as `inf`, `-inf`, `nan`.
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v}")
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

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
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

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.columns.len() {
            return invalid(format!("row has {} cells, table has {} columns", row.len(), self.columns.len()));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[k]).collect())
    }

    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let csv_err = |e: csv::Error| Error::Evaluation(format!("csv output failed: {e}"));
        out.write_record(&self.columns).map_err(csv_err)?;
        for row in &self.rows {
            out.write_record(row.iter().map(|c| c.to_string())).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    /// One JSON object per row, keys in column order.
    pub fn to_json(&self) -> Value {
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = Map::new();
                for (name, cell) in self.columns.iter().zip(row) {
                    let v = match cell {
                        Cell::Int(i) => Value::from(*i),
                        Cell::Float(f) if f.is_finite() => Value::from(*f),
                        Cell::Float(f) => Value::from(fmt_float(*f)),
                        Cell::Text(s) => Value::from(s.as_str()),
                        Cell::Bool(b) => Value::from(*b),
                    };
                    obj.insert(name.clone(), v);
                }
                Value::Object(obj)
            })
            .collect();
        Value::Array(rows)
    }

    pub fn write_json(&self, mut w: impl Write) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_json())
            .map_err(|e| Error::Evaluation(format!("json output failed: {e}")))?;
        writeln!(w, "{text}")?;
        Ok(())
    }

    pub fn write(&self, format: Format, w: impl Write) -> Result<()> {
        match format {
            Format::Csv => self.write_csv(w),
            Format::Json => self.write_json(w),
        }
    }

    pub fn render(&self, format: Format) -> Result<String> {
        let mut buf = Vec::new();
        self.write(format, &mut buf)?;
        Ok(String::from_utf8(buf).expect("tables render as UTF-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_json_rendering() {
        let mut t = Table::new(["m", "r", "h_value", "note"]);
        t.push(vec![3usize.into(), 0.25.into(), f64::INFINITY.into(), "a,b".into()]).unwrap();
        t.push(vec![4usize.into(), 0.5.into(), 0.1.into(), true.into()]).unwrap();
        assert!(t.push(vec![1usize.into()]).is_err());
        let csv = t.render(Format::Csv).unwrap();
        assert_eq!(csv, "m,r,h_value,note\n3,0.25,inf,\"a,b\"\n4,0.5,0.1,true\n");
        let json = t.to_json();
        let keys: Vec<&String> = json[0].as_object().unwrap().keys().collect();
        assert_eq!(keys, ["m", "r", "h_value", "note"]);
        assert_eq!(json[0]["h_value"], "inf");
        assert_eq!(json[1]["r"], 0.5);
        assert_eq!(t.column("r").unwrap(), vec![&Cell::Float(0.25), &Cell::Float(0.5)]);
    }
}
