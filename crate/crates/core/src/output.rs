//! Plot-ready CSV and self-describing JSON emission.
//!
//! Both formats embed the run configuration and the achieved tolerances, and
//! contain nothing that depends on the clock or the thread schedule.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Structured,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "structured" | "json" => Ok(Format::Structured),
            other => Err(Error::InvalidInput(format!("unknown format '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Numbers(Vec<f64>),
    Text(Vec<String>),
}

impl ColumnData {
    fn len(&self) -> usize {
        match self {
            ColumnData::Numbers(v) => v.len(),
            ColumnData::Text(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

impl Column {
    pub fn numbers(name: impl Into<String>, data: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            data: ColumnData::Numbers(data),
        }
    }

    pub fn text(name: impl Into<String>, data: Vec<String>) -> Self {
        Self {
            name: name.into(),
            data: ColumnData::Text(data),
        }
    }
}

impl Column {
    fn cell(&self, i: usize) -> String {
        match &self.data {
            ColumnData::Numbers(v) => num(v[i]),
            ColumnData::Text(v) => v[i].clone(),
        }
    }

    fn to_json(&self) -> Value {
        match &self.data {
            ColumnData::Numbers(v) => Value::Array(v.iter().map(|x| json_num(*x)).collect()),
            ColumnData::Text(v) => json!(v),
        }
    }
}

/// One output document: metadata plus columns sharing a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub kind: String,
    pub model: Value,
    pub alpha: Option<f64>,
    pub lambda: Option<f64>,
    pub config: Value,
    pub tolerances: Value,
    pub summary: Value,
    /// First column; every other column has one entry per grid entry.
    pub grid: Column,
    pub columns: Vec<Column>,
}

/// Shortest round-trip representation, used for every number written.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn json_num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map(Value::Number).unwrap_or_else(|| Value::String(num(v)))
}

impl Document {
    pub fn new(kind: impl Into<String>, grid: Column) -> Self {
        Self {
            kind: kind.into(),
            model: Value::Null,
            alpha: None,
            lambda: None,
            config: Value::Null,
            tolerances: Value::Null,
            summary: Value::Null,
            grid,
            columns: Vec::new(),
        }
    }

    fn check(&self) -> Result<()> {
        for c in &self.columns {
            if c.data.len() != self.grid.data.len() {
                return Err(Error::Invariant(format!(
                    "column '{}' has {} rows, grid has {}",
                    c.name,
                    c.data.len(),
                    self.grid.data.len()
                )));
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        self.check()?;
        let mut s = String::new();
        let compact = |v: &Value| serde_json::to_string(v).unwrap_or_default();
        let _ = writeln!(s, "# vacpol {}", self.kind);
        let _ = writeln!(s, "# model = {}", compact(&self.model));
        if let Some(a) = self.alpha {
            let _ = writeln!(s, "# alpha = {}", num(a));
        }
        if let Some(l) = self.lambda {
            let _ = writeln!(s, "# lambda = {}", num(l));
        }
        let _ = writeln!(s, "# config = {}", compact(&self.config));
        let _ = writeln!(s, "# tolerances = {}", compact(&self.tolerances));
        if !self.summary.is_null() {
            let _ = writeln!(s, "# summary = {}", compact(&self.summary));
        }
        let all: Vec<&Column> = std::iter::once(&self.grid).chain(&self.columns).collect();
        let names: Vec<&str> = all.iter().map(|c| c.name.as_str()).collect();
        let _ = writeln!(s, "{}", names.join(","));
        for i in 0..self.grid.data.len() {
            let cells: Vec<String> = all.iter().map(|c| c.cell(i)).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        Ok(s)
    }

    pub fn to_structured(&self) -> Result<String> {
        self.check()?;
        let mut values = Map::new();
        for c in &self.columns {
            values.insert(c.name.clone(), c.to_json());
        }
        let doc = json!({
            "kind": self.kind,
            "model": self.model,
            "alpha": self.alpha.map(json_num),
            "lambda": self.lambda.map(json_num),
            "config": self.config,
            "tolerances": self.tolerances,
            "summary": self.summary,
            "grid_name": self.grid.name,
            "grid": self.grid.to_json(),
            "values": values,
        });
        let mut s = serde_json::to_string_pretty(&doc).map_err(|e| Error::Io(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Structured => self.to_structured(),
        }
    }

    /// Render and write in one go, so a failed run leaves no partial file.
    pub fn write(&self, path: &Path, format: Format) -> Result<()> {
        let text = self.render(format)?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc() -> Document {
        let mut d = Document::new("kernel-table", Column::numbers("k", vec![0.0, 1.0, 2.0]));
        d.model = json!({"kind": "Sharp", "lambda": 1.0});
        d.lambda = Some(1.0);
        d.config = json!({"tol": 1e-10});
        d.tolerances = json!({"max_error": 3e-16});
        d.columns.push(Column::numbers("B", vec![0.1, 0.05, 0.0]));
        d.columns.push(Column::text("method", vec!["closed-form".into(); 3]));
        d
    }

    #[test]
    fn csv_layout() {
        let s = doc().to_csv().unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert!(lines.iter().take_while(|l| l.starts_with('#')).any(|l| l.contains("tolerances")));
        let body: Vec<&str> = lines.into_iter().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body[0], "k,B,method");
        assert_eq!(body.len(), 4);
        assert!(body[3].starts_with("2e0,0e0,closed-form"));
    }

    #[test]
    fn structured_keys_and_round_trip() {
        let s = doc().to_structured().unwrap();
        let v: Value = serde_json::from_str(&s).unwrap();
        for key in ["model", "alpha", "lambda", "grid", "values", "tolerances"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["values"]["B"][1].as_f64(), Some(0.05));
        assert_eq!("csv".parse::<Format>().unwrap(), Format::Csv);
        assert!("xml".parse::<Format>().is_err());
    }

    #[test]
    fn mismatched_column_rejected() {
        let mut d = doc();
        d.columns.push(Column::numbers("bad", vec![1.0]));
        assert!(d.to_csv().is_err());
    }
}
