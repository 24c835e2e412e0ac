//! Column-oriented result tables and their CSV/JSON encodings.

use std::fmt::Write as _;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Shortest round-trip decimal, switching to exponent form for very
/// large or small magnitudes.
pub fn format_number(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

/// Named numeric columns of equal length plus `key=value` metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesFile {
    pub name: String,
    pub columns: Vec<(String, Vec<f64>)>,
    pub metadata: Vec<(String, String)>,
}

impl SeriesFile {
    pub fn new(name: impl Into<String>) -> Self {
        SeriesFile {
            name: name.into(),
            columns: Vec::new(),
            metadata: Vec::new(),
        }
    }

    pub fn push_column(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        if let Some((first, col)) = self.columns.first() {
            if col.len() != values.len() {
                return Err(Error::input(format!(
                    "column length {} differs from `{first}` ({})",
                    values.len(),
                    col.len()
                )));
            }
        }
        self.columns.push((name.into(), values));
        Ok(())
    }

    pub fn push_meta(&mut self, key: impl Into<String>, value: impl ToString) {
        self.metadata.push((key.into(), value.to_string()));
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, |(_, c)| c.len())
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c.as_slice())
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// `# key=value` lines, a header, then one row per entry. Numbers use
    /// the shortest representation that reads back to the same `f64`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            writeln!(out, "# {k}={v}").unwrap();
        }
        let header: Vec<&str> = self.columns.iter().map(|(n, _)| n.as_str()).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for i in 0..self.rows() {
            let row: Vec<String> = self.columns.iter().map(|(_, c)| format_number(c[i])).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Non-finite values are written as `null`.
    pub fn to_json(&self) -> Result<String> {
        let metadata: Map<String, Value> = self
            .metadata
            .iter()
            .map(|(k, v)| (k.clone(), Value::String(v.clone())))
            .collect();
        let columns: Vec<Value> = self
            .columns
            .iter()
            .map(|(n, c)| json!({ "name": n, "values": c }))
            .collect();
        let doc = json!({ "name": self.name, "metadata": metadata, "columns": columns });
        let mut s = serde_json::to_string_pretty(&doc)?;
        s.push('\n');
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut s = SeriesFile::new("t");
        s.push_meta("seed", 3);
        s.push_column("a", vec![1.0, 0.1]).unwrap();
        s.push_column("b", vec![-2.5, 1e-20]).unwrap();
        assert_eq!(s.to_csv(), "# seed=3\na,b\n1,-2.5\n0.1,1e-20\n");
        assert!(s.push_column("c", vec![1.0]).is_err());
    }

    #[test]
    fn json_keeps_column_order() {
        let mut s = SeriesFile::new("t");
        s.push_column("z", vec![1.0]).unwrap();
        s.push_column("a", vec![f64::NAN]).unwrap();
        let v: Value = serde_json::from_str(&s.to_json().unwrap()).unwrap();
        assert_eq!(v["columns"][0]["name"], "z");
        assert!(v["columns"][1]["values"][0].is_null());
    }
}
