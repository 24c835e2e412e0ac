//! Labelled datasets and their text formats.
//!
//! Two layouts are understood:
//!
//! * native CSV: a header `x1,...,xd,y` followed by one row per point with
//!   labels `-1`/`1`;
//! * ESL mixture layout: whitespace-separated coordinates followed by a
//!   `0`/`1` label column, mapped to `-1`/`+1`.
//!
//! Blank lines and lines starting with `#` are skipped in both. Values are
//! written with Rust's shortest round-trip float formatting, so saving and
//! loading reproduces every bit.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Generated { seed: u64 },
    LoadedFile(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn new(x: Matrix, y: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::input(format!(
                "{} input rows but {} labels",
                x.rows(),
                y.len()
            )));
        }
        if x.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::input("dataset contains non-finite values"));
        }
        if let Some(bad) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
            return Err(Error::input(format!("label must be -1 or +1, got {bad}")));
        }
        Ok(Dataset { x, y, provenance })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.cols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    Csv,
    /// Optional declared dimension; otherwise taken from the first row.
    Esl { dim: Option<usize> },
}

impl FromStr for DatasetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(DatasetFormat::Csv),
            "esl" => Ok(DatasetFormat::Esl { dim: None }),
            other => Err(Error::input(format!("unknown dataset format `{other}`"))),
        }
    }
}

pub fn load_dataset(path: impl AsRef<Path>, format: DatasetFormat) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mut ds = parse_dataset(&text, format)?;
    ds.provenance = Provenance::LoadedFile(path.to_path_buf());
    Ok(ds)
}

/// Writes the native CSV layout.
pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_csv(dataset))?;
    Ok(())
}

pub fn format_csv(dataset: &Dataset) -> String {
    let d = dataset.dim();
    let mut out = String::new();
    let header: Vec<String> = (1..=d).map(|j| format!("x{j}")).chain(["y".into()]).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for (row, &label) in dataset.x.iter_rows().zip(&dataset.y) {
        for v in row {
            write!(out, "{v},").unwrap();
        }
        writeln!(out, "{}", if label > 0.0 { "1" } else { "-1" }).unwrap();
    }
    out
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_number(field: &str, line: usize) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| parse_error(line, format!("non-numeric field `{}`", field.trim())))?;
    if !v.is_finite() {
        return Err(parse_error(line, format!("non-finite value `{}`", field.trim())));
    }
    Ok(v)
}

pub fn parse_dataset(text: &str, format: DatasetFormat) -> Result<Dataset> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let mut dim = match format {
        DatasetFormat::Csv => {
            let (lineno, header) = lines
                .next()
                .ok_or_else(|| parse_error(1, "empty file: missing header"))?;
            let names: Vec<&str> = header.split(',').map(str::trim).collect();
            let d = names.len().saturating_sub(1);
            let expected = (1..=d).map(|j| format!("x{j}"));
            let ok = d >= 1
                && names.last() == Some(&"y")
                && names[..d].iter().zip(expected).all(|(a, b)| *a == b);
            if !ok {
                return Err(parse_error(
                    lineno,
                    format!("expected header `x1,...,xd,y`, got `{header}`"),
                ));
            }
            Some(d)
        }
        DatasetFormat::Esl { dim } => dim,
    };

    let mut data = Vec::new();
    let mut y = Vec::new();
    let mut last_line = 0;
    for (lineno, line) in lines {
        last_line = lineno;
        let fields: Vec<&str> = match format {
            DatasetFormat::Csv => line.split(',').collect(),
            DatasetFormat::Esl { .. } => line.split_whitespace().collect(),
        };
        let d = *dim.get_or_insert(fields.len().saturating_sub(1));
        if d == 0 || fields.len() != d + 1 {
            return Err(parse_error(
                lineno,
                format!("expected {} fields, found {}", d + 1, fields.len()),
            ));
        }
        for f in &fields[..d] {
            data.push(parse_number(f, lineno)?);
        }
        let raw = parse_number(fields[d], lineno)?;
        let label = match (format, raw) {
            (DatasetFormat::Csv, v) if v == 1.0 || v == -1.0 => v,
            (DatasetFormat::Esl { .. }, 0.0) => -1.0,
            (DatasetFormat::Esl { .. }, 1.0) => 1.0,
            (DatasetFormat::Csv, v) => {
                return Err(parse_error(lineno, format!("label must be -1 or 1, got {v}")))
            }
            (DatasetFormat::Esl { .. }, v) => {
                return Err(parse_error(lineno, format!("label must be 0 or 1, got {v}")))
            }
        };
        y.push(label);
    }
    if y.is_empty() {
        return Err(parse_error(last_line.max(1), "no data rows"));
    }
    let d = dim.unwrap_or(0);
    Dataset::new(
        Matrix::from_vec(y.len(), d, data)?,
        y,
        Provenance::Generated { seed: 0 },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_in_memory() {
        let x = Matrix::from_rows(&[[0.1, -2.5e-17], [1.0 / 3.0, 7.0]]).unwrap();
        let ds = Dataset::new(x, vec![1.0, -1.0], Provenance::Generated { seed: 0 }).unwrap();
        let back = parse_dataset(&format_csv(&ds), DatasetFormat::Csv).unwrap();
        assert_eq!(back.x, ds.x);
        assert_eq!(back.y, ds.y);
    }

    #[test]
    fn esl_labels_are_mapped() {
        let text = "# x1 x2 class\n2.5 0.1 0\n-0.3 1.7 1\n";
        let ds = parse_dataset(text, DatasetFormat::Esl { dim: None }).unwrap();
        assert_eq!(ds.y, vec![-1.0, 1.0]);
        assert_eq!(ds.dim(), 2);
    }

    #[test]
    fn wrong_field_count_reports_line() {
        let text = "0.0 1.0 0\n0.0 1.0 2.0 1\n";
        let err = parse_dataset(text, DatasetFormat::Esl { dim: Some(2) }).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");

        let text = "x1,x2,y\n0.0,1.0,1\n0.5,0.5,0.5,1\n";
        let err = parse_dataset(text, DatasetFormat::Csv).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn bad_values() {
        let err = parse_dataset("x1,y\nabc,1\n", DatasetFormat::Csv).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse_dataset("x1,y\n0.5,0\n", DatasetFormat::Csv).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse_dataset("1.0 2\n", DatasetFormat::Esl { dim: None }).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        assert!(matches!(
            parse_dataset("", DatasetFormat::Csv),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_dataset("x1,y\n", DatasetFormat::Csv),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_dataset("a,b\n1,1\n", DatasetFormat::Csv),
            Err(Error::Parse { line: 1, .. })
        ));
    }
}
