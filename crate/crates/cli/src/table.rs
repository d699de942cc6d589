//! Row tables rendered either as CSV or as JSON records.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde_json::{Map, Value};

use crate::config::Format;
use crate::CliError;

/// Written in place of a value that does not exist, such as an infinite decay
/// constant.
pub const MISSING: &str = "NA";

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Num(f64),
    Opt(Option<f64>),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Self::Int(v) => v.to_string(),
            Self::Num(v) => sig12(*v),
            Self::Opt(Some(v)) => sig12(*v),
            Self::Opt(None) => MISSING.to_string(),
            Self::Bool(v) => v.to_string(),
            Self::Text(v) => v.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Self::Int(v) => Value::from(*v),
            Self::Num(v) | Self::Opt(Some(v)) => Value::from(*v),
            Self::Opt(None) => Value::Null,
            Self::Bool(v) => Value::from(*v),
            Self::Text(v) => Value::from(v.as_str()),
        }
    }
}

/// Decimal rendering with 12 significant digits; scientific notation outside
/// `[1e-5, 1e15)`.
pub fn sig12(x: f64) -> String {
    if !x.is_finite() {
        return MISSING.to_string();
    }
    if x == 0.0 {
        return "0.00000000000".to_string();
    }
    let sci = format!("{x:.11e}");
    let rounded: f64 = sci.parse().expect("formatted float parses");
    let exp = rounded.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        let prec = (11 - exp).max(0) as usize;
        format!("{rounded:.prec$}")
    } else {
        sci
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.into_inner().map_err(|e| e.into_error().into())
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> =
                        self.columns.iter().zip(row).map(|(c, v)| (c.to_string(), v.json())).collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }

    /// Column index by name.
    pub fn col(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }
}

/// Write `table` (or `json`, when given and the format is JSON) to `path`.
pub fn write_output(path: &Path, format: Format, table: &Table, json: Option<&Value>) -> Result<(), CliError> {
    let err = |msg: String| CliError::Output { path: path.to_path_buf(), msg };
    let bytes = match format {
        Format::Csv => table.to_csv().map_err(|e| err(e.to_string()))?,
        Format::Json => {
            let value = json.cloned().unwrap_or_else(|| table.to_json());
            let mut b = serde_json::to_vec_pretty(&value).map_err(|e| err(e.to_string()))?;
            b.push(b'\n');
            b
        }
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| err(e.to_string()))?;
    }
    let mut f = File::create(path).map_err(|e| err(e.to_string()))?;
    f.write_all(&bytes).map_err(|e| err(e.to_string()))
}
