//! Text formats: full-precision numbers, curve CSV/JSON, and small result tables.

use std::io::{Read, Write};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::exact::{CurveEntry, MajorityCurve};

pub const CURVE_HEADER: [&str; 4] = ["t", "exact", "asymptotic", "scaled_residual"];

/// 17 significant digits, enough to reproduce every `f64` exactly.
pub fn fmt_num(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v == 0.0 {
        return "0.0000000000000000".into();
    }
    let a = v.abs();
    if (1e-4..1e15).contains(&a) {
        let exponent = a.log10().floor() as i32;
        let decimals = (16 - exponent).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{v:.16e}")
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::Parse(e.to_string())
}

pub fn write_curve_csv<W: Write>(curve: &MajorityCurve, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(CURVE_HEADER)?;
    for e in &curve.entries {
        wtr.write_record([
            e.t.to_string(),
            fmt_num(e.exact),
            fmt_num(e.asymptotic),
            fmt_num(e.scaled_residual),
        ])?;
    }
    wtr.flush().map_err(io_err)
}

pub fn read_curve_csv<R: Read>(reader: R) -> Result<MajorityCurve> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header != CURVE_HEADER {
        return Err(Error::Parse(format!(
            "curve CSV header must be {}, got {}",
            CURVE_HEADER.join(","),
            header.join(",")
        )));
    }
    let mut entries = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let line = i + 2;
        let num = |j: usize| -> Result<f64> {
            record
                .get(j)
                .and_then(|c| c.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Parse(format!("bad number in column {} on line {line}", CURVE_HEADER[j])))
        };
        let t = record
            .get(0)
            .and_then(|c| c.trim().parse::<u64>().ok())
            .ok_or_else(|| Error::Parse(format!("bad t on line {line}")))?;
        entries.push(CurveEntry {
            t,
            exact: num(1)?,
            asymptotic: num(2)?,
            scaled_residual: num(3)?,
        });
    }
    Ok(MajorityCurve { entries })
}

pub fn curve_to_json(curve: &MajorityCurve) -> Result<String> {
    Ok(serde_json::to_string_pretty(curve)?)
}

pub fn curve_from_json(text: &str) -> Result<MajorityCurve> {
    Ok(serde_json::from_str(text)?)
}

/// One value in a [`Table`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(u64),
    Num(f64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => fmt_num(*v),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
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
        Cell::Num(v)
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

/// Column-named rows, written as CSV, JSON records, or aligned text.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(&self.columns)?;
        for row in &self.rows {
            wtr.write_record(row.iter().map(Cell::render))?;
        }
        wtr.flush().map_err(io_err)
    }

    pub fn to_json(&self) -> Result<String> {
        let records: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .columns
                    .iter()
                    .cloned()
                    .zip(row.iter().map(|c| serde_json::to_value(c).unwrap_or(Value::Null)))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        Ok(serde_json::to_string_pretty(&records)?)
    }

    pub fn write_text<W: Write>(&self, mut writer: W) -> Result<()> {
        let rendered: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(Cell::render).collect()).collect();
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|j| {
                rendered
                    .iter()
                    .map(|r| r[j].len())
                    .chain(std::iter::once(self.columns[j].len()))
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: &[String]| -> String {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect::<Vec<_>>()
                .join("  ")
        };
        writeln!(writer, "{}", line(&self.columns)).map_err(io_err)?;
        for r in &rendered {
            writeln!(writer, "{}", line(r)).map_err(io_err)?;
        }
        Ok(())
    }
}
