//! Invariant verdicts, tables and their on-disk form.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Invariant {
    pub name: String,
    pub pass: bool,
    pub detail: String,
    /// Named numeric diagnostics.
    pub values: Vec<(String, f64)>,
}

impl Invariant {
    pub fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), pass, detail: detail.into(), values: Vec::new() }
    }

    pub fn fail(name: &str, detail: impl Into<String>) -> Self {
        Self::new(name, false, detail)
    }

    pub fn with(mut self, key: &str, v: f64) -> Self {
        self.values.push((key.into(), v));
        self
    }
}

/// Rows of mixed cells, written as CSV or as a JSON array of objects.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone)]
pub enum Cell {
    Num(f64),
    Int(usize),
    Bool(bool),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
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
        Cell::Text(v.into())
    }
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Num(v) => v.to_string(),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            // non-finite values have no JSON number form
            Cell::Num(v) if !v.is_finite() => serde_json::Value::String(v.to_string()),
            Cell::Num(v) => serde_json::json!(v),
            Cell::Int(v) => serde_json::json!(v),
            Cell::Bool(v) => serde_json::json!(v),
            Cell::Text(s) => serde_json::json!(s),
        }
    }
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, w: W) -> anyhow::Result<()> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        out.write_record(&self.header)?;
        for r in &self.rows {
            out.write_record(r.iter().map(Cell::text))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let obj: serde_json::Map<_, _> =
                    self.header.iter().zip(r).map(|(k, c)| (k.to_string(), c.json())).collect();
                serde_json::Value::Object(obj)
            })
            .collect();
        serde_json::Value::Array(rows)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Everything a command produced.
#[derive(Debug, Default)]
pub struct Report {
    pub invariants: Vec<Invariant>,
    pub table: Table,
    /// Extra summary fields (measured quantities that are not asserted).
    pub summary: serde_json::Map<String, serde_json::Value>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.invariants.iter().all(|i| i.pass)
    }

    pub fn note(&mut self, key: &str, v: impl Serialize) {
        self.summary.insert(key.into(), serde_json::to_value(v).expect("serializable"));
    }

    /// Writes `<command>.csv|json` and `<command>-summary.json`; returns the paths.
    pub fn write(&self, dir: &Path, command: &str, format: Format) -> anyhow::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let table = match format {
            Format::Csv => {
                let p = dir.join(format!("{command}.csv"));
                self.table.write_csv(fs::File::create(&p)?)?;
                p
            }
            Format::Json => {
                let p = dir.join(format!("{command}.json"));
                fs::write(&p, serde_json::to_string_pretty(&self.table.to_json())? + "\n")?;
                p
            }
        };
        let summary = serde_json::json!({
            "command": command,
            "status": if self.passed() { "pass" } else { "fail" },
            "invariants": self.invariants.iter().map(|i| serde_json::json!({
                "name": i.name,
                "pass": i.pass,
                "detail": i.detail,
                "values": i.values.iter().map(|(k, v)| (k.clone(), Cell::Num(*v).json())).collect::<serde_json::Map<_, _>>(),
            })).collect::<Vec<_>>(),
            "measurements": self.summary,
        });
        let s = dir.join(format!("{command}-summary.json"));
        fs::write(&s, serde_json::to_string_pretty(&summary)? + "\n")?;
        Ok(vec![table, s])
    }
}
