//! Summary and CSV artifacts.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    /// `"max"`: pass when `value ≤ tolerance`; `"min"`: pass when `value ≥ tolerance`.
    pub bound: &'static str,
    pub pass: bool,
}

#[derive(Debug, Default)]
pub struct Table {
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: &str, header: &[&str]) -> Self {
        Table { file: file.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

/// Fixed float format: 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn nums(xs: &[f64]) -> Vec<String> {
    xs.iter().map(|&x| num(x)).collect()
}

/// Column names `x1..xm, y1..ym`.
pub fn coordinate_names(dim: usize) -> Vec<String> {
    let m = dim / 2;
    (1..=m).map(|k| format!("x{k}")).chain((1..=m).map(|k| format!("y{k}"))).collect()
}

#[derive(Debug, Default)]
pub struct Report {
    pub results: Map<String, Value>,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    scale: f64,
}

impl Report {
    pub fn new(scale: f64) -> Self {
        Report { scale, ..Default::default() }
    }

    pub fn result(&mut self, key: &str, v: impl Serialize) {
        self.results.insert(key.into(), serde_json::to_value(v).unwrap_or(Value::Null));
    }

    /// `value ≤ tolerance · scale`.
    pub fn at_most(&mut self, name: &str, value: f64, tolerance: f64) {
        let tolerance = tolerance * self.scale;
        self.checks.push(Check { name: name.into(), value, tolerance, bound: "max", pass: value <= tolerance });
    }

    /// A yes/no condition recorded as a check on `0` or `1`.
    pub fn holds(&mut self, name: &str, ok: bool) {
        self.checks.push(Check { name: name.into(), value: f64::from(u8::from(ok)), tolerance: 1.0, bound: "min", pass: ok });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn summary(&self, verb: &str, config: &impl Serialize) -> Value {
        json!({
            "verb": verb,
            "config": config,
            "tolerance_scale": self.scale,
            "results": self.results,
            "checks": self.checks,
            "artifacts": self.tables.iter().map(|t| t.file.clone()).collect::<Vec<_>>(),
            "pass": self.passed(),
        })
    }

    pub fn write(&self, dir: &Path, summary: &Value) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        for t in &self.tables {
            let mut f = std::io::BufWriter::new(fs::File::create(dir.join(&t.file))?);
            writeln!(f, "{}", t.header.join(","))?;
            for r in &t.rows {
                writeln!(f, "{}", r.join(","))?;
            }
            f.flush()?;
        }
        let mut text = serde_json::to_string_pretty(summary).map_err(std::io::Error::other)?;
        text.push('\n');
        fs::write(dir.join("summary.json"), text)
    }
}
