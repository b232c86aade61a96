//! Reports: one row per check, rendered as JSON, CSV or an aligned table.
//!
//! Numbers are printed with shortest round-trip formatting in every layout.
//! Reports carry no timestamps, so identical inputs give identical bytes.

use crate::error::CliResult;
use circle_tci::ExtReal;
use clap::ValueEnum;
use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

/// A reported quantity.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Num(x) if x.is_finite() => s.serialize_f64(*x),
            // JSON has no infinities.
            Value::Num(x) => s.serialize_str(&x.to_string()),
            Value::Int(x) => s.serialize_u64(*x),
            Value::Bool(x) => s.serialize_bool(*x),
            Value::Text(x) => s.serialize_str(x),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(x) => write!(f, "{x:?}"),
            Value::Int(x) => write!(f, "{x}"),
            Value::Bool(x) => write!(f, "{x}"),
            Value::Text(x) => f.write_str(x),
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Num(x)
    }
}

impl From<usize> for Value {
    fn from(x: usize) -> Self {
        Value::Int(x as u64)
    }
}

impl From<u64> for Value {
    fn from(x: u64) -> Self {
        Value::Int(x)
    }
}

impl From<bool> for Value {
    fn from(x: bool) -> Self {
        Value::Bool(x)
    }
}

impl From<String> for Value {
    fn from(x: String) -> Self {
        Value::Text(x)
    }
}

impl From<&str> for Value {
    fn from(x: &str) -> Self {
        Value::Text(x.to_string())
    }
}

impl From<ExtReal> for Value {
    fn from(x: ExtReal) -> Self {
        Value::Num(x.to_f64())
    }
}

/// One named pass/fail line with its supporting numbers, in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub values: Vec<(String, Value)>,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool) -> Self {
        Check {
            name: name.into(),
            passed,
            values: Vec::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.values.push((key.to_string(), value.into()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.values.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }
}

impl Serialize for Check {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.values.len() + 2))?;
        map.serialize_entry("check", &self.name)?;
        map.serialize_entry("passed", &self.passed)?;
        for (k, v) in &self.values {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

/// Package version plus `git describe` of the tree it was built from.
pub fn build_id() -> String {
    format!(
        "{}+{}",
        env!("CARGO_PKG_VERSION"),
        env!("CIRCLE_TCI_GIT_DESCRIBE")
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub build: String,
    pub command: String,
    pub seeds: Vec<u64>,
    /// Default tolerance of the command; rows may carry their own.
    pub tolerance: f64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(command: &str, seeds: Vec<u64>, tolerance: f64, checks: Vec<Check>) -> Self {
        Report {
            build: build_id(),
            command: command.to_string(),
            seeds,
            tolerance,
            passed: checks.iter().all(|c| c.passed),
            checks,
        }
    }

    /// 0 when every check passed, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        u8::from(!self.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Value columns in first-seen order across all checks.
    fn columns(&self) -> Vec<&str> {
        let mut cols: Vec<&str> = Vec::new();
        for c in &self.checks {
            for (k, _) in &c.values {
                if !cols.contains(&k.as_str()) {
                    cols.push(k);
                }
            }
        }
        cols
    }

    fn seeds_text(&self) -> String {
        self.seeds
            .iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn render(&self, format: Format) -> CliResult<String> {
        match format {
            Format::Json => Ok(serde_json::to_string_pretty(self)? + "\n"),
            Format::Csv => self.to_csv(),
            Format::Table => Ok(self.to_table()),
        }
    }

    /// Check rows with the build, seeds and tolerance repeated as trailing
    /// columns.
    fn to_csv(&self) -> CliResult<String> {
        let cols = self.columns();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["check", "passed"];
        header.extend(&cols);
        header.extend(["build", "seeds", "tolerance"]);
        w.write_record(&header)?;
        let (seeds, tol) = (self.seeds_text(), format!("{:?}", self.tolerance));
        for c in &self.checks {
            let mut row = vec![c.name.clone(), c.passed.to_string()];
            row.extend(
                cols.iter()
                    .map(|k| c.get(k).map(Value::to_string).unwrap_or_default()),
            );
            row.extend([self.build.clone(), seeds.clone(), tol.clone()]);
            w.write_record(&row)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    fn to_table(&self) -> String {
        let cols = self.columns();
        let mut rows: Vec<Vec<String>> = vec![{
            let mut h = vec!["check".to_string(), "status".to_string()];
            h.extend(cols.iter().map(|c| c.to_string()));
            h
        }];
        for c in &self.checks {
            let mut r = vec![
                c.name.clone(),
                if c.passed { "pass" } else { "FAIL" }.to_string(),
            ];
            r.extend(
                cols.iter()
                    .map(|k| c.get(k).map(Value::to_string).unwrap_or_else(|| "-".into())),
            );
            rows.push(r);
        }
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|i| rows.iter().map(|r| r[i].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = format!(
            "{}  build {}  seeds {}  tolerance {:?}\n",
            self.command,
            self.build,
            self.seeds_text(),
            self.tolerance
        );
        for r in &rows {
            let line: Vec<String> = r
                .iter()
                .zip(&widths)
                .map(|(cell, w)| format!("{cell}{}", " ".repeat(w - cell.chars().count())))
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        let passed = self.checks.iter().filter(|c| c.passed).count();
        out.push_str(&format!(
            "{}: {passed} of {} checks passed\n",
            if self.passed { "PASS" } else { "FAIL" },
            self.checks.len()
        ));
        out
    }
}
