//! Structured experiment records shared by every sweep.

use std::fmt::{self, Write as _};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// One CSV cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
    Flag(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => format!("{x:?}"),
            Cell::Flag(b) => b.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Int(i) => Some(i as f64),
            Cell::Num(x) => Some(x),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<i64> for Cell {
    fn from(i: i64) -> Self {
        Cell::Int(i)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Flag(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table { name: name.to_string(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width mismatch in table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(Cell::csv).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }
}

/// How a check compares its value with its threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    AtMost,
    AtLeast,
    /// Boolean outcome; value is 1 or 0.
    Flag,
}

/// A named pass/fail statement derived from recorded numbers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub relation: Relation,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Check {
    /// Passes when `value <= threshold`.
    pub fn at_most(name: &str, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Check {
            name: name.to_string(),
            passed: value <= threshold,
            relation: Relation::AtMost,
            value,
            threshold,
            detail: detail.into(),
        }
    }

    /// Passes when `value >= threshold`.
    pub fn at_least(name: &str, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Check {
            name: name.to_string(),
            passed: value >= threshold,
            relation: Relation::AtLeast,
            value,
            threshold,
            detail: detail.into(),
        }
    }

    pub fn flag(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.to_string(),
            passed,
            relation: Relation::Flag,
            value: if passed { 1.0 } else { 0.0 },
            threshold: 1.0,
            detail: detail.into(),
        }
    }

    /// Signed distance to the threshold in the passing direction; 0 for flags.
    pub fn margin(&self) -> f64 {
        match self.relation {
            Relation::AtMost => self.threshold - self.value,
            Relation::AtLeast => self.value - self.threshold,
            Relation::Flag => 0.0,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.relation {
            Relation::AtMost => write!(f, "{} = {:.3e} <= {:.1e}", self.name, self.value, self.threshold),
            Relation::AtLeast => write!(f, "{} = {:.3e} >= {:.1e}", self.name, self.value, self.threshold),
            Relation::Flag => write!(f, "{} {}", self.name, if self.passed { "holds" } else { "violated" }),
        }
    }
}

/// Machine and timing information. Excluded from the report hash.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub crate_version: String,
    pub os: String,
    pub arch: String,
    pub threads: usize,
    pub wall_clock_seconds: f64,
}

impl Environment {
    pub fn capture(wall_clock_seconds: f64) -> Self {
        Environment {
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            threads: rayon::current_num_threads(),
            wall_clock_seconds,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: String,
    /// Echo of the configuration that produced the report.
    pub config: serde_json::Value,
    pub config_hash: String,
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    /// Errors captured at individual sweep points.
    pub failures: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub environment: Option<Environment>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl ExperimentReport {
    pub fn new(kind: &str, config: serde_json::Value) -> Self {
        let config_hash = sha256_hex(config.to_string().as_bytes());
        ExperimentReport {
            kind: kind.to_string(),
            config,
            config_hash,
            tables: Vec::new(),
            checks: Vec::new(),
            notes: Vec::new(),
            failures: Vec::new(),
            environment: None,
        }
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// True when every check passed and no sweep point failed.
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    /// Pretty JSON without the environment stamp.
    pub fn canonical_json(&self) -> String {
        let mut r = self.clone();
        r.environment = None;
        serde_json::to_string_pretty(&r).expect("report serializes")
    }

    /// SHA-256 of the canonical JSON.
    pub fn report_hash(&self) -> String {
        sha256_hex(self.canonical_json().as_bytes())
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} ({})", self.kind, if self.passed() { "pass" } else { "FAIL" });
        for c in &self.checks {
            let status = if c.passed { "pass" } else { "FAIL" };
            match c.relation {
                Relation::Flag => writeln!(s, "  [{status}] {c}: {}", c.detail),
                _ => writeln!(s, "  [{status}] {c}, margin {:.3e}: {}", c.margin(), c.detail),
            }
            .expect("writing to a String");
        }
        for n in &self.notes {
            let _ = writeln!(s, "  note: {n}");
        }
        for f in &self.failures {
            let _ = writeln!(s, "  failure: {f}");
        }
        s
    }

    /// Writes `tables/<name>.csv` for every table and `summary.txt` under `dir`.
    pub fn emit_tables(&self, dir: &Path) -> Result<()> {
        let tables = dir.join("tables");
        std::fs::create_dir_all(&tables).map_err(|e| Error::io(&tables, e))?;
        for t in &self.tables {
            let p = tables.join(format!("{}.csv", t.name));
            std::fs::write(&p, t.to_csv()).map_err(|e| Error::io(&p, e))?;
        }
        let p = dir.join("summary.txt");
        std::fs::write(&p, self.summary()).map_err(|e| Error::io(&p, e))
    }

    /// Writes `report.json` (with the environment stamp, if any) and the tables.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let p = dir.join("report.json");
        let mut body = serde_json::to_value(self).expect("report serializes");
        body["report_hash"] = serde_json::Value::String(self.report_hash());
        let text = serde_json::to_string_pretty(&body).expect("report serializes");
        std::fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        self.emit_tables(dir)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new("sweep", &["eps", "k", "sigma"]);
        assert_eq!(t.to_csv(), "eps,k,sigma\n");
    }

    #[test]
    fn hash_ignores_environment() {
        let mut r = ExperimentReport::new("spectrum", serde_json::json!({"h": 0.1}));
        let mut t = Table::new("x", &["a", "b"]);
        t.push(vec![1usize.into(), 0.5.into()]);
        r.tables.push(t);
        r.checks.push(Check::at_most("err", 0.01, 0.02, ""));
        let h = r.report_hash();
        r.environment = Some(Environment::capture(1.25));
        assert_eq!(r.report_hash(), h);
        assert!(r.passed());
        r.checks.push(Check::at_least("gap", 1.0, 2.0, ""));
        assert!(!r.passed());
        assert!(r.check("gap").unwrap().margin() < 0.0);
    }

    #[test]
    fn csv_quotes_text() {
        let mut t = Table::new("t", &["s"]);
        t.push(vec!["a,b".into()]);
        assert_eq!(t.to_csv(), "s\n\"a,b\"\n");
    }
}
