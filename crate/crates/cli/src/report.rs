//! Report tables, JSON and CSV output.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;

/// One table cell. Non-finite numbers serialize as `null` in JSON and as
/// their Rust spelling in CSV.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
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

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[k]).collect())
    }

    pub fn write_csv(&self, path: &Path) -> io::Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::csv))?;
        }
        w.flush()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub pass: bool,
    /// Human-readable pass criterion.
    pub criterion: String,
    pub table: Table,
    /// Scalar summaries (fitted slopes, the detected eigenvalue, ...).
    pub summary: BTreeMap<String, Cell>,
    /// A second table, written as `<suite>_<name>.csv`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table_extra: Option<(String, Table)>,
    /// Scan plots: stem, `(x, y)` points and marker abscissae.
    #[serde(skip)]
    pub plots: Vec<(String, Vec<(f64, f64)>, Vec<f64>)>,
    /// Decay plot: points, slope and intercept of the log-log fit.
    #[serde(skip)]
    pub decay: Option<(Vec<(f64, f64)>, f64, f64)>,
}

impl SuiteResult {
    pub fn new(name: &str, criterion: impl Into<String>, table: Table) -> Self {
        SuiteResult {
            name: name.to_string(),
            pass: false,
            criterion: criterion.into(),
            table,
            summary: BTreeMap::new(),
            table_extra: None,
            plots: Vec::new(),
            decay: None,
        }
    }

    pub fn note(&mut self, key: &str, v: impl Into<Cell>) {
        self.summary.insert(key.to_string(), v.into());
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeshInfo {
    pub id: String,
    pub h: f64,
    pub n_interior: usize,
    pub n_boundary: usize,
    pub shift: f64,
    /// Printed but not serialized: it differs between a cold and a warm run.
    #[serde(skip)]
    pub from_cache: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub config_hash: String,
    pub seed: u64,
    pub mesh: Vec<MeshInfo>,
    pub suites: Vec<SuiteResult>,
    pub pass: bool,
    /// Wall-clock seconds per stage. The only field that varies between
    /// runs with the same configuration and seed.
    pub timings: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn suite(&self, name: &str) -> Option<&SuiteResult> {
        self.suites.iter().find(|s| s.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON without the `timings` field, the part covered by the
    /// determinism contract.
    pub fn deterministic_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v.as_object_mut().unwrap().remove("timings");
        serde_json::to_string_pretty(&v).unwrap()
    }

    /// Writes `report.json` and one CSV per suite into `dir`.
    pub fn write(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.json"), self.to_json())?;
        for s in &self.suites {
            s.table.write_csv(&dir.join(format!("{}.csv", s.name)))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_json_drops_timings() {
        let mut r = RunReport {
            config_hash: "x".into(),
            seed: 1,
            mesh: vec![],
            suites: vec![],
            pass: true,
            timings: BTreeMap::new(),
        };
        let a = r.deterministic_json();
        r.timings.insert("total".into(), 3.0);
        assert_eq!(a, r.deterministic_json());
        assert!(r.to_json().contains("timings"));
        assert!(!a.contains("timings"));
    }

    #[test]
    fn nonfinite_cells_become_null() {
        let s = serde_json::to_string(&Cell::Num(f64::NAN)).unwrap();
        assert_eq!(s, "null");
    }
}
