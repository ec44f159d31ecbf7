use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use cone_mt_core::cone_domain::fmt_f64;
use serde::{Deserialize, Serialize};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::{CliError, Result};

/// One asserted property with the computed value and its admissible range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    /// Which property family the check belongs to within its experiment.
    pub group: String,
    pub name: String,
    pub value: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub passed: bool,
}

impl Check {
    fn new(group: &str, name: impl Into<String>, value: f64, lower: Option<f64>, upper: Option<f64>) -> Self {
        let passed = value.is_finite() && lower.is_none_or(|l| value >= l) && upper.is_none_or(|u| value <= u);
        Self {
            group: group.into(),
            name: name.into(),
            value,
            lower,
            upper,
            passed,
        }
    }

    pub fn at_most(group: &str, name: impl Into<String>, value: f64, upper: f64) -> Self {
        Self::new(group, name, value, None, Some(upper))
    }

    pub fn at_least(group: &str, name: impl Into<String>, value: f64, lower: f64) -> Self {
        Self::new(group, name, value, Some(lower), None)
    }

    pub fn within(group: &str, name: impl Into<String>, value: f64, lower: f64, upper: f64) -> Self {
        Self::new(group, name, value, Some(lower), Some(upper))
    }

    /// A yes/no property, recorded as 1 (holds) or 0.
    pub fn holds(group: &str, name: impl Into<String>, ok: bool) -> Self {
        Self::new(group, name, if ok { 1.0 } else { 0.0 }, Some(1.0), None)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => fmt_f64(*v),
            Cell::Text(s) => s.clone(),
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

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    /// Comma-separated, header row, LF line ends, 17 significant digits.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(path)
            .map_err(|e| csv_error(path, e))?;
        w.write_record(&self.header).map_err(|e| csv_error(path, e))?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| CliError::io(path, e))
    }
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    CliError::File {
        path: path.into(),
        message: e.to_string(),
    }
}

/// A plot of columns of one table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Figure {
    pub name: String,
    pub table: String,
    pub x: String,
    pub y: Vec<String>,
    pub log_x: bool,
    pub log_y: bool,
}

impl Figure {
    pub fn new(name: &str, table: &str, x: &str, y: &[&str]) -> Self {
        Self {
            name: name.into(),
            table: table.into(),
            x: x.into(),
            y: y.iter().map(|s| s.to_string()).collect(),
            log_x: false,
            log_y: false,
        }
    }

    pub fn log_x(mut self) -> Self {
        self.log_x = true;
        self
    }

    pub fn log_y(mut self) -> Self {
        self.log_y = true;
        self
    }
}

/// Everything an experiment computes.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub values: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    pub figures: Vec<Figure>,
    /// Wall-clock time per check group; reported, never written to files.
    pub timings: Vec<(String, Duration)>,
}

impl Outcome {
    pub fn value(&mut self, key: impl Into<String>, v: f64) {
        self.values.insert(key.into(), v);
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn group_passed(&self, group: &str) -> bool {
        let mut any = false;
        for c in self.checks.iter().filter(|c| c.group == group) {
            any = true;
            if !c.passed {
                return false;
            }
        }
        any
    }

    pub fn group_time(&self, group: &str) -> Option<Duration> {
        self.timings.iter().find(|(g, _)| g == group).map(|(_, d)| *d)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// The JSON summary of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub experiment: Experiment,
    pub config: ExperimentConfig,
    pub values: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub tables: Vec<String>,
    pub figures: Vec<Figure>,
    pub passed: bool,
}

impl Summary {
    pub fn new(config: &ExperimentConfig, outcome: &Outcome) -> Self {
        Self {
            experiment: config.experiment,
            config: config.clone(),
            values: outcome.values.clone(),
            checks: outcome.checks.clone(),
            tables: outcome.tables.iter().map(Table::file_name).collect(),
            figures: outcome.figures.clone(),
            passed: outcome.passed(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::File {
            path: path.into(),
            message: format!("not a run summary: {e}"),
        })
    }
}

pub const SUMMARY_FILE: &str = "summary.json";

/// Writes the tables and `summary.json` into `dir`; returns the summary path.
pub fn write_outputs(dir: &Path, summary: &Summary, outcome: &Outcome) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    for t in &outcome.tables {
        t.write(&dir.join(t.file_name()))?;
    }
    let path = dir.join(SUMMARY_FILE);
    write_json(&path, summary)?;
    Ok(path)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::File {
        path: path.into(),
        message: e.to_string(),
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_bounds() {
        assert!(Check::at_most("g", "a", 1.0, 1.0).passed);
        assert!(!Check::at_most("g", "a", 1.1, 1.0).passed);
        assert!(!Check::at_least("g", "a", f64::NAN, 0.0).passed);
        assert!(Check::within("g", "a", 0.5, 0.0, 1.0).passed);
        assert!(!Check::holds("g", "a", false).passed);
    }

    #[test]
    fn csv_dialect() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new("t", &["k", "x", "name"]);
        t.push(vec![4usize.into(), 0.1.into(), "a".into()]);
        let p = dir.path().join(t.file_name());
        t.write(&p).unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        assert_eq!(text, "k,x,name\n4,1.0000000000000001e-1,a\n");
    }

    #[test]
    fn empty_group_does_not_pass() {
        let mut o = Outcome::default();
        assert!(!o.group_passed("x"));
        o.check(Check::holds("x", "ok", true));
        assert!(o.group_passed("x"));
    }
}
