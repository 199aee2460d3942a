//! Run outcomes and their on-disk form: CSV tables, `summary.json`, `report.md`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CliResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "<")]
    Below,
    #[serde(rename = ">")]
    Above,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
            Relation::Below => "<",
            Relation::Above => ">",
        }
    }

    fn holds(self, measured: f64, bound: f64) -> bool {
        match self {
            Relation::AtMost => measured <= bound,
            Relation::AtLeast => measured >= bound,
            Relation::Below => measured < bound,
            Relation::Above => measured > bound,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
        }
    }
}

/// One checked inequality: `measured relation bound`. NaN never passes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub relation: Relation,
    pub bound: f64,
    pub status: Status,
}

impl Check {
    pub fn new(name: impl Into<String>, measured: f64, relation: Relation, bound: f64) -> Self {
        let status = if relation.holds(measured, bound) {
            Status::Pass
        } else {
            Status::Fail
        };
        Self {
            name: name.into(),
            measured,
            relation,
            bound,
            status,
        }
    }

    pub fn at_most(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self::new(name, measured, Relation::AtMost, bound)
    }

    pub fn at_least(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self::new(name, measured, Relation::AtLeast, bound)
    }

    /// A yes/no property, recorded as `1 >= 1` or `0 >= 1`.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::at_least(name, if ok { 1.0 } else { 0.0 }, 1.0)
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// A CSV table; cells are already formatted.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File name without directory, e.g. `constants.csv`.
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: &str, header: &[&str]) -> Self {
        Self {
            file: file.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> CliResult<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner()
            .map_err(|e| crate::error::CliError::config(format!("csv: {e}")))
    }
}

/// Shortest round-trip decimal form.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

/// Everything one experiment run produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub experiment: String,
    pub label: Option<String>,
    pub parameters: serde_json::Value,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    pub warnings: Vec<String>,
}

impl Outcome {
    pub fn new(experiment: &str, parameters: serde_json::Value) -> Self {
        Self {
            experiment: experiment.to_string(),
            label: None,
            parameters,
            checks: Vec::new(),
            tables: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: String,
    #[serde(default)]
    pub label: Option<String>,
    pub status: Status,
    pub parameters: serde_json::Value,
    pub checks: Vec<Check>,
    /// CSV files written next to this summary.
    pub artifacts: Vec<String>,
    pub warnings: Vec<String>,
}

pub const SUMMARY_FILE: &str = "summary.json";
pub const REPORT_FILE: &str = "report.md";

pub fn summary_of(outcome: &Outcome) -> Summary {
    Summary {
        experiment: outcome.experiment.clone(),
        label: outcome.label.clone(),
        status: if outcome.passed() {
            Status::Pass
        } else {
            Status::Fail
        },
        parameters: outcome.parameters.clone(),
        checks: outcome.checks.clone(),
        artifacts: outcome.tables.iter().map(|t| t.file.clone()).collect(),
        warnings: outcome.warnings.clone(),
    }
}

pub(crate) fn fmt_value(v: f64) -> String {
    if v == 0.0 || v.is_nan() || v.is_infinite() {
        return format!("{v}");
    }
    let a = v.abs();
    if (1e-3..1e5).contains(&a) {
        format!("{v:.5}")
    } else {
        format!("{v:.4e}")
    }
}

pub fn render_report(outcome: &Outcome) -> String {
    let mut s = String::new();
    let title = match &outcome.label {
        Some(l) => format!("{} ({l})", outcome.experiment),
        None => outcome.experiment.clone(),
    };
    let _ = writeln!(s, "# {title}\n");
    let status = if outcome.passed() { "PASS" } else { "FAIL" };
    let _ = writeln!(s, "Overall: **{status}**\n");
    let _ = writeln!(s, "| check | measured | relation | bound | status |");
    let _ = writeln!(s, "|---|---|---|---|---|");
    for c in &outcome.checks {
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} |",
            c.name,
            fmt_value(c.measured),
            c.relation.symbol(),
            fmt_value(c.bound),
            c.status.as_str()
        );
    }
    if !outcome.warnings.is_empty() {
        let _ = writeln!(s, "\n## Warnings\n");
        for w in &outcome.warnings {
            let _ = writeln!(s, "- {w}");
        }
    }
    if !outcome.tables.is_empty() {
        let _ = writeln!(s, "\n## Tables\n");
        for t in &outcome.tables {
            let _ = writeln!(s, "- `{}` ({} rows)", t.file, t.rows.len());
        }
    }
    let params = serde_json::to_string_pretty(&outcome.parameters).unwrap_or_default();
    let _ = writeln!(s, "\n## Parameters\n\n```json\n{params}\n```");
    s
}

/// Writes the CSV tables, `summary.json` and `report.md` into `dir`.
pub fn write_outcome(outcome: &Outcome, dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    for t in &outcome.tables {
        fs::write(dir.join(&t.file), t.to_csv()?)?;
    }
    let summary = serde_json::to_string_pretty(&summary_of(outcome))?;
    fs::write(dir.join(SUMMARY_FILE), summary + "\n")?;
    fs::write(dir.join(REPORT_FILE), render_report(outcome))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nan_fails_every_relation() {
        for r in [
            Relation::AtMost,
            Relation::AtLeast,
            Relation::Below,
            Relation::Above,
        ] {
            assert_eq!(Check::new("x", f64::NAN, r, 1.0).status, Status::Fail);
        }
        assert!(Check::at_most("x", 1.0, 1.0).passed());
        assert!(!Check::new("x", 1.0, Relation::Below, 1.0).passed());
    }

    #[test]
    fn csv_has_header_row() {
        let mut t = Table::new("a.csv", &["x", "y"]);
        t.push(vec![num(0.1), num(2.0)]);
        let text = String::from_utf8(t.to_csv().unwrap()).unwrap();
        assert_eq!(text, "x,y\n0.1,2.0\n");
    }

    #[test]
    fn summary_round_trips() {
        let mut o = Outcome::new("constants", serde_json::json!({"d": 1}));
        o.check(Check::at_most("gap", 0.01, 0.02));
        let s = summary_of(&o);
        let text = serde_json::to_string(&s).unwrap();
        let back: Summary = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.status, Status::Pass);
    }
}
