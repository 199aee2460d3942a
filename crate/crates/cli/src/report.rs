//! Aggregation of run directories into one table.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::artifacts::{fmt_value, Summary, Table, SUMMARY_FILE};
use crate::error::CliResult;

pub const AGGREGATE_MD: &str = "aggregate.md";
pub const AGGREGATE_CSV: &str = "aggregate.csv";

pub const MISSING: &str = "MISSING";

/// One row of the aggregate: a check of one run, or a missing artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    /// Run directory relative to the scanned root.
    pub run: String,
    pub experiment: String,
    pub label: String,
    /// Compact JSON of the run's parameters.
    pub parameters: String,
    pub check: String,
    pub measured: Option<f64>,
    pub relation: String,
    pub bound: Option<f64>,
    /// `PASS`, `FAIL` or `MISSING`.
    pub status: String,
}

impl Row {
    fn missing(run: &str, what: String) -> Self {
        Row {
            run: run.to_string(),
            experiment: String::new(),
            label: String::new(),
            parameters: String::new(),
            check: what,
            measured: None,
            relation: String::new(),
            bound: None,
            status: MISSING.into(),
        }
    }

    pub fn flagged(&self) -> bool {
        self.status != "PASS"
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Aggregate {
    pub rows: Vec<Row>,
}

impl Aggregate {
    pub fn passed(&self) -> bool {
        !self.rows.iter().any(Row::flagged)
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(
            AGGREGATE_CSV,
            &[
                "run",
                "experiment",
                "label",
                "parameters",
                "check",
                "measured",
                "relation",
                "bound",
                "status",
            ],
        );
        let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
        for r in &self.rows {
            t.push(vec![
                r.run.clone(),
                r.experiment.clone(),
                r.label.clone(),
                r.parameters.clone(),
                r.check.clone(),
                opt(r.measured),
                r.relation.clone(),
                opt(r.bound),
                r.status.clone(),
            ]);
        }
        t
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::from("# Aggregate report\n\n");
        let flagged = self.rows.iter().filter(|r| r.flagged()).count();
        let _ = writeln!(s, "{} rows, {} flagged\n", self.rows.len(), flagged);
        let _ = writeln!(
            s,
            "| run | experiment | label | check | measured | relation | bound | status |"
        );
        let _ = writeln!(s, "|---|---|---|---|---|---|---|---|");
        let opt = |v: Option<f64>| v.map(fmt_value).unwrap_or_default();
        for r in &self.rows {
            let status = if r.flagged() {
                format!("**{}**", r.status)
            } else {
                r.status.clone()
            };
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} | {} | {} | {} |",
                r.run,
                r.experiment,
                r.label,
                r.check,
                opt(r.measured),
                r.relation,
                opt(r.bound),
                status
            );
        }
        s
    }
}

fn is_aggregate(name: &str) -> bool {
    name == AGGREGATE_MD || name == AGGREGATE_CSV
}

/// Directories under `root` (inclusive) that hold run artifacts, sorted.
fn run_dirs(root: &Path) -> CliResult<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        let mut entries: Vec<PathBuf> = fs::read_dir(&dir)?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()?;
        entries.sort();
        let mut has_artifacts = false;
        for p in &entries {
            if p.is_dir() {
                stack.push(p.clone());
                continue;
            }
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            if is_aggregate(name) {
                continue;
            }
            if name == SUMMARY_FILE
                || name == crate::artifacts::REPORT_FILE
                || name.ends_with(".csv")
            {
                has_artifacts = true;
            }
        }
        if has_artifacts {
            out.push(dir);
        }
    }
    out.sort();
    Ok(out)
}

/// Scans `root` recursively. Each run contributes one row per check, and
/// one `MISSING` row per absent or unreadable artifact.
pub fn aggregate(root: &Path) -> CliResult<Aggregate> {
    if !root.is_dir() {
        return Err(crate::error::CliError::config(format!(
            "{} is not a directory",
            root.display()
        )));
    }
    let mut agg = Aggregate::default();
    for dir in run_dirs(root)? {
        let run = match dir.strip_prefix(root) {
            Ok(p) if p.as_os_str().is_empty() => ".".to_string(),
            Ok(p) => p.display().to_string(),
            Err(_) => dir.display().to_string(),
        };
        let path = dir.join(SUMMARY_FILE);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(_) => {
                agg.rows
                    .push(Row::missing(&run, format!("{SUMMARY_FILE} absent")));
                continue;
            }
        };
        let summary: Summary = match serde_json::from_str(&text) {
            Ok(s) => s,
            Err(e) => {
                agg.rows.push(Row::missing(
                    &run,
                    format!("{SUMMARY_FILE} unreadable: {e}"),
                ));
                continue;
            }
        };
        let parameters = serde_json::to_string(&summary.parameters)?;
        let label = summary.label.clone().unwrap_or_default();
        for c in &summary.checks {
            agg.rows.push(Row {
                run: run.clone(),
                experiment: summary.experiment.clone(),
                label: label.clone(),
                parameters: parameters.clone(),
                check: c.name.clone(),
                measured: Some(c.measured),
                relation: c.relation.symbol().into(),
                bound: Some(c.bound),
                status: c.status.as_str().into(),
            });
        }
        for a in &summary.artifacts {
            if !dir.join(a).is_file() {
                let mut row = Row::missing(&run, format!("artifact {a} absent"));
                row.experiment = summary.experiment.clone();
                row.label = label.clone();
                row.parameters = parameters.clone();
                agg.rows.push(row);
            }
        }
    }
    Ok(agg)
}

/// Writes `aggregate.md` and `aggregate.csv` into `dir`.
pub fn write_aggregate(agg: &Aggregate, dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(AGGREGATE_CSV), agg.to_table().to_csv()?)?;
    fs::write(dir.join(AGGREGATE_MD), agg.to_markdown())?;
    Ok(())
}
