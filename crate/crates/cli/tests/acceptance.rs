//! Acceptance suite. Runs every config under `configs/acceptance` through the
//! library, adds oracle checks computed here, and prints one PASS/FAIL line
//! per criterion. Exits nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use driftlab_cli::artifacts::Outcome;
use driftlab_cli::config::ExperimentConfig;
use driftlab_cli::report::aggregate;
use driftlab_cli::run_experiment;

type Rows = Vec<BTreeMap<String, String>>;

fn config_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/acceptance")
}

fn read_csv(path: &Path) -> Rows {
    let mut r = csv::Reader::from_path(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let header = r.headers().unwrap().clone();
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            header
                .iter()
                .zip(rec.iter())
                .map(|(h, v)| (h.to_string(), v.to_string()))
                .collect()
        })
        .collect()
}

fn val(row: &BTreeMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap_or(f64::NAN)
}

/// Least-squares slope of `y` against `x`.
fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

struct Run {
    name: String,
    dir: PathBuf,
    outcome: Result<Outcome, String>,
    seconds: f64,
}

impl Run {
    fn csv(&self, file: &str) -> Rows {
        read_csv(&self.dir.join(file))
    }
}

fn run_all(root: &Path) -> Vec<Run> {
    let mut paths: Vec<PathBuf> = fs::read_dir(config_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            let dir = root.join(&name);
            let start = Instant::now();
            let outcome = ExperimentConfig::load(p)
                .and_then(|c| run_experiment(&c, &dir, None))
                .map_err(|e| e.to_string());
            Run {
                name,
                dir,
                outcome,
                seconds: start.elapsed().as_secs_f64(),
            }
        })
        .collect()
}

/// Result of one criterion: its own checks plus those of the runs it uses.
struct Verdict {
    notes: Vec<String>,
    failures: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Self {
            notes: Vec::new(),
            failures: Vec::new(),
        }
    }

    fn expect(&mut self, ok: bool, what: String) {
        if ok {
            self.notes.push(what);
        } else {
            self.failures.push(what);
        }
    }

    fn runs<'a>(&mut self, runs: &'a [Run], prefix: &str) -> Vec<&'a Run> {
        let selected: Vec<&Run> = runs.iter().filter(|r| r.name.starts_with(prefix)).collect();
        if selected.is_empty() {
            self.failures.push(format!("no config named {prefix}*"));
        }
        for r in &selected {
            match &r.outcome {
                Ok(o) => {
                    for c in o.checks.iter().filter(|c| !c.passed()) {
                        self.failures.push(format!(
                            "{}: {} ({:?} {} {:?})",
                            r.name,
                            c.name,
                            c.measured,
                            c.relation.symbol(),
                            c.bound
                        ));
                    }
                    self.notes.push(format!(
                        "{} {} checks in {:.0}s",
                        r.name,
                        o.checks.len(),
                        r.seconds
                    ));
                }
                Err(e) => self.failures.push(format!("{}: {e}", r.name)),
            }
        }
        selected.into_iter().filter(|r| r.outcome.is_ok()).collect()
    }
}

fn reproduction(runs: &[Run]) -> Verdict {
    let mut v = Verdict::new();
    for r in v.runs(runs, "01_") {
        for row in r.csv("constants.csv") {
            let d = val(&row, "d");
            let oracle = (4.0 * PI).powf(-d / 2.0);
            let tol = if d < 3.0 { 0.02 } else { 0.05 };
            let gap = (val(&row, "fitted_value").abs() - oracle).abs() / oracle;
            v.expect(
                gap <= tol,
                format!("d = {d}: |c| gap {gap:.2e} to (4π)^(-d/2), tol {tol}"),
            );
        }
    }
    v
}

fn composition(runs: &[Run]) -> Verdict {
    let mut v = Verdict::new();
    // Beta-integral closed form for unit orders in one dimension.
    let unit = (4.0 * PI).sqrt() * PI;
    for r in v.runs(runs, "02_") {
        let rows = r.csv("constants.csv");
        let unit_rows: Vec<_> = rows
            .iter()
            .filter(|row| val(row, "alpha") == 1.0 && val(row, "beta") == 1.0)
            .collect();
        v.expect(!unit_rows.is_empty(), "unit-order row present".into());
        for row in unit_rows {
            let gap = (val(row, "fitted_value") - unit).abs() / unit;
            v.expect(
                gap <= 0.05,
                format!("c(1,1,4) gap {gap:.2e} to sqrt(4π)π = {unit:.4}"),
            );
        }
    }
    v
}

fn martingale(runs: &[Run]) -> Verdict {
    let mut v = Verdict::new();
    let used = v.runs(runs, "03_");
    v.expect(used.len() == 3, format!("{} drifts checked", used.len()));
    for r in used {
        let rows = r.csv("mc.csv");
        let bounds = rows
            .iter()
            .filter(|row| row["check"] == "exp_moment")
            .count();
        v.expect(
            bounds == 3,
            format!("{}: {bounds} exponential-moment rows", r.name),
        );
    }
    v
}

fn feynman_kac(runs: &[Run]) -> Verdict {
    let mut v = Verdict::new();
    let used = v.runs(runs, "04_");
    v.expect(used.len() == 2, format!("{} drifts checked", used.len()));
    for r in used {
        for row in r.csv("mc.csv") {
            let gap = (val(&row, "estimate") - val(&row, "reference")).abs();
            let allowed = 3.0 * val(&row, "se") + 0.05 * val(&row, "reference").abs();
            v.expect(
                gap <= allowed,
                format!("{}: gap {gap:.2e} within {allowed:.2e}", r.name),
            );
        }
    }
    v
}

fn second_moment(runs: &[Run]) -> Verdict {
    let mut v = Verdict::new();
    for r in v.runs(runs, "05_") {
        let rows = r.csv("mc.csv");
        v.expect(
            rows.iter().any(|row| row["check"] == "second_moment"),
            "second-moment row present".into(),
        );
    }
    v
}

fn scaling(runs: &[Run]) -> Verdict {
    let mut v = Verdict::new();
    let cases = [
        ("06_scaling_d1", 1.0, 2.0, 2.0),
        ("06_scaling_d2", 2.0, 4.0, 4.0),
    ];
    for r in v.runs(runs, "06_") {
        let &(_, d, q, p) = cases
            .iter()
            .find(|c| c.0 == r.name)
            .expect("known scaling case");
        let expected = 1.0 - d / (2.0 * p) - 1.0 / q;
        let points = r.csv("scaling.csv");
        let x: Vec<f64> = points.iter().map(|row| val(row, "horizon").ln()).collect();
        let y: Vec<f64> = points.iter().map(|row| val(row, "ratio").ln()).collect();
        let refit = slope(&x, &y);
        let span =
            x.iter().cloned().fold(f64::MIN, f64::max) - x.iter().cloned().fold(f64::MAX, f64::min);
        v.expect(
            span >= 10f64.ln() - 1e-12,
            format!("{}: horizons span {:.1}x", r.name, span.exp()),
        );
        v.expect(
            (refit - expected).abs() <= 0.1,
            format!("{}: refitted slope {refit:.4} vs {expected}", r.name),
        );
    }
    v
}

fn morrey_norm(runs: &[Run]) -> Verdict {
    let mut v = Verdict::new();
    // r (avg over B_r of |x|^{-p})^{1/p} in the plane: (d ∫_0^1 s^{d-1-p} ds)^{1/p},
    // by midpoint sums on a mesh graded towards the origin.
    let (d, p) = (2.0f64, 1.5f64);
    let n = 200_000;
    let integral: f64 = (0..n)
        .map(|k| {
            let a = (k as f64 / n as f64).powi(4);
            let b = ((k + 1) as f64 / n as f64).powi(4);
            (b - a) * (0.5 * (a + b)).powf(d - 1.0 - p)
        })
        .sum();
    let oracle = (d * integral).powf(1.0 / p);
    v.expect(
        (oracle / 4f64.powf(2.0 / 3.0) - 1.0).abs() < 1e-3,
        format!("radial oracle {oracle:.5}"),
    );
    for r in v.runs(runs, "07_") {
        for row in r.csv("morrey_norm.csv") {
            let gap = (val(&row, "value") - oracle).abs() / oracle;
            v.expect(gap <= 0.03, format!("norm {} gap {gap:.2e}", row["value"]));
        }
    }
    v
}

fn decompose(runs: &[Run]) -> Verdict {
    let mut v = Verdict::new();
    for r in v.runs(runs, "08_") {
        let rows = r.csv("decomposition.csv");
        for row in &rows {
            v.expect(
                val(row, "reconstruction_error") == 0.0,
                format!("N̂ = {}: exact reconstruction", row["n_hat"]),
            );
            v.expect(
                val(row, "bounded_part_excess") <= 0.0,
                format!("N̂ = {}: |𝓑| ≤ λ", row["n_hat"]),
            );
        }
        let cert: Vec<f64> = rows
            .iter()
            .map(|row| val(row, "morrey_certificate"))
            .collect();
        v.expect(
            cert.len() >= 2 && cert.windows(2).all(|w| w[1] < w[0]),
            format!("certificates {cert:?} decreasing"),
        );
    }
    v
}

fn picard(runs: &[Run]) -> Verdict {
    let mut v = Verdict::new();
    for r in v.runs(runs, "09_") {
        let rows = r.csv("picard.csv");
        let contracting = rows
            .iter()
            .filter(|row| row["regime"] == "contracting")
            .count();
        let diverging = rows
            .iter()
            .filter(|row| row["regime"] == "diverging")
            .count();
        v.expect(
            contracting > 0 && diverging > 0,
            format!("{contracting} below, {diverging} above threshold"),
        );
    }
    v
}

fn residual(runs: &[Run]) -> Verdict {
    let mut v = Verdict::new();
    for r in v.runs(runs, "10_") {
        let rows = r.csv("residual_order.csv");
        v.expect(rows.len() == 2, format!("{} models", rows.len()));
        for row in rows {
            v.expect(
                val(&row, "order") >= 1.0,
                format!("d = {}: order {}", row["d"], row["order"]),
            );
        }
    }
    v
}

fn blowup(runs: &[Run]) -> Verdict {
    let mut v = Verdict::new();
    for r in v.runs(runs, "11_") {
        let rows = r.csv("blowup.csv");
        let ratios = |role: &str| -> Vec<f64> {
            rows.iter()
                .filter(|row| row["role"] == role)
                .map(|row| val(row, "ratio"))
                .collect()
        };
        let failing = ratios("failing");
        let control = ratios("control");
        let failing_p: Vec<f64> = rows
            .iter()
            .filter(|row| row["role"] == "failing")
            .map(|row| val(row, "p"))
            .collect();
        let alpha: Vec<f64> = rows
            .iter()
            .filter(|row| row["role"] == "failing")
            .map(|row| val(row, "alpha"))
            .collect();
        v.expect(
            failing_p
                .iter()
                .zip(&alpha)
                .all(|(p, a)| (p - 2.0 / (1.0 + a)).abs() < 1e-12),
            "failing rows at p = 2/(1+α)".into(),
        );
        v.expect(
            failing.windows(2).all(|w| w[1] > w[0]),
            "failing ratio increasing".into(),
        );
        let growth = failing.last().unwrap() / failing[0];
        v.expect(growth >= 10.0, format!("failing growth {growth:.2}"));
        let excursion = control.iter().cloned().fold(f64::MIN, f64::max) / control[0];
        v.expect(
            excursion <= 2.0,
            format!("control excursion {excursion:.3}"),
        );
    }
    v
}

fn anisotropic(runs: &[Run]) -> Verdict {
    let mut v = Verdict::new();
    let (d, p) = (3.0, 2.0);
    let expected = 2.0 * p / d - 1.0;
    for r in v.runs(runs, "12_") {
        let rows = r.csv("anisotropic.csv");
        let x: Vec<f64> = rows.iter().map(|row| val(row, "h").ln()).collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|row| val(row, "spatial_power").ln())
            .collect();
        let exponent = -slope(&x, &y);
        let gap = (exponent / expected - 1.0).abs();
        v.expect(
            gap <= 0.2,
            format!("refitted exponent {exponent:.4} vs {expected:.4}"),
        );
        let n = rows.len();
        let (a, b) = (
            val(&rows[n - 2], "swapped_norm"),
            val(&rows[n - 1], "swapped_norm"),
        );
        let change = (b - a).abs() / b.abs();
        v.expect(change <= 0.02, format!("space-outer change {change:.2e}"));
    }
    v
}

fn random_suite(runs: &[Run]) -> Verdict {
    let mut v = Verdict::new();
    for r in v.runs(runs, "13_") {
        let rows = r.csv("random_suite.csv");
        v.expect(rows.len() == 200, format!("{} pairs", rows.len()));
        let worst = rows
            .iter()
            .map(|row| val(row, "holder_excess").max(val(row, "maximal_excess")))
            .fold(f64::MIN, f64::max);
        v.expect(worst <= 1e-9, format!("worst excess {worst:.2e}"));
    }
    v
}

fn bump(runs: &[Run]) -> Verdict {
    let mut v = Verdict::new();
    let ball = 4.0 * PI / 3.0;
    for r in v.runs(runs, "14_") {
        let fitted = r
            .csv("bump_ratios.csv")
            .iter()
            .map(|row| val(row, "ratio"))
            .fold(f64::MIN, f64::max);
        v.expect(
            fitted <= ball * (1.0 + 1e-12),
            format!("fitted constant {fitted:.5} vs |B_1| = {ball:.5}"),
        );
        let tail: Vec<f64> = r
            .csv("bump_tail.csv")
            .iter()
            .map(|row| val(row, "tail_morrey"))
            .collect();
        v.expect(
            tail.windows(2).all(|w| w[1] < w[0]),
            "tail norm decreasing".into(),
        );
    }
    v
}

fn csv_files(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "csv") {
                out.insert(
                    p.strip_prefix(root).unwrap().to_path_buf(),
                    fs::read(&p).unwrap(),
                );
            }
        }
    }
    out
}

fn determinism(first: &Path, runs: &[Run]) -> Verdict {
    let mut v = Verdict::new();
    let second = first.parent().unwrap().join("rerun");
    let again = run_all(&second);
    for r in &again {
        if let Err(e) = &r.outcome {
            v.failures.push(format!("rerun {}: {e}", r.name));
        }
    }
    v.expect(
        again.len() == runs.len(),
        format!("{} configs rerun", again.len()),
    );
    let (a, b) = (csv_files(first), csv_files(&second));
    v.expect(
        a.keys().eq(b.keys()),
        format!("{} CSV files in both runs", a.len()),
    );
    for (path, bytes) in &a {
        if b.get(path) != Some(bytes) {
            v.failures
                .push(format!("{} differs between runs", path.display()));
        }
    }
    v
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().join("suite");
    let start = Instant::now();
    let runs = run_all(&root);

    let criteria: Vec<(&str, Box<dyn Fn() -> Verdict + '_>)> = vec![
        ("reproduction constant", Box::new(|| reproduction(&runs))),
        ("composition constant", Box::new(|| composition(&runs))),
        (
            "exponential martingale and moment bound",
            Box::new(|| martingale(&runs)),
        ),
        (
            "Feynman-Kac vs finite differences",
            Box::new(|| feynman_kac(&runs)),
        ),
        ("second-moment identity", Box::new(|| second_moment(&runs))),
        ("scaling exponent", Box::new(|| scaling(&runs))),
        ("Morrey norm oracle", Box::new(|| morrey_norm(&runs))),
        ("decomposition certificates", Box::new(|| decompose(&runs))),
        (
            "Picard contraction and divergence",
            Box::new(|| picard(&runs)),
        ),
        (
            "counterexample residual order",
            Box::new(|| residual(&runs)),
        ),
        ("blow-up trend", Box::new(|| blowup(&runs))),
        ("anisotropic example", Box::new(|| anisotropic(&runs))),
        (
            "randomized Morrey invariants",
            Box::new(|| random_suite(&runs)),
        ),
        ("bump drift", Box::new(|| bump(&runs))),
        ("determinism", Box::new(|| determinism(&root, &runs))),
    ];

    let agg = aggregate(&root).unwrap();
    let mut labels: Vec<&str> = agg.rows.iter().map(|r| r.label.as_str()).collect();
    labels.dedup();
    println!(
        "aggregate report: {} rows over {} labels",
        agg.rows.len(),
        labels.len()
    );

    let mut failed = 0;
    for (i, (title, check)) in criteria.iter().enumerate() {
        let v = check();
        let id = i + 1;
        if v.failures.is_empty() {
            println!("criterion {id}: PASS  {title} [{}]", v.notes.join("; "));
        } else {
            failed += 1;
            println!("criterion {id}: FAIL  {title}");
            for f in &v.failures {
                println!("    {f}");
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria pass ({:.0}s)",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
