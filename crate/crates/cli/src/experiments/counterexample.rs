use driftlab::counterexamples::{
    appropriate_q, blowup_scan, failing_margin_power, residual_order, BlowupScan, BlowupSettings,
    RadialModel, RadialQuadrature, RadialSource, ResidualProbes,
};
use serde::{Deserialize, Serialize};

use crate::artifacts::{num, Check, Outcome, Table};
use crate::config::{positive, require};
use crate::error::CliResult;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub residual: Option<ResidualCase>,
    pub blowup: Option<BlowupCase>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub d: usize,
    pub theta: f64,
}

/// Source `(1 + time_slope·t) exp(-1/(1 - z²))`, `z = (|x| - center)/width`,
/// vanishing for `|z| ≥ 1`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialBump {
    pub center: f64,
    pub width: f64,
    pub time_slope: f64,
}

impl RadialBump {
    fn eval(&self, t: f64, r: f64) -> f64 {
        let z = (r - self.center) / self.width;
        if z.abs() >= 1.0 {
            0.0
        } else {
            (1.0 + self.time_slope * t) * (-1.0 / (1.0 - z * z)).exp()
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualCase {
    pub models: Vec<ModelConfig>,
    pub horizon: f64,
    pub source: RadialBump,
    pub probes: ProbesConfig,
    /// Difference steps, largest first.
    pub steps: Vec<f64>,
    pub quadrature: QuadratureConfig,
    pub min_order: f64,
}

/// Probe times and radii of the residual check.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbesConfig {
    pub times: Vec<f64>,
    pub radii: Vec<f64>,
}

/// Kronrod panels in `√s` and `r`, the `r` window in units of `√s`, and the
/// relative tolerance of the angular integral.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    pub time_panels: usize,
    pub space_panels: usize,
    pub window: f64,
    pub angular_tol: f64,
}

impl QuadratureConfig {
    fn build(&self) -> RadialQuadrature<f64> {
        RadialQuadrature {
            time_panels: self.time_panels,
            space_panels: self.space_panels,
            window: self.window,
            angular_tol: self.angular_tol,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlowupCase {
    pub n_list: Vec<usize>,
    pub amplitude: f64,
    pub failing: FailingCase,
    pub control: ControlCase,
}

/// Scan at `p = d/(α+1)`; the margin schedule is chosen so the ratio grows like `n^rate`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FailingCase {
    pub model: ModelConfig,
    pub rate: f64,
    /// Required `last / first` ratio.
    pub min_growth: f64,
}

/// Scan at an exponent with `p > d/(α+1)`, using the failing case's margin schedule.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlCase {
    pub model: ModelConfig,
    pub p: f64,
    /// Allowed `max / first` ratio.
    pub max_excursion: f64,
}

impl Params {
    pub fn validate(&self) -> CliResult<()> {
        require(self.residual.is_some() || self.blowup.is_some(), || {
            "counterexample: no case selected".into()
        })?;
        if let Some(r) = &self.residual {
            require(!r.models.is_empty(), || {
                "residual models must be nonempty".into()
            })?;
            for m in &r.models {
                RadialModel::new(m.d, m.theta)?;
            }
            positive("horizon", r.horizon)?;
            positive("source width", r.source.width)?;
            require(r.source.center > r.source.width, || {
                "the radial source must vanish near the origin (center > width)".into()
            })?;
            require(r.steps.len() >= 2, || {
                "need at least two difference steps".into()
            })?;
            for &h in &r.steps {
                positive("difference step", h)?;
            }
            require(
                r.quadrature.time_panels > 0 && r.quadrature.space_panels > 0,
                || "quadrature panels must be positive".into(),
            )?;
            positive("quadrature window", r.quadrature.window)?;
            positive("angular tolerance", r.quadrature.angular_tol)?;
        }
        if let Some(b) = &self.blowup {
            require(
                b.n_list.len() >= 2 && b.n_list.iter().all(|&n| n > 0),
                || "n_list needs at least two positive indices".into(),
            )?;
            require(b.n_list.windows(2).all(|w| w[1] > w[0]), || {
                "n_list must be increasing".into()
            })?;
            positive("amplitude", b.amplitude)?;
            let m = RadialModel::new(b.failing.model.d, b.failing.model.theta)?;
            appropriate_q(m.d, m.d as f64 / (m.alpha + 1.0))?;
            positive("rate", b.failing.rate)?;
            let c = RadialModel::new(b.control.model.d, b.control.model.theta)?;
            require(b.control.p > c.d as f64 / (c.alpha + 1.0), || {
                format!(
                    "control exponent p = {} must exceed d/(α+1) = {}",
                    b.control.p,
                    c.d as f64 / (c.alpha + 1.0)
                )
            })?;
            appropriate_q(c.d, b.control.p)?;
        }
        Ok(())
    }
}

pub fn run(p: &Params, outcome: &mut Outcome) -> CliResult<()> {
    p.validate()?;
    if let Some(r) = &p.residual {
        residual(r, outcome)?;
    }
    if let Some(b) = &p.blowup {
        blowup(b, outcome)?;
    }
    Ok(())
}

fn residual(r: &ResidualCase, outcome: &mut Outcome) -> CliResult<()> {
    let bump = r.source;
    let profile = move |t: f64, x: f64| bump.eval(t, x);
    let source = RadialSource {
        profile: &profile,
        support: (bump.center - bump.width, bump.center + bump.width),
    };
    let probes = ResidualProbes {
        times: r.probes.times.clone(),
        radii: r.probes.radii.clone(),
    };
    let quad = r.quadrature.build();
    let mut table = Table::new(
        "residual.csv",
        &["d", "theta", "step", "residual", "probed", "skipped"],
    );
    let mut fits = Table::new("residual_order.csv", &["d", "theta", "order"]);
    for m in &r.models {
        let model = RadialModel::new(m.d, m.theta)?;
        let fit = residual_order(&model, &source, r.horizon, &probes, &r.steps, &quad)?;
        for rep in &fit.reports {
            table.push(vec![
                m.d.to_string(),
                num(m.theta),
                num(rep.step),
                num(rep.residual),
                rep.probed.to_string(),
                rep.skipped.to_string(),
            ]);
        }
        fits.push(vec![m.d.to_string(), num(m.theta), num(fit.order)]);
        outcome.check(Check::at_least(
            format!(
                "(d, θ) = ({}, {}): residual convergence order",
                m.d, m.theta
            ),
            fit.order,
            r.min_order,
        ));
    }
    outcome.tables.push(table);
    outcome.tables.push(fits);
    Ok(())
}

fn scan_rows(table: &mut Table, role: &str, scan: &BlowupScan<f64>) {
    for pt in &scan.points {
        table.push(vec![
            role.into(),
            scan.d.to_string(),
            num(scan.alpha),
            num(scan.p),
            num(scan.q),
            pt.n.to_string(),
            num(pt.margin),
            num(pt.gamma),
            num(pt.u_origin),
            num(pt.g_norm),
            num(pt.ratio),
        ]);
    }
}

fn blowup(b: &BlowupCase, outcome: &mut Outcome) -> CliResult<()> {
    let plane = RadialModel::new(b.failing.model.d, b.failing.model.theta)?;
    let p = plane.d as f64 / (plane.alpha + 1.0);
    let q = appropriate_q(plane.d, p)?;
    let settings = BlowupSettings {
        margin_power: failing_margin_power(&plane, q, b.failing.rate),
        amplitude: b.amplitude,
    };
    let failing = blowup_scan(&plane, q, p, &b.n_list, &settings)?;
    let control_model = RadialModel::new(b.control.model.d, b.control.model.theta)?;
    let qc = appropriate_q(control_model.d, b.control.p)?;
    let control = blowup_scan(&control_model, qc, b.control.p, &b.n_list, &settings)?;
    let mut table = Table::new(
        "blowup.csv",
        &[
            "role", "d", "alpha", "p", "q", "n", "margin", "gamma", "u_origin", "g_norm", "ratio",
        ],
    );
    scan_rows(&mut table, "failing", &failing);
    scan_rows(&mut table, "control", &control);
    outcome.tables.push(table);
    outcome.check(Check::holds(
        format!("failing exponent p = {p:.5}, q = {q:.3}: ratio strictly increasing in n"),
        failing.strictly_increasing,
    ));
    outcome.check(Check::at_least(
        "failing exponent: last/first ratio",
        failing.growth,
        b.failing.min_growth,
    ));
    outcome.check(Check::at_most(
        format!(
            "control d = {}, p = {}: max/first ratio",
            control.d, control.p
        ),
        control.excursion,
        b.control.max_excursion,
    ));
    Ok(())
}
