use driftlab::fields::Grid;
use driftlab::morrey::lps_decompose;
use driftlab::pde::{clip_drift, solve_backward};
use driftlab::sde::{
    exp_moment_check, feynman_kac, second_moment_check, Estimator, McSettings, StartPoint,
};
use serde::{Deserialize, Serialize};

use crate::artifacts::{num, Check, Outcome, Table};
use crate::config::{positive, require, DriftConfig, GridConfig, SourceConfig};
use crate::error::CliResult;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub grid: GridConfig,
    pub source: SourceConfig,
    pub drift: DriftConfig,
    pub start: Start,
    pub mc: McConfig,
    pub martingale: Option<Martingale>,
    pub feynman_kac: Option<FeynmanKac>,
    pub second_moment: Option<SecondMomentCase>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Start {
    pub t: f64,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub paths: usize,
    pub dt: f64,
    pub seed: u64,
}

/// `E e^φ = 1` for the drift itself, and `E e^{λφ} ≤ e^{λ²[b]²/4}` for each `λ`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Martingale {
    pub lambdas: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeynmanKac {
    /// When present, the drift is replaced by its thresholded part `b′`.
    pub threshold: Option<Threshold>,
    /// Allowed gap beyond `3 SE`, relative to the finite-difference value.
    pub relative_tolerance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Threshold {
    pub p0: f64,
    pub q0: f64,
    pub n_hat: f64,
    /// Fraction of the CFL limit the drift is capped at.
    pub clip_safety: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecondMomentCase {
    pub relative_tolerance: f64,
}

impl Params {
    pub fn validate(&self) -> CliResult<()> {
        let g = self.grid.build()?;
        self.source.validate()?;
        require(self.start.x.len() == g.d(), || {
            format!(
                "start point has {} coordinates in d = {}",
                self.start.x.len(),
                g.d()
            )
        })?;
        require(self.start.t >= 0.0 && self.start.t < g.horizon(), || {
            format!(
                "start time {} must lie in [0, {})",
                self.start.t,
                g.horizon()
            )
        })?;
        start_node(&g, &self.start)?;
        McSettings::new(self.mc.paths, self.mc.dt, self.mc.seed)?;
        require(
            self.martingale.is_some() || self.feynman_kac.is_some() || self.second_moment.is_some(),
            || "mc: no check selected".into(),
        )?;
        if let Some(m) = &self.martingale {
            require(m.lambdas.iter().all(|l| l.is_finite()), || {
                "lambdas must be finite".into()
            })?;
        }
        if let Some(f) = &self.feynman_kac {
            positive("relative_tolerance", f.relative_tolerance)?;
            if let Some(t) = &f.threshold {
                positive("n_hat", t.n_hat)?;
                require(t.clip_safety > 0.0 && t.clip_safety <= 1.0, || {
                    format!("clip_safety = {} must lie in (0, 1]", t.clip_safety)
                })?;
            }
        }
        if let Some(s) = &self.second_moment {
            positive("relative_tolerance", s.relative_tolerance)?;
        }
        Ok(())
    }
}

pub fn run(p: &Params, seed: Option<u64>, outcome: &mut Outcome) -> CliResult<()> {
    p.validate()?;
    let g = p.grid.build()?;
    let f = p.source.build(g)?;
    let b = p.drift.build(g)?;
    let settings = McSettings::new(p.mc.paths, p.mc.dt, seed.unwrap_or(p.mc.seed))?;
    let start = StartPoint::new(p.start.t, &p.start.x);
    let mut table = Table::new(
        "mc.csv",
        &[
            "check",
            "lambda",
            "estimate",
            "se",
            "reference",
            "bound",
            "exit_fraction",
        ],
    );

    if let Some(m) = &p.martingale {
        let unit = exp_moment_check(&b, 1.0, start, &settings)?;
        table.push(vec![
            "martingale".into(),
            num(1.0),
            num(unit.estimate),
            num(unit.se),
            num(1.0),
            num(unit.bound),
            num(unit.exit_fraction),
        ]);
        outcome.check(Check::at_most(
            format!("E e^φ = {:.5} ± {:.2e}: gap to 1", unit.estimate, unit.se),
            (unit.estimate - 1.0).abs(),
            3.0 * unit.se + 1e-12,
        ));
        for &lambda in &m.lambdas {
            let e = exp_moment_check(&b, lambda, start, &settings)?;
            table.push(vec![
                "exp_moment".into(),
                num(lambda),
                num(e.estimate),
                num(e.se),
                String::new(),
                num(e.bound),
                num(e.exit_fraction),
            ]);
            outcome.check(Check::at_most(
                format!("λ = {lambda}: E e^{{λφ}} vs e^{{λ²[b]²/4}} + 3 SE"),
                e.estimate,
                e.bound + 3.0 * e.se,
            ));
        }
    }

    if let Some(fk) = &p.feynman_kac {
        let drift = match &fk.threshold {
            Some(t) => {
                let dec = lps_decompose(&b, t.p0, t.q0, t.n_hat)?;
                let (clipped, report) = clip_drift(&dec.b_prime, t.clip_safety);
                if report.clipped_nodes > 0 {
                    outcome.warnings.push(format!(
                        "thresholded drift capped at {} nodes for stability",
                        report.clipped_nodes
                    ));
                }
                clipped
            }
            None => b.clone(),
        };
        let u = solve_backward(&drift, &f)?;
        let (i, node) = start_node(&g, &p.start)?;
        let fd = u.at(i, node);
        let est = feynman_kac(&drift, &f, start, &settings, Estimator::Drifted)?;
        outcome.warnings.extend(est.warnings.iter().cloned());
        table.push(vec![
            "feynman_kac".into(),
            String::new(),
            num(est.value),
            num(est.se),
            num(fd),
            num(3.0 * est.se + fk.relative_tolerance * fd.abs()),
            num(est.exit_fraction),
        ]);
        outcome.check(Check::at_most(
            format!(
                "u_MC = {:.5} ± {:.2e} vs u_FD = {fd:.5}: gap",
                est.value, est.se
            ),
            (est.value - fd).abs(),
            3.0 * est.se + fk.relative_tolerance * fd.abs(),
        ));
    }

    if let Some(sm) = &p.second_moment {
        let u = solve_backward(&b, &f)?;
        let s = second_moment_check(&b, &f, &u, start, &settings)?;
        let combined = (s.lhs_se * s.lhs_se + s.rhs_se * s.rhs_se).sqrt();
        let bound = 3.0 * combined + sm.relative_tolerance * s.lhs.abs();
        table.push(vec![
            "second_moment".into(),
            String::new(),
            num(s.lhs),
            num(s.lhs_se),
            num(s.rhs),
            num(bound),
            num(s.exit_fraction),
        ]);
        outcome.check(Check::at_most(
            format!("E(∫f)² = {:.5} vs 2E∫fu = {:.5}: gap", s.lhs, s.rhs),
            (s.lhs - s.rhs).abs(),
            bound,
        ));
    }
    outcome.tables.push(table);
    Ok(())
}

/// Time index and node of the start point, which must sit on the grid.
fn start_node(g: &Grid<f64>, start: &Start) -> CliResult<(usize, usize)> {
    let steps = start.t / g.dt();
    let i = steps.round();
    require((steps - i).abs() < 1e-9, || {
        format!("start time {} is not a time node", start.t)
    })?;
    let mut idx = [0usize; 3];
    for (a, &x) in start.x.iter().enumerate() {
        let j = (x + g.half_width()) / g.h();
        let jr = j.round();
        require(
            (j - jr).abs() < 1e-9 && jr >= 0.0 && (jr as usize) < g.axis_len(),
            || format!("start coordinate {x} is not a grid node"),
        )?;
        idx[a] = jr as usize;
    }
    Ok((i as usize, g.ravel(&idx)))
}
