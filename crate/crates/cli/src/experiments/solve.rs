use driftlab::pde::{drift_morrey, estimate_report, picard_solve, solve_backward, PicardOptions};
use driftlab::Error;
use serde::{Deserialize, Serialize};

use crate::artifacts::{num, Check, Outcome, Table};
use crate::config::{positive, require, DriftConfig, GridConfig, NormConfig, SourceConfig};
use crate::error::CliResult;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub grid: GridConfig,
    pub source: SourceConfig,
    pub drift: DriftConfig,
    pub norm: NormConfig,
    pub picard: Option<PicardScan>,
}

/// Picard runs with the drift scaled by each amplitude. The regimes are
/// set by calibrated levels of the drift's `(1, d)`-Morrey norm.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardScan {
    pub amplitudes: Vec<f64>,
    pub max_iter: usize,
    pub tol: f64,
    /// Below this norm the iteration must contract by `max_factor` and match the direct solve.
    pub contracting_below: f64,
    /// Above this norm the iteration must report divergence.
    pub diverging_above: f64,
    pub max_factor: f64,
    /// Allowed sup-norm gap to the direct solve, relative to its maximum.
    pub agreement: f64,
}

impl Params {
    pub fn validate(&self) -> CliResult<()> {
        let g = self.grid.build()?;
        self.norm.build_subcritical(g.d())?;
        self.source.validate()?;
        if let Some(s) = &self.picard {
            require(!s.amplitudes.is_empty(), || {
                "picard amplitudes must be nonempty".into()
            })?;
            require(s.max_iter > 0, || "picard max_iter must be positive".into())?;
            positive("picard tol", s.tol)?;
            require(s.contracting_below <= s.diverging_above, || {
                "contracting_below must not exceed diverging_above".into()
            })?;
            positive("max_factor", s.max_factor)?;
            positive("agreement", s.agreement)?;
        }
        Ok(())
    }
}

pub fn run(p: &Params, outcome: &mut Outcome) -> CliResult<()> {
    p.validate()?;
    let g = p.grid.build()?;
    let spec = p.norm.build_subcritical(g.d())?;
    let f = p.source.build(g)?;
    let b = p.drift.build(g)?;
    let report = estimate_report(&b, &f, &spec)?;
    outcome.warnings.extend(report.warnings.iter().cloned());
    let mut t = Table::new("solve.csv", &["sup_u", "f_norm", "ratio", "grad_ratio"]);
    t.push(vec![
        num(report.sup_u),
        num(report.f_norm),
        num(report.ratio),
        num(report.grad_ratio),
    ]);
    outcome.tables.push(t);
    let mut profile = Table::new("solution_profile.csv", &["time", "u_center"]);
    for i in 0..g.n_slices() {
        profile.push(vec![num(g.time(i)), num(report.u.at(i, g.center()))]);
    }
    outcome.tables.push(profile);
    let sup_f = f.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    outcome.check(Check::at_most(
        "maximum principle: sup |u| vs T sup |f|",
        report.sup_u,
        g.horizon() * sup_f * (1.0 + 1e-12),
    ));
    if let Some(s) = &p.picard {
        picard_scan(p, s, outcome)?;
    }
    Ok(())
}

fn picard_scan(p: &Params, s: &PicardScan, outcome: &mut Outcome) -> CliResult<()> {
    let g = p.grid.build()?;
    let spec = p.norm.build_subcritical(g.d())?;
    let f = p.source.build(g)?;
    let shape = p.drift.build(g)?;
    let options = PicardOptions {
        max_iter: s.max_iter,
        tol: s.tol,
        constant: None,
    };
    let mut table = Table::new(
        "picard.csv",
        &[
            "amplitude",
            "drift_morrey",
            "regime",
            "outcome",
            "contraction_factor",
            "iterations",
            "relative_gap",
        ],
    );
    for &a in &s.amplitudes {
        let b = shape.scale(a);
        let m = drift_morrey(&b)?;
        let regime = if m < s.contracting_below {
            "contracting"
        } else if m > s.diverging_above {
            "diverging"
        } else {
            "between"
        };
        let tag = format!("amplitude {a} (drift norm {m:.4})");
        match picard_solve(&b, &f, &spec, &options) {
            Ok(r) => {
                let factor = r.contraction_factor.unwrap_or(0.0);
                let direct = solve_backward(&b, &f)?;
                let scale = direct.values().iter().fold(0.0f64, |x, v| x.max(v.abs()));
                let gap = direct
                    .sub(&r.u)?
                    .values()
                    .iter()
                    .fold(0.0f64, |x, v| x.max(v.abs()))
                    / scale.max(f64::MIN_POSITIVE);
                table.push(vec![
                    num(a),
                    num(m),
                    regime.into(),
                    "converged".into(),
                    num(factor),
                    r.iterations.unwrap_or(0).to_string(),
                    num(gap),
                ]);
                outcome
                    .warnings
                    .extend(r.warnings.iter().map(|w| format!("{tag}: {w}")));
                match regime {
                    "contracting" => {
                        outcome.check(Check::at_most(
                            format!("{tag}: contraction factor"),
                            factor,
                            s.max_factor,
                        ));
                        outcome.check(Check::at_most(
                            format!("{tag}: sup gap to direct solve"),
                            gap,
                            s.agreement,
                        ));
                    }
                    "diverging" => {
                        outcome.check(Check::holds(format!("{tag}: divergence reported"), false))
                    }
                    _ => {}
                }
            }
            Err(Error::Divergence {
                factor, iterations, ..
            }) => {
                table.push(vec![
                    num(a),
                    num(m),
                    regime.into(),
                    "diverged".into(),
                    num(factor),
                    iterations.to_string(),
                    String::new(),
                ]);
                match regime {
                    "contracting" => {
                        outcome.check(Check::holds(format!("{tag}: iteration converges"), false))
                    }
                    "diverging" => {
                        outcome.check(Check::holds(format!("{tag}: divergence reported"), true))
                    }
                    _ => {}
                }
            }
            Err(e) => return Err(e.into()),
        }
    }
    outcome.tables.push(table);
    Ok(())
}
