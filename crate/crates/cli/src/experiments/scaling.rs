use driftlab::pde::{scaling_fit, ScalingSetup};
use serde::{Deserialize, Serialize};

use crate::artifacts::{num, Check, Outcome, Table};
use crate::config::{positive, require, NormConfig, SourceConfig};
use crate::error::CliResult;

type NoDrift = fn(f64, &[f64], &mut [f64]);

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub d: usize,
    pub half_width: f64,
    pub n_x: usize,
    pub n_t: usize,
    pub norm: NormConfig,
    /// Horizons `T` of the rescaled family.
    pub horizons: Vec<f64>,
    /// Profile at `T = 1`.
    pub source: SourceConfig,
    /// Allowed gap between the fitted slope and `1 - d/(2p) - 1/q`.
    pub tolerance: f64,
}

impl Params {
    pub fn validate(&self) -> CliResult<()> {
        require((1..=3).contains(&self.d), || {
            format!("dimension {} not in 1..=3", self.d)
        })?;
        positive("half_width", self.half_width)?;
        self.norm.build_subcritical(self.d)?;
        self.source.validate()?;
        require(
            self.horizons.iter().all(|&t| t > 0.0 && t.is_finite()),
            || "horizons must be positive".into(),
        )?;
        positive("tolerance", self.tolerance)
    }
}

pub fn run(p: &Params, outcome: &mut Outcome) -> CliResult<()> {
    p.validate()?;
    let setup = ScalingSetup {
        d: p.d,
        half_width: p.half_width,
        n_x: p.n_x,
        n_t: p.n_t,
        spec: p.norm.build_subcritical(p.d)?,
        horizons: p.horizons.clone(),
    };
    let source = p.source.clone();
    let fit = scaling_fit(&setup, move |t, x| source.eval(t, x), None::<NoDrift>)?;
    let mut t = Table::new("scaling.csv", &["horizon", "sup_u", "f_norm", "ratio"]);
    for pt in &fit.points {
        t.push(vec![
            num(pt.horizon),
            num(pt.sup_u),
            num(pt.f_norm),
            num(pt.ratio),
        ]);
    }
    outcome.tables.push(t);
    for (h, why) in &fit.skipped {
        outcome.warnings.push(format!("horizon {h} skipped: {why}"));
    }
    let mut fit_table = Table::new("scaling_fit.csv", &["slope", "expected"]);
    fit_table.push(vec![num(fit.slope), num(fit.expected)]);
    outcome.tables.push(fit_table);
    outcome.check(Check::at_most(
        format!("fitted slope {:.4} vs {:.4}: gap", fit.slope, fit.expected),
        (fit.slope - fit.expected).abs(),
        p.tolerance,
    ));
    Ok(())
}
