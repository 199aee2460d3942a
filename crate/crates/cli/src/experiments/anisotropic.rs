use driftlab::counterexamples::anisotropic_example;
use serde::{Deserialize, Serialize};

use crate::artifacts::{num, Check, Outcome, Table};
use crate::config::{positive, require};
use crate::error::CliResult;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub d: usize,
    pub p: f64,
    pub q: f64,
    /// Cut-off widths around the singular sphere, coarsest first.
    pub h_list: Vec<f64>,
    pub slice_time: f64,
    /// Allowed relative gap between the fitted and expected divergence exponents.
    pub exponent_tolerance: f64,
    /// Allowed relative change of the swapped norm between the two finest cut-offs.
    pub cauchy_tolerance: f64,
}

impl Params {
    pub fn validate(&self) -> CliResult<()> {
        require(self.h_list.len() >= 2, || {
            "h_list needs at least two cut-offs".into()
        })?;
        require(self.h_list.windows(2).all(|w| w[1] < w[0]), || {
            "h_list must be decreasing".into()
        })?;
        positive("exponent_tolerance", self.exponent_tolerance)?;
        positive("cauchy_tolerance", self.cauchy_tolerance)
    }
}

pub fn run(p: &Params, outcome: &mut Outcome) -> CliResult<()> {
    p.validate()?;
    let rep = anisotropic_example(p.d, p.p, p.q, &p.h_list, p.slice_time)?;
    let mut table = Table::new("anisotropic.csv", &["h", "spatial_power", "swapped_norm"]);
    for pt in &rep.points {
        table.push(vec![num(pt.h), num(pt.spatial_power), num(pt.swapped_norm)]);
    }
    outcome.tables.push(table);
    outcome.check(Check::at_most(
        format!(
            "divergence exponent {:.4} vs 2p/d - 1 = {:.4}: relative gap",
            rep.divergence_exponent, rep.expected_exponent
        ),
        (rep.divergence_exponent / rep.expected_exponent - 1.0).abs(),
        p.exponent_tolerance,
    ));
    outcome.check(Check::at_most(
        "space-outer norm: relative change between the two finest cut-offs",
        rep.swapped_change,
        p.cauchy_tolerance,
    ));
    outcome.check(Check::at_most(
        "largest time integral of the q-th power vs 2/(1 - 2q/d)",
        rep.time_integral_max,
        rep.time_integral_bound,
    ));
    Ok(())
}
