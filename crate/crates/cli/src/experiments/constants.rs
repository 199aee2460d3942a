use driftlab::kernels::{
    composition_constant, composition_oracle, reproduction_constant, reproduction_oracle,
};
use serde::{Deserialize, Serialize};

use crate::artifacts::{num, Check, Outcome, Table};
use crate::config::{positive, require};
use crate::error::CliResult;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub reproduction: Vec<Reproduction>,
    pub composition: Vec<Composition>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reproduction {
    pub d: usize,
    /// Allowed relative gap between `|c(d)|` and `(4π)^{-d/2}`.
    pub tolerance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Composition {
    pub d: usize,
    pub alpha: f64,
    pub beta: f64,
    pub k: f64,
    /// Allowed relative gap to the Beta-function value.
    pub tolerance: f64,
    /// Allowed relative gap between the fits with the orders swapped.
    pub symmetry_tolerance: f64,
}

impl Params {
    pub fn validate(&self) -> CliResult<()> {
        require(
            !self.reproduction.is_empty() || !self.composition.is_empty(),
            || "constants: nothing to fit".into(),
        )?;
        for r in &self.reproduction {
            require((1..=3).contains(&r.d), || {
                format!("dimension {} not in 1..=3", r.d)
            })?;
            positive("reproduction tolerance", r.tolerance)?;
        }
        for c in &self.composition {
            require((1..=3).contains(&c.d), || {
                format!("dimension {} not in 1..=3", c.d)
            })?;
            positive("composition tolerance", c.tolerance)?;
            positive("symmetry tolerance", c.symmetry_tolerance)?;
            positive("k", c.k)?;
        }
        Ok(())
    }
}

const HEADER: [&str; 12] = [
    "kind",
    "d",
    "alpha",
    "beta",
    "k",
    "fitted_value",
    "coarse_value",
    "extrapolated",
    "residual",
    "oracle",
    "relative_error",
    "grid_id",
];

pub fn run(p: &Params, outcome: &mut Outcome) -> CliResult<()> {
    p.validate()?;
    let mut table = Table::new("constants.csv", &HEADER);
    for r in &p.reproduction {
        let fit = reproduction_constant::<f64>(r.d)?;
        let oracle = reproduction_oracle::<f64>(r.d);
        let rel = (fit.value.abs() - oracle).abs() / oracle;
        let grid_id = driftlab::kernels::FitSettings::<f64>::reproduction_default(r.d).grid_id();
        table.push(vec![
            "reproduction".into(),
            r.d.to_string(),
            num(2.0),
            num(0.0),
            num(4.0),
            num(fit.value),
            num(fit.coarse),
            num(fit.extrapolated),
            num(fit.residual),
            num(oracle),
            num(rel),
            grid_id,
        ]);
        outcome.check(Check::at_most(
            format!(
                "|c({})| = {:.5} vs {:.5}: relative gap",
                r.d,
                fit.value.abs(),
                oracle
            ),
            rel,
            r.tolerance,
        ));
    }
    for c in &p.composition {
        let fit = composition_constant(c.alpha, c.beta, c.k, c.d)?;
        let oracle = composition_oracle(c.alpha, c.beta, c.k, c.d);
        let rel = (fit.value - oracle).abs() / oracle;
        let grid_id = driftlab::kernels::FitSettings::<f64>::composition_default(c.d).grid_id();
        table.push(vec![
            "composition".into(),
            c.d.to_string(),
            num(c.alpha),
            num(c.beta),
            num(c.k),
            num(fit.value),
            num(fit.coarse),
            num(fit.extrapolated),
            num(fit.residual),
            num(oracle),
            num(rel),
            grid_id.clone(),
        ]);
        let tag = format!("c({}, {}, {}) in d = {}", c.alpha, c.beta, c.k, c.d);
        outcome.check(Check::at_most(
            format!("{tag} = {:.4} vs {oracle:.4}: relative gap", fit.value),
            rel,
            c.tolerance,
        ));
        let swapped = if c.alpha == c.beta {
            fit
        } else {
            composition_constant(c.beta, c.alpha, c.k, c.d)?
        };
        if c.alpha != c.beta {
            table.push(vec![
                "composition".into(),
                c.d.to_string(),
                num(c.beta),
                num(c.alpha),
                num(c.k),
                num(swapped.value),
                num(swapped.coarse),
                num(swapped.extrapolated),
                num(swapped.residual),
                num(oracle),
                num((swapped.value - oracle).abs() / oracle),
                grid_id,
            ]);
        }
        outcome.check(Check::at_most(
            format!("{tag}: symmetry gap under swapped orders"),
            (fit.value - swapped.value).abs() / fit.value.abs(),
            c.symmetry_tolerance,
        ));
    }
    outcome.tables.push(table);
    Ok(())
}
