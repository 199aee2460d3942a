//! One module per experiment kind. Each parses its own `params` object,
//! validates it, runs, and records checks and tables in an [`Outcome`].

pub mod anisotropic;
pub mod constants;
pub mod counterexample;
pub mod decompose;
pub mod mc;
pub mod morrey;
pub mod scaling;
pub mod solve;

use crate::artifacts::Outcome;
use crate::config::{parse_params, ExperimentConfig, Kind};
use crate::error::CliResult;

/// Runs a config. `seed` overrides the seeds of the randomized experiments.
pub fn run(config: &ExperimentConfig, seed: Option<u64>) -> CliResult<Outcome> {
    let mut outcome = Outcome::new(config.experiment.name(), config.params.clone());
    outcome.label = config.label.clone();
    let v = &config.params;
    match config.experiment {
        Kind::Constants => constants::run(&parse_params(v)?, &mut outcome)?,
        Kind::Morrey => morrey::run(&parse_params(v)?, seed, &mut outcome)?,
        Kind::Decompose => decompose::run(&parse_params(v)?, &mut outcome)?,
        Kind::Solve => solve::run(&parse_params(v)?, &mut outcome)?,
        Kind::Scaling => scaling::run(&parse_params(v)?, &mut outcome)?,
        Kind::Mc => mc::run(&parse_params(v)?, seed, &mut outcome)?,
        Kind::Counterexample => counterexample::run(&parse_params(v)?, &mut outcome)?,
        Kind::Anisotropic => anisotropic::run(&parse_params(v)?, &mut outcome)?,
    }
    Ok(outcome)
}
