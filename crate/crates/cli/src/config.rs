//! Experiment configs (JSON) and the field selectors they share.
//!
//! Every parameter is explicit: there are no defaults for exponents, grid
//! sizes or tolerances, and unknown keys are rejected.

use std::path::{Path, PathBuf};

use driftlab::fields::{Grid, MixedNormSpec, NormOrder, ScalarField, VectorField};
use driftlab::morrey::BumpDrift;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Constants,
    Morrey,
    Decompose,
    Solve,
    Scaling,
    Mc,
    Counterexample,
    Anisotropic,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Constants => "constants",
            Kind::Morrey => "morrey",
            Kind::Decompose => "decompose",
            Kind::Solve => "solve",
            Kind::Scaling => "scaling",
            Kind::Mc => "mc",
            Kind::Counterexample => "counterexample",
            Kind::Anisotropic => "anisotropic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Kind,
    /// Free-form tag carried into the summary and the aggregated report.
    #[serde(default)]
    pub label: Option<String>,
    /// Used when `--out` is absent.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub params: serde_json::Value,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::config(e.to_string()))
    }
}

/// Parses the `params` object of a config into the experiment's own type.
pub fn parse_params<P: serde::de::DeserializeOwned>(value: &serde_json::Value) -> CliResult<P> {
    P::deserialize(value).map_err(|e| CliError::config(format!("params: {e}")))
}

pub fn require(ok: bool, msg: impl FnOnce() -> String) -> CliResult<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(msg()))
    }
}

pub fn positive(name: &str, v: f64) -> CliResult<()> {
    require(v > 0.0 && v.is_finite(), || {
        format!("{name} = {v} must be positive and finite")
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub d: usize,
    pub half_width: f64,
    pub n_x: usize,
    pub horizon: f64,
    pub n_t: usize,
}

impl GridConfig {
    pub fn build(&self) -> CliResult<Grid<f64>> {
        Ok(Grid::new(
            self.d,
            self.half_width,
            self.n_x,
            self.horizon,
            self.n_t,
        )?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderConfig {
    TimeOuter,
    SpaceOuter,
}

/// Mixed norm: `q` is the time exponent, `p` the space exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormConfig {
    pub q: f64,
    pub p: f64,
    pub order: OrderConfig,
}

impl NormConfig {
    pub fn build(&self) -> CliResult<MixedNormSpec<f64>> {
        require(self.q > 1.0, || {
            format!("time exponent q = {} must exceed 1", self.q)
        })?;
        require(self.p > 1.0, || {
            format!("space exponent p = {} must exceed 1", self.p)
        })?;
        let order = match self.order {
            OrderConfig::TimeOuter => NormOrder::TimeOuter,
            OrderConfig::SpaceOuter => NormOrder::SpaceOuter,
        };
        Ok(MixedNormSpec::new(self.q, self.p, order)?)
    }

    /// Also requires `d/p + 2/q < 2`.
    pub fn build_subcritical(&self, d: usize) -> CliResult<MixedNormSpec<f64>> {
        let spec = self.build()?;
        let sum = d as f64 / self.p + 2.0 / self.q;
        require(sum < 2.0, || {
            format!(
                "exponents (q, p) = ({}, {}) violate d/p + 2/q < 2 in d = {d} (sum {sum})",
                self.q, self.p
            )
        })?;
        Ok(spec)
    }
}

/// Drift selectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftConfig {
    Zero,
    /// Every component equal to `value`.
    Constant {
        value: f64,
    },
    /// Component `a`: `amplitude · sin(2x_a) (1 + t) e^{-|x|²/4}`.
    Smooth {
        amplitude: f64,
    },
    /// `amplitude · (x/|x|) · min(|x|^{-exponent}, cap)` with `|x|` floored at one cell.
    RadialPower {
        amplitude: f64,
        exponent: f64,
        cap: Option<f64>,
    },
    /// Ball-indicator drift along the first axis, sampled where resolvable.
    Bump {
        p0: f64,
        n_max: usize,
    },
}

impl DriftConfig {
    pub fn build(&self, g: Grid<f64>) -> CliResult<VectorField<f64>> {
        let h = g.h();
        Ok(match *self {
            DriftConfig::Zero => VectorField::zeros(g),
            DriftConfig::Constant { value } => {
                VectorField::from_fn(g, move |_, _, out| out.iter_mut().for_each(|v| *v = value))
            }
            DriftConfig::Smooth { amplitude } => VectorField::from_fn(g, move |t, x, out| {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                let env = amplitude * (1.0 + t) * (-r2 / 4.0).exp();
                for (o, xa) in out.iter_mut().zip(x) {
                    *o = env * (2.0 * xa).sin();
                }
            }),
            DriftConfig::RadialPower {
                amplitude,
                exponent,
                cap,
            } => {
                require(exponent >= 0.0, || {
                    format!("radial power exponent {exponent} must be nonnegative")
                })?;
                if let Some(c) = cap {
                    positive("radial power cap", c)?;
                }
                VectorField::from_fn(g, move |_, x, out| {
                    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                    let mut m = r.max(h).powf(-exponent);
                    if let Some(c) = cap {
                        m = m.min(c);
                    }
                    for (o, xa) in out.iter_mut().zip(x) {
                        *o = if r > 0.0 { amplitude * m * xa / r } else { 0.0 };
                    }
                })
            }
            DriftConfig::Bump { p0, n_max } => {
                let bump = BumpDrift::new(g.d(), p0, n_max)?;
                let (mag, _) = bump.realize(&g)?;
                let zero = ScalarField::zeros(g);
                let mut comps = vec![mag];
                comps.extend((1..g.d()).map(|_| zero.clone()));
                VectorField::from_components(&comps)?
            }
        })
    }
}

/// Source selectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceConfig {
    Zero,
    /// `amplitude · exp(-(t - center_time)²/time_width² - |x|²/width²)`.
    Gaussian {
        amplitude: f64,
        center_time: f64,
        time_width: f64,
        width: f64,
    },
}

impl SourceConfig {
    pub fn validate(&self) -> CliResult<()> {
        if let SourceConfig::Gaussian {
            time_width, width, ..
        } = *self
        {
            positive("source time width", time_width)?;
            positive("source width", width)?;
        }
        Ok(())
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        match *self {
            SourceConfig::Zero => 0.0,
            SourceConfig::Gaussian {
                amplitude,
                center_time,
                time_width,
                width,
            } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                let s = (t - center_time) / time_width;
                amplitude * (-s * s - r2 / (width * width)).exp()
            }
        }
    }

    pub fn build(&self, g: Grid<f64>) -> CliResult<ScalarField<f64>> {
        self.validate()?;
        Ok(ScalarField::from_fn(g, |t, x| self.eval(t, x)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = r#"{"experiment": "constants", "params": {}, "colour": 1}"#;
        assert!(ExperimentConfig::parse(bad).is_err());
        let v = serde_json::json!({"q": 2.0, "p": 2.0, "order": "time_outer", "r": 1});
        assert!(parse_params::<NormConfig>(&v).is_err());
        let v = serde_json::json!({"kind": "constant", "value": 1.0, "extra": 0});
        assert!(parse_params::<DriftConfig>(&v).is_err());
    }

    #[test]
    fn exponents_have_no_defaults() {
        let v = serde_json::json!({"q": 2.0, "order": "time_outer"});
        assert!(parse_params::<NormConfig>(&v).is_err());
    }

    #[test]
    fn small_time_exponent_is_named() {
        let n = NormConfig {
            q: 0.5,
            p: 2.0,
            order: OrderConfig::TimeOuter,
        };
        let msg = n.build().unwrap_err().to_string();
        assert!(msg.contains("q = 0.5"), "{msg}");
    }

    #[test]
    fn radial_power_points_along_the_radius() {
        let g = Grid::new(2, 1.0, 16, 1.0, 8).unwrap();
        let d = DriftConfig::RadialPower {
            amplitude: -1.0,
            exponent: 1.0,
            cap: None,
        };
        let b = d.build(g).unwrap();
        let s = g.ravel(&[12, 8]);
        let x = g.position(s);
        let v = b.at(0, s);
        assert!((v[0] + 1.0 / x[0]).abs() < 1e-12 && v[1].abs() < 1e-15);
    }
}
