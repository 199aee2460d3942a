use driftlab::morrey::lps_decompose;
use serde::{Deserialize, Serialize};

use crate::artifacts::{num, Check, Outcome, Relation, Table};
use crate::config::{positive, require, DriftConfig, GridConfig};
use crate::error::CliResult;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub grid: GridConfig,
    pub drift: DriftConfig,
    /// Critical pair: `d/p0 + 2/q0 = 1`.
    pub p0: f64,
    pub q0: f64,
    /// Threshold factors, in increasing order.
    pub n_hat: Vec<f64>,
    /// Allowed relative gap between the two evaluations of `∫λ²`.
    pub identity_tolerance: f64,
}

impl Params {
    pub fn validate(&self) -> CliResult<()> {
        let d = self.grid.build()?.d() as f64;
        require(self.p0 > d, || {
            format!("p0 = {} must exceed d = {d}", self.p0)
        })?;
        let gap = d / self.p0 + 2.0 / self.q0 - 1.0;
        require(gap.abs() <= 1e-12, || {
            format!(
                "(q0, p0) = ({}, {}) violates d/p0 + 2/q0 = 1 (off by {gap})",
                self.q0, self.p0
            )
        })?;
        require(!self.n_hat.is_empty(), || "n_hat must be nonempty".into())?;
        for &n in &self.n_hat {
            positive("n_hat", n)?;
        }
        require(self.n_hat.windows(2).all(|w| w[1] > w[0]), || {
            "n_hat must be increasing".into()
        })?;
        positive("identity_tolerance", self.identity_tolerance)
    }
}

pub fn run(p: &Params, outcome: &mut Outcome) -> CliResult<()> {
    p.validate()?;
    let g = p.grid.build()?;
    let b = p.drift.build(g)?;
    let mut table = Table::new(
        "decomposition.csv",
        &[
            "n_hat",
            "morrey_certificate",
            "b_square_bracket",
            "lambda_square_integral",
            "lps_integral",
            "identity_relative_error",
            "thresholded_nodes",
            "reconstruction_error",
            "bounded_part_excess",
        ],
    );
    let mut lambda_table = Table::new("thresholds.csv", &["n_hat", "time", "lambda"]);
    let mut certificates = Vec::new();
    for &n_hat in &p.n_hat {
        let dec = lps_decompose(&b, p.p0, p.q0, n_hat)?;
        let rebuilt = dec.b_prime.add(&dec.b_part)?;
        let reconstruction = rebuilt
            .values()
            .iter()
            .zip(b.values())
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        let mag = dec.b_part.magnitude();
        let mut excess = f64::NEG_INFINITY;
        for i in 0..g.n_slices() {
            for &v in mag.slice(i) {
                excess = excess.max(v - dec.lambda[i]);
            }
        }
        table.push(vec![
            num(n_hat),
            num(dec.morrey_certificate),
            num(dec.b_square_bracket),
            num(dec.lambda_square_integral),
            num(dec.lps_integral),
            num(dec.identity_relative_error()),
            dec.thresholded_nodes().to_string(),
            num(reconstruction),
            num(excess),
        ]);
        for (i, l) in dec.lambda.iter().enumerate() {
            lambda_table.push(vec![num(n_hat), num(g.time(i)), num(*l)]);
        }
        outcome.check(Check::at_most(
            format!("N̂ = {n_hat}: max |b′ + 𝓑 - b|"),
            reconstruction,
            0.0,
        ));
        outcome.check(Check::new(
            format!("N̂ = {n_hat}: max over nodes of |𝓑| - λ(t)"),
            excess,
            Relation::Below,
            0.0,
        ));
        outcome.check(Check::at_most(
            format!("N̂ = {n_hat}: [𝓑]² vs ∫λ², relative excess"),
            (dec.b_square_bracket - dec.lambda_square_integral)
                / dec.lambda_square_integral.max(f64::MIN_POSITIVE),
            0.0,
        ));
        outcome.check(Check::at_most(
            format!("N̂ = {n_hat}: ∫λ² vs N̂² ∫ ‖b(t)‖^{{q0}} dt, relative gap"),
            dec.identity_relative_error(),
            p.identity_tolerance,
        ));
        certificates.push(dec.morrey_certificate);
    }
    for (w, n) in certificates.windows(2).zip(p.n_hat.windows(2)) {
        outcome.check(Check::new(
            format!(
                "Morrey certificate of b′ from N̂ = {} to {}: ratio",
                n[0], n[1]
            ),
            w[1] / w[0],
            Relation::Below,
            1.0,
        ));
    }
    outcome.tables.push(table);
    outcome.tables.push(lambda_table);
    Ok(())
}
