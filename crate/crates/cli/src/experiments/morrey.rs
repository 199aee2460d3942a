use driftlab::fields::ScalarField;
use driftlab::morrey::{
    holder_domination_check, maximal_domination_excess, morrey_norm_detailed, tail_morrey,
    BumpDrift, MorreyParams,
};
use driftlab::special::unit_ball_volume;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifacts::{num, Check, Outcome, Table};
use crate::config::{positive, require, GridConfig};
use crate::error::CliResult;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub norm: Option<NormCase>,
    pub random_suite: Option<RandomSuite>,
    pub bump: Option<BumpCase>,
}

/// Morrey norm of `|x|^{-exponent}`, held at its value on the sphere of
/// `core_cells` cells inside that sphere, against an expected value.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormCase {
    pub grid: GridConfig,
    pub exponent: f64,
    pub core_cells: f64,
    pub alpha: f64,
    pub p0: f64,
    pub expected: f64,
    pub tolerance: f64,
}

/// Random nonnegative field pairs for the Hölder-domination and
/// maximal-function invariants.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSuite {
    pub grid: GridConfig,
    pub pairs: usize,
    pub seed: u64,
    /// Node values are uniform on `[0, max_value)`.
    pub max_value: f64,
    /// `p₀` is uniform on this range, `α` on `alpha_range` capped at `d/p₀`.
    pub p0_range: [f64; 2],
    pub alpha_range: [f64; 2],
    pub tolerance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpCase {
    pub d: usize,
    pub p0: f64,
    pub n_max: usize,
    /// Exponent above `p0` at which the partial sums must keep growing.
    pub above: f64,
    /// Allowed relative growth of the partial sums at `p0` over the last decade of indices.
    pub convergence_tolerance: f64,
    /// Required growth at `above` over the same decade.
    pub min_growth_above: f64,
    /// Bumps `1..=ratio_bumps` are probed with balls of several radii and offsets.
    pub ratio_bumps: usize,
    pub tail: TailCase,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailCase {
    pub n_max: usize,
    pub alpha: f64,
    pub p0: f64,
    pub starts: Vec<usize>,
}

impl Params {
    pub fn validate(&self) -> CliResult<()> {
        require(
            self.norm.is_some() || self.random_suite.is_some() || self.bump.is_some(),
            || "morrey: no case selected".into(),
        )?;
        if let Some(n) = &self.norm {
            n.grid.build()?;
            positive("core_cells", n.core_cells)?;
            positive("tolerance", n.tolerance)?;
            MorreyParams::<f64>::new(n.alpha, n.p0, vec![1.0])?;
        }
        if let Some(r) = &self.random_suite {
            r.grid.build()?;
            require(r.pairs > 0, || {
                "random suite needs at least one pair".into()
            })?;
            positive("max_value", r.max_value)?;
            require(r.p0_range[0] > 1.0 && r.p0_range[0] < r.p0_range[1], || {
                format!("p0 range {:?} must be increasing and above 1", r.p0_range)
            })?;
            require(
                r.alpha_range[0] > 0.0 && r.alpha_range[0] < r.alpha_range[1],
                || {
                    format!(
                        "alpha range {:?} must be increasing and positive",
                        r.alpha_range
                    )
                },
            )?;
            require(r.tolerance >= 0.0, || {
                "tolerance must be nonnegative".into()
            })?;
        }
        if let Some(b) = &self.bump {
            require(b.d >= 2, || {
                format!("the bump case needs d >= 2, got {}", b.d)
            })?;
            require(b.above > b.p0, || {
                format!("above = {} must exceed p0 = {}", b.above, b.p0)
            })?;
            require(b.n_max >= 100, || {
                format!("n_max = {} must be at least 100", b.n_max)
            })?;
            require(b.ratio_bumps >= 1 && b.ratio_bumps <= b.n_max, || {
                "ratio_bumps out of range".into()
            })?;
            require(!b.tail.starts.is_empty(), || {
                "tail starts must be nonempty".into()
            })?;
            positive("convergence_tolerance", b.convergence_tolerance)?;
            BumpDrift::<f64>::new(b.d, b.p0, 3)?;
        }
        Ok(())
    }
}

pub fn run(p: &Params, seed: Option<u64>, outcome: &mut Outcome) -> CliResult<()> {
    p.validate()?;
    if let Some(n) = &p.norm {
        norm_case(n, outcome)?;
    }
    if let Some(r) = &p.random_suite {
        random_suite(r, seed.unwrap_or(r.seed), outcome)?;
    }
    if let Some(b) = &p.bump {
        bump_case(b, outcome)?;
    }
    Ok(())
}

fn norm_case(n: &NormCase, outcome: &mut Outcome) -> CliResult<()> {
    let g = n.grid.build()?;
    let core = n.core_cells * g.h();
    let f = ScalarField::from_fn(g, |_, x| {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        r.max(core).powf(-n.exponent)
    });
    let params = MorreyParams::dyadic(n.alpha, n.p0, &g)?;
    let m = morrey_norm_detailed(&f, &params)?;
    let rel = (m.value - n.expected).abs() / n.expected.abs();
    let mut t = Table::new(
        "morrey_norm.csv",
        &[
            "n_x",
            "alpha",
            "p0",
            "value",
            "radius",
            "time_index",
            "center",
            "expected",
            "relative_error",
        ],
    );
    t.push(vec![
        g.n_x().to_string(),
        num(n.alpha),
        num(n.p0),
        num(m.value),
        num(m.radius),
        m.time_index.to_string(),
        m.center.to_string(),
        num(n.expected),
        num(rel),
    ]);
    outcome.tables.push(t);
    outcome.check(Check::at_most(
        format!(
            "({}, {})-Morrey norm {:.5} vs {:.5}: relative gap",
            n.alpha, n.p0, m.value, n.expected
        ),
        rel,
        n.tolerance,
    ));
    Ok(())
}

struct Pair {
    b: ScalarField<f64>,
    f: ScalarField<f64>,
    alpha: f64,
    p0: f64,
}

fn random_suite(r: &RandomSuite, seed: u64, outcome: &mut Outcome) -> CliResult<()> {
    let g = r.grid.build()?;
    let d = g.d() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(r.pairs);
    for _ in 0..r.pairs {
        let mut field = || {
            let v: Vec<f64> = (0..g.len())
                .map(|_| rng.random_range(0.0..r.max_value))
                .collect();
            ScalarField::from_values(g, v)
        };
        let (b, f) = (field()?, field()?);
        let p0 = rng.random_range(r.p0_range[0]..r.p0_range[1]).min(d);
        let alpha = rng
            .random_range(r.alpha_range[0]..r.alpha_range[1])
            .min(d / p0);
        pairs.push(Pair { b, f, alpha, p0 });
    }
    let radii = MorreyParams::dyadic(1.0, 2.0, &g)?.radii().to_vec();
    let rows = pairs
        .par_iter()
        .map(|pair| -> driftlab::Result<(f64, f64)> {
            let holder = holder_domination_check(&pair.b, &pair.f, pair.alpha, pair.p0)?;
            let maximal = maximal_domination_excess(&pair.f, pair.alpha, &radii)?;
            Ok((holder, maximal))
        })
        .collect::<driftlab::Result<Vec<_>>>()?;
    let mut t = Table::new(
        "random_suite.csv",
        &["pair", "alpha", "p0", "holder_excess", "maximal_excess"],
    );
    for (k, (pair, (h, m))) in pairs.iter().zip(&rows).enumerate() {
        t.push(vec![
            k.to_string(),
            num(pair.alpha),
            num(pair.p0),
            num(*h),
            num(*m),
        ]);
    }
    outcome.tables.push(t);
    let worst_holder = rows.iter().fold(f64::NEG_INFINITY, |a, r| a.max(r.0));
    let worst_maximal = rows.iter().fold(f64::NEG_INFINITY, |a, r| a.max(r.1));
    outcome.check(Check::at_most(
        format!(
            "Hölder domination over {} random pairs: worst excess",
            r.pairs
        ),
        worst_holder,
        r.tolerance,
    ));
    outcome.check(Check::at_most(
        format!(
            "maximal function over {} random fields: worst cylinder excess",
            r.pairs
        ),
        worst_maximal,
        r.tolerance,
    ));
    Ok(())
}

fn bump_case(b: &BumpCase, outcome: &mut Outcome) -> CliResult<()> {
    let bump = BumpDrift::<f64>::new(b.d, b.p0, b.n_max)?;
    let at = bump.partial_sums(b.p0);
    let above = bump.partial_sums(b.above);
    let last = b.n_max - 1;
    let tenth = b.n_max / 10 - 1;
    let mut sums = Table::new("bump_partial_sums.csv", &["n", "sum_at_p0", "sum_above"]);
    for n in 1..=b.n_max {
        if n <= 100 || n % 100 == 0 {
            sums.push(vec![n.to_string(), num(at[n - 1]), num(above[n - 1])]);
        }
    }
    outcome.tables.push(sums);
    outcome.check(Check::at_most(
        format!(
            "partial sums at p0 = {}: growth from n = {} to {} minus 1",
            b.p0,
            tenth + 1,
            b.n_max
        ),
        at[last] / at[tenth] - 1.0,
        b.convergence_tolerance,
    ));
    outcome.check(Check::at_least(
        format!(
            "partial sums at p = {}: growth from n = {} to {}",
            b.above,
            tenth + 1,
            b.n_max
        ),
        above[last] / above[tenth],
        b.min_growth_above,
    ));

    let vd = unit_ball_volume::<f64>(b.d);
    let mut fitted: f64 = 0.0;
    let mut ratios = Table::new("bump_ratios.csv", &["n", "radius_scale", "shift", "ratio"]);
    for n in 1..=b.ratio_bumps {
        let r = bump.radius(n);
        for &scale in &[0.25, 0.5, 1.0, 2.0, 4.0] {
            for &shift in &[0.0, 0.5, 1.0, 1.5] {
                let mut z = vec![0.0; b.d];
                z[0] = bump.center(n) + shift * r;
                z[1] = 0.3 * r * shift;
                let ratio = bump.per_bump_ratio(n, &z, scale * r);
                fitted = fitted.max(ratio);
                ratios.push(vec![n.to_string(), num(scale), num(shift), num(ratio)]);
            }
        }
    }
    outcome.tables.push(ratios);
    outcome.check(Check::at_most(
        format!(
            "per-bump ratio: fitted constant over {} bumps vs unit-ball volume",
            b.ratio_bumps
        ),
        fitted,
        vd * (1.0 + 1e-12),
    ));

    let tail_bump = BumpDrift::<f64>::new(b.d, b.p0, b.tail.n_max)?;
    let r_min = tail_bump.radius(b.tail.n_max) / 4.0;
    let params = MorreyParams::dyadic_between(b.tail.alpha, b.tail.p0, 1.0, r_min)?;
    let values = b
        .tail
        .starts
        .par_iter()
        .map(|&k| tail_morrey(&tail_bump, k, &params))
        .collect::<driftlab::Result<Vec<f64>>>()?;
    let mut tail = Table::new("bump_tail.csv", &["k", "tail_morrey"]);
    for (k, v) in b.tail.starts.iter().zip(&values) {
        tail.push(vec![k.to_string(), num(*v)]);
    }
    outcome.tables.push(tail);
    let worst_step = values.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
    outcome.check(Check::new(
        "tail Morrey norm: largest ratio of consecutive starts",
        if values.len() < 2 { 0.0 } else { worst_step },
        crate::artifacts::Relation::Below,
        1.0,
    ));
    Ok(())
}
