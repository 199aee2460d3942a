//! Drift built from disjoint ball indicators on the positive `x¹` axis whose
//! `L_{p₀}` mass is finite while every higher power diverges.
//!
//! For `n ≥ 10` the `n`-th bump has radius `r_n = (n ln³n)^{-1/(d-p₀)}` and
//! height `α_n / r_n` with `α_n = (ln n)^{-1/p₀}`. It sits in a slot of
//! half-length `ρ_n = r_n^{d-p₀}`; slots are laid out right to left from
//! `x¹ = 1`. The first nine bumps use `r_n ∝ 10/n`, scaled so that all slots
//! together (including the infinite tail) fill exactly half the unit
//! interval, and amplitudes continuing the ratio `α_10/α_11` geometrically.

use serde::Serialize;

use super::MorreyParams;
use crate::error::{Error, Result};
use crate::fields::{Grid, ScalarField};
use crate::scalar::Real;
use crate::special::unit_ball_volume;

const FIRST_ASYMPTOTIC: usize = 10;

#[derive(Debug, Clone)]
pub struct BumpDrift<T> {
    d: usize,
    p0: T,
    radii: Vec<T>,
    amplitudes: Vec<T>,
    rhos: Vec<T>,
    centers: Vec<T>,
    /// Slot edges `x_0 = 1 > x_1 > … > x_{n_max}`.
    edges: Vec<T>,
    kappa: T,
    tail_sum: T,
}

#[derive(Debug, Clone, Serialize)]
pub struct BumpSummary {
    pub d: usize,
    pub p0: f64,
    pub n_max: usize,
    pub small_index_scale: f64,
    pub asymptotic_slot_sum: f64,
    pub slot_sum: f64,
    pub radii: Vec<f64>,
    pub amplitudes: Vec<f64>,
    pub slots: Vec<f64>,
    pub centers: Vec<f64>,
    pub power_integral: f64,
}

/// `Σ_{n ≥ 10} 1/(n ln³n)`: direct summation plus an Euler–Maclaurin tail.
fn asymptotic_slot_sum() -> f64 {
    const CUT: usize = 100_000;
    let f = |n: f64| 1.0 / (n * n.ln().powi(3));
    let direct: f64 = (FIRST_ASYMPTOTIC..CUT).map(|n| f(n as f64)).sum();
    let n = CUT as f64;
    direct + 1.0 / (2.0 * n.ln().powi(2)) + 0.5 * f(n)
}

impl<T: Real> BumpDrift<T> {
    pub fn new(d: usize, p0: T, n_max: usize) -> Result<Self> {
        let dd = T::from_usize_lossy(d);
        if d < 3 {
            return Err(Error::InvalidSpec(format!(
                "bump drift needs d >= 3 (got {d})"
            )));
        }
        if !(p0 >= dd - T::one() && p0 < dd) {
            return Err(Error::InvalidSpec(format!(
                "p0 = {p0} must lie in [d-1, d)"
            )));
        }
        if n_max < 3 {
            return Err(Error::InvalidSpec(format!(
                "n_max = {n_max} must be at least 3"
            )));
        }
        let gap = dd - p0;
        let asymptotic = |n: usize| {
            let nf = T::from_usize_lossy(n);
            let slot = T::one() / (nf * nf.ln().powi(3));
            (slot.powf(T::one() / gap), nf.ln().powf(-T::one() / p0))
        };
        let (r10, a10) = asymptotic(FIRST_ASYMPTOTIC);
        let step = a10 / asymptotic(FIRST_ASYMPTOTIC + 1).1;
        let tail_sum = T::lit(asymptotic_slot_sum());
        let base_slots: T = (1..FIRST_ASYMPTOTIC)
            .map(|n| (r10 * T::lit(10.0) / T::from_usize_lossy(n)).powf(gap))
            .sum();
        let target = T::lit(0.5) - tail_sum;
        let kappa = (target / base_slots).powf(T::one() / gap);

        let mut radii = Vec::with_capacity(n_max);
        let mut amplitudes = Vec::with_capacity(n_max);
        for n in 1..=n_max {
            let (r, a) = if n < FIRST_ASYMPTOTIC {
                (
                    kappa * r10 * T::lit(10.0) / T::from_usize_lossy(n),
                    a10 * step.powi((FIRST_ASYMPTOTIC - n) as i32),
                )
            } else {
                asymptotic(n)
            };
            radii.push(r);
            amplitudes.push(a);
        }
        let rhos: Vec<T> = radii.iter().map(|&r| r.powf(gap)).collect();
        let mut edges = vec![T::one()];
        let mut centers = Vec::with_capacity(n_max);
        for (k, &rho) in rhos.iter().enumerate() {
            let next = edges[k] - T::lit(2.0) * rho;
            centers.push((edges[k] + next) / T::lit(2.0));
            edges.push(next);
        }
        for (k, (&r, &rho)) in radii.iter().zip(&rhos).enumerate() {
            if r > rho {
                return Err(Error::Overlap(format!(
                    "bump {} of radius {r} exceeds its slot {rho}",
                    k + 1
                )));
            }
        }
        if *edges.last().expect("edges") < T::zero() {
            return Err(Error::Overlap("slots extend past the origin".into()));
        }
        Ok(Self {
            d,
            p0,
            radii,
            amplitudes,
            rhos,
            centers,
            edges,
            kappa,
            tail_sum,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }
    pub fn p0(&self) -> T {
        self.p0
    }
    pub fn n_max(&self) -> usize {
        self.radii.len()
    }
    /// Radius `r_n` (1-based `n`).
    pub fn radius(&self, n: usize) -> T {
        self.radii[n - 1]
    }
    pub fn amplitude(&self, n: usize) -> T {
        self.amplitudes[n - 1]
    }
    pub fn slot(&self, n: usize) -> T {
        self.rhos[n - 1]
    }
    /// `x¹` coordinate of the center of bump `n`.
    pub fn center(&self, n: usize) -> T {
        self.centers[n - 1]
    }
    /// Height `α_n / r_n` of bump `n`.
    pub fn height(&self, n: usize) -> T {
        self.amplitudes[n - 1] / self.radii[n - 1]
    }
    pub fn slot_sum(&self) -> T {
        self.rhos.iter().copied().sum()
    }

    fn distance_to(&self, n: usize, x: &[T]) -> T {
        let mut s = (x[0] - self.center(n)).powi(2);
        for &v in &x[1..] {
            s = s + v * v;
        }
        s.sqrt()
    }

    /// `b(x)`: the height of the bump containing `x`, or zero.
    pub fn value(&self, x: &[T]) -> T {
        (1..=self.n_max())
            .find(|&n| self.distance_to(n, x) <= self.radius(n))
            .map_or(T::zero(), |n| self.height(n))
    }

    /// Terms `∫ b_n^p = |B_1| (α_n/r_n)^p r_n^d`.
    pub fn power_integral_terms(&self, p: T) -> Vec<T> {
        let vd: T = unit_ball_volume(self.d);
        (1..=self.n_max())
            .map(|n| vd * self.height(n).powf(p) * self.radius(n).powi(self.d as i32))
            .collect()
    }

    /// Partial sums of [`Self::power_integral_terms`].
    pub fn partial_sums(&self, p: T) -> Vec<T> {
        let mut acc = T::zero();
        self.power_integral_terms(p)
            .into_iter()
            .map(|t| {
                acc = acc + t;
                acc
            })
            .collect()
    }

    /// `∫_{B_ρ(z)} (Σ_{n ≥ from} b_n)^p` from exact ball intersection volumes.
    pub fn ball_integral(&self, z: &[T], rho: T, p: T, from: usize) -> T {
        let mut total = T::zero();
        for n in from.max(1)..=self.n_max() {
            let dist = self.distance_to(n, z);
            if dist >= rho + self.radius(n) {
                continue;
            }
            total = total + self.height(n).powf(p) * lens_volume(self.d, rho, self.radius(n), dist);
        }
        total
    }

    /// `∫_{B_ρ(z)} b_n^{p₀} / (α_n^{p₀} ρ^{d-p₀})`, bounded by `|B_1|`.
    pub fn per_bump_ratio(&self, n: usize, z: &[T], rho: T) -> T {
        let dist = self.distance_to(n, z);
        let vol = lens_volume(self.d, rho, self.radius(n), dist);
        let integral = self.height(n).powf(self.p0) * vol;
        integral
            / (self.amplitude(n).powf(self.p0) * rho.powf(T::from_usize_lossy(self.d) - self.p0))
    }

    /// Samples the bumps resolvable on `grid` (radius at least `4h`).
    /// Returns the field and the number of leading bumps included.
    pub fn realize(&self, grid: &Grid<T>) -> Result<(ScalarField<T>, usize)> {
        if grid.d() != self.d {
            return Err(Error::GridMismatch(format!(
                "bump drift in d = {} on a grid of dimension {}",
                self.d,
                grid.d()
            )));
        }
        let four_h = T::lit(4.0) * grid.h();
        let included = self.radii.iter().take_while(|&&r| r >= four_h).count();
        let field = ScalarField::from_fn(*grid, |_, x| {
            (1..=included)
                .find(|&n| self.distance_to(n, x) <= self.radius(n))
                .map_or(T::zero(), |n| self.height(n))
        });
        Ok((field, included))
    }

    pub fn summary(&self) -> BumpSummary {
        let f = |v: &[T]| v.iter().map(|x| x.as_f64()).collect::<Vec<f64>>();
        BumpSummary {
            d: self.d,
            p0: self.p0.as_f64(),
            n_max: self.n_max(),
            small_index_scale: self.kappa.as_f64(),
            asymptotic_slot_sum: self.tail_sum.as_f64(),
            slot_sum: self.slot_sum().as_f64(),
            radii: f(&self.radii),
            amplitudes: f(&self.amplitudes),
            slots: f(&self.rhos),
            centers: f(&self.centers),
            power_integral: self
                .partial_sums(self.p0)
                .last()
                .map_or(0.0, |v| v.as_f64()),
        }
    }

    pub(crate) fn leftmost_edge(&self) -> T {
        *self.edges.last().expect("edges")
    }
}

/// `∫_0^θ sin^d`, by the reduction formula.
fn sine_power_integral<T: Real>(d: usize, theta: T) -> T {
    let (s, c) = theta.sin_cos();
    let mut even = theta;
    let mut odd = T::one() - c;
    if d == 0 {
        return even;
    }
    if d == 1 {
        return odd;
    }
    let mut result = T::zero();
    for n in 2..=d {
        let nf = T::from_usize_lossy(n);
        let prev = if n % 2 == 0 { even } else { odd };
        let value = -s.powi(n as i32 - 1) * c / nf + (nf - T::one()) / nf * prev;
        if n % 2 == 0 {
            even = value;
        } else {
            odd = value;
        }
        result = value;
    }
    result
}

/// Volume of `{y ∈ B_R : y·e > a}` for a unit vector `e`.
fn cap_volume<T: Real>(d: usize, radius: T, a: T) -> T {
    let cos = (a / radius).max(-T::one()).min(T::one());
    let vd1: T = unit_ball_volume(d - 1);
    vd1 * radius.powi(d as i32) * sine_power_integral(d, cos.acos())
}

/// Volume of the intersection of two balls in `ℝ^d` with radii `r1`, `r2`
/// and centers at distance `dist`.
pub fn lens_volume<T: Real>(d: usize, r1: T, r2: T, dist: T) -> T {
    if dist >= r1 + r2 {
        return T::zero();
    }
    if dist <= (r1 - r2).abs() {
        let r = r1.min(r2);
        return unit_ball_volume::<T>(d) * r.powi(d as i32);
    }
    let a1 = (dist * dist + r1 * r1 - r2 * r2) / (T::lit(2.0) * dist);
    cap_volume(d, r1, a1) + cap_volume(d, r2, dist - a1)
}

/// Sampled `(α, p₀)`-Morrey norm of the tail `Σ_{n ≥ k} b_n`.
///
/// Ball centers lie on the `x¹` axis: nine points across every tail bump
/// plus, when affordable, a uniform sweep with spacing `ρ/4` over the tail's
/// slots; ball integrals use exact intersection volumes.
pub fn tail_morrey<T: Real>(bump: &BumpDrift<T>, k: usize, params: &MorreyParams<T>) -> Result<T> {
    let dd = T::from_usize_lossy(bump.d());
    if params.p0() > dd || params.alpha() > dd / params.p0() * (T::one() + T::lit(1e-12)) {
        return Err(Error::InvalidSpec(
            "Morrey exponents incompatible with the dimension".into(),
        ));
    }
    if k > bump.n_max() {
        return Ok(T::zero());
    }
    let k = k.max(1);
    let vd: T = unit_ball_volume(bump.d());
    let mut local = Vec::new();
    for n in k..=bump.n_max() {
        for j in -4i32..=4 {
            local.push(
                bump.center(n) + T::from_i32(j).expect("small") * bump.radius(n) / T::lit(2.0),
            );
        }
    }
    let right = bump.edges[k - 1];
    let left = bump.leftmost_edge();
    let mut best = T::zero();
    let mut point = vec![T::zero(); bump.d()];
    for &rho in params.radii() {
        let step = rho / T::lit(4.0);
        let span = (right - left + T::lit(2.0) * rho) / step;
        let mut centers = local.clone();
        if span.as_f64() <= 4096.0 {
            let count = span.ceil().to_usize().unwrap_or(0);
            centers.extend((0..=count).map(|j| left - rho + T::from_usize_lossy(j) * step));
        }
        let norm = vd * rho.powi(bump.d() as i32);
        for &c in &centers {
            point[0] = c;
            let integral = bump.ball_integral(&point, rho, params.p0(), k);
            if integral > T::zero() {
                best = best
                    .max(rho.powf(params.alpha()) * (integral / norm).powf(T::one() / params.p0()));
            }
        }
    }
    Ok(best)
}
