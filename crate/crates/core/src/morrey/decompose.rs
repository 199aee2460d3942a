//! Threshold split of a drift into a Morrey-small part and a part bounded in
//! space.

use serde::Serialize;

use super::{morrey_norm, MorreyParams};
use crate::error::{Error, Result};
use crate::fields::{admissibility, Admissibility, VectorField};
use crate::scalar::Real;

/// `b = b′ + 𝓑` with `b′ = b·1{|b| ≥ λ(t)}` and `λ(t) = N̂ · s(t)`, where
/// `s(t) = (∫|b(t,x)|^{p₀} dx)^{1/(p₀-d)}`.
#[derive(Debug, Clone)]
pub struct Decomposition<T> {
    pub b_prime: VectorField<T>,
    /// The bounded remainder `𝓑 = b - b′`.
    pub b_part: VectorField<T>,
    /// Threshold `λ(t)` per time slice.
    pub lambda: Vec<T>,
    /// Slice scale `s(t)` per time slice.
    pub slice_scale: Vec<T>,
    /// `(1, d)`-Morrey norm of `b′`.
    pub morrey_certificate: T,
    /// `∫₀ᵀ sup_x |𝓑(t,x)|² dt`.
    pub b_square_bracket: T,
    /// `∫₀ᵀ λ(t)² dt`.
    pub lambda_square_integral: T,
    /// `N̂² ∫₀ᵀ (∫|b|^{p₀} dx)^{q₀/p₀} dt`, equal to the previous entry when
    /// the exponents are critical.
    pub lps_integral: T,
    pub n_hat: T,
    pub p0: T,
    pub q0: T,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompositionSummary {
    pub n_hat: f64,
    pub p0: f64,
    pub q0: f64,
    pub morrey_certificate: f64,
    pub b_square_bracket: f64,
    pub lambda_square_integral: f64,
    pub lps_integral: f64,
    pub identity_relative_error: f64,
    pub thresholded_nodes: usize,
    pub lambda: Vec<f64>,
}

impl<T: Real> Decomposition<T> {
    /// Relative gap between the two evaluations of `∫λ²`.
    pub fn identity_relative_error(&self) -> T {
        let scale = self
            .lambda_square_integral
            .abs()
            .max(self.lps_integral.abs());
        if scale == T::zero() {
            T::zero()
        } else {
            (self.lambda_square_integral - self.lps_integral).abs() / scale
        }
    }

    /// Nodes where `b′` is nonzero.
    pub fn thresholded_nodes(&self) -> usize {
        let d = self.b_prime.n_components();
        self.b_prime
            .values()
            .chunks(d)
            .filter(|c| c.iter().any(|v| *v != T::zero()))
            .count()
    }

    pub fn summary(&self) -> DecompositionSummary {
        DecompositionSummary {
            n_hat: self.n_hat.as_f64(),
            p0: self.p0.as_f64(),
            q0: self.q0.as_f64(),
            morrey_certificate: self.morrey_certificate.as_f64(),
            b_square_bracket: self.b_square_bracket.as_f64(),
            lambda_square_integral: self.lambda_square_integral.as_f64(),
            lps_integral: self.lps_integral.as_f64(),
            identity_relative_error: self.identity_relative_error().as_f64(),
            thresholded_nodes: self.thresholded_nodes(),
            lambda: self.lambda.iter().map(|v| v.as_f64()).collect(),
        }
    }
}

/// `∫₀ᵀ sup_x |v(t,x)|² dt` (trapezoid in time).
pub fn b_square_bracket<T: Real>(v: &VectorField<T>) -> T {
    let grid = *v.grid();
    let mag = v.magnitude();
    (0..grid.n_slices())
        .map(|i| {
            let m = mag.slice(i).iter().fold(T::zero(), |m, &x| m.max(x));
            grid.time_weight(i) * m * m
        })
        .fold(T::zero(), |a, b| a + b)
}

/// Splits `b` at the level `λ(t) = N̂ s(t)`.
///
/// `(q₀, p₀)` must satisfy `d/p₀ + 2/q₀ = 1` with `p₀ > d`; `p₀ = ∞` puts
/// all of `b` into the bounded part with `λ(t) = sup_x |b(t,x)|`.
pub fn lps_decompose<T: Real>(
    b: &VectorField<T>,
    p0: T,
    q0: T,
    n_hat: T,
) -> Result<Decomposition<T>> {
    let grid = *b.grid();
    let d = T::from_usize_lossy(grid.d());
    if !(p0 > d) {
        return Err(Error::InvalidSpec(format!(
            "threshold exponent p0 = {p0} must exceed d = {}",
            grid.d()
        )));
    }
    if !admissibility(q0, p0, grid.d(), Admissibility::LpsCritical) {
        return Err(Error::InvalidSpec(format!(
            "(q0, p0) = ({q0}, {p0}) is not critical in d = {}",
            grid.d()
        )));
    }
    if !(n_hat > T::zero() && n_hat.is_finite()) {
        return Err(Error::InvalidSpec(format!(
            "threshold factor {n_hat} must be positive"
        )));
    }
    let mag = b.magnitude();
    let n_s = grid.n_slices();
    let len = grid.slice_len();
    let mut lambda = Vec::with_capacity(n_s);
    let mut slice_scale = Vec::with_capacity(n_s);
    let mut lps_integral = T::zero();
    for i in 0..n_s {
        let slice = mag.slice(i);
        if p0.is_infinite() {
            let sup = slice.iter().fold(T::zero(), |m, &v| m.max(v));
            slice_scale.push(sup);
            lambda.push(sup);
            lps_integral = lps_integral + grid.time_weight(i) * sup * sup;
            continue;
        }
        let integral = (0..len).fold(T::zero(), |acc, s| {
            acc + grid.space_weight(s) * slice[s].powf(p0)
        });
        if !integral.is_finite() {
            return Err(Error::NonFinite(format!(
                "∫|b|^p0 on slice {i} is {integral}"
            )));
        }
        let scale = integral.powf(T::one() / (p0 - d));
        slice_scale.push(scale);
        lambda.push(n_hat * scale);
        lps_integral = lps_integral + grid.time_weight(i) * integral.powf(q0 / p0);
    }
    if p0.is_finite() {
        lps_integral = lps_integral * n_hat * n_hat;
    }

    let dim = grid.d();
    let mut prime = vec![T::zero(); b.values().len()];
    let mut part = vec![T::zero(); b.values().len()];
    for i in 0..n_s {
        for s in 0..len {
            let k = i * len + s;
            // p₀ = ∞ keeps everything in the bounded part.
            let keep = p0.is_finite() && mag.values()[k] >= lambda[i];
            let src = &b.values()[k * dim..(k + 1) * dim];
            let dst = if keep { &mut prime } else { &mut part };
            dst[k * dim..(k + 1) * dim].copy_from_slice(src);
        }
    }
    let b_prime = VectorField::from_values(grid, prime)?;
    let b_part = VectorField::from_values(grid, part)?;

    let params = MorreyParams::with_unit_exponent(T::one(), d, &grid)?;
    let morrey_certificate = morrey_norm(&b_prime, &params)?;
    let bracket = b_square_bracket(&b_part);
    let lambda_square_integral = (0..n_s).fold(T::zero(), |acc, i| {
        acc + grid.time_weight(i) * lambda[i] * lambda[i]
    });
    Ok(Decomposition {
        b_prime,
        b_part,
        lambda,
        slice_scale,
        morrey_certificate,
        b_square_bracket: bracket,
        lambda_square_integral,
        lps_integral,
        n_hat,
        p0,
        q0,
    })
}
