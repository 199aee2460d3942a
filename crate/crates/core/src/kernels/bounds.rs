//! Empirical constants of the derivative and Morrey-drift bounds.

use serde::{Deserialize, Serialize};

use super::{potential_apply, KernelParams};
use crate::error::{Error, Result};
use crate::fields::{gradient, hessian_norm, mixed_norm, MixedNormSpec, ScalarField};
use crate::morrey::{morrey_norm, Magnitude, MorreyParams};
use crate::scalar::Real;

const DENOMINATOR_FLOOR: f64 = 1e-14;

/// `max |D^n P_{α,k} f| / P_{α-n,2k} |f|` over interior nodes before the
/// horizon, for `n ∈ {1, 2}`. Nodes where the denominator is below `1e-14`
/// are skipped; `f ≡ 0` gives 0.
pub fn derivative_domination_check<T: Real>(
    f: &ScalarField<T>,
    alpha: T,
    k: T,
    n: usize,
) -> Result<T> {
    if !(n == 1 || n == 2) {
        return Err(Error::InvalidSpec(format!(
            "derivative order {n} not in {{1,2}}"
        )));
    }
    let lowered = alpha - T::from_usize_lossy(n);
    if lowered < T::one() {
        return Err(Error::InvalidSpec(format!(
            "alpha - n = {lowered} must be at least 1"
        )));
    }
    let d = f.grid().d();
    if f.values().iter().all(|&v| v == T::zero()) {
        return Ok(T::zero());
    }
    let u = potential_apply(f, &KernelParams::new(alpha, k, d)?)?;
    let bound = potential_apply(&f.abs(), &KernelParams::new(lowered, T::lit(2.0) * k, d)?)?;
    let derivative = if n == 1 {
        gradient(&u).magnitude()
    } else {
        hessian_norm(&u)
    };
    let grid = f.grid();
    let margin = n + 1;
    let floor = T::lit(DENOMINATOR_FLOOR);
    let mut worst = T::zero();
    for i in 0..grid.n_t() {
        for s in 0..grid.slice_len() {
            if grid.boundary_distance(s) < margin {
                continue;
            }
            let den = bound.at(i, s);
            if den < floor {
                continue;
            }
            worst = worst.max(derivative.at(i, s) / den);
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundSide {
    /// `‖P(|b| f)‖ / (b̃ ‖f‖)`; exponents must exceed the dual `p₀' = p₀/(p₀-1)`.
    Forward,
    /// `‖|b| P f‖ / (b̃ ‖f‖)`; exponents must stay below `p₀`.
    Adjoint,
}

fn magnitude_field<T: Real, B: Magnitude<T>>(b: &B) -> Result<ScalarField<T>> {
    let grid = *b.grid();
    let mut values = Vec::with_capacity(grid.len());
    for i in 0..grid.n_slices() {
        values.extend(b.slice_magnitude(i));
    }
    ScalarField::from_values(grid, values)
}

/// Ratio of the potential bound for drift `b` against its Morrey norm
/// `b̃` (with the kernel's order and `morrey.p0()`).
pub fn morrey_bound_ratio<T: Real, B: Magnitude<T>>(
    b: &B,
    f: &ScalarField<T>,
    kernel: &KernelParams<T>,
    morrey: &MorreyParams<T>,
    spec: &MixedNormSpec<T>,
    side: BoundSide,
) -> Result<T> {
    let p0 = morrey.p0();
    if (morrey.alpha() - kernel.alpha).abs() > T::lit(1e-12) {
        return Err(Error::InvalidSpec(format!(
            "Morrey order {} differs from the kernel order {}",
            morrey.alpha(),
            kernel.alpha
        )));
    }
    match side {
        BoundSide::Forward => {
            let dual = p0 / (p0 - T::one());
            if !(spec.q > dual && spec.p > dual) {
                return Err(Error::Precondition(format!(
                    "forward bound needs exponents above {dual}, got ({}, {})",
                    spec.q, spec.p
                )));
            }
        }
        BoundSide::Adjoint => {
            if !(spec.q < p0 && spec.p < p0) {
                return Err(Error::Precondition(format!(
                    "adjoint bound needs exponents below {p0}, got ({}, {})",
                    spec.q, spec.p
                )));
            }
        }
    }
    f.grid().check_same(b.grid(), "drift and density")?;
    let mag = magnitude_field(b)?;
    let b_tilde = morrey_norm(&mag, morrey)?;
    if b_tilde == T::zero() {
        return Ok(T::zero());
    }
    let f_norm = mixed_norm(f, spec)?;
    if f_norm == T::zero() {
        return Ok(T::zero());
    }
    let image = match side {
        BoundSide::Forward => potential_apply(&mag.mul(f)?, kernel)?,
        BoundSide::Adjoint => mag.mul(&potential_apply(f, kernel)?)?,
    };
    Ok(mixed_norm(&image, spec)? / (b_tilde * f_norm))
}
