//! Parabolic kernels `p_{α,k}(s, r) = s^{-(d+2-α)/2} e^{-r²/(ks)} 1{s>0}` and
//! the potentials `P_{α,k} f(t,x) = ∫∫ p_{α,k}(s,|y|) f(t+s, x+y) dy ds`.
//!
//! The spatial integral of `p_{α,k}(s, ·)` is `(πks)^{d/2} s^{α/2-1}`, so
//!
//! ```text
//! P_{α,k} f(t) = (πk)^{d/2} ∫_0^{T-t} s^{α/2-1} G_{ks} f(t+s) ds
//!              = 2 (πk)^{d/2} ∫_0^{√(T-t)} σ^{α-1} G_{kσ²} f(t+σ²) dσ,
//! ```
//!
//! where `G_{ks}` is convolution with the unit-mass Gaussian `∝ e^{-|y|²/(ks)}`.
//! The discrete operator uses a separable, exactly normalized sampled
//! Gaussian (zero outside the box), linear interpolation between time
//! slices and the trapezoid rule in `σ`. Data beyond the horizon is zero.

mod bounds;
mod constants;

pub use bounds::{derivative_domination_check, morrey_bound_ratio, BoundSide};
pub use constants::{
    composition_constant, composition_constant_with, composition_fit, composition_oracle,
    reproduction_constant, reproduction_constant_with, reproduction_fit, reproduction_oracle,
    ConstantFit, ConstantRow, FitSettings,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{Grid, ScalarField};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams<T> {
    pub alpha: T,
    pub k: T,
    pub d: usize,
}

impl<T: Real> KernelParams<T> {
    pub fn new(alpha: T, k: T, d: usize) -> Result<Self> {
        if !(alpha > T::zero() && alpha.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "kernel order alpha = {alpha} must be positive"
            )));
        }
        if !(k > T::zero() && k.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "kernel spread k = {k} must be positive"
            )));
        }
        if !(1..=3).contains(&d) {
            return Err(Error::InvalidSpec(format!(
                "dimension {d} not in {{1,2,3}}"
            )));
        }
        Ok(Self { alpha, k, d })
    }
}

/// `p_{α,k}(s, r)`; zero for `s ≤ 0`.
pub fn kernel_eval<T: Real>(params: &KernelParams<T>, s: T, r: T) -> T {
    if s <= T::zero() {
        return T::zero();
    }
    let exponent = (T::from_usize_lossy(params.d) + T::lit(2.0) - params.alpha) / T::lit(2.0);
    s.powf(-exponent) * (-(r * r) / (params.k * s)).exp()
}

/// Half-kernel `w_0, …, w_m` of the unit-mass sampled Gaussian
/// `∝ e^{-(jh)²/spread}`, truncated where it drops below `e^{-28}`.
fn gaussian_taps<T: Real>(h: T, spread: T, max_taps: usize) -> Vec<T> {
    if spread <= T::zero() {
        return vec![T::one()];
    }
    let reach = (T::lit(28.0) * spread).sqrt() / h;
    let m = reach.floor().to_usize().unwrap_or(max_taps).min(max_taps);
    let mut taps: Vec<T> = (0..=m)
        .map(|j| {
            let y = T::from_usize_lossy(j) * h;
            (-(y * y) / spread).exp()
        })
        .collect();
    let mass = taps[0] + T::lit(2.0) * taps[1..].iter().fold(T::zero(), |a, &b| a + b);
    taps.iter_mut().for_each(|w| *w = *w / mass);
    taps
}

/// Convolves one slice with the symmetric `taps` along `axis`, in place.
fn convolve_axis<T: Real>(
    grid: &Grid<T>,
    values: &mut [T],
    scratch: &mut Vec<T>,
    axis: usize,
    taps: &[T],
) {
    if taps.len() == 1 {
        return;
    }
    let n = grid.axis_len();
    let stride = grid.stride(axis);
    let m = taps.len() - 1;
    scratch.clear();
    scratch.extend_from_slice(values);
    let len = values.len();
    for base in 0..len {
        // Visit each line once, starting from its first node.
        if (base / stride) % n != 0 {
            continue;
        }
        for j in 0..n {
            let lo = j.saturating_sub(m);
            let hi = (j + m).min(n - 1);
            let mut acc = T::zero();
            for l in lo..=hi {
                let off = j.abs_diff(l);
                acc = acc + taps[off] * scratch[base + l * stride];
            }
            values[base + j * stride] = acc;
        }
    }
}

/// `G_{spread} v` for one slice (`spread = k s`).
fn gaussian_smooth<T: Real>(grid: &Grid<T>, values: &mut [T], scratch: &mut Vec<T>, spread: T) {
    let taps = gaussian_taps(grid.h(), spread, grid.n_x());
    for axis in 0..grid.d() {
        convolve_axis(grid, values, scratch, axis, &taps);
    }
}

/// Linear interpolation of `f` at time `tau` into `out`; zero past the
/// horizon. Returns false when the interpolant vanishes identically.
fn interpolate_time<T: Real>(f: &ScalarField<T>, tau: T, out: &mut [T]) -> bool {
    let grid = f.grid();
    let pos = tau / grid.dt();
    let n_t = grid.n_t();
    if pos > T::from_usize_lossy(n_t) * (T::one() + T::lit(1e-12)) {
        out.iter_mut().for_each(|v| *v = T::zero());
        return false;
    }
    let i0 = pos.floor().to_usize().unwrap_or(0).min(n_t);
    let frac = (pos - T::from_usize_lossy(i0)).max(T::zero());
    let a = f.slice(i0);
    if i0 == n_t || frac == T::zero() {
        out.copy_from_slice(a);
    } else {
        let b = f.slice(i0 + 1);
        for ((o, &x), &y) in out.iter_mut().zip(a).zip(b) {
            *o = x + frac * (y - x);
        }
    }
    out.iter().any(|v| *v != T::zero())
}

fn check_potential<T: Real>(f: &ScalarField<T>, params: &KernelParams<T>) -> Result<()> {
    if params.alpha < T::one() {
        return Err(Error::InvalidSpec(format!(
            "potential of order alpha = {} < 1 is not supported",
            params.alpha
        )));
    }
    if f.grid().d() != params.d {
        return Err(Error::GridMismatch(format!(
            "kernel in d = {} applied to a field in d = {}",
            params.d,
            f.grid().d()
        )));
    }
    if !f.is_finite() {
        return Err(Error::NonFinite("potential input".into()));
    }
    Ok(())
}

/// Number of `σ` nodes of the trapezoid rule (both endpoints included).
fn sigma_nodes<T: Real>(grid: &Grid<T>) -> usize {
    2 * grid.n_t() + 8
}

/// `P_{α,k} f` on time slice `i`.
fn potential_slice<T: Real>(f: &ScalarField<T>, params: &KernelParams<T>, i: usize) -> Vec<T> {
    let grid = f.grid();
    let len = grid.slice_len();
    let mut acc = vec![T::zero(); len];
    let remaining = grid.horizon() - grid.time(i);
    if remaining <= T::zero() {
        return acc;
    }
    let nodes = sigma_nodes(grid);
    let step = remaining.sqrt() / T::from_usize_lossy(nodes - 1);
    let mut buf = vec![T::zero(); len];
    let mut scratch = Vec::with_capacity(len);
    for m in 0..nodes {
        let sigma = T::from_usize_lossy(m) * step;
        let mut weight = sigma.powf(params.alpha - T::one()) * step;
        if m == 0 || m == nodes - 1 {
            weight = weight / T::lit(2.0);
        }
        if weight == T::zero() {
            continue;
        }
        if !interpolate_time(f, grid.time(i) + sigma * sigma, &mut buf) {
            continue;
        }
        gaussian_smooth(grid, &mut buf, &mut scratch, params.k * sigma * sigma);
        for (a, &v) in acc.iter_mut().zip(&buf) {
            *a = *a + weight * v;
        }
    }
    let scale =
        T::lit(2.0) * (T::PI() * params.k).powf(T::from_usize_lossy(grid.d()) / T::lit(2.0));
    acc.iter_mut().for_each(|v| *v = *v * scale);
    acc
}

/// `P_{α,k} f` at every node.
pub fn potential_apply<T: Real>(
    f: &ScalarField<T>,
    params: &KernelParams<T>,
) -> Result<ScalarField<T>> {
    check_potential(f, params)?;
    let grid = *f.grid();
    let slices: Vec<Vec<T>> = (0..grid.n_slices())
        .into_par_iter()
        .map(|i| potential_slice(f, params, i))
        .collect();
    ScalarField::from_values(grid, slices.concat())
}
