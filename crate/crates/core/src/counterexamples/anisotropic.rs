//! The source `f(t,x) = 1{|x|≤1, 0<t<1} ||x| - t|^{-2/d}`, cut off where
//! `||x| - t| < h`. Its spatial `L_p` slices blow up as `h → 0` while the
//! space-outer `(p, q)` norm converges.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_strict, Tolerance};
use crate::scalar::{ls_slope, Real};
use crate::special::unit_sphere_area;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnisotropicPoint<T> {
    pub h: T,
    /// `∫_{|x|<1} f^p(t, x) dx` at the slice time.
    pub spatial_power: T,
    /// Space-outer norm `(∫ (∫ f^q dt)^{p/q} dx)^{1/p}`.
    pub swapped_norm: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnisotropicReport<T> {
    pub d: usize,
    pub p: T,
    pub q: T,
    pub slice_time: T,
    pub points: Vec<AnisotropicPoint<T>>,
    /// Negated slope of `log spatial_power` against `log h`.
    pub divergence_exponent: T,
    /// `2p/d - 1`.
    pub expected_exponent: T,
    /// Relative change of the swapped norm between the two finest cut-offs.
    pub swapped_change: T,
    /// Largest `∫_0^1 ||x| - t|^{-2q/d} dt` over `|x| ≤ 1`.
    pub time_integral_max: T,
    /// `2 / (1 - 2q/d)`.
    pub time_integral_bound: T,
}

fn tolerance<T: Real>() -> Tolerance<T> {
    Tolerance::new(0.0, 1e-11)
}

/// `∫ r^{d-1} |r - t|^{-β} dr` over `[0,1]` minus `(t-h, t+h)`, with
/// `r = t ± e^w` so that the integrand is smooth in `w`.
fn cut_slice<T: Real>(d: usize, beta: T, t: T, h: T) -> Result<T> {
    let dm = T::from_usize_lossy(d - 1);
    let weight = |w: T| (w * (T::one() - beta)).exp();
    let mut total = T::zero();
    if t > h {
        total = total
            + integrate_strict(
                |w: T| (t - w.exp()).max(T::zero()).powf(dm) * weight(w),
                h.ln(),
                t.ln(),
                tolerance(),
                "inner slice",
            )?;
    }
    if T::one() - t > h {
        total = total
            + integrate_strict(
                |w: T| (t + w.exp()).powf(dm) * weight(w),
                h.ln(),
                (T::one() - t).ln(),
                tolerance(),
                "outer slice",
            )?;
    }
    Ok(total)
}

/// `∫_0^1 |r - t|^{-κ} dt` with `|r - t| < h` removed.
fn cut_time_integral<T: Real>(kappa: T, r: T, h: T) -> T {
    let e = T::one() - kappa;
    let cut = h.powf(e);
    let side = |len: T| (len.powf(e) - cut).max(T::zero());
    (side(r) + side(T::one() - r)) / e
}

fn swapped_norm<T: Real>(d: usize, p: T, q: T, h: T) -> Result<T> {
    let kappa = T::lit(2.0) * q / T::from_usize_lossy(d);
    let dm = T::from_usize_lossy(d - 1);
    let integrand = |r: T| r.powf(dm) * cut_time_integral(kappa, r, h).powf(p / q);
    let mut breaks = vec![T::zero(), T::one()];
    if h < T::lit(0.5) {
        breaks.splice(1..1, [h, T::one() - h]);
    }
    let mut total = T::zero();
    for w in breaks.windows(2) {
        total = total + integrate_strict(integrand, w[0], w[1], tolerance(), "swapped norm")?;
    }
    Ok((unit_sphere_area::<T>(d) * total).powf(T::one() / p))
}

/// Spatial slice integrals at time `slice_time` and space-outer norms for each cut-off in `h_list`.
pub fn anisotropic_example<T: Real>(
    d: usize,
    p: T,
    q: T,
    h_list: &[T],
    slice_time: T,
) -> Result<AnisotropicReport<T>> {
    let dd = T::from_usize_lossy(d);
    let two = T::lit(2.0);
    if d < 3 {
        return Err(Error::InvalidSpec(format!(
            "the anisotropic example needs d >= 3, got {d}"
        )));
    }
    if !(p > dd / two) {
        return Err(Error::InvalidSpec(format!(
            "need p > d/2 = {}, got {p}",
            dd / two
        )));
    }
    if !(q > T::one() && q < dd / two) {
        return Err(Error::InvalidSpec(format!(
            "need 1 < q < d/2 = {}, got {q}",
            dd / two
        )));
    }
    if !(slice_time > T::zero() && slice_time < T::one()) {
        return Err(Error::InvalidSpec(format!(
            "slice time must lie in (0, 1), got {slice_time}"
        )));
    }
    if h_list.len() < 2
        || h_list
            .iter()
            .any(|&h| !(h > T::zero() && h < slice_time.min(T::one() - slice_time)))
    {
        return Err(Error::InvalidSpec(
            "need at least two cut-offs, each positive and below the distance from the slice time to {0, 1}".into(),
        ));
    }
    let beta = two * p / dd;
    let sphere = unit_sphere_area::<T>(d);
    let mut points = h_list
        .par_iter()
        .map(|&h| {
            Ok(AnisotropicPoint {
                h,
                spatial_power: sphere * cut_slice(d, beta, slice_time, h)?,
                swapped_norm: swapped_norm(d, p, q, h)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    points.sort_by(|a, b| b.h.partial_cmp(&a.h).expect("finite cut-offs"));
    let xs: Vec<T> = points.iter().map(|pt| pt.h.ln()).collect();
    let ys: Vec<T> = points.iter().map(|pt| pt.spatial_power.ln()).collect();
    let n = points.len();
    let (fine, finer) = (points[n - 2].swapped_norm, points[n - 1].swapped_norm);
    let kappa = two * q / dd;
    let time_integral_max = (0..=200)
        .map(|i| cut_time_integral(kappa, T::from_usize_lossy(i) / T::lit(200.0), T::zero()))
        .fold(T::zero(), T::max);
    Ok(AnisotropicReport {
        d,
        p,
        q,
        slice_time,
        divergence_exponent: -ls_slope(&xs, &ys),
        expected_exponent: beta - T::one(),
        swapped_change: (finer - fine).abs() / finer,
        time_integral_max,
        time_integral_bound: two / (T::one() - kappa),
        points,
    })
}
