//! Duality exponent and the blow-up scan at the origin.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::RadialModel;
use crate::error::{Error, Result};
use crate::quadrature::{integrate, Tolerance};
use crate::special::{lower_incomplete_gamma, unit_sphere_area};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentE<T> {
    /// Whether `∫ p^{p'}(s,0,r) r^{-(d-1)/(p-1)} dr` converges, i.e. `p > d/(α+1)`.
    pub finite: bool,
    /// Power of `s` the integral scales with when finite.
    pub e: T,
}

/// `e = -p'(α+1)/2 + (αp' - (d-1)/(p-1) + 1)/2` with `p' = p/(p-1)`.
pub fn exponent_e<T: Real>(p: T, alpha: T, d: usize) -> Result<ExponentE<T>> {
    if !(p > T::one()) {
        return Err(Error::InvalidSpec(format!("need p > 1, got {p}")));
    }
    let two = T::lit(2.0);
    let dd = T::from_usize_lossy(d);
    let pp = p / (p - T::one());
    let e = -pp * (alpha + T::one()) / two
        + (alpha * pp - (dd - T::one()) / (p - T::one()) + T::one()) / two;
    Ok(ExponentE {
        finite: p > dd / (alpha + T::one()),
        e,
    })
}

const Q_MARGIN: f64 = 0.05;

/// Time exponent with `d/p + 2/q = 2 - 0.05`.
pub fn appropriate_q<T: Real>(d: usize, p: T) -> Result<T> {
    let slack = T::lit(2.0 - Q_MARGIN) - T::from_usize_lossy(d) / p;
    if !(slack > T::zero()) {
        return Err(Error::InvalidSpec(format!(
            "no q makes d/p + 2/q = {} with d = {d}, p = {p}",
            2.0 - Q_MARGIN
        )));
    }
    Ok(T::lit(2.0) / slack)
}

/// Power `k` of the margin schedule `m_n = n^{-k}` under which the ratio at
/// the failing exponent `p = d/(α+1)` grows like `n^rate`.
pub fn failing_margin_power<T: Real>(model: &RadialModel<T>, q: T, rate: T) -> T {
    let p = T::from_usize_lossy(model.d) / (model.alpha + T::one());
    let pp = p / (p - T::one());
    pp * (rate + T::lit(2.0) - T::lit(2.0) / q - T::from_usize_lossy(model.d) / p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupSettings<T> {
    /// The family at index `n` has integrability margin `d - γp = n^{-k}`.
    pub margin_power: T,
    /// Common factor of every source in the family.
    pub amplitude: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlowupPoint<T> {
    pub n: usize,
    /// `d - γp`.
    pub margin: T,
    pub gamma: T,
    pub u_origin: T,
    pub g_norm: T,
    pub ratio: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupScan<T> {
    pub d: usize,
    pub alpha: T,
    pub p: T,
    pub q: T,
    /// `p ≤ d/(α+1)`.
    pub failing: bool,
    pub margin_power: T,
    pub points: Vec<BlowupPoint<T>>,
    pub strictly_increasing: bool,
    /// `ratio_last / ratio_first`.
    pub growth: T,
    /// `max ratio / ratio_first`.
    pub excursion: T,
}

/// `∫_0^1 ∫_0^1 p(σ,0,ρ) ρ^{-γ} dρ dσ`, where `a = (α+1-γ)/2` is passed
/// separately so that it keeps full precision when tiny.
fn unit_cell_value<T: Real>(model: &RadialModel<T>, a: T, gamma: T) -> Option<T> {
    // ∫_0^1 ρ^{α-γ} e^{-ρ²/σ} dρ = σ^a γ(a, 1/σ) / 2, so the cell value is
    // c C_α / 2 ∫_0^1 σ^{-γ/2} γ(a, 1/σ) dσ; then σ = v^k with k = 1/(1-γ/2).
    let k = T::one() / (T::one() - gamma / T::lit(2.0));
    let r = integrate(
        |v: T| lower_incomplete_gamma(a, v.powf(-k)),
        T::zero(),
        T::one(),
        Tolerance::new(0.0, 1e-10),
    );
    r.converged
        .then(|| model.c * model.angular_mass() / T::lit(2.0) * k * r.value)
}

/// Ratios `|u_n(0,0)| / ‖g_n‖_{q,p}` for `f_n(s,r) = A·1{s<1/n²}·1{r<1/n}·r^{-γ_n}`
/// with `d - γ_n p = n^{-k}`.
pub fn blowup_scan<T: Real>(
    model: &RadialModel<T>,
    q: T,
    p: T,
    n_list: &[usize],
    settings: &BlowupSettings<T>,
) -> Result<BlowupScan<T>> {
    if !(p > T::one() && q >= T::one()) {
        return Err(Error::InvalidSpec(format!(
            "need p > 1 and q >= 1, got (q, p) = ({q}, {p})"
        )));
    }
    if n_list.is_empty() || n_list.contains(&0) {
        return Err(Error::InvalidSpec(
            "n_list must hold positive indices".into(),
        ));
    }
    if !(settings.margin_power > T::zero()) {
        return Err(Error::InvalidSpec("margin power must be positive".into()));
    }
    let d = model.d;
    let dd = T::from_usize_lossy(d);
    let two = T::lit(2.0);
    // α + 1 - d/p, snapped to zero at the critical exponent
    let mut offset = model.alpha + T::one() - dd / p;
    if offset.abs() <= T::lit(1e-12) * (model.alpha + T::one()) {
        offset = T::zero();
    }
    let failing = offset <= T::zero();
    let sphere = unit_sphere_area::<T>(d);
    let outcomes: Vec<(usize, Result<BlowupPoint<T>>)> = n_list
        .par_iter()
        .map(|&n| {
            let nn = T::from_usize_lossy(n);
            let margin = nn.powf(-settings.margin_power);
            let gamma = (dd - margin) / p;
            let a = (offset + margin / p) / two;
            let point = (|| {
                if !(a > T::zero()) || gamma >= two {
                    return Err(Error::InvalidSpec(format!(
                        "u_{n}(0,0) is infinite for gamma = {gamma}"
                    )));
                }
                let cell = unit_cell_value(model, a, gamma)
                    .ok_or_else(|| Error::Quadrature(format!("origin value at n = {n}")))?;
                let u_origin = settings.amplitude * nn.powf(gamma - two) * cell;
                let space = (sphere * nn.powf(-margin) / margin).powf(T::one() / p);
                let g_norm = settings.amplitude.abs() * nn.powf(-two / q) * space;
                let ratio = if g_norm == T::zero() {
                    T::zero()
                } else {
                    u_origin.abs() / g_norm
                };
                if !ratio.is_finite() {
                    return Err(Error::NonFinite(format!("blow-up ratio at n = {n}")));
                }
                Ok(BlowupPoint {
                    n,
                    margin,
                    gamma,
                    u_origin,
                    g_norm,
                    ratio,
                })
            })();
            (n, point)
        })
        .collect();
    let mut points = Vec::with_capacity(outcomes.len());
    for (n, o) in outcomes {
        match o {
            Ok(pt) => points.push(pt),
            Err(Error::Quadrature(msg)) => {
                let achieved = points.last().map_or(0, |pt: &BlowupPoint<T>| pt.n);
                return Err(Error::Quadrature(format!(
                    "{msg}; achieved n = {achieved}, failed at n = {n}"
                )));
            }
            Err(e) => return Err(e),
        }
    }
    let first = points[0].ratio;
    let last = points[points.len() - 1].ratio;
    let max = points.iter().fold(T::zero(), |m, pt| m.max(pt.ratio));
    let quotient = |v: T| {
        if first > T::zero() {
            v / first
        } else {
            T::zero()
        }
    };
    Ok(BlowupScan {
        d,
        alpha: model.alpha,
        p,
        q,
        failing,
        margin_power: settings.margin_power,
        strictly_increasing: points.windows(2).all(|w| w[1].ratio > w[0].ratio),
        growth: quotient(last),
        excursion: quotient(max),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_limits() {
        let r = exponent_e(2.0 / 1.9, 0.9f64, 2).unwrap();
        assert!(!r.finite);
        assert!(exponent_e(1.5, 0.9f64, 2).unwrap().finite);
        assert!(exponent_e(1e9, 0.9f64, 2).unwrap().e.abs() < 1e-6);
        assert!(exponent_e(1.0, 0.9f64, 2).is_err());
    }

    #[test]
    fn appropriate_q_keeps_the_margin() {
        let p = 2.0 / 1.9;
        let q = appropriate_q(2, p).unwrap();
        assert!((2.0 / p + 2.0 / q - 1.95f64).abs() < 1e-12);
        assert!(appropriate_q(2, 1.0f64).is_err());
    }

    #[test]
    fn zero_amplitude_gives_zero_ratios() {
        let m = RadialModel::new(2, 0.9f64).unwrap();
        let s = BlowupSettings {
            margin_power: 1.0,
            amplitude: 0.0,
        };
        let scan = blowup_scan(&m, 40.0, 1.5, &[2, 4], &s).unwrap();
        assert!(scan.points.iter().all(|p| p.ratio == 0.0));
    }
}
