//! Explicit radial solutions for the drift `b = -(d-1)(1-θ) x/|x|²`, a
//! blow-up scan showing the estimate fails in the plane at the critical
//! exponent, and a source that is integrable in space-outer but not in
//! time-outer order.
//!
//! The radial process behind the kernel is a Bessel-type diffusion of
//! dimension `α + 1` with `α = θ(d-1)`, run at a quarter of the unit
//! diffusion speed: `u = ∫∫ p f` solves `4∂_t u + Δu + b·Du + 4g = 0`.

mod anisotropic;
mod blowup;

pub use anisotropic::{anisotropic_example, AnisotropicPoint, AnisotropicReport};
pub use blowup::{
    appropriate_q, blowup_scan, exponent_e, failing_margin_power, BlowupPoint, BlowupScan,
    BlowupSettings, ExponentE,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{fixed_panels, integrate, integrate_strict, Tolerance};
use crate::scalar::{ls_slope, Real};
use crate::special::beta;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialModel<T> {
    pub d: usize,
    pub theta: T,
    pub alpha: T,
    pub c: T,
}

impl<T: Real> RadialModel<T> {
    pub fn new(d: usize, theta: T) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidSpec(format!(
                "radial model needs d >= 2, got {d}"
            )));
        }
        if !(theta > T::zero() && theta < T::one()) {
            return Err(Error::InvalidSpec(format!(
                "theta must lie in (0, 1), got {theta}"
            )));
        }
        let alpha = theta * T::from_usize_lossy(d - 1);
        Ok(Self {
            d,
            theta,
            alpha,
            c: normalization_c(alpha)?,
        })
    }

    /// Radial component of the drift at distance `x` from the origin.
    pub fn drift(&self, x: T) -> T {
        -T::from_usize_lossy(self.d - 1) * (T::one() - self.theta) / x
    }

    /// `∫_{-π/2}^{π/2} cos^{α-1} φ dφ`.
    pub fn angular_mass(&self) -> T {
        beta(T::lit(0.5), self.alpha / T::lit(2.0))
    }
}

/// `c = 1 / (∫ e^{-y²} dy · ∫_0^∞ r^{α-1} e^{-r²} dr)`, both by quadrature.
pub fn normalization_c<T: Real>(alpha: T) -> Result<T> {
    if !(alpha > T::zero() && alpha.is_finite()) {
        return Err(Error::InvalidSpec(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let tol = Tolerance::new(1e-14, 1e-12);
    let gauss = integrate_strict(
        |y: T| (-y * y).exp(),
        T::lit(-9.0),
        T::lit(9.0),
        tol,
        "Gaussian integral",
    )?;
    // r = v^{1/α} removes the r^{α-1} singularity
    let upper = T::lit(40.0).powf(alpha / T::lit(2.0));
    let two_over = T::lit(2.0) / alpha;
    let radial = integrate_strict(
        |v: T| (-v.powf(two_over)).exp() / alpha,
        T::zero(),
        upper,
        tol,
        "radial normalization",
    )?;
    Ok(T::one() / (gauss * radial))
}

/// `∫ cos^{α-1}φ exp(-κ(1 - sin φ)) dφ` over `(-π/2, π/2)`, with `φ = ±(π/2 - ξ^m)`
/// near each endpoint so that the integrand stays bounded.
fn angular_integral<T: Real>(alpha: T, kappa: T, tol: Tolerance<T>) -> Result<T> {
    let m = T::lit(2.0).max(T::one() / alpha);
    let top = T::FRAC_PI_2().powf(T::one() / m);
    let weight = |xi: T| -> T {
        let s = xi.powf(m);
        let sinc = if s > T::zero() { s.sin() / s } else { T::one() };
        m * sinc.powf(alpha - T::one()) * xi.powf(m * alpha - T::one())
    };
    let two = T::lit(2.0);
    let upper = integrate(
        |xi: T| {
            let half = (xi.powf(m) / two).sin();
            weight(xi) * (-two * kappa * half * half).exp()
        },
        T::zero(),
        top,
        tol,
    );
    let lower = integrate(
        |xi: T| {
            let half = (xi.powf(m) / two).sin();
            weight(xi) * (-kappa * (two - two * half * half)).exp()
        },
        T::zero(),
        top,
        tol,
    );
    if !(upper.converged && lower.converged) {
        return Err(Error::Quadrature(format!(
            "angular integral at alpha = {alpha}, kappa = {kappa}"
        )));
    }
    Ok(upper.value + lower.value)
}

/// Transition density `p(t, x, r)` of the radial process, relative tolerance 1e-8.
pub fn radial_kernel<T: Real>(model: &RadialModel<T>, t: T, x: T, r: T) -> Result<T> {
    radial_kernel_with(model, t, x, r, Tolerance::new(0.0, 1e-8))
}

pub fn radial_kernel_with<T: Real>(
    model: &RadialModel<T>,
    t: T,
    x: T,
    r: T,
    tol: Tolerance<T>,
) -> Result<T> {
    if !(t > T::zero()) {
        return Err(Error::InvalidSpec(format!(
            "kernel time must be positive, got {t}"
        )));
    }
    if x < T::zero() || r < T::zero() {
        return Err(Error::InvalidSpec(
            "kernel radii must be nonnegative".into(),
        ));
    }
    if r == T::zero() {
        return Ok(T::zero());
    }
    let alpha = model.alpha;
    let gap = x - r;
    let prefactor = model.c
        * t.powf(-(alpha + T::one()) / T::lit(2.0))
        * r.powf(alpha)
        * (-gap * gap / t).exp();
    if prefactor == T::zero() {
        return Ok(T::zero());
    }
    let kappa = T::lit(2.0) * x * r / t;
    let angular = if kappa == T::zero() {
        model.angular_mass()
    } else {
        angular_integral(alpha, kappa, tol)?
    };
    Ok(prefactor * angular)
}

/// Quadrature layout of the radial solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialQuadrature<T> {
    /// Kronrod panels in `σ = √s`.
    pub time_panels: usize,
    /// Kronrod panels in `r`.
    pub space_panels: usize,
    /// Half width of the `r` window in units of `√s`.
    pub window: T,
    /// Relative tolerance of the angular integral.
    pub angular_tol: T,
}

impl<T: Real> Default for RadialQuadrature<T> {
    fn default() -> Self {
        Self {
            time_panels: 2,
            space_panels: 2,
            window: T::lit(8.0),
            angular_tol: T::lit(1e-10),
        }
    }
}

/// Radial source `f(t, r)` vanishing outside `r ∈ [support.0, support.1]`.
pub struct RadialSource<'a, T> {
    pub profile: &'a (dyn Fn(T, T) -> T + Sync),
    pub support: (T, T),
}

/// `u(t, x) = ∫_0^{T-t} ∫_0^∞ p(s, x, r) f(t+s, r) dr ds`.
pub fn radial_value<T: Real>(
    model: &RadialModel<T>,
    source: &RadialSource<'_, T>,
    horizon: T,
    t: T,
    x: T,
    quad: &RadialQuadrature<T>,
) -> Result<T> {
    if t >= horizon {
        return Ok(T::zero());
    }
    let tol = Tolerance::new(0.0, quad.angular_tol.as_f64());
    let (lo, hi) = source.support;
    let mut failure = None;
    let value = fixed_panels(
        |sigma: T| {
            let s = sigma * sigma;
            if s == T::zero() || failure.is_some() {
                return T::zero();
            }
            let a = lo.max(x - quad.window * sigma);
            let b = hi.min(x + quad.window * sigma);
            if a >= b {
                return T::zero();
            }
            let inner = fixed_panels(
                |r: T| match radial_kernel_with(model, s, x, r, tol) {
                    Ok(p) => p * (source.profile)(t + s, r),
                    Err(e) => {
                        failure = Some(e);
                        T::zero()
                    }
                },
                a,
                b,
                quad.space_panels,
            );
            T::lit(2.0) * sigma * inner
        },
        T::zero(),
        (horizon - t).sqrt(),
        quad.time_panels,
    );
    match failure {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

/// Radial solution on a `(t, |x|)` tensor grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialSolution<T> {
    pub times: Vec<T>,
    pub radii: Vec<T>,
    /// Row-major: `values[i * radii.len() + j] = u(times[i], radii[j])`.
    pub values: Vec<T>,
}

impl<T: Real> RadialSolution<T> {
    pub fn at(&self, i: usize, j: usize) -> T {
        self.values[i * self.radii.len() + j]
    }
}

pub fn radial_solution<T: Real>(
    model: &RadialModel<T>,
    source: &RadialSource<'_, T>,
    horizon: T,
    times: &[T],
    radii: &[T],
    quad: &RadialQuadrature<T>,
) -> Result<RadialSolution<T>> {
    let cells: Vec<(T, T)> = times
        .iter()
        .flat_map(|&t| radii.iter().map(move |&x| (t, x)))
        .collect();
    let values = cells
        .par_iter()
        .map(|&(t, x)| radial_value(model, source, horizon, t, x, quad))
        .collect::<Result<Vec<T>>>()?;
    Ok(RadialSolution {
        times: times.to_vec(),
        radii: radii.to_vec(),
        values,
    })
}

/// Probe points of the residual check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualProbes<T> {
    pub times: Vec<T>,
    pub radii: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport<T> {
    pub step: T,
    /// Probes closer than this to the origin are skipped.
    pub exclusion_radius: T,
    pub probed: usize,
    pub skipped: usize,
    /// Largest `|4∂_t u + Δu + b·Du + 4g|` over the probes.
    pub residual: T,
}

const EXCLUSION_STEPS: f64 = 4.0;

/// Residual of `4∂_t u + Δu + b·Du + 4g = 0` with centered differences of
/// step `step` in `t` and `|x|`, `Δ` lifted to `d` dimensions.
pub fn residual_check<T: Real>(
    model: &RadialModel<T>,
    source: &RadialSource<'_, T>,
    horizon: T,
    probes: &ResidualProbes<T>,
    step: T,
    quad: &RadialQuadrature<T>,
) -> Result<ResidualReport<T>> {
    if !(step > T::zero()) {
        return Err(Error::InvalidSpec(format!(
            "residual step must be positive, got {step}"
        )));
    }
    let exclusion = T::lit(EXCLUSION_STEPS) * step;
    let mut points = Vec::new();
    let mut skipped = 0;
    for &t in &probes.times {
        for &x in &probes.radii {
            if x < exclusion || t - step < T::zero() || t + step > horizon {
                skipped += 1;
            } else {
                points.push((t, x));
            }
        }
    }
    let d1 = T::from_usize_lossy(model.d - 1);
    let four = T::lit(4.0);
    let two = T::lit(2.0);
    let residuals = points
        .par_iter()
        .map(|&(t, x)| -> Result<T> {
            let u = |tt: T, xx: T| radial_value(model, source, horizon, tt, xx, quad);
            let centre = u(t, x)?;
            let u_t = (u(t + step, x)? - u(t - step, x)?) / (two * step);
            let right = u(t, x + step)?;
            let left = u(t, x - step)?;
            let u_x = (right - left) / (two * step);
            let u_xx = (right - two * centre + left) / (step * step);
            let laplace = u_xx + d1 * u_x / x;
            Ok((four * u_t + laplace + model.drift(x) * u_x + four * (source.profile)(t, x)).abs())
        })
        .collect::<Result<Vec<T>>>()?;
    Ok(ResidualReport {
        step,
        exclusion_radius: exclusion,
        probed: points.len(),
        skipped,
        residual: residuals.into_iter().fold(T::zero(), T::max),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualFit<T> {
    pub reports: Vec<ResidualReport<T>>,
    /// Least-squares slope of `log residual` against `log step`.
    pub order: T,
}

/// Residual checks at each step and the fitted convergence order.
pub fn residual_order<T: Real>(
    model: &RadialModel<T>,
    source: &RadialSource<'_, T>,
    horizon: T,
    probes: &ResidualProbes<T>,
    steps: &[T],
    quad: &RadialQuadrature<T>,
) -> Result<ResidualFit<T>> {
    if steps.len() < 2 {
        return Err(Error::TooFewRuns {
            valid: steps.len(),
            needed: 2,
        });
    }
    let reports = steps
        .iter()
        .map(|&h| residual_check(model, source, horizon, probes, h, quad))
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<T> = reports.iter().map(|r| r.step.ln()).collect();
    let ys: Vec<T> = reports.iter().map(|r| r.residual.ln()).collect();
    let order = if reports.iter().all(|r| r.residual > T::zero()) {
        ls_slope(&xs, &ys)
    } else {
        T::infinity()
    };
    Ok(ResidualFit { reports, order })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gamma;

    #[test]
    fn normalization_matches_gamma() {
        assert!(
            (normalization_c(2.0f64).unwrap() - 2.0 / std::f64::consts::PI.sqrt()).abs() < 1e-10
        );
        assert!((normalization_c(1.0f64).unwrap() - 2.0 / std::f64::consts::PI).abs() < 1e-10);
        for a in [0.5f64, 0.9, 1.8] {
            let oracle = 2.0 / (std::f64::consts::PI.sqrt() * gamma(a / 2.0));
            let c = normalization_c(a).unwrap();
            assert!((c / oracle - 1.0).abs() < 1e-3, "{a}: {c} vs {oracle}");
        }
        assert!(normalization_c(0.0f64).is_err());
        assert!(normalization_c(-1.0f64).is_err());
    }

    #[test]
    fn model_rejects_bad_parameters() {
        assert!(RadialModel::new(1, 0.5f64).is_err());
        assert!(RadialModel::new(2, 1.0f64).is_err());
        assert!(RadialModel::new(2, 0.0f64).is_err());
        let m = RadialModel::new(3, 0.5f64).unwrap();
        assert!((m.alpha - 1.0).abs() < 1e-15);
    }

    #[test]
    fn kernel_basics() {
        let m = RadialModel::new(2, 0.9f64).unwrap();
        assert_eq!(radial_kernel(&m, 0.3, 0.7, 0.0).unwrap(), 0.0);
        assert!(radial_kernel(&m, 0.0, 0.7, 0.2).is_err());
        assert!(radial_kernel(&m, 0.3, 0.7, 0.2).unwrap() > 0.0);
    }

    #[test]
    fn zero_source_and_terminal_time() {
        let m = RadialModel::new(2, 0.9f64).unwrap();
        let zero = |_: f64, _: f64| 0.0;
        let src = RadialSource {
            profile: &zero,
            support: (1.0, 2.0),
        };
        let q = RadialQuadrature::default();
        assert_eq!(radial_value(&m, &src, 1.0, 0.2, 1.0, &q).unwrap(), 0.0);
        let one = |_: f64, _: f64| 1.0;
        let src = RadialSource {
            profile: &one,
            support: (1.0, 2.0),
        };
        assert_eq!(radial_value(&m, &src, 1.0, 1.0, 1.5, &q).unwrap(), 0.0);
    }
}
