//! Regression fits of the reproduction and composition constants.

use serde::Serialize;

use super::{potential_apply, KernelParams};
use crate::error::{Error, Result};
use crate::fields::{Grid, ScalarField};
use crate::scalar::Real;
use crate::special::beta;

/// Grid and test-profile data for a constant fit. The test profile is
/// `exp(-(t-t0)²/τ² - |x|²/w²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitSettings<T> {
    pub d: usize,
    pub half_width: T,
    pub n_x: usize,
    pub horizon: T,
    pub n_t: usize,
    pub center_time: T,
    pub time_width: T,
    pub space_width: T,
}

impl<T: Real> FitSettings<T> {
    /// Reproduction settings that run in seconds on one core.
    pub fn reproduction_default(d: usize) -> Self {
        let (n_x, n_t) = match d {
            1 => (192, 64),
            2 => (64, 48),
            _ => (32, 32),
        };
        Self {
            d,
            half_width: T::lit(3.0),
            n_x,
            horizon: T::one(),
            n_t,
            center_time: T::lit(0.5),
            time_width: T::lit(0.15),
            space_width: T::lit(0.5),
        }
    }

    /// Composition settings: a wider box, since both potentials spread.
    pub fn composition_default(d: usize) -> Self {
        let (n_x, n_t) = match d {
            1 => (192, 64),
            2 => (64, 32),
            _ => (32, 24),
        };
        Self {
            d,
            half_width: T::lit(6.0),
            n_x,
            horizon: T::one(),
            n_t,
            center_time: T::lit(0.5),
            time_width: T::lit(0.15),
            space_width: T::lit(0.5),
        }
    }

    /// Same physical setup with half the nodes per axis and in time.
    pub fn coarsened(&self) -> Self {
        Self {
            n_x: self.n_x / 2,
            n_t: self.n_t / 2,
            ..*self
        }
    }

    pub fn grid(&self) -> Result<Grid<T>> {
        Grid::new(self.d, self.half_width, self.n_x, self.horizon, self.n_t)
    }

    pub fn grid_id(&self) -> String {
        format!("d{}_nx{}_nt{}", self.d, self.n_x, self.n_t)
    }

    fn profile(&self, t: T, x: &[T]) -> T {
        let r2 = x.iter().fold(T::zero(), |a, &v| a + v * v);
        let dt = (t - self.center_time) / self.time_width;
        (-(dt * dt) - r2 / (self.space_width * self.space_width)).exp()
    }
}

/// Result of a constant fit at one resolution, with a Richardson
/// extrapolation against the half-resolution fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantFit<T> {
    /// Fitted constant on the requested grid.
    pub value: T,
    /// Fitted constant on the half-resolution grid.
    pub coarse: T,
    /// `value + (value - coarse) / 3`.
    pub extrapolated: T,
    /// `max |lhs - c rhs| / max |lhs|` on the requested grid.
    pub residual: T,
    pub coarse_residual: T,
}

/// One CSV row of a constants table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantRow {
    pub d: usize,
    pub alpha: f64,
    pub beta: f64,
    pub k: f64,
    pub fitted_value: f64,
    pub residual: f64,
    pub grid_id: String,
}

const RESIDUAL_LIMIT: f64 = 0.1;

/// Least-squares `c` minimizing `|lhs - c rhs|` over nodes off the faces and
/// before the horizon, with the relative sup residual.
fn regress<T: Real>(lhs: &ScalarField<T>, rhs: &ScalarField<T>) -> Result<(T, T)> {
    let grid = lhs.grid();
    let mut num = T::zero();
    let mut den = T::zero();
    let mut scale = T::zero();
    let interior = |s: usize| grid.boundary_distance(s) >= 1;
    for i in 0..grid.n_t() {
        for s in (0..grid.slice_len()).filter(|&s| interior(s)) {
            let (a, b) = (lhs.at(i, s), rhs.at(i, s));
            num = num + a * b;
            den = den + b * b;
            scale = scale.max(a.abs());
        }
    }
    if den <= T::zero() || scale <= T::zero() {
        return Err(Error::Quadrature(
            "regression data vanish identically".into(),
        ));
    }
    let c = num / den;
    let mut worst = T::zero();
    for i in 0..grid.n_t() {
        for s in (0..grid.slice_len()).filter(|&s| interior(s)) {
            worst = worst.max((lhs.at(i, s) - c * rhs.at(i, s)).abs());
        }
    }
    Ok((c, worst / scale))
}

fn flag_coarse<T: Real>(residual: T, what: &str, settings: &FitSettings<T>) -> Result<()> {
    if !(residual <= T::lit(RESIDUAL_LIMIT)) {
        return Err(Error::Quadrature(format!(
            "{what} residual {residual} exceeds {RESIDUAL_LIMIT} on grid {}: grid too coarse",
            settings.grid_id()
        )));
    }
    Ok(())
}

/// Fits `u ≈ c P_{2,4}(∂_t u + Δu)` at one resolution; returns `(c, residual)`.
pub fn reproduction_fit<T: Real>(settings: &FitSettings<T>) -> Result<(T, T)> {
    let grid = settings.grid()?;
    let d = T::from_usize_lossy(settings.d);
    let u = ScalarField::from_fn(grid, |t, x| settings.profile(t, x));
    let w2 = settings.space_width * settings.space_width;
    let tau2 = settings.time_width * settings.time_width;
    let g = ScalarField::from_fn(grid, |t, x| {
        let r2 = x.iter().fold(T::zero(), |a, &v| a + v * v);
        let dt_u = -T::lit(2.0) * (t - settings.center_time) / tau2;
        let lap = T::lit(4.0) * r2 / (w2 * w2) - T::lit(2.0) * d / w2;
        (dt_u + lap) * settings.profile(t, x)
    });
    let p = potential_apply(
        &g,
        &KernelParams::new(T::lit(2.0), T::lit(4.0), settings.d)?,
    )?;
    regress(&u, &p)
}

fn richardson<T: Real>(fine: (T, T), coarse: (T, T)) -> ConstantFit<T> {
    ConstantFit {
        value: fine.0,
        coarse: coarse.0,
        extrapolated: fine.0 + (fine.0 - coarse.0) / T::lit(3.0),
        residual: fine.1,
        coarse_residual: coarse.1,
    }
}

/// Signed reproduction constant with the given settings and their
/// half-resolution counterpart.
pub fn reproduction_constant_with<T: Real>(settings: &FitSettings<T>) -> Result<ConstantFit<T>> {
    let fine = reproduction_fit(settings)?;
    flag_coarse(fine.1, "reproduction", settings)?;
    let coarse = reproduction_fit(&settings.coarsened())?;
    Ok(richardson(fine, coarse))
}

/// Signed reproduction constant on the default grid for dimension `d`.
pub fn reproduction_constant<T: Real>(d: usize) -> Result<ConstantFit<T>> {
    if !(1..=3).contains(&d) {
        return Err(Error::InvalidSpec(format!(
            "dimension {d} not in {{1,2,3}}"
        )));
    }
    reproduction_constant_with(&FitSettings::reproduction_default(d))
}

/// Expected magnitude `(4π)^{-d/2}` of the reproduction constant.
pub fn reproduction_oracle<T: Real>(d: usize) -> T {
    (T::lit(4.0) * T::PI()).powf(-T::from_usize_lossy(d) / T::lit(2.0))
}

fn check_orders<T: Real>(alpha: T, beta: T) -> Result<()> {
    if !(alpha >= T::one() && beta >= T::one() && alpha + beta <= T::lit(4.0)) {
        return Err(Error::InvalidSpec(format!(
            "composition needs alpha, beta >= 1 and alpha + beta <= 4, got ({alpha}, {beta})"
        )));
    }
    Ok(())
}

/// Fits `P_α P_β f ≈ c P_{α+β} f` at one resolution; returns `(c, residual)`.
pub fn composition_fit<T: Real>(
    alpha: T,
    beta: T,
    k: T,
    settings: &FitSettings<T>,
) -> Result<(T, T)> {
    check_orders(alpha, beta)?;
    let grid = settings.grid()?;
    let f = ScalarField::from_fn(grid, |t, x| settings.profile(t, x));
    let inner = potential_apply(&f, &KernelParams::new(beta, k, settings.d)?)?;
    let lhs = potential_apply(&inner, &KernelParams::new(alpha, k, settings.d)?)?;
    let rhs = potential_apply(&f, &KernelParams::new(alpha + beta, k, settings.d)?)?;
    regress(&lhs, &rhs)
}

pub fn composition_constant_with<T: Real>(
    alpha: T,
    beta: T,
    k: T,
    settings: &FitSettings<T>,
) -> Result<ConstantFit<T>> {
    let fine = composition_fit(alpha, beta, k, settings)?;
    flag_coarse(fine.1, "composition", settings)?;
    let coarse = composition_fit(alpha, beta, k, &settings.coarsened())?;
    Ok(richardson(fine, coarse))
}

/// Composition constant on the default grid for dimension `d`.
pub fn composition_constant<T: Real>(alpha: T, beta: T, k: T, d: usize) -> Result<ConstantFit<T>> {
    if !(1..=3).contains(&d) {
        return Err(Error::InvalidSpec(format!(
            "dimension {d} not in {{1,2,3}}"
        )));
    }
    composition_constant_with(alpha, beta, k, &FitSettings::composition_default(d))
}

/// Closed form `(πk)^{d/2} B(α/2, β/2)`.
pub fn composition_oracle<T: Real>(alpha: T, beta_order: T, k: T, d: usize) -> T {
    let two = T::lit(2.0);
    (T::PI() * k).powf(T::from_usize_lossy(d) / two) * beta(alpha / two, beta_order / two)
}

impl<T: Real> ConstantFit<T> {
    pub fn row(&self, d: usize, alpha: T, beta: T, k: T, grid_id: String) -> ConstantRow {
        ConstantRow {
            d,
            alpha: alpha.as_f64(),
            beta: beta.as_f64(),
            k: k.as_f64(),
            fitted_value: self.value.as_f64(),
            residual: self.residual.as_f64(),
            grid_id,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_values() {
        assert!((composition_oracle(1.0f64, 1.0, 4.0, 1) - 11.1366559937).abs() < 1e-6);
        assert!(
            (composition_oracle(2.0f64, 2.0, 4.0, 1) - (4.0 * std::f64::consts::PI).sqrt()).abs()
                < 1e-12
        );
        assert!((reproduction_oracle::<f64>(2) - 0.0795774715).abs() < 1e-9);
    }

    #[test]
    fn orders_are_validated() {
        let s = FitSettings::<f64>::composition_default(1);
        assert!(composition_fit(0.5, 1.0, 4.0, &s).is_err());
        assert!(composition_fit(2.0, 2.5, 4.0, &s).is_err());
        assert!(reproduction_constant::<f64>(4).is_err());
    }
}
