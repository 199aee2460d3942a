//! Measured constants of the maximum-modulus and gradient estimates, and
//! their dependence on the horizon.

use rayon::prelude::*;
use serde::Serialize;

use super::{margin_warning, solve_backward, ClipReport};
use crate::error::{Error, Result};
use crate::fields::{
    admissibility, gradient, mixed_norm, sup_norm, Admissibility, Grid, MixedNormSpec,
};
use crate::fields::{ScalarField, VectorField};
use crate::scalar::{ls_slope, Real};

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport<T: Real> {
    #[serde(skip)]
    pub u: ScalarField<T>,
    pub sup_u: T,
    pub f_norm: T,
    /// `sup |u| / ‖f‖`.
    pub ratio: T,
    /// `‖Du‖` in the doubled exponents over `‖f‖`.
    pub grad_ratio: T,
    pub iterations: Option<usize>,
    pub contraction_factor: Option<T>,
    pub clip: Option<ClipReport<T>>,
    pub warnings: Vec<String>,
}

fn quotient<T: Real>(num: T, den: T) -> T {
    if den == T::zero() {
        T::zero()
    } else {
        num / den
    }
}

impl<T: Real> SolveReport<T> {
    /// Measures `u` against `f` in the norm `spec`.
    pub fn measure(u: ScalarField<T>, f: &ScalarField<T>, spec: &MixedNormSpec<T>) -> Result<Self> {
        let sup_u = sup_norm(&u);
        let f_norm = mixed_norm(f, spec)?;
        let doubled = MixedNormSpec::new(T::lit(2.0) * spec.q, T::lit(2.0) * spec.p, spec.order)?;
        let grad = mixed_norm(&gradient(&u).magnitude(), &doubled)?;
        let mut warnings = Vec::new();
        warnings.extend(margin_warning(f));
        let report = Self {
            sup_u,
            f_norm,
            ratio: quotient(sup_u, f_norm),
            grad_ratio: quotient(grad, f_norm),
            u,
            iterations: None,
            contraction_factor: None,
            clip: None,
            warnings,
        };
        if !(report.sup_u.is_finite() && report.ratio.is_finite() && report.grad_ratio.is_finite())
        {
            return Err(Error::NonFinite("solve report".into()));
        }
        Ok(report)
    }
}

fn check_subcritical<T: Real>(spec: &MixedNormSpec<T>, d: usize) -> Result<()> {
    if !admissibility(spec.q, spec.p, d, Admissibility::Subcritical) {
        return Err(Error::InvalidSpec(format!(
            "(q, p) = ({}, {}) is not subcritical in d = {d}: need d/p + 2/q < 2",
            spec.q, spec.p
        )));
    }
    Ok(())
}

/// Solves and reports `sup |u| / ‖f‖_{q,p}` and `‖Du‖_{2q,2p} / ‖f‖_{q,p}`.
pub fn estimate_report<T: Real>(
    b: &VectorField<T>,
    f: &ScalarField<T>,
    spec: &MixedNormSpec<T>,
) -> Result<SolveReport<T>> {
    check_subcritical(spec, f.grid().d())?;
    let u = solve_backward(b, f)?;
    SolveReport::measure(u, f, spec)
}

/// Spatial grid and horizons of a scaling experiment. The box and node
/// counts stay fixed while the horizon varies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingSetup<T> {
    pub d: usize,
    pub half_width: T,
    pub n_x: usize,
    pub n_t: usize,
    pub spec: MixedNormSpec<T>,
    pub horizons: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingPoint<T> {
    pub horizon: T,
    pub sup_u: T,
    pub f_norm: T,
    pub ratio: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit<T> {
    /// Least-squares slope of `log ratio` against `log T`.
    pub slope: T,
    /// `1 - d/(2p) - 1/q`.
    pub expected: T,
    pub points: Vec<ScalingPoint<T>>,
    /// Horizons whose run failed, with the reason.
    pub skipped: Vec<(T, String)>,
}

const MIN_RUNS: usize = 3;

/// Runs the parabolically rescaled family `f_T(t,x) = T^{-1} f₁(t/T, x/√T)`,
/// `b_T(t,x) = T^{-1/2} b₁(t/T, x/√T)` for every horizon and fits the power
/// of `T` in `sup |u_T| / ‖f_T‖`. Without `b1` the drift is zero.
pub fn scaling_fit<T, F, B>(setup: &ScalingSetup<T>, f1: F, b1: Option<B>) -> Result<ScalingFit<T>>
where
    T: Real,
    F: Fn(T, &[T]) -> T + Sync,
    B: Fn(T, &[T], &mut [T]) + Sync,
{
    check_subcritical(&setup.spec, setup.d)?;
    if setup.horizons.len() < MIN_RUNS {
        return Err(Error::TooFewRuns {
            valid: setup.horizons.len(),
            needed: MIN_RUNS,
        });
    }
    let run = |horizon: T| -> Result<ScalingPoint<T>> {
        let g = Grid::new(setup.d, setup.half_width, setup.n_x, horizon, setup.n_t)?;
        let root = horizon.sqrt();
        let f = ScalarField::from_fn(g, |t, x| {
            let mut y = [T::zero(); 3];
            for (yy, &xx) in y.iter_mut().zip(x) {
                *yy = xx / root;
            }
            f1(t / horizon, &y[..x.len()]) / horizon
        });
        let b = match &b1 {
            None => VectorField::zeros(g),
            Some(b1) => VectorField::from_fn(g, |t, x, out| {
                let mut y = [T::zero(); 3];
                for (yy, &xx) in y.iter_mut().zip(x) {
                    *yy = xx / root;
                }
                b1(t / horizon, &y[..x.len()], out);
                out.iter_mut().for_each(|v| *v = *v / root);
            }),
        };
        let u = solve_backward(&b, &f)?;
        let sup_u = sup_norm(&u);
        let f_norm = mixed_norm(&f, &setup.spec)?;
        if !(f_norm > T::zero() && sup_u > T::zero()) {
            return Err(Error::Precondition("vanishing source or solution".into()));
        }
        Ok(ScalingPoint {
            horizon,
            sup_u,
            f_norm,
            ratio: sup_u / f_norm,
        })
    };
    let outcomes: Vec<(T, Result<ScalingPoint<T>>)> =
        setup.horizons.par_iter().map(|&h| (h, run(h))).collect();
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for (h, o) in outcomes {
        match o {
            Ok(p) => points.push(p),
            Err(e) => skipped.push((h, e.to_string())),
        }
    }
    if points.len() < MIN_RUNS {
        return Err(Error::TooFewRuns {
            valid: points.len(),
            needed: MIN_RUNS,
        });
    }
    let xs: Vec<T> = points.iter().map(|p| p.horizon.ln()).collect();
    let ys: Vec<T> = points.iter().map(|p| p.ratio.ln()).collect();
    let d = T::from_usize_lossy(setup.d);
    let expected = T::one() - d / (T::lit(2.0) * setup.spec.p) - T::one() / setup.spec.q;
    Ok(ScalingFit {
        slope: ls_slope(&xs, &ys),
        expected,
        points,
        skipped,
    })
}
