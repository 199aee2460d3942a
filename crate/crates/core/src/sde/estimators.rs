//! Monte Carlo estimators along Euler–Maruyama paths.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{McSettings, Sampler, StartPoint, Walker};
use crate::error::Result;
use crate::fields::{mixed_norm, MixedNormSpec, ScalarField, VectorField};
use crate::scalar::{mean_and_se, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Estimator {
    /// Paths of the drifted diffusion.
    Drifted,
    /// Driftless paths weighted by `e^φ`.
    Weighted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEstimate<T> {
    pub value: T,
    pub se: T,
    pub n_paths: usize,
    pub exit_fraction: T,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpMoment<T> {
    pub lambda: T,
    /// Sample mean of `e^{λφ}`.
    pub estimate: T,
    pub se: T,
    /// `e^{λ² S / 4}` with `S = Σ_k sup_x |B(t_k)|² Δt` over the path steps.
    pub bound: T,
    pub bracket: T,
    pub exit_fraction: T,
}

impl<T: Real> ExpMoment<T> {
    /// `estimate ≤ bound + 3 SE`.
    pub fn within_bound(&self) -> bool {
        self.estimate <= self.bound + T::lit(3.0) * self.se
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbedValue<T> {
    /// Sample mean of `e^ψ ∫ f ds` along paths of the `b`-diffusion.
    pub value: T,
    pub se: T,
    /// `√2 e^{S/2} N₀ (T-t)^{1-d/(2p)-1/q} ‖f‖`.
    pub certified_bound: T,
    pub bracket: T,
    /// Sample mean of `e^{2ψ}` and its SE.
    pub exp_two_psi: T,
    pub exp_two_psi_se: T,
    /// Sample mean of `(∫ f ds)²` and its SE.
    pub integral_square: T,
    pub integral_square_se: T,
    /// `(E e^{2ψ})^{1/2} (E (∫ f ds)²)^{1/2}`.
    pub cauchy_schwarz: T,
    pub exit_fraction: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecondMoment<T> {
    /// `E (∫ f ds)²`.
    pub lhs: T,
    pub lhs_se: T,
    /// `2 E ∫ f u ds`.
    pub rhs: T,
    pub rhs_se: T,
    /// SE of the paired difference `lhs - rhs`.
    pub difference_se: T,
    pub exit_fraction: T,
}

const EXIT_WARNING: f64 = 0.01;

/// Per-path record: values of the functionals and whether the path exited.
fn run_paths<T, F>(walker: &Walker<'_, T>, n_paths: usize, per_path: F) -> (Vec<Vec<T>>, T)
where
    T: Real,
    F: Fn(&Walker<'_, T>, usize) -> (Vec<T>, bool) + Sync,
{
    let rows: Vec<(Vec<T>, bool)> = (0..n_paths)
        .into_par_iter()
        .map(|p| per_path(walker, p))
        .collect();
    let exits = rows.iter().filter(|r| r.1).count();
    let width = rows.first().map_or(0, |r| r.0.len());
    let mut columns = vec![Vec::with_capacity(n_paths); width];
    for (vals, _) in rows {
        for (c, v) in columns.iter_mut().zip(vals) {
            c.push(v);
        }
    }
    (
        columns,
        T::from_usize_lossy(exits) / T::from_usize_lossy(n_paths),
    )
}

fn warnings<T: Real>(walker: &Walker<'_, T>, exit_fraction: T) -> Vec<String> {
    let mut w = Vec::new();
    if walker.overshoot() {
        w.push("drift moves more than half a cell per Monte Carlo step".to_string());
    }
    if exit_fraction > T::lit(EXIT_WARNING) {
        w.push(format!("{exit_fraction} of the paths left the box"));
    }
    w
}

fn dot_and_square<T: Real>(v: &[T], dw: &[T]) -> (T, T) {
    v.iter()
        .zip(dw)
        .fold((T::zero(), T::zero()), |(d, s), (&a, &w)| {
            (d + a * w, s + a * a)
        })
}

/// Itô increment of the Girsanov exponent for drift value `v`.
fn phi_step<T: Real>(v: &[T], dw: &[T], dt: T) -> T {
    let (dot, sq) = dot_and_square(v, dw);
    dot / T::lit(2.0).sqrt() - T::lit(0.25) * sq * dt
}

/// `Σ_k sup_x |B(t_k, ·)|² Δt` over the steps of `walker`.
fn discrete_bracket<T: Real>(walker: &Walker<'_, T>, part: &VectorField<T>) -> T {
    let mag = part.magnitude();
    let mut s = T::zero();
    for k in 0..walker.n_steps {
        let i = walker.sampler.slice_index(walker.time(k));
        let m = mag.slice(i).iter().fold(T::zero(), |m, &v| m.max(v));
        s = s + m * m * walker.dt;
    }
    s
}

/// `u(t, x) = E ∫_0^{T-t} f(t+s, x_s) ds` for `∂_t u + Δu + b·Du = -f`.
pub fn feynman_kac<T: Real>(
    b: &VectorField<T>,
    f: &ScalarField<T>,
    start: StartPoint<T>,
    settings: &McSettings<T>,
    estimator: Estimator,
) -> Result<McEstimate<T>> {
    let grid = *f.grid();
    let drift = match estimator {
        Estimator::Drifted => Some(b),
        Estimator::Weighted => None,
    };
    grid.check_same(b.grid(), "drift and source")?;
    let walker = Walker::new(grid, drift, start, settings)?;
    let sampler = Sampler::new(grid);
    let d = grid.d();
    let (cols, exit_fraction) = run_paths(&walker, settings.n_paths, |w, p| {
        let mut integral = T::zero();
        let mut phi = T::zero();
        let mut v = [T::zero(); 3];
        let (_, exited) = w.walk(p, |_, t, x, _, dw| {
            integral = integral + sampler.scalar(f, t, x) * w.dt;
            if estimator == Estimator::Weighted {
                sampler.vector(b, t, x, &mut v[..d]);
                phi = phi + phi_step(&v[..d], dw, w.dt);
            }
        });
        (vec![phi.exp() * integral], exited)
    });
    let (value, se) = mean_and_se(&cols[0]);
    Ok(McEstimate {
        value,
        se,
        n_paths: settings.n_paths,
        exit_fraction,
        warnings: warnings(&walker, exit_fraction),
    })
}

/// `E e^{λφ}` along driftless paths, with `φ` built from `part`, against
/// the bound `e^{λ² S / 4}`.
pub fn exp_moment_check<T: Real>(
    part: &VectorField<T>,
    lambda: T,
    start: StartPoint<T>,
    settings: &McSettings<T>,
) -> Result<ExpMoment<T>> {
    let grid = *part.grid();
    let walker = Walker::new(grid, None, start, settings)?;
    let sampler = Sampler::new(grid);
    let d = grid.d();
    let (cols, exit_fraction) = run_paths(&walker, settings.n_paths, |w, p| {
        let mut phi = T::zero();
        let mut v = [T::zero(); 3];
        let (_, exited) = w.walk(p, |_, t, x, _, dw| {
            sampler.vector(part, t, x, &mut v[..d]);
            phi = phi + phi_step(&v[..d], dw, w.dt);
        });
        (vec![(lambda * phi).exp()], exited)
    });
    let (estimate, se) = mean_and_se(&cols[0]);
    let bracket = discrete_bracket(&walker, part);
    Ok(ExpMoment {
        lambda,
        estimate,
        se,
        bound: (lambda * lambda * bracket / T::lit(4.0)).exp(),
        bracket,
        exit_fraction,
    })
}

/// Value of the problem with drift `b + part`, estimated on paths of the
/// `b`-diffusion weighted by `e^ψ`, with the certified bound built from the
/// constant `n0` measured for drift `b` alone.
#[allow(clippy::too_many_arguments)]
pub fn perturbed_value<T: Real>(
    b: &VectorField<T>,
    part: &VectorField<T>,
    f: &ScalarField<T>,
    start: StartPoint<T>,
    settings: &McSettings<T>,
    n0: T,
    spec: &MixedNormSpec<T>,
) -> Result<PerturbedValue<T>> {
    let grid = *f.grid();
    grid.check_same(part.grid(), "perturbation and source")?;
    let walker = Walker::new(grid, Some(b), start, settings)?;
    let sampler = Sampler::new(grid);
    let d = grid.d();
    let (cols, exit_fraction) = run_paths(&walker, settings.n_paths, |w, p| {
        let mut integral = T::zero();
        let mut psi = T::zero();
        let mut v = [T::zero(); 3];
        let (_, exited) = w.walk(p, |_, t, x, _, dw| {
            integral = integral + sampler.scalar(f, t, x) * w.dt;
            sampler.vector(part, t, x, &mut v[..d]);
            psi = psi + phi_step(&v[..d], dw, w.dt);
        });
        (
            vec![psi.exp() * integral, (psi + psi).exp(), integral * integral],
            exited,
        )
    });
    let (value, se) = mean_and_se(&cols[0]);
    let (exp_two_psi, exp_two_psi_se) = mean_and_se(&cols[1]);
    let (integral_square, integral_square_se) = mean_and_se(&cols[2]);
    let bracket = discrete_bracket(&walker, part);
    let span = grid.horizon() - start.t;
    let exponent = T::one() - T::from_usize_lossy(d) / (T::lit(2.0) * spec.p) - T::one() / spec.q;
    let certified_bound = T::lit(2.0).sqrt()
        * (bracket / T::lit(2.0)).exp()
        * n0
        * span.powf(exponent)
        * mixed_norm(f, spec)?;
    Ok(PerturbedValue {
        value,
        se,
        certified_bound,
        bracket,
        exp_two_psi,
        exp_two_psi_se,
        integral_square,
        integral_square_se,
        cauchy_schwarz: (exp_two_psi * integral_square).sqrt(),
        exit_fraction,
    })
}

/// Both sides of `E (∫ f ds)² = 2 E ∫ f u ds` along paths of the `b`-diffusion.
pub fn second_moment_check<T: Real>(
    b: &VectorField<T>,
    f: &ScalarField<T>,
    u: &ScalarField<T>,
    start: StartPoint<T>,
    settings: &McSettings<T>,
) -> Result<SecondMoment<T>> {
    let grid = *f.grid();
    grid.check_same(u.grid(), "source and solution")?;
    let walker = Walker::new(grid, Some(b), start, settings)?;
    let sampler = Sampler::new(grid);
    let (cols, exit_fraction) = run_paths(&walker, settings.n_paths, |w, p| {
        let mut integral = T::zero();
        let mut cross = T::zero();
        let (_, exited) = w.walk(p, |_, t, x, _, _| {
            let fv = sampler.scalar(f, t, x);
            integral = integral + fv * w.dt;
            cross = cross + fv * sampler.scalar(u, t, x) * w.dt;
        });
        let lhs = integral * integral;
        let rhs = T::lit(2.0) * cross;
        (vec![lhs, rhs, lhs - rhs], exited)
    });
    let (lhs, lhs_se) = mean_and_se(&cols[0]);
    let (rhs, rhs_se) = mean_and_se(&cols[1]);
    let (_, difference_se) = mean_and_se(&cols[2]);
    Ok(SecondMoment {
        lhs,
        lhs_se,
        rhs,
        rhs_se,
        difference_se,
        exit_fraction,
    })
}
