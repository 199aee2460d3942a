//! Backward solver for `∂_t u + Δu + b·Du = -f`, `u(T, ·) = 0`, with zero
//! Dirichlet data on the box faces.
//!
//! Each step from `t_{i+1}` to `t_i` first applies the drift and source
//! explicitly (first-order upwind differences), then the diffusion
//! implicitly, one axis at a time. Both stages are monotone as long as
//! `dt · max_x Σ_a |b_a| / h ≤ 1`, so `f ≥ 0` gives `0 ≤ u ≤ (T - t) sup f`.

mod estimate;
mod picard;

pub use estimate::{
    estimate_report, scaling_fit, ScalingFit, ScalingPoint, ScalingSetup, SolveReport,
};
pub use picard::{drift_morrey, picard_solve, PicardOptions};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{Grid, ScalarField, VectorField};
use crate::scalar::Real;

/// Outcome of capping a drift so that the explicit stage is stable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClipReport<T> {
    /// Largest admitted `|b|`.
    pub cap: T,
    pub clipped_nodes: usize,
    /// Largest distance from the origin of a clipped node (0 if none).
    pub clip_radius: T,
}

/// Caps `|b|` at `safety · h / (dt √d)`, which keeps the l1 CFL number at
/// or below `safety`.
pub fn clip_drift<T: Real>(b: &VectorField<T>, safety: T) -> (VectorField<T>, ClipReport<T>) {
    let g = *b.grid();
    let d = g.d();
    let cap = safety * g.h() / (g.dt() * T::from_usize_lossy(d).sqrt());
    let (clipped, count) = b.clipped(cap);
    let mut radius = T::zero();
    if count > 0 {
        for (k, c) in b.values().chunks(d).enumerate() {
            let n = c.iter().fold(T::zero(), |s, &v| s + v * v).sqrt();
            if n > cap {
                let x = g.position(k % g.slice_len());
                let r = x[..d].iter().fold(T::zero(), |s, &v| s + v * v).sqrt();
                radius = radius.max(r);
            }
        }
    }
    (
        clipped,
        ClipReport {
            cap,
            clipped_nodes: count,
            clip_radius: radius,
        },
    )
}

/// `dt · max Σ_a |b_a| / h`.
pub fn cfl_number<T: Real>(b: &VectorField<T>) -> T {
    let g = b.grid();
    g.dt() * b.max_l1() / g.h()
}

/// Smallest distance from a face of a node where `|f|` exceeds `1e-12 sup |f|`.
/// Returns the half width when `f` vanishes.
pub fn support_margin<T: Real>(f: &ScalarField<T>) -> T {
    let g = f.grid();
    let floor = f.values().iter().fold(T::zero(), |m, v| m.max(v.abs())) * T::lit(1e-12);
    let mut nodes = g.n_x() / 2;
    for (k, v) in f.values().iter().enumerate() {
        if v.abs() > floor {
            nodes = nodes.min(g.boundary_distance(k % g.slice_len()));
        }
    }
    T::from_usize_lossy(nodes) * g.h()
}

/// Warning text when the support of `f` comes closer than `6 √T` to a face.
pub fn margin_warning<T: Real>(f: &ScalarField<T>) -> Option<String> {
    let need = T::lit(6.0) * f.grid().horizon().sqrt();
    let margin = support_margin(f);
    (margin < need).then(|| {
        format!("support margin {margin} is below 6 sqrt(T) = {need}; face effects may be visible")
    })
}

/// Precomputed Thomas factorization of `(1 + 2λ) w_j - λ (w_{j-1} + w_{j+1})`
/// on the interior of one line.
struct Tridiagonal<T> {
    lambda: T,
    upper: Vec<T>,
    pivot: Vec<T>,
}

impl<T: Real> Tridiagonal<T> {
    fn new(lambda: T, m: usize) -> Self {
        let diag = T::one() + T::lit(2.0) * lambda;
        let mut upper = Vec::with_capacity(m);
        let mut pivot = Vec::with_capacity(m);
        for j in 0..m {
            let p = if j == 0 {
                diag
            } else {
                diag + lambda * upper[j - 1]
            };
            pivot.push(p);
            upper.push(-lambda / p);
        }
        Self {
            lambda,
            upper,
            pivot,
        }
    }

    /// Solves in place on `line[1..n-1]`, with `line[0] = line[n-1] = 0`.
    fn solve(&self, line: &mut [T]) {
        let n = line.len();
        let m = n - 2;
        line[0] = T::zero();
        line[n - 1] = T::zero();
        let x = &mut line[1..n - 1];
        x[0] = x[0] / self.pivot[0];
        for j in 1..m {
            x[j] = (x[j] + self.lambda * x[j - 1]) / self.pivot[j];
        }
        for j in (0..m - 1).rev() {
            x[j] = x[j] - self.upper[j] * x[j + 1];
        }
    }
}

fn implicit_diffusion<T: Real>(g: &Grid<T>, values: &mut [T], solver: &Tridiagonal<T>) {
    let n = g.axis_len();
    let mut line = vec![T::zero(); n];
    for axis in 0..g.d() {
        let stride = g.stride(axis);
        for base in 0..values.len() {
            if (base / stride) % n != 0 {
                continue;
            }
            for (j, l) in line.iter_mut().enumerate() {
                *l = values[base + j * stride];
            }
            solver.solve(&mut line);
            for (j, &l) in line.iter().enumerate() {
                values[base + j * stride] = l;
            }
        }
    }
}

/// `prev + dt (b·D⁺u + f)` with upwind differences, zero on the faces.
fn explicit_stage<T: Real>(g: &Grid<T>, prev: &[T], b: &[T], f: &[T], dt: T) -> Vec<T> {
    let d = g.d();
    let h = g.h();
    (0..g.slice_len())
        .into_par_iter()
        .map(|s| {
            if g.on_boundary(s) {
                return T::zero();
            }
            let mut drift = T::zero();
            for a in 0..d {
                let ba = b[s * d + a];
                let st = g.stride(a);
                let diff = if ba > T::zero() {
                    prev[s + st] - prev[s]
                } else {
                    prev[s] - prev[s - st]
                };
                drift = drift + ba * diff / h;
            }
            prev[s] + dt * (drift + f[s])
        })
        .collect()
}

/// Solves the terminal-value problem on the grid of `f`.
pub fn solve_backward<T: Real>(b: &VectorField<T>, f: &ScalarField<T>) -> Result<ScalarField<T>> {
    let g = *f.grid();
    g.check_same(b.grid(), "drift and source")?;
    if !b.is_finite() || !f.is_finite() {
        return Err(Error::NonFinite("solver input".into()));
    }
    let cfl = cfl_number(b);
    if cfl > T::one() {
        let required = g.h() / b.max_l1();
        return Err(Error::Cfl {
            cfl: cfl.as_f64(),
            required_dt: required.as_f64(),
        });
    }
    let ns = g.slice_len();
    let nd = ns * g.d();
    let dt = g.dt();
    let solver = Tridiagonal::new(dt / (g.h() * g.h()), g.axis_len() - 2);
    let mut values = vec![T::zero(); g.len()];
    for i in (0..g.n_t()).rev() {
        let (head, tail) = values.split_at_mut((i + 1) * ns);
        let prev = &tail[..ns];
        let mut next = explicit_stage(&g, prev, &b.values()[i * nd..(i + 1) * nd], f.slice(i), dt);
        implicit_diffusion(&g, &mut next, &solver);
        head[i * ns..].copy_from_slice(&next);
    }
    let u = ScalarField::from_values(g, values)?;
    if !u.is_finite() {
        return Err(Error::NonFinite("solution".into()));
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_source_gives_zero() {
        let g = Grid::<f64>::new(2, 1.0, 16, 1.0, 8).unwrap();
        let u = solve_backward(&VectorField::zeros(g), &ScalarField::zeros(g)).unwrap();
        assert!(u.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn thomas_matches_dense_solve() {
        let lambda = 0.7f64;
        let t = Tridiagonal::new(lambda, 5);
        let rhs = [0.0, 1.0, -2.0, 0.5, 3.0, 1.5, 0.0];
        let mut x = rhs;
        t.solve(&mut x);
        for j in 1..6 {
            let left = (1.0 + 2.0 * lambda) * x[j] - lambda * (x[j - 1] + x[j + 1]);
            assert!((left - rhs[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_source_gives_remaining_time() {
        let g = Grid::<f64>::new(1, 4.0, 256, 1.0, 128).unwrap();
        let f = ScalarField::from_fn(g, |_, _| 1.0);
        let u = solve_backward(&VectorField::zeros(g), &f).unwrap();
        let c = g.center();
        for i in 0..=g.n_t() {
            let exact = 1.0 - g.time(i);
            assert!((u.at(i, c) - exact).abs() <= 0.01 * exact.max(1e-3), "{i}");
        }
    }

    #[test]
    fn cfl_violation_reports_required_step() {
        let g = Grid::<f64>::new(1, 1.0, 32, 1.0, 8).unwrap();
        let b = VectorField::from_fn(g, |_, _, out| out[0] = 100.0);
        match solve_backward(&b, &ScalarField::zeros(g)) {
            Err(Error::Cfl { cfl, required_dt }) => {
                assert!((cfl - 0.125 * 100.0 / g.h()).abs() < 1e-9);
                assert!((required_dt - g.h() / 100.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        let (clipped, report) = clip_drift(&b, 0.9);
        assert_eq!(report.clipped_nodes, g.len());
        assert!(cfl_number(&clipped) <= 0.9 + 1e-12);
        assert!(solve_backward(&clipped, &ScalarField::zeros(g)).is_ok());
    }

    #[test]
    fn margin_warning_fires_near_faces() {
        let g = Grid::<f64>::new(1, 2.0, 32, 1.0, 8).unwrap();
        let near = ScalarField::from_fn(g, |_, x| if x[0].abs() < 1.5 { 1.0 } else { 0.0 });
        assert!(margin_warning(&near).is_some());
        let g = Grid::<f64>::new(1, 8.0, 64, 1.0, 8).unwrap();
        let inner = ScalarField::from_fn(g, |_, x| if x[0].abs() < 1.0 { 1.0 } else { 0.0 });
        assert!(margin_warning(&inner).is_none());
    }
}
