//! Euler–Maruyama paths of `dx = b(t, x) dt + √2 dw` and the path functionals
//! built on them.
//!
//! Every path draws its Brownian increments from its own ChaCha8 stream
//! (`seed`, stream = path index), so results do not depend on how paths are
//! scheduled across threads. Fields are read along paths by multilinear
//! interpolation in space (at the position clamped to the box) and from the
//! nearest time slice. Stochastic integrals use the left-point (Itô) rule.

mod estimators;

pub use estimators::{
    exp_moment_check, feynman_kac, perturbed_value, second_moment_check, Estimator, ExpMoment,
    McEstimate, PerturbedValue, SecondMoment,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{Grid, ScalarField, VectorField};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McSettings<T> {
    pub n_paths: usize,
    pub dt_mc: T,
    pub seed: u64,
}

impl<T: Real> McSettings<T> {
    pub fn new(n_paths: usize, dt_mc: T, seed: u64) -> Result<Self> {
        if n_paths < 2 {
            return Err(Error::InvalidSpec(
                "Monte Carlo needs at least 2 paths".into(),
            ));
        }
        if !(dt_mc > T::zero() && dt_mc.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "time step {dt_mc} must be positive"
            )));
        }
        Ok(Self {
            n_paths,
            dt_mc,
            seed,
        })
    }
}

/// Starting time and position of the paths; only the first `d` coordinates
/// of `x` are used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StartPoint<T> {
    pub t: T,
    pub x: [T; 3],
}

impl<T: Real> StartPoint<T> {
    pub fn new(t: T, x: &[T]) -> Self {
        let mut p = [T::zero(); 3];
        p[..x.len()].copy_from_slice(x);
        Self { t, x: p }
    }

    pub fn origin() -> Self {
        Self {
            t: T::zero(),
            x: [T::zero(); 3],
        }
    }
}

/// Reads fields at off-grid points.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Sampler<T> {
    grid: Grid<T>,
}

impl<T: Real> Sampler<T> {
    pub(crate) fn new(grid: Grid<T>) -> Self {
        Self { grid }
    }

    pub(crate) fn slice_index(&self, t: T) -> usize {
        let i = (t / self.grid.dt()).round().to_usize().unwrap_or(0);
        i.min(self.grid.n_t())
    }

    /// Corner node indices and weights of the cell containing the clamped `x`.
    fn corners(&self, x: &[T]) -> ([usize; 8], [T; 8], usize) {
        let g = &self.grid;
        let d = g.d();
        let n = g.n_x();
        let mut base = [0usize; 3];
        let mut frac = [T::zero(); 3];
        for a in 0..d {
            let pos = ((x[a] + g.half_width()) / g.h())
                .max(T::zero())
                .min(T::from_usize_lossy(n));
            let j = pos.floor().to_usize().unwrap_or(0).min(n - 1);
            base[a] = j;
            frac[a] = pos - T::from_usize_lossy(j);
        }
        let mut idx = [0usize; 8];
        let mut w = [T::zero(); 8];
        let count = 1 << d;
        for (c, (ic, wc)) in idx.iter_mut().zip(w.iter_mut()).enumerate().take(count) {
            let mut node = [0usize; 3];
            let mut weight = T::one();
            for a in 0..d {
                let up = (c >> a) & 1 == 1;
                node[a] = base[a] + usize::from(up);
                weight = weight * if up { frac[a] } else { T::one() - frac[a] };
            }
            *ic = g.ravel(&node[..d]);
            *wc = weight;
        }
        (idx, w, count)
    }

    pub(crate) fn scalar(&self, f: &ScalarField<T>, t: T, x: &[T]) -> T {
        let sl = f.slice(self.slice_index(t));
        let (idx, w, count) = self.corners(x);
        (0..count).fold(T::zero(), |acc, c| acc + w[c] * sl[idx[c]])
    }

    pub(crate) fn vector(&self, b: &VectorField<T>, t: T, x: &[T], out: &mut [T]) {
        let i = self.slice_index(t);
        let (idx, w, count) = self.corners(x);
        out.iter_mut().for_each(|v| *v = T::zero());
        for c in 0..count {
            let v = b.at(i, idx[c]);
            for (o, &vv) in out.iter_mut().zip(v) {
                *o = *o + w[c] * vv;
            }
        }
    }

    pub(crate) fn inside(&self, x: &[T]) -> bool {
        x.iter().all(|v| v.abs() <= self.grid.half_width())
    }
}

/// Time stepping shared by all path functionals.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Walker<'a, T: Real> {
    pub(crate) sampler: Sampler<T>,
    pub(crate) drift: Option<&'a VectorField<T>>,
    pub(crate) start: StartPoint<T>,
    pub(crate) n_steps: usize,
    pub(crate) dt: T,
    pub(crate) seed: u64,
}

impl<'a, T: Real> Walker<'a, T> {
    pub(crate) fn new(
        grid: Grid<T>,
        drift: Option<&'a VectorField<T>>,
        start: StartPoint<T>,
        settings: &McSettings<T>,
    ) -> Result<Self> {
        let remaining = grid.horizon() - start.t;
        if !(start.t >= T::zero() && remaining > T::zero()) {
            return Err(Error::InvalidSpec(format!(
                "start time {} outside [0, {})",
                start.t,
                grid.horizon()
            )));
        }
        if let Some(b) = drift {
            grid.check_same(b.grid(), "drift and sampled field")?;
            if !b.is_finite() {
                return Err(Error::NonFinite("drift".into()));
            }
        }
        let n_steps = (remaining / settings.dt_mc - T::lit(1e-9))
            .ceil()
            .to_usize()
            .unwrap_or(1)
            .max(1);
        Ok(Self {
            sampler: Sampler::new(grid),
            drift,
            start,
            n_steps,
            dt: remaining / T::from_usize_lossy(n_steps),
            seed: settings.seed,
        })
    }

    pub(crate) fn time(&self, k: usize) -> T {
        self.start.t + T::from_usize_lossy(k) * self.dt
    }

    /// Runs path `path`, calling `visit(k, t_k, x_k, b(t_k, x_k), Δw_k)` before
    /// each step. Returns the final position and whether the path left the box.
    pub(crate) fn walk<F: FnMut(usize, T, &[T], &[T], &[T])>(
        &self,
        path: usize,
        mut visit: F,
    ) -> ([T; 3], bool) {
        let d = self.sampler.grid.d();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(path as u64);
        let sd = self.dt.sqrt();
        let root2 = T::lit(2.0).sqrt();
        let mut x = self.start.x;
        let mut b = [T::zero(); 3];
        let mut dw = [T::zero(); 3];
        let mut exited = false;
        for k in 0..self.n_steps {
            let t = self.time(k);
            for v in dw.iter_mut().take(d) {
                let z: f64 = rng.sample(StandardNormal);
                *v = T::lit(z) * sd;
            }
            match self.drift {
                Some(field) => self.sampler.vector(field, t, &x[..d], &mut b[..d]),
                None => b[..d].iter_mut().for_each(|v| *v = T::zero()),
            }
            visit(k, t, &x[..d], &b[..d], &dw[..d]);
            for a in 0..d {
                x[a] = x[a] + b[a] * self.dt + root2 * dw[a];
            }
            if !self.sampler.inside(&x[..d]) {
                exited = true;
            }
        }
        (x, exited)
    }

    /// Flags `dt · sup |b| > h / 2`.
    pub(crate) fn overshoot(&self) -> bool {
        match self.drift {
            Some(b) => self.dt * b.magnitude().max_value() > self.sampler.grid.h() / T::lit(2.0),
            None => false,
        }
    }
}

/// Stored trajectories and increments of a simulated ensemble.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathEnsemble<T> {
    pub n_paths: usize,
    pub n_steps: usize,
    pub d: usize,
    /// Effective step `(T - t) / n_steps`.
    pub dt_mc: T,
    pub start: StartPoint<T>,
    pub seed: u64,
    /// `n_paths × (n_steps + 1) × d` positions.
    pub positions: Vec<T>,
    /// `n_paths × n_steps × d` Brownian increments.
    pub increments: Vec<T>,
    /// Fraction of paths that left the box at some step.
    pub exit_fraction: T,
    /// True when one step can move the drift part by more than half a cell.
    pub drift_overshoot: bool,
}

impl<T: Real> PathEnsemble<T> {
    pub fn position(&self, path: usize, k: usize) -> &[T] {
        let o = (path * (self.n_steps + 1) + k) * self.d;
        &self.positions[o..o + self.d]
    }

    pub fn increment(&self, path: usize, k: usize) -> &[T] {
        let o = (path * self.n_steps + k) * self.d;
        &self.increments[o..o + self.d]
    }

    pub fn time(&self, k: usize) -> T {
        self.start.t + T::from_usize_lossy(k) * self.dt_mc
    }
}

/// Simulates and stores `settings.n_paths` paths of the `b`-diffusion.
pub fn simulate<T: Real>(
    b: &VectorField<T>,
    start: StartPoint<T>,
    settings: &McSettings<T>,
) -> Result<PathEnsemble<T>> {
    let grid = *b.grid();
    let walker = Walker::new(grid, Some(b), start, settings)?;
    let d = grid.d();
    let n_steps = walker.n_steps;
    let per_path: Vec<(Vec<T>, Vec<T>, bool)> = (0..settings.n_paths)
        .into_par_iter()
        .map(|p| {
            let mut pos = Vec::with_capacity((n_steps + 1) * d);
            let mut inc = Vec::with_capacity(n_steps * d);
            let (last, exited) = walker.walk(p, |_, _, x, _, dw| {
                pos.extend_from_slice(x);
                inc.extend_from_slice(dw);
            });
            pos.extend_from_slice(&last[..d]);
            (pos, inc, exited)
        })
        .collect();
    let exits = per_path.iter().filter(|p| p.2).count();
    let mut positions = Vec::with_capacity(settings.n_paths * (n_steps + 1) * d);
    let mut increments = Vec::with_capacity(settings.n_paths * n_steps * d);
    for (pos, inc, _) in per_path {
        positions.extend(pos);
        increments.extend(inc);
    }
    Ok(PathEnsemble {
        n_paths: settings.n_paths,
        n_steps,
        d,
        dt_mc: walker.dt,
        start,
        seed: settings.seed,
        positions,
        increments,
        exit_fraction: T::from_usize_lossy(exits) / T::from_usize_lossy(settings.n_paths),
        drift_overshoot: walker.overshoot(),
    })
}

/// `φ = 2^{-1/2} Σ b(t_k, x_k)·Δw_k - ¼ Σ |b(t_k, x_k)|² Δt` along the stored
/// paths of `ens`, with `b` read at the stored positions.
pub fn girsanov_phi<T: Real>(ens: &PathEnsemble<T>, b: &VectorField<T>) -> Vec<T> {
    let sampler = Sampler::new(*b.grid());
    let inv_root2 = T::one() / T::lit(2.0).sqrt();
    let quarter = T::lit(0.25);
    (0..ens.n_paths)
        .into_par_iter()
        .map(|p| {
            let mut v = [T::zero(); 3];
            let mut phi = T::zero();
            for k in 0..ens.n_steps {
                sampler.vector(b, ens.time(k), ens.position(p, k), &mut v[..ens.d]);
                let dw = ens.increment(p, k);
                let mut dot = T::zero();
                let mut sq = T::zero();
                for a in 0..ens.d {
                    dot = dot + v[a] * dw[a];
                    sq = sq + v[a] * v[a];
                }
                phi = phi + inv_root2 * dot - quarter * sq * ens.dt_mc;
            }
            phi
        })
        .collect()
}
