//! Space-time grids, discrete fields, stencils and the mixed-norm functionals.
//!
//! A [`Grid`] covers `[0, T] × [-L, L]^d` with `n_t` time steps and `n_x`
//! intervals per spatial axis, i.e. `n_t + 1` time slices and `n_x + 1` nodes
//! per axis including both boundary faces. Values are stored row-major with
//! time outermost, then `x¹, x², x³`.

mod io;
mod norms;
mod stencils;

pub use io::{
    read_scalar_binary, read_vector_binary, write_csv, write_json, write_scalar_binary,
    write_vector_binary, BinaryHeader,
};
pub use norms::{admissibility, mixed_norm, sup_norm, Admissibility, MixedNormSpec, NormOrder};
pub use stencils::{
    divergence_backward, gradient, gradient_forward, hessian_norm, laplacian, time_derivative,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid<T> {
    d: usize,
    half_width: T,
    n_x: usize,
    horizon: T,
    n_t: usize,
}

impl<T: Real> Grid<T> {
    pub fn new(d: usize, half_width: T, n_x: usize, horizon: T, n_t: usize) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(Error::InvalidGrid(format!(
                "dimension {d} not in {{1,2,3}}"
            )));
        }
        if !(half_width > T::zero() && half_width.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "half-width {half_width} must be positive"
            )));
        }
        if !(horizon > T::zero() && horizon.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "horizon {horizon} must be positive"
            )));
        }
        if n_x < 8 || n_t < 8 {
            return Err(Error::InvalidGrid(format!(
                "need n_x, n_t >= 8 (got {n_x}, {n_t})"
            )));
        }
        Ok(Self {
            d,
            half_width,
            n_x,
            horizon,
            n_t,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }
    pub fn half_width(&self) -> T {
        self.half_width
    }
    pub fn n_x(&self) -> usize {
        self.n_x
    }
    pub fn horizon(&self) -> T {
        self.horizon
    }
    pub fn n_t(&self) -> usize {
        self.n_t
    }

    /// Spatial step `2L / n_x`.
    pub fn h(&self) -> T {
        T::lit(2.0) * self.half_width / T::from_usize_lossy(self.n_x)
    }

    /// Time step `T / n_t`.
    pub fn dt(&self) -> T {
        self.horizon / T::from_usize_lossy(self.n_t)
    }

    /// Nodes per spatial axis (`n_x + 1`).
    pub fn axis_len(&self) -> usize {
        self.n_x + 1
    }

    /// Number of time slices (`n_t + 1`).
    pub fn n_slices(&self) -> usize {
        self.n_t + 1
    }

    /// Nodes per time slice.
    pub fn slice_len(&self) -> usize {
        self.axis_len().pow(self.d as u32)
    }

    pub fn len(&self) -> usize {
        self.n_slices() * self.slice_len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coord(&self, j: usize) -> T {
        -self.half_width + T::from_usize_lossy(j) * self.h()
    }

    pub fn time(&self, i: usize) -> T {
        T::from_usize_lossy(i) * self.dt()
    }

    /// Spatial multi-index of slice offset `s`; unused axes are 0.
    pub fn unravel(&self, s: usize) -> [usize; 3] {
        let n = self.axis_len();
        let mut idx = [0usize; 3];
        let mut rem = s;
        for a in (0..self.d).rev() {
            idx[a] = rem % n;
            rem /= n;
        }
        idx
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        let n = self.axis_len();
        idx[..self.d].iter().fold(0, |acc, &j| acc * n + j)
    }

    /// Stride of axis `a` inside a slice.
    pub fn stride(&self, a: usize) -> usize {
        self.axis_len().pow((self.d - 1 - a) as u32)
    }

    pub fn position(&self, s: usize) -> [T; 3] {
        let idx = self.unravel(s);
        let mut x = [T::zero(); 3];
        for a in 0..self.d {
            x[a] = self.coord(idx[a]);
        }
        x
    }

    /// True when the node lies on a face of the box.
    pub fn on_boundary(&self, s: usize) -> bool {
        let idx = self.unravel(s);
        idx[..self.d].iter().any(|&j| j == 0 || j == self.n_x)
    }

    /// Distance, in nodes, from the nearest box face.
    pub fn boundary_distance(&self, s: usize) -> usize {
        let idx = self.unravel(s);
        idx[..self.d]
            .iter()
            .map(|&j| j.min(self.n_x - j))
            .min()
            .unwrap_or(0)
    }

    /// Slice offset of the node nearest the spatial origin.
    pub fn center(&self) -> usize {
        let mid = [self.n_x / 2; 3];
        self.ravel(&mid)
    }

    /// Per-axis trapezoid weight (1/2 on both faces).
    pub fn axis_weight(&self, j: usize) -> T {
        if j == 0 || j == self.n_x {
            T::lit(0.5)
        } else {
            T::one()
        }
    }

    /// Trapezoid weight of a spatial node, times `h^d`.
    pub fn space_weight(&self, s: usize) -> T {
        let idx = self.unravel(s);
        let w = idx[..self.d]
            .iter()
            .fold(T::one(), |w, &j| w * self.axis_weight(j));
        w * self.h().powi(self.d as i32)
    }

    /// Trapezoid weight of a time slice, times `dt`.
    pub fn time_weight(&self, i: usize) -> T {
        let w = if i == 0 || i == self.n_t {
            T::lit(0.5)
        } else {
            T::one()
        };
        w * self.dt()
    }

    pub fn same_as(&self, other: &Self) -> bool {
        self == other
    }

    pub(crate) fn check_same(&self, other: &Self, what: &str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(what.to_string()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField<T> {
    grid: Grid<T>,
    values: Vec<T>,
    /// Width, in nodes, of a boundary band declared identically zero.
    support_band: usize,
}

impl<T: Real> ScalarField<T> {
    pub fn zeros(grid: Grid<T>) -> Self {
        Self {
            values: vec![T::zero(); grid.len()],
            grid,
            support_band: 0,
        }
    }

    pub fn from_values(grid: Grid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            values,
            support_band: 0,
        })
    }

    /// Samples `f(t, x)` at every node.
    pub fn from_fn<F: Fn(T, &[T]) -> T>(grid: Grid<T>, f: F) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.n_slices() {
            let t = grid.time(i);
            for s in 0..grid.slice_len() {
                let x = grid.position(s);
                values.push(f(t, &x[..grid.d()]));
            }
        }
        Self {
            grid,
            values,
            support_band: 0,
        }
    }

    /// Declares the outer `band` nodes of every face to be zero, checking it.
    pub fn with_compact_support(mut self, band: usize) -> Result<Self> {
        let n = self.grid.slice_len();
        for (k, v) in self.values.iter().enumerate() {
            if self.grid.boundary_distance(k % n) < band && *v != T::zero() {
                return Err(Error::Precondition(format!(
                    "value {v} inside the declared zero band of width {band}"
                )));
            }
        }
        self.support_band = band;
        Ok(self)
    }

    /// Zeroes the outer `band` nodes and declares them zero.
    pub fn truncated(mut self, band: usize) -> Self {
        let n = self.grid.slice_len();
        let grid = self.grid;
        for (k, v) in self.values.iter_mut().enumerate() {
            if grid.boundary_distance(k % n) < band {
                *v = T::zero();
            }
        }
        self.support_band = band;
        self
    }

    pub fn support_band(&self) -> usize {
        self.support_band
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn slice(&self, i: usize) -> &[T] {
        let n = self.grid.slice_len();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn at(&self, i: usize, s: usize) -> T {
        self.values[i * self.grid.slice_len() + s]
    }

    pub fn map<F: Fn(T) -> T>(&self, f: F) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
            support_band: 0,
        }
    }

    pub fn abs(&self) -> Self {
        self.map(|v| v.abs())
    }

    pub fn scale(&self, c: T) -> Self {
        let mut out = self.map(|v| c * v);
        out.support_band = self.support_band;
        out
    }

    pub fn zip_with<F: Fn(T, T) -> T>(&self, other: &Self, f: F) -> Result<Self> {
        self.grid.check_same(&other.grid, "zip of scalar fields")?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            support_band: self.support_band.min(other.support_band),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn max_value(&self) -> T {
        self.values.iter().fold(T::neg_infinity(), |m, &v| m.max(v))
    }

    pub fn min_value(&self) -> T {
        self.values.iter().fold(T::infinity(), |m, &v| m.min(v))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// True when every time slice holds the same values.
    pub fn is_time_independent(&self) -> bool {
        let first = self.slice(0);
        (1..self.grid.n_slices()).all(|i| self.slice(i) == first)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorField<T> {
    grid: Grid<T>,
    /// Layout `[t][space][component]`.
    values: Vec<T>,
}

impl<T: Real> VectorField<T> {
    pub fn zeros(grid: Grid<T>) -> Self {
        Self {
            values: vec![T::zero(); grid.len() * grid.d()],
            grid,
        }
    }

    pub fn from_values(grid: Grid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() * grid.d() {
            return Err(Error::GridMismatch(format!(
                "{} values for a {}-component field on {} nodes",
                values.len(),
                grid.d(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples `b(t, x)` (written into the output slice) at every node.
    pub fn from_fn<F: Fn(T, &[T], &mut [T])>(grid: Grid<T>, f: F) -> Self {
        let d = grid.d();
        let mut values = vec![T::zero(); grid.len() * d];
        for i in 0..grid.n_slices() {
            let t = grid.time(i);
            for s in 0..grid.slice_len() {
                let x = grid.position(s);
                let k = (i * grid.slice_len() + s) * d;
                f(t, &x[..d], &mut values[k..k + d]);
            }
        }
        Self { grid, values }
    }

    /// Builds a field from one scalar field per component.
    pub fn from_components(components: &[ScalarField<T>]) -> Result<Self> {
        let grid = *components
            .first()
            .ok_or_else(|| Error::Precondition("no components".into()))?
            .grid();
        if components.len() != grid.d() {
            return Err(Error::GridMismatch(format!(
                "{} components for dimension {}",
                components.len(),
                grid.d()
            )));
        }
        for c in components {
            grid.check_same(c.grid(), "vector components")?;
        }
        let d = grid.d();
        let mut values = vec![T::zero(); grid.len() * d];
        for (a, c) in components.iter().enumerate() {
            for (k, &v) in c.values().iter().enumerate() {
                values[k * d + a] = v;
            }
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn n_components(&self) -> usize {
        self.grid.d()
    }

    /// Components at node `(i, s)`.
    pub fn at(&self, i: usize, s: usize) -> &[T] {
        let d = self.grid.d();
        let k = (i * self.grid.slice_len() + s) * d;
        &self.values[k..k + d]
    }

    pub fn component(&self, a: usize) -> ScalarField<T> {
        let d = self.grid.d();
        let values = self.values.iter().skip(a).step_by(d).copied().collect();
        ScalarField::from_values(self.grid, values).expect("component length")
    }

    /// Pointwise Euclidean norm `|b(t,x)|`.
    pub fn magnitude(&self) -> ScalarField<T> {
        let d = self.grid.d();
        let values = self
            .values
            .chunks(d)
            .map(|c| c.iter().fold(T::zero(), |s, &v| s + v * v).sqrt())
            .collect();
        ScalarField::from_values(self.grid, values).expect("magnitude length")
    }

    pub fn scale(&self, c: T) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| c * v).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.grid.check_same(&other.grid, "vector addition")?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.grid.check_same(&other.grid, "vector subtraction")?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| a - b)
                .collect(),
        })
    }

    /// Rescales each node so that `|b| ≤ max_norm`; returns the field and the
    /// number of clipped nodes.
    pub fn clipped(&self, max_norm: T) -> (Self, usize) {
        let d = self.grid.d();
        let mut clipped = 0;
        let mut values = self.values.clone();
        for c in values.chunks_mut(d) {
            let n = c.iter().fold(T::zero(), |s, &v| s + v * v).sqrt();
            if n > max_norm {
                clipped += 1;
                let f = max_norm / n;
                c.iter_mut().for_each(|v| *v = *v * f);
            }
        }
        (
            Self {
                grid: self.grid,
                values,
            },
            clipped,
        )
    }

    /// Pointwise product with a scalar field.
    pub fn mul_scalar(&self, s: &ScalarField<T>) -> Result<Self> {
        self.grid.check_same(s.grid(), "vector times scalar")?;
        let d = self.grid.d();
        let mut values = self.values.clone();
        for (c, &w) in values.chunks_mut(d).zip(s.values()) {
            c.iter_mut().for_each(|v| *v = *v * w);
        }
        Ok(Self {
            grid: self.grid,
            values,
        })
    }

    /// Pointwise inner product `b · v`.
    pub fn dot(&self, other: &Self) -> Result<ScalarField<T>> {
        self.grid.check_same(&other.grid, "dot product")?;
        let d = self.grid.d();
        let values = self
            .values
            .chunks(d)
            .zip(other.values.chunks(d))
            .map(|(a, b)| a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y))
            .collect();
        ScalarField::from_values(self.grid, values)
    }

    /// `max` over nodes of `Σ_a |b_a|`.
    pub fn max_l1(&self) -> T {
        let d = self.grid.d();
        self.values
            .chunks(d)
            .map(|c| c.iter().fold(T::zero(), |s, &v| s + v.abs()))
            .fold(T::zero(), |m, v| m.max(v))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}
