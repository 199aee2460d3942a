//! Morrey-type functionals of discrete fields.
//!
//! Suprema over balls and parabolic cylinders are sampled: centers run over
//! grid nodes and radii over a finite set (dyadic by default). Fields are
//! extended by zero outside the spatial box, so ball averages near a face
//! are normalized by the whole ball; time windows are cut at the horizon.
//! Sampled values are lower bounds of the continuum suprema of the
//! zero-extended field.

mod balls;
mod bump;
mod decompose;

pub use bump::{lens_volume, tail_morrey, BumpDrift, BumpSummary};
pub use decompose::{b_square_bracket, lps_decompose, Decomposition, DecompositionSummary};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{Grid, ScalarField, VectorField};
use crate::scalar::Real;

pub(crate) use balls::{argmax, ball_averages, ball_counts, Ball};

/// Exponents and radius set of an `(α, p₀)`-Morrey norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorreyParams<T> {
    alpha: T,
    p0: T,
    /// Strictly decreasing.
    radii: Vec<T>,
}

impl<T: Real> MorreyParams<T> {
    pub fn new(alpha: T, p0: T, radii: Vec<T>) -> Result<Self> {
        if !(p0 > T::one() && p0.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "Morrey exponent p0 = {p0} must lie in (1, d]"
            )));
        }
        Self::build(alpha, p0, radii)
    }

    /// Radii `L, L/2, L/4, …` down to the last one not below `4h`.
    pub fn dyadic(alpha: T, p0: T, grid: &Grid<T>) -> Result<Self> {
        let four_h = T::lit(4.0) * grid.h() * (T::one() - T::lit(1e-12));
        Self::new(alpha, p0, dyadic_radii(grid.half_width(), four_h))
    }

    /// Radii `r_max, r_max/2, …` down to the last one not below `r_min`.
    pub fn dyadic_between(alpha: T, p0: T, r_max: T, r_min: T) -> Result<Self> {
        if !(r_min > T::zero() && r_max >= r_min) {
            return Err(Error::InvalidSpec(format!(
                "bad radius range [{r_min}, {r_max}]"
            )));
        }
        Self::new(
            alpha,
            p0,
            dyadic_radii(r_max, r_min * (T::one() - T::lit(1e-12))),
        )
    }

    /// Allows `p₀ = 1`, used for the `d = 1` certificate of the threshold split.
    pub(crate) fn with_unit_exponent(alpha: T, p0: T, grid: &Grid<T>) -> Result<Self> {
        let four_h = T::lit(4.0) * grid.h() * (T::one() - T::lit(1e-12));
        Self::build(alpha, p0, dyadic_radii(grid.half_width(), four_h))
    }

    fn build(alpha: T, p0: T, mut radii: Vec<T>) -> Result<Self> {
        if !(alpha > T::zero() && alpha.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "Morrey weight alpha = {alpha} must be positive"
            )));
        }
        if radii.is_empty() || radii.iter().any(|r| !(*r > T::zero() && r.is_finite())) {
            return Err(Error::InvalidSpec(
                "radii must be a nonempty set of positive numbers".into(),
            ));
        }
        radii.sort_by(|a, b| b.partial_cmp(a).expect("finite radii"));
        radii.dedup();
        Ok(Self { alpha, p0, radii })
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }
    pub fn p0(&self) -> T {
        self.p0
    }
    pub fn radii(&self) -> &[T] {
        &self.radii
    }

    /// Checks the parameters against the grid the field lives on.
    pub fn check_grid(&self, grid: &Grid<T>) -> Result<()> {
        let d = T::from_usize_lossy(grid.d());
        let slack = T::one() + T::lit(1e-12);
        if self.p0 > d * slack {
            return Err(Error::InvalidSpec(format!(
                "p0 = {} exceeds d = {}",
                self.p0,
                grid.d()
            )));
        }
        if self.alpha > d / self.p0 * slack {
            return Err(Error::InvalidSpec(format!(
                "alpha = {} exceeds d/p0",
                self.alpha
            )));
        }
        let rmax = self.radii[0];
        if rmax > grid.half_width() * slack {
            return Err(Error::InvalidSpec(format!(
                "radius {rmax} exceeds the half-width"
            )));
        }
        let rmin = *self.radii.last().expect("nonempty");
        if rmin < T::lit(2.0) * grid.h() / slack {
            return Err(Error::Precondition(format!(
                "radius {rmin} below twice the mesh width {}",
                grid.h()
            )));
        }
        Ok(())
    }
}

fn dyadic_radii<T: Real>(r_max: T, r_min: T) -> Vec<T> {
    let mut radii = vec![r_max];
    let mut r = r_max;
    while r / T::lit(2.0) >= r_min {
        r = r / T::lit(2.0);
        radii.push(r);
    }
    radii
}

/// Fields whose pointwise magnitude the functionals act on.
pub trait Magnitude<T: Real> {
    fn grid(&self) -> &Grid<T>;
    /// `|b(t_i, ·)|` on slice `i`.
    fn slice_magnitude(&self, i: usize) -> Vec<T>;
    fn time_independent(&self) -> bool;
}

impl<T: Real> Magnitude<T> for ScalarField<T> {
    fn grid(&self) -> &Grid<T> {
        ScalarField::grid(self)
    }
    fn slice_magnitude(&self, i: usize) -> Vec<T> {
        self.slice(i).iter().map(|v| v.abs()).collect()
    }
    fn time_independent(&self) -> bool {
        self.is_time_independent()
    }
}

impl<T: Real> Magnitude<T> for VectorField<T> {
    fn grid(&self) -> &Grid<T> {
        VectorField::grid(self)
    }
    fn slice_magnitude(&self, i: usize) -> Vec<T> {
        let g = VectorField::grid(self);
        let d = g.d();
        let n = g.slice_len() * d;
        self.values()[i * n..(i + 1) * n]
            .chunks(d)
            .map(|c| c.iter().fold(T::zero(), |s, &v| s + v * v).sqrt())
            .collect()
    }
    fn time_independent(&self) -> bool {
        let g = VectorField::grid(self);
        let n = g.slice_len() * g.d();
        let first = &self.values()[..n];
        self.values().chunks(n).all(|c| c == first)
    }
}

fn slices_to_scan<T: Real, F: Magnitude<T>>(b: &F) -> usize {
    if b.time_independent() {
        1
    } else {
        b.grid().n_slices()
    }
}

/// Location of the largest sampled Morrey ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorreyValue<T> {
    pub value: T,
    pub time_index: usize,
    pub radius: T,
    pub center: usize,
}

/// Sampled `(α, p₀)`-Morrey norm
/// `sup_{t, r, B ∈ 𝔹_r} r^α (⨍_B |b(t,·)|^{p₀})^{1/p₀}`.
pub fn morrey_norm<T: Real, F: Magnitude<T>>(b: &F, params: &MorreyParams<T>) -> Result<T> {
    Ok(morrey_norm_detailed(b, params)?.value)
}

/// [`morrey_norm`] together with the maximizing slice, radius and center.
pub fn morrey_norm_detailed<T: Real, F: Magnitude<T>>(
    b: &F,
    params: &MorreyParams<T>,
) -> Result<MorreyValue<T>> {
    let grid = *b.grid();
    params.check_grid(&grid)?;
    morrey_scan(b, params)
}

pub(crate) fn morrey_scan<T: Real, F: Magnitude<T>>(
    b: &F,
    params: &MorreyParams<T>,
) -> Result<MorreyValue<T>> {
    let grid = *b.grid();
    let balls: Vec<Ball> = params
        .radii
        .iter()
        .map(|&r| Ball::new(grid.d(), (r / grid.h()).as_f64()))
        .collect();
    let mut best = MorreyValue {
        value: T::zero(),
        time_index: 0,
        radius: params.radii[0],
        center: grid.center(),
    };
    for i in 0..slices_to_scan(b) {
        let powered: Vec<T> = b
            .slice_magnitude(i)
            .into_iter()
            .map(|v| v.powf(params.p0))
            .collect();
        if powered.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("|b|^p0 on slice {i}")));
        }
        for (&r, ball) in params.radii.iter().zip(&balls) {
            let (s, avg) = argmax(&ball_averages(&grid, &powered, ball));
            let value = r.powf(params.alpha) * avg.powf(T::one() / params.p0);
            if value > best.value {
                best = MorreyValue {
                    value,
                    time_index: i,
                    radius: r,
                    center: s,
                };
            }
        }
    }
    Ok(best)
}

/// Sampled weak-type functional over unit balls,
/// `sup_{t, λ, B ∈ 𝔹_1} (λ ·) |{x ∈ B : |b(t,x)| > λ}|^{1/s}`.
///
/// `λ` runs over 64 log-spaced levels spanning the positive range of `|b|`;
/// each level is evaluated as the left limit `|{|b| ≥ λ}|`, which is where
/// the supremum over the neighbouring interval of levels is approached.
/// Measures are node counts times `h^d`.
pub fn weak_quasinorm<T: Real, F: Magnitude<T>>(b: &F, s: T, with_lambda: bool) -> Result<T> {
    if !(s > T::zero() && s.is_finite()) {
        return Err(Error::InvalidSpec(format!(
            "weak exponent s = {s} must be positive"
        )));
    }
    let grid = *b.grid();
    let slices: Vec<Vec<T>> = (0..slices_to_scan(b))
        .map(|i| b.slice_magnitude(i))
        .collect();
    let mut lo = T::infinity();
    let mut hi = T::zero();
    for v in slices.iter().flatten() {
        if !v.is_finite() {
            return Err(Error::NonFinite("|b| in weak quasinorm".into()));
        }
        if *v > T::zero() {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
    }
    if hi == T::zero() {
        return Ok(T::zero());
    }
    const LEVELS: usize = 64;
    let levels: Vec<T> = if with_lambda {
        (0..LEVELS)
            .map(|k| match k {
                0 => lo,
                k if k == LEVELS - 1 => hi,
                k => {
                    let w = T::from_usize_lossy(k) / T::from_usize_lossy(LEVELS - 1);
                    (lo.ln() + w * (hi.ln() - lo.ln())).exp()
                }
            })
            .collect()
    } else {
        vec![lo]
    };
    let ball = Ball::new(grid.d(), (T::one() / grid.h()).as_f64());
    let cell = grid.h().powi(grid.d() as i32);
    let mut best = T::zero();
    for slice in &slices {
        for &lambda in &levels {
            let indicator: Vec<T> = slice
                .iter()
                .map(|&v| if v >= lambda { T::one() } else { T::zero() })
                .collect();
            let (_, count) = argmax(&ball_counts(&grid, &indicator, &ball));
            let measure = count * cell;
            let weight = if with_lambda { lambda } else { T::one() };
            best = best.max(weight * measure.powf(T::one() / s));
        }
    }
    Ok(best)
}

/// Number of time nodes in `[t', t' + r²)`, at least one.
fn cylinder_steps<T: Real>(grid: &Grid<T>, r: T) -> usize {
    let k = (r * r / grid.dt()).as_f64();
    ((k - 1e-9).ceil() as usize).max(1)
}

/// Cylinder averages `⨍_{[t_{i₀}, t_{i₀}+r²) × B_r(x_c)} f` for every base
/// slice `i₀` and center `c`, computed from per-slice ball averages.
fn cylinder_averages<T: Real>(grid: &Grid<T>, ball_avg: &[Vec<T>], steps: usize) -> Vec<Vec<T>> {
    let n_s = grid.n_slices();
    let len = grid.slice_len();
    (0..n_s)
        .map(|i0| {
            let end = (i0 + steps).min(n_s);
            let m = T::from_usize_lossy(end - i0);
            (0..len)
                .map(|c| (i0..end).fold(T::zero(), |acc, i| acc + ball_avg[i][c]) / m)
                .collect()
        })
        .collect()
}

fn check_radii<T: Real>(radii: &[T]) -> Result<()> {
    if radii.is_empty() || radii.iter().any(|r| !(*r > T::zero() && r.is_finite())) {
        return Err(Error::InvalidSpec(
            "radii must be a nonempty set of positive numbers".into(),
        ));
    }
    Ok(())
}

/// Sampled parabolic maximal function
/// `M_α f(t,x) = sup_r r^α sup_{C ∋ (t,x)} ⨍_C f` over cylinders
/// `C = [t', t'+r²) × B_r(x')` with base time `t'` and center `x'` on grid
/// nodes, clipped to the space-time box.
pub fn parabolic_maximal<T: Real>(
    f: &ScalarField<T>,
    alpha: T,
    radii: &[T],
) -> Result<ScalarField<T>> {
    check_radii(radii)?;
    if !(alpha >= T::zero() && alpha.is_finite()) {
        return Err(Error::InvalidSpec(format!(
            "alpha = {alpha} must be nonnegative"
        )));
    }
    let grid = *f.grid();
    let n_s = grid.n_slices();
    let len = grid.slice_len();
    let mut out = vec![T::neg_infinity(); grid.len()];
    for &r in radii {
        let ball = Ball::new(grid.d(), (r / grid.h()).as_f64());
        let offsets = ball.offsets(grid.d());
        let steps = cylinder_steps(&grid, r);
        let ball_avg: Vec<Vec<T>> = (0..n_s)
            .map(|i| ball_averages(&grid, f.slice(i), &ball))
            .collect();
        let cyl = cylinder_averages(&grid, &ball_avg, steps);
        let weight = r.powf(alpha);
        for i in 0..n_s {
            // Base slices of the cylinders containing time node i.
            let first = (i + 1).saturating_sub(steps);
            let window: Vec<T> = (0..len)
                .map(|c| (first..=i).fold(T::neg_infinity(), |m, i0| m.max(cyl[i0][c])))
                .collect();
            for s in 0..len {
                let x = grid.unravel(s);
                let mut m = T::neg_infinity();
                for o in &offsets {
                    if let Some(c) = shifted(&grid, x, o) {
                        m = m.max(window[c]);
                    }
                }
                let k = i * len + s;
                out[k] = out[k].max(weight * m);
            }
        }
    }
    ScalarField::from_values(grid, out)
}

/// Largest `r^α ⨍_C f - M_α f(t,x)` over sampled cylinders `C` and nodes
/// `(t,x) ∈ C`, with `M_α f` from [`parabolic_maximal`]. Nonpositive when the
/// maximal function dominates every cylinder average it is built from.
pub fn maximal_domination_excess<T: Real>(f: &ScalarField<T>, alpha: T, radii: &[T]) -> Result<T> {
    let m = parabolic_maximal(f, alpha, radii)?;
    let grid = *f.grid();
    let n_s = grid.n_slices();
    let mut worst = T::neg_infinity();
    for &r in radii {
        let ball = Ball::new(grid.d(), (r / grid.h()).as_f64());
        let offsets = ball.offsets(grid.d());
        let steps = cylinder_steps(&grid, r);
        let ball_avg: Vec<Vec<T>> = (0..n_s)
            .map(|i| ball_averages(&grid, f.slice(i), &ball))
            .collect();
        let cyl = cylinder_averages(&grid, &ball_avg, steps);
        let weight = r.powf(alpha);
        for (i0, row) in cyl.iter().enumerate() {
            let end = (i0 + steps).min(n_s);
            for (c, &avg) in row.iter().enumerate() {
                let center = grid.unravel(c);
                for o in &offsets {
                    if let Some(s) = shifted(&grid, center, o) {
                        for i in i0..end {
                            worst = worst.max(weight * avg - m.at(i, s));
                        }
                    }
                }
            }
        }
    }
    Ok(worst)
}

fn shifted<T: Real>(grid: &Grid<T>, x: [usize; 3], o: &[isize; 3]) -> Option<usize> {
    let n = grid.axis_len() as isize;
    let mut idx = [0usize; 3];
    for a in 0..grid.d() {
        let j = x[a] as isize + o[a];
        if j < 0 || j >= n {
            return None;
        }
        idx[a] = j as usize;
    }
    Some(grid.ravel(&idx))
}

/// Largest sampled excess of `r^α ⨍_C b f` over
/// `b̃_{α,p₀} (⨍_C f^{p₀'})^{1/p₀'}` across cylinders `C = [t', t'+r²) × B_r`,
/// with the Morrey norm `b̃` computed over the same balls.
///
/// Radii are dyadic from the half-width down to `4h`. Both fields must be
/// nonnegative.
pub fn holder_domination_check<T: Real>(
    b: &ScalarField<T>,
    f: &ScalarField<T>,
    alpha: T,
    p0: T,
) -> Result<T> {
    let params = MorreyParams::dyadic(alpha, p0, b.grid())?;
    holder_domination_check_with(b, f, &params)
}

/// [`holder_domination_check`] with an explicit radius set.
pub fn holder_domination_check_with<T: Real>(
    b: &ScalarField<T>,
    f: &ScalarField<T>,
    params: &MorreyParams<T>,
) -> Result<T> {
    let grid = *b.grid();
    grid.check_same(f.grid(), "Hölder domination check")?;
    if b.min_value() < T::zero() || f.min_value() < T::zero() {
        return Err(Error::Precondition(
            "Hölder domination needs nonnegative fields".into(),
        ));
    }
    let b_tilde = morrey_norm(b, params)?;
    let dual = params.p0 / (params.p0 - T::one());
    let bf = b.mul(f)?;
    let f_dual = f.map(|v| v.powf(dual));
    let n_s = grid.n_slices();
    let mut worst = T::neg_infinity();
    for &r in &params.radii {
        let ball = Ball::new(grid.d(), (r / grid.h()).as_f64());
        let steps = cylinder_steps(&grid, r);
        let avg_bf: Vec<Vec<T>> = (0..n_s)
            .map(|i| ball_averages(&grid, bf.slice(i), &ball))
            .collect();
        let avg_fd: Vec<Vec<T>> = (0..n_s)
            .map(|i| ball_averages(&grid, f_dual.slice(i), &ball))
            .collect();
        let lhs = cylinder_averages(&grid, &avg_bf, steps);
        let rhs = cylinder_averages(&grid, &avg_fd, steps);
        let weight = r.powf(params.alpha);
        for (l_row, r_row) in lhs.iter().zip(&rhs) {
            for (&l, &q) in l_row.iter().zip(r_row) {
                worst = worst.max(weight * l - b_tilde * q.powf(T::one() / dual));
            }
        }
    }
    Ok(worst)
}
