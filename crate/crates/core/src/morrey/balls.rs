//! Discrete ball sums over one time slice.
//!
//! A ball of radius `r` centered at a node is the set of nodes within
//! Euclidean distance `r`. Fields are extended by zero outside the box, so a
//! ball average is the sum over the ball's nodes inside the box divided by
//! the node count of the whole ball. Sums are evaluated
//! row by row from prefix sums along the last axis, so one ball costs
//! `O((r/h)^{d-1})` instead of `O((r/h)^d)`.

use rayon::prelude::*;

use crate::fields::Grid;
use crate::scalar::Real;

/// Node offsets of a ball: one entry per row (offsets along the leading
/// axes) with the half-length of the row along the last axis.
#[derive(Debug, Clone)]
pub(crate) struct Ball {
    rows: Vec<([isize; 2], isize)>,
}

fn isqrt_floor(v: i64) -> i64 {
    if v < 0 {
        return -1;
    }
    let mut w = (v as f64).sqrt().floor() as i64;
    while w * w > v {
        w -= 1;
    }
    while (w + 1) * (w + 1) <= v {
        w += 1;
    }
    w
}

impl Ball {
    /// Ball of radius `r_nodes` (radius divided by the mesh width).
    pub(crate) fn new(d: usize, r_nodes: f64) -> Self {
        let m = (r_nodes * (1.0 + 1e-12)).floor() as i64;
        // Integer squared radius, so membership is decided exactly.
        let r2 = (r_nodes * r_nodes * (1.0 + 1e-12)).floor() as i64;
        let mut rows = Vec::new();
        match d {
            1 => rows.push(([0, 0], m as isize)),
            2 => {
                for a in -m..=m {
                    let w = isqrt_floor(r2 - a * a);
                    if w >= 0 {
                        rows.push(([a as isize, 0], w as isize));
                    }
                }
            }
            _ => {
                for a in -m..=m {
                    for b in -m..=m {
                        let w = isqrt_floor(r2 - a * a - b * b);
                        if w >= 0 {
                            rows.push(([a as isize, b as isize], w as isize));
                        }
                    }
                }
            }
        }
        Self { rows }
    }

    /// Number of nodes of the unclipped ball.
    pub(crate) fn size(&self) -> usize {
        self.rows.iter().map(|r| (2 * r.1 + 1) as usize).sum()
    }

    /// Node offsets (in index units) of every node of the unclipped ball.
    pub(crate) fn offsets(&self, d: usize) -> Vec<[isize; 3]> {
        let mut out = Vec::with_capacity(self.size());
        for &(lead, w) in &self.rows {
            for c in -w..=w {
                out.push(match d {
                    1 => [c, 0, 0],
                    2 => [lead[0], c, 0],
                    _ => [lead[0], lead[1], c],
                });
            }
        }
        out
    }
}

/// Prefix sums of one slice along the last axis.
pub(crate) struct SlicePrefix<T> {
    d: usize,
    n: usize,
    prefix: Vec<T>,
}

impl<T: Real> SlicePrefix<T> {
    pub(crate) fn new(grid: &Grid<T>, values: &[T]) -> Self {
        let n = grid.axis_len();
        let rows = values.len() / n;
        let mut prefix = Vec::with_capacity(rows * (n + 1));
        for row in values.chunks(n) {
            let mut acc = T::zero();
            prefix.push(acc);
            for &v in row {
                acc = acc + v;
                prefix.push(acc);
            }
        }
        Self {
            d: grid.d(),
            n,
            prefix,
        }
    }

    /// Sum of the values over `ball` centered at node `idx`, clipped to the
    /// box, together with the number of nodes summed.
    pub(crate) fn ball_sum(&self, ball: &Ball, idx: [usize; 3]) -> (T, usize) {
        let n = self.n as isize;
        let last = self.d - 1;
        let cl = idx[last] as isize;
        let mut sum = T::zero();
        let mut count = 0usize;
        for &(lead, w) in &ball.rows {
            let row = match self.d {
                1 => 0,
                2 => {
                    let a = idx[0] as isize + lead[0];
                    if a < 0 || a >= n {
                        continue;
                    }
                    a
                }
                _ => {
                    let a = idx[0] as isize + lead[0];
                    let b = idx[1] as isize + lead[1];
                    if a < 0 || a >= n || b < 0 || b >= n {
                        continue;
                    }
                    a * n + b
                }
            };
            let lo = (cl - w).max(0);
            let hi = (cl + w).min(n - 1);
            let base = (row * (n + 1)) as usize;
            sum = sum + (self.prefix[base + hi as usize + 1] - self.prefix[base + lo as usize]);
            count += (hi - lo + 1) as usize;
        }
        (sum, count)
    }
}

/// Ball average of the zero-extended `values` at every node of the slice.
pub(crate) fn ball_averages<T: Real>(grid: &Grid<T>, values: &[T], ball: &Ball) -> Vec<T> {
    let prefix = SlicePrefix::new(grid, values);
    let size = T::from_usize_lossy(ball.size());
    (0..grid.slice_len())
        .into_par_iter()
        .map(|s| prefix.ball_sum(ball, grid.unravel(s)).0 / size)
        .collect()
}

/// Ball sums (not averages) of `values` at every node of the slice.
pub(crate) fn ball_counts<T: Real>(grid: &Grid<T>, values: &[T], ball: &Ball) -> Vec<T> {
    let prefix = SlicePrefix::new(grid, values);
    (0..grid.slice_len())
        .into_par_iter()
        .map(|s| prefix.ball_sum(ball, grid.unravel(s)).0)
        .collect()
}

/// Index and value of the largest entry; ties go to the lowest index.
pub(crate) fn argmax<T: Real>(values: &[T]) -> (usize, T) {
    let mut best = (0, T::neg_infinity());
    for (k, &v) in values.iter().enumerate() {
        if v > best.1 {
            best = (k, v);
        }
    }
    best
}
