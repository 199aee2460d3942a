//! Second-order finite-difference stencils on [`ScalarField`]s.
//!
//! Spatial derivatives are centered in the interior and one-sided (first
//! order) on the box faces; the Laplacian is set to zero on the faces. The
//! time derivative is centered with one-sided ends.

use super::{Grid, ScalarField, VectorField};
use crate::scalar::Real;

fn axis_diff<T: Real>(g: &Grid<T>, sl: &[T], s: usize, a: usize) -> T {
    let j = g.unravel(s)[a];
    let st = g.stride(a);
    let h = g.h();
    if j == 0 {
        (sl[s + st] - sl[s]) / h
    } else if j == g.n_x() {
        (sl[s] - sl[s - st]) / h
    } else {
        (sl[s + st] - sl[s - st]) / (T::lit(2.0) * h)
    }
}

pub fn gradient<T: Real>(f: &ScalarField<T>) -> VectorField<T> {
    let g = *f.grid();
    let d = g.d();
    let ns = g.slice_len();
    let mut out = Vec::with_capacity(g.len() * d);
    for i in 0..g.n_slices() {
        let sl = f.slice(i);
        for s in 0..ns {
            for a in 0..d {
                out.push(axis_diff(&g, sl, s, a));
            }
        }
    }
    VectorField::from_values(g, out).expect("gradient layout")
}

/// Forward differences `(f_{j+1} - f_j)/h`; zero on the upper face.
pub fn gradient_forward<T: Real>(f: &ScalarField<T>) -> VectorField<T> {
    let g = *f.grid();
    let d = g.d();
    let h = g.h();
    let mut out = Vec::with_capacity(g.len() * d);
    for i in 0..g.n_slices() {
        let sl = f.slice(i);
        for s in 0..g.slice_len() {
            let idx = g.unravel(s);
            for a in 0..d {
                out.push(if idx[a] == g.n_x() {
                    T::zero()
                } else {
                    (sl[s + g.stride(a)] - sl[s]) / h
                });
            }
        }
    }
    VectorField::from_values(g, out).expect("gradient layout")
}

/// Backward-difference divergence; the adjoint partner of [`gradient_forward`],
/// so that `divergence_backward(gradient_forward(f)) == laplacian(f)` in the
/// interior.
pub fn divergence_backward<T: Real>(v: &VectorField<T>) -> ScalarField<T> {
    let g = *v.grid();
    let d = g.d();
    let h = g.h();
    let ns = g.slice_len();
    let mut out = Vec::with_capacity(g.len());
    for i in 0..g.n_slices() {
        for s in 0..ns {
            if g.on_boundary(s) {
                out.push(T::zero());
                continue;
            }
            let mut acc = T::zero();
            for a in 0..d {
                acc = acc + (v.at(i, s)[a] - v.at(i, s - g.stride(a))[a]) / h;
            }
            out.push(acc);
        }
    }
    ScalarField::from_values(g, out).expect("divergence layout")
}

pub fn laplacian<T: Real>(f: &ScalarField<T>) -> ScalarField<T> {
    let g = *f.grid();
    let h2 = g.h() * g.h();
    let ns = g.slice_len();
    let mut out = Vec::with_capacity(g.len());
    for i in 0..g.n_slices() {
        let sl = f.slice(i);
        for s in 0..ns {
            if g.on_boundary(s) {
                out.push(T::zero());
                continue;
            }
            let mut acc = T::zero();
            for a in 0..g.d() {
                let st = g.stride(a);
                acc = acc + ((sl[s + st] - sl[s]) - (sl[s] - sl[s - st])) / h2;
            }
            out.push(acc);
        }
    }
    ScalarField::from_values(g, out).expect("laplacian layout")
}

/// Frobenius norm of the centered Hessian, zero on the faces.
pub fn hessian_norm<T: Real>(f: &ScalarField<T>) -> ScalarField<T> {
    let grad = gradient(f);
    let g = *f.grid();
    let comps: Vec<VectorField<T>> = (0..g.d()).map(|a| gradient(&grad.component(a))).collect();
    let mut out = Vec::with_capacity(g.len());
    for i in 0..g.n_slices() {
        for s in 0..g.slice_len() {
            if g.on_boundary(s) {
                out.push(T::zero());
                continue;
            }
            let mut acc = T::zero();
            for c in &comps {
                acc = c.at(i, s).iter().fold(acc, |acc, &v| acc + v * v);
            }
            out.push(acc.sqrt());
        }
    }
    ScalarField::from_values(g, out).expect("hessian layout")
}

pub fn time_derivative<T: Real>(f: &ScalarField<T>) -> ScalarField<T> {
    let g = *f.grid();
    let dt = g.dt();
    let nt = g.n_t();
    let ns = g.slice_len();
    let mut out = Vec::with_capacity(g.len());
    for i in 0..=nt {
        for s in 0..ns {
            let v = if i == 0 {
                (f.at(1, s) - f.at(0, s)) / dt
            } else if i == nt {
                (f.at(nt, s) - f.at(nt - 1, s)) / dt
            } else {
                (f.at(i + 1, s) - f.at(i - 1, s)) / (T::lit(2.0) * dt)
            };
            out.push(v);
        }
    }
    ScalarField::from_values(g, out).expect("time derivative layout")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_of_quadratic_is_exact() {
        for d in 1..=3 {
            let g = Grid::new(d, 1.0, 8, 1.0, 8).unwrap();
            let f = ScalarField::from_fn(g, |_, x| x.iter().map(|v| v * v).sum());
            let l = laplacian(&f);
            for i in 0..g.n_slices() {
                for s in 0..g.slice_len() {
                    if !g.on_boundary(s) {
                        assert!((l.at(i, s) - 2.0 * d as f64).abs() < 1e-11);
                    }
                }
            }
        }
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let g = Grid::new(2, 1.0, 8, 1.0, 8).unwrap();
        let f = ScalarField::from_fn(g, |_, _| 4.2);
        assert!(gradient(&f).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_exact_on_quadratics_interior() {
        let g = Grid::<f64>::new(2, 1.0, 10, 1.0, 8).unwrap();
        let f = ScalarField::from_fn(g, |_, x| x[0] * x[0] + 3.0 * x[0] * x[1] - x[1]);
        let gr = gradient(&f);
        for s in 0..g.slice_len() {
            if g.on_boundary(s) {
                continue;
            }
            let x = g.position(s);
            let v = gr.at(3, s);
            assert!((v[0] - (2.0 * x[0] + 3.0 * x[1])).abs() < 1e-12);
            assert!((v[1] - (3.0 * x[0] - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn time_derivative_exact_on_linear() {
        let g = Grid::<f64>::new(1, 1.0, 8, 2.0, 8).unwrap();
        let f = ScalarField::from_fn(g, |t, x| 3.0 * t + x[0]);
        assert!(time_derivative(&f)
            .values()
            .iter()
            .all(|&v| (v - 3.0).abs() < 1e-12));
    }

    #[test]
    fn hessian_of_quadratic() {
        let g = Grid::new(2, 1.0, 12, 1.0, 8).unwrap();
        let f = ScalarField::from_fn(g, |_, x| x[0] * x[0] + x[1] * x[1]);
        let hn = hessian_norm(&f);
        let s = g.center();
        assert!((hn.at(0, s) - 8.0f64.sqrt()).abs() < 1e-10);
    }
}
