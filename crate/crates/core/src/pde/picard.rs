//! Fixed-point iteration `u ← c P_{2,4}(-b·Du - f)` built on the potential
//! operator instead of the finite-difference solver.

use serde::{Deserialize, Serialize};

use super::SolveReport;
use crate::error::{Error, Result};
use crate::fields::{gradient, sup_norm, MixedNormSpec, ScalarField, VectorField};
use crate::kernels::{potential_apply, reproduction_oracle, KernelParams};
use crate::morrey::{morrey_norm, MorreyParams};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardOptions<T> {
    pub max_iter: usize,
    /// Stop once `sup |u_{m+1} - u_m| ≤ tol · sup |u_{m+1}|`.
    pub tol: T,
    /// Reproduction constant; `-(4π)^{-d/2}` when absent.
    pub constant: Option<T>,
}

impl<T: Real> PicardOptions<T> {
    pub fn new(max_iter: usize) -> Self {
        Self {
            max_iter,
            tol: T::lit(1e-8),
            constant: None,
        }
    }
}

const DIVERGENCE_RUN: usize = 3;

/// The `(1, d)`-Morrey norm of `b` over dyadic radii of its grid, the
/// smallness the contraction depends on.
pub fn drift_morrey<T: Real>(b: &VectorField<T>) -> Result<T> {
    let d = b.grid().d();
    let params = MorreyParams::with_unit_exponent(T::one(), T::from_usize_lossy(d), b.grid())?;
    morrey_norm(b, &params)
}

fn measured_morrey<T: Real>(b: &VectorField<T>) -> Option<f64> {
    drift_morrey(b).ok().map(|v| v.as_f64())
}

/// Iterates from `u_0 = 0` until the update falls below tolerance. The
/// reported contraction factor is the last ratio of successive update sizes.
pub fn picard_solve<T: Real>(
    b: &VectorField<T>,
    f: &ScalarField<T>,
    spec: &MixedNormSpec<T>,
    options: &PicardOptions<T>,
) -> Result<SolveReport<T>> {
    let g = *f.grid();
    g.check_same(b.grid(), "drift and source")?;
    if options.max_iter == 0 {
        return Err(Error::InvalidSpec(
            "Picard iteration needs max_iter >= 1".into(),
        ));
    }
    let c = options
        .constant
        .unwrap_or_else(|| -reproduction_oracle::<T>(g.d()));
    let kernel = KernelParams::new(T::lit(2.0), T::lit(4.0), g.d())?;
    let neg_f = f.scale(-T::one());
    let mut u = ScalarField::zeros(g);
    let mut last_update: Option<T> = None;
    let mut factor = T::zero();
    let mut growing = 0usize;
    let mut warnings = Vec::new();
    let mut iterations = options.max_iter;
    for m in 0..options.max_iter {
        let rhs = neg_f.sub(&b.dot(&gradient(&u))?)?;
        let next = potential_apply(&rhs, &kernel)?.scale(c);
        if !next.is_finite() {
            return Err(Error::NonFinite(format!("Picard iterate {}", m + 1)));
        }
        let update = sup_norm(&next.sub(&u)?);
        let size = sup_norm(&next);
        u = next;
        if let Some(prev) = last_update {
            factor = if prev > T::zero() {
                update / prev
            } else {
                T::zero()
            };
            growing = if factor >= T::one() { growing + 1 } else { 0 };
            if growing >= DIVERGENCE_RUN {
                return Err(Error::Divergence {
                    iterations: m + 1,
                    factor: factor.as_f64(),
                    morrey: measured_morrey(b),
                });
            }
        }
        last_update = Some(update);
        if update <= options.tol * size {
            // The accepted iterate is the one before this vanishing update.
            iterations = m.max(1);
            break;
        }
        if m + 1 == options.max_iter {
            warnings.push(format!(
                "Picard iteration stopped at max_iter = {} before reaching tolerance",
                options.max_iter
            ));
        }
    }
    let mut report = SolveReport::measure(u, f, spec)?;
    report.iterations = Some(iterations);
    report.contraction_factor = Some(factor);
    report.warnings.extend(warnings);
    Ok(report)
}
