use serde::{Deserialize, Serialize};

use super::ScalarField;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormOrder {
    /// `(∫ (∫ |f|^p dx)^{q/p} dt)^{1/q}`
    TimeOuter,
    /// `(∫ (∫ |f|^q dt)^{p/q} dx)^{1/p}`
    SpaceOuter,
}

/// Exponents of a mixed Lebesgue norm: `q` acts on time, `p` on space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixedNormSpec<T> {
    pub q: T,
    pub p: T,
    pub order: NormOrder,
}

impl<T: Real> MixedNormSpec<T> {
    pub fn new(q: T, p: T, order: NormOrder) -> Result<Self> {
        for (name, e) in [("q", q), ("p", p)] {
            if !(e > T::one()) {
                return Err(Error::InvalidSpec(format!(
                    "exponent {name} = {e} must exceed 1"
                )));
            }
        }
        Ok(Self { q, p, order })
    }

    pub fn time_outer(q: T, p: T) -> Result<Self> {
        Self::new(q, p, NormOrder::TimeOuter)
    }

    pub fn space_outer(q: T, p: T) -> Result<Self> {
        Self::new(q, p, NormOrder::SpaceOuter)
    }
}

// Σ w |v|^e, or max |v| for e = ∞. Returned as the e-th power (sum) or the max.
fn power_sum<T: Real>(vals: impl Iterator<Item = (T, T)>, e: T) -> T {
    if e.is_infinite() {
        vals.fold(T::zero(), |m, (_, v)| m.max(v.abs()))
    } else {
        vals.fold(T::zero(), |s, (w, v)| s + w * v.abs().powf(e))
    }
}

// Converts an inner power sum to the value raised to the outer exponent.
fn inner_to_outer<T: Real>(inner: T, inner_e: T, outer_e: T) -> T {
    match (inner_e.is_infinite(), outer_e.is_infinite()) {
        (true, true) => inner,
        (false, true) => inner.powf(T::one() / inner_e),
        (true, false) => inner.powf(outer_e),
        (false, false) => inner.powf(outer_e / inner_e),
    }
}

/// Trapezoid-rule mixed norm; infinite exponents use discrete maxima.
pub fn mixed_norm<T: Real>(f: &ScalarField<T>, spec: &MixedNormSpec<T>) -> Result<T> {
    MixedNormSpec::new(spec.q, spec.p, spec.order)?;
    let g = f.grid();
    let ns = g.slice_len();
    let (outer_e, outer_sum) = match spec.order {
        NormOrder::TimeOuter => {
            let outer = (0..g.n_slices()).map(|i| {
                let sl = f.slice(i);
                let inner = power_sum((0..ns).map(|s| (g.space_weight(s), sl[s])), spec.p);
                (g.time_weight(i), inner_to_outer(inner, spec.p, spec.q))
            });
            (spec.q, sum_outer(outer, spec.q))
        }
        NormOrder::SpaceOuter => {
            let outer = (0..ns).map(|s| {
                let inner = power_sum(
                    (0..g.n_slices()).map(|i| (g.time_weight(i), f.at(i, s))),
                    spec.q,
                );
                (g.space_weight(s), inner_to_outer(inner, spec.q, spec.p))
            });
            (spec.p, sum_outer(outer, spec.p))
        }
    };
    Ok(if outer_e.is_infinite() {
        outer_sum
    } else {
        outer_sum.powf(T::one() / outer_e)
    })
}

fn sum_outer<T: Real>(it: impl Iterator<Item = (T, T)>, e: T) -> T {
    if e.is_infinite() {
        it.fold(T::zero(), |m, (_, v)| m.max(v))
    } else {
        it.fold(T::zero(), |s, (w, v)| s + w * v)
    }
}

pub fn sup_norm<T: Real>(f: &ScalarField<T>) -> T {
    f.values().iter().fold(T::zero(), |m, &v| m.max(v.abs()))
}

/// Which exponent condition to test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Admissibility<T> {
    /// `p, q ∈ (1, ∞)` and `d/p + 2/q < 2`.
    Subcritical,
    /// `p ∈ (d, ∞]` and `d/p + 2/q = 1`.
    LpsCritical,
    /// Subcritical plus `2p, 2q > p0'` for the given Morrey exponent `p0`.
    MorreyPair(T),
}

pub fn admissibility<T: Real>(q: T, p: T, d: usize, kind: Admissibility<T>) -> bool {
    let two = T::lit(2.0);
    let dd = T::from_usize_lossy(d);
    let finite_gt1 = |e: T| e > T::one() && e.is_finite();
    let inv = |e: T| {
        if e.is_infinite() {
            T::zero()
        } else {
            T::one() / e
        }
    };
    match kind {
        Admissibility::Subcritical => finite_gt1(q) && finite_gt1(p) && dd / p + two / q < two,
        Admissibility::LpsCritical => {
            let tol = T::lit(1e-12).max(T::epsilon() * T::lit(16.0));
            p > dd && q > T::one() && (dd * inv(p) + two * inv(q) - T::one()).abs() <= tol
        }
        Admissibility::MorreyPair(p0) => {
            if !(p0 > T::one()) {
                return false;
            }
            let p0_dual = p0 / (p0 - T::one());
            let sub = admissibility(q, p, d, Admissibility::Subcritical);
            let pair = sub && two * p > p0_dual && two * q > p0_dual;
            // p0' <= 2 together with subcriticality already forces 2p, 2q > p0'.
            debug_assert!(!(sub && p0_dual <= two) || pair);
            pair
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;

    #[test]
    fn rejects_small_exponents() {
        assert!(MixedNormSpec::time_outer(0.5f64, 2.0).is_err());
        assert!(MixedNormSpec::time_outer(2.0f64, 1.0).is_err());
        assert!(MixedNormSpec::time_outer(f64::INFINITY, 2.0).is_ok());
    }

    #[test]
    fn zero_field_has_zero_norm() {
        let g = Grid::new(2, 1.0, 8, 1.0, 8).unwrap();
        let f = ScalarField::zeros(g);
        let spec = MixedNormSpec::time_outer(3.0, 2.0).unwrap();
        assert_eq!(mixed_norm(&f, &spec).unwrap(), 0.0);
        assert_eq!(sup_norm(&f), 0.0);
    }

    #[test]
    fn sup_norm_single_node() {
        let g = Grid::new(1, 1.0, 8, 1.0, 8).unwrap();
        let mut v = vec![0.0; g.len()];
        v[17] = -3.0;
        let f = ScalarField::from_values(g, v).unwrap();
        assert_eq!(sup_norm(&f), 3.0);
    }

    #[test]
    fn infinite_exponents_are_maxima() {
        let g = Grid::<f64>::new(1, 1.0, 8, 1.0, 8).unwrap();
        let f = ScalarField::from_fn(g, |t, x| (1.0 + t) * (1.0 - x[0].abs()));
        let spec = MixedNormSpec::time_outer(f64::INFINITY, f64::INFINITY).unwrap();
        assert!((mixed_norm(&f, &spec).unwrap() - 2.0).abs() < 1e-14);
        let spec = MixedNormSpec::space_outer(f64::INFINITY, f64::INFINITY).unwrap();
        assert!((mixed_norm(&f, &spec).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn admissibility_examples() {
        assert!(admissibility(4.0f64, 4.0, 2, Admissibility::Subcritical));
        assert!(!admissibility(
            f64::INFINITY,
            2.0,
            2,
            Admissibility::LpsCritical
        ));
        assert!(!admissibility(
            f64::INFINITY,
            3.0,
            3,
            Admissibility::LpsCritical
        ));
        assert!(admissibility(4.0f64, 4.0, 2, Admissibility::LpsCritical));
        assert!(admissibility(
            2.0f64,
            f64::INFINITY,
            3,
            Admissibility::LpsCritical
        ));
        assert!(admissibility(
            4.0f64,
            4.0,
            2,
            Admissibility::MorreyPair(2.0)
        ));
        assert!(!admissibility(1.2f64, 1.2, 2, Admissibility::Subcritical));
    }
}
