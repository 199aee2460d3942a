//! Gamma-family special functions.

use crate::scalar::Real;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma<T: Real>(x: T) -> T {
    if x < T::lit(0.5) {
        // Γ(x) = Γ(x+1)/x
        return ln_gamma(x + T::one()) - x.ln();
    }
    let x = x - T::one();
    let mut a = T::lit(LANCZOS[0]);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a = a + T::lit(c) / (x + T::from_usize_lossy(i));
    }
    let t = x + T::lit(LANCZOS_G + 0.5);
    T::lit(0.5) * (T::TAU()).ln() + (x + T::lit(0.5)) * t.ln() - t + a.ln()
}

/// `Γ(x)` for `x > 0`.
pub fn gamma<T: Real>(x: T) -> T {
    if x < T::lit(0.5) {
        return gamma(x + T::one()) / x;
    }
    ln_gamma(x).exp()
}

pub fn beta<T: Real>(a: T, b: T) -> T {
    (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
}

/// Volume of the unit ball in `d` dimensions.
pub fn unit_ball_volume<T: Real>(d: usize) -> T {
    let h = T::from_usize_lossy(d) / T::lit(2.0);
    T::PI().powf(h) / gamma(h + T::one())
}

/// Surface area of the unit sphere in `d` dimensions.
pub fn unit_sphere_area<T: Real>(d: usize) -> T {
    unit_ball_volume::<T>(d) * T::from_usize_lossy(d)
}

fn lower_series<T: Real>(a: T, x: T) -> T {
    // γ(a,x) = x^a e^{-x} Σ x^n / (a (a+1) ... (a+n))
    let mut term = T::one() / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..10_000 {
        ap = ap + T::one();
        term = term * x / ap;
        sum = sum + term;
        if term.abs() < sum.abs() * T::epsilon() {
            break;
        }
    }
    sum * (a * x.ln() - x).exp()
}

fn upper_fraction<T: Real>(a: T, x: T) -> T {
    // modified Lentz evaluation of the continued fraction for Γ(a,x)
    let tiny = T::min_positive_value() / T::epsilon();
    let mut b = x + T::one() - a;
    let mut c = T::one() / tiny;
    let mut d = T::one() / b;
    let mut h = d;
    for i in 1..10_000 {
        let fi = T::from_usize_lossy(i);
        let an = -fi * (fi - a);
        b = b + T::lit(2.0);
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = T::one() / d;
        let del = d * c;
        h = h * del;
        if (del - T::one()).abs() < T::epsilon() {
            break;
        }
    }
    (a * x.ln() - x).exp() * h
}

/// Upper incomplete gamma `Γ(a, x) = ∫_x^∞ v^{a-1} e^{-v} dv` (not regularized), `a > 0`, `x ≥ 0`.
pub fn upper_incomplete_gamma<T: Real>(a: T, x: T) -> T {
    if x <= T::zero() {
        return gamma(a);
    }
    if x < T::one() && x < a + T::one() {
        gamma(a) - lower_series(a, x)
    } else {
        upper_fraction(a, x)
    }
}

/// Lower incomplete gamma `γ(a, x) = ∫_0^x v^{a-1} e^{-v} dv`, `a > 0`.
pub fn lower_incomplete_gamma<T: Real>(a: T, x: T) -> T {
    if x <= T::zero() {
        return T::zero();
    }
    if x < T::one() || x < a + T::one() {
        lower_series(a, x)
    } else {
        gamma(a) - upper_fraction(a, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_known_values() {
        assert!((gamma(1.0f64) - 1.0).abs() < 1e-14);
        assert!((gamma(0.5f64) - std::f64::consts::PI.sqrt()).abs() < 1e-13);
        assert!((gamma(5.0f64) - 24.0).abs() < 1e-11);
        // Γ(ε) ≈ 1/ε - γ_E
        let eps = 1e-20f64;
        assert!((gamma(eps) * eps - 1.0).abs() < 1e-15);
    }

    #[test]
    fn beta_half_half_is_pi() {
        assert!((beta(0.5f64, 0.5) - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume::<f64>(2) - std::f64::consts::PI).abs() < 1e-13);
        assert!((unit_ball_volume::<f64>(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-13);
        assert!((unit_sphere_area::<f64>(3) - 4.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn incomplete_gamma_a_one_is_exponential() {
        for &x in &[0.3f64, 1.0, 2.5, 10.0] {
            assert!((upper_incomplete_gamma(1.0, x) - (-x).exp()).abs() < 1e-13);
            assert!((lower_incomplete_gamma(1.0, x) - (1.0 - (-x).exp())).abs() < 1e-13);
        }
    }

    #[test]
    fn upper_incomplete_gamma_small_a_tends_to_e1() {
        // E1(1) = 0.219383934395520
        let v = upper_incomplete_gamma(1e-25f64, 1.0);
        assert!((v - 0.219_383_934_395_520_3).abs() < 1e-12, "{v}");
    }
}
