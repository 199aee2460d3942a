use driftlab::fields::{Grid, MixedNormSpec, ScalarField, VectorField};
use driftlab::morrey::lps_decompose;
use driftlab::pde::{clip_drift, estimate_report, solve_backward};
use driftlab::scalar::mean_and_se;
use driftlab::sde::{
    exp_moment_check, feynman_kac, girsanov_phi, perturbed_value, second_moment_check, simulate,
    Estimator, McSettings, StartPoint,
};

fn grid1() -> Grid<f64> {
    Grid::new(1, 6.0, 192, 1.0, 128).unwrap()
}

fn gaussian_source(g: Grid<f64>) -> ScalarField<f64> {
    ScalarField::from_fn(g, |t, x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        (-(t - 0.5f64).powi(2) / 0.04 - r2 / 0.25).exp()
    })
}

fn constant(g: Grid<f64>, c: f64) -> VectorField<f64> {
    VectorField::from_fn(g, move |_, _, out| out.iter_mut().for_each(|v| *v = c))
}

fn smooth_drift(g: Grid<f64>) -> VectorField<f64> {
    VectorField::from_fn(g, |t, x, out| {
        out[0] = 0.8 * (2.0 * x[0]).sin() * (1.0 + t) * (-x[0] * x[0] / 4.0).exp()
    })
}

#[test]
fn driftless_paths_have_brownian_scaling() {
    let g = grid1();
    let ens = simulate(
        &VectorField::zeros(g),
        StartPoint::new(0.0, &[0.3]),
        &McSettings::new(20_000, 0.01, 11).unwrap(),
    )
    .unwrap();
    for &k in &[10usize, 50, 100] {
        let xs: Vec<f64> = (0..ens.n_paths).map(|p| ens.position(p, k)[0]).collect();
        let (mean, se) = mean_and_se(&xs);
        assert!((mean - 0.3).abs() <= 3.0 * se);
        let sq: Vec<f64> = xs.iter().map(|x| (x - 0.3).powi(2)).collect();
        let (var, var_se) = mean_and_se(&sq);
        let s = ens.time(k);
        assert!(
            (var - 2.0 * s).abs() <= 3.0 * var_se,
            "k {k}: {var} vs {}",
            2.0 * s
        );
    }
    assert!(ens.exit_fraction < 0.01);
    assert!(!ens.drift_overshoot);
}

#[test]
fn constant_drift_displaces_the_mean() {
    let g = grid1();
    let ens = simulate(
        &constant(g, 0.7),
        StartPoint::origin(),
        &McSettings::new(20_000, 0.01, 5).unwrap(),
    )
    .unwrap();
    for &k in &[20usize, 100] {
        let xs: Vec<f64> = (0..ens.n_paths).map(|p| ens.position(p, k)[0]).collect();
        let (mean, se) = mean_and_se(&xs);
        assert!((mean - 0.7 * ens.time(k)).abs() <= 3.0 * se);
    }
}

#[test]
fn ensembles_are_reproducible_from_the_seed() {
    let g = Grid::<f64>::new(2, 4.0, 32, 1.0, 16).unwrap();
    let b = VectorField::from_fn(g, |_, x, out| {
        out[0] = -x[1];
        out[1] = x[0];
    });
    let settings = McSettings::new(500, 0.02, 99).unwrap();
    let a = simulate(&b, StartPoint::origin(), &settings).unwrap();
    let c = simulate(&b, StartPoint::origin(), &settings).unwrap();
    assert_eq!(a, c);
    let other = simulate(
        &b,
        StartPoint::origin(),
        &McSettings::new(500, 0.02, 100).unwrap(),
    )
    .unwrap();
    assert_ne!(a.positions, other.positions);
}

#[test]
fn girsanov_weights_for_zero_and_constant_drift() {
    let g = grid1();
    let zero = VectorField::zeros(g);
    let ens = simulate(
        &zero,
        StartPoint::origin(),
        &McSettings::new(100_000, 0.01, 1).unwrap(),
    )
    .unwrap();
    assert!(girsanov_phi(&ens, &zero).iter().all(|&p| p == 0.0));
    let c = 0.8;
    let phi = girsanov_phi(&ens, &constant(g, c));
    let (m1, se1) = mean_and_se(&phi.iter().map(|p| p.exp()).collect::<Vec<_>>());
    assert!((m1 - 1.0).abs() <= 3.0 * se1, "{m1} ± {se1}");
    let (m2, se2) = mean_and_se(&phi.iter().map(|p| (2.0 * p).exp()).collect::<Vec<_>>());
    let exact = (c * c / 2.0f64).exp();
    assert!((m2 - exact).abs() <= 3.0 * se2, "{m2} vs {exact}");
    assert!(m2 <= (c * c).exp());
}

#[test]
fn exponential_martingale_for_three_drifts() {
    let g = grid1();
    let settings = McSettings::new(100_000, 0.01, 21).unwrap();
    let drifts = [VectorField::zeros(g), constant(g, 0.9), smooth_drift(g)];
    for (j, b) in drifts.iter().enumerate() {
        let m = exp_moment_check(b, 1.0, StartPoint::origin(), &settings).unwrap();
        assert!(
            (m.estimate - 1.0).abs() <= 3.0 * m.se + 1e-12,
            "drift {j}: {} ± {}",
            m.estimate,
            m.se
        );
        for &lambda in &[0.5, 1.0, 2.0] {
            let e = exp_moment_check(b, lambda, StartPoint::origin(), &settings).unwrap();
            assert!(
                e.within_bound(),
                "drift {j} lambda {lambda}: {} > {}",
                e.estimate,
                e.bound
            );
        }
    }
}

#[test]
fn exponential_moment_trivial_cases() {
    let g = grid1();
    let settings = McSettings::new(1000, 0.01, 2).unwrap();
    let m = exp_moment_check(&VectorField::zeros(g), 2.0, StartPoint::origin(), &settings).unwrap();
    assert_eq!((m.estimate, m.bound), (1.0, 1.0));
    let m = exp_moment_check(&constant(g, 3.0), 0.0, StartPoint::origin(), &settings).unwrap();
    assert_eq!((m.estimate, m.bound), (1.0, 1.0));
    // Constant in space, varying in time.
    let part = VectorField::from_fn(g, |t, _, out| out[0] = 1.5 * (3.0 * t).cos());
    let m = exp_moment_check(
        &part,
        2.0,
        StartPoint::origin(),
        &McSettings::new(100_000, 0.01, 3).unwrap(),
    )
    .unwrap();
    assert!(m.estimate < m.bound);
    assert!(m.bracket > 0.0);
}

#[test]
fn feynman_kac_matches_finite_differences_without_drift() {
    let g = grid1();
    let f = gaussian_source(g);
    let b = VectorField::zeros(g);
    let fd = solve_backward(&b, &f).unwrap().at(0, g.center());
    let mc = feynman_kac(
        &b,
        &f,
        StartPoint::origin(),
        &McSettings::new(100_000, 0.01, 7).unwrap(),
        Estimator::Drifted,
    )
    .unwrap();
    assert!(
        (mc.value - fd).abs() <= 3.0 * mc.se + 0.05 * fd.abs(),
        "{} ± {} vs {fd}",
        mc.value,
        mc.se
    );
    let zero = feynman_kac(
        &b,
        &ScalarField::zeros(g),
        StartPoint::origin(),
        &McSettings::new(100, 0.01, 7).unwrap(),
        Estimator::Weighted,
    )
    .unwrap();
    assert_eq!(zero.value, 0.0);
}

#[test]
fn feynman_kac_matches_finite_differences_with_thresholded_drift() {
    let g = grid1();
    let f = gaussian_source(g);
    let h = g.h();
    let b = VectorField::from_fn(g, |_, x, out| {
        let r = x[0].abs().max(h);
        out[0] = -0.3 * x[0].signum() * r.powf(-0.4);
    });
    let dec = lps_decompose(&b, 2.0, 4.0, 0.5).unwrap();
    let (b_prime, clip) = clip_drift(&dec.b_prime, 0.9);
    assert_eq!(clip.clipped_nodes, 0);
    let fd = solve_backward(&b_prime, &f).unwrap().at(0, g.center());
    let mc = feynman_kac(
        &b_prime,
        &f,
        StartPoint::origin(),
        &McSettings::new(100_000, 0.01, 8).unwrap(),
        Estimator::Drifted,
    )
    .unwrap();
    assert!(
        (mc.value - fd).abs() <= 3.0 * mc.se + 0.05 * fd.abs(),
        "{} ± {} vs {fd}",
        mc.value,
        mc.se
    );
}

#[test]
fn drifted_and_weighted_estimators_agree() {
    let g = grid1();
    let f = gaussian_source(g);
    let b = smooth_drift(g);
    let settings = McSettings::new(100_000, 0.01, 13).unwrap();
    let start = StartPoint::new(0.0, &[0.2]);
    let a = feynman_kac(&b, &f, start, &settings, Estimator::Drifted).unwrap();
    let w = feynman_kac(&b, &f, start, &settings, Estimator::Weighted).unwrap();
    let combined = (a.se * a.se + w.se * w.se).sqrt();
    assert!(
        (a.value - w.value).abs() <= 3.0 * combined,
        "{} vs {}",
        a.value,
        w.value
    );
}

#[test]
fn second_moment_identity_without_drift() {
    let g = grid1();
    let f = gaussian_source(g);
    let b = VectorField::zeros(g);
    let u = solve_backward(&b, &f).unwrap();
    let settings = McSettings::new(100_000, 0.01, 17).unwrap();
    let s = second_moment_check(&b, &f, &u, StartPoint::origin(), &settings).unwrap();
    let combined = (s.lhs_se * s.lhs_se + s.rhs_se * s.rhs_se).sqrt();
    assert!(
        (s.lhs - s.rhs).abs() <= 3.0 * combined + 0.05 * s.lhs,
        "{} vs {}",
        s.lhs,
        s.rhs
    );
    let f2 = f.scale(2.0);
    let u2 = solve_backward(&b, &f2).unwrap();
    let s2 = second_moment_check(&b, &f2, &u2, StartPoint::origin(), &settings).unwrap();
    assert!((s2.lhs / s.lhs - 4.0).abs() < 1e-10);
    assert!((s2.rhs / s.rhs - 4.0).abs() < 1e-10);
    let z = second_moment_check(
        &b,
        &ScalarField::zeros(g),
        &ScalarField::zeros(g),
        StartPoint::origin(),
        &settings,
    )
    .unwrap();
    assert_eq!((z.lhs, z.rhs), (0.0, 0.0));
}

#[test]
fn perturbed_value_respects_both_bounds() {
    let g = grid1();
    let f = gaussian_source(g);
    let b = smooth_drift(g);
    let spec = MixedNormSpec::time_outer(4.0, 4.0).unwrap();
    let settings = McSettings::new(100_000, 0.01, 23).unwrap();
    let n0 = estimate_report(&b, &f, &spec).unwrap().ratio;
    // No perturbation: identical to the drifted estimator on the same paths.
    let none = perturbed_value(
        &b,
        &VectorField::zeros(g),
        &f,
        StartPoint::origin(),
        &settings,
        n0,
        &spec,
    )
    .unwrap();
    let fk = feynman_kac(&b, &f, StartPoint::origin(), &settings, Estimator::Drifted).unwrap();
    assert_eq!(none.value, fk.value);
    assert_eq!(none.bracket, 0.0);
    // Bounded perturbation with unit-order bracket 0.5.
    let part = constant(g, 0.5f64.sqrt());
    let v = perturbed_value(&b, &part, &f, StartPoint::origin(), &settings, n0, &spec).unwrap();
    assert!((v.bracket - 0.5).abs() < 1e-12);
    assert!(v.value.abs() <= v.cauchy_schwarz + 3.0 * v.se);
    assert!(v.value.abs() <= v.certified_bound + 3.0 * v.se);
    // The weighted value solves the problem with drift b + part.
    let fd = solve_backward(&b.add(&part).unwrap(), &f)
        .unwrap()
        .at(0, g.center());
    assert!(
        (v.value - fd).abs() <= 3.0 * v.se + 0.05 * fd,
        "{} vs {fd}",
        v.value
    );
    let zero = perturbed_value(
        &b,
        &part,
        &ScalarField::zeros(g),
        StartPoint::origin(),
        &settings,
        n0,
        &spec,
    )
    .unwrap();
    assert_eq!(zero.value, 0.0);
}
