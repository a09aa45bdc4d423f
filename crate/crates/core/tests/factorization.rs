use minphase::factorization::{
    classify, delay_of_with_center, factorize, factorize_with_center, front_loading_slack, mean_log_modulus,
    min_phase_from_magnitude, outer_factor, InnerFactor, PhaseTag,
};
use minphase::laguerre::d_map;
use minphase::signal::{probes, translate, CausalSignal};
use minphase::transforms::{h_transform, h_transform_at, mobius, BoundaryFunction, FourierCoefficients};
use minphase::{Complex64 as C, Config, Error};
use proptest::prelude::*;

fn c(x: f64) -> C {
    C::new(x, 0.0)
}

fn on_circle(f: impl Fn(C) -> C) -> BoundaryFunction {
    BoundaryFunction::from_fn(Config::default().circle_grid(), f).unwrap()
}

fn singular(tau: f64) -> impl Fn(C) -> C {
    move |z| (-tau * mobius(z)).exp()
}

#[test]
fn outer_polynomial_is_its_own_outer_factor() {
    let cfg = Config::default();
    let g = on_circle(|z| 1.0 - z / 2.0);
    let o = outer_factor(&g, &cfg).unwrap();
    assert!(o.sup_distance(&g).unwrap() < 1e-8);
    assert!((mean_log_modulus(&g, &cfg).unwrap() - 0.0).abs() < 1e-12);
}

#[test]
fn singular_inner_factor_has_trivial_outer() {
    let cfg = Config::default();
    let g = on_circle(singular(1.0));
    let fac = factorize_with_center(&g, (-1.0f64).exp().into(), &cfg).unwrap();
    assert!(fac.outer.values().iter().all(|v| (v - 1.0).norm() < 1e-6));
    assert!((fac.delay_tau - 1.0).abs() < 1e-9);
}

#[test]
fn unimodular_factor_is_inner() {
    let cfg = Config::default();
    let g = on_circle(|z| z * (2.0 + z));
    let fac = factorize(&g, &cfg).unwrap();
    let z = g.grid().points();
    for (j, v) in fac.inner.values().iter().enumerate() {
        assert!((v.norm() - 1.0).abs() < 1e-9);
        assert!((v - z[j]).norm() < 1e-8);
    }
}

#[test]
fn delayed_outer_product() {
    let cfg = Config::default();
    let prod = |z: C| singular(2.0)(z) * (1.0 - z / 2.0);
    let g = on_circle(prod);
    let fac = factorize_with_center(&g, prod(c(0.0)), &cfg).unwrap();
    assert!((fac.delay_tau - 2.0).abs() < 0.01);
    assert!(fac.outer.sup_distance(&on_circle(|z| 1.0 - z / 2.0)).unwrap() < 1e-6);
}

#[test]
fn constant_function() {
    let cfg = Config::default();
    let fac = factorize(&on_circle(|_| c(1.0)), &cfg).unwrap();
    assert!(fac.inner.values().iter().all(|v| (v - 1.0).norm() < 1e-12));
    assert_eq!(fac.delay_tau, 0.0);
}

#[test]
fn delay_of_a_pure_singular_factor() {
    let cfg = Config::default();
    for tau in [0.3, 1.7] {
        let est = delay_of_with_center(&on_circle(singular(tau)), (-tau).exp().into(), &cfg).unwrap();
        assert!((est.tau - tau).abs() < 1e-9);
    }
}

#[test]
fn delay_of_translated_rho0() {
    let cfg = Config::default();
    let f = translate(&probes::rho0(cfg.time_grid().unwrap()), 0.5).unwrap();
    let g = h_transform(&f, &cfg.circle_grid()).unwrap();
    let g0 = h_transform_at(&f, &[c(0.0)]).unwrap()[0];
    assert!((delay_of_with_center(&g, g0, &cfg).unwrap().tau - 0.5).abs() <= cfg.dt);
}

#[test]
fn zero_at_origin_is_an_error_for_delay_extraction() {
    let cfg = Config::default();
    let g = on_circle(|z| z);
    assert!(matches!(delay_of_with_center(&g, c(0.0), &cfg), Err(Error::ZeroAtOrigin(_))));
}

#[test]
fn classification_examples() {
    let cfg = Config::default();
    let grid = cfg.time_grid().unwrap();
    assert_eq!(classify(&probes::rho0(grid), &cfg).unwrap().tag, PhaseTag::MinimumPhase);
    match classify(&translate(&probes::rho0(grid), 1.0).unwrap(), &cfg).unwrap().tag {
        PhaseTag::TranslatedMinimumPhase { tau } => assert!((tau - 1.0).abs() <= cfg.dt),
        other => panic!("{other:?}"),
    }
    let sum = CausalSignal::linear_combination(&[(c(1.0), &probes::sigma0(grid)), (c(1.0), &probes::sigma1(grid))])
        .unwrap();
    assert_eq!(classify(&sum, &cfg).unwrap().tag, PhaseTag::MinimumPhase);
    assert_eq!(classify(&probes::rho1(grid), &cfg).unwrap().tag, PhaseTag::Other);
    assert!(matches!(classify(&CausalSignal::zeros(grid), &cfg), Err(Error::Domain(_))));
}

#[test]
fn translated_signals_classify_with_their_shift() {
    let cfg = Config::default();
    let grid = cfg.time_grid().unwrap();
    for f in [probes::rho0(grid), probes::sigma1(grid), CausalSignal::from_real_fn(grid, |t| (-2.0 * t).exp())] {
        for tau in [0.25, 1.5] {
            match classify(&translate(&f, tau).unwrap(), &cfg).unwrap().tag {
                PhaseTag::TranslatedMinimumPhase { tau: est } => assert!((est - tau).abs() <= cfg.dt + 1e-3),
                other => panic!("tau={tau}: {other:?}"),
            }
        }
    }
}

#[test]
fn minimum_phase_from_magnitude() {
    let cfg = Config::default();
    let one = min_phase_from_magnitude(&on_circle(|_| c(1.0)), &cfg).unwrap();
    assert!((one.coeffs[0] - 1.0).norm() < 1e-12 && one.coeffs[1..8].iter().all(|v| v.norm() < 1e-12));

    let a = min_phase_from_magnitude(&on_circle(|z| c((1.0 - z / 2.0).norm())), &cfg).unwrap();
    assert!((a.coeffs[0] - 1.0).norm() < 1e-8 && (a.coeffs[1] + 0.5).norm() < 1e-8);
    assert!(a.coeffs[2..16].iter().all(|v| v.norm() < 1e-8));

    // |1 − 2z| = |2 − z| on the circle; the outer representative is 2 − z.
    let b = min_phase_from_magnitude(&on_circle(|z| c((1.0 - 2.0 * z).norm())), &cfg).unwrap();
    assert!((b.coeffs[0].norm() - 2.0).abs() < 1e-8 && (b.coeffs[1].norm() - 1.0).abs() < 1e-8);
}

#[test]
fn front_loading_for_signal_coefficients() {
    let cfg = Config::default();
    let grid = cfg.time_grid().unwrap();
    let a = d_map(&CausalSignal::from_real_fn(grid, |t| (-2.0 * t).exp()), 64).unwrap().as_coefficients();
    for inner in [InnerFactor::Monomial(1), InnerFactor::Blaschke(C::new(0.3, -0.6)), InnerFactor::Singular(2.0)] {
        assert!(front_loading_slack(&a, &inner) >= -1e-8);
    }
}

/// Polynomials with every zero outside the closed disk.
fn outer_polynomial() -> impl Strategy<Value = Vec<C>> {
    prop::collection::vec((1.2..4.0f64, 0.0..std::f64::consts::TAU), 1..4).prop_map(|zeros| {
        let mut p = vec![c(1.0)];
        for (r, th) in zeros {
            let root = C::from_polar(r, th);
            let mut next = vec![c(0.0); p.len() + 1];
            for (k, a) in p.iter().enumerate() {
                next[k] += a;
                next[k + 1] -= a / root;
            }
            p = next;
        }
        p
    })
}

fn horner(p: &[C], z: C) -> C {
    p.iter().rev().fold(c(0.0), |acc, a| acc * z + a)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn outer_factor_properties(p in outer_polynomial()) {
        let cfg = Config::default();
        let g = on_circle(|z| horner(&p, z));
        let o = outer_factor(&g, &cfg).unwrap();
        for (a, b) in o.values().iter().zip(g.values()) {
            prop_assert!((a.norm() - b.norm()).abs() <= 1e-6 * b.norm());
        }
        let oo = outer_factor(&o, &cfg).unwrap();
        prop_assert!(oo.sup_distance(&o).unwrap() < 1e-8);
        let ml = mean_log_modulus(&g, &cfg).unwrap();
        prop_assert!((ml - horner(&p, c(0.0)).norm().ln()).abs() < 1e-8);
    }

    #[test]
    fn front_loading_holds_for_outer_sequences(p in outer_polynomial(), ar in -0.9..0.9f64, ai in -0.4..0.4f64, tau in 0.0..3.0f64) {
        let mut coeffs = p.clone();
        coeffs.resize(48, c(0.0));
        let a = FourierCoefficients { coeffs };
        for inner in [InnerFactor::Blaschke(C::new(ar, ai)), InnerFactor::Singular(tau), InnerFactor::Monomial(3)] {
            prop_assert!(front_loading_slack(&a, &inner) >= -1e-8);
        }
    }
}
