use minphase::signal::{inner_product, partial_energy, probes, translate, CausalSignal, TimeGrid};
use minphase::{Complex64 as C, Error};
use proptest::prelude::*;

fn signal_strategy(n: usize) -> impl Strategy<Value = Vec<C>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| C::new(a, b)), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn translations_compose_exactly(values in signal_strategy(200), a in 0usize..60, b in 0usize..60) {
        let grid = TimeGrid::new(0.125, 200).unwrap();
        let f = CausalSignal::new(grid, values).unwrap();
        let (ta, tb) = (a as f64 * 0.125, b as f64 * 0.125);
        let two_steps = translate(&translate(&f, ta).unwrap(), tb).unwrap();
        let one_step = translate(&f, ta + tb).unwrap();
        prop_assert_eq!(two_steps.values(), one_step.values());
    }

    #[test]
    fn partial_energy_is_monotone(values in signal_strategy(120)) {
        let grid = TimeGrid::new(0.05, 120).unwrap();
        let f = CausalSignal::new(grid, values).unwrap();
        let mut last = 0.0;
        for k in 0..120 {
            let e = partial_energy(&f, k as f64 * 0.05).unwrap();
            prop_assert!(e >= last);
            last = e;
        }
        let full = partial_energy(&f, grid.t_max()).unwrap();
        prop_assert!((full - f.norm_sq()).abs() <= 1e-12 * (1.0 + full));
    }

    #[test]
    fn inner_product_is_sesquilinear(x in signal_strategy(64), y in signal_strategy(64), z in signal_strategy(64),
                                     ar in -2.0..2.0f64, ai in -2.0..2.0f64) {
        let grid = TimeGrid::new(0.1, 64).unwrap();
        let (f, g, h) = (
            CausalSignal::new(grid, x).unwrap(),
            CausalSignal::new(grid, y).unwrap(),
            CausalSignal::new(grid, z).unwrap(),
        );
        let a = C::new(ar, ai);
        let one = C::new(1.0, 0.0);
        let combo = CausalSignal::linear_combination(&[(a, &f), (one, &g)]).unwrap();
        let lhs = inner_product(&combo, &h).unwrap();
        let rhs = a * inner_product(&f, &h).unwrap() + inner_product(&g, &h).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-10);
        let sym = inner_product(&g, &f).unwrap() - inner_product(&f, &g).unwrap().conj();
        prop_assert!(sym.norm() < 1e-12);
    }

    #[test]
    fn csv_round_trip(values in signal_strategy(20)) {
        let grid = TimeGrid::new(0.25, 20).unwrap();
        let f = CausalSignal::new(grid, values).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let back = CausalSignal::read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back.values(), f.values());
        prop_assert!(back.grid().is_compatible(f.grid()));
    }
}

#[test]
fn rho0_has_unit_norm_on_a_fine_grid() {
    let grid = TimeGrid::with_t_max(0.001, 40.0).unwrap();
    let f = probes::rho0(grid);
    assert!((inner_product(&f, &f).unwrap().re - 1.0).abs() < 1e-6);
}

#[test]
fn zero_annihilates() {
    let grid = TimeGrid::with_t_max(0.01, 10.0).unwrap();
    let f = CausalSignal::from_real_fn(grid, |t| (-t).exp());
    assert_eq!(inner_product(&f, &CausalSignal::zeros(grid)).unwrap(), C::new(0.0, 0.0));
}

#[test]
fn sigma_probe_product_matches_brute_force_quadrature() {
    // Composite midpoint rule with 4·10⁶ cells on [0, 40].
    let cells = 4_000_000;
    let h = 40.0 / cells as f64;
    let oracle: f64 = (0..cells)
        .map(|k| {
            let t = (k as f64 + 0.5) * h;
            (-2.0 * t).exp() * t * (1.0 - t)
        })
        .sum::<f64>()
        * h;
    let grid = TimeGrid::with_t_max(1.0 / 256.0, 40.0).unwrap();
    let got = inner_product(&probes::sigma0(grid), &probes::sigma1(grid)).unwrap();
    assert!((got.re - oracle).abs() < 1e-9 && got.im == 0.0, "{got} vs {oracle}");
}

#[test]
fn halving_dt_changes_inner_products_by_at_most_dt_squared() {
    for dt in [0.1, 0.05, 0.025] {
        let ip = |dt: f64| {
            let grid = TimeGrid::with_t_max(dt, 30.0).unwrap();
            let f = CausalSignal::from_real_fn(grid, |t| (-t).exp());
            let g = CausalSignal::from_real_fn(grid, |t| (-2.0 * t).exp());
            inner_product(&f, &g).unwrap().re
        };
        assert!((ip(dt) - ip(dt / 2.0)).abs() < dt * dt);
    }
}

#[test]
fn translate_examples() {
    let grid = TimeGrid::with_t_max(0.01, 5.0).unwrap();
    let f = CausalSignal::from_real_fn(grid, |t| (-t).exp());
    assert_eq!(translate(&f, 0.0).unwrap().values(), f.values());

    let pulse = CausalSignal::from_real_fn(grid, |t| if t < 0.005 { 1.0 } else { 0.0 });
    let moved = translate(&pulse, 1.0).unwrap();
    let idx: Vec<usize> = (0..grid.n_samples()).filter(|&k| moved.values()[k].norm() > 0.0).collect();
    assert_eq!(idx, vec![100]);

    assert!(matches!(translate(&f, 0.005), Err(Error::Quantization { .. })));

    let long = TimeGrid::with_t_max(1.0 / 256.0, 40.0).unwrap();
    let e = CausalSignal::from_real_fn(long, |t| (-t).exp());
    let ratio = translate(&e, 1.0).unwrap().norm_sq() / e.norm_sq();
    assert!((ratio - 1.0).abs() < 1e-9, "{ratio}");
    let tail = e.norm_sq() - partial_energy(&e, 1.0).unwrap();
    assert!((tail - (-2.0f64).exp() * e.norm_sq()).abs() < 1e-9, "{tail}");
    assert!(matches!(translate(&f, -1.0), Err(Error::Domain(_))));
}

#[test]
fn partial_energy_of_rho0_on_unit_interval() {
    let grid = TimeGrid::with_t_max(1.0 / 256.0, 40.0).unwrap();
    let f = probes::rho0(grid);
    assert_eq!(partial_energy(&f, 0.0).unwrap(), 0.0);
    let exact = 1.0 - (-2.0f64).exp();
    assert!((partial_energy(&f, 1.0).unwrap() - exact).abs() < 1e-6);
}

#[test]
fn csv_errors_carry_line_numbers() {
    let bad = "t,re,im\n0,1,0\n0.5,1,0\n0.75,1,0\n";
    match CausalSignal::read_csv(bad.as_bytes()) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
        other => panic!("expected a parse error, got {other:?}"),
    }
    let garbled = "t,re,im\n0,1,0\n0.5,x,0\n";
    assert!(matches!(CausalSignal::read_csv(garbled.as_bytes()), Err(Error::Parse { line: 3, .. })));
}
