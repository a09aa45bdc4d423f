use minphase::factorization::{classify_boundary, delay_of_with_center, PhaseTag};
use minphase::laguerre::{basis_function, basis_functions, d_map, d_map_via_circle};
use minphase::signal::{inner_product, probes, translate, CausalSignal};
use minphase::transforms::BoundaryFunction;
use minphase::{Complex64 as C, Config};

fn grid() -> minphase::signal::TimeGrid {
    Config::default().time_grid().unwrap()
}

#[test]
fn basis_is_orthonormal() {
    let b = basis_functions(9, grid()).unwrap();
    for m in 0..9 {
        for n in 0..9 {
            let ip = inner_product(&b[m], &b[n]).unwrap();
            let e = if m == n { 1.0 } else { 0.0 };
            assert!((ip - e).norm() < 1e-6, "<{m},{n}> = {ip}");
        }
    }
}

#[test]
fn coefficients_of_basis_functions_are_unit_vectors() {
    let a = d_map(&probes::rho0(grid()), 6).unwrap();
    assert!((a.coeffs[0] - 1.0).norm() < 1e-12 && a.coeffs[1..].iter().all(|c| c.norm() < 1e-12));
    let a = d_map(&basis_function(3, grid()).unwrap(), 6).unwrap();
    for (n, c) in a.coeffs.iter().enumerate() {
        assert!((c - if n == 3 { 1.0 } else { 0.0 }).norm() < 1e-10);
    }
}

#[test]
fn parseval_partial_sums_for_sigma0() {
    let f = probes::sigma0(grid());
    let a = d_map(&f, 64).unwrap();
    assert!((a.energy() - f.norm_sq()).abs() < 1e-6);
}

#[test]
fn time_and_circle_routes_agree() {
    let g = grid();
    for f in [probes::sigma1(g), CausalSignal::from_real_fn(g, |t| (-2.0 * t).exp())] {
        let a = d_map(&f, 32).unwrap();
        let b = d_map_via_circle(&f, 32, 4096).unwrap();
        for (x, y) in a.coeffs.iter().zip(&b.coeffs) {
            assert!((x - y).norm() < 1e-6);
        }
    }
}

#[test]
fn synthesis_inverts_the_expansion() {
    let f = CausalSignal::from_real_fn(grid(), |t| t * t * (-t).exp());
    let a = d_map(&f, 8).unwrap();
    assert!(a.synthesize(grid()).unwrap().relative_distance(&f, &f).unwrap() < 1e-9);
}

/// Minimum phase is visible in the coefficient sequence: the z-transform of
/// `d_map(f)` is outer exactly when `f` is minimum phase.
#[test]
fn coefficient_sequences_inherit_minimum_phase() {
    let cfg = Config::default();
    let circle = cfg.circle_grid();
    let z = circle.points();
    let boundary = |f: &CausalSignal| {
        let a = d_map(f, 512).unwrap().coeffs;
        let values = z.iter().map(|z| a.iter().rev().fold(C::new(0.0, 0.0), |acc, c| acc * z + c)).collect();
        (BoundaryFunction::new(circle.clone(), values).unwrap(), a[0])
    };
    let classify_coeffs = |f: &CausalSignal| {
        let (g, a0) = boundary(f);
        classify_boundary(&g, a0, &cfg).unwrap().tag
    };
    for rate in [2.0, 0.5] {
        let f = CausalSignal::from_real_fn(grid(), |t| (-rate * t).exp());
        assert_eq!(classify_coeffs(&f), PhaseTag::MinimumPhase);
    }
    // A truncated delayed sequence is only approximately inner-outer, so the
    // delay is checked on its own.
    let (g, a0) = boundary(&translate(&probes::rho0(grid()), 0.5).unwrap());
    let tau = delay_of_with_center(&g, a0, &cfg).unwrap().tau;
    assert!((tau - 0.5).abs() < 0.05, "{tau}");
    // ρ₁ has a zero inside the disk (H ρ₁ = z), so it is not minimum phase.
    assert_eq!(classify_coeffs(&probes::rho1(grid())), PhaseTag::Other);
}
