mod common;

use common::group::random_element;
use nlsx::bifurcation::*;
use nlsx::symmetry::{act_on_coeff, max_abs_diff, IDENTITY};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn unit_overlap_representatives() {
    let roots = solve_zero_order(1.0).unwrap();
    let o1 = roots.iter().find(|r| r.orbit == Orbit::O1RealType).unwrap();
    assert!((o1.z[0].re - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    assert!((norm2(&o1.z) - 1.0 / 3.0).abs() < 1e-15);
    let o2 = roots.iter().find(|r| r.orbit == Orbit::O2ComplexType).unwrap();
    assert!((o2.z[0] - 0.5).norm() < 1e-15 && (o2.z[1] - C64::new(0.0, 0.5)).norm() < 1e-15);
    assert!((norm2(&o2.z) - 0.5).abs() < 1e-15 && square(&o2.z).norm() < 1e-15);
    let zero = roots.iter().find(|r| r.orbit == Orbit::Zero).unwrap();
    assert_eq!(zero.residual, 0.0);
    assert!(roots.iter().all(|r| r.residual <= 1e-12));
}

#[test]
fn orbit_invariants_hold_for_several_overlaps() {
    for i in [0.013, 0.5, 1.0, 7.0] {
        let roots = solve_zero_order(i).unwrap();
        assert!((norm2(&roots[0].z) - 1.0 / (3.0 * i)).abs() < 1e-12 / i);
        assert!((norm2(&roots[1].z) - 1.0 / (2.0 * i)).abs() < 1e-12 / i);
        assert!(roots.iter().all(|r| r.residual <= 1e-12 * (1.0 + 1.0 / i.powf(1.5))));
    }
}

#[test]
fn two_hundred_random_samples_per_orbit_round_trip() {
    let i = 0.37;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for (rep, orbit) in [(representative_o1(i), Orbit::O1RealType), (representative_o2(i), Orbit::O2ComplexType)] {
        for _ in 0..200 {
            let g = random_element(&mut rng);
            let z = act_on_coeff(&g, rep);
            let root = classify_root(z, i, DEFAULT_TOL).unwrap();
            assert_eq!(root.orbit, orbit);
            assert!(canonical_error(&root, i) < 1e-8, "{:?}", root);
        }
    }
}

#[test]
fn degenerate_complex_cases_are_handled() {
    let i = 1.0;
    let c = 0.5;
    let cases: [[C64; 3]; 4] = [
        [C64::new(c, 0.0), C64::new(0.0, 0.0), C64::new(0.0, c)],
        [C64::new(0.0, 0.0), C64::new(c, 0.0), C64::new(0.0, -c)],
        [C64::new(0.0, c), C64::new(c, 0.0), C64::new(0.0, 0.0)],
        [C64::new(c, 0.0), C64::new(0.0, c * 0.6), C64::new(0.0, c * 0.8)],
    ];
    for z in cases {
        let root = classify_root(z, i, DEFAULT_TOL).unwrap();
        assert_eq!(root.orbit, Orbit::O2ComplexType);
        assert!(canonical_error(&root, i) < 1e-12);
    }
}

#[test]
fn real_type_with_random_phase() {
    let i: f64 = 2.5;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let mut x: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let n = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        for v in x.iter_mut() {
            *v /= n * (3.0 * i).sqrt();
        }
        let beta = rng.gen_range(0.0..6.28);
        let z = x.map(|v| C64::from_polar(v, beta));
        let root = classify_root(z, i, DEFAULT_TOL).unwrap();
        assert_eq!(root.orbit, Orbit::O1RealType);
        assert!(canonical_error(&root, i) < 1e-10);
    }
}

#[test]
fn non_roots_are_rejected() {
    let z = [C64::new(1.0, 0.0); 3];
    assert!(matches!(classify_root(z, 1.0, DEFAULT_TOL), Err(nlsx::Error::NotARoot { .. })));
}

#[test]
fn canonicalizing_a_representative_is_the_identity() {
    for i in [0.2, 1.0, 3.0] {
        for z in [representative_o1(i), representative_o2(i)] {
            let r = classify_root(z, i, DEFAULT_TOL).unwrap();
            assert!(max_abs_diff(&r.canonical_map.spatial, &IDENTITY) < 1e-12);
            assert!(canonical_error(&r, i) < 1e-12);
        }
    }
}

#[test]
fn continuation_of_the_zero_order_map_stays_at_zero() {
    for b in [BranchSign::Plus, BranchSign::Minus] {
        let pts = continue_branch(b, 0.1, |_, a| Ok(reduced_map_zero_order(b, 0.8, a)), &ContinuationConfig::default()).unwrap();
        assert_eq!(pts.len(), 11);
        assert!(pts.iter().all(|p| p.a.abs() < 1e-12));
    }
}

#[test]
fn continuation_tracks_a_linear_branch() {
    // A model reduced map whose root is a(ε) = 0.3 ε.
    let b = BranchSign::Plus;
    let model = |eps: f64, a: f64| Ok(reduced_map_zero_order(b, 1.0, a - 0.3 * eps));
    let pts = continue_branch(b, 0.1, model, &ContinuationConfig::default()).unwrap();
    for p in &pts {
        assert!((p.a - 0.3 * p.epsilon).abs() < 1e-10);
    }
    for p in pts.iter().filter(|p| p.epsilon >= 0.02) {
        assert!((p.a / p.epsilon).abs() < 1.0);
    }
}

#[test]
fn continuation_reports_failure() {
    let r = continue_branch(BranchSign::Minus, 0.05, |eps, a| Ok(1.0 + eps + a * a), &ContinuationConfig::default());
    assert!(r.is_err());
}

proptest! {
    #[test]
    fn orbit_labels_are_invariant(seed in any::<u64>(), which in 0usize..2) {
        let i = 0.9;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rep = if which == 0 { representative_o1(i) } else { representative_o2(i) };
        let z = act_on_coeff(&random_element(&mut rng), rep);
        let w = act_on_coeff(&random_element(&mut rng), z);
        let a = classify_root(z, i, DEFAULT_TOL).unwrap();
        let b = classify_root(w, i, DEFAULT_TOL).unwrap();
        prop_assert_eq!(a.orbit, b.orbit);
    }

    #[test]
    fn roots_scale_covariantly(c in 0.2f64..5.0, seed in any::<u64>()) {
        let i = 0.6;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for rep in [representative_o1(i), representative_o2(i)] {
            let z = act_on_coeff(&random_element(&mut rng), rep);
            let scaled = z.map(|x| x / c);
            prop_assert!(residual(&scaled, c * c * i) <= 1e-12 * (1.0 + 1.0 / (c * c * i)));
        }
    }
}
