mod common;

use common::group::{random_element, random_rotation};
use nlsx::potential::RadialPotential;
use nlsx::radial::{build_phi3d, default_grid, solve_radial};
use nlsx::symmetry::*;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cz(v: [f64; 6]) -> [C64; 3] {
    [C64::new(v[0], v[1]), C64::new(v[2], v[3]), C64::new(v[4], v[5])]
}

fn close(a: [C64; 3], b: [C64; 3], tol: f64) -> bool {
    (0..3).all(|i| (a[i] - b[i]).norm() <= tol)
}

proptest! {
    #[test]
    fn coefficient_action_is_a_group_action(seed in any::<u64>(), v in prop::array::uniform6(-2.0f64..2.0)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_element(&mut rng);
        let h = random_element(&mut rng);
        let z = cz(v);
        let lhs = act_on_coeff(&g.compose(&h), z);
        let rhs = act_on_coeff(&g, act_on_coeff(&h, z));
        prop_assert!(close(lhs, rhs, 1e-12));
        let back = act_on_coeff(&g.inverse(), act_on_coeff(&g, z));
        prop_assert!(close(back, z, 1e-12));
    }

    #[test]
    fn coefficient_action_preserves_norm(seed in any::<u64>(), v in prop::array::uniform6(-2.0f64..2.0)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_element(&mut rng);
        let z = cz(v);
        let n0: f64 = z.iter().map(|x| x.norm_sqr()).sum();
        let n1: f64 = act_on_coeff(&g, z).iter().map(|x| x.norm_sqr()).sum();
        prop_assert!((n0.sqrt() - n1.sqrt()).abs() <= 1e-12);
    }

    #[test]
    fn euler_brauer_angles_recover_rotations(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_rotation(&mut rng);
        let (d, al, s) = gamma_angles(&a).unwrap();
        for x in [d, al, s] {
            prop_assert!((0.0..2.0 * std::f64::consts::PI).contains(&x));
        }
        let b = compose_gamma(RotationAngles::Gamma { delta: d, alpha: al, sigma: s }).unwrap();
        prop_assert!(max_abs_diff(&a, &b) <= 1e-10);
    }

    #[test]
    fn gamma_products_are_proper_rotations(d in 0.0f64..6.28, a in 0.0f64..6.28, s in 0.0f64..6.28) {
        for m in [
            compose_gamma(RotationAngles::Gamma { delta: d, alpha: a, sigma: s }).unwrap(),
            compose_gamma(RotationAngles::Gamma0 { alpha: a, delta: d }).unwrap(),
            compose_gamma(RotationAngles::Gamma1 { alpha: s, delta: d }).unwrap(),
        ] {
            prop_assert!(max_abs_diff(&matmul(&transpose(&m), &m), &IDENTITY) <= 1e-12);
            prop_assert!((det(&m) - 1.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn gamma0_at_origin_is_identity() {
    let m = compose_gamma(RotationAngles::Gamma0 { alpha: 0.0, delta: 0.0 }).unwrap();
    assert_eq!(m, IDENTITY);
}

#[test]
fn group_element_rejects_non_orthogonal_matrices() {
    let m = [[1.0, 0.1, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    assert!(GroupElement::new(m, Internal::Phase(0.0)).is_err());
    let g = GroupElement::new(IDENTITY, Internal::Phase(7.0)).unwrap();
    match g.internal {
        Internal::Phase(r) => assert!((r - (7.0 - 2.0 * std::f64::consts::PI)).abs() < 1e-15),
        _ => unreachable!(),
    }
}

fn phi_cube(axis: usize) -> CubeField {
    let v = RadialPotential::square_well(14.196631114398, 1.0).unwrap();
    let grid = default_grid(&v).unwrap();
    let p = build_phi3d(&solve_radial(&v, 1, &grid).unwrap()[0]).unwrap();
    CubeField::sample(33, 6.0, |x| C64::new(x[axis] * p.eval((x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()), 0.0))
}

#[test]
fn field_action_identity_and_phase_are_exact() {
    let f = phi_cube(0);
    assert_eq!(act_on_field(&GroupElement::identity(), &f), f);
    let g = act_on_field(&GroupElement::phase(0.3), &f);
    let e = C64::from_polar(1.0, 0.3);
    assert!(g.data.iter().zip(&f.data).all(|(a, b)| *a == e * b));
}

#[test]
fn axis_permutation_maps_phi1_to_phi2() {
    let f1 = phi_cube(0);
    let f2 = phi_cube(1);
    // (g*φ₁)(x) = φ₁(P x) with (P x)₁ = x₂.
    let p = [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]];
    let g = GroupElement::new(p, Internal::Phase(0.0)).unwrap();
    let out = act_on_field(&g, &f1);
    let err = out.data.iter().zip(&f2.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(err < 1e-12, "{err}");
    let v = act_on_v(&g, [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
    assert!((v[1] - 1.0).norm() < 1e-15);
}

fn rotation_error(n: usize) -> (f64, f64) {
    let v = RadialPotential::square_well(14.196631114398, 1.0).unwrap();
    let grid = default_grid(&v).unwrap();
    let p = build_phi3d(&solve_radial(&v, 1, &grid).unwrap()[0]).unwrap();
    let f1 = CubeField::sample(n, 6.0, |x| C64::new(x[0] * p.eval((x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()), 0.0));
    let r = compose_gamma(RotationAngles::Gamma { delta: 0.3, alpha: 0.5, sigma: 1.1 }).unwrap();
    let out = act_on_field(&GroupElement::spatial(r), &f1);
    let peak = f1.data.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let mut err = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let x = [f1.coord(i), f1.coord(j), f1.coord(k)];
                let y = mat_vec(&r, x);
                if y.iter().any(|c| c.abs() > f1.half_width) {
                    continue;
                }
                let rr = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                err = err.max((out.data[(i * n + j) * n + k].re - y[0] * p.eval(rr)).abs());
            }
        }
    }
    (err, peak)
}

#[test]
fn generic_rotation_matches_analytic_resampling_to_interpolation_accuracy() {
    let (e1, peak) = rotation_error(33);
    let (e2, _) = rotation_error(65);
    assert!(e1 / e2 > 3.0, "trilinear error should fall like h²: {e1} -> {e2}");
    assert!(e2 < 0.05 * peak, "interpolation error {e2} vs peak {peak}");
}
