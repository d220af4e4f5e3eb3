mod common;

use nlsx::bound_states::*;
use nlsx::dynamics::*;
use nlsx::model::Model;
use nlsx::potential::RadialPotential;
use nlsx::radial::RadialGrid;
use nlsx::sph::{ChannelSet, SphField};
use nlsx::Error;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Free propagation of `e^{-r²/2}` on a large box with an absorbing layer.
fn free_gaussian() -> &'static TrajectoryRecord {
    static R: OnceLock<TrajectoryRecord> = OnceLock::new();
    R.get_or_init(|| {
        let grid = RadialGrid::new(160.0, 3200).unwrap();
        let prop = Propagator::new(grid, vec![0.0; grid.n_inner()], 0, 0.0, 0.02, Sponge::outer_layer(2.0)).unwrap();
        let u: Vec<f64> = grid.nodes().iter().map(|r| r * (-r * r / 2.0).exp() * (4.0 * PI).sqrt()).collect();
        let psi = SphField::single(grid, 0, 0, &u);
        let spec = RecordSpec { interval: 0.1, norms: vec![Norm::Lp(2.0), Norm::Lp(6.0), Norm::LInf], ..RecordSpec::default() };
        evolve_nls(&psi, 20.0, &prop, &spec).unwrap().1
    })
}

#[test]
fn free_gaussian_sup_norm_decays_like_t_to_minus_three_halves() {
    let rec = free_gaussian();
    let fit = decay_fit(rec, Norm::LInf, (2.0, 20.0)).unwrap();
    assert!((fit.exponent + 1.5).abs() <= 0.1, "exponent {}", fit.exponent);
    for (k, t) in rec.times.iter().enumerate() {
        let exact = (1.0 + 4.0 * t * t).powf(-0.75);
        assert!((rec.series(Norm::LInf).unwrap()[k] / exact - 1.0).abs() < 1e-2, "t = {t}");
    }
}

#[test]
fn free_gaussian_lebesgue_exponents_follow_the_dispersive_formula() {
    let rec = free_gaussian();
    let p2 = decay_fit(rec, Norm::Lp(2.0), (2.0, 20.0)).unwrap();
    let p6 = decay_fit(rec, Norm::Lp(6.0), (2.0, 20.0)).unwrap();
    assert!(p2.exponent.abs() < 0.02, "p = 2 exponent {}", p2.exponent);
    assert!((p6.exponent + 1.0).abs() < 0.1, "p = 6 exponent {}", p6.exponent);
    assert!(rec.mass_drift() < 1e-10);
}

#[test]
fn short_fit_windows_are_rejected() {
    let rec = free_gaussian();
    assert!(matches!(decay_fit(rec, Norm::LInf, (2.0, 10.0)), Err(Error::Fit(_))));
    assert!(matches!(decay_fit(rec, Norm::H(2), (2.0, 20.0)), Err(Error::Precondition(_))));
}

fn resonant_model(lmax: usize) -> Model {
    let v = RadialPotential::square_well(common::RESONANT_DEPTH, 1.0).unwrap();
    Model::new(v, lmax).unwrap()
}

#[test]
fn standing_wave_modulus_is_stationary() {
    let model = resonant_model(3);
    let cfg = SolverConfig { lmax: 3, ..SolverConfig::default() };
    let q = solve_branch(&model, Branch::QtildeE, 0.08, 1.0, &cfg).unwrap();
    let mut psi = q.field.clone();
    psi.scale(C64::from_polar(1.0, 0.7));
    let e = q.energy.abs();
    let prop = Propagator::for_model(&model, 1.0, 0.05, Sponge::none()).unwrap();
    let steps = (20.0 / e / prop.dt).round() as usize;
    let modulus = |f: &SphField| -> Vec<f64> {
        let mut out = Vec::new();
        let mut buf = vec![C64::new(0.0, 0.0); prop.angular().n_nodes()];
        for i in (0..model.n()).step_by(7) {
            f.node_values(i, prop.angular(), &mut buf);
            out.extend(buf.iter().map(|v| v.norm()));
        }
        out
    };
    let m0 = modulus(&psi);
    let scale = m0.iter().cloned().fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    for k in 1..=steps {
        prop.step(&mut psi).unwrap();
        if k % 10 == 0 || k == steps {
            let m = modulus(&psi);
            worst = worst.max(m.iter().zip(&m0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale);
        }
    }
    assert!(worst < 1e-6, "modulus changed by {worst:.2e}");
    let theta = 2.0 * (q.energy * prop.dt / 2.0).atan() * steps as f64;
    let mut expect = q.field.clone();
    expect.scale(C64::from_polar(1.0, 0.7 - theta));
    expect.axpy(C64::new(-1.0, 0.0), &psi);
    assert!(expect.norm() < 1e-6 * q.field.norm(), "phase mismatch {:.2e}", expect.norm());
}

#[test]
fn generic_small_data_conserve_mass_and_energy() {
    let model = resonant_model(3);
    let pair = localized_data(&model, 3, 0.3, 11);
    let (a, b) = pair.components();
    let mut psi = a.clone();
    psi.axpy(C64::new(0.0, 1.0), &b);
    let prop = Propagator::for_model(&model, 1.0, 0.02, Sponge::none()).unwrap();
    let spec = RecordSpec { interval: 0.2, norms: vec![Norm::Lp(2.0)], ..RecordSpec::default() };
    let (_, rec) = evolve_nls(&psi, 2.0, &prop, &spec).unwrap();
    assert!(rec.mass_drift() <= 1e-6 * 2.0, "mass drift {:.2e}", rec.mass_drift());
    assert!(rec.energy_drift() <= 1e-9, "energy drift {:.2e}", rec.energy_drift());
    assert!(rec.warnings.is_empty());
    assert!(rec.times.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn linear_flow_is_time_reversible_with_a_potential() {
    let model = resonant_model(2);
    let pair = localized_data(&model, 2, 1.0, 5);
    let (a, b) = pair.components();
    let mut psi0 = a.clone();
    psi0.axpy(C64::new(0.0, 1.0), &b);
    let fwd = Propagator::for_model(&model, 0.0, 0.01, Sponge::none()).unwrap();
    let spec = RecordSpec { interval: 1.0, norms: vec![], ..RecordSpec::default() };
    let (mid, _) = evolve_nls(&psi0, 1.0, &fwd, &spec).unwrap();
    let (back, _) = evolve_nls(&mid, 1.0, &fwd.reversed().unwrap(), &spec).unwrap();
    let mut d = back.clone();
    d.axpy(C64::new(-1.0, 0.0), &psi0);
    assert!(d.norm() < 1e-8 * psi0.norm(), "{:.2e}", d.norm());
}

#[test]
fn nonlinear_flow_is_time_reversible() {
    let model = resonant_model(2);
    let pair = localized_data(&model, 2, 0.5, 6);
    let (a, _) = pair.components();
    let fwd = Propagator::for_model(&model, 1.0, 0.02, Sponge::none()).unwrap();
    let spec = RecordSpec { interval: 1.0, norms: vec![], ..RecordSpec::default() };
    let (mid, _) = evolve_nls(&a, 0.6, &fwd, &spec).unwrap();
    let (back, _) = evolve_nls(&mid, 0.6, &fwd.reversed().unwrap(), &spec).unwrap();
    let mut d = back.clone();
    d.axpy(C64::new(-1.0, 0.0), &a);
    assert!(d.norm() < 1e-8 * a.norm(), "{:.2e}", d.norm());
}

#[test]
fn mismatched_fields_are_rejected() {
    let model = resonant_model(2);
    let prop = Propagator::for_model(&model, 1.0, 0.02, Sponge::none()).unwrap();
    let other = RadialGrid::new(5.0, 100).unwrap();
    let mut f = SphField::zeros(other, ChannelSet::full(1));
    assert!(matches!(prop.step(&mut f), Err(Error::Precondition(_))));
    let mut g = SphField::zeros(model.grid, ChannelSet::full(4));
    assert!(matches!(prop.step(&mut g), Err(Error::Precondition(_))));
    assert!(matches!(evolve_nls(&SphField::zeros(model.grid, ChannelSet::full(1)), -1.0, &prop, &RecordSpec::default()), Err(Error::Domain(_))));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, .. ProptestConfig::default() })]

    #[test]
    fn mass_is_conserved_for_random_small_data(seed in 0u64..1000, amp in 0.05f64..0.5, lambda in -1.0f64..1.0) {
        let grid = RadialGrid::new(15.0, 600).unwrap();
        let v = RadialPotential::square_well(common::RESONANT_DEPTH, 1.0).unwrap();
        let prop = Propagator::new(grid, v.cell_values(&grid), 2, lambda, 0.02, Sponge::none()).unwrap();
        let model_like = Model::with_grid(v, grid, 2).unwrap();
        let (a, _) = localized_data(&model_like, 2, amp, seed).components();
        let mut psi = a.clone();
        let m0 = prop.mass(&psi);
        let e0 = prop.energy(&psi);
        for _ in 0..20 {
            prop.step(&mut psi).unwrap();
        }
        prop_assert!((prop.mass(&psi) / m0 - 1.0).abs() < 1e-11);
        prop_assert!((prop.energy(&psi) - e0).abs() < 1e-10 * e0.abs().max(m0));
    }
}
