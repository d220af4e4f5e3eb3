mod common;

use nlsx::potential::{check_assumptions, tune_well, RadialPotential, ResonanceClass, DEFAULT_MARGIN_FRACTION};
use nlsx::radial::{bound_state_count, default_grid, richardson_energies, solve_radial};
use nlsx::Error;
use proptest::prelude::*;

const RESONANT_DEPTH: f64 = 14.196631114398;
const NON_RESONANT_DEPTH: f64 = 19.797606243465;

#[test]
fn tuned_fixtures_match_the_bessel_matching_oracle() {
    for (target, frozen) in [(ResonanceClass::Resonant, RESONANT_DEPTH), (ResonanceClass::NonResonant, NON_RESONANT_DEPTH)] {
        let w = tune_well(target, 1.0).unwrap();
        let v = &w.potential;
        assert!((v.depth - frozen).abs() < 1e-7, "{target:?}: depth {}", v.depth);
        assert_eq!(w.report.counts_per_l, vec![1, 1, 0, 0]);
        assert!(w.report.passed);
        let exact0 = common::square_well_levels(v.depth, 1.0, 0);
        let exact1 = common::square_well_levels(v.depth, 1.0, 1);
        assert_eq!((exact0.len(), exact1.len()), (1, 1));
        assert!(common::square_well_levels(v.depth, 1.0, 2).is_empty());
        assert!(common::square_well_levels(v.depth, 1.0, 3).is_empty());
        let grid = default_grid(v).unwrap();
        let e0 = richardson_energies(v, 0, &grid).unwrap()[0];
        let e1 = richardson_energies(v, 1, &grid).unwrap()[0];
        assert!(((e0 - exact0[0]) / exact0[0]).abs() < 1e-6);
        assert!(((e1 - exact1[0]) / exact1[0]).abs() < 1e-6);
        assert!((exact0[0] - 2.0 * exact1[0]).abs() > DEFAULT_MARGIN_FRACTION * exact1[0].abs());
        let oracle_class = if exact0[0] < 2.0 * exact1[0] { ResonanceClass::Resonant } else { ResonanceClass::NonResonant };
        assert_eq!(oracle_class, target);
    }
}

#[test]
fn wider_well_fixtures_have_the_requested_class() {
    let r = tune_well(ResonanceClass::Resonant, 2.0).unwrap();
    assert!(r.report.e0 < 2.0 * r.report.e1 && r.report.e1 < 0.0);
    let n = tune_well(ResonanceClass::NonResonant, 2.0).unwrap();
    let (e0, e1) = (n.report.e0, n.report.e1);
    assert!(2.0 * e1 < e0 && e0 < e1 && e1 < 0.0);
    let exact0 = common::square_well_levels(n.potential.depth, 2.0, 0)[0];
    let exact1 = common::square_well_levels(n.potential.depth, 2.0, 1)[0];
    assert!(2.0 * exact1 < exact0);
}

#[test]
fn vanishing_well_cannot_be_tuned() {
    assert!(matches!(tune_well(ResonanceClass::Resonant, 1e-6), Err(Error::Tuning(_))));
}

#[test]
fn shallow_and_deep_wells_fail_the_assumptions() {
    let shallow = check_assumptions(&RadialPotential::square_well(5.0, 1.0).unwrap(), 0.1).unwrap();
    assert!(!shallow.passed);
    assert!(shallow.failures.contains(&"missing e1".to_string()));
    let deep = check_assumptions(&RadialPotential::square_well(21.0, 1.0).unwrap(), 0.1).unwrap();
    assert!(!deep.passed);
    assert!(deep.failures.contains(&"extra angular sector".to_string()));
    assert_eq!(common::square_well_levels(21.0, 1.0, 2).len(), 1);
}

#[test]
fn assumption_check_is_deterministic() {
    let v = RadialPotential::square_well(RESONANT_DEPTH, 1.0).unwrap();
    let a = check_assumptions(&v, 0.1).unwrap();
    let b = check_assumptions(&v, 0.1).unwrap();
    assert_eq!(a.to_text(), b.to_text());
    assert_eq!(a.e0.to_bits(), b.e0.to_bits());
}

#[test]
fn resonance_class_flips_once_along_a_depth_sweep() {
    let mut flips = 0;
    let mut prev = None;
    for k in 0..=40 {
        let d = 10.0 + 10.0 * k as f64 / 40.0;
        let rep = check_assumptions(&RadialPotential::square_well(d, 1.0).unwrap(), 0.0).unwrap();
        if rep.counts_per_l[1] == 0 {
            continue;
        }
        if let Some(p) = prev {
            if p != rep.resonance_class {
                flips += 1;
            }
        }
        prev = Some(rep.resonance_class);
    }
    assert_eq!(flips, 1);
}

#[test]
fn smoothed_well_levels_match_numerov_shooting() {
    let v = RadialPotential::smoothed_well(16.0, 1.0, 0.2).unwrap();
    let grid = default_grid(&v).unwrap();
    for l in 0..2 {
        let fd = richardson_energies(&v, l, &grid).unwrap();
        let shoot = common::numerov_levels(|r| v.eval(r).unwrap(), l, grid.r_max, 40_000, -16.0);
        assert_eq!(fd.len(), shoot.len());
        for (a, b) in fd.iter().zip(&shoot) {
            assert!(((a - b) / b).abs() < 1e-6, "l={l}: {a} vs {b}");
        }
    }
}

#[test]
fn radial_energies_converge_at_second_order() {
    let v = RadialPotential::square_well(RESONANT_DEPTH, 1.0).unwrap();
    let grid = nlsx::radial::RadialGrid::aligned(10.0, 256, 1.0).unwrap();
    for l in 0..2 {
        let p = nlsx::radial::observed_order(&v, l, &grid, 0).unwrap();
        assert!(p >= 1.8, "l={l} order {p}");
    }
    assert!(solve_radial(&v, 1, &grid).unwrap().len() == 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn counts_are_monotone_in_depth(d1 in 1.0f64..60.0, d2 in 1.0f64..60.0) {
        let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        for l in 0..4 {
            let a = bound_state_count(&RadialPotential::square_well(lo, 1.0).unwrap(), l).unwrap();
            let b = bound_state_count(&RadialPotential::square_well(hi, 1.0).unwrap(), l).unwrap();
            prop_assert!(a <= b);
        }
    }

    #[test]
    fn counts_match_the_oracle_away_from_thresholds(d in 1.0f64..60.0) {
        for l in 0..4 {
            let exact = common::square_well_levels(d, 1.0, l);
            let near_threshold = exact.last().map(|e| e.abs() < 2e-2).unwrap_or(false)
                || common::square_well_levels(d * 1.002, 1.0, l).len() != exact.len();
            prop_assume!(!near_threshold);
            prop_assert_eq!(bound_state_count(&RadialPotential::square_well(d, 1.0).unwrap(), l).unwrap(), exact.len());
        }
    }
}
