mod common;

use nlsx::bound_states::*;
use nlsx::dynamics::{LinearPropagator, Sponge};
use nlsx::linearized::*;
use nlsx::model::Model;
use nlsx::potential::RadialPotential;
use nlsx::radial::RadialGrid;
use nlsx::stable_manifold::*;
use nlsx::Error;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

struct Fixture {
    model: Model,
    state: BoundState,
    op: LinearizedOperator,
    dec: SpectralDecomposition,
}

/// Co-rotational state of the non-resonant well on a small box.
fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let v = RadialPotential::square_well(common::NON_RESONANT_DEPTH, 1.0).unwrap();
        let model = Model::with_grid(v, RadialGrid::aligned(20.0, 800, 1.0).unwrap(), 3).unwrap();
        let cfg = SolverConfig { lmax: 3, newton_tol: 1e-12, ..SolverConfig::default() };
        let state = solve_branch(&model, Branch::QtildeE, 0.08, 1.0, &cfg).unwrap();
        let op = assemble(&model, &state).unwrap();
        let dec = decompose(&model, &op, &state).unwrap();
        Fixture { model, state, op, dec }
    })
}

const CASE: Case = Case::QtildeNonresonant;

fn profile(delta: f64) -> AsymptoticProfile {
    let f = fixture();
    AsymptoticProfile::smooth(&f.model, &f.dec, &f.state, 1, delta, 7).unwrap()
}

fn continuous_sample(seed: u64) -> Pair {
    let f = fixture();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    f.dec.project_continuous(&Pair::from_complex(&common::random_field(&f.model, 3, &mut rng), 3))
}

#[test]
fn symmetry_derivatives_reproduce_the_kernel_modes() {
    let f = fixture();
    let frame = SymmetryFrame::new(Branch::QtildeE, &f.model.angular);
    let layout = CaseLayout::new(CASE, &f.dec).unwrap();
    let q = f.state.field.embed(&nlsx::sph::ChannelSet::full(3));
    let h = 1e-5;
    for (k, m) in layout.modes.iter().enumerate() {
        let Role::R(j) = m.role else { continue };
        let mut e = [0.0; 3];
        e[j] = h;
        let mut d = frame.act(e, &q);
        e[j] = -h;
        d.axpy(C64::new(-1.0, 0.0), &frame.act(e, &q));
        d.scale(C64::new(0.5 / h, 0.0));
        let fd = Pair::from_complex(&d, 3);
        let mode = layout.mode(&f.dec, k);
        let err = fd.sub(mode).norm() / mode.norm();
        assert!(err < 1e-4, "r_{j} derivative differs from {} by {err:.2e}", m.name);
    }
}

#[test]
fn case_layout_matches_the_table() {
    let f = fixture();
    let layout = CaseLayout::new(CASE, &f.dec).unwrap();
    let count = |p: fn(&Role) -> bool| layout.modes.iter().filter(|m| p(&m.role)).count();
    assert_eq!(count(|r| matches!(r, Role::A(_))), 1);
    assert_eq!(count(|r| matches!(r, Role::B(_))), 4);
    assert_eq!(count(|r| matches!(r, Role::R(_))), 3);
    assert!(layout.modes.iter().all(|m| !m.forward));
    assert!(matches!(CaseLayout::new(Case::QtildeResonant, &f.dec), Err(Error::Precondition(_))));
    assert!(matches!(CaseLayout::new(Case::QeNonresonant, &f.dec), Err(Error::Precondition(_))));
    let frame = SymmetryFrame::new(Branch::QtildeE, &f.model.angular);
    let m = modulation_matrix(&layout, &f.dec, &frame, [0.0; 3]).unwrap();
    assert!(m.m0_mismatch <= PAIRING_TOL && m.off_block <= PAIRING_TOL);
    assert!(m.m1_norm < 1e-12);
    let moved = modulation_matrix(&layout, &f.dec, &frame, [1e-3, 1e-3, 1e-3]).unwrap();
    assert!(moved.m1_norm > 0.0 && moved.m1_norm < 0.5);
}

#[test]
fn frame_map_is_identity_at_the_origin_and_linear_in_r() {
    let f = fixture();
    let frame = SymmetryFrame::new(Branch::QtildeE, &f.model.angular);
    for seed in 0..3 {
        let g = continuous_sample(seed);
        let (u, terms) = FrameMap { dec: &f.dec, frame: &frame, r: [0.0; 3] }.apply(&g).unwrap();
        assert_eq!(terms, 1);
        assert_eq!(u.sub(&g).norm(), 0.0);
        let dev = |s: f64| {
            let fm = FrameMap { dec: &f.dec, frame: &frame, r: [0.3 * s, s, -0.7 * s] };
            fm.apply(&g).unwrap().0.sub(&g).norm() / g.norm()
        };
        let (d1, d2) = (dev(1e-3), dev(2e-3));
        assert!(d1 > 0.0);
        assert!((d2 / d1 - 2.0).abs() < 0.05, "ratio {}", d2 / d1);
        let fm = FrameMap { dec: &f.dec, frame: &frame, r: [0.0, 2e-3, 1e-3] };
        let back = fm.apply_inverse(&fm.apply(&g).unwrap().0);
        assert!(back.sub(&g).norm() < 1e-9 * g.norm());
    }
}

#[test]
fn decomposition_inverts_composition() {
    let f = fixture();
    let prof = profile(0.01);
    let m = Modulation::new(&f.model, &f.dec, &prof, CASE).unwrap();
    let c = Coordinates {
        r: [2e-4, -1e-4, 3e-4],
        a: vec![C64::new(1e-5, 0.0)],
        b: vec![C64::new(2e-5, 1e-5), C64::new(2e-5, -1e-5), C64::new(-1e-5, 3e-5), C64::new(-1e-5, -3e-5)],
        g: {
            let mut g = continuous_sample(4);
            g.scale(C64::new(1e-4 / g.norm(), 0.0));
            g
        },
    };
    let c = {
        let mut c = c;
        let layout = &m.layout;
        let mut pair = Pair::zeros(&f.model, 3);
        for (k, mr) in layout.modes.iter().enumerate() {
            if let Role::B(i) = mr.role {
                pair.axpy(c.b[i], layout.mode(&f.dec, k));
            }
        }
        let real = Pair::from_complex(&pair.u, 3);
        let coef = layout.coefficients(&f.dec, &real);
        for (mr, z) in layout.modes.iter().zip(coef) {
            if let Role::B(i) = mr.role {
                c.b[i] = z;
            }
        }
        c
    };
    let (phi, _) = m.compose(&c, &prof.eta_inf).unwrap();
    let d = m.decompose(&phi, &prof.eta_inf).unwrap();
    for j in 0..3 {
        assert!((d.r[j] - c.r[j]).abs() < 1e-10, "r_{j}: {} vs {}", d.r[j], c.r[j]);
    }
    for (x, y) in d.a.iter().chain(&d.b).zip(c.a.iter().chain(&c.b)) {
        assert!((x - y).norm() < 1e-10, "{x} vs {y}");
    }
    assert!(d.g.sub(&c.g).norm() < 1e-9 * c.g.norm());
}

#[test]
fn profiles_are_validated() {
    let f = fixture();
    let prof = profile(0.01);
    assert!(profile_norm(&prof.eta_inf, &f.model.angular) <= 0.01 * (1.0 + 1e-9));
    let mut bad = prof.eta_inf.clone();
    bad.axpy(C64::new(1e-3, 0.0), &f.dec.group("P1").unwrap().modes[0]);
    assert!(matches!(AsymptoticProfile::new(&f.model, &f.dec, &f.state, bad, 1.0), Err(Error::Precondition(_))));
    assert!(matches!(AsymptoticProfile::new(&f.model, &f.dec, &f.state, prof.eta_inf.clone(), 1e-3), Err(Error::Precondition(_))));
    assert!(matches!(AsymptoticProfile::new(&f.model, &f.dec, &f.state, prof.eta_inf.clone(), 0.0), Err(Error::Domain(_))));
}

#[test]
fn asymptotic_profile_at_zero_time_and_without_radiation() {
    let f = fixture();
    let prof = profile(0.01);
    let prop = LinearPropagator::new(&f.model, &f.op, 0.02, Sponge::none()).unwrap();
    let at0 = build_psi_as(&f.model, &prof, &prop, 0.0).unwrap();
    let d0 = prof.initial_distance(&at0, &f.model.angular);
    assert!(d0 < 1e-10 * 0.01, "{d0:.2e}");
    let zero = AsymptoticProfile::new(&f.model, &f.dec, &f.state, Pair::zeros(&f.model, 3), 0.01).unwrap();
    let t = 0.4;
    let psi = build_psi_as(&f.model, &zero, &prop, t).unwrap();
    let mut expect = zero.q.clone();
    expect.scale(C64::from_polar(1.0, -zero.energy() * t));
    expect.axpy(C64::new(-1.0, 0.0), &psi);
    assert!(expect.norm() < 1e-14 * zero.q.norm());
    assert!(matches!(build_psi_as(&f.model, &prof, &prop, 0.015), Err(Error::Domain(_))));
}

#[test]
fn standing_wave_is_the_fixed_point_without_radiation() {
    let f = fixture();
    let zero = AsymptoticProfile::new(&f.model, &f.dec, &f.state, Pair::zeros(&f.model, 3), 0.01).unwrap();
    let cfg = OmegaConfig { t_truncation: 1.0, ..OmegaConfig::default() };
    let st = iterate_omega(&f.model, &f.op, &f.dec, &zero, CASE, &cfg).unwrap();
    assert!(st.class_norms.max() < 1e-6, "{:?}", st.class_norms);
    assert!(st.within_class());
    assert!(st.initial_correction.norm() < 1e-9);
}

#[test]
fn omega_rejects_bad_configurations() {
    let f = fixture();
    let prof = profile(0.01);
    let run = |cfg: OmegaConfig| iterate_omega(&f.model, &f.op, &f.dec, &prof, CASE, &cfg);
    assert!(matches!(run(OmegaConfig { max_sweeps: 2, ..OmegaConfig::default() }), Err(Error::Config(_))));
    assert!(matches!(run(OmegaConfig { dt: -0.1, ..OmegaConfig::default() }), Err(Error::Config(_))));
    assert!(matches!(run(OmegaConfig { b_free_initial: vec![C64::new(0.0, 0.0)], ..OmegaConfig::default() }), Err(Error::Config(_))));
    assert!(matches!(iterate_omega(&f.model, &f.op, &f.dec, &prof, Case::QtildeResonant, &OmegaConfig::default()), Err(Error::Precondition(_))));
}

struct Run {
    state: ModulationState,
    synthesis: Synthesis,
    raw_amplitude: f64,
}

fn omega_run(delta: f64) -> Run {
    let f = fixture();
    let prof = profile(delta);
    let cfg = OmegaConfig { t_truncation: 3.0, ..OmegaConfig::default() };
    let state = iterate_omega(&f.model, &f.op, &f.dec, &prof, CASE, &cfg).unwrap();
    let m = Modulation::new(&f.model, &f.dec, &prof, CASE).unwrap();
    let synthesis = synthesize_solution(&m, &state).unwrap();
    let raw_amplitude = state.class_norms.max() * delta.powf(1.75);
    Run { state, synthesis, raw_amplitude }
}

fn runs() -> &'static (Run, Run) {
    static R: OnceLock<(Run, Run)> = OnceLock::new();
    R.get_or_init(|| (omega_run(0.01), omega_run(0.005)))
}

#[test]
fn omega_contracts_and_stays_in_the_class() {
    let (run, _) = runs();
    let st = &run.state;
    assert!(st.contraction_factor < 1.0, "factor {}", st.contraction_factor);
    assert!(st.sweeps.len() >= 3);
    assert!(st.within_class(), "{:?}", st.class_norms);
    assert!(st.tail_estimate <= 0.1);
    assert!(!st.exploratory);
    assert_eq!(st.times.first(), Some(&0.0));
    assert!((st.times.last().unwrap() - 3.0).abs() < 1e-12);
}

#[test]
fn halving_delta_scales_the_class_amplitudes() {
    let (a, b) = runs();
    let ratio = b.raw_amplitude / a.raw_amplitude;
    let target = 0.5f64.powf(1.75);
    assert!(ratio / target < 2.0 && target / ratio < 2.0, "ratio {ratio}");
}

#[test]
fn synthesized_data_match_the_shooting_solution() {
    let (run, _) = runs();
    let s = &run.synthesis;
    assert!(s.mismatch < 1e-6, "mismatch {:.2e}", s.mismatch);
    assert!(s.initial_distance <= 0.01f64.powf(1.5));
    assert!(s.initial_distance > 0.0);
    assert_eq!(s.reference.len(), run.state.times.len());
}
