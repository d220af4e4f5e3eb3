//! Initial data from the fixed point of `Ω` and the convergence check against `ψ_as`.

use super::omega::{Modulation, ModulationState};
use super::profile::{step_count, AsymptoticProfile};
use crate::dynamics::{decade_window, field_norm, pair_norm, power_law_fit, DecayFit, LinearPropagator, Norm, Propagator, Sponge, ABSORPTION_WARNING};
use crate::error::{Error, Result};
use crate::linearized::{LinearizedOperator, Pair};
use crate::model::Model;
use crate::sph::SphField;
use num_complex::Complex64 as C64;

/// Initial datum `ψ(0)` rebuilt from the fixed point, with its diagnostics.
#[derive(Clone, Debug)]
pub struct Synthesis {
    pub psi0: SphField,
    /// Terms kept in the frame-map series.
    pub frame_terms: usize,
    /// `‖ψ(0) - (Q + η_∞ + w(0))‖_{H²}` against the sweep data, relative to `δ²`.
    pub mismatch: f64,
    /// `‖ψ(0) - Q - η_∞‖_{H²}`.
    pub initial_distance: f64,
    /// Reference trajectory `(t, ‖ψ(t) - ψ_as(t)‖_{H²})` of the fixed point.
    pub reference: Vec<(f64, f64)>,
}

/// Assemble `ψ(0) = T_{r(0)}Q + a(0)Φ^r + b(0)·Φ^r + 𝐔_{r(0)}(η_∞ + g(0))`.
pub fn synthesize_solution(m: &Modulation, state: &ModulationState) -> Result<Synthesis> {
    let profile = m.profile;
    let (psi0, frame_terms) = m.compose(state.initial(), &profile.eta_inf)?;
    let mut shot = profile.q.clone();
    shot.axpy(C64::new(1.0, 0.0), &AsymptoticProfile::complex(&profile.eta_inf));
    shot.axpy(C64::new(1.0, 0.0), &AsymptoticProfile::complex(&state.initial_correction));
    shot.axpy(C64::new(-1.0, 0.0), &psi0);
    let ang = &m.model.angular;
    let mismatch = field_norm(&shot, ang, Norm::H(2)) / (profile.delta * profile.delta);
    Ok(Synthesis {
        initial_distance: profile.initial_distance(&psi0, ang),
        psi0,
        frame_terms,
        mismatch,
        reference: state.times.iter().copied().zip(state.deviation.iter().copied()).collect(),
    })
}

/// Settings of [`verify_convergence`].
#[derive(Clone, Debug, PartialEq)]
pub struct VerifyConfig {
    pub t_final: f64,
    pub dt: f64,
    /// Sampling interval of the deviation.
    pub interval: f64,
    /// The fit uses the decade starting at the last sample not after `fit_start`.
    pub fit_start: f64,
    pub sponge: Sponge,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { t_final: 16.0, dt: 0.02, interval: 0.1, fit_start: 1.6, sponge: Sponge::none() }
    }
}

/// Deviation series of a run from `ψ_as` and its power-law fit.
#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub times: Vec<f64>,
    /// `‖ψ(t) - ψ_as(t)‖_{H²}`.
    pub deviation: Vec<f64>,
    pub fit: DecayFit,
    /// `max (1+t)‖ψ - ψ_as‖_{H²} / δ^{7/4}` over the fit window.
    pub amplitude: f64,
    /// Mean deviation over the last fifth of the samples.
    pub late_deviation: f64,
    pub delta: f64,
}

/// Evolve `ψ(0)` under the full equation and fit `‖ψ(t) - ψ_as(t)‖_{H²}`.
pub fn verify_convergence(model: &Model, op: &LinearizedOperator, profile: &AsymptoticProfile, psi0: &SphField, cfg: &VerifyConfig) -> Result<ConvergenceReport> {
    let steps = step_count(cfg.dt, cfg.t_final)?;
    let every = step_count(cfg.dt, cfg.interval)?;
    if every == 0 {
        return Err(Error::Config("sampling interval is shorter than the step".into()));
    }
    let window = decade_window(cfg.fit_start, cfg.interval)?;
    if window.1 > cfg.t_final + 1e-9 {
        return Err(Error::Fit(format!("fit window [{}, {}] exceeds the run length {}", window.0, window.1, cfg.t_final)));
    }
    let nls = Propagator::for_model(model, profile.state.lambda, cfg.dt, cfg.sponge)?.with_frame(profile.energy());
    let lin = LinearPropagator::new(model, op, cfg.dt, Sponge::none())?;
    let mut phi = psi0.clone();
    let mut xs = lin.scatter(&profile.eta_inf);
    let mass0 = nls.mass(&phi);
    let (mut absorbed, mut times, mut deviation) = (0.0, Vec::new(), Vec::new());
    for k in 0..=steps {
        if k > 0 {
            absorbed += nls.step(&mut phi)?.absorbed;
            lin.step(&mut xs);
        }
        let t = k as f64 * cfg.dt;
        if absorbed > ABSORPTION_WARNING * mass0 && t <= window.1 {
            return Err(Error::Fit(format!("absorbing layer removed {:.2e} of the mass by t = {t:.2}, inside the fit window", absorbed / mass0)));
        }
        if k % every == 0 {
            let mut d = phi.clone();
            d.axpy(C64::new(-1.0, 0.0), &profile.q);
            let dev = Pair::from_complex(&d, model.lmax).sub(&lin.gather(model, &xs));
            times.push(t);
            deviation.push(pair_norm(&dev, &model.angular, Norm::H(2)));
        }
    }
    let fit = power_law_fit(&times, &deviation, window, 0x5eed)?;
    let unit = profile.delta.powf(1.75);
    let amplitude = times
        .iter()
        .zip(&deviation)
        .filter(|(t, _)| **t >= window.0 - 1e-9 && **t <= window.1 + 1e-9)
        .map(|(t, d)| (1.0 + t) * d / unit)
        .fold(0.0, f64::max);
    let tail = (deviation.len() / 5).max(1);
    let late_deviation = deviation[deviation.len() - tail..].iter().sum::<f64>() / tail as f64;
    Ok(ConvergenceReport { times, deviation, fit, amplitude, late_deviation, delta: profile.delta })
}

/// Scaling exponent `p` of the raw deviation amplitude `∝ δ^p` between two runs.
pub fn amplitude_log_ratio(a: &ConvergenceReport, b: &ConvergenceReport) -> f64 {
    let raw = |r: &ConvergenceReport| r.amplitude * r.delta.powf(1.75);
    (raw(b) / raw(a)).ln() / (b.delta / a.delta).ln()
}

/// The uncorrected initial datum `Q + η_∞`.
pub fn control_initial(profile: &AsymptoticProfile) -> SphField {
    let mut out = profile.q.clone();
    out.axpy(C64::new(1.0, 0.0), &AsymptoticProfile::complex(&profile.eta_inf));
    out
}
