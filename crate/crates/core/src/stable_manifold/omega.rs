//! Modulation coordinates and the truncated contraction map `Ω`.
//!
//! A solution near the excited state is written, in the frame rotating with `Q`, as
//! `φ = T_r Q + Σ a_i T_rΦ_{a_i} + Σ b_k T_rΦ_{b_k} + 𝐔_r(ξ + g)` with `ξ(t) = e^{t𝓛}η_∞` and
//! `g ∈ E_c`. Given `φ`, [`Modulation::decompose`] solves for `(r, a, b, g)` and
//! [`Modulation::compose`] rebuilds `φ`.
//!
//! Writing `φ = Q + ξ + w`, the integral equations of `Ω` truncated at `T` are
//! `w(t) = -∫_t^T e^{(t-s)𝓛} N(s) ds` for every backward-integrated component, where `N` is the
//! nonlinear remainder. Each sweep integrates the full equation forward from `Q + η_∞ + w(0)` over
//! the discrete flow and updates `w(0) ← w(0) - e^{-T𝓛} w(T)`, which is one Picard step of that
//! system. Forward-integrated components keep their prescribed initial values.

use super::case::{modulation_matrix, Case, CaseLayout, ModulationMatrix, Role};
use super::frame::{FrameMap, SymmetryFrame};
use super::profile::{step_count, AsymptoticProfile};
use crate::dynamics::{pair_norm, LinearPropagator, Norm, Propagator, Sponge};
use crate::error::{Error, Result};
use crate::linearized::{LinearizedOperator, Pair, SpectralDecomposition};
use crate::model::Model;
use crate::sph::SphField;
use num_complex::Complex64 as C64;
use serde::Serialize;

/// Settings of [`iterate_omega`].
#[derive(Clone, Debug, PartialEq)]
pub struct OmegaConfig {
    /// Truncation time `T`.
    pub t_truncation: f64,
    /// At least `3`, the first sweep whose contraction factor is defined.
    pub max_sweeps: usize,
    /// Initial values of the forward-integrated `b` components (zeros when empty).
    pub b_free_initial: Vec<C64>,
    pub dt: f64,
    /// Number of points of the geometric time mesh on `[0, T]`.
    pub mesh_points: usize,
    /// Sweeps stop once they differ by less than `tolerance · δ^{7/4}` in the class norms.
    pub tolerance: f64,
}

impl Default for OmegaConfig {
    fn default() -> Self {
        OmegaConfig { t_truncation: 16.0, max_sweeps: 12, b_free_initial: Vec::new(), dt: 0.02, mesh_points: 41, tolerance: 1e-3 }
    }
}

impl OmegaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_truncation > 0.0) || !(self.dt > 0.0) || self.dt > self.t_truncation {
            return Err(Error::Config("t_truncation and dt must be positive with dt <= t_truncation".into()));
        }
        if self.max_sweeps < 3 || self.mesh_points < 2 {
            return Err(Error::Config("max_sweeps must be at least 3 and mesh_points at least 2".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config("tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Modulation coordinates at one time.
#[derive(Clone, Debug)]
pub struct Coordinates {
    pub r: [f64; 3],
    pub a: Vec<C64>,
    pub b: Vec<C64>,
    pub g: Pair,
}

impl Coordinates {
    pub fn sub(&self, other: &Coordinates) -> Coordinates {
        Coordinates {
            r: [self.r[0] - other.r[0], self.r[1] - other.r[1], self.r[2] - other.r[2]],
            a: self.a.iter().zip(&other.a).map(|(x, y)| x - y).collect(),
            b: self.b.iter().zip(&other.b).map(|(x, y)| x - y).collect(),
            g: self.g.sub(&other.g),
        }
    }
}

fn euclid(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Weighted sup norms of a coordinate trajectory in units of `δ^{7/4}`: the trajectory lies in the
/// solution class when every entry is at most `1`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ClassNorms {
    pub a: f64,
    pub b: f64,
    pub r: f64,
    pub g: f64,
}

impl ClassNorms {
    pub fn max(&self) -> f64 {
        self.a.max(self.b).max(self.r).max(self.g)
    }
}

/// Class norms of `coords` sampled at `times`.
pub fn class_norms(case: Case, delta: f64, times: &[f64], coords: &[Coordinates], model: &Model) -> ClassNorms {
    let unit = delta.powf(1.75);
    let mut out = ClassNorms::default();
    for (t, c) in times.iter().zip(coords) {
        let w2 = (1.0 + t).powi(2);
        out.a = out.a.max(w2 * euclid(&c.a) / unit);
        out.b = out.b.max(w2 * euclid(&c.b) / unit);
        for j in 0..3 {
            out.r = out.r.max(case.r_weight(j, *t) * c.r[j].abs() / unit);
        }
        out.g = out.g.max((1.0 + t).powf(1.5) * pair_norm(&c.g, &model.angular, Norm::H(2)) / unit);
    }
    out
}

/// One Picard sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub sweep: usize,
    /// Class-norm size of the change from the previous sweep (units of `δ^{7/4}`); the first
    /// sweep reports the size of its own trajectory.
    pub difference: f64,
    /// Ratio of successive differences, from the third sweep on.
    pub contraction: Option<f64>,
    /// `‖w(T)‖` of the sweep, relative to `δ²`.
    pub endpoint_mismatch: f64,
}

/// Converged fixed point of `Ω` on the time mesh.
#[derive(Clone, Debug)]
pub struct ModulationState {
    pub case: Case,
    pub delta: f64,
    pub t_truncation: f64,
    pub dt: f64,
    pub times: Vec<f64>,
    pub coords: Vec<Coordinates>,
    /// `‖φ(t) - Q - e^{t𝓛}η_∞‖_{H²}` along the fixed point.
    pub deviation: Vec<f64>,
    pub class_norms: ClassNorms,
    pub sweeps: Vec<SweepReport>,
    pub contraction_factor: f64,
    /// `‖N(T)‖ T²/2` relative to `δ^{7/4}`.
    pub tail_estimate: f64,
    pub matrix: ModulationMatrix,
    pub exploratory: bool,
    /// `w(0)` of the final sweep.
    pub initial_correction: Pair,
}

impl ModulationState {
    /// Monitored class bounds hold along the fixed point.
    pub fn within_class(&self) -> bool {
        self.class_norms.max() <= 1.0
    }

    pub fn initial(&self) -> &Coordinates {
        &self.coords[0]
    }
}

/// Case data needed to decompose and rebuild solutions near `Q`.
#[derive(Clone, Debug)]
pub struct Modulation<'a> {
    pub model: &'a Model,
    pub dec: &'a SpectralDecomposition,
    pub profile: &'a AsymptoticProfile,
    pub layout: CaseLayout,
    pub frame: SymmetryFrame,
}

const DECOMPOSE_TOL: f64 = 1e-12;
const DECOMPOSE_FLOOR: f64 = 1e-14;
const DECOMPOSE_MAX_ITER: usize = 50;

impl<'a> Modulation<'a> {
    pub fn new(model: &'a Model, dec: &'a SpectralDecomposition, profile: &'a AsymptoticProfile, case: Case) -> Result<Self> {
        let layout = CaseLayout::new(case, dec)?;
        let frame = SymmetryFrame::new(case.branch(), &model.angular);
        Ok(Modulation { model, dec, profile, layout, frame })
    }

    fn lmax(&self) -> usize {
        self.model.lmax
    }

    /// `T_r Φ_k` for every discrete mode.
    fn rotated_modes(&self, r: [f64; 3]) -> Vec<Pair> {
        (0..self.layout.modes.len()).map(|k| self.frame.act_pair(r, self.layout.mode(self.dec, k))).collect()
    }

    /// `Σ a_i T_rΦ_{a_i} + Σ b_k T_rΦ_{b_k}`.
    fn discrete_part(&self, c: &Coordinates, rotated: &[Pair]) -> Pair {
        let mut out = Pair::zeros(self.model, self.lmax());
        for (m, phi) in self.layout.modes.iter().zip(rotated) {
            match m.role {
                Role::A(i) => out.axpy(c.a[i], phi),
                Role::B(i) => out.axpy(c.b[i], phi),
                Role::R(_) => {}
            }
        }
        out
    }

    /// Solve `φ = T_r Q + Σ aΦ^r + Σ bΦ^r + 𝐔_r(ξ + g)` with `g ∈ E_c` for the coordinates.
    pub fn decompose(&self, phi: &SphField, xi: &Pair) -> Result<Coordinates> {
        let (na, nb) = (self.layout.case.a_dim(), self.layout.case.b_dim());
        let mut c = Coordinates { r: [0.0; 3], a: vec![C64::new(0.0, 0.0); na], b: vec![C64::new(0.0, 0.0); nb], g: Pair::zeros(self.model, self.lmax()) };
        for _ in 0..DECOMPOSE_MAX_ITER {
            let rotated = self.rotated_modes(c.r);
            let mut rest = phi.clone();
            rest.axpy(C64::new(-1.0, 0.0), &self.frame.act(c.r, &self.profile.q));
            let rem = Pair::from_complex(&rest, self.lmax()).sub(&self.discrete_part(&c, &rotated));
            let fm = FrameMap { dec: self.dec, frame: &self.frame, r: c.r };
            let x = fm.apply_inverse(&rem).sub(xi);
            let coef = self.layout.coefficients(self.dec, &x);
            let size = coef.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if size <= DECOMPOSE_TOL * (rem.norm() + xi.norm()) + DECOMPOSE_FLOOR * self.profile.q.norm() {
                c.g = self.dec.project_continuous(&x);
                return Ok(c);
            }
            for (m, z) in self.layout.modes.iter().zip(&coef) {
                match m.role {
                    Role::A(i) => c.a[i] += z,
                    Role::B(i) => c.b[i] += z,
                    Role::R(j) => c.r[j] += z.re,
                }
            }
        }
        Err(Error::Convergence("modulation decomposition did not converge".into()))
    }

    /// Rebuild `φ` from its coordinates; also returns the number of frame-map terms kept.
    pub fn compose(&self, c: &Coordinates, xi: &Pair) -> Result<(SphField, usize)> {
        let rotated = self.rotated_modes(c.r);
        let fm = FrameMap { dec: self.dec, frame: &self.frame, r: c.r };
        let mut cont = xi.clone();
        cont.axpy(C64::new(1.0, 0.0), &c.g);
        let (mut pair, terms) = fm.apply(&cont)?;
        pair.axpy(C64::new(1.0, 0.0), &self.discrete_part(c, &rotated));
        let mut phi = self.frame.act(c.r, &self.profile.q);
        phi.axpy(C64::new(1.0, 0.0), &AsymptoticProfile::complex(&pair));
        Ok((phi, terms))
    }

    /// Set the forward-integrated components of `w` to `values`.
    fn enforce_forward(&self, w: &mut Pair, values: &[C64]) {
        let coef = self.layout.coefficients(self.dec, w);
        let forward = self.layout.modes.iter().enumerate().filter(|(_, m)| m.forward);
        for ((k, _), v) in forward.zip(values) {
            w.axpy(v - coef[k], self.layout.mode(self.dec, k));
        }
    }
}

/// Geometric mesh of step indices on `[0, steps]`, dense near `0`.
pub(crate) fn geometric_mesh(steps: usize, dt: f64, points: usize) -> Vec<usize> {
    let t = steps as f64 * dt;
    let mut out: Vec<usize> = (0..points)
        .map(|j| {
            let s = (1.0 + t).powf(j as f64 / (points - 1) as f64) - 1.0;
            ((s / dt).round() as usize).min(steps)
        })
        .collect();
    out.push(steps);
    out.sort_unstable();
    out.dedup();
    out
}

struct Sweep {
    coords: Vec<Coordinates>,
    deviation: Vec<f64>,
    w_end: Pair,
    remainder: f64,
}

struct Runner<'a> {
    m: &'a Modulation<'a>,
    nls: Propagator,
    lin: LinearPropagator,
    steps: usize,
    mesh: Vec<usize>,
}

impl Runner<'_> {
    fn deviation_pair(&self, phi: &SphField, eta: &Pair) -> Pair {
        let mut d = phi.clone();
        d.axpy(C64::new(-1.0, 0.0), &self.m.profile.q);
        Pair::from_complex(&d, self.m.lmax()).sub(eta)
    }

    fn run(&self, w0: &Pair) -> Result<Sweep> {
        let model = self.m.model;
        let eta_inf = &self.m.profile.eta_inf;
        let mut phi = self.m.profile.q.clone();
        phi.axpy(C64::new(1.0, 0.0), &AsymptoticProfile::complex(eta_inf));
        phi.axpy(C64::new(1.0, 0.0), &AsymptoticProfile::complex(w0));
        let mut xs = self.lin.scatter(eta_inf);
        let mut coords = Vec::with_capacity(self.mesh.len());
        let mut deviation = Vec::with_capacity(self.mesh.len());
        let mut next = 0;
        let mut w_prev = None;
        for k in 0..=self.steps {
            if k > 0 {
                self.nls.step(&mut phi)?;
                self.lin.step(&mut xs);
            }
            let on_mesh = next < self.mesh.len() && self.mesh[next] == k;
            if on_mesh || k + 1 == self.steps {
                let eta = self.lin.gather(model, &xs);
                if k + 1 == self.steps {
                    w_prev = Some(self.deviation_pair(&phi, &eta));
                }
                if on_mesh {
                    deviation.push(pair_norm(&self.deviation_pair(&phi, &eta), &model.angular, Norm::H(2)));
                    coords.push(self.m.decompose(&phi, &eta)?);
                    next += 1;
                }
            }
        }
        let eta = self.lin.gather(model, &xs);
        let w_end = self.deviation_pair(&phi, &eta);
        let remainder = match w_prev {
            Some(wp) => w_end.sub(&self.lin.propagate(model, &wp, 1)).norm() / self.lin.dt,
            None => 0.0,
        };
        Ok(Sweep { coords, deviation, w_end, remainder })
    }
}

fn difference_norms(case: Case, delta: f64, times: &[f64], new: &[Coordinates], old: Option<&[Coordinates]>, model: &Model) -> ClassNorms {
    match old {
        Some(old) => {
            let d: Vec<Coordinates> = new.iter().zip(old).map(|(a, b)| a.sub(b)).collect();
            class_norms(case, delta, times, &d, model)
        }
        None => class_norms(case, delta, times, new, model),
    }
}

/// Picard-iterate `Ω` for the profile until successive sweeps agree to `cfg.tolerance · δ^{7/4}`.
pub fn iterate_omega(
    model: &Model,
    op: &LinearizedOperator,
    dec: &SpectralDecomposition,
    profile: &AsymptoticProfile,
    case: Case,
    cfg: &OmegaConfig,
) -> Result<ModulationState> {
    cfg.validate()?;
    let m = Modulation::new(model, dec, profile, case)?;
    let nf = case.forward_dim();
    let free = if cfg.b_free_initial.is_empty() { vec![C64::new(0.0, 0.0); nf] } else { cfg.b_free_initial.clone() };
    if free.len() != nf {
        return Err(Error::Config(format!("case {case} has {nf} forward components, got {} initial values", free.len())));
    }
    let bound = 0.25 * profile.delta * profile.delta;
    if let Some(v) = free.iter().find(|v| v.norm() > bound) {
        return Err(Error::Config(format!("forward initial value {v} exceeds δ²/4 = {bound:.3e}")));
    }
    modulation_matrix(&m.layout, dec, &m.frame, [0.0; 3])?;
    let steps = step_count(cfg.dt, cfg.t_truncation)?;
    let runner = Runner {
        m: &m,
        nls: Propagator::for_model(model, profile.state.lambda, cfg.dt, Sponge::none())?.with_frame(profile.energy()),
        lin: LinearPropagator::new(model, op, cfg.dt, Sponge::none())?,
        steps,
        mesh: geometric_mesh(steps, cfg.dt, cfg.mesh_points),
    };
    let back = runner.lin.reversed()?;
    let times: Vec<f64> = runner.mesh.iter().map(|k| *k as f64 * cfg.dt).collect();
    let delta = profile.delta;
    let mut w0 = Pair::zeros(model, model.lmax);
    m.enforce_forward(&mut w0, &free);
    let mut previous: Option<Vec<Coordinates>> = None;
    let mut sweeps: Vec<SweepReport> = Vec::new();
    for sweep in 1..=cfg.max_sweeps {
        let s = runner.run(&w0)?;
        let difference = difference_norms(case, delta, &times, &s.coords, previous.as_deref(), model).max();
        let contraction = if sweep >= 3 { sweeps.last().map(|p| if p.difference > 0.0 { difference / p.difference } else { 0.0 }) } else { None };
        sweeps.push(SweepReport { sweep, difference, contraction, endpoint_mismatch: s.w_end.norm() / (delta * delta) });
        if let Some(f) = contraction {
            if difference >= cfg.tolerance && f >= 1.0 {
                return Err(Error::Contraction { factor: f });
            }
            if difference < cfg.tolerance {
                let t = cfg.t_truncation;
                let tail_estimate = s.remainder * t * t / 2.0 / delta.powf(1.75);
                if tail_estimate > 0.1 {
                    return Err(Error::Truncation(format!("tail estimate {tail_estimate:.3e} of the class bound at T = {t}")));
                }
                let matrix = modulation_matrix(&m.layout, dec, &m.frame, s.coords[0].r)?;
                let class = class_norms(case, delta, &times, &s.coords, model);
                return Ok(ModulationState {
                    case,
                    delta,
                    t_truncation: t,
                    dt: cfg.dt,
                    times,
                    coords: s.coords,
                    deviation: s.deviation,
                    class_norms: class,
                    sweeps,
                    contraction_factor: f,
                    tail_estimate,
                    matrix,
                    exploratory: case.exploratory(),
                    initial_correction: w0,
                });
            }
        }
        let correction = back.propagate(model, &s.w_end, steps);
        w0 = w0.sub(&correction);
        m.enforce_forward(&mut w0, &free);
        previous = Some(s.coords);
    }
    Err(Error::Convergence(format!("Ω did not converge within {} sweeps (last difference {:.3e})", cfg.max_sweeps, sweeps.last().map(|s| s.difference).unwrap_or(f64::NAN))))
}
