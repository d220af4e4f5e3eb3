//! Asymptotic profiles `ψ_as(t) = e^{-iEt}[Q + e^{t𝓛}η_∞]`.

use crate::bound_states::BoundState;
use crate::dynamics::{field_norm, one_minus_laplacian, pair_norm, smooth_data, LinearPropagator, Norm};
use crate::error::{Error, Result};
use crate::linearized::{Pair, SpectralDecomposition};
use crate::model::Model;
use crate::sph::{AngularGrid, ChannelSet, SphField};
use num_complex::Complex64 as C64;

/// Relative size of the discrete content tolerated in `η_∞`.
pub const PROFILE_TOL: f64 = 1e-8;

/// Excited state and scattering datum `η_∞ ∈ E_c` of size `δ`.
#[derive(Clone, Debug)]
pub struct AsymptoticProfile {
    pub state: BoundState,
    /// `Q` in the class frame on the full channel set of the model.
    pub q: SphField,
    pub eta_inf: Pair,
    pub delta: f64,
}

/// `max(‖η‖_{H²}, ‖η‖_{L¹} + ‖Δη‖_{L¹})`, the size used for `‖η‖_{W^{2,1} ∩ H²}`.
pub fn profile_norm(eta: &Pair, ang: &AngularGrid) -> f64 {
    let h2 = pair_norm(eta, ang, Norm::H(2));
    let lap = |f: &SphField| {
        let mut g = one_minus_laplacian(f);
        g.axpy(C64::new(-1.0, 0.0), f);
        g
    };
    let w = pair_norm(eta, ang, Norm::Lp(1.0)) + pair_norm(&Pair { u: lap(&eta.u), v: lap(&eta.v) }, ang, Norm::Lp(1.0));
    h2.max(w)
}

impl AsymptoticProfile {
    /// Validate `η_∞ = P_c η_∞` and `‖η_∞‖ ≤ δ`.
    pub fn new(model: &Model, dec: &SpectralDecomposition, state: &BoundState, eta_inf: Pair, delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::Domain(format!("delta = {delta} must be positive")));
        }
        if state.branch != dec.branch || (state.epsilon - dec.epsilon).abs() > 1e-12 {
            return Err(Error::Precondition("decomposition was computed about a different state".into()));
        }
        let size = eta_inf.norm();
        if size > 0.0 {
            let leak = eta_inf.sub(&dec.project_continuous(&eta_inf)).norm() / size;
            if leak > PROFILE_TOL {
                return Err(Error::Precondition(format!("eta_inf carries discrete content {leak:.2e}")));
            }
        }
        let n = profile_norm(&eta_inf, &model.angular);
        if n > delta * (1.0 + 1e-9) {
            return Err(Error::Precondition(format!("‖eta_inf‖ = {n:.3e} exceeds delta = {delta:.3e}")));
        }
        let q = state.field.embed(&ChannelSet::full(model.lmax));
        Ok(AsymptoticProfile { state: state.clone(), q, eta_inf, delta })
    }

    /// Smooth localized datum in the channels `ℓ ≤ data_lmax`, projected onto `E_c` and scaled
    /// to size `δ`.
    pub fn smooth(model: &Model, dec: &SpectralDecomposition, state: &BoundState, data_lmax: usize, delta: f64, seed: u64) -> Result<Self> {
        let raw = smooth_data(model, data_lmax, model.lmax, (1.5, 3.0), 1.0, seed);
        let mut eta = dec.project_continuous(&raw);
        let n = profile_norm(&eta, &model.angular);
        eta.scale(C64::new(delta / n, 0.0));
        AsymptoticProfile::new(model, dec, state, eta, delta)
    }

    pub fn energy(&self) -> f64 {
        self.state.energy
    }

    /// The complex field `η` of a real pair `(Re η, Im η)`.
    pub fn complex(p: &Pair) -> SphField {
        p.u.clone()
    }

    /// `Q + e^{t𝓛}η_∞` in the frame rotating with `Q` (`t` must be a multiple of the step).
    pub fn rotating(&self, model: &Model, prop: &LinearPropagator, t: f64) -> Result<SphField> {
        let steps = step_count(prop.dt, t)?;
        let eta = prop.propagate(model, &self.eta_inf, steps);
        let mut out = self.q.clone();
        out.axpy(C64::new(1.0, 0.0), &Self::complex(&eta));
        Ok(out)
    }

    /// Distance of `ψ` from `Q + η_∞` in `H²`.
    pub fn initial_distance(&self, psi: &SphField, ang: &AngularGrid) -> f64 {
        let mut d = psi.clone();
        d.axpy(C64::new(-1.0, 0.0), &self.q);
        d.axpy(C64::new(-1.0, 0.0), &Self::complex(&self.eta_inf));
        field_norm(&d, ang, Norm::H(2))
    }
}

/// Number of steps of size `|dt|` making up `t`.
pub(crate) fn step_count(dt: f64, t: f64) -> Result<usize> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("time {t} must be finite and nonnegative")));
    }
    let k = (t / dt.abs()).round();
    if (k * dt.abs() - t).abs() > 1e-9 * t.max(1.0) {
        return Err(Error::Domain(format!("time {t} is not a multiple of the step {dt}")));
    }
    Ok(k as usize)
}

/// `ψ_as(t) = e^{-iEt}[Q + e^{t𝓛}η_∞]` in the laboratory frame.
pub fn build_psi_as(model: &Model, profile: &AsymptoticProfile, prop: &LinearPropagator, t: f64) -> Result<SphField> {
    let mut out = profile.rotating(model, prop, t)?;
    out.scale(C64::from_polar(1.0, -profile.energy() * t));
    Ok(out)
}
