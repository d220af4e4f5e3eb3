//! Widths of the modes grown from `φ₀` when `2E - e₀` lies in the continuous spectrum.
//!
//! The Fermi Golden Rule constant is the limiting-absorption value
//! `lim_{r→0⁺} Im (φ₀φ², (H₀ - x - ir)⁻¹ P_c φ₀φ²)` at `x = 2e₁ - e₀`, evaluated on an extended
//! radial box for a window of shifts `r ∈ [2Δ, 10Δ]` (`Δ` the local level spacing) and
//! extrapolated linearly to `r = 0`. An exact outgoing-wave evaluation serves as a cross-check.
//!
//! Perturbation theory for the eigenvalue of `M` that starts at `μ₀ = e₀ - E` on `(φ₀, 0)` gives
//! `μ = μ₀ + μ₁ + μ₂ + …` with `μ₁ = 2λ(φ₀, |Q|²φ₀)` and
//! `μ₂ = -(a, (H₀ - E - μ̃)⁻¹ P_c a) - λ² Σ_n |(φ_n, g)|²/(e_n - y) - λ² (g, (H₀ - y + i0)⁻¹ P_c g)`
//! where `a = 2λ|Q|²φ₀`, `g = Q̄²φ₀`, `μ̃ = μ₀ + μ₁` and `y = E - μ̃`. In the frequency variable
//! `ω = -iμ` this reads `ω₄ ≈ τ₀ + τ₁` with `τ₀ = -i(μ₀ + μ₁)` purely imaginary and
//! `Re τ₁ = λ² Im (g, (H₀ - y - i0)⁻¹ P_c g) > 0`.

use crate::bound_states::{solve_branch, BoundState, Branch, SolverConfig};
use crate::error::{Error, Result};
use crate::linalg::scalar::{dot, norm};
use crate::linalg::tridiag::thomas;
use crate::linalg::BlockTridiag;
use crate::linearized::{assemble, discrete_spectrum, hankel_ratio, Boundary, LinearizedOperator, Sector, Window};
use crate::model::Model;
use crate::radial::{sector_diagonal, RadialGrid};
use crate::sph::{ChannelSet, SphField};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Limiting-absorption settings: box extension factor, shift window in units of the level
/// spacing, and number of shifts sampled in the window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionConfig {
    pub extension: usize,
    pub window: (f64, f64),
    pub samples: usize,
}

impl Default for AbsorptionConfig {
    fn default() -> Self {
        AbsorptionConfig { extension: 20, window: (2.0, 10.0), samples: 9 }
    }
}

impl AbsorptionConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.window;
        if self.extension == 0 || self.samples < 3 || !(lo >= 1.0 && hi > lo) {
            return Err(Error::Domain(format!("invalid absorption settings {self:?}")));
        }
        Ok(())
    }

    /// Same settings with the window halved about its lower end.
    pub fn halved(&self) -> Self {
        let (lo, hi) = self.window;
        AbsorptionConfig { window: (lo, lo + 0.5 * (hi - lo)), ..*self }
    }
}

/// Relative fit residual above which a limiting-absorption extrapolation is flagged.
pub const UNRELIABLE_FIT: f64 = 0.2;

/// Radial resolvent of `H₀` on a box `extension` times as large as the model box.
#[derive(Clone, Debug)]
pub struct RadialResolvent {
    pub grid: RadialGrid,
    v_cell: Vec<f64>,
    n_model: usize,
}

impl RadialResolvent {
    pub fn new(model: &Model, extension: usize) -> Result<Self> {
        if extension == 0 {
            return Err(Error::Domain("box extension must be at least 1".into()));
        }
        let grid = model.grid.extended(extension);
        Ok(RadialResolvent { grid, v_cell: model.potential.cell_values(&grid), n_model: model.n() })
    }

    /// Spacing `2π√x / r_max` of the box levels near energy `x > 0`.
    pub fn level_spacing(&self, x: f64) -> f64 {
        2.0 * PI * x.sqrt() / self.grid.r_max
    }

    /// `(g, (H₀ - z)⁻¹ g)` for a model-grid field `g`, padded with zeros on the extended box.
    pub fn pairing(&self, g: &SphField, z: C64) -> C64 {
        let n = self.grid.n_inner();
        let h = self.grid.spacing;
        let off = vec![C64::new(-1.0 / (h * h), 0.0); n - 1];
        let mut total = C64::new(0.0, 0.0);
        for (c, &(l, _)) in g.channels.channels.iter().enumerate() {
            let gc = g.channel(c);
            if norm(&gc) == 0.0 {
                continue;
            }
            let mut rhs = vec![C64::new(0.0, 0.0); n];
            rhs[..self.n_model].copy_from_slice(&gc);
            let d: Vec<C64> = sector_diagonal(&self.v_cell, &self.grid, l).iter().map(|v| v - z).collect();
            let x = thomas(&off, &d, &off, &rhs);
            total += dot(&rhs, &x) * h;
        }
        total
    }
}

/// `(g, (H₀ - x ∓ i0)⁻¹ g)` with the exact exterior Hankel condition on the model box:
/// `sheet = +1` selects outgoing waves (`+i0`), `-1` incoming ones.
pub fn outgoing_pairing(model: &Model, g: &SphField, x: f64, sheet: f64) -> Result<C64> {
    if !(x > 0.0) {
        return Err(Error::Precondition(format!("energy {x} is not in the continuous spectrum")));
    }
    let n = model.n();
    let h = model.h();
    let offv = model.offdiag();
    let off = vec![C64::new(offv, 0.0); n - 1];
    let k = C64::new(sheet.signum() * x.sqrt(), 0.0);
    let (r1, r0) = (model.grid.r_max, model.grid.r(n - 1));
    let mut total = C64::new(0.0, 0.0);
    for (c, &(l, _)) in g.channels.channels.iter().enumerate() {
        let gc = g.channel(c);
        if norm(&gc) == 0.0 {
            continue;
        }
        let mut d: Vec<C64> = model.diagonal(l).iter().map(|v| C64::new(v - x, 0.0)).collect();
        d[n - 1] += offv * hankel_ratio(l, k, r1, r0);
        let sol = thomas(&off, &d, &off, &gc);
        total += dot(&gc, &sol) * h;
    }
    Ok(total)
}

/// Linear fit `value(r) ≈ value₀ + slope·r` over the shift window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitFit {
    pub energy: f64,
    pub level_spacing: f64,
    pub samples: Vec<(f64, C64)>,
    pub value: C64,
    /// Root-mean-square deviation of the imaginary parts from the fit, relative to the limit.
    pub fit_residual: f64,
}

fn linear_intercept(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let a = my - slope * mx;
    let rms = (xs.iter().zip(ys).map(|(x, y)| (y - a - slope * x).powi(2)).sum::<f64>() / n).sqrt();
    (a, slope, rms)
}

/// `lim_{r→0⁺} (g, (H₀ - x - ir)⁻¹ g)` by linear extrapolation over the shift window.
pub fn limiting_absorption(res: &RadialResolvent, g: &SphField, x: f64, cfg: &AbsorptionConfig) -> Result<LimitFit> {
    cfg.validate()?;
    if !(x > 0.0) {
        return Err(Error::Precondition(format!("energy {x} is not in the continuous spectrum")));
    }
    let delta = res.level_spacing(x);
    let (lo, hi) = cfg.window;
    let rs: Vec<f64> = (0..cfg.samples).map(|i| delta * (lo + (hi - lo) * i as f64 / (cfg.samples - 1) as f64)).collect();
    let samples: Vec<(f64, C64)> = std::thread::scope(|s| {
        let handles: Vec<_> = rs.iter().map(|&r| s.spawn(move || (r, res.pairing(g, C64::new(x, r))))).collect();
        handles.into_iter().map(|h| h.join().expect("resolvent worker panicked")).collect()
    });
    let re: Vec<f64> = samples.iter().map(|s| s.1.re).collect();
    let im: Vec<f64> = samples.iter().map(|s| s.1.im).collect();
    let (a_re, _, _) = linear_intercept(&rs, &re);
    let (a_im, _, rms) = linear_intercept(&rs, &im);
    let fit_residual = if a_im != 0.0 { rms / a_im.abs() } else { f64::INFINITY };
    Ok(LimitFit { energy: x, level_spacing: delta, samples, value: C64::new(a_re, a_im), fit_residual })
}

fn node_product<F: Fn(&[C64]) -> C64>(model: &Model, fields: &[&SphField], f: F) -> SphField {
    let ang = &model.angular;
    let full = ChannelSet::full(model.lmax);
    let fields: Vec<SphField> = fields.iter().map(|x| x.embed(&full)).collect();
    let nn = ang.n_nodes();
    let mut vals = vec![vec![C64::new(0.0, 0.0); nn]; fields.len()];
    let mut out = SphField::zeros(model.grid, full);
    let mut res = vec![C64::new(0.0, 0.0); nn];
    let mut point = vec![C64::new(0.0, 0.0); fields.len()];
    for i in 0..model.n() {
        for (v, fl) in vals.iter_mut().zip(&fields) {
            fl.node_values(i, ang, v);
        }
        for q in 0..nn {
            for (p, v) in point.iter_mut().zip(&vals) {
                *p = v[q];
            }
            res[q] = f(&point);
        }
        out.set_from_node_values(i, ang, &res);
    }
    out
}

/// The probe `φ₀ φ²` with `φ = Σ z_j φ_j`.
pub fn probe(model: &Model, z: [C64; 3]) -> SphField {
    let phi = model.v_field(z);
    let phi0 = model.phi0_lab();
    node_product(model, &[&phi0, &phi], |p| p[0] * p[1] * p[1])
}

/// Fermi Golden Rule evaluation for one direction `φ = Σ z_j φ_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FgrResult {
    pub direction: [C64; 3],
    pub probe_energy: f64,
    pub level_spacing: f64,
    /// `(r, Im value)` over the shift window.
    pub values_at_r: Vec<(f64, f64)>,
    pub extrapolated: f64,
    pub fit_residual: f64,
    pub unreliable: bool,
    /// `extrapolated / ‖φ‖⁴`.
    pub lambda0_lower: f64,
}

/// `lim_{r→0⁺} Im (φ₀φ², (H₀ - 2e₁ + e₀ - ir)⁻¹ P_c φ₀φ²)`.
pub fn fgr_value(model: &Model, z: [C64; 3], cfg: &AbsorptionConfig) -> Result<FgrResult> {
    let x = 2.0 * model.e1 - model.e0;
    if x <= 0.0 {
        return Err(Error::Precondition(format!("2e1 - e0 = {x:.4} is not in the continuous spectrum")));
    }
    let zn2: f64 = z.iter().map(|c| c.norm_sqr()).sum();
    if zn2 == 0.0 {
        return Err(Error::Domain("direction must be nonzero".into()));
    }
    let mut g = probe(model, z);
    model.project_continuous(&mut g);
    let res = RadialResolvent::new(model, cfg.extension)?;
    let fit = limiting_absorption(&res, &g, x, cfg)?;
    let extrapolated = fit.value.im;
    Ok(FgrResult {
        direction: z,
        probe_energy: x,
        level_spacing: fit.level_spacing,
        values_at_r: fit.samples.iter().map(|(r, v)| (*r, v.im)).collect(),
        extrapolated,
        fit_residual: fit.fit_residual,
        unreliable: fit.fit_residual > UNRELIABLE_FIT,
        lambda0_lower: extrapolated / (zn2 * zn2),
    })
}

/// Perturbative eigenvalue `τ₀ + τ₁` of the mode grown from `φ₀` with `Im ω > 0`, `Re ω > 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tau1 {
    pub tau0: C64,
    pub tau1: C64,
    /// Contributions to `τ₁` from the discrete levels, the regular resolvent and the
    /// limiting-absorption resolvent.
    pub terms: [C64; 3],
    /// Imaginary part of `(φ₀, 2λ|Q|²φ₀)`, zero up to rounding.
    pub tau0_real_defect: f64,
    pub absorption: LimitFit,
}

/// Evaluate `τ₀` and `τ₁` about a computed state.
pub fn tau1(model: &Model, state: &BoundState, cfg: &AbsorptionConfig) -> Result<Tau1> {
    let full = ChannelSet::full(model.lmax);
    let q = state.field.embed(&full);
    let phi0 = model.phi0_lab();
    let lam = state.lambda;
    let mut a = node_product(model, &[&q, &phi0], |p| 2.0 * lam * p[0].norm_sqr() * p[1]);
    let mu1c = phi0.inner(&a);
    let mu_t = model.e0 - state.energy + mu1c.re;
    let y = state.energy - mu_t;
    if y <= 0.0 {
        return Err(Error::Precondition(format!("2E - e0 - mu1 = {y:.4} is not in the continuous spectrum")));
    }
    let res = RadialResolvent::new(model, cfg.extension)?;
    model.project_continuous(&mut a);
    let regular = -res.pairing(&a, C64::new(state.energy + mu_t, 0.0));
    let g = node_product(model, &[&q, &phi0], |p| (p[0] * p[0]).conj() * p[1]);
    let mut discrete = C64::new(0.0, 0.0);
    let levels = [(model.e0, model.phi0_lab())]
        .into_iter()
        .chain((1..=3).map(|j| (model.e1, model.phi_lab(j))));
    for (e, phi) in levels {
        discrete += -lam * lam * phi.inner(&g).norm_sqr() / (e - y);
    }
    let mut gc = g.clone();
    model.project_continuous(&mut gc);
    let absorption = limiting_absorption(&res, &gc, y, cfg)?;
    let continuum = -lam * lam * absorption.value.conj();
    let to_omega = |m: C64| C64::new(0.0, -1.0) * m;
    let terms = [to_omega(discrete), to_omega(regular), to_omega(continuum)];
    Ok(Tau1 {
        tau0: to_omega(C64::new(mu_t, 0.0)),
        tau1: terms.iter().sum(),
        terms,
        tau0_real_defect: mu1c.im.abs(),
        absorption,
    })
}

/// Eigensolver against perturbation theory for the width of the `φ₀` mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceWidth {
    pub epsilon: f64,
    pub tau0: C64,
    pub tau1: C64,
    /// Mode with `Im ω > 0`, `Re ω > 0`.
    pub omega_eigen: C64,
    /// Its partner with `Im ω > 0`, `Re ω < 0`.
    pub omega_partner: C64,
    /// `Re ω / Re τ₁`.
    pub gamma_ratio: f64,
    /// `|Im ω - Im τ₀| / ε²`.
    pub im_deviation: f64,
    pub fit_residual: f64,
}

/// Solve the branch at `eps`, locate the resonant modes and compare them with `τ₀ + τ₁`.
pub fn resonance_crosscheck(
    model: &Model,
    branch: Branch,
    eps: f64,
    lambda: f64,
    solver: &SolverConfig,
    cfg: &AbsorptionConfig,
) -> Result<ResonanceWidth> {
    let state = solve_branch(model, branch, eps, lambda, solver)?;
    let op = assemble(model, &state)?;
    if !op.is_resonant(model) {
        return Err(Error::Precondition("the ±iκ modes are not embedded in the continuum".into()));
    }
    let modes = discrete_spectrum(model, &op, Window::NearKappa)?;
    let upper: Vec<C64> = modes.iter().map(|m| m.omega).filter(|w| w.im > 0.0).collect();
    let pick = |positive: bool| {
        upper
            .iter()
            .copied()
            .filter(|w| (w.re > 0.0) == positive)
            .max_by(|a, b| a.re.abs().partial_cmp(&b.re.abs()).unwrap())
            .ok_or_else(|| Error::SpectralAnomaly(format!("no resonant mode with Re ω {} 0", if positive { ">" } else { "<" })))
    };
    let omega_eigen = pick(true)?;
    let omega_partner = pick(false)?;
    let t = tau1(model, &state, cfg)?;
    Ok(ResonanceWidth {
        epsilon: eps,
        tau0: t.tau0,
        tau1: t.tau1,
        omega_eigen,
        omega_partner,
        gamma_ratio: omega_eigen.re / t.tau1.re,
        im_deviation: (omega_eigen.im - t.tau0.im).abs() / (eps * eps),
        fit_residual: t.absorption.fit_residual,
    })
}

/// Sectors of `op` that carry `φ₀` on either component.
pub fn resonant_sectors(op: &LinearizedOperator) -> Vec<Sector> {
    op.sectors.iter().filter(|s| s.u.index_of(0, 0).is_some() || s.v.index_of(0, 0).is_some()).cloned().collect()
}

/// Default weight exponent `s` of `⟨x⟩^{-s}`.
pub const DEFAULT_WEIGHT: f64 = 4.0;

/// `‖⟨x⟩^{-s} (𝓛 - iτ - 0)⁻¹ ⟨x⟩^{-s}‖` over `sectors`, by power iteration on the weighted solve.
/// The limit `ω = iτ + 0` is imposed through the exterior Hankel condition with `μ = -τ` on the
/// sheet that is decaying for `Re ω > 0`.
pub fn weighted_resolvent_norm(model: &Model, op: &LinearizedOperator, sectors: &[Sector], tau: f64, s: f64) -> Result<f64> {
    if !(s > 3.0) {
        return Err(Error::Domain(format!("weight exponent {s} must exceed 3")));
    }
    let n = model.n();
    let w: Vec<f64> = (0..n).map(|i| (1.0 + model.grid.r(i).powi(2)).powf(-0.5 * s)).collect();
    let mut best: f64 = 0.0;
    for sec in sectors {
        let b = sec.block();
        let mut mat: BlockTridiag<C64> = op.sector_matrix(model, sec, Boundary::Outgoing { mu: C64::new(-tau, 0.0), sheet: -1.0 });
        mat.shift(C64::new(tau, 0.0));
        let lu = mat.factor()?;
        let lu_h = mat.adjoint().factor()?;
        let weigh = |x: &mut [C64]| {
            for i in 0..n {
                for a in 0..b {
                    x[i * b + a] *= w[i];
                }
            }
        };
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut x: Vec<C64> = (0..n * b).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
        let nx = norm(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        let mut sigma = 0.0;
        for _ in 0..60 {
            let mut y = x.clone();
            weigh(&mut y);
            let mut y = lu.solve(&y);
            weigh(&mut y);
            weigh(&mut y);
            let mut z = lu_h.solve(&y);
            weigh(&mut z);
            let nz = norm(&z);
            let next = nz.sqrt();
            if nz == 0.0 {
                break;
            }
            z.iter_mut().for_each(|v| *v /= nz);
            x = z;
            let done = (next - sigma).abs() <= 1e-8 * next;
            sigma = next;
            if done {
                break;
            }
        }
        best = best.max(sigma);
    }
    Ok(best)
}

/// Weighted resolvent norms along `τ`, with the location of their maximum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolventProfile {
    pub weight: f64,
    pub tau: Vec<f64>,
    pub norm: Vec<f64>,
}

impl ResolventProfile {
    /// Sample with the largest norm.
    pub fn peak(&self) -> (f64, f64) {
        let i = (0..self.norm.len()).max_by(|&a, &b| self.norm[a].partial_cmp(&self.norm[b]).unwrap()).unwrap_or(0);
        (self.tau[i], self.norm[i])
    }

    /// Least-squares slope of `log norm` against `log(1 + τ)` over samples with `τ ≥ tau_min`.
    pub fn decay_exponent(&self, tau_min: f64) -> Result<f64> {
        let pts: Vec<(f64, f64)> =
            self.tau.iter().zip(&self.norm).filter(|(t, _)| **t >= tau_min).map(|(t, v)| ((1.0 + t).ln(), v.ln())).collect();
        if pts.len() < 3 {
            return Err(Error::Fit(format!("{} samples above τ = {tau_min}", pts.len())));
        }
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        Ok(linear_intercept(&xs, &ys).1)
    }
}

/// Profile over `taus`, evaluated in parallel.
pub fn weighted_resolvent_profile(model: &Model, op: &LinearizedOperator, sectors: &[Sector], taus: &[f64], s: f64) -> Result<ResolventProfile> {
    let norms: Vec<Result<f64>> = std::thread::scope(|scope| {
        let handles: Vec<_> = taus.iter().map(|&t| scope.spawn(move || weighted_resolvent_norm(model, op, sectors, t, s))).collect();
        handles.into_iter().map(|h| h.join().expect("resolvent worker panicked")).collect()
    });
    Ok(ResolventProfile { weight: s, tau: taus.to_vec(), norm: norms.into_iter().collect::<Result<_>>()? })
}

/// Maximum of the weighted resolvent norm on `[lo, hi]` by golden-section search.
pub fn resolvent_peak(model: &Model, op: &LinearizedOperator, sectors: &[Sector], lo: f64, hi: f64, s: f64, tol: f64) -> Result<(f64, f64)> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = weighted_resolvent_norm(model, op, sectors, c, s)?;
    let mut fd = weighted_resolvent_norm(model, op, sectors, d, s)?;
    while b - a > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = weighted_resolvent_norm(model, op, sectors, c, s)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = weighted_resolvent_norm(model, op, sectors, d, s)?;
        }
    }
    Ok(if fc > fd { (c, fc) } else { (d, fd) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intercept_of_a_line_is_exact() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 0.5 - 2.0 * x).collect();
        let (a, b, rms) = linear_intercept(&xs, &ys);
        assert!((a - 0.5).abs() < 1e-14 && (b + 2.0).abs() < 1e-14 && rms < 1e-14);
    }

    #[test]
    fn config_validation() {
        assert!(AbsorptionConfig::default().validate().is_ok());
        assert!(AbsorptionConfig { window: (0.5, 4.0), ..Default::default() }.validate().is_err());
        assert!(AbsorptionConfig { samples: 2, ..Default::default() }.validate().is_err());
        assert_eq!(AbsorptionConfig::default().halved().window, (2.0, 6.0));
    }

    #[test]
    fn free_limiting_absorption_matches_the_sine_transform() {
        let base = RadialGrid::new(10.0, 2048).unwrap();
        let grid = base.extended(20);
        let res = RadialResolvent { grid, v_cell: vec![0.0; grid.n_inner()], n_model: base.n_inner() };
        let u: Vec<f64> = base.nodes().iter().map(|r| r * (-r * r).exp()).collect();
        let g = SphField::single(base, 0, 0, &u);
        for x in [1.0, 3.0] {
            let fit = limiting_absorption(&res, &g, x, &AbsorptionConfig::default()).unwrap();
            let k = f64::sqrt(x);
            let exact = PI / 16.0 * k * (-k * k / 2.0).exp();
            assert!((fit.value.im - exact).abs() <= 0.05 * exact, "x = {x}: {} vs {exact}", fit.value.im);
        }
    }
}
