//! The two excited-state branches `Q_E` (real type) and `Q̃_E` (co-rotational type).
//!
//! Both are computed in their symmetry classes on the channel representation:
//! `Q_E` lives in the `m = 0`, odd-`ℓ` channels about an internal polar axis that coincides with
//! the lab `x₁` axis, and `Q̃_E` lives in the `m = 1`, odd-`ℓ` channels about `x₃`. The stationary
//! equation `(H₀ − E)Q + λ|Q|²Q = 0` is solved by Newton's method with continuation in `ε`,
//! where `E = e₁ + λε²`. The splitting `Q = ε(v + h)` is available through [`solve_h`] and
//! [`solve_branch_split`].

use crate::bifurcation::{continue_branch, BranchSign, ContinuationConfig};
use crate::error::{Error, Result};
use crate::linalg::BlockTridiag;
use crate::model::Model;
use crate::sph::{ChannelSet, SphField};
use crate::symmetry::{mat_vec, rotation, Mat3};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    #[serde(rename = "qe")]
    QE,
    #[serde(rename = "qtilde")]
    QtildeE,
}

impl Branch {
    /// Channels of the symmetry class (internal frame).
    pub fn channels(&self, lmax: usize) -> ChannelSet {
        match self {
            Branch::QE => ChannelSet::order(0, lmax, 1),
            Branch::QtildeE => ChannelSet::order(1, lmax, 1),
        }
    }

    pub fn sign(&self) -> BranchSign {
        match self {
            Branch::QE => BranchSign::Plus,
            Branch::QtildeE => BranchSign::Minus,
        }
    }

    /// `|φ̂|²` of the class direction (`φ₁` or `φ* = φ₁ + iφ₂`).
    pub fn direction_norm2(&self) -> f64 {
        match self {
            Branch::QE => 1.0,
            Branch::QtildeE => 2.0,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Branch::QE => "qe",
            Branch::QtildeE => "qtilde",
        }
    }

    /// Rotation `R` with `Q_lab(x) = Q_internal(R x)`.
    pub fn frame(&self) -> Mat3 {
        match self {
            Branch::QE => [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]],
            Branch::QtildeE => crate::symmetry::IDENTITY,
        }
    }
}

/// Largest admissible `ε` for the branch solvers.
pub const EPS_MAX: f64 = 0.15;

/// Newton and continuation settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub newton_tol: f64,
    pub max_iter: usize,
    pub continuation_step: f64,
    pub lmax: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { newton_tol: 1e-10, max_iter: 30, continuation_step: 0.02, lmax: crate::model::DEFAULT_LMAX }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.newton_tol > 0.0) {
            return Err(Error::Config("newton_tol must be positive".into()));
        }
        if !(self.continuation_step > 0.0 && self.continuation_step <= 0.02) {
            return Err(Error::Config("continuation_step must lie in (0, 0.02]".into()));
        }
        Ok(())
    }
}

/// Excited state on one branch.
#[derive(Clone, Debug)]
pub struct BoundState {
    pub branch: Branch,
    pub epsilon: f64,
    pub energy: f64,
    pub lambda: f64,
    /// Internal-frame channel field of the branch class.
    pub field: SphField,
    /// `ρ(ε)` or `ρ̃(ε)`.
    pub rho_eps: f64,
    pub residual_norm: f64,
    pub newton_iterations: usize,
}

impl BoundState {
    /// The field in lab coordinates on the full channel set.
    pub fn lab_field(&self, model: &Model) -> SphField {
        let full = ChannelSet::full(self.field.channels.lmax().max(model.lmax));
        match self.branch {
            Branch::QtildeE => self.field.embed(&full),
            Branch::QE => self.field.embed(&full).rotate(&model.angular, &self.branch.frame()),
        }
    }

    /// Value at a lab-frame point.
    pub fn eval_lab(&self, x: [f64; 3]) -> C64 {
        self.field.eval_at(mat_vec(&self.branch.frame(), x))
    }
}

/// Class direction `φ̂` as an internal-frame field.
pub fn class_direction(model: &Model, branch: Branch, lmax: usize) -> SphField {
    let chans = branch.channels(lmax);
    let mut f = SphField::zeros(model.grid, chans.clone());
    let (c, s) = match branch {
        Branch::QE => (chans.index_of(1, 0).unwrap(), 1.0),
        Branch::QtildeE => (chans.index_of(1, 1).unwrap(), -SQRT_2),
    };
    for i in 0..model.n() {
        f.set(i, c, C64::new(s * model.u1[i], 0.0));
    }
    f
}

fn cubic(model: &Model, psi: &SphField) -> SphField {
    psi.pointwise(&model.angular, &psi.channels, |z| z * z.norm_sqr())
}

/// `(H₀ − E)Q + λ|Q|²Q` on the channel set of `q`.
pub fn stationary_residual(model: &Model, q: &SphField, energy: f64, lambda: f64) -> SphField {
    let mut r = model.apply_h0(q);
    r.axpy(C64::new(-energy, 0.0), q);
    r.axpy(C64::new(lambda, 0.0), &cubic(model, q));
    r
}

/// Discrete `L²` norm of the stationary residual of `q` at its own energy.
pub fn residual(model: &Model, q: &BoundState) -> f64 {
    residual_at(model, q, q.energy)
}

/// Residual norm with the energy replaced by `energy`.
pub fn residual_at(model: &Model, q: &BoundState, energy: f64) -> f64 {
    stationary_residual(model, &q.field, energy, q.lambda).norm()
}

/// `ρ(ε) = ⟨φ₁, Q⟩` or `ρ̃(ε) = ⟨φ*, Q̃⟩ / |φ*|²`.
pub fn rho_projection(model: &Model, q: &BoundState) -> f64 {
    let d = class_direction(model, q.branch, q.field.channels.lmax());
    let d = d.embed(&q.field.channels);
    d.inner(&q.field).re / q.branch.direction_norm2()
}

/// Outcome of the fixed-point iteration for `h`.
#[derive(Clone, Debug)]
pub struct HSolution {
    pub h: SphField,
    pub iterations: usize,
    pub contraction: f64,
}

/// Solve `h = λε²(H₀ − e₁)⁻¹P₁^⊥{h − |v + h|²(v + h)}` by fixed-point iteration on the
/// channel set of `v`.
pub fn solve_h(model: &Model, eps: f64, lambda: f64, v: &SphField, tol: f64) -> Result<HSolution> {
    let mut h = SphField::zeros(v.grid, v.channels.clone());
    let coef = C64::new(lambda * eps * eps, 0.0);
    let mut prev_change = f64::INFINITY;
    let mut contraction = 0.0;
    for it in 1..=200 {
        let mut w = v.clone();
        w.axpy(C64::new(1.0, 0.0), &h);
        let mut rhs = h.clone();
        rhs.axpy(C64::new(-1.0, 0.0), &cubic(model, &w));
        let mut next = model.reduced_resolvent_e1(&rhs)?;
        next.scale(coef);
        let mut diff = next.clone();
        diff.axpy(C64::new(-1.0, 0.0), &h);
        let change = diff.norm();
        if prev_change.is_finite() && prev_change > 0.0 {
            contraction = change / prev_change;
            if it > 3 && contraction >= 1.0 {
                return Err(Error::Divergence { factor: contraction });
            }
        }
        h = next;
        if change <= tol * (1.0 + h.norm()) {
            return Ok(HSolution { h, iterations: it, contraction });
        }
        prev_change = change;
    }
    Err(Error::Divergence { factor: contraction.max(1.0) })
}

/// `⟨φ̂, N(ε, v_j + aφ̂)⟩` on the branch class.
pub fn reduced_map(model: &Model, branch: Branch, eps: f64, lambda: f64, a: f64, lmax: usize, tol: f64) -> Result<(f64, SphField)> {
    let dir = class_direction(model, branch, lmax);
    let c = branch.sign().base_amplitude(model.overlap) + a;
    let mut v = dir.clone();
    v.scale(C64::new(c, 0.0));
    let hs = solve_h(model, eps, lambda, &v, tol)?;
    let mut w = v.clone();
    w.axpy(C64::new(1.0, 0.0), &hs.h);
    let mut nv = v.clone();
    nv.axpy(C64::new(-1.0, 0.0), &cubic(model, &w));
    Ok((dir.inner(&nv).re, hs.h))
}

fn jacobian(model: &Model, q: &SphField, energy: f64, lambda: f64) -> BlockTridiag<f64> {
    let chans = &q.channels.channels;
    let nc = chans.len();
    let n = model.n();
    let mut jac = BlockTridiag::<f64>::zeros(n, nc);
    let diags: Vec<Vec<f64>> = chans.iter().map(|&(l, _)| model.diagonal(l)).collect();
    let off = model.offdiag();
    let ang = &model.angular;
    let mut vals = vec![C64::new(0.0, 0.0); ang.n_nodes()];
    for i in 0..n {
        q.node_values(i, ang, &mut vals);
        let g: Vec<C64> = vals.iter().map(|z| C64::new(3.0 * lambda * z.norm_sqr(), 0.0)).collect();
        let m = ang.multiplier(chans, chans, &g);
        let blk = &mut jac.diag[i];
        for a in 0..nc {
            for b in 0..nc {
                blk.set(a, b, m[a * nc + b].re);
            }
            blk.add_to(a, a, diags[a][i] - energy);
        }
        if i + 1 < n {
            for a in 0..nc {
                jac.upper[i].set(a, a, off);
                jac.lower[i].set(a, a, off);
            }
        }
    }
    jac
}

/// `∂Q/∂E` along the branch from the linear system `(H₀ - E + 3λ|Q|²) ∂_E Q = Q` on the class.
pub fn energy_derivative(model: &Model, state: &BoundState) -> Result<SphField> {
    let jac = jacobian(model, &state.field, state.energy, state.lambda);
    let lu = jac.factor()?;
    let rhs: Vec<f64> = state.field.data.iter().map(|z| z.re).collect();
    let x = lu.solve(&rhs);
    let mut out = state.field.clone();
    for (z, v) in out.data.iter_mut().zip(x) {
        *z = C64::new(v, 0.0);
    }
    Ok(out)
}

/// Newton iteration from `guess`; returns the converged field and the iteration count.
pub fn newton(model: &Model, guess: SphField, energy: f64, lambda: f64, cfg: &SolverConfig) -> Result<(SphField, usize, f64)> {
    let mut q = guess;
    let mut res = stationary_residual(model, &q, energy, lambda);
    let mut rn = res.norm();
    for it in 0..cfg.max_iter {
        if rn <= cfg.newton_tol {
            return Ok((q, it, rn));
        }
        let jac = jacobian(model, &q, energy, lambda);
        let lu = jac.factor()?;
        let rhs: Vec<f64> = res.data.iter().map(|z| -z.re).collect();
        let dx = lu.solve(&rhs);
        for (z, d) in q.data.iter_mut().zip(&dx) {
            *z = C64::new(z.re + d, 0.0);
        }
        res = stationary_residual(model, &q, energy, lambda);
        let new_rn = res.norm();
        if !new_rn.is_finite() || new_rn > 1e3 * rn.max(cfg.newton_tol) {
            return Err(Error::Convergence(format!("Newton diverged (residual {new_rn:.3e})")));
        }
        rn = new_rn;
    }
    if rn <= cfg.newton_tol {
        return Ok((q, cfg.max_iter, rn));
    }
    Err(Error::Convergence(format!("Newton stopped with residual {rn:.3e}")))
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda == 1.0 || lambda == -1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("lambda must be +1 or -1, got {lambda}")))
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..=EPS_MAX).contains(&eps) {
        return Err(Error::Domain(format!("epsilon = {eps} outside [0, {EPS_MAX}]")));
    }
    Ok(())
}

fn package(model: &Model, branch: Branch, eps: f64, lambda: f64, field: SphField, iters: usize, rn: f64) -> BoundState {
    let mut q = BoundState {
        branch,
        epsilon: eps,
        energy: model.e1 + lambda * eps * eps,
        lambda,
        field,
        rho_eps: 0.0,
        residual_norm: rn,
        newton_iterations: iters,
    };
    q.rho_eps = rho_projection(model, &q);
    q
}

/// Excited state of `branch` at `ε` by Newton continuation from the bifurcation point.
pub fn solve_branch(model: &Model, branch: Branch, eps: f64, lambda: f64, cfg: &SolverConfig) -> Result<BoundState> {
    solve_branch_path(model, branch, eps, lambda, cfg).map(|mut v| v.pop().unwrap())
}

/// All states along the continuation path up to `ε`, ascending in `ε`.
pub fn solve_branch_path(model: &Model, branch: Branch, eps: f64, lambda: f64, cfg: &SolverConfig) -> Result<Vec<BoundState>> {
    cfg.validate()?;
    check_lambda(lambda)?;
    check_eps(eps)?;
    let chans = branch.channels(cfg.lmax);
    if eps == 0.0 {
        let zero = SphField::zeros(model.grid, chans);
        return Ok(vec![package(model, branch, 0.0, lambda, zero, 0, 0.0)]);
    }
    let mut out: Vec<BoundState> = Vec::new();
    let mut step = cfg.continuation_step;
    let mut cur = 0.0;
    while cur < eps - 1e-14 {
        let next = (cur + step).min(eps);
        let energy = model.e1 + lambda * next * next;
        let guess = match out.last() {
            Some(prev) => {
                let mut g = prev.field.clone();
                g.scale(C64::new(next / prev.epsilon, 0.0));
                g
            }
            None => {
                let dir = class_direction(model, branch, cfg.lmax);
                let mut v = dir.clone();
                v.scale(C64::new(branch.sign().base_amplitude(model.overlap), 0.0));
                let hs = solve_h(model, next, lambda, &v, 1e-12)?;
                v.axpy(C64::new(1.0, 0.0), &hs.h);
                v.scale(C64::new(next, 0.0));
                v
            }
        };
        match newton(model, guess, energy, lambda, cfg) {
            Ok((field, iters, rn)) => {
                out.push(package(model, branch, next, lambda, field, iters, rn));
                cur = next;
                step = cfg.continuation_step;
            }
            Err(e) => {
                step *= 0.5;
                if step < 1e-4 {
                    return Err(Error::Convergence(format!("branch {} failed at eps = {next:.4}: {e}", branch.label())));
                }
            }
        }
    }
    let last = out.last().unwrap();
    check_symmetry(model, last)?;
    Ok(out)
}

/// The same state through the splitting `Q = ε(v + a φ̂ + h)`, continuing the scalar reduced map.
pub fn solve_branch_split(model: &Model, branch: Branch, eps: f64, lambda: f64, cfg: &SolverConfig) -> Result<BoundState> {
    cfg.validate()?;
    check_lambda(lambda)?;
    check_eps(eps)?;
    let lmax = cfg.lmax;
    let ccfg = ContinuationConfig { step: cfg.continuation_step, tol: 1e-13, ..ContinuationConfig::default() };
    let pts = continue_branch(branch.sign(), eps, |e, a| reduced_map(model, branch, e, lambda, a, lmax, 1e-14).map(|r| r.0), &ccfg)?;
    let a = pts.last().unwrap().a;
    let (_, h) = reduced_map(model, branch, eps, lambda, a, lmax, 1e-14)?;
    let mut q = class_direction(model, branch, lmax);
    q.scale(C64::new(branch.sign().base_amplitude(model.overlap) + a, 0.0));
    q.axpy(C64::new(1.0, 0.0), &h);
    q.scale(C64::new(eps, 0.0));
    let energy = model.e1 + lambda * eps * eps;
    let rn = stationary_residual(model, &q, energy, lambda).norm();
    Ok(package(model, branch, eps, lambda, q, 0, rn))
}

/// Largest relative deviation from the symmetry class, checked pointwise in the lab frame:
/// `Q_E` real, odd in `x₁` and invariant under `R₂₃(α)`; `Q̃_E(R₁₂(α)x) = e^{iα} Q̃_E(x)`.
pub fn symmetry_defect(q: &BoundState) -> f64 {
    let pts = [[0.31, 0.52, -0.27], [0.8, -0.1, 0.45], [-0.2, 0.66, 0.9], [1.3, 0.2, -0.4]];
    let scale = pts.iter().map(|x| q.eval_lab(*x).norm()).fold(0.0, f64::max).max(1e-300);
    let mut worst = 0.0f64;
    for x in pts {
        let v = q.eval_lab(x);
        match q.branch {
            Branch::QE => {
                worst = worst.max(v.im.abs() / scale);
                worst = worst.max((q.eval_lab([-x[0], x[1], x[2]]) + v).norm() / scale);
                for a in [0.4, 1.7, 2.9] {
                    let y = mat_vec(&rotation(2, 3, a).unwrap(), x);
                    worst = worst.max((q.eval_lab(y) - v).norm() / scale);
                }
            }
            Branch::QtildeE => {
                for a in [0.4, 1.7, 2.9] {
                    let y = mat_vec(&rotation(1, 2, a).unwrap(), x);
                    worst = worst.max((q.eval_lab(y) - C64::from_polar(1.0, a) * v).norm() / scale);
                }
            }
        }
    }
    worst
}

fn check_symmetry(_model: &Model, q: &BoundState) -> Result<()> {
    let d = symmetry_defect(q);
    if d > 1e-8 {
        return Err(Error::Symmetry(format!("branch {} deviates from its class by {d:.2e}", q.branch.label())));
    }
    Ok(())
}

/// Exponential decay rate `κ_d` from a least-squares fit of `log |Q|` over the outer half of the
/// box (excluding the last tenth, which feels the Dirichlet wall).
pub fn decay_rate(model: &Model, q: &BoundState) -> f64 {
    let n = model.n();
    let (mut sx, mut sy, mut sxx, mut sxy, mut k) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in n / 2..(9 * n) / 10 {
        let r = model.grid.r(i);
        let a: f64 = (0..q.field.nc()).map(|c| q.field.at(i, c).norm_sqr()).sum::<f64>().sqrt() / r;
        if a <= 0.0 {
            continue;
        }
        let y = a.ln();
        sx += r;
        sy += y;
        sxx += r * r;
        sxy += r * y;
        k += 1.0;
    }
    -(k * sxy - sx * sy) / (k * sxx - sx * sx)
}
