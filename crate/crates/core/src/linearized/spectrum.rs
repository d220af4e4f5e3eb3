//! Discrete spectra: the scalar operators `L₊`, `L₋` by inertia counting, and the non-self-adjoint
//! operator by shift-invert Arnoldi per sector, with outgoing wall conditions for resonances.

use super::{Boundary, LinearizedOperator, Pair, Sector, I, ZERO};
use crate::bound_states::Branch;
use crate::error::{Error, Result};
use crate::linalg::arnoldi::{polish, ritz_values};
use crate::linalg::scalar::norm;
use crate::linalg::BlockTridiag;
use crate::model::Model;
use crate::sph::{ChannelSet, SphField};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;

/// `L₊ = H₀ - E + 3λQ²` or `L₋ = H₀ - E + λQ²` for a real state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScalarOp {
    LPlus,
    LMinus,
}

impl ScalarOp {
    fn weight(&self) -> f64 {
        match self {
            ScalarOp::LPlus => 3.0,
            ScalarOp::LMinus => 1.0,
        }
    }
}

/// One discrete eigenvalue of `L₊` or `L₋`, with the class-frame sector `(m, parity)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarMode {
    pub label: String,
    pub value: f64,
    pub m: i32,
    pub parity: i32,
    pub symmetry: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarTable {
    pub op: ScalarOp,
    pub modes: Vec<ScalarMode>,
}

impl ScalarTable {
    pub fn value(&self, label: &str) -> Option<f64> {
        self.modes.iter().find(|m| m.label == label).map(|m| m.value)
    }
}

fn require_real(op: &LinearizedOperator) -> Result<()> {
    if op.branch != Branch::QE {
        return Err(Error::Precondition("scalar operators are defined for the real branch only".into()));
    }
    Ok(())
}

/// `(H₀ - E + wλ|Q|²) f` on the channel set of `f`, with `w = 3` for `L₊` and `w = 1` for `L₋`.
pub fn apply_scalar(model: &Model, op: &LinearizedOperator, which: ScalarOp, f: &SphField) -> SphField {
    let ang = &model.angular;
    let mut out = model.apply_h0(f);
    out.axpy(C64::new(-op.energy, 0.0), f);
    let mut pot = SphField::zeros(f.grid, f.channels.clone());
    let mut vals = vec![ZERO; ang.n_nodes()];
    let w = which.weight() * op.lambda;
    for i in 0..model.n() {
        f.node_values(i, ang, &mut vals);
        for (v, q) in vals.iter_mut().zip(&op.q_nodes[i]) {
            *v *= w * q.norm_sqr();
        }
        pot.set_from_node_values(i, ang, &vals);
    }
    out.axpy(C64::new(1.0, 0.0), &pot);
    out
}

/// Channels of order `m` and class-axis parity `parity`.
pub fn scalar_channels(lmax: usize, m: i32, parity: i32) -> ChannelSet {
    ChannelSet::with_z_parity(m, lmax, parity)
}

/// Real symmetric block-tridiagonal matrix of `L₊` or `L₋` on one `(m, parity)` sector.
pub fn scalar_sector_matrix(model: &Model, op: &LinearizedOperator, which: ScalarOp, chans: &ChannelSet) -> BlockTridiag<f64> {
    let n = model.n();
    let b = chans.len();
    let ang = &model.angular;
    let diags: Vec<Vec<f64>> = chans.channels.iter().map(|&(l, _)| model.diagonal(l)).collect();
    let off = model.offdiag();
    let w = which.weight() * op.lambda;
    let mut mat = BlockTridiag::<f64>::zeros(n, b);
    let mut g = vec![ZERO; ang.n_nodes()];
    for i in 0..n {
        for (gq, q) in g.iter_mut().zip(&op.q_nodes[i]) {
            *gq = C64::new(w * q.norm_sqr(), 0.0);
        }
        let m = ang.multiplier(&chans.channels, &chans.channels, &g);
        for a in 0..b {
            for c in 0..b {
                mat.diag[i].set(a, c, m[a * b + c].re);
            }
            mat.diag[i].add_to(a, a, diags[a][i] - op.energy);
        }
        if i + 1 < n {
            for a in 0..b {
                mat.upper[i].set(a, a, off);
                mat.lower[i].set(a, a, off);
            }
        }
    }
    mat
}

fn max_q2(op: &LinearizedOperator) -> f64 {
    op.q_nodes.iter().flat_map(|v| v.iter().map(|q| q.norm_sqr())).fold(0.0, f64::max)
}

/// Discrete eigenvalues of `L₋` or `L₊` below `|E|/2`, checked against the expected pattern:
/// `L₋`: `ẽ₀`, a simple `0` carried by `Q_E`, and the double `ẽ₂ = ẽ₃`;
/// `L₊`: `ê₀`, a double `0`, and `ê₁`.
pub fn spectrum_scalar(model: &Model, op: &LinearizedOperator, which: ScalarOp) -> Result<ScalarTable> {
    require_real(op)?;
    let cutoff = 0.5 * op.energy.abs();
    let lo = model.e0 - op.energy - 3.0 * max_q2(op) - 1.0;
    let mut found = Vec::new();
    let l = op.lmax as i32;
    for m in -l..=l {
        for parity in [1, -1] {
            let chans = scalar_channels(op.lmax, m, parity);
            if chans.is_empty() {
                continue;
            }
            let mat = scalar_sector_matrix(model, op, which, &chans);
            let count = mat.count_below(cutoff);
            for k in 0..count {
                found.push((m, parity, mat.kth_eigenvalue(k, lo, cutoff, 1e-13)));
            }
        }
    }
    let eps2 = op.epsilon * op.epsilon;
    let zero_tol = 1e-6;
    let expect: [(i32, i32, &str, &str); 4] = match which {
        ScalarOp::LMinus => [
            (0, 1, "e0", "even in x1, x2, x3"),
            (0, -1, "zero", "Q_E: odd in x1"),
            (1, 1, "e2", "odd in x2"),
            (-1, 1, "e3", "odd in x3"),
        ],
        ScalarOp::LPlus => [
            (0, 1, "e0", "even in x1, x2, x3"),
            (0, -1, "e1", "odd in x1"),
            (1, 1, "zero2", "Z_2: odd in x2"),
            (-1, 1, "zero3", "Z_3: odd in x3"),
        ],
    };
    if found.len() != 4 {
        return Err(Error::SpectralAnomaly(format!("{which:?}: expected 4 discrete eigenvalues, found {found:?}")));
    }
    let mut modes = Vec::new();
    for (m, parity, label, symmetry) in expect {
        let hits: Vec<f64> = found.iter().filter(|f| f.0 == m && f.1 == parity).map(|f| f.2).collect();
        if hits.len() != 1 {
            return Err(Error::SpectralAnomaly(format!("{which:?}: sector m={m}, parity={parity} holds {hits:?}")));
        }
        let value = hits[0];
        let is_zero = label.starts_with("zero");
        if is_zero && value.abs() > zero_tol {
            return Err(Error::SpectralAnomaly(format!("{which:?}: kernel eigenvalue {value:.3e}")));
        }
        if !is_zero && label != "e0" && value.abs() < 1e-3 * eps2 {
            return Err(Error::SpectralAnomaly(format!("{which:?}: {label} = {value:.3e} collapsed onto 0")));
        }
        modes.push(ScalarMode { label: label.into(), value, m, parity, symmetry: symmetry.into() });
    }
    if which == ScalarOp::LMinus {
        let (a, b) = (modes[2].value, modes[3].value);
        if (a - b).abs() > 1e-9 * (1.0 + a.abs()) {
            return Err(Error::SpectralAnomaly(format!("L-: e2 = {a} and e3 = {b} are not degenerate")));
        }
    }
    modes.sort_by(|a, b| a.value.partial_cmp(&b.value).unwrap());
    Ok(ScalarTable { op: which, modes })
}

/// Eigenvalue window for [`discrete_spectrum`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Window {
    NearZero,
    NearKappa,
}

/// Discrete eigenvalue `ω` of `𝓛` with its eigenvector.
#[derive(Clone, Debug)]
pub struct Mode {
    pub omega: C64,
    pub pair: Pair,
    /// `‖(M - μ)x‖` for the unit sector vector `x`, `μ = iω`.
    pub residual: f64,
    pub sector: String,
    pub label: String,
}

fn start_vector(len: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect()
}

fn shifted_lu(mat: &BlockTridiag<C64>, sigma: C64) -> Result<crate::linalg::BlockLu<C64>> {
    let mut s = mat.clone();
    s.shift(-sigma);
    s.factor()
}

/// Eigenpairs of a sector matrix inside the disc `|μ - center| < radius`.
fn sector_disc(mat: &BlockTridiag<C64>, center: C64, radius: f64, krylov: usize, seed: u64) -> Result<Vec<(C64, Vec<C64>, f64)>> {
    let sigma = center + C64::from_polar(0.05 * radius, 0.37);
    let lu = shifted_lu(mat, sigma)?;
    let mut solve = |x: &[C64]| lu.solve(x);
    let (vals, vecs) = ritz_values(&mut solve, sigma, &start_vector(mat.dim(), seed), krylov)?;
    let matvec = |x: &[C64]| mat.mul_vec(x);
    let mut out = Vec::new();
    for (v, x) in vals.into_iter().zip(vecs) {
        if (v - center).norm() >= radius {
            continue;
        }
        let shift = v + C64::from_polar(1e-7 * (1.0 + v.norm()), 0.9);
        let lu2 = shifted_lu(mat, shift)?;
        let mut solve2 = |y: &[C64]| lu2.solve(y);
        let p = polish(&mut solve2, &matvec, shift, &x, 4);
        let value = if (p.value - v).norm() < 0.1 * radius { p.value } else { v };
        out.push((value, p.vector, p.residual));
    }
    Ok(out)
}

fn phi0_weight(model: &Model, sector: &Sector, x: &[C64]) -> f64 {
    let b = sector.block();
    let nu = sector.u.len();
    let idx = sector.u.index_of(0, 0).or_else(|| sector.v.index_of(0, 0).map(|c| nu + c));
    match idx {
        Some(c) => {
            let s: C64 = (0..model.n()).map(|i| model.u0[i] * x[i * b + c]).sum();
            s.norm() * model.h().sqrt() / norm(x)
        }
        None => 0.0,
    }
}

/// Result of the self-consistent outgoing-wall eigenvalue iteration.
#[derive(Clone, Debug)]
pub struct OutgoingEigen {
    pub mu: C64,
    pub vector: Vec<C64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Solve `M(μ)x = μx` where `M(μ)` carries the outgoing wall condition evaluated at `μ`,
/// starting from `mu0` and following the eigenvector with the largest `φ₀` content.
pub fn outgoing_eigen(model: &Model, op: &LinearizedOperator, sector: &Sector, mu0: C64, sheet: f64) -> Result<OutgoingEigen> {
    let mut mu = mu0;
    let mut x: Option<Vec<C64>> = None;
    for it in 1..=60 {
        let mat = op.sector_matrix(model, sector, Boundary::Outgoing { mu, sheet });
        let matvec = |y: &[C64]| mat.mul_vec(y);
        let shift = mu + C64::from_polar(1e-9 * (1.0 + mu.norm()), 0.9);
        let lu = shifted_lu(&mat, shift)?;
        let mut solve = |y: &[C64]| lu.solve(y);
        let guess = match &x {
            Some(v) => v.clone(),
            None => {
                let (_, vecs) = ritz_values(&mut solve, shift, &start_vector(mat.dim(), 11), 40)?;
                vecs.into_iter()
                    .take(12)
                    .max_by(|a, b| phi0_weight(model, sector, a).partial_cmp(&phi0_weight(model, sector, b)).unwrap())
                    .ok_or_else(|| Error::Convergence("no Ritz vectors".into()))?
            }
        };
        let p = polish(&mut solve, &matvec, shift, &guess, 3);
        let step = (p.value - mu).norm();
        mu = p.value;
        x = Some(p.vector.clone());
        if step < 1e-12 * (1.0 + mu.norm()) {
            let mat = op.sector_matrix(model, sector, Boundary::Outgoing { mu, sheet });
            let y = mat.mul_vec(&p.vector);
            let r: Vec<C64> = y.iter().zip(&p.vector).map(|(a, b)| a - mu * b).collect();
            return Ok(OutgoingEigen { mu, vector: p.vector, residual: norm(&r), iterations: it });
        }
    }
    Err(Error::Convergence(format!("outgoing eigenvalue iteration did not settle (last mu = {mu})")))
}

fn label_near_zero(op: &LinearizedOperator, omega: C64) -> String {
    let eps2 = op.epsilon * op.epsilon;
    if omega.norm() < 0.1 * eps2 {
        "zero".into()
    } else if omega.im * op.lambda > 0.0 {
        "omega1".into()
    } else {
        "omega2".into()
    }
}

fn label_kappa(omega: C64, resonant: bool) -> String {
    let base = if omega.im > 0.0 { "kappa+" } else { "kappa-" };
    if resonant {
        format!("{base}/{}", if omega.re > 0.0 { "re+" } else { "re-" })
    } else {
        base.into()
    }
}

/// Discrete eigenvalues `ω` of `𝓛` in `window` over all sectors.
///
/// `NearZero` collects `|ω| < |E|/4`. `NearKappa` collects the modes grown from `φ₀`: isolated
/// eigenvalues near `±iκ₀` (Dirichlet wall) in the non-resonant case, and the self-consistent
/// outgoing-wall eigenvalues on both sheets in the resonant case.
pub fn discrete_spectrum(model: &Model, op: &LinearizedOperator, window: Window) -> Result<Vec<Mode>> {
    let e_abs = op.energy.abs();
    let mut out = Vec::new();
    match window {
        Window::NearZero => {
            for (si, s) in op.sectors.iter().enumerate() {
                let mat = op.sector_matrix(model, s, Boundary::Dirichlet);
                for (mu, x, res) in sector_disc(&mat, ZERO, 0.25 * e_abs, 24, 100 + si as u64)? {
                    let omega = -I * mu;
                    out.push(Mode { omega, pair: s.embed(model, op.lmax, &x), residual: res, sector: s.label(), label: label_near_zero(op, omega) });
                }
            }
        }
        Window::NearKappa => {
            let k0 = op.kappa0(model);
            if op.is_resonant(model) {
                for s in &op.sectors {
                    let seeds: Vec<f64> = [(s.u.index_of(0, 0).is_some(), -k0), (s.v.index_of(0, 0).is_some(), k0)]
                        .iter()
                        .filter(|p| p.0)
                        .map(|p| p.1)
                        .collect();
                    for mu0 in seeds {
                        for sheet in [-1.0, 1.0] {
                            let e = outgoing_eigen(model, op, s, C64::new(mu0, 0.0), sheet)?;
                            let omega = -I * e.mu;
                            out.push(Mode {
                                omega,
                                pair: s.embed(model, op.lmax, &e.vector),
                                residual: e.residual,
                                sector: s.label(),
                                label: label_kappa(omega, true),
                            });
                        }
                    }
                }
            } else {
                let radius = 0.4 * (e_abs - k0).min(k0);
                for (si, s) in op.sectors.iter().enumerate() {
                    let mat = op.sector_matrix(model, s, Boundary::Dirichlet);
                    for center in [-k0, k0] {
                        for (mu, x, res) in sector_disc(&mat, C64::new(center, 0.0), radius, 24, 300 + si as u64)? {
                            let omega = -I * mu;
                            out.push(Mode { omega, pair: s.embed(model, op.lmax, &x), residual: res, sector: s.label(), label: label_kappa(omega, false) });
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Mode counts of the discrete spectrum with the expected table.
#[derive(Clone, Debug)]
pub struct ModeTable {
    pub near_zero: Vec<Mode>,
    pub near_kappa: Vec<Mode>,
    pub resonant: bool,
}

impl ModeTable {
    pub fn expected_counts(resonant: bool) -> (usize, usize) {
        (6, if resonant { 4 } else { 2 })
    }

    /// Rows `label, Re ω, Im ω, residual, sector`.
    pub fn to_text(&self) -> String {
        let mut s = String::from("label\tre_omega\tim_omega\tresidual\tsector\n");
        for m in self.near_zero.iter().chain(&self.near_kappa) {
            let _ = writeln!(s, "{}\t{:.12e}\t{:.12e}\t{:.3e}\t{}", m.label, m.omega.re, m.omega.im, m.residual, m.sector);
        }
        s
    }
}

/// Compute both windows and check the counts and the reality pattern of the eigenvalues.
pub fn mode_table(model: &Model, op: &LinearizedOperator) -> Result<ModeTable> {
    let near_zero = discrete_spectrum(model, op, Window::NearZero)?;
    let near_kappa = discrete_spectrum(model, op, Window::NearKappa)?;
    let resonant = op.is_resonant(model);
    let (ez, ek) = ModeTable::expected_counts(resonant);
    if near_zero.len() != ez || near_kappa.len() != ek {
        return Err(Error::SpectralAnomaly(format!(
            "mode counts {} near 0 and {} near ±iκ, expected {ez} and {ek}",
            near_zero.len(),
            near_kappa.len()
        )));
    }
    for m in &near_kappa {
        let real = m.omega.re.abs();
        if resonant && real < 1e3 * m.residual.max(1e-14) {
            return Err(Error::SpectralAnomaly(format!("resonant mode {} has Re ω = {real:.3e}", m.label)));
        }
        if !resonant && real > 1e-8 {
            return Err(Error::SpectralAnomaly(format!("non-resonant mode {} has Re ω = {real:.3e}", m.label)));
        }
    }
    for m in near_zero.iter().filter(|m| m.label != "zero") {
        if m.omega.re.abs() > 1e-8 {
            return Err(Error::SpectralAnomaly(format!("mode {} has Re ω = {:.3e}", m.label, m.omega.re)));
        }
    }
    Ok(ModeTable { near_zero, near_kappa, resonant })
}
