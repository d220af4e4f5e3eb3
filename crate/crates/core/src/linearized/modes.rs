//! Generalized kernel, symplectic pairings, spectral projections and the spectral gap.

use super::spectrum::{apply_scalar, discrete_spectrum, scalar_channels, scalar_sector_matrix, Mode, ScalarOp, Window};
use super::{Boundary, LinearizedOperator, Pair, Sector, I, ZERO};
use crate::bound_states::{class_direction, energy_derivative, BoundState, Branch};
use crate::error::{Error, Result};
use crate::linalg::arnoldi::ritz_values;
use crate::linalg::scalar::{dot, norm};
use crate::linalg::{BlockTridiag, Lu, Mat};
use crate::model::Model;
use crate::sph::{ChannelSet, SphField};
use crate::symmetry::{mat_vec, plane_axis};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Invariant subspace spanned by `modes`, with the pairing matrix `G_ij = ⟨JΦ_i, Φ_j⟩`.
#[derive(Clone, Debug)]
pub struct ModeGroup {
    pub label: String,
    pub names: Vec<String>,
    pub modes: Vec<Pair>,
    pub omegas: Vec<C64>,
    pub gram: Mat<C64>,
    gram_lu: Lu<C64>,
}

impl ModeGroup {
    pub fn new(label: &str, names: Vec<String>, modes: Vec<Pair>, omegas: Vec<C64>) -> Result<Self> {
        let n = modes.len();
        let mut gram = Mat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                gram.set(i, j, modes[i].j_inner(&modes[j]));
            }
        }
        let scale = modes.iter().map(|m| m.norm().powi(2)).fold(0.0, f64::max);
        let gram_lu = Lu::new(&gram);
        let rel = gram_lu.min_pivot / scale;
        if !(rel >= 1e-10) {
            return Err(Error::DegeneratePairing(rel));
        }
        Ok(ModeGroup { label: label.into(), names, modes, omegas, gram, gram_lu })
    }

    /// Coordinates `c` of `P f = Σ c_i Φ_i`, i.e. `c = G⁻¹ (⟨JΦ_j, f⟩)_j`.
    pub fn coefficients(&self, f: &Pair) -> Vec<C64> {
        let mut w: Vec<C64> = self.modes.iter().map(|m| m.j_inner(f)).collect();
        self.gram_lu.solve_in_place(&mut w);
        w
    }

    /// `P f = Σ Φ_i (G⁻¹)_{ij} ⟨JΦ_j, f⟩`.
    pub fn project(&self, f: &Pair) -> Pair {
        let w = self.coefficients(f);
        let mut out = f.clone();
        out.scale(ZERO);
        for (c, m) in w.iter().zip(&self.modes) {
            out.axpy(*c, m);
        }
        out
    }

    pub fn mode(&self, name: &str) -> Option<&Pair> {
        self.names.iter().position(|n| n == name).map(|i| &self.modes[i])
    }
}

/// Generalized kernel with the residuals of its defining relations.
#[derive(Clone, Debug)]
pub struct ZeroModes {
    pub groups: Vec<ModeGroup>,
    pub relations: Vec<(String, f64)>,
}

fn rel_residual(model: &Model, op: &LinearizedOperator, f: &Pair, target: Option<&Pair>) -> f64 {
    let lf = op.apply(model, f);
    let r = match target {
        Some(t) => lf.sub(t),
        None => lf,
    };
    r.norm() / f.norm()
}

/// Tolerance on `‖𝓛Φ - target‖ / ‖Φ‖` for the kernel relations.
pub const RELATION_TOL: f64 = 1e-6;

/// The generalized kernel built from symmetry derivatives of the state.
///
/// Real branch: phase mode `(0, Q)` with partner `(Z₁, 0)`, `Z₁ = ∂_E Q`, where
/// `𝓛(Z₁, 0) = -(0, Q)`; rotation modes `(Z_j, 0)` for the `(1, 2)` and `(1, 3)` planes with
/// partners `(0, Y_j)`, `L₋Y_j = Z_j`. Co-rotational branch: `Φ₀₁ = (Im Q̃, -Re Q̃)`,
/// `Φ₀₀ = ∂_E Q̃` with `𝓛Φ₀₀ = Φ₀₁`, and the rotation modes of the `(1, 3)` and `(2, 3)` planes.
pub fn zero_modes(model: &Model, op: &LinearizedOperator, state: &BoundState) -> Result<ZeroModes> {
    let lmax = op.lmax;
    let full = ChannelSet::full(lmax);
    let q = state.field.embed(&full);
    let dq = energy_derivative(model, state)?.embed(&full);
    let frame = state.branch.frame();
    let rot = |j: usize, k: usize| -> Result<SphField> {
        let n = mat_vec(&frame, plane_axis(j, k)?);
        Ok(q.rotation_derivative(n))
    };
    let mut relations = Vec::new();
    let mut groups = Vec::new();
    let mut check = |name: &str, f: &Pair, target: Option<&Pair>| -> Result<()> {
        let r = rel_residual(model, op, f, target);
        relations.push((name.to_string(), r));
        if r > RELATION_TOL {
            return Err(Error::Convergence(format!("generalized kernel relation {name} fails with residual {r:.3e}")));
        }
        Ok(())
    };
    match state.branch {
        Branch::QE => {
            let z1 = Pair::from_complex(&dq, lmax);
            let mut iq = q.clone();
            iq.scale(I);
            let phase = Pair::from_complex(&iq, lmax);
            let mut minus_phase = phase.clone();
            minus_phase.scale(C64::new(-1.0, 0.0));
            check("L(0,Q)=0", &phase, None)?;
            check("L(Z1,0)=-(0,Q)", &z1, Some(&minus_phase))?;
            groups.push(ModeGroup::new("P01", vec!["Z1".into(), "phase".into()], vec![z1, phase], vec![ZERO; 2])?);
            for (label, (j, k)) in [("P02", (1, 2)), ("P03", (1, 3))] {
                let z = rot(j, k)?;
                let y = solve_y(model, op, &z)?;
                let zp = Pair::from_complex(&z, lmax);
                let mut iy = y.clone();
                iy.scale(I);
                let yp = Pair::from_complex(&iy, lmax);
                check(&format!("L(Z,0)=0 [{label}]"), &zp, None)?;
                check(&format!("L(0,Y)=(Z,0) [{label}]"), &yp, Some(&zp))?;
                groups.push(ModeGroup::new(label, vec!["Z".into(), "Y".into()], vec![zp, yp], vec![ZERO; 2])?);
            }
        }
        Branch::QtildeE => {
            let phi00 = Pair::from_complex(&dq, lmax);
            let mut mq = q.clone();
            mq.scale(-I);
            let phi01 = Pair::from_complex(&mq, lmax);
            check("H Phi01 = 0", &phi01, None)?;
            check("H Phi00 = Phi01", &phi00, Some(&phi01))?;
            groups.push(ModeGroup::new("P01", vec!["Phi00".into(), "Phi01".into()], vec![phi00, phi01], vec![ZERO; 2])?);
            let a = Pair::from_complex(&rot(1, 3)?, lmax);
            let b = Pair::from_complex(&rot(2, 3)?, lmax);
            check("H Phi02 = 0", &a, None)?;
            check("H Phi03 = 0", &b, None)?;
            groups.push(ModeGroup::new("P02", vec!["Phi02".into(), "Phi03".into()], vec![a, b], vec![ZERO; 2])?);
        }
    }
    Ok(ZeroModes { groups, relations })
}

/// Split a class-frame field into its `(m, parity)` scalar sectors.
fn scalar_pieces(f: &SphField, lmax: usize) -> Vec<(i32, i32, ChannelSet, SphField)> {
    let l = lmax as i32;
    let mut out = Vec::new();
    for m in -l..=l {
        for parity in [1, -1] {
            let chans = scalar_channels(lmax, m, parity);
            if chans.is_empty() {
                continue;
            }
            let piece = f.embed(&chans);
            if piece.norm() > 0.0 {
                out.push((m, parity, chans, piece));
            }
        }
    }
    out
}

/// Solve `L₋Y = Z` with `⟨Q, Y⟩ = 0` (real branch). The kernel sector `(m = 0, odd)` is handled
/// by deflated shift refinement; all other sectors are nonsingular.
pub fn solve_y(model: &Model, op: &LinearizedOperator, z: &SphField) -> Result<SphField> {
    if op.branch != Branch::QE {
        return Err(Error::Precondition("solve_y is defined for the real branch".into()));
    }
    let full = ChannelSet::full(op.lmax);
    let z = z.embed(&full);
    let qn = op.q.norm();
    let qz = op.q.inner(&z);
    if qn > 0.0 && qz.norm() > 1e-8 * qn * z.norm() {
        return Err(Error::Precondition(format!("solvability violated: <Q, Z> = {qz:.3e}")));
    }
    let mut y = SphField::zeros(model.grid, full.clone());
    for (m, parity, chans, piece) in scalar_pieces(&z, op.lmax) {
        let mat = scalar_sector_matrix(model, op, ScalarOp::LMinus, &chans).to_complex();
        let rhs = piece.data.clone();
        let sol = if m == 0 && parity == -1 && qn > 0.0 {
            let qhat = {
                let mut v = op.q.embed(&chans).data;
                let s = norm(&v);
                v.iter_mut().for_each(|x| *x /= s);
                v
            };
            let project = |x: &mut Vec<C64>| {
                let c = dot(&qhat, x);
                x.iter_mut().zip(&qhat).for_each(|(a, b)| *a -= c * b);
            };
            let s = -0.25 * op.energy.abs();
            let mut shifted = mat.clone();
            shifted.shift(C64::new(-s, 0.0));
            let lu = shifted.factor()?;
            let mut b = rhs.clone();
            project(&mut b);
            let mut x = vec![ZERO; b.len()];
            let mut converged = false;
            for _ in 0..200 {
                let r: Vec<C64> = b.iter().zip(&x).map(|(bi, xi)| bi + s * xi).collect();
                let mut nx = lu.solve(&r);
                project(&mut nx);
                let change: f64 = norm(&nx.iter().zip(&x).map(|(a, b)| a - b).collect::<Vec<_>>());
                x = nx;
                if change <= 1e-14 * (1.0 + norm(&x)) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::Convergence("deflated L- solve did not converge".into()));
            }
            x
        } else {
            mat.factor()?.solve(&rhs)
        };
        let mut part = SphField::zeros(model.grid, chans.clone());
        part.data = sol;
        y.axpy(C64::new(1.0, 0.0), &part.embed(&full));
    }
    Ok(y)
}

/// Leading-order forms used to normalize computed eigenvectors.
fn leading_form(model: &Model, op: &LinearizedOperator, mode: &Mode) -> Pair {
    let lmax = op.lmax;
    if mode.label == "omega1" || mode.label == "omega2" {
        let phi1 = model.phi_lab(1).embed(&ChannelSet::full(lmax));
        let phi2 = model.phi_lab(2).embed(&ChannelSet::full(lmax));
        let mut a = phi2.clone();
        a.axpy(-I, &phi1);
        let mut b = phi1.clone();
        b.axpy(I, &phi2);
        let lead = Pair::from_components(&a, &b, lmax);
        return if mode.label == "omega1" { lead } else { lead.conj() };
    }
    let full = ChannelSet::full(lmax);
    let phi0 = SphField::single(model.grid, 0, 0, &model.u0).embed(&full);
    let on_u = Pair { u: phi0.clone(), v: SphField::zeros(model.grid, full.clone()) };
    let on_v = Pair { u: SphField::zeros(model.grid, full), v: phi0 };
    if on_u.inner(&mode.pair).norm() >= on_v.inner(&mode.pair).norm() {
        on_u
    } else {
        on_v
    }
}

fn normalized(model: &Model, op: &LinearizedOperator, mode: &Mode) -> Pair {
    let lead = leading_form(model, op, mode);
    let c = lead.inner(&mode.pair);
    let mut p = mode.pair.clone();
    if c.norm() > 0.0 {
        p.scale(lead.inner(&lead) / c);
    }
    p
}

/// Full discrete decomposition with its projections.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub branch: Branch,
    pub epsilon: f64,
    pub resonant: bool,
    pub groups: Vec<ModeGroup>,
    pub relations: Vec<(String, f64)>,
}

impl SpectralDecomposition {
    pub fn group(&self, label: &str) -> Option<&ModeGroup> {
        self.groups.iter().find(|g| g.label == label)
    }

    /// Projection onto the named invariant subspace.
    pub fn project(&self, label: &str, f: &Pair) -> Result<Pair> {
        self.group(label)
            .map(|g| g.project(f))
            .ok_or_else(|| Error::Precondition(format!("no invariant subspace labelled {label}")))
    }

    /// `P_c f = f - Σ P_g f`.
    pub fn project_continuous(&self, f: &Pair) -> Pair {
        let mut out = f.clone();
        for g in &self.groups {
            out.axpy(C64::new(-1.0, 0.0), &g.project(f));
        }
        out
    }

    pub fn labels(&self) -> Vec<String> {
        self.groups.iter().map(|g| g.label.clone()).collect()
    }

    pub fn mode_count(&self) -> usize {
        self.groups.iter().map(|g| g.modes.len()).sum()
    }
}

/// Decomposition of `𝓛` about `state`: the generalized kernel, the small eigenvalues
/// `ω₁, ω₂` (co-rotational branch), and the modes grown from `φ₀`.
pub fn decompose(model: &Model, op: &LinearizedOperator, state: &BoundState) -> Result<SpectralDecomposition> {
    let zm = zero_modes(model, op, state)?;
    let mut groups = zm.groups;
    let near_zero = discrete_spectrum(model, op, Window::NearZero)?;
    let nonzero: Vec<&Mode> = near_zero.iter().filter(|m| m.label != "zero").collect();
    let expected_nonzero = match op.branch {
        Branch::QE => 0,
        Branch::QtildeE => 2,
    };
    if near_zero.len() != 6 || nonzero.len() != expected_nonzero {
        return Err(Error::SpectralAnomaly(format!(
            "{} eigenvalues near 0 ({} nonzero), expected 6 ({expected_nonzero})",
            near_zero.len(),
            nonzero.len()
        )));
    }
    for (label, name) in [("P1", "omega1"), ("P2", "omega2")] {
        if let Some(m) = nonzero.iter().find(|m| m.label == name) {
            groups.push(ModeGroup::new(label, vec![name.into()], vec![normalized(model, op, m)], vec![m.omega])?);
        }
    }
    let kappa = discrete_spectrum(model, op, Window::NearKappa)?;
    let resonant = op.is_resonant(model);
    let (_, ek) = super::ModeTable::expected_counts(resonant);
    if kappa.len() != ek {
        return Err(Error::SpectralAnomaly(format!("{} modes near ±iκ, expected {ek}", kappa.len())));
    }
    for (label, up) in [("P+", true), ("P-", false)] {
        let ms: Vec<&Mode> = kappa.iter().filter(|m| (m.omega.im > 0.0) == up).collect();
        groups.push(ModeGroup::new(
            label,
            ms.iter().map(|m| m.label.clone()).collect(),
            ms.iter().map(|m| normalized(model, op, m)).collect(),
            ms.iter().map(|m| m.omega).collect(),
        )?);
    }
    Ok(SpectralDecomposition { branch: op.branch, epsilon: op.epsilon, resonant, groups, relations: zm.relations })
}

fn hermitian_k(model: &Model, op: &LinearizedOperator, s: &Sector) -> BlockTridiag<C64> {
    let mut k = op.sector_matrix(model, s, Boundary::Dirichlet);
    let nu = s.u.len();
    let b = s.block();
    let flip = |m: &mut Mat<C64>| {
        for r in nu..b {
            for c in 0..b {
                let v = m.get(r, c);
                m.set(r, c, -v);
            }
        }
    };
    k.diag.iter_mut().for_each(flip);
    k.lower.iter_mut().for_each(flip);
    k.upper.iter_mut().for_each(flip);
    k
}

/// Orthonormal basis of the span of `vs` (modified Gram–Schmidt, two passes, rank-revealing).
fn orthonormal(vs: Vec<Vec<C64>>) -> Vec<Vec<C64>> {
    let scale = vs.iter().map(|v| norm(v)).fold(0.0, f64::max);
    let mut basis: Vec<Vec<C64>> = Vec::new();
    for mut v in vs {
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &v);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let n = norm(&v);
        if n > 1e-8 * scale {
            v.iter_mut().for_each(|x| *x /= n);
            basis.push(v);
        }
    }
    basis
}

/// `min ⟨η, Kη⟩/‖η‖²` over fields `η` with `⟨w, η⟩ = 0` for every `w` in `constraints`.
pub fn constrained_minimum(model: &Model, op: &LinearizedOperator, constraints: &[Pair]) -> Result<f64> {
    let lower = model.e0 - op.energy - 3.0 * op.q_nodes.iter().flatten().map(|q| q.norm_sqr()).fold(0.0, f64::max) - 1.0;
    let sigma = C64::new(lower, 0.0);
    let mut best = f64::INFINITY;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for s in &op.sectors {
        let w = orthonormal(constraints.iter().map(|c| s.extract(c)).filter(|v| norm(v) > 0.0).collect());
        let mut k = hermitian_k(model, op, s);
        k.shift(-sigma);
        let lu = k.factor()?;
        let kw: Vec<Vec<C64>> = w.iter().map(|v| lu.solve(v)).collect();
        let nw = w.len();
        let mut t = Mat::zeros(nw.max(1));
        for i in 0..nw {
            for j in 0..nw {
                t.set(i, j, dot(&w[i], &kw[j]));
            }
        }
        let tlu = Lu::new(&t);
        let mut solve = |b: &[C64]| {
            let mut y = lu.solve(b);
            if nw > 0 {
                let mut c: Vec<C64> = w.iter().map(|v| dot(v, &y)).collect();
                tlu.solve_in_place(&mut c);
                for (ci, kv) in c.iter().zip(&kw) {
                    y.iter_mut().zip(kv).for_each(|(a, b)| *a -= ci * b);
                }
            }
            y
        };
        let mut start: Vec<C64> = (0..k.dim()).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
        for v in &w {
            let c = dot(v, &start);
            start.iter_mut().zip(v).for_each(|(a, b)| *a -= c * b);
        }
        let (vals, _) = ritz_values(&mut solve, sigma, &start, 40)?;
        if let Some(v) = vals.iter().filter(|v| v.re.is_finite()).map(|v| v.re).reduce(f64::min) {
            best = best.min(v);
        }
    }
    Ok(best)
}

/// Spectral gap of `K` on the continuous subspace: `η = P_c f` exactly when `⟨JΦ, η⟩ = 0` for
/// every discrete mode `Φ`, so the minimum is taken under those constraints.
pub fn spectral_gap(model: &Model, op: &LinearizedOperator, dec: &SpectralDecomposition) -> Result<f64> {
    let constraints: Vec<Pair> = dec.groups.iter().flat_map(|g| g.modes.iter().map(|m| m.apply_j())).collect();
    constrained_minimum(model, op, &constraints)
}

/// Constraints removing `φ₀` and `φ₁, φ₂, φ₃` from both components.
pub fn linear_discrete_constraints(model: &Model, lmax: usize) -> Vec<Pair> {
    let full = ChannelSet::full(lmax);
    let zero = SphField::zeros(model.grid, full.clone());
    let mut fields = vec![SphField::single(model.grid, 0, 0, &model.u0).embed(&full)];
    for j in 1..=3 {
        fields.push(model.phi_lab(j).embed(&full));
    }
    fields
        .into_iter()
        .flat_map(|f| [Pair { u: f.clone(), v: zero.clone() }, Pair { u: zero.clone(), v: f }])
        .collect()
}

/// The `6 × 6` leading-order matrix of `𝓛/(λε²/2)` on `span{φ_j}²` from the proof of the
/// near-zero spectrum of the co-rotational branch.
pub const REDUCED_FIXTURE: [[i64; 6]; 6] = [
    [0, 1, 0, 1, 0, 0],
    [1, 0, 0, 0, 3, 0],
    [0, 0, 0, 0, 0, 0],
    [-3, 0, 0, 0, -1, 0],
    [0, -1, 0, -1, 0, 0],
    [0, 0, 0, 0, 0, 0],
];

/// Characteristic polynomial `det(τ - A)` of an integer matrix by the Faddeev–LeVerrier
/// recursion in exact integer arithmetic; coefficients from `τⁿ` down to `τ⁰`.
pub fn characteristic_polynomial(a: &[[i64; 6]; 6]) -> Vec<i64> {
    let n = 6;
    let mut coeffs = vec![1i64];
    let mut m = [[0i64; 6]; 6];
    for k in 1..=n {
        let mut am = [[0i64; 6]; 6];
        for i in 0..n {
            for j in 0..n {
                let prev = if i == j { coeffs[k - 1] } else { 0 };
                m[i][j] += prev;
            }
        }
        for i in 0..n {
            for j in 0..n {
                am[i][j] = (0..n).map(|l| a[i][l] * m[l][j]).sum();
            }
        }
        let tr: i64 = (0..n).map(|i| am[i][i]).sum();
        assert_eq!(tr % k as i64, 0, "Faddeev–LeVerrier division must be exact");
        coeffs.push(-tr / k as i64);
        m = am;
    }
    coeffs
}

/// Roots of the fixture's characteristic polynomial: the multiplicity of `0` from the trailing
/// zero coefficients and the remaining quadratic factor in closed form.
pub fn fixture_eigenvalues() -> Result<Vec<C64>> {
    let p = characteristic_polynomial(&REDUCED_FIXTURE);
    let zeros = p.iter().rev().take_while(|&&c| c == 0).count();
    let rest = &p[..p.len() - zeros];
    if rest.len() != 3 {
        return Err(Error::SpectralAnomaly(format!("unexpected characteristic polynomial {p:?}")));
    }
    let (a, b, c) = (rest[0] as f64, rest[1] as f64, rest[2] as f64);
    let disc = C64::new(b * b - 4.0 * a * c, 0.0).sqrt();
    let mut out = vec![ZERO; zeros];
    out.push((-b + disc) / (2.0 * a));
    out.push((-b - disc) / (2.0 * a));
    Ok(out)
}

/// The same `6 × 6` matrix evaluated from the computed co-rotational state: rows
/// `τa = P(W₁)a + (P(W₂) - (E - e₁))b`, `τb = (P(W₃) + (E - e₁))a + P(W₄)b`, scaled by `2/(λε²)`,
/// with `P(W)_{jk} = ⟨φ_j, W φ_k⟩`.
pub fn reduced_near_zero_matrix(model: &Model, op: &LinearizedOperator) -> Result<[[f64; 6]; 6]> {
    if op.branch != Branch::QtildeE {
        return Err(Error::Precondition("the reduced matrix is defined for the co-rotational branch".into()));
    }
    let ang = &model.angular;
    let lmax = op.lmax;
    let full = ChannelSet::full(lmax);
    let phis: Vec<SphField> = (1..=3).map(|j| model.phi_lab(j).embed(&full)).collect();
    let mut blocks = [[[0.0f64; 3]; 3]; 4];
    let mut vals = vec![ZERO; ang.n_nodes()];
    for w in 0..4 {
        for k in 0..3 {
            let mut wf = SphField::zeros(model.grid, full.clone());
            for i in 0..model.n() {
                phis[k].node_values(i, ang, &mut vals);
                for (v, q) in vals.iter_mut().zip(&op.q_nodes[i]) {
                    let (re, im, l) = (q.re, q.im, op.lambda);
                    let wv = match w {
                        0 => 2.0 * l * re * im,
                        1 => l * (re * re + 3.0 * im * im),
                        2 => -l * (3.0 * re * re + im * im),
                        _ => -2.0 * l * re * im,
                    };
                    *v *= wv;
                }
                wf.set_from_node_values(i, ang, &vals);
            }
            for j in 0..3 {
                blocks[w][j][k] = phis[j].inner(&wf).re;
            }
        }
    }
    let de = op.energy - model.e1;
    let scale = 2.0 / (op.lambda * op.epsilon * op.epsilon);
    let mut out = [[0.0; 6]; 6];
    for j in 0..3 {
        for k in 0..3 {
            let d = if j == k { de } else { 0.0 };
            out[j][k] = scale * blocks[0][j][k];
            out[j][k + 3] = scale * (blocks[1][j][k] - d);
            out[j + 3][k] = scale * (blocks[2][j][k] + d);
            out[j + 3][k + 3] = scale * blocks[3][j][k];
        }
    }
    Ok(out)
}

/// The class direction `φ̂` lifted to a pair `(φ̂, conj φ̂)`.
pub fn class_direction_pair(model: &Model, branch: Branch, lmax: usize) -> Pair {
    Pair::from_complex(&class_direction(model, branch, lmax), lmax)
}

/// `L₊Z₁ - Q`, `L₊Z_j` and `L₋Q` residual norms for the real branch.
pub fn scalar_relations(model: &Model, op: &LinearizedOperator, state: &BoundState) -> Result<Vec<(String, f64)>> {
    if op.branch != Branch::QE {
        return Err(Error::Precondition("scalar relations are defined for the real branch".into()));
    }
    let full = ChannelSet::full(op.lmax);
    let q = state.field.embed(&full);
    let z1 = energy_derivative(model, state)?.embed(&full);
    let mut r1 = apply_scalar(model, op, ScalarOp::LPlus, &z1);
    r1.axpy(C64::new(-1.0, 0.0), &q);
    let mut out = vec![
        ("L+ Z1 - Q".to_string(), r1.norm() / q.norm()),
        ("L- Q".to_string(), apply_scalar(model, op, ScalarOp::LMinus, &q).norm() / q.norm()),
    ];
    for (name, (j, k)) in [("L+ Z2", (1, 2)), ("L+ Z3", (1, 3))] {
        let n = mat_vec(&state.branch.frame(), plane_axis(j, k)?);
        let z = q.rotation_derivative(n);
        out.push((name.to_string(), apply_scalar(model, op, ScalarOp::LPlus, &z).norm() / z.norm()));
    }
    Ok(out)
}
