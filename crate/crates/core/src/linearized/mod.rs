//! Linearization about an excited state and its discrete spectral decomposition.
//!
//! A perturbation `ζ` of `Q` obeys `ζ_t = -i{(H₀ - E + 2λ|Q|²)ζ + λQ²ζ̄}`. For the real pair
//! `f = (Re ζ, Im ζ)` this reads `f_t = 𝓛f` with `𝓛 = J(H₀ - E) + W = JK`, `J = [[0, 1], [-1, 0]]`.
//! Complexified pairs `(a, b)` are stored through `U = a + ib`, `V = a - ib`. In these
//! coordinates `𝓛 = -iM` with `M = [[A, λQ²], [-λQ̄², -A]]`, `A = H₀ - E + 2λ|Q|²`,
//! `J = -iσ₃` and `K = σ₃M`, and the real inner product becomes `½(⟨U, U'⟩ + ⟨V, V'⟩)`.
//!
//! `M` commutes with rotations about the class axis, so it splits into sectors. For `Q̃_E`
//! (order `m = 1`) sector `k` carries `U` at order `k + 1` and `V` at order `k - 1`; for `Q_E`
//! (order `m = 0` about the internal axis) both components sit at order `k`. Reflection through
//! the equatorial plane splits every sector once more by parity.

mod modes;
mod spectrum;

pub use modes::*;
pub use spectrum::*;

use crate::bound_states::{symmetry_defect, BoundState, Branch};
use crate::error::{Error, Result};
use crate::linalg::{BlockTridiag, Mat};
use crate::model::Model;
use crate::sph::{ChannelSet, SphField};
use num_complex::Complex64 as C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Complexified real pair `(a, b)` stored as `U = a + ib`, `V = a - ib` on the full channel set.
#[derive(Clone, Debug)]
pub struct Pair {
    pub u: SphField,
    pub v: SphField,
}

impl Pair {
    pub fn zeros(model: &Model, lmax: usize) -> Self {
        let full = ChannelSet::full(lmax);
        Pair { u: SphField::zeros(model.grid, full.clone()), v: SphField::zeros(model.grid, full) }
    }

    /// The real pair `(Re ζ, Im ζ)` of a complex field `ζ`.
    pub fn from_complex(zeta: &SphField, lmax: usize) -> Self {
        let full = ChannelSet::full(lmax);
        Pair { u: zeta.embed(&full), v: zeta.conj_field().embed(&full) }
    }

    /// Pair with components `a`, `b` (each complex in general).
    pub fn from_components(a: &SphField, b: &SphField, lmax: usize) -> Self {
        let full = ChannelSet::full(lmax);
        let (a, b) = (a.embed(&full), b.embed(&full));
        let mut u = a.clone();
        u.axpy(I, &b);
        let mut v = a;
        v.axpy(-I, &b);
        Pair { u, v }
    }

    /// Components `(a, b)`.
    pub fn components(&self) -> (SphField, SphField) {
        let mut a = self.u.clone();
        a.axpy(C64::new(1.0, 0.0), &self.v);
        a.scale(C64::new(0.5, 0.0));
        let mut b = self.u.clone();
        b.axpy(C64::new(-1.0, 0.0), &self.v);
        b.scale(C64::new(0.0, -0.5));
        (a, b)
    }

    /// `⟨f, g⟩ = ∫ conj(a) a' + conj(b) b'`.
    pub fn inner(&self, other: &Pair) -> C64 {
        0.5 * (self.u.inner(&other.u) + self.v.inner(&other.v))
    }

    /// `⟨J f, g⟩`.
    pub fn j_inner(&self, other: &Pair) -> C64 {
        0.5 * I * (self.u.inner(&other.u) - self.v.inner(&other.v))
    }

    pub fn apply_j(&self) -> Pair {
        let mut out = self.clone();
        out.u.scale(-I);
        out.v.scale(I);
        out
    }

    /// Componentwise complex conjugate `(ā, b̄)`.
    pub fn conj(&self) -> Pair {
        Pair { u: self.v.conj_field().embed(&self.u.channels), v: self.u.conj_field().embed(&self.v.channels) }
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).re.sqrt()
    }

    pub fn scale(&mut self, s: C64) {
        self.u.scale(s);
        self.v.scale(s);
    }

    pub fn axpy(&mut self, s: C64, other: &Pair) {
        self.u.axpy(s, &other.u);
        self.v.axpy(s, &other.v);
    }

    /// `self - other`.
    pub fn sub(&self, other: &Pair) -> Pair {
        let mut out = self.clone();
        out.axpy(C64::new(-1.0, 0.0), other);
        out
    }
}

/// Decoupled block of `M`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sector {
    pub k: i32,
    /// `+1` even or `-1` odd under reflection through the plane normal to the class axis.
    pub parity: i32,
    pub u: ChannelSet,
    pub v: ChannelSet,
}

impl Sector {
    pub fn label(&self) -> String {
        format!("k={},{}", self.k, if self.parity > 0 { "even" } else { "odd" })
    }

    pub fn block(&self) -> usize {
        self.u.len() + self.v.len()
    }

    /// Node-major coefficient vector of the sector part of `f`.
    pub fn extract(&self, f: &Pair) -> Vec<C64> {
        let n = f.u.grid.n_inner();
        let b = self.block();
        let nu = self.u.len();
        let mut x = vec![ZERO; n * b];
        let ui: Vec<usize> = self.u.channels.iter().map(|&(l, m)| f.u.channels.index_of(l, m).unwrap()).collect();
        let vi: Vec<usize> = self.v.channels.iter().map(|&(l, m)| f.v.channels.index_of(l, m).unwrap()).collect();
        for i in 0..n {
            for (a, &c) in ui.iter().enumerate() {
                x[i * b + a] = f.u.at(i, c);
            }
            for (a, &c) in vi.iter().enumerate() {
                x[i * b + nu + a] = f.v.at(i, c);
            }
        }
        x
    }

    /// Pair on the full channel set whose only nonzero part is the sector vector `x`.
    pub fn embed(&self, model: &Model, lmax: usize, x: &[C64]) -> Pair {
        let mut f = Pair::zeros(model, lmax);
        let n = model.n();
        let b = self.block();
        let nu = self.u.len();
        for (a, &(l, m)) in self.u.channels.iter().enumerate() {
            let c = f.u.channels.index_of(l, m).unwrap();
            for i in 0..n {
                f.u.set(i, c, x[i * b + a]);
            }
        }
        for (a, &(l, m)) in self.v.channels.iter().enumerate() {
            let c = f.v.channels.index_of(l, m).unwrap();
            for i in 0..n {
                f.v.set(i, c, x[i * b + nu + a]);
            }
        }
        f
    }
}

/// Every nonempty sector of `branch` up to angular cutoff `lmax`.
pub fn sectors(branch: Branch, lmax: usize) -> Vec<Sector> {
    let l = lmax as i32;
    let (klo, khi, du, dv) = match branch {
        Branch::QtildeE => (-l - 1, l + 1, 1, -1),
        Branch::QE => (-l, l, 0, 0),
    };
    let mut out = Vec::new();
    for k in klo..=khi {
        for parity in [1, -1] {
            let side = |m: i32| if m.abs() <= l { ChannelSet::with_z_parity(m, lmax, parity) } else { ChannelSet::new(vec![]) };
            let s = Sector { k, parity, u: side(k + du), v: side(k + dv) };
            if s.block() > 0 {
                out.push(s);
            }
        }
    }
    out
}

/// Boundary condition at the outer radius for the sector matrices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Boundary {
    Dirichlet,
    /// Exterior solutions `r h_ℓ(kr)` matched at the wall, with `k² = E ± μ` for the `U`/`V`
    /// rows. Evanescent channels take `Im k > 0`; propagating ones take `sign(Re k) = sheet`.
    Outgoing { mu: C64, sheet: f64 },
}

/// Wavenumber on the requested sheet.
pub fn branch_wavenumber(k2: C64, sheet: f64) -> C64 {
    let k0 = k2.sqrt();
    if k2.re < 0.0 {
        if k0.im >= 0.0 {
            k0
        } else {
            -k0
        }
    } else if sheet * k0.re >= 0.0 {
        k0
    } else {
        -k0
    }
}

/// `w(r₁)/w(r₀)` for the Riccati–Hankel function `w(r) = kr h⁽¹⁾_ℓ(kr)`.
pub fn hankel_ratio(l: usize, k: C64, r1: f64, r0: f64) -> C64 {
    let series = |z: C64| {
        let mut s = C64::new(1.0, 0.0);
        let mut term = C64::new(1.0, 0.0);
        for m in 1..=l {
            let mf = m as f64;
            let lf = l as f64;
            term *= (lf + mf) * (lf - mf + 1.0) / mf * I / (2.0 * z);
            s += term;
        }
        s
    };
    (I * k * (r1 - r0)).exp() * series(k * r1) / series(k * r0)
}

/// Linearized operator about a computed excited state.
#[derive(Clone, Debug)]
pub struct LinearizedOperator {
    pub branch: Branch,
    pub epsilon: f64,
    pub energy: f64,
    pub lambda: f64,
    /// `Q` in the class frame on the full channel set.
    pub q: SphField,
    pub lmax: usize,
    pub sectors: Vec<Sector>,
    q_nodes: Vec<Vec<C64>>,
}

/// Build the linearized operator about `state`, refusing states outside their symmetry class.
pub fn assemble(model: &Model, state: &BoundState) -> Result<LinearizedOperator> {
    let defect = symmetry_defect(state);
    if defect > 1e-8 {
        return Err(Error::Symmetry(format!("state deviates from its class by {defect:.2e}")));
    }
    let lmax = model.lmax;
    let q = state.field.embed(&ChannelSet::full(lmax));
    let ang = &model.angular;
    let q_nodes = (0..model.n())
        .map(|i| {
            let mut v = vec![ZERO; ang.n_nodes()];
            q.node_values(i, ang, &mut v);
            v
        })
        .collect();
    Ok(LinearizedOperator {
        branch: state.branch,
        epsilon: state.epsilon,
        energy: state.energy,
        lambda: state.lambda,
        q,
        lmax,
        sectors: sectors(state.branch, lmax),
        q_nodes,
    })
}

impl LinearizedOperator {
    /// `true` when `2E - e₀` lies in the continuous spectrum, so that `±iκ` become resonant.
    pub fn is_resonant(&self, model: &Model) -> bool {
        2.0 * self.energy - model.e0 > 0.0
    }

    /// Linear estimate `κ₀ = E - e₀` of the imaginary part of the `±iκ` modes.
    pub fn kappa0(&self, model: &Model) -> f64 {
        self.energy - model.e0
    }

    /// Real potential blocks `(W₁, W₂, W₃, W₄)` at a class-frame point.
    pub fn potential_blocks(&self, x: [f64; 3]) -> [f64; 4] {
        let q = self.q.eval_at(x);
        let (re, im, l) = (q.re, q.im, self.lambda);
        let w1 = 2.0 * l * re * im;
        [w1, l * (re * re + 3.0 * im * im), -l * (3.0 * re * re + im * im), -w1]
    }

    /// `M f` with `f` on the full channel sets; `adjoint` applies `M^H` instead.
    fn apply_m_inner(&self, model: &Model, f: &Pair, adjoint: bool) -> Pair {
        let ang = &model.angular;
        let lmax = f.u.channels.lmax().max(self.lmax);
        let full = ChannelSet::full(lmax);
        let (fu, fv) = (f.u.embed(&full), f.v.embed(&full));
        let mut hu = model.apply_h0(&fu);
        hu.axpy(C64::new(-self.energy, 0.0), &fu);
        let mut hv = model.apply_h0(&fv);
        hv.axpy(C64::new(-self.energy, 0.0), &fv);
        let mut nu = SphField::zeros(model.grid, full.clone());
        let mut nv = SphField::zeros(model.grid, full.clone());
        let nn = ang.n_nodes();
        let (mut uv, mut vv) = (vec![ZERO; nn], vec![ZERO; nn]);
        let (mut ou, mut ov) = (vec![ZERO; nn], vec![ZERO; nn]);
        let l = self.lambda;
        let s = if adjoint { -1.0 } else { 1.0 };
        for i in 0..model.n() {
            fu.node_values(i, ang, &mut uv);
            fv.node_values(i, ang, &mut vv);
            for qn in 0..nn {
                let q = self.q_nodes[i][qn];
                let a2 = 2.0 * l * q.norm_sqr();
                ou[qn] = a2 * uv[qn] + s * l * q * q * vv[qn];
                ov[qn] = -s * l * (q * q).conj() * uv[qn] - a2 * vv[qn];
            }
            nu.set_from_node_values(i, ang, &ou);
            nv.set_from_node_values(i, ang, &ov);
        }
        hu.axpy(C64::new(1.0, 0.0), &nu);
        hv.scale(C64::new(-1.0, 0.0));
        hv.axpy(C64::new(1.0, 0.0), &nv);
        Pair { u: hu, v: hv }
    }

    /// `M f`.
    pub fn apply_m(&self, model: &Model, f: &Pair) -> Pair {
        self.apply_m_inner(model, f, false)
    }

    /// `𝓛 f = -i M f`.
    pub fn apply(&self, model: &Model, f: &Pair) -> Pair {
        let mut out = self.apply_m(model, f);
        out.scale(-I);
        out
    }

    /// `𝓛* f = i M^H f`.
    pub fn apply_adjoint(&self, model: &Model, f: &Pair) -> Pair {
        let mut out = self.apply_m_inner(model, f, true);
        out.scale(I);
        out
    }

    /// `K f = σ₃ M f`.
    pub fn apply_k(&self, model: &Model, f: &Pair) -> Pair {
        let mut out = self.apply_m(model, f);
        out.v.scale(C64::new(-1.0, 0.0));
        out
    }

    /// `M` restricted to `sector` as a block-tridiagonal matrix in node-major order.
    pub fn sector_matrix(&self, model: &Model, sector: &Sector, bc: Boundary) -> BlockTridiag<C64> {
        let n = model.n();
        let b = sector.block();
        let nu = sector.u.len();
        let ang = &model.angular;
        let l = self.lambda;
        let du: Vec<Vec<f64>> = sector.u.channels.iter().map(|&(ll, _)| model.diagonal(ll)).collect();
        let dv: Vec<Vec<f64>> = sector.v.channels.iter().map(|&(ll, _)| model.diagonal(ll)).collect();
        let off = model.offdiag();
        let mut mat = BlockTridiag::<C64>::zeros(n, b);
        let (uc, vc) = (&sector.u.channels, &sector.v.channels);
        let mut g0 = vec![ZERO; ang.n_nodes()];
        let mut g2 = vec![ZERO; ang.n_nodes()];
        let mut g2c = vec![ZERO; ang.n_nodes()];
        for i in 0..n {
            for (qn, q) in self.q_nodes[i].iter().enumerate() {
                g0[qn] = C64::new(2.0 * l * q.norm_sqr(), 0.0);
                g2[qn] = l * q * q;
                g2c[qn] = -l * (q * q).conj();
            }
            let blk: &mut Mat<C64> = &mut mat.diag[i];
            let fill = |blk: &mut Mat<C64>, rows: &[(usize, i32)], cols: &[(usize, i32)], g: &[C64], r0: usize, c0: usize, sign: f64| {
                if rows.is_empty() || cols.is_empty() {
                    return;
                }
                let m = ang.multiplier(rows, cols, g);
                for a in 0..rows.len() {
                    for c in 0..cols.len() {
                        blk.set(r0 + a, c0 + c, sign * m[a * cols.len() + c]);
                    }
                }
            };
            fill(blk, uc, uc, &g0, 0, 0, 1.0);
            fill(blk, uc, vc, &g2, 0, nu, 1.0);
            fill(blk, vc, uc, &g2c, nu, 0, 1.0);
            fill(blk, vc, vc, &g0, nu, nu, -1.0);
            for a in 0..nu {
                blk.add_to(a, a, C64::new(du[a][i] - self.energy, 0.0));
            }
            for a in 0..vc.len() {
                blk.add_to(nu + a, nu + a, C64::new(-(dv[a][i] - self.energy), 0.0));
            }
            if i + 1 < n {
                for a in 0..b {
                    let s = if a < nu { off } else { -off };
                    mat.upper[i].set(a, a, C64::new(s, 0.0));
                    mat.lower[i].set(a, a, C64::new(s, 0.0));
                }
            }
        }
        if let Boundary::Outgoing { mu, sheet } = bc {
            let r1 = model.grid.r_max;
            let r0 = model.grid.r(n - 1);
            let last = &mut mat.diag[n - 1];
            for (a, &(ll, _)) in uc.iter().enumerate() {
                let k = branch_wavenumber(self.energy + mu, sheet);
                last.add_to(a, a, off * hankel_ratio(ll, k, r1, r0));
            }
            for (a, &(ll, _)) in vc.iter().enumerate() {
                let k = branch_wavenumber(self.energy - mu, sheet);
                last.add_to(nu + a, nu + a, -off * hankel_ratio(ll, k, r1, r0));
            }
        }
        mat
    }

    /// Sector containing the `(ℓ, m)` channel on the `U` side (`on_u`) or the `V` side.
    pub fn sector_with(&self, l: usize, m: i32, on_u: bool) -> Option<&Sector> {
        self.sectors.iter().find(|s| if on_u { s.u.index_of(l, m).is_some() } else { s.v.index_of(l, m).is_some() })
    }
}
