//! Leading-order bifurcation system on the degenerate eigenspace and the classification of
//! its roots into the real-type and complex-type orbits.
//!
//! For `v = z·φ` the zero-order equations read `2 z_j |z|² + z̄_j z² = z_j / I`. Nonzero roots
//! have either `|z|² = 1/(3I)` with `z` real up to a phase, or `|z|² = 1/(2I)` with `z² = 0`.

use crate::error::{Error, Result};
use crate::symmetry::{act_on_coeff, matmul, rotation, GroupElement, Internal, Mat3, IDENTITY};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub type Coeff = [C64; 3];

/// Default residual tolerance for [`classify_root`].
pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orbit {
    /// Orbit of `(3I)^{-1/2} (1, 0, 0)`.
    O1RealType,
    /// Orbit of `(4I)^{-1/2} (1, i, 0)`.
    O2ComplexType,
    Zero,
}

impl Orbit {
    pub fn label(&self) -> &'static str {
        match self {
            Orbit::O1RealType => "O1_real_type",
            Orbit::O2ComplexType => "O2_complex_type",
            Orbit::Zero => "zero",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BifurcationRoot {
    pub z: Coeff,
    pub orbit: Orbit,
    /// `act_on_coeff(canonical_map, z)` is the orbit representative.
    pub canonical_map: GroupElement,
    pub residual: f64,
}

pub fn norm2(z: &Coeff) -> f64 {
    z.iter().map(|x| x.norm_sqr()).sum()
}

/// `z² = Σ z_l²` (no conjugation).
pub fn square(z: &Coeff) -> C64 {
    z.iter().map(|x| x * x).sum()
}

/// `max_j |2 z_j |z|² + z̄_j z² − z_j / I|`.
pub fn residual(z: &Coeff, i: f64) -> f64 {
    let n2 = norm2(z);
    let s = square(z);
    z.iter().map(|zj| (2.0 * zj * n2 + zj.conj() * s - zj / i).norm()).fold(0.0, f64::max)
}

fn check_i(i: f64) -> Result<()> {
    if i > 0.0 && i.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("overlap constant I = {i} must be positive")))
    }
}

/// Real-type representative `(3I)^{-1/2}(1,0,0)`.
pub fn representative_o1(i: f64) -> Coeff {
    [C64::new((1.0 / (3.0 * i)).sqrt(), 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]
}

/// Complex-type representative `(4I)^{-1/2}(1,i,0)`.
pub fn representative_o2(i: f64) -> Coeff {
    let c = (1.0 / (4.0 * i)).sqrt();
    [C64::new(c, 0.0), C64::new(0.0, c), C64::new(0.0, 0.0)]
}

/// The two orbit representatives and the zero root.
pub fn solve_zero_order(i: f64) -> Result<Vec<BifurcationRoot>> {
    check_i(i)?;
    let zero = [C64::new(0.0, 0.0); 3];
    Ok([(representative_o1(i), Orbit::O1RealType), (representative_o2(i), Orbit::O2ComplexType), (zero, Orbit::Zero)]
        .into_iter()
        .map(|(z, orbit)| BifurcationRoot { z, orbit, canonical_map: GroupElement::identity(), residual: residual(&z, i) })
        .collect())
}

/// Proper rotation taking the unit vector `u` to `e₁`.
fn rotation_to_e1(u: [f64; 3]) -> Mat3 {
    let c = u[0];
    // Axis k = u × e₁ = (0, u₃, -u₂).
    let (k2, k3) = (u[2], -u[1]);
    let s = (k2 * k2 + k3 * k3).sqrt();
    if s < 1e-300 {
        return if c > 0.0 { IDENTITY } else { rotation(1, 2, std::f64::consts::PI).unwrap() };
    }
    let (k2, k3) = (k2 / s, k3 / s);
    let k = [0.0, k2, k3];
    let kx = [[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]];
    let kk = matmul(&kx, &kx);
    let mut r = IDENTITY;
    for a in 0..3 {
        for b in 0..3 {
            r[a][b] += s * kx[a][b] + (1.0 - c) * kk[a][b];
        }
    }
    r
}

fn apply(m: &Mat3, z: &Coeff) -> Coeff {
    [0, 1, 2].map(|i| z[0] * m[i][0] + z[1] * m[i][1] + z[2] * m[i][2])
}

fn transpose(m: &Mat3) -> Mat3 {
    crate::symmetry::transpose(m)
}

/// Classify a root and build the group element mapping it to its orbit representative.
///
/// The reduction follows the constructive orbit argument: phase-rotate a component of maximal
/// modulus (lowest index on ties) to the positive reals and move it to the first slot; a vector
/// that is then real belongs to the real-type orbit. Otherwise `R₂₃(α)ᵀ` makes the second slot
/// purely imaginary, after which the third slot is real or imaginary and a final `R₁₃` or `R₂₃`
/// rotation reaches the normal form `(c, ic, 0)`.
pub fn classify_root(z: Coeff, i: f64, tol: f64) -> Result<BifurcationRoot> {
    check_i(i)?;
    let res = residual(&z, i);
    if res > tol {
        return Err(Error::NotARoot { residual: res });
    }
    let n2 = norm2(&z);
    if n2.sqrt() <= tol {
        return Ok(BifurcationRoot { z, orbit: Orbit::Zero, canonical_map: GroupElement::identity(), residual: res });
    }
    let mods: Vec<f64> = z.iter().map(|x| x.norm()).collect();
    let mmax = mods.iter().cloned().fold(0.0, f64::max);
    let j0 = mods.iter().position(|&m| m >= mmax * (1.0 - 1e-12)).unwrap();
    let phase = -z[j0].arg();
    let rotate_phase = C64::from_polar(1.0, phase);
    let perm: Mat3 = match j0 {
        0 => IDENTITY,
        1 => [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]],
        _ => [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
    };
    let zp: Coeff = apply(&perm, &z).map(|x| x * rotate_phase);
    let real_type = square(&z).norm() > 0.5 * n2;
    let finish = |m: Mat3, orbit: Orbit| {
        let g = GroupElement { spatial: m, internal: Internal::Phase(crate::symmetry::reduce_angle(phase)) };
        BifurcationRoot { z, orbit, canonical_map: g, residual: res }
    };
    if real_type {
        let x = zp.map(|c| c.re);
        let nx = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let r = rotation_to_e1([x[0] / nx, x[1] / nx, x[2] / nx]);
        return Ok(finish(matmul(&r, &perm), Orbit::O1RealType));
    }
    let scale_tol = 1e-12 * n2.sqrt();
    // First rotation: make the second slot purely imaginary.
    let degenerate = zp[1].norm() <= scale_tol
        || zp[2].norm() <= scale_tol
        || zp[1].im.abs() <= scale_tol
        || zp[2].im.abs() <= scale_tol;
    let m1 = if degenerate && zp[1].re.abs() <= scale_tol {
        IDENTITY
    } else if degenerate && zp[2].re.abs() <= scale_tol {
        transpose(&rotation(2, 3, std::f64::consts::FRAC_PI_2).unwrap())
    } else {
        let alpha = (-zp[1].re).atan2(zp[2].re);
        transpose(&rotation(2, 3, alpha).unwrap())
    };
    let z1 = apply(&m1, &zp);
    // Second rotation: clear the third slot.
    let m2 = if z1[2].re.abs() >= z1[2].im.abs() {
        let theta = (-z1[2].re).atan2(z1[0].re);
        transpose(&rotation(1, 3, theta).unwrap())
    } else {
        let theta = z1[2].im.atan2(z1[1].im);
        transpose(&rotation(2, 3, theta).unwrap())
    };
    let z2 = apply(&m2, &z1);
    let m3 = if z2[1].im < 0.0 { rotation(2, 3, std::f64::consts::PI).unwrap() } else { IDENTITY };
    let total = matmul(&m3, &matmul(&m2, &matmul(&m1, &perm)));
    Ok(finish(total, Orbit::O2ComplexType))
}

/// Check that `canonical_map` sends `z` to the representative of its orbit within `tol`.
pub fn canonical_error(root: &BifurcationRoot, i: f64) -> f64 {
    let target = match root.orbit {
        Orbit::O1RealType => representative_o1(i),
        Orbit::O2ComplexType => representative_o2(i),
        Orbit::Zero => [C64::new(0.0, 0.0); 3],
    };
    let w = act_on_coeff(&root.canonical_map, root.z);
    (0..3).map(|k| (w[k] - target[k]).norm()).fold(0.0, f64::max)
}

/// Which invariant subspace a continuation runs on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchSign {
    /// `V₁ = span_ℝ{v₁}`, coefficient `a₊`.
    Plus,
    /// `V₂ = span_ℝ{v₂}`, coefficient `a₋`.
    Minus,
}

impl BranchSign {
    /// Derivative of the scalar reduced map at the bifurcation point.
    pub fn initial_jacobian(&self) -> f64 {
        match self {
            BranchSign::Plus => -2.0,
            BranchSign::Minus => -4.0,
        }
    }

    /// Base amplitude `c` with `v_j = c·φ̂` (`φ̂ = φ₁` or `φ* = φ₁ + iφ₂`).
    pub fn base_amplitude(&self, i: f64) -> f64 {
        match self {
            BranchSign::Plus => (1.0 / (3.0 * i)).sqrt(),
            BranchSign::Minus => (1.0 / (4.0 * i)).sqrt(),
        }
    }
}

/// The zero-order scalar map `a ↦ ⟨φ̂, N(0, v_j + aφ̂)⟩`.
pub fn reduced_map_zero_order(branch: BranchSign, i: f64, a: f64) -> f64 {
    let t = branch.base_amplitude(i) + a;
    match branch {
        BranchSign::Plus => t - 3.0 * i * t * t * t,
        BranchSign::Minus => 2.0 * t - 8.0 * i * t * t * t,
    }
}

/// One point `(ε, a(ε))` of a continued branch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub epsilon: f64,
    pub a: f64,
    pub iterations: usize,
}

/// Continuation settings for [`continue_branch`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContinuationConfig {
    pub step: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub min_step: f64,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        ContinuationConfig { step: 0.01, tol: 1e-12, max_iter: 40, min_step: 1e-5 }
    }
}

fn newton_scalar<F>(n_eval: &mut F, eps: f64, a0: f64, jac0: f64, cfg: &ContinuationConfig) -> Result<(f64, usize, f64)>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    let mut a = a0;
    let mut f = n_eval(eps, a)?;
    let mut jac = jac0;
    for it in 0..cfg.max_iter {
        if f.abs() <= cfg.tol {
            return Ok((a, it, jac));
        }
        let a_new = a - f / jac;
        let f_new = n_eval(eps, a_new)?;
        if !f_new.is_finite() {
            break;
        }
        if (a_new - a).abs() > 0.0 {
            let secant = (f_new - f) / (a_new - a);
            if secant.is_finite() && secant.abs() > 1e-3 * jac0.abs() {
                jac = secant;
            }
        }
        a = a_new;
        f = f_new;
    }
    if f.abs() <= cfg.tol {
        return Ok((a, cfg.max_iter, jac));
    }
    Err(Error::Convergence(format!("scalar Newton stalled at eps = {eps:.4} with |N| = {:.3e}", f.abs())))
}

/// Continue `N_j(ε, v_j + aφ̂) = 0` from `a = 0` at `ε = 0` up to `eps_target`.
///
/// `n_eval(ε, a)` returns `⟨φ̂, N(ε, v_j + aφ̂)⟩`. Quasi-Newton iterations start from the
/// bifurcation-point derivative; the step halves whenever an iteration fails.
pub fn continue_branch<F>(branch: BranchSign, eps_target: f64, mut n_eval: F, cfg: &ContinuationConfig) -> Result<Vec<BranchPoint>>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    if !(eps_target >= 0.0) {
        return Err(Error::Domain(format!("epsilon = {eps_target} must be nonnegative")));
    }
    let mut out = vec![BranchPoint { epsilon: 0.0, a: 0.0, iterations: 0 }];
    let (mut eps, mut a, mut jac) = (0.0, 0.0, branch.initial_jacobian());
    let mut step = cfg.step;
    let mut slope = 0.0;
    while eps < eps_target - 1e-14 {
        let next = (eps + step).min(eps_target);
        let guess = a + slope * (next - eps);
        match newton_scalar(&mut n_eval, next, guess, jac, cfg) {
            Ok((a_new, iters, j)) => {
                slope = (a_new - a) / (next - eps);
                eps = next;
                a = a_new;
                jac = j;
                out.push(BranchPoint { epsilon: eps, a, iterations: iters });
                step = cfg.step;
            }
            Err(e) => {
                step *= 0.5;
                if step < cfg.min_step {
                    return Err(Error::Convergence(format!("continuation failed at eps = {next:.5}: {e}")));
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn representatives_solve_the_system() {
        for root in solve_zero_order(1.0).unwrap() {
            assert!(root.residual <= 1e-12);
        }
        assert!(solve_zero_order(0.0).is_err());
    }

    #[test]
    fn zero_order_jacobians() {
        for b in [BranchSign::Plus, BranchSign::Minus] {
            let d = 1e-6;
            let j = (reduced_map_zero_order(b, 0.7, d) - reduced_map_zero_order(b, 0.7, -d)) / (2.0 * d);
            assert!((j - b.initial_jacobian()).abs() < 1e-8);
            assert!(reduced_map_zero_order(b, 0.7, 0.0).abs() < 1e-14);
        }
    }

    #[test]
    fn representatives_canonicalize_to_identity() {
        for z in [representative_o1(2.0), representative_o2(2.0)] {
            let r = classify_root(z, 2.0, DEFAULT_TOL).unwrap();
            assert!(crate::symmetry::max_abs_diff(&r.canonical_map.spatial, &IDENTITY) < 1e-12);
            assert!(canonical_error(&r, 2.0) < 1e-12);
        }
    }

    #[test]
    fn not_a_root() {
        let z = [C64::new(1.0, 0.0); 3];
        match classify_root(z, 1.0, DEFAULT_TOL) {
            Err(Error::NotARoot { residual }) => assert!(residual > 1.0),
            other => panic!("{other:?}"),
        }
    }
}
