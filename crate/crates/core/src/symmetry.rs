//! The symmetry group `G = O(3) ⊕ O(2)`: rotations, Euler-type parametrizations and the
//! actions on coefficient vectors `z ∈ ℂ³` and on sampled fields.
//!
//! Two coefficient actions are provided. [`act_on_coeff`] multiplies `z` by the spatial
//! matrix and then applies the internal map. The field action `(g*f)(x) = g₂ f(g₁ x)` sends
//! `z·φ` to `(g₂(g₁ᵀ z))·φ`; [`act_on_v`] implements that induced action on the degenerate
//! eigenspace and is the one used for fixed-subspace checks.

use crate::error::{Error, Result};
use crate::sph::{AngularGrid, SphField};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub type Mat3 = [[f64; 3]; 3];

pub const IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Internal `O(2)` part acting on `ℂ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Internal {
    /// `w ↦ e^{ir} w`.
    Phase(f64),
    /// `w ↦ e^{ir} conj(w)`.
    ConjThenPhase(f64),
}

impl Internal {
    pub fn apply(&self, w: C64) -> C64 {
        match *self {
            Internal::Phase(r) => C64::from_polar(1.0, r) * w,
            Internal::ConjThenPhase(r) => C64::from_polar(1.0, r) * w.conj(),
        }
    }

    fn reduced(self) -> Self {
        match self {
            Internal::Phase(r) => Internal::Phase(reduce_angle(r)),
            Internal::ConjThenPhase(r) => Internal::ConjThenPhase(reduce_angle(r)),
        }
    }

    /// The map `self ∘ other`.
    pub fn compose(&self, other: &Internal) -> Internal {
        use Internal::*;
        match (*self, *other) {
            (Phase(a), Phase(b)) => Phase(a + b),
            (Phase(a), ConjThenPhase(b)) => ConjThenPhase(a + b),
            (ConjThenPhase(a), Phase(b)) => ConjThenPhase(a - b),
            (ConjThenPhase(a), ConjThenPhase(b)) => Phase(a - b),
        }
        .reduced()
    }

    pub fn inverse(&self) -> Internal {
        match *self {
            Internal::Phase(r) => Internal::Phase(-r),
            Internal::ConjThenPhase(r) => Internal::ConjThenPhase(r),
        }
        .reduced()
    }
}

/// Reduce an angle to `[0, 2π)`.
pub fn reduce_angle(r: f64) -> f64 {
    let x = r.rem_euclid(2.0 * PI);
    if x >= 2.0 * PI {
        0.0
    } else {
        x
    }
}

/// Element `g = (g₁, g₂)` of `G`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub spatial: Mat3,
    pub internal: Internal,
}

impl GroupElement {
    /// Validated constructor: `spatial` must be orthogonal to `1e-12`.
    pub fn new(spatial: Mat3, internal: Internal) -> Result<Self> {
        let p = matmul(&transpose(&spatial), &spatial);
        let dev = max_abs_diff(&p, &IDENTITY);
        if dev > 1e-12 {
            return Err(Error::Domain(format!("spatial part is not orthogonal (deviation {dev:.2e})")));
        }
        Ok(GroupElement { spatial, internal: internal.reduced() })
    }

    pub fn identity() -> Self {
        GroupElement { spatial: IDENTITY, internal: Internal::Phase(0.0) }
    }

    pub fn spatial(m: Mat3) -> Self {
        GroupElement { spatial: m, internal: Internal::Phase(0.0) }
    }

    pub fn phase(r: f64) -> Self {
        GroupElement { spatial: IDENTITY, internal: Internal::Phase(reduce_angle(r)) }
    }

    pub fn conj() -> Self {
        GroupElement { spatial: IDENTITY, internal: Internal::ConjThenPhase(0.0) }
    }

    /// Product `self · other` with `act_on_coeff(self·other, z) = act_on_coeff(self, act_on_coeff(other, z))`.
    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        GroupElement { spatial: matmul(&self.spatial, &other.spatial), internal: self.internal.compose(&other.internal) }
    }

    pub fn inverse(&self) -> GroupElement {
        GroupElement { spatial: transpose(&self.spatial), internal: self.internal.inverse() }
    }
}

pub fn matmul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

pub fn transpose(a: &Mat3) -> Mat3 {
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = a[j][i];
        }
    }
    t
}

pub fn mat_vec(a: &Mat3, x: [f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| a[i][0] * x[0] + a[i][1] * x[1] + a[i][2] * x[2])
}

pub fn det(a: &Mat3) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

pub fn max_abs_diff(a: &Mat3, b: &Mat3) -> f64 {
    let mut m = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            m = m.max((a[i][j] - b[i][j]).abs());
        }
    }
    m
}

/// Rotation `R_jk(α)` in the `x_j x_k` plane (1-based axes, `j < k`).
pub fn rotation(j: usize, k: usize, alpha: f64) -> Result<Mat3> {
    let (c, s) = (alpha.cos(), alpha.sin());
    match (j, k) {
        (1, 2) => Ok([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]),
        (1, 3) => Ok([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]]),
        (2, 3) => Ok([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]]),
        _ => Err(Error::Domain(format!("invalid rotation plane ({j},{k})"))),
    }
}

fn rot(j: usize, k: usize, a: f64) -> Mat3 {
    rotation(j, k, a).expect("valid plane")
}

/// Parametrization conventions built from the plane rotations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationAngles {
    /// `Γ(δ, α, σ) = R₁₂(δ) R₁₃(α) R₂₃(σ)`.
    Gamma { delta: f64, alpha: f64, sigma: f64 },
    /// `Γ₀(α, δ) = R₁₂(α) R₁₃(δ)`.
    Gamma0 { alpha: f64, delta: f64 },
    /// `Γ₁(α, δ) = R₁₃(α) R₂₃(δ)`.
    Gamma1 { alpha: f64, delta: f64 },
}

/// Unit axis `n` with `d/dα R_{jk}(α) x = n × x` at `α = 0`.
pub fn plane_axis(j: usize, k: usize) -> Result<[f64; 3]> {
    let p = rotation(j, k, std::f64::consts::FRAC_PI_2)?;
    let m = rotation(j, k, -std::f64::consts::FRAC_PI_2)?;
    let g = |a: usize, b: usize| 0.5 * (p[a][b] - m[a][b]);
    Ok([g(2, 1), g(0, 2), g(1, 0)])
}

pub fn compose_gamma(conv: RotationAngles) -> Result<Mat3> {
    let check = |x: f64| {
        if x.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain("non-finite rotation angle".into()))
        }
    };
    Ok(match conv {
        RotationAngles::Gamma { delta, alpha, sigma } => {
            check(delta)?;
            check(alpha)?;
            check(sigma)?;
            matmul(&matmul(&rot(1, 2, delta), &rot(1, 3, alpha)), &rot(2, 3, sigma))
        }
        RotationAngles::Gamma0 { alpha, delta } => {
            check(alpha)?;
            check(delta)?;
            matmul(&rot(1, 2, alpha), &rot(1, 3, delta))
        }
        RotationAngles::Gamma1 { alpha, delta } => {
            check(alpha)?;
            check(delta)?;
            matmul(&rot(1, 3, alpha), &rot(2, 3, delta))
        }
    })
}

/// Angles `(δ, α, σ) ∈ [0, 2π)³` with `Γ(δ, α, σ) = a` for `a ∈ SO(3)`; the branch with
/// `cos α ≥ 0` is returned.
pub fn gamma_angles(a: &Mat3) -> Result<(f64, f64, f64)> {
    if (det(a) - 1.0).abs() > 1e-10 || max_abs_diff(&matmul(&transpose(a), a), &IDENTITY) > 1e-10 {
        return Err(Error::Domain("matrix is not a rotation".into()));
    }
    let ca = (a[0][0] * a[0][0] + a[1][0] * a[1][0]).sqrt();
    let alpha = (-a[2][0]).atan2(ca);
    let (delta, sigma) = if ca > 1e-8 {
        (a[1][0].atan2(a[0][0]), a[2][1].atan2(a[2][2]))
    } else {
        ((-a[0][1]).atan2(a[1][1]), 0.0)
    };
    Ok((reduce_angle(delta), reduce_angle(alpha), reduce_angle(sigma)))
}

/// `z' = g₂(g₁ z)` componentwise.
pub fn act_on_coeff(g: &GroupElement, z: [C64; 3]) -> [C64; 3] {
    let m = &g.spatial;
    [0, 1, 2].map(|i| g.internal.apply(z[0] * m[i][0] + z[1] * m[i][1] + z[2] * m[i][2]))
}

/// Action induced on `V` by the field action: `g * (z·φ) = (g₂(g₁ᵀ z))·φ`.
pub fn act_on_v(g: &GroupElement, z: [C64; 3]) -> [C64; 3] {
    let m = &g.spatial;
    [0, 1, 2].map(|i| g.internal.apply(z[0] * m[0][i] + z[1] * m[1][i] + z[2] * m[2][i]))
}

/// Complex field sampled on the cube `[-L, L]³` with `n` nodes per axis including both faces.
#[derive(Clone, Debug, PartialEq)]
pub struct CubeField {
    pub n: usize,
    pub half_width: f64,
    /// `data[(i n + j) n + k]` is the value at `(x_i, x_j, x_k)`.
    pub data: Vec<C64>,
}

impl CubeField {
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.n - 1) as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    /// Sample `f` at every node.
    pub fn sample<F: Fn([f64; 3]) -> C64>(n: usize, half_width: f64, f: F) -> Self {
        let mut out = CubeField { n, half_width, data: Vec::with_capacity(n * n * n) };
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let x = [out.coord(i), out.coord(j), out.coord(k)];
                    out.data.push(f(x));
                }
            }
        }
        out
    }

    /// Trilinear interpolation; points outside the cube give 0.
    pub fn interpolate(&self, x: [f64; 3]) -> C64 {
        let h = self.spacing();
        let mut idx = [0usize; 3];
        let mut frac = [0.0; 3];
        for d in 0..3 {
            let t = (x[d] + self.half_width) / h;
            if !(t >= -1e-12 && t <= (self.n - 1) as f64 + 1e-12) {
                return C64::new(0.0, 0.0);
            }
            let t = t.clamp(0.0, (self.n - 1) as f64);
            let i = (t.floor() as usize).min(self.n - 2);
            idx[d] = i;
            frac[d] = t - i as f64;
        }
        let n = self.n;
        let mut s = C64::new(0.0, 0.0);
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    let w = (if a == 1 { frac[0] } else { 1.0 - frac[0] })
                        * (if b == 1 { frac[1] } else { 1.0 - frac[1] })
                        * (if c == 1 { frac[2] } else { 1.0 - frac[2] });
                    if w != 0.0 {
                        s += self.data[((idx[0] + a) * n + idx[1] + b) * n + idx[2] + c] * w;
                    }
                }
            }
        }
        s
    }
}

/// `(g*ψ)(x) = g₂ ψ(g₁ x)` on the sampling cube (trilinear interpolation, zero fill).
pub fn act_on_field(g: &GroupElement, psi: &CubeField) -> CubeField {
    let mut out = psi.clone();
    if g.spatial == IDENTITY {
        for v in out.data.iter_mut() {
            *v = g.internal.apply(*v);
        }
        return out;
    }
    let n = psi.n;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let x = [psi.coord(i), psi.coord(j), psi.coord(k)];
                let y = mat_vec(&g.spatial, x);
                out.data[(i * n + j) * n + k] = g.internal.apply(psi.interpolate(y));
            }
        }
    }
    out
}

/// The same action on a spherical-channel field (exact rotation of each `ℓ` block).
pub fn act_on_sph(g: &GroupElement, psi: &SphField, ang: &AngularGrid) -> SphField {
    let rotated = if g.spatial == IDENTITY { psi.clone() } else { psi.rotate(ang, &g.spatial) };
    match g.internal {
        Internal::Phase(r) => {
            let mut out = rotated;
            out.scale(C64::from_polar(1.0, r));
            out
        }
        Internal::ConjThenPhase(r) => {
            let mut out = rotated.conj_field();
            out.scale(C64::from_polar(1.0, r));
            out
        }
    }
}

/// `true` iff `g * (v·φ) = v·φ` for every generator, within `1e-12`.
pub fn fixed_subspace_check(generators: &[GroupElement], v: [C64; 3]) -> bool {
    generators.iter().all(|g| {
        let w = act_on_v(g, v);
        (0..3).all(|i| (w[i] - v[i]).norm() <= 1e-12 * (1.0 + v[i].norm()))
    })
}

/// `g(α) = (R₁₂(α), e^{-iα})`.
pub fn co_rotation(alpha: f64) -> GroupElement {
    GroupElement { spatial: rot(1, 2, alpha), internal: Internal::Phase(reduce_angle(-alpha)) }
}

/// Generators of the subgroup fixing `span_ℝ{φ₁}`: `ι₀`, conjugation, and the `O(2)` acting on
/// `(x₂, x₃)` (sampled at 8 angles, plus one reflection).
pub fn generators_g1() -> Vec<GroupElement> {
    let mut g = vec![
        GroupElement { spatial: [[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], internal: Internal::Phase(PI) },
        GroupElement::conj(),
        GroupElement::spatial([[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]]),
    ];
    for k in 0..8 {
        g.push(GroupElement::spatial(rot(2, 3, 2.0 * PI * k as f64 / 8.0)));
    }
    g
}

/// Generators of the subgroup fixing `span_ℝ{φ₁ + iφ₂}`: `ι₁`, `ι₂` and `g(α)` at 8 angles.
pub fn generators_g2() -> Vec<GroupElement> {
    let mut g = vec![
        GroupElement { spatial: [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]], internal: Internal::ConjThenPhase(0.0) },
        GroupElement::spatial([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]]),
    ];
    for k in 0..8 {
        g.push(co_rotation(2.0 * PI * k as f64 / 8.0));
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_rotations() {
        assert_eq!(rotation(1, 2, 0.0).unwrap(), IDENTITY);
        let r = rotation(2, 3, PI / 2.0).unwrap();
        let y = mat_vec(&r, [0.0, 1.0, 0.0]);
        assert!((y[0]).abs() < 1e-15 && y[1].abs() < 1e-15 && (y[2] - 1.0).abs() < 1e-15);
        assert!(rotation(2, 1, 0.3).is_err());
        let a = 0.83;
        let p = matmul(&rotation(1, 3, a).unwrap(), &rotation(1, 3, -a).unwrap());
        assert!(max_abs_diff(&p, &IDENTITY) < 1e-15);
    }

    #[test]
    fn gamma0_generators_match_finite_differences() {
        let d = 1e-6;
        let g = |a, b| compose_gamma(RotationAngles::Gamma0 { alpha: a, delta: b }).unwrap();
        let (p, m) = (g(d, 0.0), g(-d, 0.0));
        let (p3, m3) = (g(0.0, d), g(0.0, -d));
        let e2 = [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]];
        let e3 = [[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!(((p[i][j] - m[i][j]) / (2.0 * d) - e2[i][j]).abs() < 1e-9);
                assert!(((p3[i][j] - m3[i][j]) / (2.0 * d) - e3[i][j]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn coefficient_action_examples() {
        let z = [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0)];
        assert_eq!(act_on_coeff(&GroupElement::identity(), z), z);
        let w = act_on_coeff(&GroupElement::conj(), z);
        assert_eq!(w[1], C64::new(0.0, -1.0));
        let g = GroupElement::spatial(rotation(2, 3, PI / 2.0).unwrap());
        let w = act_on_coeff(&g, [C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        assert!((w[2] - 1.0).norm() < 1e-15 && w[1].norm() < 1e-15);
    }

    #[test]
    fn fixed_subspaces() {
        let c = C64::new(0.7, 0.0);
        let zero = C64::new(0.0, 0.0);
        assert!(fixed_subspace_check(&generators_g1(), [c, zero, zero]));
        assert!(!fixed_subspace_check(&generators_g1(), [C64::new(0.0, 0.7), zero, zero]));
        assert!(fixed_subspace_check(&generators_g2(), [c, c * C64::i(), zero]));
        assert!(!fixed_subspace_check(&generators_g2(), [C64::new(1.0, 0.0), zero, zero]));
    }

    #[test]
    fn gimbal_lock_angles() {
        let a = compose_gamma(RotationAngles::Gamma { delta: 0.4, alpha: PI / 2.0, sigma: 0.0 }).unwrap();
        let (d, al, s) = gamma_angles(&a).unwrap();
        let b = compose_gamma(RotationAngles::Gamma { delta: d, alpha: al, sigma: s }).unwrap();
        assert!(max_abs_diff(&a, &b) < 1e-10);
    }
}
