//! Symmetry action `T_r` of the modulation parameters and the frame map `𝐔_r`.
//!
//! `T_r` multiplies by a phase and rotates space about the two axes whose infinitesimal
//! generators are the kernel modes, normalized so that `∂_{r_j} T_r Q |_{r=0} = Φ_{0j}`.
//! `𝐔_r = Σ_j (P_c(𝐇_r) - P_c(𝐇₀))^j` with `P_c(𝐇_r) = T_r P_c(𝐇₀) T_r⁻¹`.

use crate::bound_states::Branch;
use crate::error::{Error, Result};
use crate::linearized::{Pair, SpectralDecomposition};
use crate::sph::{AngularGrid, SphField};
use crate::symmetry::{matmul, rotation, transpose, Mat3};
use num_complex::Complex64 as C64;

/// Phase and rotation action of `r ∈ ℝ³` in the class frame of one branch.
#[derive(Clone, Debug)]
pub struct SymmetryFrame {
    pub branch: Branch,
    angular: AngularGrid,
    frame: Mat3,
    planes: [(usize, usize); 2],
    phase_sign: f64,
}

impl SymmetryFrame {
    pub fn new(branch: Branch, angular: &AngularGrid) -> Self {
        let (planes, phase_sign) = match branch {
            Branch::QtildeE => ([(1, 3), (2, 3)], -1.0),
            Branch::QE => ([(1, 2), (1, 3)], 1.0),
        };
        SymmetryFrame { branch, angular: angular.clone(), frame: branch.frame(), planes, phase_sign }
    }

    /// Spatial part `R(r)`, acting as `f ↦ f(R x)`.
    pub fn spatial(&self, r: [f64; 3]) -> Mat3 {
        let a = rotation(self.planes[0].0, self.planes[0].1, r[1]).expect("valid plane");
        let b = rotation(self.planes[1].0, self.planes[1].1, r[2]).expect("valid plane");
        matmul(&self.frame, &matmul(&matmul(&a, &b), &transpose(&self.frame)))
    }

    fn apply(&self, r: [f64; 3], f: &SphField, inverse: bool, conj_phase: bool) -> SphField {
        let rot = self.spatial(r);
        let rot = if inverse { transpose(&rot) } else { rot };
        let mut out = if r[1] == 0.0 && r[2] == 0.0 { f.clone() } else { f.rotate(&self.angular, &rot).embed(&f.channels) };
        let mut theta = self.phase_sign * r[0];
        if inverse {
            theta = -theta;
        }
        if conj_phase {
            theta = -theta;
        }
        out.scale(C64::from_polar(1.0, theta));
        out
    }

    /// `T_r ψ` for a complex field.
    pub fn act(&self, r: [f64; 3], f: &SphField) -> SphField {
        self.apply(r, f, false, false)
    }

    /// `T_r` on a complexified pair (`U ↦ e^{iθ}U∘R`, `V ↦ e^{-iθ}V∘R`).
    pub fn act_pair(&self, r: [f64; 3], f: &Pair) -> Pair {
        Pair { u: self.apply(r, &f.u, false, false), v: self.apply(r, &f.v, false, true) }
    }

    /// `T_r⁻¹` on a complexified pair.
    pub fn act_pair_inverse(&self, r: [f64; 3], f: &Pair) -> Pair {
        Pair { u: self.apply(r, &f.u, true, false), v: self.apply(r, &f.v, true, true) }
    }
}

/// Relative size of the last kept term of the frame-map series.
pub const FRAME_TOL: f64 = 1e-10;
const FRAME_MAX_TERMS: usize = 60;

/// `D_r = P_c(𝐇_r) - P_c(𝐇₀)` and the series `𝐔_r = Σ D_r^j` at fixed `r`.
#[derive(Clone, Copy, Debug)]
pub struct FrameMap<'a> {
    pub dec: &'a SpectralDecomposition,
    pub frame: &'a SymmetryFrame,
    pub r: [f64; 3],
}

impl FrameMap<'_> {
    /// `P_c(𝐇_r) f`.
    pub fn project_rotated(&self, f: &Pair) -> Pair {
        let back = self.frame.act_pair_inverse(self.r, f);
        self.frame.act_pair(self.r, &self.dec.project_continuous(&back))
    }

    /// `D_r f`.
    pub fn difference(&self, f: &Pair) -> Pair {
        if self.r == [0.0; 3] {
            let mut z = f.clone();
            z.scale(C64::new(0.0, 0.0));
            return z;
        }
        self.project_rotated(f).sub(&self.dec.project_continuous(f))
    }

    /// `𝐔_r f`, truncated once a term falls below [`FRAME_TOL`] relative to `‖f‖`; returns the
    /// number of terms kept.
    pub fn apply(&self, f: &Pair) -> Result<(Pair, usize)> {
        let scale = f.norm();
        let mut out = f.clone();
        if scale == 0.0 {
            return Ok((out, 1));
        }
        let mut term = f.clone();
        let mut last = scale;
        for j in 1..FRAME_MAX_TERMS {
            term = self.difference(&term);
            let n = term.norm();
            if n <= FRAME_TOL * scale {
                return Ok((out, j));
            }
            if n >= last {
                return Err(Error::Frame(format!("series term {j} has norm {:.3e}, not below the previous {:.3e}", n / scale, last / scale)));
            }
            out.axpy(C64::new(1.0, 0.0), &term);
            last = n;
        }
        Err(Error::Frame(format!("series did not reach {FRAME_TOL:.0e} within {FRAME_MAX_TERMS} terms")))
    }

    /// `𝐔_r⁻¹ f = (I - D_r) f`.
    pub fn apply_inverse(&self, f: &Pair) -> Pair {
        f.sub(&self.difference(f))
    }
}
