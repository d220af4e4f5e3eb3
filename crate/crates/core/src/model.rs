//! Discretized linear problem shared by the nonlinear and linearized solvers: the radial grid,
//! the cell-averaged potential, the two linear levels `e₀`, `e₁` with their discrete
//! eigenvectors, and the angular quadrature for the channel representation.

use crate::error::{Error, Result};
use crate::linalg::tridiag;
use crate::potential::RadialPotential;
use crate::radial::{build_phi3d, default_grid, overlap_i, sector_diagonal, solve_radial, RadialGrid, RadialProfile};
use crate::sph::{AngularGrid, ChannelSet, SphField};
use num_complex::Complex64 as C64;
use std::f64::consts::FRAC_1_SQRT_2;

/// Default angular cutoff of the channel representation.
pub const DEFAULT_LMAX: usize = 5;

/// Linear data and discretization shared by all branch computations.
#[derive(Clone, Debug)]
pub struct Model {
    pub potential: RadialPotential,
    pub grid: RadialGrid,
    pub v_cell: Vec<f64>,
    pub lmax: usize,
    pub angular: AngularGrid,
    /// Discrete ground level and its reduced radial eigenvector (`h Σ u² = 1`).
    pub e0: f64,
    pub u0: Vec<f64>,
    /// Discrete `ℓ = 1` level and its reduced radial eigenvector.
    pub e1: f64,
    pub u1: Vec<f64>,
    pub profile: RadialProfile,
    /// Overlap constant `I` evaluated with the discrete node sum.
    pub overlap: f64,
}

impl Model {
    pub fn new(potential: RadialPotential, lmax: usize) -> Result<Self> {
        let grid = default_grid(&potential)?;
        Model::with_grid(potential, grid, lmax)
    }

    pub fn with_grid(potential: RadialPotential, grid: RadialGrid, lmax: usize) -> Result<Self> {
        let v_cell = potential.cell_values(&grid);
        let s0 = solve_radial(&potential, 0, &grid)?;
        let s1 = solve_radial(&potential, 1, &grid)?;
        if s0.len() != 1 || s1.len() != 1 {
            return Err(Error::Precondition(format!(
                "expected one l=0 and one l=1 level on the grid, found {} and {}",
                s0.len(),
                s1.len()
            )));
        }
        let profile = build_phi3d(&s1[0])?;
        let overlap = overlap_i(&profile)?.i;
        Ok(Model {
            potential,
            grid,
            v_cell,
            lmax,
            angular: AngularGrid::new(lmax),
            e0: s0[0].energy,
            u0: s0[0].u.clone(),
            e1: s1[0].energy,
            u1: profile.u.clone(),
            profile,
            overlap,
        })
    }

    pub fn h(&self) -> f64 {
        self.grid.spacing
    }

    pub fn n(&self) -> usize {
        self.grid.n_inner()
    }

    /// Diagonal of the radial operator of sector `l`.
    pub fn diagonal(&self, l: usize) -> Vec<f64> {
        sector_diagonal(&self.v_cell, &self.grid, l)
    }

    pub fn offdiag(&self) -> f64 {
        -1.0 / (self.h() * self.h())
    }

    /// `H₀ f` channel by channel.
    pub fn apply_h0(&self, f: &SphField) -> SphField {
        let mut out = SphField::zeros(f.grid, f.channels.clone());
        let n = self.n();
        let nc = f.nc();
        let off = self.offdiag();
        for (c, &(l, _)) in f.channels.channels.iter().enumerate() {
            let d = self.diagonal(l);
            for i in 0..n {
                let mut s = f.data[i * nc + c] * d[i];
                if i > 0 {
                    s += f.data[(i - 1) * nc + c] * off;
                }
                if i + 1 < n {
                    s += f.data[(i + 1) * nc + c] * off;
                }
                out.data[i * nc + c] = s;
            }
        }
        out
    }

    /// `⟨u, f_c⟩` for a real radial vector `u` and channel `c`.
    pub fn radial_overlap(&self, u: &[f64], f: &SphField, c: usize) -> C64 {
        let nc = f.nc();
        let s: C64 = (0..self.n()).map(|i| f.data[i * nc + c] * u[i]).sum();
        s * self.h()
    }

    /// Remove the components along `φ₀` and the three `φ_j`.
    pub fn project_continuous(&self, f: &mut SphField) {
        self.project_out(f, 0);
        self.project_out(f, 1);
    }

    /// `P₁^⊥ f`: remove the components along the three `φ_j`.
    pub fn project_p1_perp(&self, f: &mut SphField) {
        self.project_out(f, 1);
    }

    fn project_out(&self, f: &mut SphField, l: usize) {
        let u = if l == 0 { &self.u0 } else { &self.u1 };
        let nc = f.nc();
        for c in 0..nc {
            if f.channels.channels[c].0 != l {
                continue;
            }
            let a = self.radial_overlap(u, f, c);
            for i in 0..self.n() {
                f.data[i * nc + c] -= a * u[i];
            }
        }
    }

    /// `(H₀ − e₁)⁻¹ P₁^⊥ f`, with the `ℓ = 1` kernel deflated: the singular sector is solved with
    /// a small shift and iterative refinement, re-projecting after each pass.
    pub fn reduced_resolvent_e1(&self, f: &SphField) -> Result<SphField> {
        let mut rhs = f.clone();
        self.project_p1_perp(&mut rhs);
        let n = self.n();
        let nc = rhs.nc();
        let off = vec![C64::new(self.offdiag(), 0.0); n - 1];
        let mut out = SphField::zeros(rhs.grid, rhs.channels.clone());
        let shift = 1e-3 * self.e1.abs();
        for (c, &(l, _)) in rhs.channels.channels.iter().enumerate() {
            let b = rhs.channel(c);
            let x = if l == 1 {
                let d: Vec<C64> = self.diagonal(1).iter().map(|v| C64::new(v - self.e1 + shift, 0.0)).collect();
                let mut x = vec![C64::new(0.0, 0.0); n];
                for _ in 0..12 {
                    let r: Vec<C64> = b.iter().zip(&x).map(|(bi, xi)| bi + xi * shift).collect();
                    let mut y = tridiag::thomas(&off, &d, &off, &r);
                    let a: C64 = y.iter().zip(&self.u1).map(|(yi, ui)| yi * ui).sum::<C64>() * self.h();
                    for (yi, ui) in y.iter_mut().zip(&self.u1) {
                        *yi -= a * ui;
                    }
                    let change: f64 = y.iter().zip(&x).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt();
                    let size: f64 = y.iter().map(|p| p.norm_sqr()).sum::<f64>().sqrt();
                    x = y;
                    if change <= 1e-15 * size.max(1e-300) {
                        break;
                    }
                }
                x
            } else {
                let d: Vec<C64> = self.diagonal(l).iter().map(|v| C64::new(v - self.e1, 0.0)).collect();
                tridiag::thomas(&off, &d, &off, &b)
            };
            for i in 0..n {
                out.data[i * nc + c] = x[i];
            }
        }
        Ok(out)
    }

    /// The three lab-frame eigenfunctions `φ₁, φ₂, φ₃` on the full channel set.
    pub fn phi_lab(&self, j: usize) -> SphField {
        let full = ChannelSet::full(self.lmax);
        let mut f = SphField::zeros(self.grid, full.clone());
        let s = FRAC_1_SQRT_2;
        let coeffs: Vec<((usize, i32), C64)> = match j {
            1 => vec![((1, -1), C64::new(s, 0.0)), ((1, 1), C64::new(-s, 0.0))],
            2 => vec![((1, -1), C64::new(0.0, s)), ((1, 1), C64::new(0.0, s))],
            3 => vec![((1, 0), C64::new(1.0, 0.0))],
            _ => panic!("phi index must be 1, 2 or 3"),
        };
        for ((l, m), a) in coeffs {
            let c = full.index_of(l, m).unwrap();
            for i in 0..self.n() {
                f.set(i, c, a * self.u1[i]);
            }
        }
        f
    }

    /// `z·φ = Σ z_j φ_j` on the full channel set.
    pub fn v_field(&self, z: [C64; 3]) -> SphField {
        let mut f = SphField::zeros(self.grid, ChannelSet::full(self.lmax));
        for (j, zj) in z.iter().enumerate() {
            if zj.norm() > 0.0 {
                f.axpy(*zj, &self.phi_lab(j + 1));
            }
        }
        f
    }

    /// Lab-frame `φ₀` on the full channel set.
    pub fn phi0_lab(&self) -> SphField {
        let full = ChannelSet::full(self.lmax);
        let mut f = SphField::zeros(self.grid, full.clone());
        let c = full.index_of(0, 0).unwrap();
        for i in 0..self.n() {
            f.set(i, c, C64::new(self.u0[i], 0.0));
        }
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> Model {
        Model::new(RadialPotential::square_well(14.196631114398, 1.0).unwrap(), 3).unwrap()
    }

    #[test]
    fn phi_fields_are_orthonormal_and_match_x_j_phi() {
        let m = model();
        let f: Vec<SphField> = (1..=3).map(|j| m.phi_lab(j)).collect();
        for a in 0..3 {
            for b in 0..3 {
                let e = if a == b { 1.0 } else { 0.0 };
                assert!((f[a].inner(&f[b]) - e).norm() < 1e-12);
            }
        }
        let x: [f64; 3] = [0.3, -0.2, 0.5];
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        for j in 0..3 {
            let expect = x[j] * m.profile.eval(r);
            assert!((f[j].eval_at(x) - expect).norm() < 1e-6 * m.profile.phi_origin.abs());
        }
    }

    #[test]
    fn phi_fields_are_eigenfunctions() {
        let m = model();
        let f = m.phi_lab(2);
        let mut hf = m.apply_h0(&f);
        hf.axpy(C64::new(-m.e1, 0.0), &f);
        assert!(hf.norm() < 1e-9);
    }

    #[test]
    fn deflated_resolvent_inverts_on_the_complement() {
        let m = model();
        let mut g = m.phi_lab(1);
        for i in 0..m.n() {
            let r = m.grid.r(i);
            for c in 0..g.nc() {
                let v = g.at(i, c) + C64::new(r * (-r).exp(), 0.3 * r * r * (-r).exp());
                g.set(i, c, v);
            }
        }
        let x = m.reduced_resolvent_e1(&g).unwrap();
        let mut back = m.apply_h0(&x);
        back.axpy(C64::new(-m.e1, 0.0), &x);
        let mut target = g.clone();
        m.project_p1_perp(&mut target);
        back.axpy(C64::new(-1.0, 0.0), &target);
        assert!(back.norm() < 1e-9 * target.norm(), "{}", back.norm());
        let mut px = x.clone();
        m.project_p1_perp(&mut px);
        px.axpy(C64::new(-1.0, 0.0), &x);
        assert!(px.norm() < 1e-12 * x.norm());
    }
}
