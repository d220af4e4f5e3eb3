//! Product quadrature on the unit sphere with tabulated harmonics.

use super::harmonics::{gauss_legendre, legendre_normalized, ylm};
use crate::linalg::Mat;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Gauss–Legendre in `cos θ` times the trapezoid rule in `φ`, with all `Y_ℓ^m` for
/// `ℓ ≤ lmax` tabulated at the nodes.
#[derive(Clone, Debug)]
pub struct AngularGrid {
    pub lmax: usize,
    pub n_theta: usize,
    pub n_phi: usize,
    /// Unit vectors of the nodes, `θ`-major.
    pub nodes: Vec<[f64; 3]>,
    /// Quadrature weights (summing to `4π`).
    pub weights: Vec<f64>,
    table: Vec<C64>,
}

/// Flat index of `(ℓ, m)` in a full table.
#[inline]
pub fn lm_index(l: usize, m: i32) -> usize {
    ((l * l + l) as isize + m as isize) as usize
}

impl AngularGrid {
    /// Grid exact for spherical polynomials of degree `4 lmax + 1`.
    pub fn new(lmax: usize) -> Self {
        let n_theta = 2 * lmax + 2;
        let n_phi = 4 * lmax + 2;
        let (ct, wt) = gauss_legendre(n_theta);
        let mut nodes = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for (c, w) in ct.iter().zip(&wt) {
            let s = (1.0 - c * c).sqrt();
            for k in 0..n_phi {
                let ph = 2.0 * PI * k as f64 / n_phi as f64;
                nodes.push([s * ph.cos(), s * ph.sin(), *c]);
                weights.push(w * 2.0 * PI / n_phi as f64);
            }
        }
        let nl = (lmax + 1) * (lmax + 1);
        let mut table = vec![C64::new(0.0, 0.0); nl * nodes.len()];
        for (t, c) in ct.iter().enumerate() {
            for l in 0..=lmax {
                for m in -(l as i32)..=(l as i32) {
                    let p = legendre_normalized(l, m, *c);
                    for k in 0..n_phi {
                        let ph = 2.0 * PI * k as f64 / n_phi as f64;
                        let q = t * n_phi + k;
                        table[q * nl + lm_index(l, m)] = p * C64::from_polar(1.0, m as f64 * ph);
                    }
                }
            }
        }
        AngularGrid { lmax, n_theta, n_phi, nodes, weights, table }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// `Y_ℓ^m` at node `q`.
    #[inline]
    pub fn y(&self, q: usize, l: usize, m: i32) -> C64 {
        let nl = (self.lmax + 1) * (self.lmax + 1);
        self.table[q * nl + lm_index(l, m)]
    }

    /// `∫ conj(Y_a) g Y_b dΩ` for channel lists `rows` and `cols` and node samples `g`.
    pub fn multiplier(&self, rows: &[(usize, i32)], cols: &[(usize, i32)], g: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); rows.len() * cols.len()];
        let mut gy = vec![C64::new(0.0, 0.0); cols.len()];
        for q in 0..self.n_nodes() {
            let wg = g[q] * self.weights[q];
            if wg == C64::new(0.0, 0.0) {
                continue;
            }
            for (j, &(l, m)) in cols.iter().enumerate() {
                gy[j] = wg * self.y(q, l, m);
            }
            for (i, &(l, m)) in rows.iter().enumerate() {
                let ya = self.y(q, l, m).conj();
                let row = &mut out[i * cols.len()..(i + 1) * cols.len()];
                for j in 0..cols.len() {
                    row[j] += ya * gy[j];
                }
            }
        }
        out
    }

    /// Matrix `D^ℓ` with `Σ_m c_m Y_ℓ^m(R x̂) = Σ_{m'} (D c)_{m'} Y_ℓ^{m'}(x̂)`,
    /// rows and columns indexed by `m + ℓ`.
    pub fn rotation_block(&self, l: usize, rot: &[[f64; 3]; 3]) -> Mat<C64> {
        assert!(l <= self.lmax, "rotation block beyond the tabulated degree");
        let d = 2 * l + 1;
        let mut out = Mat::zeros(d);
        for q in 0..self.n_nodes() {
            let x = self.nodes[q];
            let rx = [
                rot[0][0] * x[0] + rot[0][1] * x[1] + rot[0][2] * x[2],
                rot[1][0] * x[0] + rot[1][1] * x[1] + rot[1][2] * x[2],
                rot[2][0] * x[0] + rot[2][1] * x[1] + rot[2][2] * x[2],
            ];
            let w = self.weights[q];
            let yr: Vec<C64> = (0..d).map(|k| ylm(l, k as i32 - l as i32, rx)).collect();
            for mp in 0..d {
                let ya = self.y(q, l, mp as i32 - l as i32).conj() * w;
                for m in 0..d {
                    out.add_to(mp, m, ya * yr[m]);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonics_are_orthonormal_on_the_grid() {
        let g = AngularGrid::new(4);
        let chans: Vec<(usize, i32)> = (0..=4).flat_map(|l| (-(l as i32)..=l as i32).map(move |m| (l, m))).collect();
        let one = vec![C64::new(1.0, 0.0); g.n_nodes()];
        let m = g.multiplier(&chans, &chans, &one);
        let n = chans.len();
        for i in 0..n {
            for j in 0..n {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((m[i * n + j] - e).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn quartic_products_are_exact() {
        let g = AngularGrid::new(1);
        let s: f64 = (0..g.n_nodes()).map(|q| g.weights[q] * g.y(q, 1, 1).norm_sqr().powi(2)).sum();
        let exact = (3.0 / (8.0 * PI)).powi(2) * 2.0 * PI * 16.0 / 15.0;
        assert!((s - exact).abs() < 1e-14);
    }

    #[test]
    fn rotation_blocks_are_unitary_and_match_pointwise() {
        let g = AngularGrid::new(3);
        let (a, b) = (0.7f64, -1.1f64);
        let rz = [[a.cos(), -a.sin(), 0.0], [a.sin(), a.cos(), 0.0], [0.0, 0.0, 1.0]];
        let rx = [[1.0, 0.0, 0.0], [0.0, b.cos(), -b.sin()], [0.0, b.sin(), b.cos()]];
        let mut rot = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                rot[i][j] = (0..3).map(|k| rz[i][k] * rx[k][j]).sum();
            }
        }
        for l in 0..=3 {
            let d = g.rotation_block(l, &rot);
            let p = d.adjoint().matmul(&d);
            for i in 0..2 * l + 1 {
                for j in 0..2 * l + 1 {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((p.get(i, j) - e).norm() < 1e-12);
                }
            }
            let x = [0.2, 0.9, -0.4];
            let rxv = [0, 1, 2].map(|i| rot[i][0] * x[0] + rot[i][1] * x[1] + rot[i][2] * x[2]);
            for m in 0..2 * l + 1 {
                let lhs = ylm(l, m as i32 - l as i32, rxv);
                let rhs: C64 = (0..2 * l + 1).map(|mp| d.get(mp, m) * ylm(l, mp as i32 - l as i32, x)).sum();
                assert!((lhs - rhs).norm() < 1e-12);
            }
        }
    }
}
