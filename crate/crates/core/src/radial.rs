//! Radial eigenproblems `-u'' + [ℓ(ℓ+1)/r² + V(r)] u = e u` per angular-momentum sector.
//!
//! Second-order central differences on a uniform grid `r_i = i h`, `i = 1..n_points-1`, with
//! Dirichlet conditions at `0` and `r_max`. Eigenvalues come from Sturm bisection of the
//! symmetric tridiagonal matrix and eigenvectors from inverse iteration.

use crate::error::{Error, Result};
use crate::linalg::tridiag;
use crate::potential::RadialPotential;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Default number of grid intervals.
pub const DEFAULT_POINTS: usize = 2048;

/// Uniform radial grid; unknowns live on the interior nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub r_max: f64,
    pub n_points: usize,
    pub spacing: f64,
}

impl RadialGrid {
    pub fn new(r_max: f64, n_points: usize) -> Result<Self> {
        if n_points < 64 {
            return Err(Error::Refinement { msg: format!("n_points = {n_points} below 64"), suggested_n: 64 });
        }
        if !(r_max > 0.0) {
            return Err(Error::Domain(format!("r_max = {r_max} must be positive")));
        }
        Ok(RadialGrid { r_max, n_points, spacing: r_max / n_points as f64 })
    }

    /// Grid with spacing `a / k` for the smallest integer `k` giving `r_max ≥ target`.
    pub fn aligned(target: f64, n_points: usize, a: f64) -> Result<Self> {
        let k = ((a * n_points as f64 / target).floor() as usize).max(1);
        let h = a / k as f64;
        RadialGrid::new(h * n_points as f64, n_points)
    }

    /// Number of interior unknowns.
    pub fn n_inner(&self) -> usize {
        self.n_points - 1
    }

    /// Radius of interior node `i` (0-based).
    #[inline]
    pub fn r(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.spacing
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_inner()).map(|i| self.r(i)).collect()
    }

    /// Same box with `factor` times as many intervals.
    pub fn refined(&self, factor: usize) -> Self {
        RadialGrid { r_max: self.r_max, n_points: self.n_points * factor, spacing: self.spacing / factor as f64 }
    }

    /// Same spacing on a box `factor` times as large.
    pub fn extended(&self, factor: usize) -> Self {
        RadialGrid { r_max: self.r_max * factor as f64, n_points: self.n_points * factor, spacing: self.spacing }
    }
}

/// Normalization attached to a radial eigenvector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormConvention {
    /// `h Σ u_i² = 1`.
    RadialUnit,
    /// The three-dimensional reconstruction has unit norm.
    Full3dUnit,
}

/// Radial eigenpair of one angular-momentum sector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub l: usize,
    pub energy: f64,
    /// Reduced radial function `u = r R(r)` at the interior nodes.
    pub u: Vec<f64>,
    pub grid: RadialGrid,
    pub norm_convention: NormConvention,
}

/// Diagonal of the sector matrix: `2/h² + ℓ(ℓ+1)/r² + V_i`.
pub fn sector_diagonal(v_cell: &[f64], grid: &RadialGrid, l: usize) -> Vec<f64> {
    let h2 = grid.spacing * grid.spacing;
    let ll = (l * (l + 1)) as f64;
    (0..grid.n_inner()).map(|i| 2.0 / h2 + ll / (grid.r(i) * grid.r(i)) + v_cell[i]).collect()
}

/// Apply the sector operator `-d²/dr² + ℓ(ℓ+1)/r² + V` to `u` (Dirichlet ends).
pub fn apply_sector(v_cell: &[f64], grid: &RadialGrid, l: usize, u: &[f64]) -> Vec<f64> {
    let d = sector_diagonal(v_cell, grid, l);
    let off = -1.0 / (grid.spacing * grid.spacing);
    let n = u.len();
    (0..n)
        .map(|i| {
            let mut s = d[i] * u[i];
            if i > 0 {
                s += off * u[i - 1];
            }
            if i + 1 < n {
                s += off * u[i + 1];
            }
            s
        })
        .collect()
}

fn check_resolution(v: &RadialPotential, grid: &RadialGrid) -> Result<()> {
    if v.depth == 0.0 {
        return Ok(());
    }
    let inside = v.radius / grid.spacing;
    if inside < 16.0 {
        let suggested = (16.0 * grid.r_max / v.radius).ceil() as usize;
        return Err(Error::Refinement { msg: format!("only {inside:.1} grid points inside the well radius"), suggested_n: suggested });
    }
    Ok(())
}

/// All negative-energy eigenpairs of sector `l`, ascending in energy.
pub fn solve_radial(v: &RadialPotential, l: usize, grid: &RadialGrid) -> Result<Vec<EigenPair>> {
    check_resolution(v, grid)?;
    let v_cell = v.cell_values(grid);
    let d = sector_diagonal(&v_cell, grid, l);
    let e = vec![-1.0 / (grid.spacing * grid.spacing); grid.n_inner() - 1];
    let energies = tridiag::eigenvalues_below(&d, &e, 0.0);
    let scale = grid.spacing.sqrt();
    Ok(energies
        .into_iter()
        .map(|en| {
            let mut u = tridiag::eigenvector(&d, &e, en);
            for x in u.iter_mut() {
                *x /= scale;
            }
            EigenPair { l, energy: en, u, grid: *grid, norm_convention: NormConvention::RadialUnit }
        })
        .collect())
}

/// Richardson-extrapolated bound-state energies from `grid` and its two-fold refinement.
pub fn richardson_energies(v: &RadialPotential, l: usize, grid: &RadialGrid) -> Result<Vec<f64>> {
    let coarse = solve_radial(v, l, grid)?;
    let fine = solve_radial(v, l, &grid.refined(2))?;
    Ok(coarse.iter().zip(&fine).map(|(c, f)| (4.0 * f.energy - c.energy) / 3.0).collect())
}

/// Observed convergence order from three successively doubled grids for level `k` of sector `l`.
pub fn observed_order(v: &RadialPotential, l: usize, grid: &RadialGrid, k: usize) -> Result<f64> {
    let e: Vec<f64> = [1usize, 2, 4]
        .iter()
        .map(|&f| solve_radial(v, l, &grid.refined(f)).map(|s| s.get(k).map(|p| p.energy).unwrap_or(f64::NAN)))
        .collect::<Result<_>>()?;
    Ok(((e[0] - e[1]) / (e[1] - e[2])).log2())
}

/// Grid for bound-state work: `r_max ≈ 16/√|e₁|`, `DEFAULT_POINTS` intervals, with the well
/// radius on a node.
pub fn default_grid(v: &RadialPotential) -> Result<RadialGrid> {
    grid_for_box(v, 16.0, DEFAULT_POINTS)
}

/// Grid with `r_max ≈ box_factor/√|e₁|` (clamped to `[4, 40]` support radii).
pub fn grid_for_box(v: &RadialPotential, box_factor: f64, n_points: usize) -> Result<RadialGrid> {
    let support = v.support();
    let pre = RadialGrid::aligned(10.0 * support, DEFAULT_POINTS, v.radius)?;
    let e1 = solve_radial(v, 1, &pre)?.first().map(|p| p.energy);
    let target = match e1 {
        Some(e) => (box_factor / e.abs().sqrt()).clamp(4.0 * support, 40.0 * support),
        None => 10.0 * support,
    };
    RadialGrid::aligned(target, n_points, v.radius)
}

fn counting_matrix(v: &RadialPotential, l: usize) -> (Vec<f64>, Vec<f64>, f64) {
    let support = v.support();
    let h = v.radius / 512.0;
    let n = ((1.25 * support / h).ceil() as usize).max(64);
    let grid = RadialGrid { r_max: n as f64 * h, n_points: n, spacing: h };
    let v_cell = v.cell_values(&grid);
    let mut d = sector_diagonal(&v_cell, &grid, l);
    let r_end = grid.r_max;
    let beta = -(l as f64) / r_end;
    let h2 = h * h;
    d.push((1.0 - h * beta) / h2 + 0.5 * (l * (l + 1)) as f64 / (r_end * r_end));
    let e = vec![-1.0 / h2; d.len() - 1];
    (d, e, h)
}

/// Number of bound states of sector `l` on the half line.
///
/// Beyond the support the zero-energy solution is `r^{-ℓ}` (a constant for `ℓ = 0`); matching
/// it at the box edge turns the count of negative eigenvalues of the truncated problem into
/// the exact count of bound states of the full problem.
pub fn bound_state_count(v: &RadialPotential, l: usize) -> Result<usize> {
    v.validate()?;
    if v.depth == 0.0 {
        return Ok(0);
    }
    let (d, e, _) = counting_matrix(v, l);
    Ok(tridiag::sturm_count(&d, &e, 0.0))
}

/// Heuristic zero-energy check: the regular `ℓ = 0` solution at energy zero is linear outside
/// the support; report whether its slope there is clearly nonzero (no zero-energy resonance).
pub fn zero_energy_grows_linearly(v: &RadialPotential) -> Result<bool> {
    if v.depth == 0.0 {
        return Ok(true);
    }
    let h = v.radius / 512.0;
    let support = v.support();
    let n = (1.25 * support / h).ceil() as usize;
    let grid = RadialGrid { r_max: n as f64 * h, n_points: n, spacing: h };
    let v_cell = v.cell_values(&grid);
    let (mut u_prev, mut u) = (0.0, h);
    let mut umax: f64 = h;
    for i in 0..grid.n_inner() {
        let u_next = 2.0 * u - u_prev + h * h * v_cell[i] * u;
        u_prev = u;
        u = u_next;
        umax = umax.max(u.abs());
    }
    let slope = (u - u_prev) / h;
    Ok(slope.abs() * support > 1e-3 * umax)
}

/// Profile `φ(r)` with `φ_j(x) = x_j φ(|x|)` of unit three-dimensional norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub grid: RadialGrid,
    pub energy: f64,
    /// `φ` at the interior nodes.
    pub phi: Vec<f64>,
    /// One-sided extrapolation of `φ` to the origin.
    pub phi_origin: f64,
    /// The reduced radial function `u` (`h Σ u² = 1`) the profile was built from.
    pub u: Vec<f64>,
}

/// `√(4π/3)`: ratio between `x_j/r` and the `ℓ = 1` spherical harmonics.
pub fn l1_factor() -> f64 {
    (4.0 * PI / 3.0).sqrt()
}

/// Build `φ(r) = u(r) / (r² √(4π/3))` from an `ℓ = 1` radial eigenpair.
pub fn build_phi3d(pair: &EigenPair) -> Result<RadialProfile> {
    if pair.l != 1 {
        return Err(Error::Domain(format!("profile needs an l = 1 pair, got l = {}", pair.l)));
    }
    let g = pair.grid;
    let norm2: f64 = pair.u.iter().map(|x| x * x).sum::<f64>() * g.spacing;
    let scale = 1.0 / norm2.sqrt();
    let u: Vec<f64> = pair.u.iter().map(|x| x * scale).collect();
    let c = l1_factor();
    let phi: Vec<f64> = (0..g.n_inner()).map(|i| u[i] / (g.r(i) * g.r(i) * c)).collect();
    let phi_origin = 3.0 * phi[0] - 3.0 * phi[1] + phi[2];
    if !phi_origin.is_finite() || phi.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("non-finite radial profile".into()));
    }
    Ok(RadialProfile { grid: g, energy: pair.energy, phi, phi_origin, u })
}

impl RadialProfile {
    /// `φ(r)` by cubic Lagrange interpolation on the grid (with the origin value included).
    pub fn eval(&self, r: f64) -> f64 {
        let h = self.grid.spacing;
        let n = self.phi.len();
        let x = r / h;
        if x >= n as f64 {
            return 0.0;
        }
        let at = |k: isize| -> f64 {
            if k <= 0 {
                self.phi_origin
            } else if k as usize > n {
                0.0
            } else {
                self.phi[k as usize - 1]
            }
        };
        let k = (x.floor() as isize).clamp(1, n as isize - 2);
        let t = x - k as f64;
        let (p0, p1, p2, p3) = (at(k - 1), at(k), at(k + 1), at(k + 2));
        -t * (t - 1.0) * (t - 2.0) / 6.0 * p0 + (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0 * p1
            - (t + 1.0) * t * (t - 2.0) / 2.0 * p2
            + (t + 1.0) * t * (t - 1.0) / 6.0 * p3
    }
}

/// The overlap constant `I = ∫ φ₁² φ₂² dx`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapConstant {
    pub i: f64,
    pub quadrature_error_estimate: f64,
}

/// `I = (4π/15) ∫ φ⁴ r⁶ dr`, using the node sum that the discrete nonlinearity also uses.
///
/// The error estimate is the difference to composite Simpson on the same nodes.
pub fn overlap_i(p: &RadialProfile) -> Result<OverlapConstant> {
    let g = p.grid;
    let h = g.spacing;
    let f: Vec<f64> = (0..g.n_inner()).map(|i| p.phi[i].powi(4) * g.r(i).powi(6)).collect();
    let rect: f64 = f.iter().sum::<f64>() * h;
    let mut full = vec![0.0];
    full.extend_from_slice(&f);
    full.push(0.0);
    if full.len() % 2 == 0 {
        full.push(0.0);
    }
    let m = full.len() - 1;
    let simpson: f64 = (0..=m)
        .map(|k| {
            let w = if k == 0 || k == m { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            w * full[k]
        })
        .sum::<f64>()
        * h
        / 3.0;
    let c = 4.0 * PI / 15.0;
    let i = c * rect;
    let err = c * (rect - simpson).abs();
    if !(i > 0.0) {
        return Err(Error::Domain("overlap constant is not positive".into()));
    }
    if err > 0.01 * i {
        return Err(Error::Refinement {
            msg: format!("overlap quadrature error {err:.3e} exceeds 1% of I = {i:.3e}"),
            suggested_n: 2 * g.n_points,
        });
    }
    Ok(OverlapConstant { i, quadrature_error_estimate: err })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_operator_has_no_bound_states() {
        let grid = RadialGrid::new(10.0, 512).unwrap();
        for l in 0..4 {
            assert!(solve_radial(&RadialPotential::zero(), l, &grid).unwrap().is_empty());
            assert_eq!(bound_state_count(&RadialPotential::zero(), l).unwrap(), 0);
        }
    }

    #[test]
    fn coarse_grid_is_rejected_with_suggestion() {
        let v = RadialPotential::square_well(15.0, 1.0).unwrap();
        match solve_radial(&v, 0, &RadialGrid::new(40.0, 256).unwrap()) {
            Err(Error::Refinement { suggested_n, .. }) => assert!(suggested_n >= 640),
            other => panic!("expected refinement error, got {other:?}"),
        }
    }

    #[test]
    fn profile_is_unit_normalized_and_positive() {
        let v = RadialPotential::square_well(15.0, 1.0).unwrap();
        let grid = default_grid(&v).unwrap();
        let p = build_phi3d(&solve_radial(&v, 1, &grid).unwrap()[0]).unwrap();
        let h = grid.spacing;
        let n3: f64 = (0..grid.n_inner()).map(|i| 4.0 * PI / 3.0 * p.phi[i].powi(2) * grid.r(i).powi(4)).sum::<f64>() * h;
        assert!((n3 - 1.0).abs() < 1e-12);
        assert!(p.phi_origin > 0.0);
        assert!((p.eval(grid.r(10)) - p.phi[10]).abs() < 1e-14);
    }

    #[test]
    fn overlap_scales_with_fourth_power() {
        let v = RadialPotential::square_well(15.0, 1.0).unwrap();
        let grid = default_grid(&v).unwrap();
        let p = build_phi3d(&solve_radial(&v, 1, &grid).unwrap()[0]).unwrap();
        let i1 = overlap_i(&p).unwrap().i;
        let mut q = p.clone();
        for x in q.phi.iter_mut() {
            *x *= 1.7;
        }
        let i2 = overlap_i(&q).unwrap().i;
        assert!((i2 / i1 - 1.7f64.powi(4)).abs() < 1e-12);
    }
}
