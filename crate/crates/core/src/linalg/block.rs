//! Block-tridiagonal matrices: one dense block per radial node.

use super::dense::{Lu, Mat};
use super::scalar::Scalar;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};

/// Block-tridiagonal matrix with `n` node blocks of size `b`.
///
/// `lower[i]` couples node `i+1` to node `i`, `upper[i]` couples node `i` to node `i+1`.
#[derive(Clone, Debug)]
pub struct BlockTridiag<T> {
    pub n: usize,
    pub b: usize,
    pub diag: Vec<Mat<T>>,
    pub lower: Vec<Mat<T>>,
    pub upper: Vec<Mat<T>>,
}

impl<T: Scalar> BlockTridiag<T> {
    pub fn zeros(n: usize, b: usize) -> Self {
        BlockTridiag {
            n,
            b,
            diag: vec![Mat::zeros(b); n],
            lower: vec![Mat::zeros(b); n.saturating_sub(1)],
            upper: vec![Mat::zeros(b); n.saturating_sub(1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n * self.b
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let b = self.b;
        let mut y = vec![T::zero(); self.dim()];
        for i in 0..self.n {
            let yi = &mut y[i * b..(i + 1) * b];
            self.diag[i].mul_vec_add(&x[i * b..(i + 1) * b], yi);
            if i > 0 {
                self.lower[i - 1].mul_vec_add(&x[(i - 1) * b..i * b], yi);
            }
            if i + 1 < self.n {
                self.upper[i].mul_vec_add(&x[(i + 1) * b..(i + 2) * b], yi);
            }
        }
        y
    }

    /// Add `s` times the identity.
    pub fn shift(&mut self, s: T) {
        for d in self.diag.iter_mut() {
            for k in 0..self.b {
                d.add_to(k, k, s);
            }
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        BlockTridiag {
            n: self.n,
            b: self.b,
            diag: self.diag.iter().map(|m| m.adjoint()).collect(),
            lower: self.upper.iter().map(|m| m.adjoint()).collect(),
            upper: self.lower.iter().map(|m| m.adjoint()).collect(),
        }
    }

    /// Block LU factorization (block Thomas with pivoted dense node solves).
    pub fn factor(&self) -> Result<BlockLu<T>> {
        let n = self.n;
        let mut piv_lu: Vec<Lu<T>> = Vec::with_capacity(n);
        let mut schur = self.diag[0].clone();
        let mut min_pivot = f64::INFINITY;
        for i in 0..n {
            if i > 0 {
                let prev: &Lu<T> = &piv_lu[i - 1];
                let x = prev.solve_mat(&self.upper[i - 1]);
                let corr = self.lower[i - 1].matmul(&x);
                schur = self.diag[i].clone();
                schur.sub_assign(&corr);
            }
            let lu = Lu::new(&schur);
            min_pivot = min_pivot.min(lu.min_pivot);
            piv_lu.push(lu);
        }
        if !(min_pivot > 0.0) || !min_pivot.is_finite() {
            return Err(Error::Convergence("singular block-tridiagonal factorization".into()));
        }
        Ok(BlockLu { n, b: self.b, lus: piv_lu, lower: self.lower.clone(), upper: self.upper.clone() })
    }
}

/// Factorization produced by [`BlockTridiag::factor`].
#[derive(Clone, Debug)]
pub struct BlockLu<T> {
    n: usize,
    b: usize,
    lus: Vec<Lu<T>>,
    lower: Vec<Mat<T>>,
    upper: Vec<Mat<T>>,
}

impl<T: Scalar> BlockLu<T> {
    /// Solve `A x = r`.
    pub fn solve(&self, r: &[T]) -> Vec<T> {
        let (n, b) = (self.n, self.b);
        let mut y = r.to_vec();
        let mut tmp = vec![T::zero(); b];
        for i in 0..n {
            if i > 0 {
                let (head, tail) = y.split_at_mut(i * b);
                self.lower[i - 1].mul_vec(&head[(i - 1) * b..i * b], &mut tmp);
                for k in 0..b {
                    tail[k] -= tmp[k];
                }
            }
            self.lus[i].solve_in_place(&mut y[i * b..(i + 1) * b]);
        }
        for i in (0..n.saturating_sub(1)).rev() {
            let (head, tail) = y.split_at_mut((i + 1) * b);
            self.upper[i].mul_vec(&tail[..b], &mut tmp);
            self.lus[i].solve_in_place(&mut tmp);
            for k in 0..b {
                head[i * b + k] -= tmp[k];
            }
        }
        y
    }
}

impl BlockTridiag<f64> {
    /// Number of eigenvalues below `sigma` of a real symmetric block-tridiagonal matrix,
    /// from the inertia of the block LDLᵀ Schur complements.
    ///
    /// A nearly singular Schur complement makes the inertia ill-determined; the count is then
    /// repeated at slightly displaced shifts, which leaves it unchanged unless `sigma` is itself
    /// within the displacement of an eigenvalue.
    pub fn count_below(&self, sigma: f64) -> usize {
        let scale = 1.0 + sigma.abs();
        for attempt in 0..8 {
            let s = sigma + attempt as f64 * 1e-9 * scale * if attempt % 2 == 0 { 1.0 } else { -1.0 };
            if let Some(c) = self.try_count_below(s) {
                return c;
            }
        }
        self.try_count_below(sigma + 1e-7 * scale).unwrap_or(0)
    }

    fn try_count_below(&self, sigma: f64) -> Option<usize> {
        let b = self.b;
        let mut count = 0;
        let mut prev_inv: Option<DMatrix<f64>> = None;
        for i in 0..self.n {
            let mut s = DMatrix::from_row_slice(b, b, &self.diag[i].a);
            for k in 0..b {
                s[(k, k)] -= sigma;
            }
            if let Some(pinv) = &prev_inv {
                let l = DMatrix::from_row_slice(b, b, &self.lower[i - 1].a);
                let u = DMatrix::from_row_slice(b, b, &self.upper[i - 1].a);
                s -= &l * pinv * &u;
            }
            let sym = (&s + s.transpose()) * 0.5;
            let eig = SymmetricEigen::new(sym);
            let scale = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
            if eig.eigenvalues.iter().any(|v| v.abs() < 1e-10 * scale) {
                return None;
            }
            count += eig.eigenvalues.iter().filter(|&&v| v < 0.0).count();
            let inv_vals = eig.eigenvalues.map(|v| 1.0 / v);
            let q = &eig.eigenvectors;
            prev_inv = Some(q * DMatrix::from_diagonal(&inv_vals) * q.transpose());
        }
        Some(count)
    }

    /// The `k`-th smallest eigenvalue inside `[lo, hi]` by inertia bisection.
    pub fn kth_eigenvalue(&self, k: usize, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Promote to complex entries.
    pub fn to_complex(&self) -> BlockTridiag<num_complex::Complex64> {
        let conv = |m: &Mat<f64>| Mat { n: m.n, a: m.a.iter().map(|&v| num_complex::Complex64::new(v, 0.0)).collect() };
        BlockTridiag {
            n: self.n,
            b: self.b,
            diag: self.diag.iter().map(conv).collect(),
            lower: self.lower.iter().map(conv).collect(),
            upper: self.upper.iter().map(conv).collect(),
        }
    }
}
