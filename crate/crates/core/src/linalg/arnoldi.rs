//! Shift-invert Arnoldi iteration in complex arithmetic.
//!
//! The Krylov space of `(A - σ)⁻¹` is built with twice-iterated modified Gram–Schmidt,
//! the small Hessenberg matrix is reduced with a complex Schur decomposition, and each
//! selected Ritz pair is polished by shifted inverse iteration.

use super::dense::{Lu, Mat};
use super::scalar::{dot, norm};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, Schur};
use num_complex::Complex64 as C64;

/// Converged eigenpair of the original (non-inverted) operator.
#[derive(Clone, Debug)]
pub struct EigenPair {
    pub value: C64,
    pub vector: Vec<C64>,
    pub residual: f64,
}

/// Ritz values of `(A - σ)⁻¹` mapped back to eigenvalue estimates of `A`, nearest to `σ` first.
pub fn ritz_values<S>(solve: &mut S, sigma: C64, start: &[C64], m: usize) -> Result<(Vec<C64>, Vec<Vec<C64>>)>
where
    S: FnMut(&[C64]) -> Vec<C64>,
{
    let n = start.len();
    let m = m.min(n).max(1);
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(m + 1);
    let nrm = norm(start);
    if nrm == 0.0 {
        return Err(Error::Domain("zero starting vector".into()));
    }
    basis.push(start.iter().map(|v| v / nrm).collect());
    let mut hess = DMatrix::<C64>::zeros(m, m);
    let mut dim = m;
    for j in 0..m {
        let mut w = solve(&basis[j]);
        for _ in 0..2 {
            for (i, b) in basis.iter().enumerate() {
                let c = dot(b, &w);
                hess[(i, j)] += c;
                for (wk, bk) in w.iter_mut().zip(b) {
                    *wk -= c * bk;
                }
            }
        }
        let hn = norm(&w);
        if j + 1 < m {
            if hn < 1e-13 * hess[(j, j)].norm().max(1e-300) {
                dim = j + 1;
                break;
            }
            hess[(j + 1, j)] = C64::new(hn, 0.0);
            basis.push(w.iter().map(|v| v / hn).collect());
        }
    }
    let h = hess.view((0, 0), (dim, dim)).into_owned();
    let schur = Schur::try_new(h.clone(), 1e-15, 10_000)
        .ok_or_else(|| Error::Convergence("Schur decomposition of the Hessenberg matrix".into()))?;
    let thetas = schur
        .eigenvalues()
        .ok_or_else(|| Error::Convergence("complex Schur form not triangular".into()))?;
    let mut out: Vec<(C64, Vec<C64>)> = Vec::new();
    let mut hm = Mat::<C64>::zeros(dim);
    for t in thetas.iter() {
        if t.norm() < 1e-300 {
            continue;
        }
        for i in 0..dim {
            for k in 0..dim {
                hm.set(i, k, h[(i, k)]);
            }
        }
        let perturb = C64::new(1e-12 * t.norm(), 0.0);
        for i in 0..dim {
            hm.add_to(i, i, -(*t + perturb));
        }
        let lu = Lu::new(&hm);
        let mut y = vec![C64::new(1.0, 0.0); dim];
        for _ in 0..3 {
            lu.solve_in_place(&mut y);
            let ny = norm(&y);
            for v in y.iter_mut() {
                *v /= ny;
            }
        }
        let mut x = vec![C64::new(0.0, 0.0); n];
        for (k, b) in basis.iter().take(dim).enumerate() {
            for (xi, bi) in x.iter_mut().zip(b) {
                *xi += y[k] * bi;
            }
        }
        out.push((sigma + 1.0 / t, x));
    }
    out.sort_by(|a, b| (a.0 - sigma).norm().partial_cmp(&(b.0 - sigma).norm()).unwrap());
    Ok(out.into_iter().unzip())
}

/// Polish an approximate eigenpair of `A` by inverse iteration with the fixed shift used by
/// `solve`, returning the Rayleigh-type estimate `σ + x*y / x*x` with `y = (A-σ)⁻¹x`.
pub fn polish<S, M>(solve: &mut S, matvec: &M, sigma: C64, x0: &[C64], steps: usize) -> EigenPair
where
    S: FnMut(&[C64]) -> Vec<C64>,
    M: Fn(&[C64]) -> Vec<C64>,
{
    let mut x: Vec<C64> = x0.to_vec();
    let nx = norm(&x);
    for v in x.iter_mut() {
        *v /= nx;
    }
    let mut value = sigma;
    for _ in 0..steps.max(1) {
        let y = solve(&x);
        let theta = dot(&x, &y);
        value = sigma + 1.0 / theta;
        let ny = norm(&y);
        x = y.iter().map(|v| v / ny).collect();
    }
    let ax = matvec(&x);
    let rq = dot(&x, &ax);
    let res: Vec<C64> = ax.iter().zip(&x).map(|(a, b)| a - rq * b).collect();
    let residual_rq = norm(&res);
    let res_v: Vec<C64> = ax.iter().zip(&x).map(|(a, b)| a - value * b).collect();
    let residual_v = norm(&res_v);
    if residual_rq < residual_v {
        EigenPair { value: rq, vector: x, residual: residual_rq }
    } else {
        EigenPair { value, vector: x, residual: residual_v }
    }
}

/// Eigenpairs of `A` nearest to `sigma`: Arnoldi on `(A-σ)⁻¹` followed by polishing.
pub fn nearest_eigenpairs<S, M>(
    solve: &mut S,
    matvec: &M,
    sigma: C64,
    start: &[C64],
    nev: usize,
    krylov_dim: usize,
) -> Result<Vec<EigenPair>>
where
    S: FnMut(&[C64]) -> Vec<C64>,
    M: Fn(&[C64]) -> Vec<C64>,
{
    let (vals, vecs) = ritz_values(solve, sigma, start, krylov_dim)?;
    let mut out = Vec::new();
    for (_, v) in vals.iter().zip(vecs).take(nev) {
        out.push(polish(solve, matvec, sigma, &v, 3));
    }
    Ok(out)
}
