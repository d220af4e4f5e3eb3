//! Symmetric tridiagonal eigenvalues by Sturm bisection and banded solves.

use super::scalar::Scalar;

/// Number of eigenvalues of the symmetric tridiagonal matrix `(d, e)` strictly below `x`.
pub fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = d[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..d.len() {
        let qq = if q == 0.0 { f64::EPSILON * (e[i - 1].abs() + 1.0) } else { q };
        q = d[i] - x - e[i - 1] * e[i - 1] / qq;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Gershgorin bounds of the spectrum.
pub fn gershgorin(d: &[f64], e: &[f64]) -> (f64, f64) {
    let n = d.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let mut r = 0.0;
        if i > 0 {
            r += e[i - 1].abs();
        }
        if i + 1 < n {
            r += e[i].abs();
        }
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    (lo, hi)
}

/// The `k`-th smallest eigenvalue (0-based) by bisection to near machine precision.
pub fn kth_eigenvalue(d: &[f64], e: &[f64], k: usize) -> f64 {
    let (mut lo, mut hi) = gershgorin(d, e);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(d, e, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// All eigenvalues strictly below `upper`, ascending.
pub fn eigenvalues_below(d: &[f64], e: &[f64], upper: f64) -> Vec<f64> {
    let m = sturm_count(d, e, upper);
    (0..m).map(|k| kth_eigenvalue(d, e, k)).collect()
}

/// Solve the tridiagonal system with sub-diagonal `a`, diagonal `b`, super-diagonal `c`.
pub fn thomas<T: Scalar>(a: &[T], b: &[T], c: &[T], rhs: &[T]) -> Vec<T> {
    let n = b.len();
    let mut cp = vec![T::zero(); n];
    let mut dp = vec![T::zero(); n];
    let mut denom = b[0];
    cp[0] = if n > 1 { c[0] / denom } else { T::zero() };
    dp[0] = rhs[0] / denom;
    for i in 1..n {
        denom = b[i] - a[i - 1] * cp[i - 1];
        if i + 1 < n {
            cp[i] = c[i] / denom;
        }
        dp[i] = (rhs[i] - a[i - 1] * dp[i - 1]) / denom;
    }
    let mut x = vec![T::zero(); n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

/// Eigenvector of the symmetric tridiagonal matrix for an accurate eigenvalue `lambda`,
/// normalized to unit Euclidean norm with a positive first nonzero lobe.
pub fn eigenvector(d: &[f64], e: &[f64], lambda: f64) -> Vec<f64> {
    let n = d.len();
    let scale = d.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let shift = lambda + 1e3 * f64::EPSILON * scale;
    let b: Vec<f64> = d.iter().map(|v| v - shift).collect();
    let mut x = vec![1.0; n];
    for i in 0..n {
        x[i] = 1.0 + 0.01 * ((i * 7919 % 113) as f64 / 113.0);
    }
    for _ in 0..4 {
        x = thomas(e, &b, e, &x);
        let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in x.iter_mut() {
            *v /= nx;
        }
    }
    let lead = x.iter().find(|v| v.abs() > 1e-8).copied().unwrap_or(1.0);
    if lead < 0.0 {
        for v in x.iter_mut() {
            *v = -*v;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discrete_laplacian_eigenvalues_are_exact() {
        let n = 50;
        let d = vec![2.0; n];
        let e = vec![-1.0; n - 1];
        for k in 0..5 {
            let exact = 2.0 - 2.0 * (std::f64::consts::PI * (k + 1) as f64 / (n + 1) as f64).cos();
            assert!((kth_eigenvalue(&d, &e, k) - exact).abs() < 1e-13);
        }
        let v = eigenvector(&d, &e, kth_eigenvalue(&d, &e, 0));
        let s = (std::f64::consts::PI / (n + 1) as f64).sin();
        let norm: f64 = (1..=n).map(|j| (j as f64 * std::f64::consts::PI / (n + 1) as f64).sin().powi(2)).sum::<f64>().sqrt();
        assert!((v[0] - s / norm).abs() < 1e-10);
    }

    #[test]
    fn thomas_solves_diagonally_dominant_system() {
        let a = vec![1.0, -0.5, 0.25];
        let b = vec![4.0, 5.0, 6.0, 7.0];
        let c = vec![0.5, 1.0, -1.0];
        let x = vec![1.0, -2.0, 3.0, 0.5];
        let rhs = vec![
            b[0] * x[0] + c[0] * x[1],
            a[0] * x[0] + b[1] * x[1] + c[1] * x[2],
            a[1] * x[1] + b[2] * x[2] + c[2] * x[3],
            a[2] * x[2] + b[3] * x[3],
        ];
        let y = thomas(&a, &b, &c, &rhs);
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-13);
        }
    }
}
