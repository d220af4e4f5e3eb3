//! Orthonormal spherical harmonics with the Condon–Shortley phase.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let legendre = |z: f64| -> (f64, f64) {
        let (mut p0, mut p1) = (1.0, z);
        for k in 2..=n {
            let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
        (p1, dp)
    };
    for i in 0..n {
        let mut z = -(PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(z);
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// `y_ℓ^m(x)` with `Y_ℓ^m(θ, φ) = y_ℓ^m(cos θ) e^{imφ}` orthonormal on the unit sphere.
///
/// Negative orders follow `y_ℓ^{-m} = (-1)^m y_ℓ^m`, so that `Y_ℓ^{-m} = (-1)^m conj(Y_ℓ^m)`.
pub fn legendre_normalized(l: usize, m: i32, x: f64) -> f64 {
    let ma = m.unsigned_abs() as usize;
    if ma > l {
        return 0.0;
    }
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = (1.0 / (4.0 * PI)).sqrt();
    for k in 1..=ma {
        pmm *= -((2 * k + 1) as f64 / (2 * k) as f64).sqrt() * s;
    }
    let val = if l == ma {
        pmm
    } else {
        let mut p0 = pmm;
        let mut p1 = x * ((2 * ma + 3) as f64).sqrt() * pmm;
        for ll in (ma + 2)..=l {
            let lf = ll as f64;
            let mf = ma as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
            let p2 = a * (x * p1 - b * p0);
            p0 = p1;
            p1 = p2;
        }
        p1
    };
    if m < 0 && ma % 2 == 1 {
        -val
    } else {
        val
    }
}

/// `Y_ℓ^m` at the direction of `x` (any nonzero vector; the origin maps to the `z` axis).
pub fn ylm(l: usize, m: i32, x: [f64; 3]) -> C64 {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let c = if r > 0.0 { x[2] / r } else { 1.0 };
    let ph = x[1].atan2(x[0]);
    legendre_normalized(l, m, c) * C64::from_polar(1.0, m as f64 * ph)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(6);
        for k in 0..12 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn low_order_closed_forms() {
        let x = [0.3, -0.4, 0.5];
        let r = (0.5f64).sqrt();
        let y10 = ylm(1, 0, x);
        assert!((y10.re - (3.0 / (4.0 * PI)).sqrt() * 0.5 / r).abs() < 1e-14);
        let y11 = ylm(1, 1, x);
        let expect = -(3.0 / (8.0 * PI)).sqrt() * C64::new(0.3, -0.4) / r;
        assert!((y11 - expect).norm() < 1e-14);
        let y1m1 = ylm(1, -1, x);
        assert!((y1m1 + y11.conj()).norm() < 1e-14);
        let y22 = ylm(2, 2, x);
        let expect = (15.0 / (32.0 * PI)).sqrt() * C64::new(0.3, -0.4).powi(2) / (r * r);
        assert!((y22 - expect).norm() < 1e-14);
    }

    #[test]
    fn normalization_on_sphere() {
        let (x, w) = gauss_legendre(12);
        for l in 0..6 {
            for m in -(l as i32)..=(l as i32) {
                let s: f64 = x.iter().zip(&w).map(|(x, w)| w * legendre_normalized(l, m, *x).powi(2)).sum();
                assert!((2.0 * PI * s - 1.0).abs() < 1e-13, "l={l} m={m}");
            }
        }
    }
}
