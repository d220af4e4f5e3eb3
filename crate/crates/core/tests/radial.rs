mod common;

use nalgebra::{DMatrix, SymmetricEigen};
use nlsx::potential::RadialPotential;
use nlsx::radial::{build_phi3d, default_grid, overlap_i, solve_radial, RadialProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

const RESONANT_DEPTH: f64 = 14.196631114398;

fn fixture() -> (RadialPotential, RadialProfile, f64) {
    let v = RadialPotential::square_well(RESONANT_DEPTH, 1.0).unwrap();
    let grid = default_grid(&v).unwrap();
    let e0 = solve_radial(&v, 0, &grid).unwrap()[0].energy;
    let p = build_phi3d(&solve_radial(&v, 1, &grid).unwrap()[0]).unwrap();
    (v, p, e0)
}

fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                let (mut q0, mut q1) = (1.0, z);
                for k in 2..=n {
                    let q2 = ((2 * k - 1) as f64 * z * q1 - (k - 1) as f64 * q0) / k as f64;
                    q0 = q1;
                    q1 = q2;
                }
                let d = n as f64 * (z * q1 - q0) / (z * z - 1.0);
                x[i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * d * d);
                break;
            }
        }
    }
    (x, w)
}

/// Three-dimensional quadrature of `∫ f(x) dx` over the ball of radius `r_end`, split at the
/// well edge, with Gauss–Legendre in `r` and `cos θ` and the trapezoid rule in azimuth.
fn ball_quadrature<F: Fn([f64; 3]) -> f64>(f: F, a: f64, r_end: f64) -> f64 {
    let (gx, gw) = gauss_legendre(8);
    let (cx, cw) = gauss_legendre(12);
    let nphi = 24;
    let mut total = 0.0;
    for (lo, hi, panels) in [(0.0, a, 60usize), (a, r_end, 200usize)] {
        let hp = (hi - lo) / panels as f64;
        for p in 0..panels {
            for (x, w) in gx.iter().zip(&gw) {
                let r = lo + hp * (p as f64 + 0.5 + 0.5 * x);
                let wr = 0.5 * hp * w * r * r;
                for (c, wc) in cx.iter().zip(&cw) {
                    let s = (1.0 - c * c).sqrt();
                    for k in 0..nphi {
                        let ph = 2.0 * PI * k as f64 / nphi as f64;
                        let pt = [r * s * ph.cos(), r * s * ph.sin(), r * c];
                        total += wr * wc * (2.0 * PI / nphi as f64) * f(pt);
                    }
                }
            }
        }
    }
    total
}

#[test]
fn reconstructed_phi1_has_unit_norm_and_energy_e1() {
    let (v, p, _) = fixture();
    let phi1 = |x: [f64; 3]| x[0] * p.eval((x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt());
    let r_end = p.grid.r_max;
    let norm = ball_quadrature(|x| phi1(x).powi(2), 1.0, r_end);
    assert!((norm - 1.0).abs() < 1e-5, "norm {norm}");
    let d = 1e-5;
    let form = ball_quadrature(
        |x| {
            let mut g2 = 0.0;
            for k in 0..3 {
                let (mut xp, mut xm) = (x, x);
                xp[k] += d;
                xm[k] -= d;
                g2 += ((phi1(xp) - phi1(xm)) / (2.0 * d)).powi(2);
            }
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            g2 + v.eval(r).unwrap() * phi1(x).powi(2)
        },
        1.0,
        r_end,
    );
    assert!((form - p.energy).abs() < 1e-4 * p.energy.abs(), "form {form} vs e1 {}", p.energy);
}

#[test]
fn ground_state_is_orthogonal_to_the_degenerate_triple() {
    let v = RadialPotential::square_well(RESONANT_DEPTH, 1.0).unwrap();
    let grid = default_grid(&v).unwrap();
    let s0 = &solve_radial(&v, 0, &grid).unwrap()[0];
    let h = grid.spacing;
    let phi0 = |r: f64| {
        let k = ((r / h).round() as usize).clamp(1, grid.n_inner());
        s0.u[k - 1] / (k as f64 * h) / (4.0 * PI).sqrt()
    };
    let (_, p, _) = fixture();
    for j in 0..3 {
        let ip = ball_quadrature(
            |x| {
                let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                phi0(r) * x[j] * p.eval(r)
            },
            1.0,
            grid.r_max,
        );
        assert!(ip.abs() < 1e-12, "j={j}: {ip}");
    }
}

#[test]
fn overlap_constant_agrees_with_monte_carlo() {
    let (_, p, _) = fixture();
    let oc = overlap_i(&p).unwrap();
    assert!(oc.i > 0.0);
    let r_ball = 6.0f64;
    let vol = 4.0 / 3.0 * PI * r_ball.powi(3);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 1_000_000;
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let x = loop {
            let c: [f64; 3] = [rng.gen_range(-r_ball..r_ball), rng.gen_range(-r_ball..r_ball), rng.gen_range(-r_ball..r_ball)];
            if c[0] * c[0] + c[1] * c[1] + c[2] * c[2] < r_ball * r_ball {
                break c;
            }
        };
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let f = vol * (x[0] * x[1]).powi(2) * p.eval(r).powi(4);
        s += f;
        s2 += f * f;
    }
    let mean = s / n as f64;
    let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
    assert!((mean - oc.i).abs() < 3.0 * se, "MC {mean} ± {se} vs I {}", oc.i);
}

#[test]
fn coarse_cartesian_operator_has_a_threefold_level_near_e1() {
    let (v, p, e0) = fixture();
    let n = 13usize;
    let half = 3.5;
    let h = 2.0 * half / (n + 1) as f64;
    let idx = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
    let coord = |i: usize| -half + (i + 1) as f64 * h;
    let sub = 6;
    let mut m = DMatrix::<f64>::zeros(n * n * n, n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut vavg = 0.0;
                for a in 0..sub {
                    for b in 0..sub {
                        for c in 0..sub {
                            let off = |t: usize| (t as f64 + 0.5) / sub as f64 - 0.5;
                            let x = [coord(i) + h * off(a), coord(j) + h * off(b), coord(k) + h * off(c)];
                            vavg += v.eval((x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()).unwrap();
                        }
                    }
                }
                let row = idx(i, j, k);
                m[(row, row)] = 6.0 / (h * h) + vavg / (sub * sub * sub) as f64;
                let nb = [(i + 1, j, k), (i.wrapping_sub(1), j, k), (i, j + 1, k), (i, j.wrapping_sub(1), k), (i, j, k + 1), (i, j, k.wrapping_sub(1))];
                for (a, b, c) in nb {
                    if a < n && b < n && c < n {
                        m[(row, idx(a, b, c))] = -1.0 / (h * h);
                    }
                }
            }
        }
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert!((ev[1] - ev[2]).abs() < 1e-9 && (ev[2] - ev[3]).abs() < 1e-9, "{:?}", &ev[..5]);
    assert!(ev[4] - ev[3] > 0.5);
    assert!((ev[0] - e0).abs() < 0.25 * e0.abs());
    assert!((ev[1] - p.energy).abs() < 0.25 * p.energy.abs(), "{:?} vs {}", &ev[..4], p.energy);
}
