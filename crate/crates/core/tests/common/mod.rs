//! Independent reference computations shared by the integration tests.

#![allow(dead_code)]

pub mod group;

/// Spherical Bessel function `j_ℓ(x)` for `ℓ ≤ 3` from the closed forms.
pub fn sph_j(l: usize, x: f64) -> f64 {
    let (s, c) = (x.sin(), x.cos());
    match l {
        0 => s / x,
        1 => s / (x * x) - c / x,
        2 => (3.0 / x.powi(3) - 1.0 / x) * s - 3.0 * c / (x * x),
        3 => (15.0 / x.powi(4) - 6.0 / (x * x)) * s - (15.0 / x.powi(3) - 1.0 / x) * c,
        _ => panic!("l > 3"),
    }
}

/// Decaying modified spherical Bessel function `e^{-x} p_ℓ(1/x)` for `ℓ ≤ 3` (unnormalized).
pub fn sph_k(l: usize, x: f64) -> f64 {
    let e = (-x).exp();
    match l {
        0 => e / x,
        1 => e * (1.0 / x + 1.0 / (x * x)),
        2 => e * (1.0 / x + 3.0 / (x * x) + 3.0 / x.powi(3)),
        3 => e * (1.0 / x + 6.0 / (x * x) + 15.0 / x.powi(3) + 15.0 / x.powi(4)),
        _ => panic!("l > 3"),
    }
}

fn dj(l: usize, x: f64) -> f64 {
    if l == 0 {
        -sph_j(1, x)
    } else {
        sph_j(l - 1, x) - (l as f64 + 1.0) / x * sph_j(l, x)
    }
}

fn dk(l: usize, x: f64) -> f64 {
    let prev = if l == 0 { sph_k(0, x) } else { sph_k(l - 1, x) };
    -prev - (l as f64 + 1.0) / x * sph_k(l, x)
}

/// Exact bound-state energies of the square well `-V₀ 1_{r<a}` in sector `ℓ ≤ 3`, from the
/// continuity of the logarithmic derivative at `r = a`. Every level lies above `-V₀ + (π/2a)²`,
/// so the scan starts at `-V₀ + 1/a²` where the closed forms are still well conditioned.
pub fn square_well_levels(v0: f64, a: f64, l: usize) -> Vec<f64> {
    let f = |e: f64| {
        let q = (v0 + e).sqrt();
        let k = (-e).sqrt();
        q * dj(l, q * a) * sph_k(l, k * a) - k * dk(l, k * a) * sph_j(l, q * a)
    };
    let n = 40_000;
    let mut out = Vec::new();
    let lo = -v0 + 1.0 / (a * a);
    let hi = -1e-12 * v0;
    let mut x0 = lo;
    let mut f0 = f(x0);
    for k in 1..=n {
        let x1 = lo + (hi - lo) * k as f64 / n as f64;
        let f1 = f(x1);
        if f0 * f1 < 0.0 {
            let (mut a0, mut a1, mut g0) = (x0, x1, f0);
            for _ in 0..200 {
                let m = 0.5 * (a0 + a1);
                let gm = f(m);
                if gm * g0 <= 0.0 {
                    a1 = m;
                } else {
                    a0 = m;
                    g0 = gm;
                }
            }
            out.push(0.5 * (a0 + a1));
        }
        x0 = x1;
        f0 = f1;
    }
    out
}

/// Numerov shooting for a general radial potential: bound energies of sector `ℓ` below zero,
/// integrating outward from the origin on a fine grid to `r_end` and counting sign changes of
/// `u(r_end)` as the energy crosses eigenvalues.
pub fn numerov_levels<F: Fn(f64) -> f64>(v: F, l: usize, r_end: f64, n: usize, e_min: f64) -> Vec<f64> {
    let h = r_end / n as f64;
    let ll = (l * (l + 1)) as f64;
    let shoot = |e: f64| -> f64 {
        let g = |r: f64| ll / (r * r) + v(r) - e;
        let mut u0 = 0.0f64;
        let mut u1 = h.powi(l as i32 + 1);
        let mut g0 = 0.0;
        let mut g1 = g(h);
        for i in 1..n {
            let r2 = (i + 1) as f64 * h;
            let g2 = g(r2);
            let u2 = (2.0 * u1 * (1.0 + 5.0 * h * h * g1 / 12.0) - u0 * (1.0 - h * h * g0 / 12.0)) / (1.0 - h * h * g2 / 12.0);
            u0 = u1;
            u1 = u2;
            g0 = g1;
            g1 = g2;
            if u1.abs() > 1e200 {
                u0 *= 1e-200;
                u1 *= 1e-200;
            }
        }
        u1
    };
    let m = 4000;
    let mut out = Vec::new();
    let mut x0 = e_min;
    let mut f0 = shoot(x0);
    for k in 1..=m {
        let x1 = e_min + (-1e-9 - e_min) * k as f64 / m as f64;
        let f1 = shoot(x1);
        if f0 * f1 < 0.0 {
            let (mut a0, mut a1, mut g0) = (x0, x1, f0);
            for _ in 0..100 {
                let mid = 0.5 * (a0 + a1);
                let gm = shoot(mid);
                if gm * g0 <= 0.0 {
                    a1 = mid;
                } else {
                    a0 = mid;
                    g0 = gm;
                }
            }
            out.push(0.5 * (a0 + a1));
        }
        x0 = x1;
        f0 = f1;
    }
    out
}

/// Unit-radius square-well depths whose excited level sits at `e₁ ≈ -2.604` (with `2e₁ - e₀`
/// in the continuum) and at `e₁ ≈ -6.995` (with `2e₁ - e₀` below it).
pub const RESONANT_DEPTH: f64 = 14.196631114398;
pub const NON_RESONANT_DEPTH: f64 = 19.797606243465;

pub fn model(depth: f64) -> nlsx::model::Model {
    let v = nlsx::potential::RadialPotential::square_well(depth, 1.0).unwrap();
    nlsx::model::Model::new(v, nlsx::model::DEFAULT_LMAX).unwrap()
}

/// Smooth random complex field on the full channel set: each channel carries
/// `c r^{ℓ+1} e^{-r²/s}` with random complex `c` and random width `s ∈ [0.5, 3]`.
pub fn random_field<R: rand::Rng>(model: &nlsx::model::Model, lmax: usize, rng: &mut R) -> nlsx::sph::SphField {
    use num_complex::Complex64 as C64;
    let chans = nlsx::sph::ChannelSet::full(lmax);
    let mut f = nlsx::sph::SphField::zeros(model.grid, chans.clone());
    for (c, &(l, _)) in chans.channels.iter().enumerate() {
        let amp = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let s: f64 = rng.gen_range(0.5..3.0);
        for i in 0..model.n() {
            let r = model.grid.r(i);
            f.set(i, c, amp * r.powi(l as i32 + 1) * (-r * r / s).exp());
        }
    }
    f
}

/// Random complexified pair `(a, b)` with independent smooth complex components.
pub fn random_pair<R: rand::Rng>(model: &nlsx::model::Model, lmax: usize, rng: &mut R) -> nlsx::linearized::Pair {
    let a = random_field(model, lmax, rng);
    let b = random_field(model, lmax, rng);
    nlsx::linearized::Pair::from_components(&a, &b, lmax)
}
