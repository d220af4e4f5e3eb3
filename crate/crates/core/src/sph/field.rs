//! Channel sets and fields `ψ = Σ_c u_c(r) Y_c / r` on a radial grid.

use super::grid::AngularGrid;
use super::harmonics::ylm;
use crate::linalg::Mat;
use crate::radial::RadialGrid;
use num_complex::Complex64 as C64;

/// Ordered list of `(ℓ, m)` channels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChannelSet {
    pub channels: Vec<(usize, i32)>,
}

impl ChannelSet {
    pub fn new(channels: Vec<(usize, i32)>) -> Self {
        ChannelSet { channels }
    }

    /// All `(ℓ, m)` with `ℓ ≤ lmax`.
    pub fn full(lmax: usize) -> Self {
        ChannelSet::new((0..=lmax).flat_map(|l| (-(l as i32)..=l as i32).map(move |m| (l, m))).collect())
    }

    /// Channels of fixed order `m` with `|m| ≤ ℓ ≤ lmax` and `ℓ ≡ parity (mod 2)`.
    pub fn order(m: i32, lmax: usize, parity: usize) -> Self {
        let lo = m.unsigned_abs() as usize;
        ChannelSet::new((lo..=lmax).filter(|l| l % 2 == parity % 2).map(|l| (l, m)).collect())
    }

    /// Channels of fixed order `m` with `|m| ≤ ℓ ≤ lmax` whose harmonics have parity `z_parity`
    /// (`+1` even, `-1` odd) under `x₃ → -x₃`, i.e. `(-1)^{ℓ+m} = z_parity`.
    pub fn with_z_parity(m: i32, lmax: usize, z_parity: i32) -> Self {
        let odd_sum = usize::from(z_parity < 0);
        ChannelSet::order(m, lmax, (odd_sum + m.unsigned_abs() as usize) % 2)
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn index_of(&self, l: usize, m: i32) -> Option<usize> {
        self.channels.iter().position(|&c| c == (l, m))
    }

    pub fn lmax(&self) -> usize {
        self.channels.iter().map(|c| c.0).max().unwrap_or(0)
    }

    /// Channel set of the complex conjugate field: `(ℓ, m) → (ℓ, -m)`.
    pub fn conjugated(&self) -> Self {
        ChannelSet::new(self.channels.iter().map(|&(l, m)| (l, -m)).collect())
    }
}

/// Complex field in channel representation; `data[i * nc + c]` is `u_c(r_i)`.
#[derive(Clone, Debug)]
pub struct SphField {
    pub grid: RadialGrid,
    pub channels: ChannelSet,
    pub data: Vec<C64>,
}

impl SphField {
    pub fn zeros(grid: RadialGrid, channels: ChannelSet) -> Self {
        let n = grid.n_inner() * channels.len();
        SphField { grid, channels, data: vec![C64::new(0.0, 0.0); n] }
    }

    pub fn nc(&self) -> usize {
        self.channels.len()
    }

    #[inline]
    pub fn at(&self, i: usize, c: usize) -> C64 {
        self.data[i * self.nc() + c]
    }

    #[inline]
    pub fn set(&mut self, i: usize, c: usize, v: C64) {
        let nc = self.nc();
        self.data[i * nc + c] = v;
    }

    /// Reduced radial function of channel `c`.
    pub fn channel(&self, c: usize) -> Vec<C64> {
        (0..self.grid.n_inner()).map(|i| self.at(i, c)).collect()
    }

    /// Field with a single channel `(l, m)` carrying the reduced radial function `u`.
    pub fn single(grid: RadialGrid, l: usize, m: i32, u: &[f64]) -> Self {
        let mut f = SphField::zeros(grid, ChannelSet::new(vec![(l, m)]));
        for (i, x) in u.iter().enumerate() {
            f.data[i] = C64::new(*x, 0.0);
        }
        f
    }

    /// `⟨self, other⟩ = ∫ conj(self) other dx`; both fields must share a channel set.
    pub fn inner(&self, other: &SphField) -> C64 {
        assert_eq!(self.channels, other.channels, "inner product needs matching channel sets");
        let s: C64 = self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum();
        s * self.grid.spacing
    }

    pub fn norm(&self) -> f64 {
        (self.data.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.spacing).sqrt()
    }

    pub fn scale(&mut self, s: C64) {
        for a in &mut self.data {
            *a *= s;
        }
    }

    /// `self += s · other` (matching channel sets).
    pub fn axpy(&mut self, s: C64, other: &SphField) {
        assert_eq!(self.channels, other.channels);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    /// Copy onto `target`, dropping channels absent from it and zero-filling new ones.
    pub fn embed(&self, target: &ChannelSet) -> SphField {
        let mut out = SphField::zeros(self.grid, target.clone());
        for (c, &(l, m)) in self.channels.channels.iter().enumerate() {
            if let Some(t) = target.index_of(l, m) {
                for i in 0..self.grid.n_inner() {
                    out.set(i, t, self.at(i, c));
                }
            }
        }
        out
    }

    /// Complex conjugate field: `conj(Σ u Y_ℓ^m) = Σ (-1)^m conj(u) Y_ℓ^{-m}`.
    pub fn conj_field(&self) -> SphField {
        let mut out = SphField::zeros(self.grid, self.channels.conjugated());
        for (c, &(_, m)) in self.channels.channels.iter().enumerate() {
            let sign = if m.rem_euclid(2) == 1 { -1.0 } else { 1.0 };
            for i in 0..self.grid.n_inner() {
                out.set(i, c, self.at(i, c).conj() * sign);
            }
        }
        out
    }

    /// Values `ψ(r_i, x̂_q)` at every node of `ang`.
    pub fn node_values(&self, i: usize, ang: &AngularGrid, out: &mut [C64]) {
        let r = self.grid.r(i);
        let row = &self.data[i * self.nc()..(i + 1) * self.nc()];
        for (q, o) in out.iter_mut().enumerate() {
            let mut s = C64::new(0.0, 0.0);
            for (c, &(l, m)) in self.channels.channels.iter().enumerate() {
                s += row[c] * ang.y(q, l, m);
            }
            *o = s / r;
        }
    }

    /// Store `r_i ∫ conj(Y_c) f dΩ` for samples `f` at radial node `i`.
    pub fn set_from_node_values(&mut self, i: usize, ang: &AngularGrid, f: &[C64]) {
        let r = self.grid.r(i);
        let nc = self.nc();
        for c in 0..nc {
            let (l, m) = self.channels.channels[c];
            let mut s = C64::new(0.0, 0.0);
            for (q, v) in f.iter().enumerate() {
                s += ang.y(q, l, m).conj() * v * ang.weights[q];
            }
            self.data[i * nc + c] = s * r;
        }
    }

    /// Galerkin projection of `g(ψ)` onto the channel set `target`, where `g` acts pointwise.
    pub fn pointwise<F: Fn(C64) -> C64>(&self, ang: &AngularGrid, target: &ChannelSet, g: F) -> SphField {
        let mut out = SphField::zeros(self.grid, target.clone());
        let mut vals = vec![C64::new(0.0, 0.0); ang.n_nodes()];
        for i in 0..self.grid.n_inner() {
            self.node_values(i, ang, &mut vals);
            for v in vals.iter_mut() {
                *v = g(*v);
            }
            out.set_from_node_values(i, ang, &vals);
        }
        out
    }

    /// `ψ(x)` at an arbitrary point by cubic interpolation of `u_c / r` in `r`.
    pub fn eval_at(&self, x: [f64; 3]) -> C64 {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let h = self.grid.spacing;
        let n = self.grid.n_inner();
        let t = r / h;
        if t >= (n + 1) as f64 {
            return C64::new(0.0, 0.0);
        }
        let mut s = C64::new(0.0, 0.0);
        for (c, &(l, m)) in self.channels.channels.iter().enumerate() {
            let u = interp_reduced(|k| if k == 0 || k > n { C64::new(0.0, 0.0) } else { self.at(k - 1, c) }, t, n);
            if r == 0.0 {
                continue;
            }
            s += u / r * ylm(l, m, x);
        }
        if r == 0.0 {
            for (c, &(l, m)) in self.channels.channels.iter().enumerate() {
                if l == 0 {
                    let slope = (4.0 * self.at(0, c) - self.at(1, c)) / (2.0 * h);
                    s += slope * ylm(0, m, [0.0, 0.0, 1.0]);
                }
            }
        }
        s
    }

    /// `(n·L)ψ` with `L = -i x × ∇`, on the full channel set of the same `lmax`.
    pub fn angular_momentum(&self, n: [f64; 3]) -> SphField {
        let full = ChannelSet::full(self.channels.lmax());
        let mut out = SphField::zeros(self.grid, full.clone());
        let lp = C64::new(0.5 * n[0], -0.5 * n[1]);
        let lm = C64::new(0.5 * n[0], 0.5 * n[1]);
        let nc = full.len();
        for (c, &(l, m)) in self.channels.channels.iter().enumerate() {
            let lf = l as f64;
            let mf = m as f64;
            let mut targets = vec![(full.index_of(l, m).unwrap(), C64::new(n[2] * mf, 0.0))];
            if m < l as i32 {
                targets.push((full.index_of(l, m + 1).unwrap(), lp * (lf * (lf + 1.0) - mf * (mf + 1.0)).sqrt()));
            }
            if m > -(l as i32) {
                targets.push((full.index_of(l, m - 1).unwrap(), lm * (lf * (lf + 1.0) - mf * (mf - 1.0)).sqrt()));
            }
            for i in 0..self.grid.n_inner() {
                let a = self.at(i, c);
                for &(t, w) in &targets {
                    out.data[i * nc + t] += w * a;
                }
            }
        }
        out
    }

    /// `d/dα ψ(R(α)x)` at `α = 0` for rotations about the unit axis `n`, i.e. `i(n·L)ψ`.
    pub fn rotation_derivative(&self, n: [f64; 3]) -> SphField {
        let mut out = self.angular_momentum(n);
        out.scale(C64::new(0.0, 1.0));
        out
    }

    /// Apply `ψ → g*ψ` with `(g*ψ)(x) = ψ(R x)` for an orthogonal `R`. Each `ℓ` present must
    /// carry its full `m` range in the result, so the output uses [`ChannelSet::full`].
    pub fn rotate(&self, ang: &AngularGrid, rot: &[[f64; 3]; 3]) -> SphField {
        let lmax = self.channels.lmax();
        let full = ChannelSet::full(lmax);
        let src = self.embed(&full);
        let mut out = SphField::zeros(self.grid, full.clone());
        let nc = full.len();
        for l in 0..=lmax {
            let d: Mat<C64> = ang.rotation_block(l, rot);
            let base = l * l;
            let dim = 2 * l + 1;
            let mut x = vec![C64::new(0.0, 0.0); dim];
            let mut y = vec![C64::new(0.0, 0.0); dim];
            for i in 0..self.grid.n_inner() {
                x.copy_from_slice(&src.data[i * nc + base..i * nc + base + dim]);
                d.mul_vec(&x, &mut y);
                out.data[i * nc + base..i * nc + base + dim].copy_from_slice(&y);
            }
        }
        out
    }
}

/// Cubic Lagrange interpolation of nodal samples `f(k)`, `k = 0..=n+1`, at fractional index `t`.
pub fn interp_reduced<F: Fn(usize) -> C64>(f: F, t: f64, n: usize) -> C64 {
    let k = (t.floor() as isize).clamp(1, n as isize - 1) as usize;
    let s = t - k as f64;
    let (p0, p1, p2, p3) = (f(k - 1), f(k), f(k + 1), f((k + 2).min(n + 1)));
    p0 * (-s * (s - 1.0) * (s - 2.0) / 6.0) + p1 * ((s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0)
        - p2 * ((s + 1.0) * s * (s - 2.0) / 2.0)
        + p3 * ((s + 1.0) * s * (s - 1.0) / 6.0)
}
