//! Crank–Nicolson evolution of the linearized flow `η_t = 𝓛η - Wη` sector by sector.
//!
//! In `(U, V)` coordinates `𝓛 = -iM`, and each sector of `M` is block tridiagonal. The step
//! `(I + ½dt(iM + W)) η⁺ = (I - ½dt(iM + W)) η` is prefactored once per sector. Without the
//! absorbing layer it preserves `𝒬 = ⟨Kη, η⟩` exactly, since `K = σ₃M` is Hermitian, and
//! running with `-dt` inverts it exactly.

use super::nls::{schedule, Sponge, ABSORPTION_WARNING};
use super::norms::pair_norm;
use super::record::{RecordSpec, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::linalg::{BlockLu, BlockTridiag, Mat};
use crate::linearized::{Boundary, LinearizedOperator, Pair, Sector, SpectralDecomposition};
use crate::model::Model;
use crate::sph::{ChannelSet, SphField};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Relative size of the discrete-mode content, between re-projections, above which the record
/// carries a contamination warning.
pub const LEAKAGE_WARNING: f64 = 1e-6;

/// State of the linearized flow: one node-major vector per sector.
pub type SectorState = Vec<Vec<C64>>;

/// Prefactored Crank–Nicolson propagator for one linearized operator.
#[derive(Clone, Debug)]
pub struct LinearPropagator {
    pub dt: f64,
    pub lmax: usize,
    pub sponge: Sponge,
    pub sectors: Vec<Sector>,
    m: Vec<BlockTridiag<C64>>,
    lhs: Vec<BlockLu<C64>>,
    rhs: Vec<BlockTridiag<C64>>,
    spacing: f64,
    w: Vec<f64>,
}

/// `s M + (1 + d_i) I` for a complex factor `s` and a node-dependent diagonal `d`.
fn affine(m: &BlockTridiag<C64>, s: C64, d: &[C64]) -> BlockTridiag<C64> {
    let scale = |x: &Mat<C64>| Mat { n: x.n, a: x.a.iter().map(|v| s * v).collect() };
    let mut out = BlockTridiag {
        n: m.n,
        b: m.b,
        diag: m.diag.iter().map(scale).collect(),
        lower: m.lower.iter().map(scale).collect(),
        upper: m.upper.iter().map(scale).collect(),
    };
    for (i, blk) in out.diag.iter_mut().enumerate() {
        for k in 0..m.b {
            blk.add_to(k, k, 1.0 + d[i]);
        }
    }
    out
}

impl LinearPropagator {
    pub fn new(model: &Model, op: &LinearizedOperator, dt: f64, sponge: Sponge) -> Result<Self> {
        if !dt.is_finite() || dt == 0.0 {
            return Err(Error::Domain(format!("time step {dt} must be finite and nonzero")));
        }
        if sponge.is_active() && dt < 0.0 {
            return Err(Error::Precondition("cannot run backwards with an absorbing layer".into()));
        }
        let w = sponge.profile(&model.grid);
        let half = 0.5 * dt;
        let plus: Vec<C64> = w.iter().map(|x| C64::new(half * x, 0.0)).collect();
        let minus: Vec<C64> = w.iter().map(|x| C64::new(-half * x, 0.0)).collect();
        let mut m = Vec::new();
        let mut lhs = Vec::new();
        let mut rhs = Vec::new();
        for s in &op.sectors {
            let ms = op.sector_matrix(model, s, Boundary::Dirichlet);
            lhs.push(affine(&ms, I * half, &plus).factor()?);
            rhs.push(affine(&ms, -I * half, &minus));
            m.push(ms);
        }
        Ok(LinearPropagator { dt, lmax: op.lmax, sponge, sectors: op.sectors.clone(), m, lhs, rhs, spacing: model.h(), w })
    }

    /// Sector vectors of a pair on the full channel set.
    pub fn scatter(&self, f: &Pair) -> SectorState {
        self.sectors.iter().map(|s| s.extract(f)).collect()
    }

    /// Pair assembled from sector vectors.
    pub fn gather(&self, model: &Model, xs: &SectorState) -> Pair {
        let mut f = Pair::zeros(model, self.lmax);
        let n = model.n();
        for (s, x) in self.sectors.iter().zip(xs) {
            let b = s.block();
            let nu = s.u.len();
            for (a, &(l, m)) in s.u.channels.iter().enumerate() {
                let c = f.u.channels.index_of(l, m).unwrap();
                for i in 0..n {
                    f.u.set(i, c, x[i * b + a]);
                }
            }
            for (a, &(l, m)) in s.v.channels.iter().enumerate() {
                let c = f.v.channels.index_of(l, m).unwrap();
                for i in 0..n {
                    f.v.set(i, c, x[i * b + nu + a]);
                }
            }
        }
        f
    }

    /// One step of the homogeneous flow.
    pub fn step(&self, xs: &mut SectorState) {
        for ((x, l), r) in xs.iter_mut().zip(&self.lhs).zip(&self.rhs) {
            *x = l.solve(&r.mul_vec(x));
        }
    }

    /// One step of `η_t = 𝓛η + S(t)` with the trapezoid rule on the source values `s0`, `s1`
    /// at the two ends of the step.
    pub fn step_with_source(&self, xs: &mut SectorState, s0: &SectorState, s1: &SectorState) {
        let h = C64::new(0.5 * self.dt, 0.0);
        for k in 0..xs.len() {
            let mut y = self.rhs[k].mul_vec(&xs[k]);
            for ((yi, a), b) in y.iter_mut().zip(&s0[k]).zip(&s1[k]) {
                *yi += h * (a + b);
            }
            xs[k] = self.lhs[k].solve(&y);
        }
    }

    /// `𝒬 = ⟨Kη, η⟩` with the sector matrices.
    pub fn quadratic_form(&self, xs: &SectorState) -> f64 {
        let mut q = 0.0;
        for ((s, m), x) in self.sectors.iter().zip(&self.m).zip(xs) {
            let y = m.mul_vec(x);
            let b = s.block();
            let nu = s.u.len();
            for (k, (xi, yi)) in x.iter().zip(&y).enumerate() {
                let sign = if k % b < nu { 1.0 } else { -1.0 };
                q += sign * (xi.conj() * yi).re;
            }
        }
        0.5 * q * self.spacing
    }

    /// Mass removed by the layer over one step, `2 dt ⟨η^½, Wη^½⟩`.
    pub fn absorbed(&self, before: &SectorState, after: &SectorState) -> f64 {
        let mut acc = 0.0;
        for ((s, x0), x1) in self.sectors.iter().zip(before).zip(after) {
            let b = s.block();
            for (k, (a, c)) in x0.iter().zip(x1).enumerate() {
                acc += self.w[k / b] * (0.5 * (a + c)).norm_sqr();
            }
        }
        self.dt * acc * self.spacing
    }

    /// `‖η‖²`.
    pub fn mass(&self, xs: &SectorState) -> f64 {
        0.5 * self.spacing * xs.iter().flatten().map(|v| v.norm_sqr()).sum::<f64>()
    }

    /// `η` propagated over `steps` steps.
    pub fn propagate(&self, model: &Model, f: &Pair, steps: usize) -> Pair {
        let mut xs = self.scatter(f);
        for _ in 0..steps {
            self.step(&mut xs);
        }
        self.gather(model, &xs)
    }

    /// Same operator with the opposite time step (the layer must be off).
    pub fn reversed(&self) -> Result<Self> {
        if self.sponge.is_active() {
            return Err(Error::Precondition("cannot reverse a propagator with an absorbing layer".into()));
        }
        let mut out = self.clone();
        let zero = vec![ZERO; self.m.first().map(|m| m.n).unwrap_or(0)];
        let half = 0.5 * self.dt;
        out.dt = -self.dt;
        out.lhs = self.m.iter().map(|m| affine(m, -I * half, &zero).factor()).collect::<Result<_>>()?;
        out.rhs = self.m.iter().map(|m| affine(m, I * half, &zero)).collect();
        Ok(out)
    }
}

/// Evolve `eta0` under the linearized flow for time `t_final`.
///
/// The data are projected onto the continuous subspace first, and again every
/// `spec.reproject_interval`; the discrete content found at each re-projection is recorded
/// (`leak`) and flagged when it exceeds [`LEAKAGE_WARNING`]. `energy` holds `𝒬`.
pub fn evolve_linearized(
    model: &Model,
    dec: &SpectralDecomposition,
    eta0: &Pair,
    t_final: f64,
    prop: &LinearPropagator,
    spec: &RecordSpec,
) -> Result<(Pair, TrajectoryRecord)> {
    spec.validate()?;
    let (steps, stride) = schedule(prop.dt, t_final, spec.interval)?;
    let reproject = ((spec.reproject_interval / prop.dt.abs()).round() as usize).max(1);
    let mut rec = TrajectoryRecord::new(&spec.norms);
    let p0 = dec.project_continuous(eta0);
    let removed = eta0.sub(&p0).norm() / eta0.norm().max(1e-300);
    if removed > 1e-8 {
        rec.warnings.push(format!("initial data carried discrete content {removed:.2e}; projected before evolution"));
    }
    if spec.modes {
        rec.modes = dec.labels().into_iter().map(|l| (l, Vec::new())).collect();
        rec.modes.push(("leak".into(), Vec::new()));
    }
    let mut xs = prop.scatter(&p0);
    let mut absorbed = 0.0;
    let mut leak_max: f64 = 0.0;
    let mut last_leak = 0.0;
    let sample = |xs: &SectorState, f: &Pair, t: f64, absorbed: f64, leak: f64, rec: &mut TrajectoryRecord| {
        rec.times.push(t);
        rec.mass.push(prop.mass(xs));
        rec.energy.push(prop.quadratic_form(xs));
        rec.absorbed.push(absorbed);
        for (norm, series) in rec.norms.iter_mut() {
            series.push(pair_norm(f, &model.angular, *norm));
        }
        if spec.modes {
            let size = f.norm().max(1e-300);
            let n = rec.modes.len();
            for (label, series) in rec.modes.iter_mut().take(n - 1) {
                series.push(dec.project(label, f).map(|p| p.norm() / size).unwrap_or(f64::NAN));
            }
            rec.modes[n - 1].1.push(leak);
        }
    };
    sample(&xs, &p0, 0.0, 0.0, 0.0, &mut rec);
    for k in 1..=steps {
        if prop.sponge.is_active() {
            let before = xs.clone();
            prop.step(&mut xs);
            absorbed += prop.absorbed(&before, &xs);
        } else {
            prop.step(&mut xs);
        }
        let do_project = k % reproject == 0;
        let do_sample = k % stride == 0 || k == steps;
        if do_project || do_sample {
            let mut f = prop.gather(model, &xs);
            if do_project {
                let pc = dec.project_continuous(&f);
                last_leak = f.sub(&pc).norm() / f.norm().max(1e-300);
                leak_max = leak_max.max(last_leak);
                f = pc;
                xs = prop.scatter(&f);
            }
            if do_sample {
                sample(&xs, &f, k as f64 * prop.dt, absorbed, last_leak, &mut rec);
            }
        }
    }
    if leak_max > LEAKAGE_WARNING {
        rec.warnings.push(format!("discrete-mode leakage {leak_max:.2e} between re-projections"));
    }
    let m0 = rec.mass[0];
    if m0 > 0.0 && absorbed / m0 > ABSORPTION_WARNING {
        rec.warnings.push(format!("absorbing layer removed {:.2e} of the initial mass; enlarge the box", absorbed / m0));
    }
    let last = prop.gather(model, &xs);
    Ok((last, rec))
}

/// Real pair `(Re ζ, Im ζ)` of a random localized complex field `ζ` with `‖ζ‖ = amplitude`:
/// channel `(ℓ, m)` carries `c r^{ℓ+1} e^{-r²/s}` with random complex `c` and `s ∈ [0.5, 2]`.
pub fn localized_data(model: &Model, lmax: usize, amplitude: f64, seed: u64) -> Pair {
    smooth_data(model, lmax, lmax, (0.5, 2.0), amplitude, seed)
}

/// As [`localized_data`], with data in the channels `ℓ ≤ data_lmax`, widths `s` drawn from
/// `widths`, and the pair stored on the channel set of `lmax`.
pub fn smooth_data(model: &Model, data_lmax: usize, lmax: usize, widths: (f64, f64), amplitude: f64, seed: u64) -> Pair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chans = ChannelSet::full(data_lmax.min(lmax));
    let mut zeta = SphField::zeros(model.grid, chans.clone());
    for (c, &(l, _)) in chans.channels.iter().enumerate() {
        let a = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let s: f64 = rng.gen_range(widths.0..widths.1);
        for i in 0..model.n() {
            let r = model.grid.r(i);
            zeta.set(i, c, a * r.powi(l as i32 + 1) * (-r * r / s).exp());
        }
    }
    let norm = zeta.norm();
    zeta.scale(C64::new(amplitude / norm, 0.0));
    Pair::from_complex(&zeta, lmax)
}
