//! Sampled trajectories and power-law fits of their norms.

use super::norms::Norm;
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::Write;

/// What to sample along a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct RecordSpec {
    /// Time between samples.
    pub interval: f64,
    pub norms: Vec<Norm>,
    /// Record the size of each discrete-mode projection (linearized flow only).
    pub modes: bool,
    /// Time between re-projections onto the continuous subspace (linearized flow only).
    pub reproject_interval: f64,
}

impl Default for RecordSpec {
    fn default() -> Self {
        RecordSpec { interval: 0.1, norms: vec![Norm::Lp(2.0), Norm::LInf, Norm::H(1), Norm::H(2)], modes: false, reproject_interval: 0.5 }
    }
}

impl RecordSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.interval > 0.0) || !(self.reproject_interval > 0.0) {
            return Err(Error::Config("sampling and re-projection intervals must be positive".into()));
        }
        Ok(())
    }
}

/// Time series of conserved quantities, norms and discrete-mode projections.
#[derive(Clone, Debug, Default)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    /// `𝓝 = ‖ψ‖²` (or `‖η‖²` for the linearized flow).
    pub mass: Vec<f64>,
    /// `𝓔` for the nonlinear flow, `𝒬 = ⟨Kη, η⟩` for the linearized flow.
    pub energy: Vec<f64>,
    /// Mass removed by the absorbing layer up to each sample.
    pub absorbed: Vec<f64>,
    pub norms: Vec<(Norm, Vec<f64>)>,
    pub modes: Vec<(String, Vec<f64>)>,
    pub warnings: Vec<String>,
}

impl TrajectoryRecord {
    pub fn new(norms: &[Norm]) -> Self {
        TrajectoryRecord { norms: norms.iter().map(|n| (*n, Vec::new())).collect(), ..Default::default() }
    }

    pub fn series(&self, norm: Norm) -> Option<&[f64]> {
        self.norms.iter().find(|(n, _)| *n == norm).map(|(_, v)| v.as_slice())
    }

    pub fn mode_series(&self, label: &str) -> Option<&[f64]> {
        self.modes.iter().find(|(n, _)| n == label).map(|(_, v)| v.as_slice())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `max_t |(𝓝(t) + absorbed(t)) / 𝓝(0) - 1|`.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.mass.first().copied().unwrap_or(0.0);
        if m0 == 0.0 {
            return 0.0;
        }
        self.mass.iter().zip(&self.absorbed).map(|(m, a)| ((m + a) / m0 - 1.0).abs()).fold(0.0, f64::max)
    }

    /// `max_t |𝓔(t)/𝓔(0) - 1|`.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energy.first().copied().unwrap_or(0.0);
        if e0 == 0.0 {
            return 0.0;
        }
        self.energy.iter().map(|e| (e / e0 - 1.0).abs()).fold(0.0, f64::max)
    }

    /// `sup_t ‖·‖ / inf_t ‖·‖` of a recorded norm.
    pub fn sup_inf_ratio(&self, norm: Norm) -> Option<f64> {
        let s = self.series(norm)?;
        let hi = s.iter().cloned().fold(f64::MIN, f64::max);
        let lo = s.iter().cloned().fold(f64::MAX, f64::min);
        Some(hi / lo)
    }

    /// Append-only CSV: `time, mass, energy, absorbed`, then one column per norm and mode group.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["time".to_string(), "mass".into(), "energy".into(), "absorbed".into()];
        header.extend(self.norms.iter().map(|(n, _)| n.label()));
        header.extend(self.modes.iter().map(|(n, _)| format!("mode_{n}")));
        w.write_record(&header).map_err(csv_err)?;
        for k in 0..self.len() {
            let mut row = vec![fmt(self.times[k]), fmt(self.mass[k]), fmt(self.energy[k]), fmt(self.absorbed[k])];
            row.extend(self.norms.iter().map(|(_, v)| fmt(v[k])));
            row.extend(self.modes.iter().map(|(_, v)| fmt(v[k])));
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// Least-squares slope of `log y` against `log t` with a bootstrap standard error.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayFit {
    pub exponent: f64,
    pub error: f64,
    /// `log C` in `y ≈ C t^exponent`.
    pub log_amplitude: f64,
    pub points: usize,
    pub window: (f64, f64),
}

/// Ordinary least squares `y ≈ a + b x`; returns `(a, b)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let b = sxy / sxx;
    (my - b * mx, b)
}

const BOOTSTRAP_SAMPLES: usize = 400;

/// Power-law fit of `(t, y)` pairs with `t` in `window`; requires at least one decade of `t`.
pub fn power_law_fit(t: &[f64], y: &[f64], window: (f64, f64), seed: u64) -> Result<DecayFit> {
    let (t0, t1) = window;
    if !(t0 > 0.0) || t1 < 10.0 * t0 {
        return Err(Error::Fit(format!("window [{t0}, {t1}] spans less than one decade")));
    }
    let pts: Vec<(f64, f64)> =
        t.iter().zip(y).filter(|(a, b)| **a >= t0 && **a <= t1 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    if pts.len() < 4 {
        return Err(Error::Fit(format!("only {} samples inside [{t0}, {t1}]", pts.len())));
    }
    let span = pts.last().unwrap().0 - pts[0].0;
    if span < 10f64.ln() * (1.0 - 1e-9) {
        return Err(Error::Fit(format!("samples inside the window span a factor {:.2} in t, below one decade", span.exp())));
    }
    let (x, ly): (Vec<f64>, Vec<f64>) = pts.iter().cloned().unzip();
    let (a, b) = linear_fit(&x, &ly);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = x.len();
    let mut slopes = Vec::with_capacity(BOOTSTRAP_SAMPLES);
    let (mut bx, mut by) = (vec![0.0; n], vec![0.0; n]);
    for _ in 0..BOOTSTRAP_SAMPLES {
        for k in 0..n {
            let j = rng.gen_range(0..n);
            bx[k] = x[j];
            by[k] = ly[j];
        }
        let (_, s) = linear_fit(&bx, &by);
        if s.is_finite() {
            slopes.push(s);
        }
    }
    let m = slopes.iter().sum::<f64>() / slopes.len() as f64;
    let var = slopes.iter().map(|s| (s - m) * (s - m)).sum::<f64>() / (slopes.len() as f64 - 1.0);
    Ok(DecayFit { exponent: b, error: var.sqrt(), log_amplitude: a, points: n, window })
}

/// One-decade window `[t₀, 10t₀]` whose ends fall on the sampling grid of `interval`, with
/// `t₀` the largest sample time not above `start`.
pub fn decade_window(start: f64, interval: f64) -> Result<(f64, f64)> {
    if !(start > 0.0) || !(interval > 0.0) {
        return Err(Error::Domain(format!("window start {start} and interval {interval} must be positive")));
    }
    let k = (start / interval + 1e-9).floor().max(1.0);
    Ok((k * interval, 10.0 * k * interval))
}

/// Decay exponent of a recorded norm over `window`.
pub fn decay_fit(record: &TrajectoryRecord, norm: Norm, window: (f64, f64)) -> Result<DecayFit> {
    let y = record.series(norm).ok_or_else(|| Error::Precondition(format!("norm {norm} was not recorded")))?;
    power_law_fit(&record.times, y, window, 0x5eed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_is_recovered() {
        let t: Vec<f64> = (1..=200).map(|k| 0.1 * k as f64).collect();
        let y: Vec<f64> = t.iter().map(|s| 3.0 * s.powf(-1.5)).collect();
        let f = power_law_fit(&t, &y, (1.0, 20.0), 1).unwrap();
        assert!((f.exponent + 1.5).abs() < 1e-12);
        assert!(f.error < 1e-10);
        assert!((f.log_amplitude - 3f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn short_windows_are_rejected() {
        let t: Vec<f64> = (1..=100).map(|k| 0.1 * k as f64).collect();
        let y = vec![1.0; 100];
        assert!(matches!(power_law_fit(&t, &y, (1.0, 5.0), 1), Err(Error::Fit(_))));
        assert!(matches!(power_law_fit(&t, &y, (2.0, 20.0), 1), Err(Error::Fit(_))));
    }

    #[test]
    fn noisy_slope_has_a_nonzero_error_bar() {
        let t: Vec<f64> = (1..=200).map(|k| 0.1 * k as f64).collect();
        let y: Vec<f64> = t.iter().enumerate().map(|(k, s)| s.powf(-1.0) * (1.0 + 0.05 * ((k * 37 % 11) as f64 - 5.0) / 5.0)).collect();
        let f = power_law_fit(&t, &y, (0.5, 20.0), 7).unwrap();
        assert!((f.exponent + 1.0).abs() < 0.05);
        assert!(f.error > 0.0 && f.error < 0.05);
    }

    #[test]
    fn decade_windows_snap_to_samples() {
        let (a, b) = decade_window(1.154, 0.1).unwrap();
        assert!((a - 1.1).abs() < 1e-12 && (b - 11.0).abs() < 1e-12);
        assert_eq!(decade_window(0.01, 0.1).unwrap().0, 0.1);
        assert!(decade_window(-1.0, 0.1).is_err());
    }

    #[test]
    fn csv_has_one_row_per_sample() {
        let mut r = TrajectoryRecord::new(&[Norm::Lp(2.0)]);
        for k in 0..3 {
            r.times.push(k as f64);
            r.mass.push(1.0);
            r.energy.push(-1.0);
            r.absorbed.push(0.0);
            r.norms[0].1.push(1.0);
        }
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("time,mass,energy,absorbed,p2"));
    }
}
