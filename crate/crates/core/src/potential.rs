//! Radial potentials `V(|x|)`, their admissibility report and depth tuning.
//!
//! Units: `ħ = 2m = 1`, so `H₀ = -Δ + V` and energies are inverse squared lengths.

use crate::error::{Error, Result};
use crate::radial::{self, RadialGrid};
use serde::{Deserialize, Serialize};

/// Shape family of a radial well.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    SquareWell,
    SmoothedWell,
    Tabulated,
}

/// Radial well with non-positive values vanishing outside a bounded support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialPotential {
    pub kind: PotentialKind,
    /// Depth `V₀ > 0`; the well value is `-V₀`.
    pub depth: f64,
    /// Radius `a > 0`.
    pub radius: f64,
    /// Width of the C² ramp of a smoothed well (0 for a sharp well).
    pub smoothing_width: f64,
    /// Sampled `(r, V(r))` pairs of a tabulated potential.
    pub table: Option<Vec<(f64, f64)>>,
}

impl RadialPotential {
    pub fn square_well(depth: f64, radius: f64) -> Result<Self> {
        let v = RadialPotential { kind: PotentialKind::SquareWell, depth, radius, smoothing_width: 0.0, table: None };
        v.validate()?;
        Ok(v)
    }

    pub fn smoothed_well(depth: f64, radius: f64, width: f64) -> Result<Self> {
        let v = RadialPotential { kind: PotentialKind::SmoothedWell, depth, radius, smoothing_width: width, table: None };
        v.validate()?;
        Ok(v)
    }

    /// Tabulated potential; `radius` is taken as the outermost radius where `V ≠ 0`.
    pub fn tabulated(table: Vec<(f64, f64)>) -> Result<Self> {
        let depth = table.iter().fold(0.0f64, |m, p| m.max(-p.1));
        let radius = table.iter().filter(|p| p.1 != 0.0).fold(0.0f64, |m, p| m.max(p.0));
        let v = RadialPotential { kind: PotentialKind::Tabulated, depth, radius, smoothing_width: 0.0, table: Some(table) };
        v.validate()?;
        Ok(v)
    }

    /// The free operator: no well at all.
    pub fn zero() -> Self {
        RadialPotential { kind: PotentialKind::SquareWell, depth: 0.0, radius: 1.0, smoothing_width: 0.0, table: None }
    }

    /// Check the structural invariants of the potential.
    pub fn validate(&self) -> Result<()> {
        if !(self.depth >= 0.0) || !(self.radius > 0.0) {
            return Err(Error::Domain(format!("depth {} and radius {} must be positive", self.depth, self.radius)));
        }
        match self.kind {
            PotentialKind::SquareWell => Ok(()),
            PotentialKind::SmoothedWell => {
                if !(self.smoothing_width >= 0.0) || self.smoothing_width >= 2.0 * self.radius {
                    return Err(Error::Domain(format!("smoothing width {} outside [0, 2a)", self.smoothing_width)));
                }
                Ok(())
            }
            PotentialKind::Tabulated => {
                let t = self.table.as_ref().ok_or_else(|| Error::Domain("tabulated potential without table".into()))?;
                if t.len() < 4 {
                    return Err(Error::Domain("table needs at least four samples".into()));
                }
                if t.windows(2).any(|w| !(w[1].0 > w[0].0)) || t[0].0 < 0.0 {
                    return Err(Error::Domain("table radii must be nonnegative and strictly increasing".into()));
                }
                if t.iter().any(|p| p.1 > 0.0) {
                    return Err(Error::Domain("tabulated potential must be non-positive".into()));
                }
                let tail: Vec<f64> = t[t.len() * 3 / 4..].iter().map(|p| p.1.abs() * p.0.powi(10)).collect();
                if tail.windows(2).any(|w| w[1] > w[0] * (1.0 + 1e-12) + 1e-300) {
                    return Err(Error::Domain("table tail does not decay faster than r^-10".into()));
                }
                Ok(())
            }
        }
    }

    /// Outer radius beyond which `V ≡ 0`.
    pub fn support(&self) -> f64 {
        match self.kind {
            PotentialKind::SquareWell => self.radius,
            PotentialKind::SmoothedWell => self.radius + 0.5 * self.smoothing_width,
            PotentialKind::Tabulated => self.table.as_ref().map(|t| t[t.len() - 1].0).unwrap_or(self.radius),
        }
    }

    /// `V(r)`.
    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::Domain(format!("negative radius {r}")));
        }
        Ok(self.eval_unchecked(r))
    }

    fn eval_unchecked(&self, r: f64) -> f64 {
        match self.kind {
            PotentialKind::SquareWell => {
                if r < self.radius {
                    -self.depth
                } else {
                    0.0
                }
            }
            PotentialKind::SmoothedWell => {
                let w = self.smoothing_width;
                if w == 0.0 {
                    return if r < self.radius { -self.depth } else { 0.0 };
                }
                let s = (r - (self.radius - 0.5 * w)) / w;
                if s <= 0.0 {
                    -self.depth
                } else if s >= 1.0 {
                    0.0
                } else {
                    -self.depth * (1.0 - smoothstep(s))
                }
            }
            PotentialKind::Tabulated => match &self.table {
                Some(t) => pchip(t, r),
                None => 0.0,
            },
        }
    }

    /// Cell averages of `V` over `[r_i - h/2, r_i + h/2]` at the interior nodes of `grid`.
    ///
    /// For a square well whose edge sits on a node this gives `-V₀/2` there, which keeps the
    /// finite-difference energies second-order accurate despite the jump.
    pub fn cell_values(&self, grid: &RadialGrid) -> Vec<f64> {
        let h = grid.spacing;
        (0..grid.n_inner())
            .map(|i| {
                let r = grid.r(i);
                let (lo, hi) = (r - 0.5 * h, r + 0.5 * h);
                match self.kind {
                    PotentialKind::SquareWell => {
                        let inside = (hi.min(self.radius) - lo).max(0.0);
                        -self.depth * inside / h
                    }
                    _ => cell_average(|x| self.eval_unchecked(x), lo.max(0.0), hi, self.breakpoints()),
                }
            })
            .collect()
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self.kind {
            PotentialKind::SquareWell => vec![self.radius],
            PotentialKind::SmoothedWell => {
                vec![self.radius - 0.5 * self.smoothing_width, self.radius + 0.5 * self.smoothing_width]
            }
            PotentialKind::Tabulated => self.table.as_ref().map(|t| t.iter().map(|p| p.0).collect()).unwrap_or_default(),
        }
    }
}

fn smoothstep(s: f64) -> f64 {
    s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
}

fn cell_average<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, breaks: Vec<f64>) -> f64 {
    const X: [f64; 4] = [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
    const W: [f64; 4] = [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
    let mut pts = vec![lo];
    pts.extend(breaks.into_iter().filter(|&b| b > lo && b < hi));
    pts.push(hi);
    let mut total = 0.0;
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (c, d) = (0.5 * (a + b), 0.5 * (b - a));
        total += X.iter().zip(&W).map(|(x, wt)| wt * f(c + d * x)).sum::<f64>() * d;
    }
    total / (hi - lo)
}

/// Monotone piecewise-cubic Hermite interpolation (Fritsch–Carlson slopes); zero beyond the table.
fn pchip(t: &[(f64, f64)], r: f64) -> f64 {
    let n = t.len();
    if r >= t[n - 1].0 {
        return 0.0;
    }
    if r <= t[0].0 {
        return t[0].1;
    }
    let k = t.partition_point(|p| p.0 <= r) - 1;
    let slope = |i: usize| (t[i + 1].1 - t[i].1) / (t[i + 1].0 - t[i].0);
    let deriv = |i: usize| -> f64 {
        if i == 0 {
            return slope(0);
        }
        if i == n - 1 {
            return slope(n - 2);
        }
        let (d0, d1) = (slope(i - 1), slope(i));
        if d0 * d1 <= 0.0 {
            return 0.0;
        }
        let (h0, h1) = (t[i].0 - t[i - 1].0, t[i + 1].0 - t[i].0);
        let (w1, w2) = (2.0 * h1 + h0, h1 + 2.0 * h0);
        (w1 + w2) / (w1 / d0 + w2 / d1)
    };
    let h = t[k + 1].0 - t[k].0;
    let s = (r - t[k].0) / h;
    let (y0, y1) = (t[k].1, t[k + 1].1);
    let (m0, m1) = (deriv(k) * h, deriv(k + 1) * h);
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * m1
}

/// Whether `e₀ < 2e₁` (the second harmonic of the excited level reaches the continuum).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResonanceClass {
    Resonant,
    NonResonant,
}

/// Outcome of [`check_assumptions`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub e0: f64,
    pub e1: f64,
    /// Bound-state counts for `ℓ = 0, 1, 2, 3`.
    pub counts_per_l: Vec<usize>,
    pub resonance_class: ResonanceClass,
    /// `|e₀ - 2e₁|`.
    pub margin: f64,
    pub passed: bool,
    pub failures: Vec<String>,
    /// Whether the zero-energy `ℓ = 0` solution grows linearly at the box edge.
    pub zero_energy_regular: bool,
}

impl AssumptionReport {
    /// Stable key-ordered text rendering.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("e0 = {:.15e}\n", self.e0));
        s.push_str(&format!("e1 = {:.15e}\n", self.e1));
        s.push_str(&format!(
            "counts_per_l = [{}]\n",
            self.counts_per_l.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ")
        ));
        s.push_str(&format!(
            "resonance_class = \"{}\"\n",
            match self.resonance_class {
                ResonanceClass::Resonant => "resonant",
                ResonanceClass::NonResonant => "non_resonant",
            }
        ));
        s.push_str(&format!("margin = {:.15e}\n", self.margin));
        s.push_str(&format!("passed = {}\n", self.passed));
        s.push_str(&format!("failures = [{}]\n", self.failures.iter().map(|f| format!("\"{f}\"")).collect::<Vec<_>>().join(", ")));
        s.push_str(&format!("zero_energy_regular = {}\n", self.zero_energy_regular));
        s.push_str("operator_bounds = \"assumed\"\n");
        s
    }
}

/// Default non-resonance margin relative to `|e₁|`.
pub const DEFAULT_MARGIN_FRACTION: f64 = 0.05;

/// Classify the bound-state structure of `H₀ = -Δ + V` per angular momentum.
///
/// Counts use the zero-energy exterior matching at the edge of the support, so weakly bound
/// levels are not lost to box confinement; energies come from the default radial grid.
pub fn check_assumptions(v: &RadialPotential, tol_margin: f64) -> Result<AssumptionReport> {
    let counts: Vec<usize> = (0..4).map(|l| radial::bound_state_count(v, l)).collect::<Result<_>>()?;
    let mut failures = Vec::new();
    let (mut e0, mut e1) = (f64::NAN, f64::NAN);
    if counts[0] == 0 {
        failures.push("missing e0".to_string());
    }
    if counts[1] == 0 {
        failures.push("missing e1".to_string());
    }
    if counts[0] > 1 {
        failures.push("extra radial state".to_string());
    }
    if counts[1] > 1 {
        failures.push("extra l=1 level".to_string());
    }
    if counts[2] > 0 || counts[3] > 0 {
        failures.push("extra angular sector".to_string());
    }
    if counts[0] >= 1 {
        let grid = radial::default_grid(v)?;
        let s0 = radial::solve_radial(v, 0, &grid)?;
        e0 = s0.first().map(|p| p.energy).unwrap_or(f64::NAN);
        if counts[1] >= 1 {
            let s1 = radial::solve_radial(v, 1, &grid)?;
            e1 = s1.first().map(|p| p.energy).unwrap_or(f64::NAN);
        }
    }
    let margin = (e0 - 2.0 * e1).abs();
    if e0.is_finite() && e1.is_finite() {
        if !(e0 < e1 && e1 < 0.0) {
            failures.push("level ordering".to_string());
        }
        if !(margin > tol_margin) {
            failures.push("resonance margin".to_string());
        }
    }
    let class = if e0 < 2.0 * e1 { ResonanceClass::Resonant } else { ResonanceClass::NonResonant };
    Ok(AssumptionReport {
        e0,
        e1,
        counts_per_l: counts,
        resonance_class: class,
        margin,
        passed: failures.is_empty(),
        failures,
        zero_energy_regular: radial::zero_energy_grows_linearly(v)?,
    })
}

/// Search bracket for [`tune_well`] in absolute depth units.
#[derive(Clone, Copy, Debug)]
pub struct TuneBracket {
    pub depth_min: f64,
    pub depth_max: f64,
}

impl Default for TuneBracket {
    fn default() -> Self {
        TuneBracket { depth_min: 0.05, depth_max: 200.0 }
    }
}

/// Tuned square well with its admissibility report.
#[derive(Clone, Debug)]
pub struct TunedWell {
    pub potential: RadialPotential,
    pub report: AssumptionReport,
    /// Depth interval in which the requested class holds with the default margin.
    pub admissible_interval: (f64, f64),
}

/// Find a square well of radius `a` in the requested resonance class.
///
/// The depth thresholds (appearance of the `ℓ = 1` level, appearance of the first extra
/// level, and the margin-shifted `e₀ = 2e₁` crossings) are located by bisection; the well
/// returned sits at the midpoint of the admissible depth interval.
pub fn tune_well(target: ResonanceClass, a: f64) -> Result<TunedWell> {
    tune_well_in(target, a, TuneBracket::default())
}

/// [`tune_well`] with an explicit depth bracket.
pub fn tune_well_in(target: ResonanceClass, a: f64, bracket: TuneBracket) -> Result<TunedWell> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("radius {a} must be positive")));
    }
    let well = |d: f64| RadialPotential::square_well(d, a);
    let counts_at = |d: f64| -> Result<(usize, usize, usize)> {
        let v = well(d)?;
        Ok((radial::bound_state_count(&v, 0)?, radial::bound_state_count(&v, 1)?, radial::bound_state_count(&v, 2)?))
    };
    let (lo, hi) = (bracket.depth_min, bracket.depth_max);
    let c_hi = counts_at(hi)?;
    if c_hi.1 == 0 {
        return Err(Error::Tuning(format!(
            "no l=1 level for depths in [{lo}, {hi}] at radius {a}; the well is too weak for a two-level structure"
        )));
    }
    let bisect = |mut x0: f64, mut x1: f64, pred: &dyn Fn(f64) -> Result<bool>| -> Result<f64> {
        for _ in 0..200 {
            let mid = 0.5 * (x0 + x1);
            if (x1 - x0) <= 1e-12 * x1.abs() {
                break;
            }
            if pred(mid)? {
                x1 = mid;
            } else {
                x0 = mid;
            }
        }
        Ok(0.5 * (x0 + x1))
    };
    let d1 = bisect(lo, hi, &|d| Ok(counts_at(d)?.1 >= 1))?;
    let extra = |d: f64| -> Result<bool> {
        let c = counts_at(d)?;
        Ok(c.0 >= 2 || c.1 >= 2 || c.2 >= 1)
    };
    let d2 = if extra(hi)? { bisect(d1, hi, &extra)? } else { hi };
    let levels = |d: f64| -> Result<(f64, f64)> {
        let v = well(d)?;
        let grid = radial::default_grid(&v)?;
        let e0 = radial::solve_radial(&v, 0, &grid)?[0].energy;
        let e1 = radial::solve_radial(&v, 1, &grid)?.first().map(|p| p.energy).unwrap_or(0.0);
        Ok((e0, e1))
    };
    let inner = |x: f64| d1 + (d2 - d1) * x;
    let (pad_lo, pad_hi) = (inner(1e-6), inner(1.0 - 1e-6));
    let g_res = |d: f64| -> Result<bool> {
        let (e0, e1) = levels(d)?;
        Ok(e0 - 2.0 * e1 > -DEFAULT_MARGIN_FRACTION * e1.abs())
    };
    let g_nonres = |d: f64| -> Result<bool> {
        let (e0, e1) = levels(d)?;
        Ok(e0 - 2.0 * e1 > DEFAULT_MARGIN_FRACTION * e1.abs())
    };
    let interval = match target {
        ResonanceClass::Resonant => {
            if g_res(pad_lo)? {
                return Err(Error::Tuning(format!("no resonant depth in ({d1}, {d2})")));
            }
            let top = if g_res(pad_hi)? { bisect(pad_lo, pad_hi, &g_res)? } else { d2 };
            (d1, top)
        }
        ResonanceClass::NonResonant => {
            if !g_nonres(pad_hi)? {
                return Err(Error::Tuning(format!("no non-resonant depth in ({d1}, {d2})")));
            }
            let bottom = if g_nonres(pad_lo)? { d1 } else { bisect(pad_lo, pad_hi, &g_nonres)? };
            (bottom, d2)
        }
    };
    let depth = 0.5 * (interval.0 + interval.1);
    let potential = well(depth)?;
    let report = check_assumptions(&potential, DEFAULT_MARGIN_FRACTION * levels(depth)?.1.abs())?;
    if !report.passed || report.resonance_class != target {
        return Err(Error::Tuning(format!(
            "midpoint depth {depth} of interval ({}, {}) fails: {:?}",
            interval.0, interval.1, report.failures
        )));
    }
    Ok(TunedWell { potential, report, admissible_interval: interval })
}
