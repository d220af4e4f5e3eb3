//! Lebesgue and Sobolev norms of channel fields.

use crate::error::{Error, Result};
use crate::linearized::Pair;
use crate::radial::sector_diagonal;
use crate::sph::{AngularGrid, SphField};
use num_complex::Complex64 as C64;
use std::fmt;
use std::str::FromStr;

/// A recorded norm: `L^p` for finite `p`, `L^∞`, or `H^k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Norm {
    Lp(f64),
    LInf,
    H(u32),
}

impl Norm {
    /// Column label: `p2`, `p6`, `pinf`, `h1`, `h2`.
    pub fn label(&self) -> String {
        match self {
            Norm::Lp(p) => format!("p{p}"),
            Norm::LInf => "pinf".into(),
            Norm::H(k) => format!("h{k}"),
        }
    }

    /// Decay exponent `-3(1/2 - 1/p)` of the free dispersive estimate.
    pub fn dispersive_exponent(&self) -> Option<f64> {
        match self {
            Norm::Lp(p) => Some(-3.0 * (0.5 - 1.0 / p)),
            Norm::LInf => Some(-1.5),
            Norm::H(_) => None,
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unknown norm '{s}' (expected p<real>, pinf or h<int>)"));
        if s == "pinf" {
            return Ok(Norm::LInf);
        }
        if let Some(rest) = s.strip_prefix('p') {
            let p: f64 = rest.parse().map_err(|_| bad())?;
            if !(p >= 1.0) || !p.is_finite() {
                return Err(bad());
            }
            return Ok(Norm::Lp(p));
        }
        if let Some(rest) = s.strip_prefix('h') {
            return rest.parse().map(Norm::H).map_err(|_| bad());
        }
        Err(bad())
    }
}

/// `|f|` at every angular node of radial node `i`, for a list of fields combined as
/// `sqrt(Σ_j c_j |f_j|²)`.
fn pointwise_modulus(fields: &[(&SphField, f64)], i: usize, ang: &AngularGrid, buf: &mut [C64], out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for (f, c) in fields {
        f.node_values(i, ang, buf);
        for (o, v) in out.iter_mut().zip(buf.iter()) {
            *o += c * v.norm_sqr();
        }
    }
    out.iter_mut().for_each(|v| *v = v.sqrt());
}

fn lebesgue(fields: &[(&SphField, f64)], ang: &AngularGrid, norm: Norm) -> f64 {
    let grid = fields[0].0.grid;
    let nn = ang.n_nodes();
    let mut buf = vec![C64::new(0.0, 0.0); nn];
    let mut m = vec![0.0; nn];
    let mut acc = 0.0f64;
    for i in 0..grid.n_inner() {
        if fields.iter().all(|(f, _)| f.data[i * f.nc()..(i + 1) * f.nc()].iter().all(|v| *v == C64::new(0.0, 0.0))) {
            continue;
        }
        pointwise_modulus(fields, i, ang, &mut buf, &mut m);
        match norm {
            Norm::LInf => acc = m.iter().fold(acc, |a, v| a.max(*v)),
            Norm::Lp(p) => {
                let r = grid.r(i);
                let s: f64 = m.iter().zip(&ang.weights).map(|(v, w)| w * v.powf(p)).sum();
                acc += grid.spacing * r * r * s;
            }
            Norm::H(_) => unreachable!(),
        }
    }
    match norm {
        Norm::Lp(p) => acc.powf(1.0 / p),
        _ => acc,
    }
}

/// `(1 - Δ) f` channel by channel with the radial finite-difference Laplacian.
pub fn one_minus_laplacian(f: &SphField) -> SphField {
    let grid = f.grid;
    let n = grid.n_inner();
    let nc = f.nc();
    let zero = vec![0.0; n];
    let off = -1.0 / (grid.spacing * grid.spacing);
    let mut out = SphField::zeros(grid, f.channels.clone());
    for (c, &(l, _)) in f.channels.channels.iter().enumerate() {
        let d = sector_diagonal(&zero, &grid, l);
        for i in 0..n {
            let mut s = f.data[i * nc + c] * (1.0 + d[i]);
            if i > 0 {
                s += f.data[(i - 1) * nc + c] * off;
            }
            if i + 1 < n {
                s += f.data[(i + 1) * nc + c] * off;
            }
            out.data[i * nc + c] = s;
        }
    }
    out
}

/// `‖f‖²_{H^k} = ⟨f, (1 - Δ)^k f⟩`.
fn sobolev_sq(f: &SphField, k: u32) -> f64 {
    let mut lo = f.clone();
    for _ in 0..k / 2 {
        lo = one_minus_laplacian(&lo);
    }
    let hi = if k % 2 == 1 { one_minus_laplacian(&lo) } else { lo.clone() };
    lo.inner(&hi).re.max(0.0)
}

/// Norm of a complex field.
pub fn field_norm(f: &SphField, ang: &AngularGrid, norm: Norm) -> f64 {
    match norm {
        Norm::H(k) => sobolev_sq(f, k).sqrt(),
        _ => lebesgue(&[(f, 1.0)], ang, norm),
    }
}

/// Norm of a real pair `(a, b)`, taken pointwise as `sqrt(|a|² + |b|²) = sqrt((|U|² + |V|²)/2)`.
pub fn pair_norm(f: &Pair, ang: &AngularGrid, norm: Norm) -> f64 {
    match norm {
        Norm::H(k) => (0.5 * (sobolev_sq(&f.u, k) + sobolev_sq(&f.v, k))).sqrt(),
        _ => lebesgue(&[(&f.u, 0.5), (&f.v, 0.5)], ang, norm),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::RadialGrid;
    use crate::sph::ChannelSet;
    use std::f64::consts::PI;

    fn gaussian() -> SphField {
        let grid = RadialGrid::new(12.0, 2400).unwrap();
        let u: Vec<f64> = grid.nodes().iter().map(|r| r * (-r * r / 2.0).exp() * (4.0 * PI).sqrt()).collect();
        SphField::single(grid, 0, 0, &u)
    }

    #[test]
    fn gaussian_lebesgue_norms() {
        let f = gaussian();
        let ang = AngularGrid::new(2);
        for p in [2.0, 4.0, 6.0] {
            let exact = (PI.powf(1.5) * (2.0 / p as f64).powf(1.5)).powf(1.0 / p);
            let got = field_norm(&f, &ang, Norm::Lp(p));
            assert!((got / exact - 1.0).abs() < 1e-5, "p = {p}: {got} vs {exact}");
        }
        assert!((field_norm(&f, &ang, Norm::LInf) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn gaussian_sobolev_norms() {
        let f = gaussian();
        let ang = AngularGrid::new(2);
        let l2 = PI.powf(1.5);
        let grad = 1.5 * PI.powf(1.5);
        let lap = 15.0 / 4.0 * PI.powf(1.5);
        let h1 = field_norm(&f, &ang, Norm::H(1)).powi(2);
        let h2 = field_norm(&f, &ang, Norm::H(2)).powi(2);
        assert!((h1 / (l2 + grad) - 1.0).abs() < 1e-4);
        assert!((h2 / (l2 + 2.0 * grad + lap) - 1.0).abs() < 1e-4);
        assert!((field_norm(&f, &ang, Norm::H(0)).powi(2) / l2 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn pair_norm_of_a_real_pair_matches_the_complex_field() {
        let mut f = gaussian().embed(&ChannelSet::full(1));
        f.data.iter_mut().for_each(|v| *v *= C64::new(0.6, 0.8));
        let p = Pair::from_complex(&f, 1);
        let ang = AngularGrid::new(1);
        for n in [Norm::Lp(2.0), Norm::LInf, Norm::H(2)] {
            let a = pair_norm(&p, &ang, n);
            let b = field_norm(&f.embed(&ChannelSet::full(1)), &ang, n);
            assert!((a - b).abs() < 1e-10 * b);
        }
    }

    #[test]
    fn labels_round_trip() {
        for n in [Norm::Lp(2.0), Norm::Lp(6.0), Norm::LInf, Norm::H(1), Norm::H(2)] {
            assert_eq!(n.label().parse::<Norm>().unwrap(), n);
        }
        assert!("q3".parse::<Norm>().is_err());
        assert!("p0.5".parse::<Norm>().is_err());
        assert_eq!(Norm::Lp(6.0).dispersive_exponent(), Some(-1.0));
    }
}
