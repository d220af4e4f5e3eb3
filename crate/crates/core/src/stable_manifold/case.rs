//! Case table: which discrete modes carry `a`, `b` and `r`, and the modulation matrix.

use crate::bound_states::Branch;
use crate::error::{Error, Result};
use crate::linalg::{Lu, Mat};
use crate::linearized::{Pair, SpectralDecomposition};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use super::frame::SymmetryFrame;

/// Branch and resonance class of the excited state being approached.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    QeResonant,
    QeNonresonant,
    QtildeResonant,
    QtildeNonresonant,
}

impl Case {
    pub fn new(branch: Branch, resonant: bool) -> Self {
        match (branch, resonant) {
            (Branch::QE, true) => Case::QeResonant,
            (Branch::QE, false) => Case::QeNonresonant,
            (Branch::QtildeE, true) => Case::QtildeResonant,
            (Branch::QtildeE, false) => Case::QtildeNonresonant,
        }
    }

    pub fn branch(&self) -> Branch {
        match self {
            Case::QeResonant | Case::QeNonresonant => Branch::QE,
            Case::QtildeResonant | Case::QtildeNonresonant => Branch::QtildeE,
        }
    }

    pub fn resonant(&self) -> bool {
        matches!(self, Case::QeResonant | Case::QtildeResonant)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Case::QeResonant => "qe_resonant",
            Case::QeNonresonant => "qe_nonresonant",
            Case::QtildeResonant => "qtilde_resonant",
            Case::QtildeNonresonant => "qtilde_nonresonant",
        }
    }

    /// Number of complex coordinates in `a`.
    pub fn a_dim(&self) -> usize {
        match self.branch() {
            Branch::QE => 3,
            Branch::QtildeE => 1,
        }
    }

    /// Number of complex coordinates in `b`.
    pub fn b_dim(&self) -> usize {
        match self {
            Case::QtildeResonant => 6,
            Case::QtildeNonresonant | Case::QeResonant => 4,
            Case::QeNonresonant => 2,
        }
    }

    /// Number of `b` components integrated forward from prescribed initial values.
    pub fn forward_dim(&self) -> usize {
        if self.resonant() {
            2
        } else {
            0
        }
    }

    /// Every case except the co-rotational non-resonant one runs with relaxed tolerances.
    pub fn exploratory(&self) -> bool {
        *self != Case::QtildeNonresonant
    }

    /// Weight `w(t)` with `|r_j(t)| w(t) ≤ δ^{7/4}` on the solution class.
    pub fn r_weight(&self, j: usize, t: f64) -> f64 {
        if j == 0 || self.branch() == Branch::QE {
            0.5 * (1.0 + t)
        } else {
            (1.0 + t).powi(2)
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('-', "_");
        [Case::QeResonant, Case::QeNonresonant, Case::QtildeResonant, Case::QtildeNonresonant]
            .into_iter()
            .find(|c| c.label() == norm)
            .ok_or_else(|| Error::Config(format!("unknown case '{s}'")))
    }
}

/// Modulation coordinate carried by one discrete mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    A(usize),
    B(usize),
    /// Symmetry parameter `r_j` (phase for `j = 0`, rotations for `j = 1, 2`).
    R(usize),
}

/// One discrete mode of the decomposition with its role.
#[derive(Clone, Debug)]
pub struct ModeRef {
    pub group: usize,
    pub index: usize,
    pub name: String,
    pub role: Role,
    pub omega: C64,
    /// Integrated forward from a prescribed initial value (`Re ω < 0`).
    pub forward: bool,
}

/// Assignment of every discrete mode to `a`, `b` or `r` for one case.
#[derive(Clone, Debug)]
pub struct CaseLayout {
    pub case: Case,
    pub modes: Vec<ModeRef>,
}

const FORWARD_REL: f64 = 1e-9;

impl CaseLayout {
    /// Build the layout and check it against the case table.
    pub fn new(case: Case, dec: &SpectralDecomposition) -> Result<Self> {
        if dec.branch != case.branch() || dec.resonant != case.resonant() {
            return Err(Error::Precondition(format!(
                "decomposition ({}, resonant = {}) does not belong to case {case}",
                dec.branch.label(),
                dec.resonant
            )));
        }
        let mut modes = Vec::new();
        let (mut na, mut nb) = (0, 0);
        for (gi, g) in dec.groups.iter().enumerate() {
            for (k, name) in g.names.iter().enumerate() {
                let role = match (case.branch(), g.label.as_str(), name.as_str()) {
                    (Branch::QtildeE, "P01", "Phi00") | (Branch::QE, "P01", "Z1") | (Branch::QE, _, "Y") => {
                        na += 1;
                        Role::A(na - 1)
                    }
                    (Branch::QtildeE, "P01", "Phi01") | (Branch::QE, "P01", "phase") => Role::R(0),
                    (Branch::QtildeE, "P02", "Phi02") | (Branch::QE, "P02", "Z") => Role::R(1),
                    (Branch::QtildeE, "P02", "Phi03") | (Branch::QE, "P03", "Z") => Role::R(2),
                    (_, "P1" | "P2" | "P+" | "P-", _) => {
                        nb += 1;
                        Role::B(nb - 1)
                    }
                    _ => return Err(Error::Precondition(format!("mode {name} of group {} has no role in case {case}", g.label))),
                };
                let omega = g.omegas[k];
                let forward = matches!(role, Role::B(_)) && omega.re < -FORWARD_REL * omega.norm();
                modes.push(ModeRef { group: gi, index: k, name: name.clone(), role, omega, forward });
            }
        }
        let nr = modes.iter().filter(|m| matches!(m.role, Role::R(_))).count();
        let nf = modes.iter().filter(|m| m.forward).count();
        if na != case.a_dim() || nb != case.b_dim() || nr != 3 || nf != case.forward_dim() {
            return Err(Error::Precondition(format!(
                "case {case} expects (a, b, r, forward) = ({}, {}, 3, {}), found ({na}, {nb}, {nr}, {nf})",
                case.a_dim(),
                case.b_dim(),
                case.forward_dim()
            )));
        }
        Ok(CaseLayout { case, modes })
    }

    pub fn mode<'a>(&self, dec: &'a SpectralDecomposition, k: usize) -> &'a Pair {
        let m = &self.modes[k];
        &dec.groups[m.group].modes[m.index]
    }

    /// Coordinates of `f` along every discrete mode, in layout order.
    pub fn coefficients(&self, dec: &SpectralDecomposition, f: &Pair) -> Vec<C64> {
        let per_group: Vec<Vec<C64>> = dec.groups.iter().map(|g| g.coefficients(f)).collect();
        self.modes.iter().map(|m| per_group[m.group][m.index]).collect()
    }
}

/// Block structure of the modulation matrix `M = M₀ + M₁(r)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModulationMatrix {
    /// Largest relative mismatch between the recomputed diagonal blocks and the stored pairings.
    pub m0_mismatch: f64,
    /// Largest relative pairing between modes of different groups.
    pub off_block: f64,
    /// Smallest relative pivot of `M₀`.
    pub m0_pivot: f64,
    /// `‖M₀⁻¹ M₁(r)‖_∞`.
    pub m1_norm: f64,
}

/// Tolerance on the diagonal-block mismatch and the off-block pairings.
pub const PAIRING_TOL: f64 = 1e-6;

/// Assemble `M(r)_{ij} = ⟨JΦ_i, T_r Φ_j⟩` over all discrete modes and check its structure.
pub fn modulation_matrix(layout: &CaseLayout, dec: &SpectralDecomposition, frame: &SymmetryFrame, r: [f64; 3]) -> Result<ModulationMatrix> {
    let n = layout.modes.len();
    let modes: Vec<&Pair> = (0..n).map(|k| layout.mode(dec, k)).collect();
    let rotated: Vec<Pair> = modes.iter().map(|m| frame.act_pair(r, m)).collect();
    let scale = modes.iter().map(|m| m.norm().powi(2)).fold(0.0, f64::max);
    let mut m0 = Mat::zeros(n);
    let mut m1 = Mat::zeros(n);
    let mut mismatch: f64 = 0.0;
    let mut off: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let g = modes[i].j_inner(modes[j]);
            let same = layout.modes[i].group == layout.modes[j].group;
            if same {
                let stored = dec.groups[layout.modes[i].group].gram.get(layout.modes[i].index, layout.modes[j].index);
                mismatch = mismatch.max((g - stored).norm() / scale);
                m0.set(i, j, g);
            } else {
                off = off.max(g.norm() / scale);
            }
            m1.set(i, j, modes[i].j_inner(&rotated[j]) - m0.get(i, j));
        }
    }
    if mismatch > PAIRING_TOL {
        return Err(Error::ModulationDegeneracy(format!("diagonal pairings differ from the stored constants by {mismatch:.2e}")));
    }
    if off > PAIRING_TOL {
        return Err(Error::ModulationDegeneracy(format!("modes of different subspaces pair to {off:.2e}")));
    }
    let lu = Lu::new(&m0);
    let pivot = lu.min_pivot / scale;
    if !(pivot >= 1e-10) {
        return Err(Error::ModulationDegeneracy(format!("M0 is singular (relative pivot {pivot:.2e})")));
    }
    let prod = lu.solve_mat(&m1);
    let m1_norm = (0..n).map(|i| (0..n).map(|j| prod.get(i, j).norm()).sum::<f64>()).fold(0.0, f64::max);
    if !(m1_norm < 0.5) {
        return Err(Error::ModulationDegeneracy(format!("‖M0⁻¹M1‖ = {m1_norm:.3} at r = {r:?}")));
    }
    Ok(ModulationMatrix { m0_mismatch: mismatch, off_block: off, m0_pivot: pivot, m1_norm })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_table_dimensions() {
        let dims: Vec<_> = [Case::QtildeResonant, Case::QtildeNonresonant, Case::QeResonant, Case::QeNonresonant]
            .iter()
            .map(|c| (c.a_dim(), c.b_dim(), c.forward_dim()))
            .collect();
        assert_eq!(dims, vec![(1, 6, 2), (1, 4, 0), (3, 4, 2), (3, 2, 0)]);
        assert!(!Case::QtildeNonresonant.exploratory());
        assert!(Case::QeNonresonant.exploratory());
    }

    #[test]
    fn labels_round_trip() {
        for c in [Case::QeResonant, Case::QeNonresonant, Case::QtildeResonant, Case::QtildeNonresonant] {
            assert_eq!(c.label().parse::<Case>().unwrap(), c);
            assert_eq!(Case::new(c.branch(), c.resonant()), c);
        }
        assert_eq!("Qtilde-Nonresonant".parse::<Case>().unwrap(), Case::QtildeNonresonant);
        assert!("qx".parse::<Case>().is_err());
    }

    #[test]
    fn class_weights() {
        assert_eq!(Case::QtildeNonresonant.r_weight(0, 1.0), 1.0);
        assert_eq!(Case::QtildeNonresonant.r_weight(1, 1.0), 4.0);
        assert_eq!(Case::QeResonant.r_weight(2, 1.0), 1.0);
    }
}
