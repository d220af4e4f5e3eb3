//! Experiment configuration in TOML, with a default for every field.

use crate::bound_states::{Branch, SolverConfig};
use crate::error::{Error, Result};
use crate::model::{Model, DEFAULT_LMAX};
use crate::potential::{PotentialKind, RadialPotential};
use crate::radial::{RadialGrid, DEFAULT_POINTS};
use crate::stable_manifold::Case;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use super::format::read_numeric_csv;

/// Well definition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialConfig {
    pub kind: PotentialKind,
    pub depth: f64,
    pub radius: f64,
    pub smoothing_width: f64,
    /// Two-column `(r, V)` CSV for tabulated potentials.
    pub table_path: Option<PathBuf>,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        PotentialConfig { kind: PotentialKind::SquareWell, depth: 14.196631114398, radius: 1.0, smoothing_width: 0.0, table_path: None }
    }
}

/// Radial grid and angular truncation; `r_max = 0` selects the default box of the well.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub r_max: f64,
    pub n_points: usize,
    pub lmax: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { r_max: 0.0, n_points: DEFAULT_POINTS, lmax: DEFAULT_LMAX }
    }
}

/// Newton and continuation tolerances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub newton_tol: f64,
    pub max_iter: usize,
    pub continuation_step: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let s = SolverConfig::default();
        SolverSettings { newton_tol: s.newton_tol, max_iter: s.max_iter, continuation_step: s.continuation_step }
    }
}

/// Settings of the stable-direction construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StableSettings {
    pub delta: f64,
    pub t_truncation: f64,
    pub dt: f64,
    pub mesh_points: usize,
    pub max_sweeps: usize,
    /// Highest angular momentum of the generated scattering datum.
    pub data_lmax: usize,
}

impl Default for StableSettings {
    fn default() -> Self {
        StableSettings { delta: 0.01, t_truncation: 16.0, dt: 0.02, mesh_points: 41, max_sweeps: 12, data_lmax: 1 }
    }
}

/// Complete configuration of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub eps: Vec<f64>,
    pub lambda: f64,
    pub branch: Branch,
    pub case: Case,
    pub output: PathBuf,
    pub seed: u64,
    pub potential: PotentialConfig,
    pub grid: GridConfig,
    pub solver: SolverSettings,
    pub stable: StableSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            eps: vec![0.08],
            lambda: 1.0,
            branch: Branch::QtildeE,
            case: Case::QtildeNonresonant,
            output: PathBuf::from("nlsx-out"),
            seed: 1,
            potential: PotentialConfig::default(),
            grid: GridConfig::default(),
            solver: SolverSettings::default(),
            stable: StableSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        ExperimentConfig::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Resolved configuration rendered as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// SHA-256 of the resolved TOML, in hex.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn potential(&self) -> Result<RadialPotential> {
        let p = &self.potential;
        match p.kind {
            PotentialKind::SquareWell => RadialPotential::square_well(p.depth, p.radius),
            PotentialKind::SmoothedWell => RadialPotential::smoothed_well(p.depth, p.radius, p.smoothing_width),
            PotentialKind::Tabulated => {
                let path = p.table_path.as_ref().ok_or_else(|| Error::Config("tabulated potential needs table_path".into()))?;
                let rows = read_numeric_csv(path)?;
                let table = rows
                    .iter()
                    .map(|r| if r.len() == 2 { Ok((r[0], r[1])) } else { Err(Error::Config(format!("{}: rows need two columns", path.display()))) })
                    .collect::<Result<Vec<_>>>()?;
                RadialPotential::tabulated(table)
            }
        }
    }

    pub fn model(&self) -> Result<Model> {
        let v = self.potential()?;
        if self.grid.r_max > 0.0 {
            let grid = RadialGrid::aligned(self.grid.r_max, self.grid.n_points, v.radius)?;
            Model::with_grid(v, grid, self.grid.lmax)
        } else {
            let grid = crate::radial::grid_for_box(&v, 16.0, self.grid.n_points)?;
            Model::with_grid(v, grid, self.grid.lmax)
        }
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            newton_tol: self.solver.newton_tol,
            max_iter: self.solver.max_iter,
            continuation_step: self.solver.continuation_step,
            lmax: self.grid.lmax,
        }
    }
}
