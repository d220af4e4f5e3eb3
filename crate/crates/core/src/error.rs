//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failures reported by the numerical routines and the command-line layer.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The discretization is too coarse for the requested accuracy.
    #[error("refinement needed: {msg} (suggested n_points >= {suggested_n})")]
    Refinement { msg: String, suggested_n: usize },
    /// No admissible well depth was found inside the search bracket.
    #[error("well tuning failed: {0}")]
    Tuning(String),
    /// A coefficient vector does not solve the bifurcation equation.
    #[error("not a root of the bifurcation equation (residual {residual:.3e})")]
    NotARoot { residual: f64 },
    /// A fixed-point iteration failed to contract.
    #[error("fixed-point iteration diverges (contraction factor {factor:.3})")]
    Divergence { factor: f64 },
    /// An iterative solver stopped before meeting its tolerance.
    #[error("no convergence: {0}")]
    Convergence(String),
    /// A field violates the symmetry class it is supposed to carry.
    #[error("symmetry violation: {0}")]
    Symmetry(String),
    /// A computed spectrum does not have the expected mode pattern.
    #[error("spectral anomaly: {0}")]
    SpectralAnomaly(String),
    /// A pairing constant needed for a projection is numerically zero.
    #[error("degenerate pairing constant {0:.3e}")]
    DegeneratePairing(f64),
    /// A precondition of the operation does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),
    /// The contraction map is not contracting at the requested scale.
    #[error("contraction failure: sweep growth factor {factor:.3}")]
    Contraction { factor: f64 },
    /// The modulation matrix is (nearly) singular.
    #[error("modulation degeneracy: {0}")]
    ModulationDegeneracy(String),
    /// The time step is too large for the requested conservation accuracy.
    #[error("step-size error: {0}")]
    StepSize(String),
    /// A truncated integral leaves a tail above the admissible size.
    #[error("truncation error: {0}")]
    Truncation(String),
    /// The frame map series does not converge.
    #[error("frame map error: {0}")]
    Frame(String),
    /// A time-series fit is not reliable.
    #[error("unreliable fit: {0}")]
    Fit(String),
    /// Malformed configuration or input file.
    #[error("configuration error: {0}")]
    Config(String),
    /// Input/output failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
