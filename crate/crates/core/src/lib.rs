//! Numerical laboratory for degenerate excited states of the cubic nonlinear
//! Schrödinger equation `i ψ_t = (-Δ + V) ψ + λ |ψ|² ψ` in three dimensions with a
//! radial potential.

pub mod bifurcation;
pub mod bound_states;
pub mod dynamics;
pub mod linearized;
pub mod error;
pub mod linalg;
pub mod model;
pub mod potential;
pub mod radial;
pub mod resonance;
pub mod cli_io;
pub mod sph;
pub mod stable_manifold;
pub mod symmetry;

pub use error::{Error, Result};
