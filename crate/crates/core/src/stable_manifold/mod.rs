//! Solutions converging to an excited state from a prescribed scattering datum.
//!
//! Given `Q` and `η_∞ ∈ E_c` of size `δ`, the modulation ansatz splits a solution into symmetry
//! parameters `r`, discrete-mode amplitudes `a, b` and a continuous part `g`. The fixed point of
//! the truncated map `Ω` yields initial data whose evolution approaches
//! `ψ_as(t) = e^{-iEt}[Q + e^{t𝓛}η_∞]` at the rate `δ^{7/4}(1+t)^{-1}`.

mod case;
mod frame;
mod omega;
mod profile;
mod verify;

pub use case::*;
pub use frame::*;
pub use omega::*;
pub use profile::*;
pub use verify::*;
