//! Time evolution of the nonlinear equation and of the linearized flow about an excited
//! state, with conservation tracking, norm sampling and power-law decay fits.
//!
//! Both flows run on the radial channel grid of a [`Model`](crate::model::Model) with
//! Crank–Nicolson time stepping. The nonlinear scheme is the mass- and energy-conserving
//! variant of Delfour, Fortin and Payre; the linearized scheme is the Cayley transform of `𝓛`
//! per sector. Linearizing the nonlinear step about a stationary state, in its rotating frame,
//! gives the linearized step exactly, so the two flows can be compared to round-off.

mod linear;
mod nls;
mod norms;
mod record;

pub use linear::*;
pub use nls::*;
pub use norms::*;
pub use record::*;
