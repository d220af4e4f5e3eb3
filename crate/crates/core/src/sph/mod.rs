//! Spherical-harmonic channel representation of three-dimensional fields.
//!
//! A field is stored as `ψ(x) = Σ_c u_c(r) Y_c(x̂) / r` with complex reduced radial functions
//! `u_c` sampled on the interior nodes of a [`RadialGrid`](crate::radial::RadialGrid). Angular
//! integrals of products of fields are evaluated on a Gauss–Legendre × uniform-azimuth product
//! grid that integrates every spherical polynomial of degree `4 ℓ_max + 1` exactly, so the cubic
//! nonlinearity is projected onto the channels without aliasing.

pub mod field;
pub mod grid;
pub mod harmonics;

pub use field::{ChannelSet, SphField};
pub use grid::AngularGrid;
pub use harmonics::{gauss_legendre, legendre_normalized, ylm};
