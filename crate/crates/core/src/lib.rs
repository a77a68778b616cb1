//! Diffusion and transport semigroups on networks of unit intervals.
//!
//! Every edge of the network is identified with `[0, 1]`. The edges are
//! coupled only through boundary conditions given by arbitrary matrices:
//!
//! - diffusion: `∂ₜu = D∂ₓₓu` with `∂ₓu(0) = K⁰⁰u(0) + K⁰¹u(1)` and
//!   `∂ₓu(1) = K¹⁰u(0) + K¹¹u(1)`;
//! - transport: `∂ₜu + C∂ₓu = 0` with `u(0) = Ku(1)`.
//!
//! The crate computes resolvents in closed form up to a small dense boundary
//! system, evolves states in time, decides positivity of both semigroups
//! (with explicit counterexamples when positivity fails) and locates
//! eigenvalues as zeros of characteristic determinants.
//!
//! States are piecewise linear on a grid shared by all edges, see
//! [`gridfn`]. All integrals against exponential kernels are evaluated in
//! closed form, so the only discretization error comes from representing
//! the data as piecewise linear functions.

pub mod diffres;
pub mod error;
pub mod evolve;
pub mod gridfn;
pub mod linalg;
pub mod netmodel;
pub mod posit;
pub mod spectral;
pub mod transres;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Threshold on the boundary-system condition estimate above which a
/// resolvent solve reports [`Error::NearSpectrum`].
pub const NEAR_SPECTRUM_CONDITION: f64 = 1e12;
