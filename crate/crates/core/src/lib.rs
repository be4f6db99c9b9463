//! Monte-Carlo simulator and analytic oracle for Poisson fields of Brownian
//! vortex filaments.
//!
//! The field is a superposition of single-filament velocities
//! `u(x) = (U/ℓ²) ∫₀ᵀ K_ℓ(x − X_t) ∧ dX_t` over a Poisson cloud of filaments
//! whose parameters `(U, ℓ, T)` follow a multifractal measure `γ` and whose
//! paths are Brownian with uniformly distributed starts. The crate estimates
//! structure functions and their scaling exponents, and checks the exact
//! moment identities and occupation-time laws the model rests on.

pub mod brownian;
pub mod config;
pub mod ensemble;
pub mod error;
pub mod estimators;
pub mod exec;
pub mod experiment;
pub mod filament;
pub mod gamma;
pub mod kernel;
pub mod quad;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use kernel::Vec3;
