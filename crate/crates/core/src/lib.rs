//! Self-similar profiles of the fast diffusion equation with a weighted
//! source, `u_t = Δu^m + |x|^σ u^p`, computed through phase-space analysis.

pub mod error;
pub mod critical_points;
pub mod explicit_solutions;
pub mod exponents;
pub mod integrator;
pub mod phase_systems;
pub mod shooting;
pub mod verify;

pub use error::{Error, Result};
