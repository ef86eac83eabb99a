//! Driven collective two-level atoms coupled to a squeezed-vacuum reservoir.

pub mod clebsch;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod krylov;
pub mod liouvillian;
pub mod observables;
pub mod sparse;
pub mod spectral;
pub mod spin;
pub mod sweeps;

pub use error::{Error, Result};
