//! Simulation core for feedback-controlled driven-dissipative quantum
//! batteries built from two-level atoms coupled to a waveguide.
//!
//! The crate covers three levels of description:
//!
//! * the full N-atom master equations for an open waveguide (setup I) and a
//!   mirror-terminated waveguide (setup II), see [`waveguide`];
//! * the collective spin-N/2 model in the Dicke basis that both setups reduce
//!   to when all propagation phases are multiples of 2π;
//! * the thermodynamic-limit mean-field equations, see [`meanfield`].
//!
//! Everything here is pure computation on dense matrices and needs only
//! `alloc`. File formats, configuration and the command-line front end live in
//! the `qbsim` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod energetics;
mod error;
pub mod lindblad;
pub mod matrix;
pub mod meanfield;
pub mod ode;
pub mod qops;
pub mod waveguide;

pub use error::{Error, Result};
pub use matrix::{c64, ComplexMatrix};
