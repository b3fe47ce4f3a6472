//! Joint matching of partially similar objects.
//!
//! Given noisy pairwise partial maps between `n` element sets, the crate
//! estimates the size of the shared universe from the spectrum of the input,
//! solves the lifted semidefinite relaxation with an ADMM scheme, and rounds
//! the fractional solution to a cycle-consistent collection of partial maps.
//! A Monte Carlo harness sweeps the randomized model to chart where exact
//! recovery holds.

pub mod error;
pub mod mapcore;
pub mod seed;
pub mod synth;
pub mod eigen;
pub mod spectral;
pub mod admm;
pub mod rounding;
pub mod io;
pub mod pipeline;
pub mod bench;

pub use error::{Error, Result};
