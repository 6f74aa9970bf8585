//! Numerical checks of critical-edge universality for unitary ensembles with a
//! deformed polynomial potential.

pub mod cli;
pub mod config;
pub mod equilibrium;
pub mod error;
pub mod harness;
pub mod lax;
pub mod linalg;
pub mod mp;
pub mod orthopoly;
pub mod pi2;
pub mod poly;
pub mod potentials;
pub mod quad;
pub mod report;
pub mod verify;

pub use error::{Error, Result};
