//! Fidelity susceptibility and Fisher information metric estimation for
//! lattice models, from exact ground truth to sample-based estimators.

pub mod baselines;
pub mod classical;
pub mod classifim;
pub mod cli;
pub mod error;
pub mod evaluation;
pub mod fidelity;
pub mod quantum;
pub mod rng;
pub mod store;
pub mod synthetic;

pub use error::{Error, Result};
