//! Classical Gibbs samplers and the sample-based FIM estimator.

pub mod estimator;
pub mod exact;
pub mod family;
pub mod ising;
pub mod isnnn;
pub mod lattice;
pub mod schedule;

pub use estimator::{fim_from_mcmc, mcmc_field, McmcEstimate};
pub use exact::exact_enumeration_distribution;
pub use family::{ClassicalFamily, ISING_TC};
pub use ising::ising_generate;
pub use isnnn::{isnnn_generate, PtSchedule};
pub use lattice::{Couplings, IsingLattice};
pub use schedule::McmcSchedule;
