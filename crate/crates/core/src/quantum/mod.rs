//! Exact diagonalization of small spin and fermion chains.

pub mod eigen;
pub mod ground;
pub mod hamiltonian;
pub mod models;

pub use eigen::{lowest_eigs, SpectralSlice};
pub use ground::{ground_distribution, quantum_grid_ground_truth, sample_bitstrings, GroundTruthConfig, QuantumGroundTruth};
pub use hamiltonian::{HamiltonianBuilder, SparseHamiltonian};
pub use models::{build_hamiltonian, build_physical, ModelKind, ModelSpec};
