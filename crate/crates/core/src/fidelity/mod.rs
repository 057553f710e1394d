//! Fidelities, fidelity susceptibilities and finite-difference FIM.
//!
//! Conventions: `1 - F(λ, λ + δ) ≈ ½ χ_{μν} δ_μ δ_ν` and `g = 4χ`.

pub mod checks;
pub mod distribution;
pub mod finite_diff;
pub mod states;
pub mod susceptibility;

pub use checks::{check_prop5_bound, check_theorem1, check_theorem1_complex, check_theorem2};
pub use distribution::{classical_fidelity, DiscreteDistribution};
pub use finite_diff::{
    assemble_center_field, finite_diff_fim_segment, finite_diff_fim_segment_quantum, grid_fim_from_distributions,
};
pub use states::{uhlmann_fidelity, DensityMatrix, QuantumState};
pub use susceptibility::{chi_discrete, chi_mixed, chi_pure, SusceptibilityResult};

pub type C64 = nalgebra::Complex<f64>;
pub type CMat = nalgebra::DMatrix<C64>;
pub type CVec = nalgebra::DVector<C64>;
