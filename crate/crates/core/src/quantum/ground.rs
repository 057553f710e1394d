use nalgebra::DVector;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::RngCore;
use rand_distr::weighted::WeightedAliasIndex;
use rayon::prelude::*;

use super::eigen::{lowest_eigs, SpectralSlice};
use super::models::{build_hamiltonian, ModelSpec};
#[cfg(test)]
use super::models::build_physical;
use crate::error::{Error, Result};
use crate::fidelity::finite_diff::assemble_center_field;
use crate::fidelity::{classical_fidelity, DiscreteDistribution, C64};
use crate::rng::{self, Rng};
use crate::store::{FimField, ParameterGrid, Provenance, RunManifest, SampleDataset};

pub const DEFAULT_BETA: f64 = 1e7;
pub const DEFAULT_K: usize = 4;
/// Supports larger than this are sampled through an alias table.
pub const ALIAS_MIN_SUPPORT: usize = 1 << 12;

const EIGEN_STREAM: u64 = 0xE16;
const SAMPLE_STREAM: u64 = 0x5A3;

/// Provenance tag of the field built from ground-state overlaps.
pub const QUANTUM_OVERLAP: &str = "exact-finite-difference-quantum";

/// Truncated Boltzmann distribution over the computational basis,
/// `p_z ∝ Σ_j |⟨z|ψ_j⟩|² exp(−β (E_j − E_0))`.
pub fn ground_distribution(slice: &SpectralSlice, beta: f64) -> Result<DiscreteDistribution> {
    if slice.k() == 0 {
        return Err(Error::InvalidArgument("empty spectral slice".into()));
    }
    let e0 = slice.energies[0];
    let w: Vec<f64> = slice.energies.iter().map(|e| (-beta * (e - e0)).exp()).collect();
    let d = slice.vectors.nrows();
    let probs = (0..d)
        .map(|z| (0..slice.k()).map(|j| w[j] * slice.vectors[(z, j)].norm_sqr()).sum())
        .collect();
    DiscreteDistribution::from_weights(probs)
}

/// `count` outcomes drawn from `dist`; each outcome index is the bitstring,
/// qubit `q` in bit `q`.
pub fn sample_bitstrings(dist: &DiscreteDistribution, count: usize, r: &mut Rng) -> Result<Vec<u64>> {
    let support: Vec<usize> = dist.support().collect();
    let weights: Vec<f64> = support.iter().map(|&z| dist.probs()[z]).collect();
    let bad = |e: &dyn std::fmt::Display| Error::Numeric(format!("cannot sample distribution: {e}"));
    let picks: Vec<usize> = if support.len() > ALIAS_MIN_SUPPORT {
        let table = WeightedAliasIndex::new(weights).map_err(|e| bad(&e))?;
        (0..count).map(|_| table.sample(r)).collect()
    } else {
        let table = WeightedIndex::new(&weights).map_err(|e| bad(&e))?;
        (0..count).map(|_| table.sample(r)).collect()
    };
    Ok(picks.into_iter().map(|i| support[i] as u64).collect())
}

/// Settings for [`quantum_grid_ground_truth`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruthConfig {
    pub beta: f64,
    pub k: usize,
    pub samples_per_point: usize,
}

impl Default for GroundTruthConfig {
    fn default() -> Self {
        Self {
            beta: DEFAULT_BETA,
            k: DEFAULT_K,
            samples_per_point: 140,
        }
    }
}

/// Exact FIM fields and samples for a quantum model on a node grid.
#[derive(Debug, Clone)]
pub struct QuantumGroundTruth {
    /// From the classical fidelity of the measured distributions.
    pub classical: FimField,
    /// From `|⟨ψ_0(a)|ψ_0(b)⟩|`; equals `classical` away from level crossings
    /// when the ground states are real with a fixed sign pattern.
    pub quantum: FimField,
    pub dataset: SampleDataset,
}

struct NodeSolution {
    dist: DiscreteDistribution,
    ground: DVector<C64>,
    samples: Vec<u64>,
}

fn solve_node(spec: &ModelSpec, grid: &ParameterGrid, node: usize, cfg: &GroundTruthConfig, seed: u64) -> Result<NodeSolution> {
    let h = build_hamiltonian(spec, &grid.coords(node))?;
    let slice = lowest_eigs(&h, cfg.k.min(h.dim()), rng::stream(seed, &[EIGEN_STREAM, node as u64]).next_u64())?;
    let dist = ground_distribution(&slice, cfg.beta)?;
    let samples = sample_bitstrings(&dist, cfg.samples_per_point, &mut rng::stream(seed, &[SAMPLE_STREAM, node as u64]))?;
    Ok(NodeSolution {
        dist,
        ground: slice.ground(),
        samples,
    })
}

/// Diagonalizes every grid node, assembles both finite-difference fields on
/// the center grid and samples bitstrings per node.
pub fn quantum_grid_ground_truth(spec: &ModelSpec, grid: &ParameterGrid, cfg: &GroundTruthConfig, seed: u64) -> Result<QuantumGroundTruth> {
    if grid.dims() != spec.dims() {
        return Err(Error::DimensionMismatch {
            left: grid.dims(),
            right: spec.dims(),
        });
    }
    if cfg.k == 0 || !(cfg.beta > 0.0) {
        return Err(Error::InvalidArgument(format!("need k >= 1 and beta > 0, got k={} beta={}", cfg.k, cfg.beta)));
    }
    let nodes: Vec<NodeSolution> = (0..grid.len())
        .into_par_iter()
        .map(|i| solve_node(spec, grid, i, cfg, seed))
        .collect::<Result<_>>()?;
    let classical = assemble_center_field(grid, Provenance::ExactFiniteDifference, |e| {
        Ok((1.0 - classical_fidelity(&nodes[e.a].dist, &nodes[e.b].dist)?, 0.0))
    })?;
    let quantum = assemble_center_field(grid, Provenance::Other(QUANTUM_OVERLAP.into()), |e| {
        let overlap = nodes[e.a].ground.dotc(&nodes[e.b].ground).norm().min(1.0);
        Ok((1.0 - overlap, 0.0))
    })?;
    let manifest = RunManifest::new(spec.kind.name(), seed)
        .with("size", spec.size)
        .with("beta", cfg.beta)
        .with("k", cfg.k)
        .with("samples_per_point", cfg.samples_per_point);
    let mut dataset = SampleDataset::new(manifest, grid.clone(), spec.n_qubits());
    for (p, node) in nodes.iter().enumerate() {
        for &z in &node.samples {
            dataset.push(p, &[z], None);
        }
    }
    Ok(QuantumGroundTruth {
        classical,
        quantum,
        dataset,
    })
}
