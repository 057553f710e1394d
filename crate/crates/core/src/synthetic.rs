//! Synthetic bitstring families with known distributions, used to validate
//! estimators and baselines.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::fidelity::DiscreteDistribution;
use crate::rng;
use crate::store::{dataset::pack_bits, ParameterGrid, RunManifest, SampleDataset};

/// Largest bit count for which full distributions are built.
pub const MAX_EXACT_BITS: usize = 16;

/// Samples of `n_bits` independent bits with `P(bit = 1) = p(λ)` at every
/// grid point.
pub fn bernoulli_dataset(grid: &ParameterGrid, n_bits: usize, count: usize, seed: u64, p: &dyn Fn(&[f64]) -> f64) -> Result<SampleDataset> {
    let manifest = RunManifest::new("bernoulli", seed).with("n_bits", n_bits).with("samples_per_point", count);
    let mut d = SampleDataset::new(manifest, grid.clone(), n_bits);
    for point in 0..grid.len() {
        let q = p(&grid.coords(point));
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidArgument(format!("bit probability {q} at point {point}")));
        }
        let mut r = rng::stream(seed, &[point as u64]);
        for _ in 0..count {
            let bits: Vec<bool> = (0..n_bits).map(|_| r.random_bool(q)).collect();
            d.push(point, &pack_bits(bits, n_bits), None);
        }
    }
    Ok(d)
}

/// Exact distributions matching [`bernoulli_dataset`], outcome index = bits.
pub fn bernoulli_distributions(grid: &ParameterGrid, n_bits: usize, p: &dyn Fn(&[f64]) -> f64) -> Result<Vec<DiscreteDistribution>> {
    if n_bits > MAX_EXACT_BITS {
        return Err(Error::InvalidArgument(format!("{n_bits} bits exceeds {MAX_EXACT_BITS}")));
    }
    (0..grid.len())
        .map(|point| {
            let q = p(&grid.coords(point));
            let probs = (0..1usize << n_bits)
                .map(|z| {
                    let ones = z.count_ones() as i32;
                    q.powi(ones) * (1.0 - q).powi(n_bits as i32 - ones)
                })
                .collect();
            DiscreteDistribution::from_weights(probs)
        })
        .collect()
}
