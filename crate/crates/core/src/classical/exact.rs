use super::lattice::{bits_to_spins, Couplings, IsingLattice};
use crate::error::{Error, Result};
use crate::fidelity::DiscreteDistribution;

pub const MAX_EXACT_SITES: usize = 24;

/// Exact Gibbs distribution over all `2^(L²)` configurations.
///
/// Outcome `c` is the configuration whose bit `i` is set when site `i` has
/// spin −1.
pub fn exact_enumeration_distribution(l: usize, c: &Couplings, t: f64) -> Result<DiscreteDistribution> {
    let n = l * l;
    if n > MAX_EXACT_SITES || l > 4 {
        return Err(Error::InvalidArgument(format!("exact enumeration limited to L <= 4, got L = {l}")));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("temperature must be positive, got {t}")));
    }
    let mut lat = IsingLattice::new(l)?;
    let log_w: Vec<f64> = (0..1u64 << n)
        .map(|cfg| {
            lat.set_spins(&bits_to_spins(&[cfg], n));
            -c.energy(&lat.sums()) / t
        })
        .collect();
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    DiscreteDistribution::from_weights(log_w.iter().map(|w| (w - max).exp()).collect())
}
