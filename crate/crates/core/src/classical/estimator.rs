//! FIM from samples with known unnormalized log-probabilities.

use rayon::prelude::*;

use super::family::ClassicalFamily;
use super::lattice::BondSums;
use crate::error::{Error, Result};
use crate::fidelity::finite_diff::assemble_center_field;
use crate::store::dataset::SampleDataset;
use crate::store::field::{FimField, Provenance};

pub const JACKKNIFE_BLOCKS: usize = 20;

/// Finite-difference FIM estimate between two parameter points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McmcEstimate {
    /// Estimate of `1 − F_c(λ₋, λ₊)`.
    pub infidelity: f64,
    pub infidelity_se: f64,
    /// `8 (1 − F_c) / δ²`.
    pub g: f64,
    pub g_se: f64,
}

fn log_mean_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    let n = xs.clone().count() as f64;
    max + (xs.map(|x| (x - max).exp()).sum::<f64>() / n).ln()
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

/// `E_q[1 − 1/cosh(ln r_x)]` with `q = (P₋ + P₊)/2`.
///
/// Each entry is `[u₋(x), u₊(x)]`: reduced energies `βH` of one sample under
/// both parameter points. `minus` holds samples drawn at `λ₋`, `plus` at `λ₊`.
fn point_estimate(minus: &[[f64; 2]], plus: &[[f64; 2]]) -> Result<f64> {
    let e_minus = mean(minus.iter().map(|u| u[0]));
    let e_plus = mean(plus.iter().map(|u| u[1]));
    // ln P̃₊(x) − ln P̃₋(x) after the per-λ mean shift.
    let log_ratio = |u: &[f64; 2]| -(u[1] - e_plus) + (u[0] - e_minus);
    let lr_minus = minus.iter().map(log_ratio);
    let lr_plus = plus.iter().map(log_ratio);
    // Z₋/Z₊ = E₊[P̃₋/P̃₊] = 1 / E₋[P̃₊/P̃₋]; use the geometric mean.
    let log_z = 0.5 * (log_mean_exp(lr_plus.clone().map(|x| -x)) - log_mean_exp(lr_minus.clone()));
    if !log_z.is_finite() {
        return Err(Error::Numeric(format!("partition-function ratio is not finite (log = {log_z})")));
    }
    let f = |lr: f64| {
        let ln_r = 0.5 * lr + 0.5 * log_z;
        1.0 - 1.0 / ln_r.cosh()
    };
    Ok(0.5 * (mean(lr_minus.map(f)) + mean(lr_plus.map(f))))
}

/// Delete-one-block jackknife over contiguous blocks of both sample sets.
fn jackknife(minus: &[[f64; 2]], plus: &[[f64; 2]]) -> Result<f64> {
    let b = JACKKNIFE_BLOCKS.min(minus.len()).min(plus.len());
    if b < 2 {
        return Ok(f64::NAN);
    }
    let bounds = |n: usize, k: usize| (k * n / b, (k + 1) * n / b);
    let mut reps = Vec::with_capacity(b);
    for k in 0..b {
        let (m0, m1) = bounds(minus.len(), k);
        let (p0, p1) = bounds(plus.len(), k);
        let m: Vec<_> = minus[..m0].iter().chain(&minus[m1..]).copied().collect();
        let p: Vec<_> = plus[..p0].iter().chain(&plus[p1..]).copied().collect();
        reps.push(point_estimate(&m, &p)?);
    }
    let avg = mean(reps.iter().copied());
    let var = reps.iter().map(|x| (x - avg).powi(2)).sum::<f64>() * (b as f64 - 1.0) / b as f64;
    Ok(var.sqrt())
}

/// FIM along `λ₊ − λ₋` from energy-tagged samples at both endpoints.
pub fn fim_from_mcmc(minus: &[[f64; 2]], plus: &[[f64; 2]], delta: f64) -> Result<McmcEstimate> {
    if minus.is_empty() || plus.is_empty() {
        return Err(Error::InvalidArgument("both sample sets must be nonempty".into()));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    if minus.iter().chain(plus).any(|u| !u[0].is_finite() || !u[1].is_finite()) {
        return Err(Error::Numeric("non-finite energy".into()));
    }
    let inf = point_estimate(minus, plus)?;
    let se = jackknife(minus, plus)?;
    let scale = 8.0 / (delta * delta);
    Ok(McmcEstimate {
        infidelity: inf,
        infidelity_se: se,
        g: scale * inf,
        g_se: scale * se,
    })
}

/// Ground-truth FIM field of a classical dataset from its samples.
///
/// Energies are recomputed from the stored bits under each endpoint.
pub fn mcmc_field(dataset: &SampleDataset, family: &ClassicalFamily) -> Result<FimField> {
    if dataset.n_bits != family.n_sites() {
        return Err(Error::DimensionMismatch {
            left: dataset.n_bits,
            right: family.n_sites(),
        });
    }
    let grid = &dataset.grid;
    let sums: Vec<Vec<BondSums>> = (0..grid.len())
        .into_par_iter()
        .map(|p| (0..dataset.count(p)).map(|t| family.bond_sums(dataset.sample(p, t))).collect())
        .collect();
    let field = assemble_center_field(grid, Provenance::Mcmc, |e| {
        let (la, lb) = (grid.point(e.a), grid.point(e.b));
        let tag = |s: &BondSums| -> Result<[f64; 2]> { Ok([family.reduced_energy(la, s)?, family.reduced_energy(lb, s)?]) };
        let minus: Vec<_> = sums[e.a].iter().map(tag).collect::<Result<_>>()?;
        let plus: Vec<_> = sums[e.b].iter().map(tag).collect::<Result<_>>()?;
        let est = fim_from_mcmc(&minus, &plus, 1.0)?;
        Ok((est.infidelity, est.infidelity_se))
    })?;
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fidelity::{classical_fidelity, DiscreteDistribution};
    use proptest::prelude::*;

    #[test]
    fn identical_samples_give_zero() {
        let s = vec![[1.0, 1.0], [2.0, 2.0], [-0.5, -0.5]];
        assert_eq!(fim_from_mcmc(&s, &s, 0.1).unwrap().g, 0.0);
        assert!(fim_from_mcmc(&[], &s, 0.1).is_err());
    }

    /// Two outcomes, `P̃₋ = (1, 1)` and `P̃₊ = (9, 1)`, with samples in exact
    /// proportion: the estimate equals `8(1 − F_c)/δ²`.
    #[test]
    fn two_state_closed_form() {
        let u = |x: usize| [0.0, if x == 0 { -(9.0f64).ln() } else { 0.0 }];
        let minus: Vec<_> = (0..10).map(|i| u(i % 2)).collect();
        let plus: Vec<_> = (0..10).map(|i| u(usize::from(i == 9))).collect();
        let delta = 0.1;
        let est = fim_from_mcmc(&minus, &plus, delta).unwrap();
        let p = DiscreteDistribution::new(vec![0.5, 0.5]).unwrap();
        let q = DiscreteDistribution::new(vec![0.9, 0.1]).unwrap();
        let exact = 8.0 * (1.0 - classical_fidelity(&p, &q).unwrap()) / (delta * delta);
        assert!((est.g - exact).abs() < 1e-12 * exact, "{} vs {exact}", est.g);
    }

    #[test]
    fn extreme_energies_stay_finite() {
        let minus = vec![[0.0, 1e6], [1.0, 2e6]];
        let plus = vec![[-1e6, 0.0], [-2e6, 1.0]];
        let est = fim_from_mcmc(&minus, &plus, 1.0).unwrap();
        assert!(est.g.is_finite());
        assert!(fim_from_mcmc(&[[f64::NAN, 0.0]], &plus, 1.0).is_err());
    }

    proptest! {
        /// Swapping endpoints swaps the roles of the two Z-ratio estimators.
        #[test]
        fn symmetric_under_swap(us in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 4..40), split in 1usize..3) {
            let k = us.len() / (split + 1);
            let all: Vec<[f64; 2]> = us.iter().map(|&(a, b)| [a, b]).collect();
            let (m, p) = all.split_at(k.max(1));
            let swap = |v: &[[f64; 2]]| v.iter().map(|u| [u[1], u[0]]).collect::<Vec<_>>();
            let a = fim_from_mcmc(m, p, 1.0).unwrap().g;
            let b = fim_from_mcmc(&swap(p), &swap(m), 1.0).unwrap().g;
            prop_assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()));
        }
    }
}
