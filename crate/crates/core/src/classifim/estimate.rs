use log::warn;
use rayon::prelude::*;

use super::network::{spins_of, Network, Workspace};
use crate::error::{Error, Result};
use crate::fidelity::DiscreteDistribution;
use crate::store::{FimField, Metric, ParameterGrid, Provenance, SampleDataset, Split};

/// Fewer test samples than this at a point flag the estimate there.
pub const MIN_POINT_SAMPLES: usize = 5;
/// Logits of the analytic classifier are clamped to `±LOGIT_CLAMP`.
pub const LOGIT_CLAMP: f64 = 30.0;
/// Probability floor applied before taking logarithms.
pub const PROB_FLOOR: f64 = 1e-12;

/// A trained (or exact) pair classifier.
pub trait Classifier: Sync {
    fn dims(&self) -> usize;

    /// `ln(p / (1 − p))` for the posterior that `x` came from `λ + δλ/2`.
    fn logit(&self, lambda: &[f64], delta: &[f64], x: &[u64]) -> f64;
}

/// The trained network, with offsets converted to grid steps.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuralClassifier {
    pub net: Network,
    pub resolution: usize,
}

impl Classifier for NeuralClassifier {
    fn dims(&self) -> usize {
        self.net.arch.dims
    }

    fn logit(&self, lambda: &[f64], delta: &[f64], x: &[u64]) -> f64 {
        let spins = spins_of(x, self.net.n_sites());
        let steps: Vec<f64> = delta.iter().map(|d| d * self.resolution as f64).collect();
        self.net.logit(&spins, lambda, &steps, &mut Workspace::default())
    }
}

/// Exact classifier built from the per-node distributions.
///
/// `ln P_λ(x)` is interpolated linearly (bilinearly in 2D) between nodes and
/// extrapolated linearly past the outermost nodes. Sample `x` is read as the
/// outcome index of the distributions.
#[derive(Debug, Clone)]
pub struct AnalyticClassifier {
    grid: ParameterGrid,
    log_p: Vec<Vec<f64>>,
    positive: Vec<Vec<bool>>,
}

/// Exact classifier for a grid of known distributions.
pub fn analytic_bc(grid: &ParameterGrid, truth: &[DiscreteDistribution]) -> Result<AnalyticClassifier> {
    if truth.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            left: truth.len(),
            right: grid.len(),
        });
    }
    if grid.per_axis() < 2 {
        return Err(Error::InvalidArgument("analytic classifier needs two nodes per axis".into()));
    }
    if truth.iter().any(|d| d.len() != truth[0].len()) {
        return Err(Error::InvalidArgument("distributions differ in length".into()));
    }
    Ok(AnalyticClassifier {
        grid: grid.clone(),
        log_p: truth.iter().map(|d| d.probs().iter().map(|p| p.max(PROB_FLOOR).ln()).collect()).collect(),
        positive: truth.iter().map(|d| d.probs().iter().map(|&p| p > 0.0).collect()).collect(),
    })
}

impl AnalyticClassifier {
    /// Cell index and fractional position along one axis.
    fn locate(&self, coord: f64) -> (usize, f64) {
        let t = coord * self.grid.resolution() as f64 - self.grid.offset();
        let i = (t.floor().max(0.0) as usize).min(self.grid.per_axis() - 2);
        (i, t - i as f64)
    }

    /// Interpolated `ln P_λ(z)` and whether any node entering the
    /// interpolation with nonzero weight has `P > 0`.
    fn ln_p(&self, lambda: &[f64], z: usize) -> (f64, bool) {
        let (i, u) = self.locate(lambda[0]);
        if self.grid.dims() == 1 {
            let v = (1.0 - u) * self.log_p[i][z] + u * self.log_p[i + 1][z];
            let pos = (u != 1.0 && self.positive[i][z]) || (u != 0.0 && self.positive[i + 1][z]);
            return (v, pos);
        }
        let (j, w) = self.locate(lambda[1]);
        let idx = [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)].map(|(a, b)| self.grid.index(a, b));
        let weights = [(1.0 - u) * (1.0 - w), u * (1.0 - w), (1.0 - u) * w, u * w];
        let v = idx.iter().zip(weights).map(|(&n, c)| c * self.log_p[n][z]).sum();
        (v, idx.iter().zip(weights).any(|(&n, c)| c != 0.0 && self.positive[n][z]))
    }
}

impl Classifier for AnalyticClassifier {
    fn dims(&self) -> usize {
        self.grid.dims()
    }

    fn logit(&self, lambda: &[f64], delta: &[f64], x: &[u64]) -> f64 {
        let z = x[0] as usize;
        if z >= self.log_p[0].len() {
            return 0.0;
        }
        let at = |s: f64| -> Vec<f64> { lambda.iter().zip(delta).map(|(l, d)| l + s * d).collect() };
        let (plus, in_plus) = self.ln_p(&at(0.5), z);
        let (minus, in_minus) = self.ln_p(&at(-0.5), z);
        match (in_plus, in_minus) {
            (false, false) => return 0.0,
            (true, false) => return LOGIT_CLAMP,
            (false, true) => return -LOGIT_CLAMP,
            _ => {}
        }
        (plus - minus).clamp(-LOGIT_CLAMP, LOGIT_CLAMP)
    }
}

/// ClassiFIM estimate on the node grid.
#[derive(Debug, Clone)]
pub struct FimEstimate {
    pub field: FimField,
    /// Samples averaged at each point.
    pub counts: Vec<usize>,
    /// Points with fewer than [`MIN_POINT_SAMPLES`] samples.
    pub flagged: Vec<usize>,
}

/// `ĝ(λ) = mean_x ∇L ∇Lᵀ` with `∂L/∂δλ_μ ≈ L(λ, h e_μ, x) / h`.
///
/// Because the logit is odd in `δλ`, this one-sided quotient equals the
/// central difference. Samples of `split` at each node are averaged.
pub fn estimate_fim(bc: &dyn Classifier, dataset: &SampleDataset, split: Split, h: f64) -> Result<FimEstimate> {
    let grid = &dataset.grid;
    if bc.dims() != grid.dims() {
        return Err(Error::DimensionMismatch {
            left: bc.dims(),
            right: grid.dims(),
        });
    }
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("gradient step must be positive, got {h}")));
    }
    let dims = grid.dims();
    let per_point: Vec<(Metric, usize)> = (0..grid.len())
        .into_par_iter()
        .map(|p| {
            let lambda = grid.coords(p);
            let mut sum = [0.0; 3];
            let mut n = 0;
            for (_, x) in dataset.samples_in(p, split) {
                let mut g = [0.0; 2];
                for (mu, gm) in g.iter_mut().enumerate().take(dims) {
                    let mut e = [0.0; 2];
                    e[mu] = h;
                    *gm = bc.logit(&lambda, &e[..dims], x) / h;
                }
                sum[0] += g[0] * g[0];
                sum[1] += g[0] * g[1];
                sum[2] += g[1] * g[1];
                n += 1;
            }
            let m = if n == 0 {
                Metric::default()
            } else {
                let k = 1.0 / n as f64;
                Metric {
                    g00: sum[0] * k,
                    g01: sum[1] * k,
                    g11: sum[2] * k,
                }
            };
            (m, n)
        })
        .collect();
    let (entries, counts): (Vec<_>, Vec<_>) = per_point.into_iter().unzip();
    let flagged: Vec<usize> = counts.iter().enumerate().filter(|(_, &c)| c < MIN_POINT_SAMPLES).map(|(i, _)| i).collect();
    if !flagged.is_empty() {
        warn!("{} grid points have fewer than {MIN_POINT_SAMPLES} samples", flagged.len());
    }
    Ok(FimEstimate {
        field: FimField::new(grid.clone(), entries, Provenance::Classifim)?,
        counts,
        flagged,
    })
}
