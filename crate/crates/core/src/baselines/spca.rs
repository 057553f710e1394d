use log::warn;
use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::store::{FimField, Metric, ParameterGrid, Provenance, SampleDataset};

/// Kernel between the sample sets of grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub k: DMatrix<f64>,
    pub tau: f64,
    pub gamma: f64,
}

/// Number of bits on which two packed samples agree.
pub fn matching_bits(a: &[u64], b: &[u64], n_bits: usize) -> usize {
    let differ: u32 = a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum();
    n_bits - differ as usize
}

/// `K(λ, λ') = exp[τ/(T_λ T_λ') Σ_{t,t'} exp((γ/n) m(x_t, x'_t'))]` where `m`
/// counts matching bits; samples of both splits are used.
pub fn spca_kernel(dataset: &SampleDataset, tau: f64, gamma: f64) -> Result<KernelMatrix> {
    let n_points = dataset.points.len();
    if let Some(p) = (0..n_points).find(|&p| dataset.count(p) == 0) {
        return Err(Error::InvalidArgument(format!("grid point {p} has no samples")));
    }
    let n = dataset.n_bits;
    if n == 0 {
        return Err(Error::InvalidArgument("samples have no bits".into()));
    }
    let table: Vec<f64> = (0..=n).map(|m| (gamma * m as f64 / n as f64).exp()).collect();
    let w = dataset.words_per_sample();
    let rows: Vec<Vec<f64>> = (0..n_points)
        .into_par_iter()
        .map(|a| {
            let xa = &dataset.points[a].words;
            (0..=a)
                .map(|b| {
                    let xb = &dataset.points[b].words;
                    let mut s = 0.0;
                    for sa in xa.chunks_exact(w) {
                        for sb in xb.chunks_exact(w) {
                            s += table[matching_bits(sa, sb, n)];
                        }
                    }
                    (tau * s / (dataset.count(a) * dataset.count(b)) as f64).exp()
                })
                .collect()
        })
        .collect();
    let k = DMatrix::from_fn(n_points, n_points, |i, j| if j <= i { rows[i][j] } else { rows[j][i] });
    Ok(KernelMatrix { k, tau, gamma })
}

/// First principal components of every grid point, scaled by `√eigenvalue`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingField {
    pub grid: ParameterGrid,
    /// `coords[(point, component)]`.
    pub coords: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
}

impl EmbeddingField {
    pub fn components(&self) -> usize {
        self.coords.ncols()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("# eigenvalues=");
        out.push_str(&self.eigenvalues.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
        out.push_str("\nl0\tl1\tlambda0\tlambda1");
        for c in 0..self.components() {
            out.push_str(&format!("\tpc{c}"));
        }
        out.push('\n');
        for i in 0..self.grid.len() {
            let (l0, l1) = self.grid.unravel(i);
            let p = self.grid.point(i);
            out.push_str(&format!("{l0}\t{l1}\t{}\t{}", p[0], p[1]));
            for c in 0..self.components() {
                out.push_str(&format!("\t{}", self.coords[(i, c)]));
            }
            out.push('\n');
        }
        out
    }

    /// Metric pulled back from the embedding, `Σ_c ∂_μ e_c ∂_ν e_c`, by
    /// finite differences on the center grid. Peaks of this field mark where
    /// the embedding moves fastest, which lets the evaluation tools read
    /// boundaries off SPCA output.
    pub fn pullback_metric(&self) -> Result<FimField> {
        let grid = &self.grid;
        let centers = grid.centers()?;
        let r = grid.resolution() as f64;
        let entries = (0..centers.len())
            .map(|ci| {
                let (i, j) = centers.unravel(ci);
                let mut d = [vec![0.0; self.components()], vec![0.0; self.components()]];
                for c in 0..self.components() {
                    let e = |a: usize, b: usize| self.coords[(grid.index(a, b), c)];
                    if grid.dims() == 1 {
                        d[0][c] = r * (e(i + 1, 0) - e(i, 0));
                    } else {
                        d[0][c] = 0.5 * r * (e(i + 1, j) - e(i, j) + e(i + 1, j + 1) - e(i, j + 1));
                        d[1][c] = 0.5 * r * (e(i, j + 1) - e(i, j) + e(i + 1, j + 1) - e(i + 1, j));
                    }
                }
                let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
                Metric {
                    g00: dot(&d[0], &d[0]),
                    g01: dot(&d[0], &d[1]),
                    g11: dot(&d[1], &d[1]),
                }
            })
            .collect();
        FimField::new(centers, entries, Provenance::Other("spca-pullback".into()))
    }
}

/// Kernel PCA: double-centers `K`, keeps the top `m` positive eigenvalues
/// and returns each point's coordinates along them.
///
/// Fewer than `m` components are returned when `K` has fewer positive
/// eigenvalues; negative eigenvalues are dropped.
pub fn kernel_pca(kernel: &KernelMatrix, grid: &ParameterGrid, m: usize) -> Result<EmbeddingField> {
    if m == 0 {
        return Err(Error::InvalidArgument("need at least one component".into()));
    }
    let n = kernel.k.nrows();
    if n != grid.len() {
        return Err(Error::DimensionMismatch { left: n, right: grid.len() });
    }
    let row_means: Vec<f64> = (0..n).map(|i| kernel.k.row(i).mean()).collect();
    let total = row_means.iter().sum::<f64>() / n as f64;
    let centered = DMatrix::from_fn(n, n, |i, j| kernel.k[(i, j)] - row_means[i] - row_means[j] + total);
    let eig = SymmetricEigen::new(centered);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let scale = eig.eigenvalues.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let positive: Vec<usize> = order.into_iter().filter(|&i| eig.eigenvalues[i] > 1e-12 * scale).collect();
    if positive.len() < m {
        warn!("kernel has {} positive eigenvalues; returning that many components instead of {m}", positive.len());
    }
    let keep = &positive[..m.min(positive.len())];
    let mut coords = DMatrix::zeros(n, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        let v = eig.eigenvectors.column(i);
        // Fix the sign so the largest-magnitude entry is positive.
        let pivot = v.iter().copied().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        let s = sign * eig.eigenvalues[i].sqrt();
        for p in 0..n {
            coords[(p, c)] = s * v[p];
        }
    }
    Ok(EmbeddingField {
        grid: grid.clone(),
        coords,
        eigenvalues: keep.iter().map(|&i| eig.eigenvalues[i]).collect(),
    })
}
