use rayon::prelude::*;

use super::distribution::{classical_fidelity, DiscreteDistribution};
use super::states::QuantumState;
use crate::error::{Error, Result};
use crate::store::field::{FimField, Metric, Provenance};
use crate::store::grid::ParameterGrid;

/// `g̃ = 8 (1 − F_c(p_a, p_b)) / δ²`.
pub fn finite_diff_fim_segment(p_a: &DiscreteDistribution, p_b: &DiscreteDistribution, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(8.0 * (1.0 - classical_fidelity(p_a, p_b)?) / (delta * delta))
}

/// `g̃ = 8 (1 − |⟨ψ_a|ψ_b⟩|) / δ²`.
pub fn finite_diff_fim_segment_quantum(a: &QuantumState, b: &QuantumState, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(8.0 * (1.0 - a.overlap(b)?) / (delta * delta))
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("finite-difference step must be positive, got {delta}")));
    }
    Ok(())
}

/// Node pair whose infidelity is requested by [`assemble_center_field`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
}

/// FIM on the center grid from node-pair infidelities `1 − F`.
///
/// `infidelity(a, b)` returns an estimate of `1 − F` between two nodes and its
/// standard error. In 2D, `g00` and `g11` average the two parallel edges of
/// each square, and `g01 = (g₊₊ − g₋₋) / 4` from the two diagonals.
pub fn assemble_center_field<F>(grid: &ParameterGrid, provenance: Provenance, infidelity: F) -> Result<FimField>
where
    F: Fn(Edge) -> Result<(f64, f64)> + Sync,
{
    if grid.per_axis() < 2 {
        return Err(Error::InvalidArgument("grid needs at least two nodes per axis".into()));
    }
    let centers = grid.centers()?;
    let r2 = (grid.resolution() as f64).powi(2);
    let n = grid.per_axis();
    let per_center: Vec<(Metric, Metric)> = (0..centers.len())
        .into_par_iter()
        .map(|c| -> Result<(Metric, Metric)> {
            let (i, j) = centers.unravel(c);
            let g = |a: usize, b: usize| -> Result<(f64, f64)> {
                let (f, se) = infidelity(Edge { a, b })?;
                Ok((8.0 * r2 * f, 8.0 * r2 * se))
            };
            if grid.dims() == 1 {
                let (v, s) = g(i, i + 1)?;
                return Ok((Metric::scalar(v), Metric::scalar(s)));
            }
            debug_assert!(i + 1 < n && j + 1 < n);
            let node = |x, y| grid.index(x, y);
            let (h0, hs0) = g(node(i, j), node(i + 1, j))?;
            let (h1, hs1) = g(node(i, j + 1), node(i + 1, j + 1))?;
            let (v0, vs0) = g(node(i, j), node(i, j + 1))?;
            let (v1, vs1) = g(node(i + 1, j), node(i + 1, j + 1))?;
            let (pp, sp) = g(node(i, j), node(i + 1, j + 1))?;
            let (mm, sm) = g(node(i + 1, j), node(i, j + 1))?;
            let value = Metric {
                g00: 0.5 * (h0 + h1),
                g11: 0.5 * (v0 + v1),
                g01: 0.25 * (pp - mm),
            };
            let se = Metric {
                g00: 0.5 * hs0.hypot(hs1),
                g11: 0.5 * vs0.hypot(vs1),
                g01: 0.25 * sp.hypot(sm),
            };
            Ok((value, se))
        })
        .collect::<Result<_>>()?;
    let (entries, se): (Vec<_>, Vec<_>) = per_center.into_iter().unzip();
    let field = FimField::new(centers, entries, provenance)?;
    if se.iter().any(|m| *m != Metric::default()) {
        field.with_stderr(se)
    } else {
        Ok(field)
    }
}

/// Exact finite-difference FIM from one distribution per grid node.
pub fn grid_fim_from_distributions(dists: &[DiscreteDistribution], grid: &ParameterGrid) -> Result<FimField> {
    if dists.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            left: dists.len(),
            right: grid.len(),
        });
    }
    assemble_center_field(grid, Provenance::ExactFiniteDifference, |e| {
        Ok((1.0 - classical_fidelity(&dists[e.a], &dists[e.b])?, 0.0))
    })
}
