use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng;
use crate::store::{SampleDataset, Split};

const PAIR_STREAM: u64 = 0xBA15;

/// Offsets `δλ = k / r` with each axis step `k` uniform in `-m..=m`
/// (nonzero in 1D, not all zero in 2D).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeltaScheme {
    pub max_step: i32,
}

impl Default for DeltaScheme {
    fn default() -> Self {
        Self { max_step: 3 }
    }
}

impl DeltaScheme {
    pub fn draw(&self, dims: usize, r: &mut rng::Rng) -> [i32; 2] {
        let m = self.max_step;
        loop {
            let mut k = [0i32; 2];
            for s in k.iter_mut().take(dims) {
                *s = r.random_range(-m..=m);
            }
            if k != [0, 0] {
                return k;
            }
        }
    }
}

/// One classifier example: a sample `x` and the segment `λ ± δλ/2` it sits
/// on an end of.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairRecord {
    /// Grid point that produced `x`.
    pub point: usize,
    /// Index of `x` within that point's samples.
    pub sample: usize,
    pub lambda: [f64; 2],
    /// Offset in grid steps; `δλ = steps / r`.
    pub steps: [i32; 2],
    /// `true` when `x` came from `λ + δλ/2`.
    pub label: bool,
}

impl PairRecord {
    pub fn delta(&self, resolution: usize) -> [f64; 2] {
        let r = resolution as f64;
        [self.steps[0] as f64 / r, self.steps[1] as f64 / r]
    }
}

/// Pair records for one pass over the `split` samples of `dataset`.
///
/// Every sample gets `pairs_per_sample` draws of label and offset. Draws whose
/// other endpoint leaves the grid are dropped rather than redrawn: redrawing
/// would make offsets near the boundary more likely from the inner endpoint,
/// so the two ends of a segment would no longer be equally likely a priori.
pub fn make_pairs(dataset: &SampleDataset, split: Split, pairs_per_sample: usize, scheme: DeltaScheme, seed: u64, epoch: u64) -> Result<Vec<PairRecord>> {
    if scheme.max_step < 1 {
        return Err(Error::InvalidArgument(format!("max_step must be >= 1, got {}", scheme.max_step)));
    }
    let grid = &dataset.grid;
    let dims = grid.dims();
    let n = grid.per_axis() as i64;
    let mut out = Vec::new();
    for point in 0..grid.len() {
        let mut r = rng::stream(seed, &[PAIR_STREAM, epoch, point as u64]);
        let (l0, l1) = grid.unravel(point);
        let here = [l0 as i64, l1 as i64];
        for (sample, _) in dataset.samples_in(point, split) {
            for _ in 0..pairs_per_sample {
                let label: bool = r.random();
                let steps = scheme.draw(dims, &mut r);
                let sign = if label { -1 } else { 1 };
                let other: Vec<i64> = (0..dims).map(|a| here[a] + sign * steps[a] as i64).collect();
                if other.iter().any(|&o| o < 0 || o >= n) {
                    continue;
                }
                let mut lambda = [0.0; 2];
                for a in 0..dims {
                    let x = grid.axis_coord(here[a] as usize);
                    let y = grid.axis_coord(other[a] as usize);
                    lambda[a] = 0.5 * (x + y);
                }
                out.push(PairRecord {
                    point,
                    sample,
                    lambda,
                    steps,
                    label,
                });
            }
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidArgument(format!("no {split:?} samples to build pairs from")));
    }
    Ok(out)
}
