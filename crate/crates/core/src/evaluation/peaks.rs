use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::store::{FimField, Metric, ParameterGrid};

/// A local maximum of a sampled curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalPeak {
    pub index: usize,
    pub height: f64,
    pub prominence: f64,
}

/// Interior local maxima with prominence at least `cutoff`.
///
/// A plateau counts once, at its midpoint (lower middle for even widths).
/// Prominence is the height above the higher of the two lowest points
/// between the peak and the nearest strictly higher sample on each side (or
/// the slice end).
pub fn find_peaks(values: &[f64], cutoff: f64) -> Vec<LocalPeak> {
    let n = values.len();
    let mut out = Vec::new();
    if n < 3 {
        return out;
    }
    let mut i = 1;
    while i + 1 < n {
        if values[i] > values[i - 1] {
            let mut j = i;
            while j + 1 < n && values[j + 1] == values[i] {
                j += 1;
            }
            if j + 1 < n && values[j + 1] < values[i] {
                let h = values[i];
                let left = values[..i].iter().rposition(|&v| v > h).unwrap_or(0);
                let right = values[j + 1..].iter().position(|&v| v > h).map_or(n - 1, |k| j + 1 + k);
                let lo = values[left..i].iter().copied().fold(f64::INFINITY, f64::min);
                let ro = values[j + 1..=right].iter().copied().fold(f64::INFINITY, f64::min);
                let prominence = h - lo.max(ro);
                if prominence >= cutoff {
                    out.push(LocalPeak {
                        index: (i + j) / 2,
                        height: h,
                        prominence,
                    });
                }
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Prominence cutoff, absolute or relative to the slice range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cutoff {
    Absolute(f64),
    /// Fraction of `max − min` of each slice.
    Relative(f64),
}

impl Default for Cutoff {
    fn default() -> Self {
        Cutoff::Relative(0.1)
    }
}

impl Cutoff {
    pub fn resolve(&self, values: &[f64]) -> f64 {
        match *self {
            Cutoff::Absolute(c) => c,
            Cutoff::Relative(f) => {
                let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let min = values.iter().copied().fold(f64::INFINITY, f64::min);
                f * (max - min)
            }
        }
    }
}

impl fmt::Display for Cutoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cutoff::Absolute(c) => write!(f, "{c}"),
            Cutoff::Relative(c) => write!(f, "{c}rel"),
        }
    }
}

impl FromStr for Cutoff {
    type Err = Error;

    /// `"0.1rel"` is relative, a bare number absolute.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("bad prominence cutoff {s:?}"));
        let (num, rel) = match s.strip_suffix("rel") {
            Some(n) => (n, true),
            None => (s, false),
        };
        let v: f64 = num.parse().map_err(|_| bad())?;
        if !(v >= 0.0) {
            return Err(bad());
        }
        Ok(if rel { Cutoff::Relative(v) } else { Cutoff::Absolute(v) })
    }
}

/// Distances deciding which peaks are near the slice boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryRule {
    /// Peaks closer than this to an end are not inner.
    pub near: f64,
    /// A neighbour-slice peak this close to an end can add an outer peak.
    pub neighbour: f64,
}

impl Default for BoundaryRule {
    fn default() -> Self {
        Self {
            near: 6.0 / 64.0,
            neighbour: 3.0 / 64.0,
        }
    }
}

impl BoundaryRule {
    /// The default distances expressed in grid steps instead of absolute
    /// units: `6` and `3` spacings at resolution `r`.
    pub fn grid_relative(resolution: usize) -> Self {
        let h = 1.0 / resolution as f64;
        Self {
            near: 6.0 * h,
            neighbour: 3.0 * h,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeakKind {
    Inner,
    Outer,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    /// Coordinate along the slice, in `[0, 1]`.
    pub position: f64,
    pub height: f64,
    pub prominence: f64,
    pub kind: PeakKind,
}

/// Which slice ends a neighbouring slice had a peak close to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NeighbourFlags {
    pub low: bool,
    pub high: bool,
}

fn boundary_distance(x: f64) -> f64 {
    x.min(1.0 - x)
}

/// Labels peaks found with cutoff `C/2` as inner (prominence at least `C`
/// and at least `rule.near` from both ends) or outer, then appends an outer
/// peak at an end flagged by a neighbouring slice when this slice has no peak
/// within `rule.near` of it. The appended peak takes the end sample's height
/// and zero prominence.
pub fn classify_inner_outer(
    peaks: &[LocalPeak],
    positions: &[f64],
    values: &[f64],
    cutoff: f64,
    rule: BoundaryRule,
    neighbours: NeighbourFlags,
) -> Vec<Peak> {
    let mut out: Vec<Peak> = peaks
        .iter()
        .filter(|p| p.prominence >= 0.5 * cutoff)
        .map(|p| {
            let x = positions[p.index];
            let inner = p.prominence >= cutoff && boundary_distance(x) >= rule.near;
            Peak {
                position: x,
                height: p.height,
                prominence: p.prominence,
                kind: if inner { PeakKind::Inner } else { PeakKind::Outer },
            }
        })
        .collect();
    let last = values.len().saturating_sub(1);
    for (flag, end, k) in [(neighbours.low, 0.0, 0), (neighbours.high, 1.0, last)] {
        if flag && !out.iter().any(|p| (p.position - end).abs() < rule.near) {
            out.push(Peak {
                position: end,
                height: values.get(k).copied().unwrap_or(0.0),
                prominence: 0.0,
                kind: PeakKind::Outer,
            });
        }
    }
    out.sort_by(|a, b| a.position.total_cmp(&b.position));
    out
}

/// Identifies a slice: `axis` varies, `fixed` indexes the other axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SliceId {
    pub axis: usize,
    pub fixed: usize,
}

impl fmt::Display for SliceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.axis, self.fixed)
    }
}

impl FromStr for SliceId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::malformed("slice id", s);
        let (a, f) = s.split_once(':').ok_or_else(bad)?;
        Ok(Self {
            axis: a.parse().map_err(|_| bad())?,
            fixed: f.parse().map_err(|_| bad())?,
        })
    }
}

/// Ground-truth peaks of one slice.
#[derive(Debug, Clone, PartialEq)]
pub struct SlicePeaks {
    pub id: SliceId,
    /// Resolved prominence cutoff `C` for this slice.
    pub cutoff: f64,
    pub peaks: Vec<Peak>,
}

impl SlicePeaks {
    /// `n_s`: inner plus outer peaks, the guess budget.
    pub fn budget(&self) -> usize {
        self.peaks.len()
    }

    pub fn inner(&self) -> impl Iterator<Item = &Peak> {
        self.peaks.iter().filter(|p| p.kind == PeakKind::Inner)
    }
}

/// The slices of a field: `g_00` along axis 0 for every row and, in 2D,
/// `g_11` along axis 1 for every column.
pub fn field_slices(field: &FimField) -> Vec<(SliceId, Vec<f64>, Vec<f64>)> {
    let grid = &field.grid;
    let positions: Vec<f64> = (0..grid.per_axis()).map(|l| grid.axis_coord(l)).collect();
    if grid.dims() == 1 {
        return vec![(SliceId { axis: 0, fixed: 0 }, positions, field.slice(0, 0, 0, 0))];
    }
    let mut out = Vec::new();
    for axis in 0..2 {
        for fixed in 0..grid.per_axis() {
            out.push((SliceId { axis, fixed }, positions.clone(), field.slice(axis, fixed, axis, axis)));
        }
    }
    out
}

/// Ground-truth inner and outer peaks for every slice of `field`.
pub fn fim_field_to_slice_peaks(field: &FimField, cutoff: Cutoff, rule: BoundaryRule) -> Vec<SlicePeaks> {
    let slices = field_slices(field);
    let found: Vec<(f64, Vec<LocalPeak>)> = slices
        .iter()
        .map(|(_, _, v)| {
            let c = cutoff.resolve(v);
            (c, find_peaks(v, 0.5 * c))
        })
        .collect();
    let near_end = |k: usize, end: f64| -> bool {
        let (_, pos, _) = &slices[k];
        found[k].1.iter().any(|p| (pos[p.index] - end).abs() < rule.neighbour)
    };
    slices
        .iter()
        .enumerate()
        .map(|(k, (id, pos, values))| {
            let mut flags = NeighbourFlags::default();
            if field.grid.dims() == 2 {
                let n = field.grid.per_axis();
                let neighbours = [id.fixed.checked_sub(1), (id.fixed + 1 < n).then_some(id.fixed + 1)];
                for f in neighbours.into_iter().flatten() {
                    let nk = id.axis * n + f;
                    flags.low |= near_end(nk, 0.0);
                    flags.high |= near_end(nk, 1.0);
                }
            }
            let (c, local) = &found[k];
            SlicePeaks {
                id: *id,
                cutoff: *c,
                peaks: classify_inner_outer(local, pos, values, *c, rule, flags),
            }
        })
        .collect()
}

/// Node-grid field averaged onto the centers of its grid squares, so an
/// estimate can be compared slice by slice with a finite-difference truth.
pub fn node_field_to_centers(field: &FimField) -> Result<FimField> {
    let grid = &field.grid;
    let centers: ParameterGrid = grid.centers()?;
    let entries = (0..centers.len())
        .map(|c| {
            let (i, j) = centers.unravel(c);
            let corners: Vec<usize> = if grid.dims() == 1 {
                vec![i, i + 1]
            } else {
                vec![grid.index(i, j), grid.index(i + 1, j), grid.index(i, j + 1), grid.index(i + 1, j + 1)]
            };
            let k = 1.0 / corners.len() as f64;
            let mut m = Metric::default();
            for &n in &corners {
                m.g00 += k * field.entries[n].g00;
                m.g01 += k * field.entries[n].g01;
                m.g11 += k * field.entries[n].g11;
            }
            m
        })
        .collect();
    FimField::new(centers, entries, field.provenance.clone())
}
