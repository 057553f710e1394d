use crate::error::{Error, Result};

/// Rectangular grid over the unit square (or unit interval).
///
/// Point `l` along an axis sits at `(l + offset) / resolution`. Node grids use
/// offset 0 (domain `[0, 1)`) or 1 (domain `(0, 1]`); the center grid of a node
/// grid has one point fewer per axis and offset increased by one half.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterGrid {
    dims: usize,
    resolution: usize,
    per_axis: usize,
    offset: f64,
}

impl ParameterGrid {
    pub fn new(dims: usize, resolution: usize, per_axis: usize, offset: f64) -> Result<Self> {
        if !(1..=2).contains(&dims) {
            return Err(Error::InvalidArgument(format!("grid dims must be 1 or 2, got {dims}")));
        }
        if resolution == 0 || per_axis == 0 {
            return Err(Error::InvalidArgument("grid must have at least one point".into()));
        }
        if offset < 0.0 || (per_axis as f64 - 1.0 + offset) > resolution as f64 {
            return Err(Error::InvalidArgument(format!(
                "grid with {per_axis} points, offset {offset} leaves [0, 1] at resolution {resolution}"
            )));
        }
        Ok(Self {
            dims,
            resolution,
            per_axis,
            offset,
        })
    }

    /// Node grid `{l / r}` for `l` in `0..r`.
    pub fn nodes(dims: usize, resolution: usize) -> Result<Self> {
        Self::new(dims, resolution, resolution, 0.0)
    }

    /// Node grid `{(l + 1) / r}`, used for parameter domains open at zero
    /// (temperature axes).
    pub fn nodes_from_spacing(dims: usize, resolution: usize) -> Result<Self> {
        Self::new(dims, resolution, resolution, 1.0)
    }

    /// Centers of the grid squares (or segments in 1D).
    pub fn centers(&self) -> Result<Self> {
        if self.per_axis < 2 {
            return Err(Error::InvalidArgument(
                "center grid needs at least 2 points per axis".into(),
            ));
        }
        Self::new(self.dims, self.resolution, self.per_axis - 1, self.offset + 0.5)
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.resolution as f64
    }

    pub fn len(&self) -> usize {
        self.per_axis.pow(self.dims as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn axis_coord(&self, l: usize) -> f64 {
        (l as f64 + self.offset) / self.resolution as f64
    }

    /// Flat index of `(l0, l1)`; axis 0 varies fastest. `l1` is ignored in 1D.
    pub fn index(&self, l0: usize, l1: usize) -> usize {
        if self.dims == 1 {
            l0
        } else {
            l0 + self.per_axis * l1
        }
    }

    pub fn unravel(&self, index: usize) -> (usize, usize) {
        if self.dims == 1 {
            (index, 0)
        } else {
            (index % self.per_axis, index / self.per_axis)
        }
    }

    /// Coordinates of a point; the second entry is 0 for 1D grids.
    pub fn point(&self, index: usize) -> [f64; 2] {
        let (l0, l1) = self.unravel(index);
        if self.dims == 1 {
            [self.axis_coord(l0), 0.0]
        } else {
            [self.axis_coord(l0), self.axis_coord(l1)]
        }
    }

    pub fn coords(&self, index: usize) -> Vec<f64> {
        self.point(index)[..self.dims].to_vec()
    }

    /// Smallest and largest coordinate along an axis.
    pub fn axis_range(&self) -> (f64, f64) {
        (self.axis_coord(0), self.axis_coord(self.per_axis - 1))
    }

    /// Nearest grid index along one axis for a coordinate, if it lies on the grid.
    pub fn axis_index_of(&self, coord: f64) -> Option<usize> {
        let l = coord * self.resolution as f64 - self.offset;
        let rounded = l.round();
        if (l - rounded).abs() > 1e-6 || rounded < 0.0 || rounded >= self.per_axis as f64 {
            None
        } else {
            Some(rounded as usize)
        }
    }
}
