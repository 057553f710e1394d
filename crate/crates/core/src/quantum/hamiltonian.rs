use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fidelity::{CMat, C64};

const HERMITIAN_TOL: f64 = 1e-12;

/// Hermitian operator in compressed-row form over the computational basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHamiltonian {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<C64>,
    is_real: bool,
}

/// Triplet accumulator; duplicate entries are summed.
#[derive(Debug, Default)]
pub struct HamiltonianBuilder {
    dim: usize,
    entries: Vec<(u32, u32, C64)>,
}

impl HamiltonianBuilder {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn add(&mut self, row: usize, col: usize, v: C64) {
        if v != C64::new(0.0, 0.0) {
            self.entries.push((row as u32, col as u32, v));
        }
    }

    pub fn add_real(&mut self, row: usize, col: usize, v: f64) {
        self.add(row, col, C64::new(v, 0.0));
    }

    pub fn build(mut self) -> Result<SparseHamiltonian> {
        self.entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; self.dim + 1];
        let mut cols = Vec::with_capacity(self.entries.len());
        let mut vals: Vec<C64> = Vec::with_capacity(self.entries.len());
        let mut last = None;
        for (r, c, v) in self.entries {
            if (r as usize) >= self.dim || (c as usize) >= self.dim {
                return Err(Error::InvalidArgument(format!("entry ({r}, {c}) outside dimension {}", self.dim)));
            }
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r as usize + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..self.dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        let is_real = vals.iter().all(|v| v.im == 0.0);
        let h = SparseHamiltonian {
            dim: self.dim,
            row_ptr,
            cols,
            vals,
            is_real,
        };
        h.check_hermitian()?;
        Ok(h)
    }
}

impl SparseHamiltonian {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// True when every stored entry has zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.is_real
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let row = &self.cols[self.row_ptr[r]..self.row_ptr[r + 1]];
        match row.binary_search(&(c as u32)) {
            Ok(k) => self.vals[self.row_ptr[r] + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    fn check_hermitian(&self) -> Result<()> {
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.cols[k] as usize;
                let d = (self.vals[k] - self.get(c, r).conj()).norm();
                if d > HERMITIAN_TOL * (1.0 + self.vals[k].norm()) {
                    return Err(Error::Numeric(format!("Hamiltonian not Hermitian at ({r}, {c})")));
                }
            }
        }
        Ok(())
    }

    /// Upper bound on the spectral norm (maximum absolute row sum).
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim)
            .map(|r| self.vals[self.row_ptr[r]..self.row_ptr[r + 1]].iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn matvec(&self, x: &DVector<C64>, y: &mut DVector<C64>) {
        for r in 0..self.dim {
            let mut s = C64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.vals[k] * x[self.cols[k] as usize];
            }
            y[r] = s;
        }
    }

    /// `y = H x` using real parts only; valid when [`Self::is_real`].
    pub fn matvec_real(&self, x: &DVector<f64>, y: &mut DVector<f64>) {
        debug_assert!(self.is_real);
        for r in 0..self.dim {
            let mut s = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.vals[k].re * x[self.cols[k] as usize];
            }
            y[r] = s;
        }
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.cols[k] as usize)] = self.vals[k];
            }
        }
        m
    }

    pub fn to_dense_real(&self) -> DMatrix<f64> {
        self.to_dense().map(|z| z.re)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|r| self.get(r, r).re).collect()
    }
}
