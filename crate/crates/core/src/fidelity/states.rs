use nalgebra::linalg::SymmetricEigen;

use super::distribution::DiscreteDistribution;
use super::{CMat, CVec, C64};
use crate::error::{Error, Result};

pub const STATE_NORM_TOL: f64 = 1e-12;
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-10;
pub const EIGEN_NEG_TOL: f64 = 1e-12;
/// Eigenvalues below `RANK_CUT * max(ξ)` belong to the null space.
pub const RANK_CUT: f64 = 1e-10;

/// Normalized pure state with optional derivatives `|∂_μψ⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    pub amps: CVec,
    pub derivs: Vec<CVec>,
}

impl QuantumState {
    pub fn new(amps: CVec) -> Result<Self> {
        let n = amps.norm();
        if (n - 1.0).abs() > STATE_NORM_TOL * (amps.len() as f64).sqrt().max(1.0) {
            return Err(Error::Numeric(format!("state norm is {n}")));
        }
        Ok(Self {
            amps,
            derivs: Vec::new(),
        })
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::new(CVec::from_iterator(amps.len(), amps.iter().map(|&a| C64::new(a, 0.0))))
    }

    pub fn with_derivs(mut self, derivs: Vec<CVec>) -> Result<Self> {
        if let Some(d) = derivs.iter().find(|d| d.len() != self.amps.len()) {
            return Err(Error::DimensionMismatch {
                left: d.len(),
                right: self.amps.len(),
            });
        }
        self.derivs = derivs;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    /// Born probabilities in the computational basis.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `|⟨self|other⟩|`.
    pub fn overlap(&self, other: &QuantumState) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(self.amps.dotc(&other.amps).norm().min(1.0))
    }
}

/// Density matrix with a cached eigendecomposition.
///
/// Eigenvalues are sorted in descending order and clamped at zero; the first
/// `n_plus` eigenvectors span the positive eigenspace.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    mat: CMat,
    eigenvalues: Vec<f64>,
    eigenvectors: CMat,
    n_plus: usize,
}

pub(crate) fn hermitian_defect(m: &CMat) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigenpairs of a Hermitian matrix, eigenvalues descending.
pub(crate) fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

impl DensityMatrix {
    pub fn new(mat: CMat) -> Result<Self> {
        if !mat.is_square() || mat.nrows() == 0 {
            return Err(Error::InvalidArgument("density matrix must be square and nonempty".into()));
        }
        let defect = hermitian_defect(&mat);
        if defect > HERMITIAN_TOL {
            return Err(Error::Numeric(format!("density matrix not Hermitian (defect {defect:e})")));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::Numeric(format!("density matrix trace is {tr}")));
        }
        let mat = (&mat + mat.adjoint()) * C64::new(0.5, 0.0);
        let (mut eigenvalues, eigenvectors) = hermitian_eigen(&mat);
        if let Some(neg) = eigenvalues.iter().find(|&&x| x < -EIGEN_NEG_TOL) {
            return Err(Error::Numeric(format!("density matrix has eigenvalue {neg:e}")));
        }
        eigenvalues.iter_mut().for_each(|x| *x = x.max(0.0));
        let cut = RANK_CUT * eigenvalues[0];
        let n_plus = eigenvalues.iter().take_while(|&&x| x > cut).count();
        Ok(Self {
            mat,
            eigenvalues,
            eigenvectors,
            n_plus,
        })
    }

    pub fn from_pure(state: &QuantumState) -> Result<Self> {
        Self::new(&state.amps * state.amps.adjoint())
    }

    pub fn from_diagonal(p: &DiscreteDistribution) -> Result<Self> {
        let d = CVec::from_iterator(p.len(), p.probs().iter().map(|&x| C64::new(x, 0.0)));
        Self::new(CMat::from_diagonal(&d))
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &CMat {
        &self.eigenvectors
    }

    pub fn n_plus(&self) -> usize {
        self.n_plus
    }

    /// `V† a V` in the eigenbasis of `self`.
    pub fn to_eigenbasis(&self, a: &CMat) -> CMat {
        self.eigenvectors.adjoint() * a * &self.eigenvectors
    }

    /// Projector onto the null space, as a `dim x dim` matrix.
    pub fn null_projector(&self) -> CMat {
        let v0 = self.eigenvectors.columns(self.n_plus, self.dim() - self.n_plus);
        &v0 * v0.adjoint()
    }

    pub fn sqrt(&self) -> CMat {
        let s = CVec::from_iterator(self.dim(), self.eigenvalues.iter().map(|x| C64::new(x.sqrt(), 0.0)));
        &self.eigenvectors * CMat::from_diagonal(&s) * self.eigenvectors.adjoint()
    }
}

/// Uhlmann fidelity `‖√ρ √σ‖₁`.
pub fn uhlmann_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            left: rho.dim(),
            right: sigma.dim(),
        });
    }
    let m = rho.sqrt() * sigma.sqrt();
    let f: f64 = m.singular_values().iter().sum();
    Ok(f.min(1.0))
}
