use nalgebra::{ComplexField, DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};

use super::hamiltonian::SparseHamiltonian;
use crate::error::{Error, Result};
use crate::fidelity::{CMat, C64};
use crate::rng;

/// Dimensions up to this size use the dense Hermitian eigensolver.
pub const DENSE_MAX: usize = 512;
/// Residual target relative to the row-sum bound on `‖H‖`.
pub const RESIDUAL_TOL: f64 = 1e-10;
const MAX_BASIS: usize = 48;
const MAX_RESTARTS: usize = 400;
const DEFLATE_TOL: f64 = 1e-10;

/// Lowest `k` eigenpairs, energies ascending, eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SpectralSlice {
    pub energies: Vec<f64>,
    pub vectors: CMat,
}

impl SpectralSlice {
    pub fn k(&self) -> usize {
        self.energies.len()
    }

    pub fn ground(&self) -> DVector<C64> {
        self.vectors.column(0).into_owned()
    }

    /// `max_j ‖H ψ_j − E_j ψ_j‖`.
    pub fn max_residual(&self, h: &SparseHamiltonian) -> f64 {
        let mut y = DVector::zeros(h.dim());
        (0..self.k())
            .map(|j| {
                let v = self.vectors.column(j).into_owned();
                h.matvec(&v, &mut y);
                (&y - v * C64::new(self.energies[j], 0.0)).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `max |⟨ψ_i|ψ_j⟩ − δ_ij|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.vectors.adjoint() * &self.vectors;
        let k = self.k();
        (0..k)
            .flat_map(|i| (0..k).map(move |j| (i, j)))
            .map(|(i, j)| (g[(i, j)] - if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }).norm())
            .fold(0.0, f64::max)
    }
}

/// Lowest `k` eigenpairs of `h`.
///
/// Dense for `d <= DENSE_MAX`; otherwise a restarted block Krylov method with
/// full reorthogonalization and Rayleigh–Ritz extraction, started from a
/// seeded random block. Real Hamiltonians are solved in real arithmetic.
pub fn lowest_eigs(h: &SparseHamiltonian, k: usize, seed: u64) -> Result<SpectralSlice> {
    let d = h.dim();
    if k == 0 || k > d {
        return Err(Error::InvalidArgument(format!("need 1 <= k <= {d}, got {k}")));
    }
    if d <= DENSE_MAX {
        return Ok(if h.is_real() {
            let (e, v) = dense_lowest(h.to_dense_real(), k);
            SpectralSlice {
                energies: e,
                vectors: v.map(|x| C64::new(x, 0.0)),
            }
        } else {
            let (e, v) = dense_lowest(h.to_dense(), k);
            SpectralSlice { energies: e, vectors: v }
        });
    }
    let tol = RESIDUAL_TOL * h.norm_bound().max(1.0);
    if h.is_real() {
        let (e, v) = block_krylov(
            d,
            k,
            |x: &DVector<f64>, y: &mut DVector<f64>| h.matvec_real(x, y),
            seed,
            tol,
        )?;
        Ok(SpectralSlice {
            energies: e,
            vectors: v.map(|x| C64::new(x, 0.0)),
        })
    } else {
        let (e, v) = block_krylov(d, k, |x: &DVector<C64>, y: &mut DVector<C64>| h.matvec(x, y), seed, tol)?;
        Ok(SpectralSlice { energies: e, vectors: v })
    }
}

fn dense_lowest<T: ComplexField<RealField = f64>>(m: DMatrix<T>, k: usize) -> (Vec<f64>, DMatrix<T>) {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies = order[..k].iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_columns(&order[..k].iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect::<Vec<_>>());
    (energies, vectors)
}

trait RandomScalar: ComplexField<RealField = f64> {
    fn draw(r: &mut rng::Rng) -> Self;
}

impl RandomScalar for f64 {
    fn draw(r: &mut rng::Rng) -> Self {
        StandardNormal.sample(r)
    }
}

impl RandomScalar for C64 {
    fn draw(r: &mut rng::Rng) -> Self {
        C64::new(StandardNormal.sample(r), StandardNormal.sample(r))
    }
}

/// Growing orthonormal basis `Q` with `H Q` stored alongside.
struct Basis<T: ComplexField<RealField = f64>> {
    q: DMatrix<T>,
    hq: DMatrix<T>,
    len: usize,
}

impl<T: RandomScalar> Basis<T> {
    fn new(d: usize, cap: usize) -> Self {
        Self {
            q: DMatrix::zeros(d, cap),
            hq: DMatrix::zeros(d, cap),
            len: 0,
        }
    }

    fn cap(&self) -> usize {
        self.q.ncols()
    }

    /// Appends the columns of `w` that survive two rounds of block
    /// Gram–Schmidt against the basis; returns their indices. The `H` images
    /// of new columns are filled in by the caller.
    fn extend(&mut self, mut w: DMatrix<T>) -> Vec<usize> {
        let norms: Vec<f64> = w.column_iter().map(|c| c.norm()).collect();
        for _ in 0..2 {
            if self.len > 0 {
                let qm = self.q.columns(0, self.len);
                let c = qm.adjoint() * &w;
                w -= qm * c;
            }
        }
        let mut added = Vec::new();
        for j in 0..w.ncols() {
            if self.len == self.cap() {
                break;
            }
            let mut v = w.column(j).into_owned();
            for _ in 0..2 {
                for &i in &added {
                    let qi = self.q.column(i);
                    let c = qi.dotc(&v);
                    v.axpy(-c, &qi, T::one());
                }
            }
            let n = v.norm();
            if n <= DEFLATE_TOL * norms[j].max(f64::MIN_POSITIVE) {
                continue;
            }
            v.unscale_mut(n);
            self.q.set_column(self.len, &v);
            added.push(self.len);
            self.len += 1;
        }
        added
    }
}

/// Thick-restart block Krylov iteration.
///
/// Each cycle expands the basis by repeated multiplication of the newest block
/// by `H`, then extracts Ritz pairs. The next cycle starts from the lowest
/// Ritz vectors (whose `H` images are already known) and grows from their
/// residuals.
fn block_krylov<T, F>(d: usize, k: usize, matvec: F, seed: u64, tol: f64) -> Result<(Vec<f64>, DMatrix<T>)>
where
    T: RandomScalar,
    F: Fn(&DVector<T>, &mut DVector<T>),
{
    let block = (k + 2).min(d);
    let max_basis = MAX_BASIS.max(4 * block).min(d);
    let keep = (2 * block).min(max_basis / 2);
    let mut r = rng::stream(seed, &[0xE16E]);
    let apply = |basis: &mut Basis<T>, cols: &[usize]| {
        let mut y = DVector::zeros(d);
        for &i in cols {
            matvec(&basis.q.column(i).into_owned(), &mut y);
            basis.hq.set_column(i, &y);
        }
    };
    let mut basis = Basis::new(d, max_basis);
    let mut frontier = basis.extend(DMatrix::from_fn(d, block, |_, _| T::draw(&mut r)));
    apply(&mut basis, &frontier);
    let mut last_residual = f64::INFINITY;
    for _ in 0..MAX_RESTARTS {
        while basis.len < max_basis {
            let w = DMatrix::from_columns(&frontier.iter().map(|&i| basis.hq.column(i).into_owned()).collect::<Vec<_>>());
            frontier = basis.extend(w);
            if frontier.is_empty() {
                // Invariant subspace reached; widen with noise.
                let noise = DMatrix::from_fn(d, block, |_, _| T::draw(&mut r));
                frontier = basis.extend(noise);
                if frontier.is_empty() {
                    break;
                }
            }
            apply(&mut basis, &frontier);
        }
        let m = basis.len;
        let qm = basis.q.columns(0, m);
        let hqm = basis.hq.columns(0, m);
        let mut t = qm.adjoint() * &hqm;
        t = (&t + t.adjoint()).unscale(2.0);
        let n_ritz = keep.min(m);
        let (theta, y) = dense_lowest(t, n_ritz);
        let x = &qm * &y;
        let hx = &hqm * &y;
        let theta_diag = DMatrix::from_diagonal(&DVector::from_iterator(n_ritz, theta.iter().map(|&e| T::from_real(e))));
        let resid = &hx - &x * theta_diag;
        last_residual = (0..k).map(|j| resid.column(j).norm()).fold(0.0, f64::max);
        if last_residual <= tol {
            return Ok((theta[..k].to_vec(), x.columns(0, k).into_owned()));
        }
        basis.len = 0;
        basis.q.columns_mut(0, n_ritz).copy_from(&x);
        basis.hq.columns_mut(0, n_ritz).copy_from(&hx);
        basis.len = n_ritz;
        frontier = basis.extend(resid.columns(0, block.min(n_ritz)).into_owned());
        apply(&mut basis, &frontier);
    }
    Err(Error::NonConvergence {
        restarts: MAX_RESTARTS,
        residual: last_residual,
    })
}
