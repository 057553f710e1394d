use nalgebra::DMatrix;

use super::distribution::DiscreteDistribution;
use super::states::{hermitian_defect, DensityMatrix, QuantumState};
use super::CMat;
use crate::error::{Error, Result};

const DERIV_TOL: f64 = 1e-10;

/// Fidelity susceptibility split into the regular term and the rank
/// correction; `chi = first + second`.
#[derive(Debug, Clone, PartialEq)]
pub struct SusceptibilityResult {
    pub chi: DMatrix<f64>,
    pub first: DMatrix<f64>,
    pub second: DMatrix<f64>,
}

impl SusceptibilityResult {
    fn from_terms(first: DMatrix<f64>, second: DMatrix<f64>) -> Self {
        let first = symmetrize(first);
        let second = symmetrize(second);
        Self {
            chi: &first + &second,
            first,
            second,
        }
    }

    /// `v^T chi v`.
    pub fn along(&self, v: &[f64]) -> f64 {
        quad(&self.chi, v)
    }
}

pub(crate) fn quad(m: &DMatrix<f64>, v: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..v.len() {
        for j in 0..v.len() {
            s += v[i] * m[(i, j)] * v[j];
        }
    }
    s
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

fn check_hessian(h: &DMatrix<f64>, n: usize) -> Result<()> {
    if h.nrows() != n || h.ncols() != n {
        return Err(Error::DimensionMismatch {
            left: h.nrows(),
            right: n,
        });
    }
    Ok(())
}

/// `Re⟨∂_μψ|∂_νψ⟩ − ⟨∂_μψ|ψ⟩⟨ψ|∂_νψ⟩`.
pub fn chi_pure(state: &QuantumState) -> Result<SusceptibilityResult> {
    let n = state.derivs.len();
    if n == 0 {
        return Err(Error::InvalidArgument("state has no derivatives".into()));
    }
    let proj: Vec<_> = state.derivs.iter().map(|d| state.amps.dotc(d)).collect();
    let first = DMatrix::from_fn(n, n, |mu, nu| {
        let inner = state.derivs[mu].dotc(&state.derivs[nu]);
        (inner - proj[mu].conj() * proj[nu]).re
    });
    Ok(SusceptibilityResult::from_terms(first, DMatrix::zeros(n, n)))
}

fn validate_drho(rho: &DensityMatrix, drho: &[CMat]) -> Result<Vec<CMat>> {
    if drho.is_empty() {
        return Err(Error::InvalidArgument("no density-matrix derivatives".into()));
    }
    let mut out = Vec::with_capacity(drho.len());
    for (mu, d) in drho.iter().enumerate() {
        if d.nrows() != rho.dim() || d.ncols() != rho.dim() {
            return Err(Error::DimensionMismatch {
                left: d.nrows(),
                right: rho.dim(),
            });
        }
        let scale = 1.0 + d.norm();
        if hermitian_defect(d) > DERIV_TOL * scale {
            return Err(Error::Numeric(format!("derivative {mu} is not Hermitian")));
        }
        if d.trace().norm() > DERIV_TOL * scale {
            return Err(Error::Numeric(format!("derivative {mu} is not traceless")));
        }
        out.push(rho.to_eigenbasis(d));
    }
    Ok(out)
}

/// Mixed-state susceptibility.
///
/// The first term sums over pairs inside the positive eigenspace; the second
/// is `kernel_hessian / 2` with `kernel_hessian = ∂_μ∂_ν Tr(P₀ρP₀†)`, which
/// callers must supply (zero for full-rank states).
pub fn chi_mixed(rho: &DensityMatrix, drho: &[CMat], kernel_hessian: &DMatrix<f64>) -> Result<SusceptibilityResult> {
    let d = validate_drho(rho, drho)?;
    let n = d.len();
    check_hessian(kernel_hessian, n)?;
    let xi = rho.eigenvalues();
    let np = rho.n_plus();
    let first = DMatrix::from_fn(n, n, |mu, nu| {
        let mut s = 0.0;
        for j in 0..np {
            for k in 0..np {
                s += (d[mu][(j, k)] * d[nu][(k, j)]).re / (2.0 * (xi[j] + xi[k]));
            }
        }
        s
    });
    Ok(SusceptibilityResult::from_terms(first, kernel_hessian * 0.5))
}

/// Full-sum form: all pairs with at least one index in the positive space.
///
/// Equals `chi_mixed` whenever the rank-correction bound is tight.
pub fn chi_mixed_full_sum(rho: &DensityMatrix, drho: &[CMat]) -> Result<DMatrix<f64>> {
    let d = validate_drho(rho, drho)?;
    let n = d.len();
    let xi = rho.eigenvalues();
    let dim = rho.dim();
    let np = rho.n_plus();
    Ok(symmetrize(DMatrix::from_fn(n, n, |mu, nu| {
        let mut s = 0.0;
        for j in 0..dim {
            let kmax = if j < np { dim } else { np };
            for k in 0..kmax {
                s += (d[mu][(j, k)] * d[nu][(k, j)]).re / (2.0 * (xi[j] + xi[k]));
            }
        }
        s
    })))
}

/// Lower bound on the rank-correction term:
/// `Re Tr(P₀ ∂_μρ P₊† ρ₊⁻¹ P₊ ∂_νρ P₀†)`.
pub fn rank_correction_bound(rho: &DensityMatrix, drho: &[CMat]) -> Result<DMatrix<f64>> {
    let d = validate_drho(rho, drho)?;
    let n = d.len();
    let xi = rho.eigenvalues();
    let np = rho.n_plus();
    Ok(symmetrize(DMatrix::from_fn(n, n, |mu, nu| {
        let mut s = 0.0;
        for a in np..rho.dim() {
            for k in 0..np {
                s += (d[mu][(a, k)] * d[nu][(k, a)]).re / xi[k];
            }
        }
        s
    })))
}

/// Classical susceptibility: `Σ_{S₊} ∂p ∂p / (4p) + zero_set_hessian / 2`.
pub fn chi_discrete(p: &DiscreteDistribution, dp: &[Vec<f64>], zero_set_hessian: &DMatrix<f64>) -> Result<SusceptibilityResult> {
    let n = dp.len();
    if n == 0 {
        return Err(Error::InvalidArgument("no distribution derivatives".into()));
    }
    check_hessian(zero_set_hessian, n)?;
    for (mu, v) in dp.iter().enumerate() {
        if v.len() != p.len() {
            return Err(Error::DimensionMismatch {
                left: v.len(),
                right: p.len(),
            });
        }
        let total: f64 = v.iter().sum();
        let scale: f64 = 1.0 + v.iter().map(|x| x.abs()).sum::<f64>();
        if total.abs() > DERIV_TOL * scale {
            return Err(Error::Numeric(format!("derivative {mu} sums to {total:e}")));
        }
    }
    let probs = p.probs();
    let first = DMatrix::from_fn(n, n, |mu, nu| {
        p.support().map(|z| dp[mu][z] * dp[nu][z] / (4.0 * probs[z])).sum()
    });
    Ok(SusceptibilityResult::from_terms(first, zero_set_hessian * 0.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fidelity::distribution::classical_fidelity;
    use crate::fidelity::states::tests::{random_density, random_state};
    use crate::fidelity::states::uhlmann_fidelity;
    use crate::fidelity::{CVec, C64};
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng as _;
    use rand_distr::StandardNormal;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    /// `(2 − F(h) − F(−h))/h²` Richardson-extrapolated from steps `h` and `h/2`.
    fn fd_oracle(infidelity: impl Fn(f64) -> f64, h: f64) -> (f64, f64) {
        let est = |h: f64| (infidelity(h) + infidelity(-h)) / (h * h);
        let (a, b) = (est(h), est(h / 2.0));
        ((4.0 * b - a) / 3.0, (a - b).abs())
    }

    fn sin_cos_rho(s: f64) -> DensityMatrix {
        DensityMatrix::from_diagonal(&DiscreteDistribution::new(vec![s.sin().powi(2), s.cos().powi(2)]).unwrap()).unwrap()
    }

    fn sin_cos_drho(s: f64) -> CMat {
        let d = (2.0 * s).sin();
        CMat::from_diagonal(&CVec::from_vec(vec![c(d), c(-d)]))
    }

    #[test]
    fn pure_rotation_has_unit_chi() {
        let s = 0.0f64;
        let st = QuantumState::from_real(&[s.cos(), s.sin()])
            .unwrap()
            .with_derivs(vec![CVec::from_vec(vec![c(-s.sin()), c(s.cos())])])
            .unwrap();
        let chi = chi_pure(&st).unwrap();
        let (oracle, _) = fd_oracle(|h| 1.0 - h.cos().abs(), 1e-3);
        assert!((chi.chi[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((oracle - 1.0).abs() < 1e-6);
        assert_eq!(chi.second[(0, 0)], 0.0);
    }

    #[test]
    fn orthogonal_and_phase_derivatives() {
        let st = QuantumState::from_real(&[1.0, 0.0, 0.0]).unwrap();
        let orth = st.clone().with_derivs(vec![CVec::from_vec(vec![c(0.0), c(0.6), c(0.8)]) * c(3.0)]).unwrap();
        assert!((chi_pure(&orth).unwrap().chi[(0, 0)] - 9.0).abs() < 1e-12);
        let phase = st.clone().with_derivs(vec![&st.amps * C64::new(0.0, 2.5)]).unwrap();
        assert!(chi_pure(&phase).unwrap().chi[(0, 0)].abs() < 1e-15);
        assert!(chi_pure(&st).is_err());
    }

    #[test]
    fn sin_cos_family_terms() {
        // s = π/4: full rank, regular term only.
        let r = chi_mixed(&sin_cos_rho(FRAC_PI_4), &[sin_cos_drho(FRAC_PI_4)], &DMatrix::zeros(1, 1)).unwrap();
        assert!((r.first[(0, 0)] - 1.0).abs() < 1e-12);
        assert_eq!(r.second[(0, 0)], 0.0);
        // s = 0: Tr(P₀ρ(s)P₀) = sin²s has second derivative 2.
        let r = chi_mixed(&sin_cos_rho(0.0), &[sin_cos_drho(0.0)], &DMatrix::from_element(1, 1, 2.0)).unwrap();
        assert_eq!(r.first[(0, 0)], 0.0);
        assert!((r.second[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((r.chi[(0, 0)] - 1.0).abs() < 1e-12);
        let r = chi_mixed(&sin_cos_rho(FRAC_PI_8), &[sin_cos_drho(FRAC_PI_8)], &DMatrix::zeros(1, 1)).unwrap();
        assert!((r.chi[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_derivative_gives_zero() {
        let rho = random_density(3, 3, 1);
        let r = chi_mixed(&rho, &[CMat::zeros(3, 3)], &DMatrix::zeros(1, 1)).unwrap();
        assert_eq!(r.chi[(0, 0)], 0.0);
        let p = DiscreteDistribution::new(vec![0.25; 4]).unwrap();
        assert_eq!(chi_discrete(&p, &[vec![0.0; 4]], &DMatrix::zeros(1, 1)).unwrap().chi[(0, 0)], 0.0);
    }

    #[test]
    fn discrete_examples() {
        let s = FRAC_PI_4;
        let p = DiscreteDistribution::new(vec![s.sin().powi(2), s.cos().powi(2)]).unwrap();
        let d = (2.0 * s).sin();
        assert!((chi_discrete(&p, &[vec![d, -d]], &DMatrix::zeros(1, 1)).unwrap().chi[(0, 0)] - 1.0).abs() < 1e-12);

        let p = DiscreteDistribution::new(vec![0.25, 0.75]).unwrap();
        let chi = chi_discrete(&p, &[vec![1.0, -1.0]], &DMatrix::zeros(1, 1)).unwrap().chi[(0, 0)];
        let (oracle, _) = fd_oracle(
            |h| {
                let q = DiscreteDistribution::new(vec![0.25 + h, 0.75 - h]).unwrap();
                1.0 - classical_fidelity(&p, &q).unwrap()
            },
            1e-3,
        );
        assert!((chi - 4.0 / 3.0).abs() < 1e-12);
        assert!((oracle - chi).abs() < 1e-6, "{oracle}");
        assert!(chi_discrete(&p, &[vec![1.0, 0.0]], &DMatrix::zeros(1, 1)).is_err());
    }

    #[test]
    fn non_hermitian_derivative_rejected() {
        let rho = random_density(2, 2, 3);
        let mut d = CMat::zeros(2, 2);
        d[(0, 1)] = c(1.0);
        assert!(chi_mixed(&rho, &[d], &DMatrix::zeros(1, 1)).is_err());
    }

    fn random_hermitian(d: usize, r: &mut crate::rng::Rng) -> CMat {
        let g = CMat::from_fn(d, d, |_, _| C64::new(r.sample(StandardNormal), r.sample(StandardNormal)));
        (&g + g.adjoint()) * c(0.5)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        /// chi_pure against finite differences of |⟨ψ(0)|ψ(h)⟩|.
        #[test]
        fn chi_pure_matches_fidelity(seed in 0u64..5000, d in 2usize..6) {
            let psi = random_state(d, seed);
            let mut r = rng::stream(seed, &[9]);
            let h1 = random_hermitian(d, &mut r);
            // ψ(t) = exp(-i H t) φ(t)/|φ(t)| with φ(t) = ψ + t w.
            let w = CVec::from_fn(d, |_, _| C64::new(r.sample(StandardNormal), r.sample(StandardNormal)));
            let at = |t: f64| {
                let (vals, vecs) = crate::fidelity::states::hermitian_eigen(&h1);
                let ph = CVec::from_iterator(d, vals.iter().map(|e| C64::from_polar(1.0, -e * t)));
                let u = &vecs * CMat::from_diagonal(&ph) * vecs.adjoint();
                let phi = &psi.amps + &w * c(t);
                u * phi.normalize()
            };
            let nrm = psi.amps.dotc(&w).re;
            let dphi = &w - &psi.amps * c(nrm);
            let deriv = dphi - (&h1 * &psi.amps) * C64::new(0.0, 1.0);
            let st = psi.clone().with_derivs(vec![deriv]).unwrap();
            let chi = chi_pure(&st).unwrap().chi[(0, 0)];
            let h = 1e-3;
            let (oracle, rich) = fd_oracle(|t| 1.0 - psi.amps.dotc(&at(t)).norm(), h);
            prop_assert!((oracle - chi).abs() <= 10.0 * h * h * chi.abs().max(1.0) + rich, "{} vs {}", chi, oracle);
        }

        /// chi_mixed on full-rank families against finite differences of Uhlmann fidelity,
        /// and the full-sum form against first term plus the rank-correction bound.
        #[test]
        fn chi_mixed_matches_uhlmann(seed in 0u64..5000, d in 2usize..5) {
            let rho = random_density(d, d, seed);
            let mut r = rng::stream(seed, &[10]);
            let mut dr = random_hermitian(d, &mut r);
            let tr = dr.trace() / c(d as f64);
            for i in 0..d { dr[(i, i)] -= tr; }
            let dr = dr * c(0.1 * rho.eigenvalues()[d - 1]);
            let res = chi_mixed(&rho, &[dr.clone()], &DMatrix::zeros(1, 1)).unwrap();
            let h = 1e-2;
            let (oracle, rich) = fd_oracle(|t| {
                let sigma = DensityMatrix::new(rho.matrix() + &dr * c(t)).unwrap();
                1.0 - uhlmann_fidelity(&rho, &sigma).unwrap()
            }, h);
            let chi = res.chi[(0, 0)];
            prop_assert!((oracle - chi).abs() <= 1e-3 * chi.abs() + rich + 1e-9, "{} vs {}", chi, oracle);
            let full = chi_mixed_full_sum(&rho, &[dr.clone()]).unwrap();
            prop_assert!((full[(0, 0)] - chi).abs() < 1e-9 * (1.0 + chi.abs()));
        }

        #[test]
        fn full_sum_splits_into_first_and_bound(seed in 0u64..5000, d in 3usize..6, rank in 1usize..3) {
            let rho = random_density(d, rank, seed);
            let mut r = rng::stream(seed, &[11]);
            let mut dr = random_hermitian(d, &mut r);
            let tr = dr.trace() / c(d as f64);
            for i in 0..d { dr[(i, i)] -= tr; }
            let first = chi_mixed(&rho, &[dr.clone(), dr.adjoint() * c(0.5)], &DMatrix::zeros(2, 2)).unwrap().first;
            let bound = rank_correction_bound(&rho, &[dr.clone(), dr.adjoint() * c(0.5)]).unwrap();
            let full = chi_mixed_full_sum(&rho, &[dr.clone(), dr.adjoint() * c(0.5)]).unwrap();
            prop_assert!((full - (first + bound)).norm() < 1e-8);
        }

        #[test]
        fn results_symmetric_and_psd(seed in 0u64..5000, d in 2usize..6) {
            let psi = random_state(d, seed);
            let mut r = rng::stream(seed, &[12]);
            let derivs: Vec<CVec> = (0..3).map(|_| CVec::from_fn(d, |_, _| C64::new(r.sample(StandardNormal), r.sample(StandardNormal)))).collect();
            let res = chi_pure(&psi.with_derivs(derivs).unwrap()).unwrap();
            prop_assert!((&res.chi - res.chi.transpose()).norm() == 0.0);
            let v: Vec<f64> = (0..3).map(|_| r.sample(StandardNormal)).collect();
            prop_assert!(res.along(&v) >= -1e-9);
        }
    }
}
