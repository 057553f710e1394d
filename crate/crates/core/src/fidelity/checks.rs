//! Numerical verification of the susceptibility identities and bounds.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;

use super::distribution::DiscreteDistribution;
use super::states::{hermitian_eigen, DensityMatrix, QuantumState};
use super::susceptibility::{chi_discrete, chi_pure, quad, rank_correction_bound};
use super::{CMat, CVec, C64};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

const MAX_REDRAWS: usize = 100;
/// Draws with spectral gap below `GAP_CUT * ‖H‖` are rejected.
pub const GAP_CUT: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct Theorem1Report {
    pub chi_f: DMatrix<f64>,
    pub chi_fc: DMatrix<f64>,
    pub max_rel_diff: f64,
    pub rejected_draws: usize,
    pub passed: bool,
}

fn gaussian_symmetric(d: usize, r: &mut Rng) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(d, d, |_, _| r.sample(StandardNormal));
    (&g + g.transpose()) * 0.5
}

fn gaussian_antisymmetric(d: usize, r: &mut Rng) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(d, d, |_, _| r.sample(StandardNormal));
    (&g - g.transpose()) * 0.5
}

fn to_complex(m: &DMatrix<f64>) -> CMat {
    m.map(|x| C64::new(x, 0.0))
}

/// Ground state and first-order-perturbation derivatives of `H(λ)`.
///
/// `h` and `dh` are Hermitian; returns `None` when the gap is below the cut.
fn ground_state_with_derivs(h: &CMat, dh: &[CMat]) -> Option<QuantumState> {
    let (vals, vecs) = hermitian_eigen(h);
    let d = h.nrows();
    let e0 = vals[d - 1];
    let gap = vals[d - 2] - e0;
    if gap < GAP_CUT * h.norm() {
        return None;
    }
    let psi = vecs.column(d - 1).into_owned();
    let derivs = dh
        .iter()
        .map(|dhm| {
            let mut out = CVec::zeros(d);
            let hpsi = dhm * &psi;
            for n in 0..d - 1 {
                let v = vecs.column(n);
                let amp = v.dotc(&hpsi) / C64::new(e0 - vals[n], 0.0);
                out += v * amp;
            }
            out
        })
        .collect();
    QuantumState::new(psi).ok()?.with_derivs(derivs).ok()
}

/// Classical susceptibility of computational-basis probabilities of `state`.
///
/// Outcomes with exactly zero probability are skipped, so the zero-set
/// Hessian is taken as zero.
fn chi_fc_of_state(state: &QuantumState, basis: Option<&CMat>) -> Result<DMatrix<f64>> {
    let (amps, derivs): (CVec, Vec<CVec>) = match basis {
        Some(u) => (u.adjoint() * &state.amps, state.derivs.iter().map(|d| u.adjoint() * d).collect()),
        None => (state.amps.clone(), state.derivs.clone()),
    };
    let probs: Vec<f64> = amps.iter().map(|a| a.norm_sqr()).collect();
    let p = DiscreteDistribution::from_weights(probs)?;
    let dp: Vec<Vec<f64>> = derivs
        .iter()
        .map(|d| amps.iter().zip(d.iter()).map(|(a, b)| 2.0 * (a.conj() * b).re).collect())
        .collect();
    let n = dp.len();
    Ok(chi_discrete(&p, &dp, &DMatrix::zeros(n, n))?.chi)
}

fn random_point(n: usize, r: &mut Rng) -> Vec<f64> {
    (0..n).map(|_| r.sample(StandardNormal)).collect()
}

fn run_theorem1(dim: usize, n_params: usize, seed: u64, tol: f64, complex: bool) -> Result<Theorem1Report> {
    if dim < 2 || n_params == 0 {
        return Err(Error::InvalidArgument("need dim >= 2 and at least one parameter".into()));
    }
    let mut r = rng::stream(seed, &[u64::from(complex), dim as u64, n_params as u64]);
    for rejected in 0..MAX_REDRAWS {
        // H(λ) = A + Σ_μ (λ_μ B_μ + λ_μ² C_μ), optionally plus iλ_0 K with K antisymmetric.
        let a = gaussian_symmetric(dim, &mut r);
        let b: Vec<_> = (0..n_params).map(|_| gaussian_symmetric(dim, &mut r)).collect();
        let c: Vec<_> = (0..n_params).map(|_| gaussian_symmetric(dim, &mut r)).collect();
        let lam = random_point(n_params, &mut r);
        let mut h = to_complex(&a);
        let mut dh = Vec::with_capacity(n_params);
        for mu in 0..n_params {
            h += to_complex(&(&b[mu] * lam[mu] + &c[mu] * lam[mu].powi(2)));
            dh.push(to_complex(&(&b[mu] + &c[mu] * (2.0 * lam[mu]))));
        }
        if complex {
            let k = gaussian_antisymmetric(dim, &mut r).map(|x| C64::new(0.0, x));
            h += &k * C64::new(lam[0], 0.0);
            dh[0] += k;
        }
        let Some(state) = ground_state_with_derivs(&h, &dh) else {
            continue;
        };
        let chi_f = chi_pure(&state)?.chi;
        let chi_fc = chi_fc_of_state(&state, None)?;
        let max_rel_diff = chi_f
            .iter()
            .zip(chi_fc.iter())
            .map(|(f, c)| (f - c).abs() / (1.0 + f.abs()))
            .fold(0.0, f64::max);
        let passed = if complex {
            // χ_Fc ≤ χ_F along random directions.
            (0..16).all(|_| {
                let v = random_point(n_params, &mut r);
                quad(&chi_fc, &v) <= quad(&chi_f, &v) + tol * (1.0 + quad(&chi_f, &v).abs())
            })
        } else {
            max_rel_diff <= tol
        };
        return Ok(Theorem1Report {
            chi_f,
            chi_fc,
            max_rel_diff,
            rejected_draws: rejected,
            passed,
        });
    }
    Err(Error::Numeric(format!("ground state stayed near-degenerate after {MAX_REDRAWS} draws")))
}

/// Random real-symmetric family: `χ_F` and `χ_Fc` agree entrywise within `tol`.
pub fn check_theorem1(dim: usize, n_params: usize, seed: u64, tol: f64) -> Result<Theorem1Report> {
    run_theorem1(dim, n_params, seed, tol, false)
}

/// Same family with an imaginary Hermitian term; only `χ_Fc ≤ χ_F` is checked.
pub fn check_theorem1_complex(dim: usize, n_params: usize, seed: u64, tol: f64) -> Result<Theorem1Report> {
    run_theorem1(dim, n_params, seed, tol, true)
}

#[derive(Debug, Clone)]
pub struct Theorem2Report {
    pub mean: DMatrix<f64>,
    pub stderr: DMatrix<f64>,
    pub target: DMatrix<f64>,
    pub passed: bool,
}

/// Haar-random unitary: QR of a complex Gaussian matrix with the phases of
/// `diag(R)` moved into `Q`.
pub fn haar_unitary(d: usize, r: &mut Rng) -> CMat {
    let g = CMat::from_fn(d, d, |_, _| C64::new(r.sample(StandardNormal), r.sample(StandardNormal)));
    let qr = g.qr();
    let (mut q, rr) = (qr.q(), qr.r());
    for j in 0..d {
        let z = rr[(j, j)];
        let phase = if z.norm() > 0.0 { z / C64::new(z.norm(), 0.0) } else { C64::new(1.0, 0.0) };
        let col = q.column(j) * phase;
        q.set_column(j, &col);
    }
    q
}

/// Average classical susceptibility over Haar-random measurement bases
/// against half the quantum susceptibility.
pub fn check_theorem2(state: &QuantumState, n_bases: usize, seed: u64) -> Result<Theorem2Report> {
    let d = state.dim();
    if d < 2 {
        return Err(Error::InvalidArgument("Haar average needs dimension >= 2".into()));
    }
    if n_bases < 2 {
        return Err(Error::InvalidArgument("need at least two bases".into()));
    }
    let target = chi_pure(state)? .chi * 0.5;
    let n = state.derivs.len();
    let mut r = rng::stream(seed, &[0x7e02, d as u64]);
    let mut sum = DMatrix::<f64>::zeros(n, n);
    let mut sum_sq = DMatrix::<f64>::zeros(n, n);
    for _ in 0..n_bases {
        let u = haar_unitary(d, &mut r);
        let chi = chi_fc_of_state(state, Some(&u))?;
        sum += &chi;
        sum_sq += chi.component_mul(&chi);
    }
    let m = n_bases as f64;
    let mean = &sum / m;
    let var = (&sum_sq / m - mean.component_mul(&mean)) * (m / (m - 1.0));
    let stderr = var.map(|v| (v.max(0.0) / m).sqrt());
    let passed = mean
        .iter()
        .zip(target.iter())
        .zip(stderr.iter())
        .all(|((a, t), s)| (a - t).abs() <= 4.0 * s + 1e-12);
    Ok(Theorem2Report {
        mean,
        stderr,
        target,
        passed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prop5Report {
    /// `½ vᵀ K v` with `K` the kernel Hessian.
    pub lhs: f64,
    pub rhs: f64,
    pub tight: bool,
    pub passed: bool,
}

/// Compare the rank-correction term with its lower bound along `direction`.
pub fn check_prop5_bound(rho: &DensityMatrix, drho: &[CMat], kernel_hessian: &DMatrix<f64>, direction: &[f64]) -> Result<Prop5Report> {
    if direction.len() != drho.len() {
        return Err(Error::DimensionMismatch {
            left: direction.len(),
            right: drho.len(),
        });
    }
    if kernel_hessian.nrows() != drho.len() || kernel_hessian.ncols() != drho.len() {
        return Err(Error::DimensionMismatch {
            left: kernel_hessian.nrows(),
            right: drho.len(),
        });
    }
    let lhs = 0.5 * quad(kernel_hessian, direction);
    let rhs = quad(&rank_correction_bound(rho, drho)?, direction);
    let tol = 1e-8 * (1.0 + lhs.abs().max(rhs.abs()));
    Ok(Prop5Report {
        lhs,
        rhs,
        tight: (lhs - rhs).abs() <= tol,
        passed: lhs >= rhs - tol,
    })
}

/// Constant-rank unitary orbit `ρ(λ) = U D U†`, `U = exp(Σ λ_μ A_μ)`, at `λ = 0`.
///
/// Returns `ρ`, `∂_μρ = [A_μ, D]` and the exact kernel Hessian
/// `Tr P₀(A_μ D A_ν† + A_ν D A_μ†)P₀`.
pub fn unitary_orbit(spectrum: &[f64], n_params: usize, seed: u64) -> Result<(DensityMatrix, Vec<CMat>, DMatrix<f64>)> {
    let d = spectrum.len();
    let mut r = rng::stream(seed, &[0x0b17, d as u64]);
    let dmat = CMat::from_diagonal(&DVector::from_iterator(d, spectrum.iter().map(|&x| C64::new(x, 0.0))));
    let rho = DensityMatrix::new(dmat.clone())?;
    let gens: Vec<CMat> = (0..n_params)
        .map(|_| {
            let g = CMat::from_fn(d, d, |_, _| C64::new(r.sample(StandardNormal), r.sample(StandardNormal)));
            (&g - g.adjoint()) * C64::new(0.5, 0.0)
        })
        .collect();
    let drho = gens.iter().map(|a| a * &dmat - &dmat * a).collect();
    // Null space of a diagonal D: the coordinate axes with zero weight.
    let null: Vec<usize> = (0..d).filter(|&i| spectrum[i] == 0.0).collect();
    let hess = DMatrix::from_fn(n_params, n_params, |mu, nu| {
        let m = &gens[mu] * &dmat * gens[nu].adjoint() + &gens[nu] * &dmat * gens[mu].adjoint();
        null.iter().map(|&i| m[(i, i)].re).sum()
    });
    Ok((rho, drho, hess))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fidelity::susceptibility::{chi_mixed, chi_mixed_full_sum};
    use proptest::prelude::*;

    #[test]
    fn real_families_agree_exactly() {
        for seed in 0..20 {
            let rep = check_theorem1(2 + (seed as usize % 7), 1 + (seed as usize % 3), seed, 1e-8).unwrap();
            assert!(rep.passed, "seed {seed}: {}", rep.max_rel_diff);
        }
    }

    #[test]
    fn complex_family_can_be_strict() {
        let mut strict = 0;
        for seed in 0..20 {
            let rep = check_theorem1_complex(5, 1, seed, 1e-8).unwrap();
            assert!(rep.passed);
            if rep.chi_fc[(0, 0)] < rep.chi_f[(0, 0)] * (1.0 - 1e-3) {
                strict += 1;
            }
        }
        assert!(strict > 10, "only {strict} strict draws");
    }

    #[test]
    fn constant_family_is_zero() {
        let st = QuantumState::from_real(&[0.6, 0.8]).unwrap().with_derivs(vec![CVec::zeros(2)]).unwrap();
        let rep = check_theorem2(&st, 50, 1).unwrap();
        assert_eq!(rep.mean[(0, 0)], 0.0);
        assert!(rep.passed);
        let h = to_complex(&DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, -1.0]));
        let st = ground_state_with_derivs(&h, &[CMat::zeros(2, 2)]).unwrap();
        assert_eq!(chi_pure(&st).unwrap().chi[(0, 0)], 0.0);
        assert_eq!(chi_fc_of_state(&st, None).unwrap()[(0, 0)], 0.0);
    }

    #[test]
    fn haar_average_is_half() {
        let st = QuantumState::from_real(&[1.0, 0.0])
            .unwrap()
            .with_derivs(vec![CVec::from_vec(vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)])])
            .unwrap();
        let rep = check_theorem2(&st, 100_000, 5).unwrap();
        assert_eq!(rep.target[(0, 0)], 0.5);
        assert!(rep.passed, "{} ± {}", rep.mean[(0, 0)], rep.stderr[(0, 0)]);
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut r = rng::stream(3, &[]);
        let u = haar_unitary(5, &mut r);
        assert!((u.adjoint() * &u - CMat::identity(5, 5)).norm() < 1e-12);
    }

    /// ρ(s) = diag(sin²s, cos²s) at s=0 measured in the basis (|0⟩±|1⟩)/√2
    /// gives (½, ½) for every s, so χ_Fc = 0 while χ_F = 1.
    #[test]
    fn mixed_state_counterexample() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let u = to_complex(&DMatrix::from_row_slice(2, 2, &[h, h, h, -h]));
        let rho = |s: f64| to_complex(&DMatrix::from_row_slice(2, 2, &[s.sin().powi(2), 0.0, 0.0, s.cos().powi(2)]));
        let probs = |s: f64| -> Vec<f64> { (u.adjoint() * rho(s) * &u).diagonal().iter().map(|z| z.re).collect() };
        let p = DiscreteDistribution::new(probs(0.0)).unwrap();
        let eps = 1e-4;
        let dp: Vec<f64> = probs(eps).iter().zip(probs(-eps)).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
        let chi_fc = chi_discrete(&p, &[dp], &DMatrix::zeros(1, 1)).unwrap().chi[(0, 0)];
        assert!(chi_fc.abs() < 1e-20);
        let chi_f = crate::fidelity::chi_mixed(&DensityMatrix::new(rho(0.0)).unwrap(), &[CMat::zeros(2, 2)], &DMatrix::from_element(1, 1, 2.0))
            .unwrap()
            .chi[(0, 0)];
        assert_eq!(chi_f, 1.0);
    }

    #[test]
    fn rank_bound_examples() {
        // ρ(s) = diag(sin²s, cos²s) at s = 0, where the rank drops.
        let rho = DensityMatrix::new(CMat::from_diagonal(&CVec::from_vec(vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)]))).unwrap();
        let drho = vec![CMat::zeros(2, 2)];
        let rep = check_prop5_bound(&rho, &drho, &DMatrix::from_element(1, 1, 2.0), &[1.0]).unwrap();
        assert_eq!((rep.lhs, rep.rhs), (1.0, 0.0));
        assert!(rep.passed && !rep.tight);
        // Full rank: both sides vanish.
        let rho = DensityMatrix::new(CMat::identity(3, 3) / C64::new(3.0, 0.0)).unwrap();
        let mut d = CMat::zeros(3, 3);
        d[(0, 0)] = C64::new(0.1, 0.0);
        d[(1, 1)] = C64::new(-0.1, 0.0);
        let rep = check_prop5_bound(&rho, &[d], &DMatrix::zeros(1, 1), &[1.0]).unwrap();
        assert!(rep.tight && rep.passed);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        /// Constant-rank orbits saturate the bound, so the full-sum form equals chi_mixed.
        #[test]
        fn unitary_orbits_are_tight(seed in 0u64..10_000, rank in 1usize..4, extra in 1usize..3) {
            let d = rank + extra;
            let mut spec = vec![0.0; d];
            let w: Vec<f64> = (1..=rank).map(|i| i as f64).collect();
            let tot: f64 = w.iter().sum();
            for (i, x) in w.iter().enumerate() { spec[i] = x / tot; }
            let (rho, drho, hess) = unitary_orbit(&spec, 2, seed).unwrap();
            let v = [1.0, -0.7];
            let rep = check_prop5_bound(&rho, &drho, &hess, &v).unwrap();
            prop_assert!(rep.tight, "lhs {} rhs {}", rep.lhs, rep.rhs);
            let res = chi_mixed(&rho, &drho, &hess).unwrap();
            let full = chi_mixed_full_sum(&rho, &drho).unwrap();
            prop_assert!((full - res.chi).norm() < 1e-8);
        }

        /// χ_Fc ≤ χ_F for random complex states in random bases.
        #[test]
        fn measured_susceptibility_is_bounded(seed in 0u64..10_000, d in 2usize..6) {
            let mut r = rng::stream(seed, &[77]);
            let psi = CVec::from_fn(d, |_, _| C64::new(r.sample(StandardNormal), r.sample(StandardNormal))).normalize();
            let der = CVec::from_fn(d, |_, _| C64::new(r.sample(StandardNormal), r.sample(StandardNormal)));
            // Keep the norm fixed to first order.
            let der = &der - &psi * C64::new(psi.dotc(&der).re, 0.0);
            let st = QuantumState::new(psi).unwrap().with_derivs(vec![der]).unwrap();
            let u = haar_unitary(d, &mut r);
            let fc = chi_fc_of_state(&st, Some(&u)).unwrap()[(0, 0)];
            let f = chi_pure(&st).unwrap().chi[(0, 0)];
            prop_assert!(fc <= f * (1.0 + 1e-9) + 1e-12);
        }
    }
}
