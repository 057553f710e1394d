use std::fmt;
use std::str::FromStr;

use super::hamiltonian::{HamiltonianBuilder, SparseHamiltonian};
use crate::error::{Error, Result};

/// Largest supported Hilbert-space dimension, `2^16`.
pub const MAX_QUBITS: usize = 16;

const XXZ_PINNING: f64 = 0.1;
const XXZ_DEGENERACY_GUARD: f64 = 2e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// `H = h Σ X_i − Σ Z_i Z_{i+1}` on a ring, `h = 2λ`.
    Tfim,
    /// Frustrated Ising ladder with `K = 1`, `s = λ0`, `U = λ1`, periodic rungs.
    /// Qubit `2i` is the top site of rung `i` and `2i + 1` the bottom site.
    FilLadder,
    /// Kitaev chain with `t = 1`, `μ = 8λ − 4`, periodic in the fermions
    /// (`c_L = c_0`). Site `i` occupied means bit `i` is set.
    Kitaev,
    /// Open bond-alternating XXZ chain, `J' = 5λ0 / 2`, `δ = 7λ1 / 2`.
    XxzBondAlt,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Tfim => "tfim",
            ModelKind::FilLadder => "fil",
            ModelKind::Kitaev => "kitaev",
            ModelKind::XxzBondAlt => "xxz",
        }
    }

    pub fn dims(self) -> usize {
        match self {
            ModelKind::Tfim | ModelKind::Kitaev => 1,
            ModelKind::FilLadder | ModelKind::XxzBondAlt => 2,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tfim" => Ok(ModelKind::Tfim),
            "fil" => Ok(ModelKind::FilLadder),
            "kitaev" => Ok(ModelKind::Kitaev),
            "xxz" => Ok(ModelKind::XxzBondAlt),
            other => Err(Error::InvalidArgument(format!("unknown quantum model {other:?}"))),
        }
    }
}

/// A quantum lattice model on `n_qubits` qubits.
///
/// For the ladder `size` counts rungs (two qubits each); otherwise it counts
/// sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub size: usize,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, size: usize) -> Result<Self> {
        let spec = Self { kind, size };
        let min = match kind {
            ModelKind::Tfim | ModelKind::Kitaev => 3,
            ModelKind::FilLadder => 3,
            ModelKind::XxzBondAlt => 2,
        };
        if size < min {
            return Err(Error::InvalidArgument(format!("{kind} needs size >= {min}, got {size}")));
        }
        if spec.n_qubits() > MAX_QUBITS {
            return Err(Error::InvalidArgument(format!(
                "{kind} with {} qubits exceeds the {MAX_QUBITS}-qubit limit",
                spec.n_qubits()
            )));
        }
        Ok(spec)
    }

    pub fn n_qubits(&self) -> usize {
        match self.kind {
            ModelKind::FilLadder => 2 * self.size,
            _ => self.size,
        }
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits()
    }

    pub fn dims(&self) -> usize {
        self.kind.dims()
    }

    /// Physical parameters at grid coordinates `λ`, in the order the model
    /// documentation names them.
    pub fn physical(&self, lambda: &[f64]) -> Result<Vec<f64>> {
        if lambda.len() != self.dims() {
            return Err(Error::DimensionMismatch {
                left: lambda.len(),
                right: self.dims(),
            });
        }
        let ok = match self.kind {
            ModelKind::Kitaev => lambda[0] > -1e-12 && lambda[0] < 1.0,
            _ => lambda.iter().all(|l| (-1e-12..=1.0 + 1e-12).contains(l)),
        };
        if !ok || lambda.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidArgument(format!("{} parameters {lambda:?} outside the domain", self.kind)));
        }
        Ok(match self.kind {
            ModelKind::Tfim => vec![2.0 * lambda[0]],
            ModelKind::FilLadder => vec![lambda[0], lambda[1]],
            ModelKind::Kitaev => vec![8.0 * lambda[0] - 4.0],
            ModelKind::XxzBondAlt => vec![2.5 * lambda[0], 3.5 * lambda[1]],
        })
    }
}

fn z(bits: usize, q: usize) -> f64 {
    if bits >> q & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Assembles `H(λ)` in the computational basis and verifies it is Hermitian
/// and real.
pub fn build_hamiltonian(spec: &ModelSpec, lambda: &[f64]) -> Result<SparseHamiltonian> {
    build_physical(spec, &spec.physical(lambda)?)
}

/// As [`build_hamiltonian`], but from physical parameters (`h`, `(s, U)`,
/// `μ` or `(J', δ)`) without the grid-domain check.
pub fn build_physical(spec: &ModelSpec, p: &[f64]) -> Result<SparseHamiltonian> {
    if p.len() != spec.dims() || p.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("bad {} parameters {p:?}", spec.kind)));
    }
    let n = spec.n_qubits();
    let d = spec.dim();
    let mut b = HamiltonianBuilder::new(d);
    match spec.kind {
        ModelKind::Tfim => {
            let h = p[0];
            for s in 0..d {
                let diag: f64 = (0..n).map(|i| -z(s, i) * z(s, (i + 1) % n)).sum();
                b.add_real(s, s, diag);
                for i in 0..n {
                    b.add_real(s ^ (1 << i), s, h);
                }
            }
        }
        ModelKind::FilLadder => {
            let (sp, u) = (p[0], p[1]);
            let l = spec.size;
            let top = |i: usize| 2 * (i % l);
            let bot = |i: usize| 2 * (i % l) + 1;
            for s in 0..d {
                let mut h1 = 0.0;
                for i in 0..l {
                    h1 += z(s, top(i)) * z(s, top(i + 1)) - z(s, top(i)) * z(s, bot(i)) - z(s, bot(i)) * z(s, bot(i + 1))
                        - z(s, top(i))
                        + 0.5 * u * z(s, bot(i));
                }
                b.add_real(s, s, sp * h1);
                for q in 0..n {
                    b.add_real(s ^ (1 << q), s, -(1.0 - sp));
                }
            }
        }
        ModelKind::Kitaev => {
            let mu = p[0];
            let l = n;
            for s in 0..d {
                b.add_real(s, s, -mu * s.count_ones() as f64);
                for i in 0..l {
                    let j = (i + 1) % l;
                    // -t (c†_j c_i + c_j c_i + h.c.); the conjugates are added
                    // when the loop reaches the image state.
                    for ops in [[Op::Create(j), Op::Annihilate(i)], [Op::Annihilate(j), Op::Annihilate(i)]] {
                        for o in [ops, adjoint(ops)] {
                            if let Some((sign, t)) = apply(&o, s) {
                                b.add_real(t, s, -sign);
                            }
                        }
                    }
                }
            }
        }
        ModelKind::XxzBondAlt => {
            let (jp, delta) = (p[0], p[1]);
            for s in 0..d {
                let mut diag = XXZ_PINNING * z(s, 0);
                let mz: f64 = (0..n).map(|q| z(s, q)).sum();
                diag += XXZ_DEGENERACY_GUARD * mz * mz;
                for i in 1..n {
                    let c = if i % 2 == 1 { 1.0 } else { jp };
                    diag += c * delta * z(s, i) * z(s, i - 1);
                    // XX + YY maps |01> <-> |10> with amplitude 2 and kills |00>, |11>.
                    if (s >> i & 1) != (s >> (i - 1) & 1) {
                        b.add_real(s ^ (0b11 << (i - 1)), s, 2.0 * c);
                    }
                }
                b.add_real(s, s, diag);
            }
        }
    }
    let h = b.build()?;
    if !h.is_real() {
        return Err(Error::Numeric(format!("{} Hamiltonian has complex entries", spec.kind)));
    }
    Ok(h)
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Create(usize),
    Annihilate(usize),
}

fn adjoint(ops: [Op; 2]) -> [Op; 2] {
    let flip = |o| match o {
        Op::Create(j) => Op::Annihilate(j),
        Op::Annihilate(j) => Op::Create(j),
    };
    [flip(ops[1]), flip(ops[0])]
}

/// Applies a product of fermion operators (rightmost first) to a Fock state,
/// with the string `Π_{k<j} Z_k` giving sign `(-1)^{occupied below j}`.
fn apply(ops: &[Op], mut s: usize) -> Option<(f64, usize)> {
    let mut sign = 1.0;
    for op in ops.iter().rev() {
        let (j, want) = match *op {
            Op::Create(j) => (j, 0),
            Op::Annihilate(j) => (j, 1),
        };
        if s >> j & 1 != want {
            return None;
        }
        if (s & ((1 << j) - 1)).count_ones() % 2 == 1 {
            sign = -sign;
        }
        s ^= 1 << j;
    }
    Some((sign, s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fidelity::{CMat, C64};

    fn pauli_chain(ops: &[(usize, char)], n: usize) -> CMat {
        let one = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        let single = |c: char| match c {
            'X' => CMat::from_row_slice(2, 2, &[0.0.into(), one, one, 0.0.into()]),
            'Y' => CMat::from_row_slice(2, 2, &[0.0.into(), -i, i, 0.0.into()]),
            'Z' => CMat::from_row_slice(2, 2, &[one, 0.0.into(), 0.0.into(), -one]),
            _ => CMat::identity(2, 2),
        };
        // Qubit 0 is the least significant bit, so it is the rightmost factor.
        let mut m = CMat::identity(1, 1);
        for q in (0..n).rev() {
            let c = ops.iter().find(|(k, _)| *k == q).map_or('I', |(_, c)| *c);
            m = m.kronecker(&single(c));
        }
        m
    }

    #[test]
    fn tfim_matches_pauli_products() {
        let n = 4;
        let spec = ModelSpec::new(ModelKind::Tfim, n).unwrap();
        let h = build_hamiltonian(&spec, &[0.35]).unwrap().to_dense();
        let mut oracle = CMat::zeros(16, 16);
        for i in 0..n {
            oracle += pauli_chain(&[(i, 'X')], n) * C64::new(0.7, 0.0);
            oracle -= pauli_chain(&[(i, 'Z'), ((i + 1) % n, 'Z')], n);
        }
        assert!((h - oracle).norm() < 1e-12);
    }

    #[test]
    fn xxz_matches_pauli_products() {
        let n = 5;
        let spec = ModelSpec::new(ModelKind::XxzBondAlt, n).unwrap();
        let (l0, l1) = (0.3, 0.6);
        let h = build_hamiltonian(&spec, &[l0, l1]).unwrap().to_dense();
        let (jp, delta) = (2.5 * l0, 3.5 * l1);
        let mut oracle = pauli_chain(&[(0, 'Z')], n) * C64::new(0.1, 0.0);
        let mut mz = CMat::zeros(32, 32);
        for i in 0..n {
            mz += pauli_chain(&[(i, 'Z')], n);
        }
        oracle += &mz * &mz * C64::new(2e-8, 0.0);
        for i in 1..n {
            let c = if i % 2 == 1 { 1.0 } else { jp };
            let bond = pauli_chain(&[(i, 'X'), (i - 1, 'X')], n)
                + pauli_chain(&[(i, 'Y'), (i - 1, 'Y')], n)
                + pauli_chain(&[(i, 'Z'), (i - 1, 'Z')], n) * C64::new(delta, 0.0);
            oracle += bond * C64::new(c, 0.0);
        }
        assert!((h - oracle).norm() < 1e-12);
    }

    #[test]
    fn fil_matches_pauli_products() {
        let l = 3;
        let spec = ModelSpec::new(ModelKind::FilLadder, l).unwrap();
        let (s, u) = (0.4, 0.8);
        let h = build_hamiltonian(&spec, &[s, u]).unwrap().to_dense();
        let n = 2 * l;
        let (t, b) = (|i: usize| 2 * (i % 3), |i: usize| 2 * (i % 3) + 1);
        let mut h0 = CMat::zeros(64, 64);
        let mut h1 = CMat::zeros(64, 64);
        for i in 0..l {
            h0 -= pauli_chain(&[(t(i), 'X')], n) + pauli_chain(&[(b(i), 'X')], n);
            h1 += pauli_chain(&[(t(i), 'Z'), (t(i + 1), 'Z')], n);
            h1 -= pauli_chain(&[(t(i), 'Z'), (b(i), 'Z')], n);
            h1 -= pauli_chain(&[(b(i), 'Z'), (b(i + 1), 'Z')], n);
            h1 -= pauli_chain(&[(t(i), 'Z')], n);
            h1 += pauli_chain(&[(b(i), 'Z')], n) * C64::new(u / 2.0, 0.0);
        }
        let oracle = h0 * C64::new(1.0 - s, 0.0) + h1 * C64::new(s, 0.0);
        assert!((h - oracle).norm() < 1e-12);
    }

    /// Jordan–Wigner image `c_i = (Π_{j<i} Z_j)(X_i + iY_i)/2` built from
    /// Pauli matrices, independent of the Fock-space sign rule.
    fn jw_annihilator(i: usize, n: usize) -> CMat {
        let mut string: Vec<(usize, char)> = (0..i).map(|j| (j, 'Z')).collect();
        string.push((i, 'X'));
        let x = pauli_chain(&string, n);
        string.pop();
        string.push((i, 'Y'));
        let y = pauli_chain(&string, n);
        (x + y * C64::new(0.0, 1.0)) * C64::new(0.5, 0.0)
    }

    #[test]
    fn kitaev_matches_jordan_wigner_operators() {
        let l = 4;
        let spec = ModelSpec::new(ModelKind::Kitaev, l).unwrap();
        let lambda = 0.3;
        let mu = 8.0 * lambda - 4.0;
        let h = build_hamiltonian(&spec, &[lambda]).unwrap().to_dense();
        let c: Vec<CMat> = (0..l).map(|i| jw_annihilator(i, l)).collect();
        let mut oracle = CMat::zeros(16, 16);
        for i in 0..l {
            let j = (i + 1) % l;
            let hop = c[j].adjoint() * &c[i] + &c[j] * &c[i];
            oracle -= &hop + hop.adjoint();
            oracle -= c[i].adjoint() * &c[i] * C64::new(mu, 0.0);
        }
        assert!((h - oracle).norm() < 1e-12);
    }

    #[test]
    fn domain_and_size_checks() {
        assert!(ModelSpec::new(ModelKind::FilLadder, 9).is_err());
        assert!(ModelSpec::new(ModelKind::Tfim, 2).is_err());
        let k = ModelSpec::new(ModelKind::Kitaev, 6).unwrap();
        assert!(build_hamiltonian(&k, &[1.0]).is_err());
        assert!(build_hamiltonian(&k, &[0.5, 0.5]).is_err());
        assert_eq!("xxz".parse::<ModelKind>().unwrap(), ModelKind::XxzBondAlt);
    }
}
