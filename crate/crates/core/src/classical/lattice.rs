use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::store::dataset::{get_bit, words_for_bits};

/// `H = nn Σ_NN s_i s_j + nnn Σ_NNN s_i s_j − h Σ s_i`.
///
/// The ferromagnetic Ising model has `nn = −1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Couplings {
    pub nn: f64,
    pub nnn: f64,
    pub h: f64,
}

impl Couplings {
    pub fn ferromagnet() -> Self {
        Self {
            nn: -1.0,
            nnn: 0.0,
            h: 0.0,
        }
    }

    pub fn energy(&self, stats: &BondSums) -> f64 {
        self.nn * stats.nn as f64 + self.nnn * stats.nnn as f64 - self.h * stats.mag as f64
    }
}

/// Integer sufficient statistics of a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BondSums {
    pub nn: i64,
    pub nnn: i64,
    pub mag: i64,
}

/// Metropolis acceptance probability `min(1, exp(−β ΔE))`.
pub fn metropolis_accept(delta_e: f64, beta: f64) -> f64 {
    if delta_e <= 0.0 {
        1.0
    } else {
        (-beta * delta_e).exp()
    }
}

/// Periodic `L x L` square lattice with nearest and diagonal neighbours.
///
/// Site `i = y L + x`. Each site lists right, left, down, up, then the four
/// diagonals; bonds are `(i, right)`, `(i, down)`, `(i, right-down)` and
/// `(i, right-up)`, so neighbour multiplicities match bond multiplicities
/// even for `L = 2`.
#[derive(Debug, Clone)]
pub struct IsingLattice {
    l: usize,
    spins: Vec<i8>,
    nbr: Vec<[u32; 8]>,
    sums: BondSums,
}

impl IsingLattice {
    pub fn new(l: usize) -> Result<Self> {
        if l < 2 {
            return Err(Error::InvalidArgument(format!("lattice size must be at least 2, got {l}")));
        }
        let n = l * l;
        let at = |x: usize, y: usize| (y % l * l + x % l) as u32;
        let nbr = (0..n)
            .map(|i| {
                let (x, y) = (i % l + l, i / l + l);
                [
                    at(x + 1, y),
                    at(x - 1, y),
                    at(x, y + 1),
                    at(x, y - 1),
                    at(x + 1, y + 1),
                    at(x + 1, y - 1),
                    at(x - 1, y + 1),
                    at(x - 1, y - 1),
                ]
            })
            .collect();
        let mut lat = Self {
            l,
            spins: vec![1; n],
            nbr,
            sums: BondSums::default(),
        };
        lat.sums = lat.recompute_sums();
        Ok(lat)
    }

    pub fn random(l: usize, rng: &mut Rng) -> Result<Self> {
        let mut lat = Self::new(l)?;
        for s in &mut lat.spins {
            *s = if rng.random::<bool>() { 1 } else { -1 };
        }
        lat.sums = lat.recompute_sums();
        Ok(lat)
    }

    pub fn size(&self) -> usize {
        self.l
    }

    pub fn n_sites(&self) -> usize {
        self.spins.len()
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn sums(&self) -> BondSums {
        self.sums
    }

    pub fn set_spins(&mut self, spins: &[i8]) {
        self.spins.copy_from_slice(spins);
        self.sums = self.recompute_sums();
    }

    pub fn recompute_sums(&self) -> BondSums {
        let mut s = BondSums::default();
        for (i, &si) in self.spins.iter().enumerate() {
            let nb = &self.nbr[i];
            let si = i64::from(si);
            s.nn += si * (i64::from(self.spins[nb[0] as usize]) + i64::from(self.spins[nb[2] as usize]));
            s.nnn += si * (i64::from(self.spins[nb[4] as usize]) + i64::from(self.spins[nb[5] as usize]));
            s.mag += si;
        }
        s
    }

    /// `(s_i Σ_NN s_j, s_i Σ_NNN s_j)`.
    #[inline]
    fn local_fields(&self, i: usize) -> (i64, i64) {
        let nb = &self.nbr[i];
        let sp = |k: usize| i64::from(self.spins[nb[k] as usize]);
        let si = i64::from(self.spins[i]);
        (si * (sp(0) + sp(1) + sp(2) + sp(3)), si * (sp(4) + sp(5) + sp(6) + sp(7)))
    }

    pub fn flip_delta(&self, i: usize, c: &Couplings) -> f64 {
        let (a, b) = self.local_fields(i);
        -2.0 * (c.nn * a as f64 + c.nnn * b as f64) + 2.0 * c.h * f64::from(self.spins[i])
    }

    pub fn flip(&mut self, i: usize) {
        let (a, b) = self.local_fields(i);
        self.sums.nn -= 2 * a;
        self.sums.nnn -= 2 * b;
        self.sums.mag -= 2 * i64::from(self.spins[i]);
        self.spins[i] = -self.spins[i];
    }

    /// Sites of row `k` (`k < L`) or column `k − L`.
    fn line_sites(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        let l = self.l;
        (0..l).map(move |t| if k < l { k * l + t } else { t * l + (k - l) })
    }

    /// Change in `(Σ_NN, Σ_NNN, Σ s)` from flipping line `k`.
    fn line_delta_sums(&self, k: usize) -> BondSums {
        let outside_nn: [usize; 2] = if k < self.l { [2, 3] } else { [0, 1] };
        let mut d = BondSums::default();
        for i in self.line_sites(k) {
            let nb = &self.nbr[i];
            let si = i64::from(self.spins[i]);
            let n1: i64 = outside_nn.iter().map(|&m| i64::from(self.spins[nb[m] as usize])).sum();
            let n2: i64 = (4..8).map(|m| i64::from(self.spins[nb[m] as usize])).sum();
            d.nn -= 2 * si * n1;
            d.nnn -= 2 * si * n2;
            d.mag -= 2 * si;
        }
        d
    }

    /// Energy change from flipping every spin of row `k` (`k < L`) or column `k − L`.
    pub fn line_flip_delta(&self, k: usize, c: &Couplings) -> f64 {
        c.energy(&self.line_delta_sums(k))
    }

    pub fn flip_line(&mut self, k: usize) {
        let d = self.line_delta_sums(k);
        self.sums.nn += d.nn;
        self.sums.nnn += d.nnn;
        self.sums.mag += d.mag;
        let sites: Vec<usize> = self.line_sites(k).collect();
        for i in sites {
            self.spins[i] = -self.spins[i];
        }
    }

    /// One sweep of single-spin Metropolis proposals in raster order.
    pub fn sweep(&mut self, table: &AcceptTable, rng: &mut Rng) {
        for i in 0..self.spins.len() {
            let (a, b) = self.local_fields(i);
            let p = table.get(self.spins[i], a, b);
            if p >= 1.0 || rng.random::<f64>() < p {
                self.flip(i);
            }
        }
    }

    /// `count` Metropolis proposals flipping a uniformly random row or column.
    pub fn line_moves(&mut self, c: &Couplings, beta: f64, count: usize, rng: &mut Rng) {
        for _ in 0..count {
            let k = rng.random_range(0..2 * self.l);
            let p = metropolis_accept(self.line_flip_delta(k, c), beta);
            if p >= 1.0 || rng.random::<f64>() < p {
                self.flip_line(k);
            }
        }
    }

    /// Packed bits, bit `i` set when site `i` has spin −1.
    pub fn to_bits(&self) -> Vec<u64> {
        spins_to_bits(&self.spins)
    }

    /// Bits of the lattice after an optional global flip and a cyclic shift.
    pub fn transformed_bits(&self, flip: bool, dx: usize, dy: usize) -> Vec<u64> {
        let l = self.l;
        let mut out = vec![0; self.spins.len()];
        for y in 0..l {
            for x in 0..l {
                let s = self.spins[y * l + x];
                out[(y + dy) % l * l + (x + dx) % l] = if flip { -s } else { s };
            }
        }
        spins_to_bits(&out)
    }
}

pub fn spins_to_bits(spins: &[i8]) -> Vec<u64> {
    let mut w = vec![0u64; words_for_bits(spins.len())];
    for (i, &s) in spins.iter().enumerate() {
        if s < 0 {
            w[i / 64] |= 1 << (i % 64);
        }
    }
    w
}

pub fn bits_to_spins(bits: &[u64], n: usize) -> Vec<i8> {
    (0..n).map(|i| if get_bit(bits, i) { -1 } else { 1 }).collect()
}

/// Acceptance probabilities for every local configuration at fixed β.
#[derive(Debug, Clone)]
pub struct AcceptTable {
    /// Indexed by `(s > 0, a + 4, b + 4)`.
    p: [[[f64; 9]; 9]; 2],
}

impl AcceptTable {
    pub fn new(c: &Couplings, beta: f64) -> Self {
        let mut p = [[[0.0; 9]; 9]; 2];
        for (si, s) in [-1.0, 1.0].into_iter().enumerate() {
            for a in -4i64..=4 {
                for b in -4i64..=4 {
                    let de = -2.0 * (c.nn * a as f64 + c.nnn * b as f64) + 2.0 * c.h * s;
                    p[si][(a + 4) as usize][(b + 4) as usize] = metropolis_accept(de, beta);
                }
            }
        }
        Self { p }
    }

    #[inline]
    fn get(&self, s: i8, a: i64, b: i64) -> f64 {
        self.p[usize::from(s > 0)][(a + 4) as usize][(b + 4) as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;

    fn brute_energy(spins: &[i8], l: usize, c: &Couplings) -> f64 {
        let s = |x: usize, y: usize| f64::from(spins[(y % l) * l + x % l]);
        let mut e = 0.0;
        for y in 0..l {
            for x in 0..l {
                let (xx, yy) = (x + l, y + l);
                let si = s(xx, yy);
                e += c.nn * si * (s(xx + 1, yy) + s(xx, yy + 1));
                e += c.nnn * si * (s(xx + 1, yy + 1) + s(xx + 1, yy - 1));
                e -= c.h * si;
            }
        }
        e
    }

    #[test]
    fn aligned_ferromagnet_energy() {
        let lat = IsingLattice::new(4).unwrap();
        assert_eq!(Couplings::ferromagnet().energy(&lat.sums()), -32.0);
    }

    #[test]
    fn bits_roundtrip_and_transform() {
        let mut r = rng::stream(1, &[]);
        let lat = IsingLattice::random(5, &mut r).unwrap();
        assert_eq!(bits_to_spins(&lat.to_bits(), 25), lat.spins());
        let t = bits_to_spins(&lat.transformed_bits(true, 2, 3), 25);
        let mut other = lat.clone();
        other.set_spins(&t);
        let c = Couplings { nn: 0.7, nnn: -0.3, h: 0.0 };
        assert_eq!(c.energy(&other.sums()), c.energy(&lat.sums()));
        assert_eq!(t[3 * 5 + 2], -lat.spins()[0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn incremental_energy_matches_recompute(seed: u64, l in 2usize..7, nn in -2.0f64..2.0, nnn in -2.0f64..2.0, h in -1.0f64..1.0, t in 0.3f64..5.0) {
            let c = Couplings { nn, nnn, h };
            let mut r = rng::stream(seed, &[]);
            let mut lat = IsingLattice::random(l, &mut r).unwrap();
            let table = AcceptTable::new(&c, 1.0 / t);
            let mut steps = 0;
            while steps < 10_000 {
                lat.sweep(&table, &mut r);
                lat.line_moves(&c, 1.0 / t, 2, &mut r);
                steps += l * l + 2;
            }
            prop_assert_eq!(lat.sums(), lat.recompute_sums());
            prop_assert!((c.energy(&lat.sums()) - brute_energy(lat.spins(), l, &c)).abs() < 1e-9);
        }

        #[test]
        fn accept_table_matches_direct(seed: u64, nn in -2.0f64..2.0, nnn in -2.0f64..2.0, h in -1.0f64..1.0, beta in 0.1f64..3.0) {
            let c = Couplings { nn, nnn, h };
            let table = AcceptTable::new(&c, beta);
            let lat = IsingLattice::random(4, &mut rng::stream(seed, &[2])).unwrap();
            for i in 0..16 {
                let (a, b) = lat.local_fields(i);
                let direct = metropolis_accept(lat.flip_delta(i, &c), beta);
                prop_assert!((table.get(lat.spins()[i], a, b) - direct).abs() < 1e-15);
            }
        }

        #[test]
        fn flip_deltas_match_brute_force(seed: u64, l in 2usize..6, nn in -2.0f64..2.0, nnn in -2.0f64..2.0, h in -1.0f64..1.0) {
            let c = Couplings { nn, nnn, h };
            let mut r = rng::stream(seed, &[1]);
            let lat = IsingLattice::random(l, &mut r).unwrap();
            let e0 = brute_energy(lat.spins(), l, &c);
            for i in 0..l * l {
                let mut m = lat.clone();
                m.flip(i);
                prop_assert!((brute_energy(m.spins(), l, &c) - e0 - lat.flip_delta(i, &c)).abs() < 1e-9);
            }
            for k in 0..2 * l {
                let mut m = lat.clone();
                m.flip_line(k);
                prop_assert!((brute_energy(m.spins(), l, &c) - e0 - lat.line_flip_delta(k, &c)).abs() < 1e-9);
                prop_assert_eq!(m.sums(), m.recompute_sums());
            }
        }
    }
}
