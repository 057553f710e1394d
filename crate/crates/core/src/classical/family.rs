use super::lattice::{bits_to_spins, BondSums, Couplings, IsingLattice};
use crate::error::{Error, Result};

/// Critical temperature of the infinite 2D Ising model, `2 / ln(1 + √2)`.
pub const ISING_TC: f64 = 2.269_185_314_213_022;

/// Parameterized Gibbs families on an `L x L` periodic lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassicalFamily {
    /// Ferromagnet, `T = 4 λ₀`.
    Ising { l: usize },
    /// `J₁ = λ₀`, `J₂ = 1 − λ₀`, `T = 2.5 λ₁`.
    IsNnn { l: usize },
}

impl ClassicalFamily {
    pub fn l(&self) -> usize {
        match *self {
            ClassicalFamily::Ising { l } | ClassicalFamily::IsNnn { l } => l,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.l() * self.l()
    }

    pub fn name(&self) -> &'static str {
        match self {
            ClassicalFamily::Ising { .. } => "ising",
            ClassicalFamily::IsNnn { .. } => "isnnn",
        }
    }

    pub fn dims(&self) -> usize {
        match self {
            ClassicalFamily::Ising { .. } => 1,
            ClassicalFamily::IsNnn { .. } => 2,
        }
    }

    /// Couplings and temperature at `λ`.
    pub fn at(&self, lambda: [f64; 2]) -> Result<(Couplings, f64)> {
        let (c, t) = match self {
            ClassicalFamily::Ising { .. } => (Couplings::ferromagnet(), 4.0 * lambda[0]),
            ClassicalFamily::IsNnn { .. } => (
                Couplings {
                    nn: lambda[0],
                    nnn: 1.0 - lambda[0],
                    h: 0.0,
                },
                2.5 * lambda[1],
            ),
        };
        if !(t > 0.0) {
            return Err(Error::InvalidArgument(format!("temperature must be positive at λ = {lambda:?}")));
        }
        Ok((c, t))
    }

    /// `H_λ(x) / T(λ)`.
    pub fn reduced_energy(&self, lambda: [f64; 2], sums: &BondSums) -> Result<f64> {
        let (c, t) = self.at(lambda)?;
        Ok(c.energy(sums) / t)
    }

    pub fn bond_sums(&self, bits: &[u64]) -> BondSums {
        let mut lat = IsingLattice::new(self.l()).expect("family lattice size validated at construction");
        lat.set_spins(&bits_to_spins(bits, self.n_sites()));
        lat.sums()
    }
}
