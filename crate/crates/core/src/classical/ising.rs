use rand::Rng as _;
use rayon::prelude::*;

use super::family::ClassicalFamily;
use super::lattice::{AcceptTable, Couplings, IsingLattice};
use super::schedule::McmcSchedule;
use crate::error::{Error, Result};
use crate::rng::{self, Rng};
use crate::store::dataset::SampleDataset;
use crate::store::grid::ParameterGrid;
use crate::store::manifest::RunManifest;

const CHAIN_STREAM: u64 = 0x1510;

/// Bits and energy of a sample after a random global flip and cyclic shift.
pub(crate) fn record(lat: &IsingLattice, c: &Couplings, rng: &mut Rng) -> (Vec<u64>, f64) {
    let l = lat.size();
    let flip = rng.random::<bool>();
    let (dx, dy) = (rng.random_range(0..l), rng.random_range(0..l));
    (lat.transformed_bits(flip, dx, dy), c.energy(&lat.sums()))
}

/// One chain sweeping the grid from high to low temperature.
///
/// Returns the samples for each grid point, in grid order.
fn run_chain(l: usize, grid: &ParameterGrid, schedule: &McmcSchedule, rng: &mut Rng) -> Result<Vec<Vec<(Vec<u64>, f64)>>> {
    let c = Couplings::ferromagnet();
    let family = ClassicalFamily::Ising { l };
    let mut lat = IsingLattice::random(l, rng)?;
    let table = AcceptTable::new(&c, 1.0 / schedule.initial_temperature);
    for _ in 0..schedule.equilibration_sweeps {
        lat.sweep(&table, rng);
    }
    let mut out = vec![Vec::new(); grid.len()];
    for p in (0..grid.len()).rev() {
        let (_, t) = family.at(grid.point(p))?;
        let table = AcceptTable::new(&c, 1.0 / t);
        for _ in 0..schedule.pre_sweeps(t) {
            lat.sweep(&table, rng);
        }
        for _ in 0..schedule.samples_per_point {
            for _ in 0..schedule.gap_sweeps(t) {
                lat.sweep(&table, rng);
            }
            out[p].push(record(&lat, &c, rng));
        }
    }
    Ok(out)
}

/// Gibbs samples of the `L x L` ferromagnet at `T = 4λ` for every grid point.
///
/// Independent chains run in parallel; samples are stored in chain order, so
/// the output does not depend on the thread count. Energies are `H(x)` in
/// units of the coupling.
pub fn ising_generate(l: usize, grid: &ParameterGrid, schedule: &McmcSchedule, seed: u64) -> Result<SampleDataset> {
    if l < 3 {
        return Err(Error::InvalidArgument(format!("Ising lattice needs L >= 3, got {l}")));
    }
    if grid.dims() != 1 {
        return Err(Error::InvalidArgument("Ising grid must be one-dimensional".into()));
    }
    schedule.validate()?;
    let chains: Vec<_> = (0..schedule.n_chains)
        .into_par_iter()
        .map(|k| run_chain(l, grid, schedule, &mut rng::stream(seed, &[CHAIN_STREAM, k as u64])))
        .collect::<Result<_>>()?;
    let mut manifest = RunManifest::new("ising", seed).with("L", l);
    schedule.record(&mut manifest);
    let mut ds = SampleDataset::new(manifest, grid.clone(), l * l);
    for chain in &chains {
        for (p, samples) in chain.iter().enumerate() {
            for (bits, e) in samples {
                ds.push(p, bits, Some(*e));
            }
        }
    }
    Ok(ds)
}
