use rand::Rng as _;
use rayon::prelude::*;

use super::family::ClassicalFamily;
use super::ising::record;
use super::lattice::{AcceptTable, Couplings, IsingLattice};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};
use crate::store::dataset::SampleDataset;
use crate::store::grid::ParameterGrid;
use crate::store::manifest::RunManifest;

const PT_STREAM: u64 = 0x7e77;

/// Parallel-tempering schedule for one column of constant `λ₀`.
///
/// Each step is a Metropolis sweep plus `line_moves` row/column flips per
/// replica, followed by swap attempts between adjacent temperatures with
/// alternating even/odd pairing.
#[derive(Debug, Clone, PartialEq)]
pub struct PtSchedule {
    pub n_chains: usize,
    pub anneal_factor: f64,
    pub anneal_steps: usize,
    pub reheat_steps: usize,
    pub sample_gap: usize,
    pub samples_per_point: usize,
    pub line_moves: usize,
}

impl Default for PtSchedule {
    fn default() -> Self {
        Self {
            n_chains: 70,
            anneal_factor: 0.5,
            anneal_steps: 50,
            reheat_steps: 50,
            sample_gap: 32,
            samples_per_point: 2,
            line_moves: 4,
        }
    }
}

impl PtSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.n_chains == 0 || self.samples_per_point == 0 || self.sample_gap == 0 {
            return Err(Error::InvalidArgument("schedule counts must be at least 1".into()));
        }
        if !(self.anneal_factor > 0.0) {
            return Err(Error::InvalidArgument("anneal factor must be positive".into()));
        }
        Ok(())
    }

    pub fn record(&self, m: &mut RunManifest) {
        m.set("chains", self.n_chains);
        m.set("anneal_factor", self.anneal_factor);
        m.set("anneal_steps", self.anneal_steps);
        m.set("reheat_steps", self.reheat_steps);
        m.set("sample_gap", self.sample_gap);
        m.set("samples_per_point", self.samples_per_point);
        m.set("line_moves", self.line_moves);
    }

    pub fn from_manifest(m: &RunManifest) -> Result<Self> {
        Ok(Self {
            n_chains: m.param_parsed("chains")?,
            anneal_factor: m.param_parsed("anneal_factor")?,
            anneal_steps: m.param_parsed("anneal_steps")?,
            reheat_steps: m.param_parsed("reheat_steps")?,
            sample_gap: m.param_parsed("sample_gap")?,
            samples_per_point: m.param_parsed("samples_per_point")?,
            line_moves: m.param_parsed("line_moves")?,
        })
    }
}

/// Replica-exchange acceptance `min(1, exp((β_a − β_b)(E_a − E_b)))`.
pub fn swap_accept(beta_a: f64, beta_b: f64, e_a: f64, e_b: f64) -> f64 {
    ((beta_a - beta_b) * (e_a - e_b)).exp().min(1.0)
}

/// Replicas at fixed couplings, slot `j` held at inverse temperature `betas[j]`.
pub struct TemperingArray {
    couplings: Couplings,
    betas: Vec<f64>,
    tables: Vec<AcceptTable>,
    replicas: Vec<IsingLattice>,
    parity: usize,
}

impl TemperingArray {
    pub fn new(l: usize, couplings: Couplings, temperatures: &[f64], rng: &mut Rng) -> Result<Self> {
        let replicas = temperatures.iter().map(|_| IsingLattice::random(l, rng)).collect::<Result<_>>()?;
        let mut a = Self {
            couplings,
            betas: Vec::new(),
            tables: Vec::new(),
            replicas,
            parity: 0,
        };
        a.set_temperatures(temperatures);
        Ok(a)
    }

    pub fn set_temperatures(&mut self, temperatures: &[f64]) {
        self.betas = temperatures.iter().map(|t| 1.0 / t).collect();
        self.tables = self.betas.iter().map(|&b| AcceptTable::new(&self.couplings, b)).collect();
    }

    pub fn replicas(&self) -> &[IsingLattice] {
        &self.replicas
    }

    pub fn step(&mut self, line_moves: usize, rng: &mut Rng) {
        for (j, lat) in self.replicas.iter_mut().enumerate() {
            lat.sweep(&self.tables[j], rng);
            lat.line_moves(&self.couplings, self.betas[j], line_moves, rng);
        }
        let mut j = self.parity;
        while j + 1 < self.replicas.len() {
            let e_a = self.couplings.energy(&self.replicas[j].sums());
            let e_b = self.couplings.energy(&self.replicas[j + 1].sums());
            let p = swap_accept(self.betas[j], self.betas[j + 1], e_a, e_b);
            if p >= 1.0 || rng.random::<f64>() < p {
                self.replicas.swap(j, j + 1);
            }
            j += 2;
        }
        self.parity ^= 1;
    }
}

/// Samples of one PT run for every `λ₁` of column `col`, indexed by row.
fn run_column(
    l: usize,
    grid: &ParameterGrid,
    col: usize,
    schedule: &PtSchedule,
    rng: &mut Rng,
) -> Result<Vec<Vec<(Vec<u64>, f64)>>> {
    let family = ClassicalFamily::IsNnn { l };
    let n = grid.per_axis();
    let points: Vec<usize> = (0..n).map(|row| grid.index(col, row)).collect();
    let params = points.iter().map(|&p| family.at(grid.point(p))).collect::<Result<Vec<_>>>()?;
    let couplings = params[0].0;
    let temps: Vec<f64> = params.iter().map(|(_, t)| *t).collect();
    let cold: Vec<f64> = temps.iter().map(|t| t * schedule.anneal_factor).collect();
    let mut array = TemperingArray::new(l, couplings, &cold, rng)?;
    for _ in 0..schedule.anneal_steps {
        array.step(schedule.line_moves, rng);
    }
    array.set_temperatures(&temps);
    for _ in 0..schedule.reheat_steps {
        array.step(schedule.line_moves, rng);
    }
    let mut out = vec![Vec::new(); n];
    for s in 0..schedule.samples_per_point {
        if s > 0 {
            for _ in 0..schedule.sample_gap {
                array.step(schedule.line_moves, rng);
            }
        }
        for (row, lat) in array.replicas().iter().enumerate() {
            out[row].push(record(lat, &couplings, rng));
        }
    }
    Ok(out)
}

/// Gibbs samples of the NN + NNN model on a 2D grid over `(λ₀, λ₁)`.
///
/// Every `(column, chain)` pair is an independent PT run with its own RNG
/// stream; results are merged in chain order.
pub fn isnnn_generate(l: usize, grid: &ParameterGrid, schedule: &PtSchedule, seed: u64) -> Result<SampleDataset> {
    if l < 3 {
        return Err(Error::InvalidArgument(format!("lattice needs L >= 3, got {l}")));
    }
    if grid.dims() != 2 {
        return Err(Error::InvalidArgument("NNN grid must be two-dimensional".into()));
    }
    schedule.validate()?;
    let n = grid.per_axis();
    let runs: Vec<_> = (0..n * schedule.n_chains)
        .into_par_iter()
        .map(|task| {
            let (col, chain) = (task / schedule.n_chains, task % schedule.n_chains);
            run_column(l, grid, col, schedule, &mut rng::stream(seed, &[PT_STREAM, col as u64, chain as u64]))
        })
        .collect::<Result<_>>()?;
    let mut manifest = RunManifest::new("isnnn", seed).with("L", l);
    schedule.record(&mut manifest);
    let mut ds = SampleDataset::new(manifest, grid.clone(), l * l);
    for (task, run) in runs.iter().enumerate() {
        let col = task / schedule.n_chains;
        for (row, samples) in run.iter().enumerate() {
            for (bits, e) in samples {
                ds.push(grid.index(col, row), bits, Some(*e));
            }
        }
    }
    Ok(ds)
}
