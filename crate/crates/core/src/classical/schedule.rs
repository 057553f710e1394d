use super::family::ISING_TC;
use crate::error::{Error, Result};
use crate::store::manifest::RunManifest;

/// Annealing schedule for the temperature sweep of independent chains.
///
/// At each temperature a chain runs `⌊pre·d(T)⌋` sweeps, then
/// `samples_per_point` times: `⌊gap·d(T)⌋` sweeps and one sample, where
/// `d(T) = 1 + (0.1 + (T − T_c)²)⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct McmcSchedule {
    pub n_chains: usize,
    pub initial_temperature: f64,
    pub equilibration_sweeps: usize,
    pub pre: f64,
    pub gap: f64,
    pub samples_per_point: usize,
    pub tc: f64,
}

impl Default for McmcSchedule {
    fn default() -> Self {
        Self {
            n_chains: 70,
            initial_temperature: 4.0,
            equilibration_sweeps: 70,
            pre: 30.0,
            gap: 9.0,
            samples_per_point: 2,
            tc: ISING_TC,
        }
    }
}

impl McmcSchedule {
    pub fn d(&self, t: f64) -> f64 {
        1.0 + 1.0 / (0.1 + (t - self.tc).powi(2))
    }

    /// Sweeps before the first sample (not counting the first gap).
    pub fn pre_sweeps(&self, t: f64) -> usize {
        ((self.pre * self.d(t)).floor() as usize).max(1)
    }

    pub fn gap_sweeps(&self, t: f64) -> usize {
        ((self.gap * self.d(t)).floor() as usize).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_chains == 0 || self.samples_per_point == 0 || self.equilibration_sweeps == 0 {
            return Err(Error::InvalidArgument("schedule counts must be at least 1".into()));
        }
        if !(self.initial_temperature > 0.0) || !(self.pre > 0.0) || !(self.gap > 0.0) {
            return Err(Error::InvalidArgument("schedule temperatures and factors must be positive".into()));
        }
        Ok(())
    }

    pub fn record(&self, m: &mut RunManifest) {
        m.set("chains", self.n_chains);
        m.set("initial_temperature", self.initial_temperature);
        m.set("equilibration_sweeps", self.equilibration_sweeps);
        m.set("pre_factor", self.pre);
        m.set("gap_factor", self.gap);
        m.set("samples_per_point", self.samples_per_point);
        m.set("tc", self.tc);
    }

    pub fn from_manifest(m: &RunManifest) -> Result<Self> {
        Ok(Self {
            n_chains: m.param_parsed("chains")?,
            initial_temperature: m.param_parsed("initial_temperature")?,
            equilibration_sweeps: m.param_parsed("equilibration_sweeps")?,
            pre: m.param_parsed("pre_factor")?,
            gap: m.param_parsed("gap_factor")?,
            samples_per_point: m.param_parsed("samples_per_point")?,
            tc: m.param_parsed("tc")?,
        })
    }
}
