use rand::seq::SliceRandom;
use rand::RngCore;
use rayon::prelude::*;

use crate::classifim::network::{spins_of, Architecture, Network, Workspace};
use crate::classifim::{geometry_for, TrainConfig};
use crate::error::{Error, Result};
use crate::evaluation::{find_peaks, SliceId};
use crate::rng;
use crate::store::{ParameterGrid, RunManifest, SampleDataset, Split};

const CANDIDATE_STREAM: u64 = 0xc0f5;
/// The trunk's parameter input is held at this value; only `x` varies.
const FIXED_LAMBDA: [f64; 1] = [0.5];

/// Settings of the per-candidate classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionConfig {
    pub site_channels: [usize; 2],
    pub hidden: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch: usize,
}

impl Default for ConfusionConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            site_channels: t.site_channels,
            hidden: t.hidden,
            learning_rate: t.learning_rate,
            momentum: t.momentum,
            epochs: 20,
            batch: t.batch,
        }
    }
}

impl ConfusionConfig {
    pub fn record(&self, m: &mut RunManifest) {
        m.set("site_channels", format!("{},{}", self.site_channels[0], self.site_channels[1]));
        m.set("hidden", self.hidden);
        m.set("learning_rate", self.learning_rate);
        m.set("momentum", self.momentum);
        m.set("epochs", self.epochs);
        m.set("batch", self.batch);
    }
}

/// Held-out accuracy of a classifier trained with labels `λ ≥ c`, per `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionCurve {
    pub candidates: Vec<f64>,
    pub accuracy: Vec<f64>,
    /// Test samples behind each accuracy.
    pub n_test: Vec<usize>,
    /// Fraction of test samples in the larger class.
    pub prior: Vec<f64>,
}

impl ConfusionCurve {
    /// Binomial standard error of an accuracy.
    pub fn std_error(&self, i: usize) -> f64 {
        let a = self.accuracy[i];
        (a * (1.0 - a) / self.n_test[i] as f64).sqrt()
    }

    /// Highest interior local maximum, the transition estimate.
    pub fn interior_maximum(&self) -> Option<usize> {
        find_peaks(&self.accuracy, 0.0)
            .into_iter()
            .max_by(|a, b| a.height.total_cmp(&b.height).then(b.index.cmp(&a.index)))
            .map(|p| p.index)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("c\taccuracy\tstderr\tn_test\tprior\n");
        for i in 0..self.candidates.len() {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                self.candidates[i],
                self.accuracy[i],
                self.std_error(i),
                self.n_test[i],
                self.prior[i]
            ));
        }
        out
    }
}

/// One-parameter dataset along a slice of a 2D dataset (`axis` varies).
pub fn slice_dataset(dataset: &SampleDataset, id: SliceId) -> Result<SampleDataset> {
    let g = &dataset.grid;
    if g.dims() == 1 {
        return Ok(dataset.clone());
    }
    if id.axis > 1 || id.fixed >= g.per_axis() {
        return Err(Error::InvalidArgument(format!("slice {id} is outside the grid")));
    }
    let grid = ParameterGrid::new(1, g.resolution(), g.per_axis(), g.offset())?;
    let mut manifest = dataset.manifest.clone();
    manifest.set("slice", id);
    let points = (0..g.per_axis())
        .map(|l| {
            let i = if id.axis == 0 { g.index(l, id.fixed) } else { g.index(id.fixed, l) };
            dataset.points[i].clone()
        })
        .collect();
    Ok(SampleDataset {
        manifest,
        grid,
        n_bits: dataset.n_bits,
        points,
    })
}

/// Interior grid nodes of a 1D dataset: every node but the first.
pub fn default_candidates(grid: &ParameterGrid) -> Vec<f64> {
    (1..grid.per_axis()).map(|l| grid.axis_coord(l)).collect()
}

struct Labeled {
    spins: Vec<f64>,
    lambda: f64,
}

fn decode(dataset: &SampleDataset, split: Split) -> Vec<Labeled> {
    let n = dataset.n_bits;
    (0..dataset.points.len())
        .flat_map(|p| {
            let lambda = dataset.grid.axis_coord(p);
            dataset
                .samples_in(p, split)
                .map(move |(_, s)| Labeled { spins: spins_of(s, n), lambda })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Confusion curve over `candidates` for a one-parameter dataset.
///
/// Each candidate trains a fresh classifier (the ClassiFIM trunk with a
/// single logit and its parameter input held fixed) on the training split
/// and scores it on the test split. Candidates run in parallel on
/// per-candidate streams.
pub fn confusion_scan(dataset: &SampleDataset, candidates: &[f64], cfg: &ConfusionConfig, seed: u64) -> Result<ConfusionCurve> {
    if dataset.grid.dims() != 1 {
        return Err(Error::InvalidArgument("confusion scan needs a one-parameter slice".into()));
    }
    let g = &dataset.grid;
    if g.per_axis() < 2 {
        return Err(Error::InvalidArgument("slice needs at least two parameter values".into()));
    }
    let (lo, hi) = (g.axis_coord(0), g.axis_coord(g.per_axis() - 1));
    if let Some(c) = candidates.iter().find(|&&c| !(c > lo && c <= hi)) {
        return Err(Error::InvalidArgument(format!("candidate {c} leaves one class empty on [{lo}, {hi}]")));
    }
    if cfg.epochs == 0 || cfg.batch == 0 || !(cfg.learning_rate > 0.0) {
        return Err(Error::InvalidArgument("epochs, batch and learning rate must be positive".into()));
    }
    let train = decode(dataset, Split::Train);
    let test = decode(dataset, Split::Test);
    if train.is_empty() || test.is_empty() {
        return Err(Error::InvalidArgument("confusion scan needs both train and test samples".into()));
    }
    let arch = Architecture {
        geometry: geometry_for(dataset),
        dims: 1,
        site_channels: cfg.site_channels,
        hidden: cfg.hidden,
    };
    let results: Vec<(f64, f64)> = candidates
        .par_iter()
        .enumerate()
        .map(|(k, &c)| {
            let net = train_candidate(arch, &train, c, cfg, seed, k as u64)?;
            let mut ws = Workspace::default();
            let correct = test
                .iter()
                .filter(|s| (net.logit(&s.spins, &FIXED_LAMBDA, &[1.0], &mut ws) > 0.0) == (s.lambda >= c))
                .count();
            let ones = test.iter().filter(|s| s.lambda >= c).count();
            let prior = ones.max(test.len() - ones) as f64 / test.len() as f64;
            Ok((correct as f64 / test.len() as f64, prior))
        })
        .collect::<Result<_>>()?;
    Ok(ConfusionCurve {
        candidates: candidates.to_vec(),
        accuracy: results.iter().map(|r| r.0).collect(),
        n_test: vec![test.len(); candidates.len()],
        prior: results.iter().map(|r| r.1).collect(),
    })
}

fn train_candidate(arch: Architecture, train: &[Labeled], c: f64, cfg: &ConfusionConfig, seed: u64, k: u64) -> Result<Network> {
    let mut net = Network::init(arch, rng::stream(seed, &[CANDIDATE_STREAM, k]).next_u64())?;
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut r = rng::stream(seed, &[CANDIDATE_STREAM, k, 1]);
    let mut velocity = vec![0.0; net.params.len()];
    let mut grad = vec![0.0; net.params.len()];
    let mut ws = Workspace::default();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut r);
        let lr = cfg.learning_rate * 0.5 * (1.0 + (std::f64::consts::PI * epoch as f64 / cfg.epochs as f64).cos());
        for batch in order.chunks(cfg.batch) {
            grad.fill(0.0);
            for &i in batch {
                let s = &train[i];
                net.accumulate(&s.spins, &FIXED_LAMBDA, &[1.0], s.lambda >= c, &mut grad, &mut ws);
            }
            let scale = lr / batch.len() as f64;
            for ((p, v), g) in net.params.iter_mut().zip(&mut velocity).zip(&grad) {
                *v = cfg.momentum * *v - scale * g;
                *p += *v;
            }
        }
        if net.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Diverged {
                epoch,
                loss: f64::NAN,
                initial: f64::NAN,
            });
        }
    }
    Ok(net)
}
