use std::time::{Duration, Instant};

use log::info;
use rand::seq::SliceRandom;

use super::network::{spins_of, Architecture, Geometry, Network, Workspace};
use super::pairs::{make_pairs, DeltaScheme, PairRecord};
use crate::error::{Error, Result};
use crate::rng;
use crate::store::{RunManifest, SampleDataset, Split};

const SHUFFLE_STREAM: u64 = 0x5417;
/// Epoch id reserved for the fixed validation pairs.
const VALIDATION_EPOCH: u64 = u64::MAX;
const DIVERGENCE_FACTOR: f64 = 10.0;
const DIVERGENCE_EPOCHS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub site_channels: [usize; 2],
    pub hidden: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch: usize,
    pub pairs_per_sample: usize,
    pub scheme: DeltaScheme,
    /// Wall-clock cap; training stops before an epoch that would exceed it.
    pub budget: Option<Duration>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            site_channels: [12, 8],
            hidden: 32,
            learning_rate: 0.05,
            momentum: 0.9,
            epochs: 200,
            batch: 32,
            pairs_per_sample: 1,
            scheme: DeltaScheme::default(),
            budget: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch == 0 || self.pairs_per_sample == 0 {
            return Err(Error::InvalidArgument("epochs, batch and pairs_per_sample must be positive".into()));
        }
        if !(self.learning_rate > 0.0) || !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidArgument(format!(
                "need learning_rate > 0 and momentum in [0, 1), got {} and {}",
                self.learning_rate, self.momentum
            )));
        }
        Ok(())
    }

    /// Records the settings that determine the trained parameters.
    pub fn record(&self, m: &mut RunManifest) {
        m.set("site_channels", format!("{},{}", self.site_channels[0], self.site_channels[1]));
        m.set("hidden", self.hidden);
        m.set("learning_rate", self.learning_rate);
        m.set("momentum", self.momentum);
        m.set("epochs", self.epochs);
        m.set("batch", self.batch);
        m.set("pairs_per_sample", self.pairs_per_sample);
        m.set("max_step", self.scheme.max_step);
        if let Some(b) = self.budget {
            m.set("budget_seconds", b.as_secs_f64());
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean training loss of each completed epoch.
    pub epoch_losses: Vec<f64>,
    /// Validation loss after each epoch.
    pub validation_losses: Vec<f64>,
    pub initial_validation_loss: f64,
    /// Epoch whose parameters were kept (lowest validation loss).
    pub best_epoch: usize,
    pub stopped_by_budget: bool,
    pub elapsed: Duration,
}

/// Site layout inferred from the dataset: square lattices for the classical
/// lattice models, chains otherwise.
pub fn geometry_for(dataset: &SampleDataset) -> Geometry {
    let n = dataset.n_bits;
    let l = (n as f64).sqrt().round() as usize;
    match dataset.manifest.model.as_str() {
        "ising" | "isnnn" if l * l == n => Geometry::Square(l),
        _ => Geometry::Chain(n),
    }
}

struct Decoded {
    /// Start of each point's samples in `spins`, in samples.
    offsets: Vec<usize>,
    spins: Vec<f64>,
    n: usize,
}

impl Decoded {
    fn new(dataset: &SampleDataset) -> Self {
        let n = dataset.n_bits;
        let mut offsets = Vec::with_capacity(dataset.points.len());
        let mut spins = Vec::with_capacity(dataset.total() * n);
        for p in 0..dataset.points.len() {
            offsets.push(spins.len() / n);
            for t in 0..dataset.count(p) {
                spins.extend(spins_of(dataset.sample(p, t), n));
            }
        }
        Self { offsets, spins, n }
    }

    fn get(&self, rec: &PairRecord) -> &[f64] {
        let i = self.offsets[rec.point] + rec.sample;
        &self.spins[i * self.n..(i + 1) * self.n]
    }
}

fn steps_of(rec: &PairRecord, dims: usize) -> [f64; 2] {
    let mut k = [0.0; 2];
    for a in 0..dims {
        k[a] = rec.steps[a] as f64;
    }
    k
}

fn mean_loss(net: &Network, data: &Decoded, recs: &[PairRecord], ws: &mut Workspace) -> f64 {
    let d = net.arch.dims;
    let total: f64 = recs
        .iter()
        .map(|rec| {
            let logit = net.logit(data.get(rec), &rec.lambda[..d], &steps_of(rec, d)[..d], ws);
            let y = if rec.label { 1.0 } else { 0.0 };
            logit.max(0.0) + (-logit.abs()).exp().ln_1p() - y * logit
        })
        .sum();
    total / recs.len() as f64
}

/// Trains the pair classifier by mini-batch SGD with momentum and a cosine
/// step schedule; pairs are redrawn every epoch.
///
/// Validation pairs come from the test split (or, if it is empty, from a
/// reserved draw over the training split). The returned network is the one
/// with the lowest validation loss seen.
pub fn train_bc(dataset: &SampleDataset, cfg: &TrainConfig, seed: u64) -> Result<(Network, TrainReport)> {
    cfg.validate()?;
    let start = Instant::now();
    let dims = dataset.grid.dims();
    let arch = Architecture {
        geometry: geometry_for(dataset),
        dims,
        site_channels: cfg.site_channels,
        hidden: cfg.hidden,
    };
    let mut net = Network::init(arch, seed)?;
    let data = Decoded::new(dataset);
    let has_test = (0..dataset.points.len()).any(|p| dataset.split_count(p, Split::Test) > 0);
    let val_split = if has_test { Split::Test } else { Split::Train };
    let validation = make_pairs(dataset, val_split, 1, cfg.scheme, seed, VALIDATION_EPOCH)?;
    let mut ws = Workspace::default();
    let initial = mean_loss(&net, &data, &validation, &mut ws);
    let mut best = (initial, 0usize, net.params.clone());
    let mut velocity = vec![0.0; net.params.len()];
    let mut grad = vec![0.0; net.params.len()];
    let mut report = TrainReport {
        epoch_losses: Vec::new(),
        validation_losses: Vec::new(),
        initial_validation_loss: initial,
        best_epoch: 0,
        stopped_by_budget: false,
        elapsed: Duration::ZERO,
    };
    let mut above = 0;
    let mut last_epoch_time = Duration::ZERO;
    for epoch in 0..cfg.epochs {
        if let Some(budget) = cfg.budget {
            if start.elapsed() + last_epoch_time > budget {
                report.stopped_by_budget = true;
                break;
            }
        }
        let t0 = Instant::now();
        let mut pairs = make_pairs(dataset, Split::Train, cfg.pairs_per_sample, cfg.scheme, seed, epoch as u64)?;
        pairs.shuffle(&mut rng::stream(seed, &[SHUFFLE_STREAM, epoch as u64]));
        let lr = cfg.learning_rate * 0.5 * (1.0 + (std::f64::consts::PI * epoch as f64 / cfg.epochs as f64).cos());
        let mut total = 0.0;
        for batch in pairs.chunks(cfg.batch) {
            grad.fill(0.0);
            for rec in batch {
                let k = steps_of(rec, dims);
                total += net.accumulate(data.get(rec), &rec.lambda[..dims], &k[..dims], rec.label, &mut grad, &mut ws);
            }
            let scale = lr / batch.len() as f64;
            for ((p, v), g) in net.params.iter_mut().zip(&mut velocity).zip(&grad) {
                *v = cfg.momentum * *v - scale * g;
                *p += *v;
            }
        }
        let loss = total / pairs.len() as f64;
        let val = mean_loss(&net, &data, &validation, &mut ws);
        report.epoch_losses.push(loss);
        report.validation_losses.push(val);
        info!("epoch {epoch}: loss {loss:.5} validation {val:.5} lr {lr:.4}");
        if !loss.is_finite() || !val.is_finite() {
            return Err(Error::Diverged { epoch, loss, initial });
        }
        above = if loss > DIVERGENCE_FACTOR * initial { above + 1 } else { 0 };
        if above >= DIVERGENCE_EPOCHS {
            return Err(Error::Diverged { epoch, loss, initial });
        }
        if val < best.0 {
            best = (val, epoch + 1, net.params.clone());
        }
        last_epoch_time = t0.elapsed();
    }
    report.best_epoch = best.1;
    report.elapsed = start.elapsed();
    net.params = best.2;
    Ok((net, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifim::estimate::{estimate_fim, NeuralClassifier};
    use crate::store::ParameterGrid;
    use crate::synthetic::bernoulli_dataset;

    fn small_cfg(epochs: usize) -> TrainConfig {
        TrainConfig {
            site_channels: [4, 4],
            hidden: 8,
            epochs,
            ..Default::default()
        }
    }

    #[test]
    fn separable_pairs_are_learned() {
        // Bits are all 0 below λ = 1/2 and all 1 above: segments crossing the
        // step are perfectly separable, the rest carry no signal.
        let grid = ParameterGrid::nodes(1, 16).unwrap();
        let d = bernoulli_dataset(&grid, 6, 40, 1, &|l| if l[0] < 0.5 { 0.0 } else { 1.0 }).unwrap();
        let (net, report) = train_bc(&d, &small_cfg(40), 3).unwrap();
        let data = Decoded::new(&d);
        let crossing: Vec<PairRecord> = make_pairs(&d, Split::Train, 2, DeltaScheme::default(), 9, 0)
            .unwrap()
            .into_iter()
            .filter(|r| {
                let h = r.steps[0] as f64 / 32.0;
                (r.lambda[0] - h - 0.5 + 1e-9) * (r.lambda[0] + h - 0.5 + 1e-9) < 0.0
            })
            .collect();
        assert!(!crossing.is_empty());
        let mut ws = Workspace::default();
        let correct = crossing
            .iter()
            .filter(|r| (net.logit(data.get(r), &r.lambda[..1], &[r.steps[0] as f64], &mut ws) > 0.0) == r.label)
            .count();
        let acc = correct as f64 / crossing.len() as f64;
        assert!(acc > 0.95, "accuracy {acc}, report {report:?}");
    }

    fn mean_estimate(count: usize, p: &dyn Fn(&[f64]) -> f64) -> f64 {
        let grid = ParameterGrid::nodes(1, 16).unwrap();
        let d = bernoulli_dataset(&grid, 6, count, 2, p).unwrap();
        let d = crate::store::split_train_test(d, 0.9, 1).unwrap();
        let (net, _) = train_bc(&d, &small_cfg(20), 4).unwrap();
        let bc = NeuralClassifier { net, resolution: 16 };
        let est = estimate_fim(&bc, &d, Split::Test, 1.0 / 16.0).unwrap();
        est.field.entries.iter().map(|m| m.g00).sum::<f64>() / 16.0
    }

    #[test]
    fn no_signal_estimate_shrinks_with_data() {
        // With no signal the fitted slope is pure sampling noise, so ĝ falls
        // roughly like 1 / (samples per point).
        let small = mean_estimate(200, &|_| 0.3);
        let large = mean_estimate(1600, &|_| 0.3);
        // Six bits with p = 0.2 + 0.6λ: g = 6 · 0.36 / (p (1 − p)) ≥ 8.6.
        let signal = mean_estimate(200, &|l| 0.2 + 0.6 * l[0]);
        assert!(large < 0.4 * small, "small {small}, large {large}");
        assert!(large < 0.05 * signal, "large {large}, signal {signal}");
    }

    #[test]
    fn smooth_task_loss_decreases() {
        let grid = ParameterGrid::nodes(1, 16).unwrap();
        let d = bernoulli_dataset(&grid, 8, 300, 3, &|l| 0.1 + 0.8 * l[0]).unwrap();
        let cfg = TrainConfig {
            pairs_per_sample: 4,
            ..small_cfg(20)
        };
        let (_, report) = train_bc(&d, &cfg, 5).unwrap();
        // Epoch losses are noisy (pairs are redrawn); compare block averages.
        let block = |i: usize| report.epoch_losses[i * 5..(i + 1) * 5].iter().sum::<f64>() / 5.0;
        for i in 1..4 {
            assert!(block(i) <= block(i - 1) + 2e-3, "{:?}", report.epoch_losses);
        }
        assert!(block(3) < report.initial_validation_loss);
    }

    #[test]
    fn deterministic_given_seed() {
        let grid = ParameterGrid::nodes(1, 8).unwrap();
        let d = bernoulli_dataset(&grid, 5, 10, 4, &|l| 0.2 + 0.6 * l[0]).unwrap();
        let (a, _) = train_bc(&d, &small_cfg(3), 6).unwrap();
        let (b, _) = train_bc(&d, &small_cfg(3), 6).unwrap();
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn divergence_is_reported() {
        let grid = ParameterGrid::nodes(1, 8).unwrap();
        let d = bernoulli_dataset(&grid, 5, 20, 4, &|l| 0.1 + 0.8 * l[0]).unwrap();
        let cfg = TrainConfig {
            learning_rate: 1e4,
            ..small_cfg(10)
        };
        assert!(matches!(train_bc(&d, &cfg, 1), Err(Error::Diverged { .. })));
    }

    #[test]
    fn budget_stops_training() {
        let grid = ParameterGrid::nodes(1, 8).unwrap();
        let d = bernoulli_dataset(&grid, 5, 20, 4, &|l| 0.1 + 0.8 * l[0]).unwrap();
        let cfg = TrainConfig {
            budget: Some(Duration::ZERO),
            ..small_cfg(10)
        };
        let (_, report) = train_bc(&d, &cfg, 1).unwrap();
        assert!(report.stopped_by_budget && report.epoch_losses.is_empty());
    }
}
