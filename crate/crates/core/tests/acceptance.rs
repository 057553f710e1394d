//! Acceptance suite: one pass/fail line per criterion, nonzero exit on any failure.
//!
//! Each criterion runs at its stated tolerance and runtime limit. Nothing is
//! retried or reseeded on failure.

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::StandardNormal;

use fimlab::baselines::{confusion_scan, default_candidates, kernel_pca, spca_kernel, ConfusionConfig};
use fimlab::classical::{
    exact_enumeration_distribution, ising_generate, mcmc_field, ClassicalFamily, Couplings, McmcSchedule, ISING_TC,
};
use fimlab::classifim::{analytic_bc, estimate_fim, train_bc, NeuralClassifier, TrainConfig};
use fimlab::evaluation::{
    find_peaks, fim_field_to_slice_peaks, node_field_to_centers, peak_rmse, BoundaryRule, Cutoff, Peak, PeakKind, SliceId,
    SlicePeaks, SlicePrediction,
};
use fimlab::fidelity::checks::unitary_orbit;
use fimlab::fidelity::{
    check_prop5_bound, check_theorem1, check_theorem2, chi_discrete, chi_mixed, finite_diff_fim_segment,
    finite_diff_fim_segment_quantum, grid_fim_from_distributions, CMat, CVec, DensityMatrix, DiscreteDistribution,
    QuantumState, C64,
};
use fimlab::quantum::{quantum_grid_ground_truth, GroundTruthConfig, ModelKind, ModelSpec};
use fimlab::store::{split_train_test, FimField, ParameterGrid, RunManifest, SampleDataset, Split};
use fimlab::synthetic::{bernoulli_dataset, bernoulli_distributions};
use fimlab::rng;

type Result<T> = std::result::Result<T, Box<dyn std::error::Error>>;

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: String) -> Self {
        Self { passed, detail }
    }
}

fn minutes(m: f64) -> Duration {
    Duration::from_secs_f64(60.0 * m)
}

/// Runs `f`, failing it when it errors or exceeds `limit`.
fn run(n: usize, limit: Duration, f: impl FnOnce() -> Result<Outcome>) -> bool {
    let t = Instant::now();
    let out = f();
    let secs = t.elapsed().as_secs_f64();
    let (passed, detail) = match out {
        Ok(o) => {
            let in_time = t.elapsed() <= limit;
            let note = if in_time { String::new() } else { format!(" over limit {}s", limit.as_secs()) };
            (o.passed && in_time, format!("{}{note}", o.detail))
        }
        Err(e) => (false, format!("error {e}")),
    };
    println!("criterion {n}: {} {detail} ({secs:.1}s)", if passed { "PASS" } else { "FAIL" });
    passed
}

fn c1() -> Result<Outcome> {
    let mut worst = 0.0f64;
    let mut rejected = 0;
    let mut all = true;
    for seed in 0..200u64 {
        let dim = 4 + (seed as usize % 13);
        let rep = check_theorem1(dim, 1 + seed as usize % 3, seed, 1e-8)?;
        worst = worst.max(rep.max_rel_diff);
        rejected += rep.rejected_draws;
        all &= rep.passed;
    }
    Ok(Outcome::new(all && worst <= 1e-8, format!("200 families max_rel_diff={worst:.2e} redraws={rejected}")))
}

fn c2() -> Result<Outcome> {
    let mut worst_z = 0.0f64;
    let mut all = true;
    for i in 0..20u64 {
        let d = [2usize, 4, 8][i as usize % 3];
        let mut r = rng::stream(i, &[0xacc2]);
        let mut gauss = || C64::new(r.sample(StandardNormal), r.sample(StandardNormal));
        let psi = CVec::from_fn(d, |_, _| gauss()).normalize();
        let der = CVec::from_fn(d, |_, _| gauss());
        // Norm-preserving to first order.
        let der = &der - &psi * C64::new(psi.dotc(&der).re, 0.0);
        let st = QuantumState::new(psi)?.with_derivs(vec![der])?;
        let rep = check_theorem2(&st, 100_000, 1000 + i)?;
        let z = (rep.mean[(0, 0)] - rep.target[(0, 0)]).abs() / rep.stderr[(0, 0)].max(1e-300);
        worst_z = worst_z.max(z);
        all &= rep.passed;
    }
    Ok(Outcome::new(all, format!("20 states worst |mean - chi/2| = {worst_z:.2} stderr")))
}

fn sin_cos(s: f64) -> (DiscreteDistribution, f64) {
    (DiscreteDistribution::new(vec![s.sin().powi(2), s.cos().powi(2)]).unwrap(), (2.0 * s).sin())
}

fn c3() -> Result<Outcome> {
    let mut all = true;
    let mut notes = Vec::new();
    for s in [0.0, FRAC_PI_8, FRAC_PI_4] {
        let (p, d) = sin_cos(s);
        let rho = DensityMatrix::from_diagonal(&p)?;
        let drho = CMat::from_diagonal(&CVec::from_vec(vec![C64::new(d, 0.0), C64::new(-d, 0.0)]));
        // Only the zero-weight outcome sin²s contributes curvature, 2 at s = 0.
        let hess = DMatrix::from_element(1, 1, if s == 0.0 { 2.0 } else { 0.0 });
        let q = chi_mixed(&rho, &[drho], &hess)?;
        let c = chi_discrete(&p, &[vec![d, -d]], &hess)?;
        let split = if s == 0.0 { (0.0, 1.0) } else { (1.0, 0.0) };
        for r in [&q, &c] {
            all &= (r.chi[(0, 0)] - 1.0).abs() <= 1e-10;
            all &= (r.first[(0, 0)] - split.0).abs() <= 1e-10 && (r.second[(0, 0)] - split.1).abs() <= 1e-10;
        }
        notes.push(format!("s={s:.4} chi_mixed={:.12} chi_discrete={:.12}", q.chi[(0, 0)], c.chi[(0, 0)]));
    }
    Ok(Outcome::new(all, notes.join(" ")))
}

/// Ground state of a real symmetric 2x2 Hamiltonian.
fn ground(h: [f64; 4]) -> QuantumState {
    let e = DMatrix::from_row_slice(2, 2, &h).symmetric_eigen();
    let i = if e.eigenvalues[0] <= e.eigenvalues[1] { 0 } else { 1 };
    let v = e.eigenvectors.column(i);
    QuantumState::from_real(&[v[0], v[1]]).unwrap()
}

fn c4() -> Result<Outcome> {
    let ds = 0.01;
    let expect = 8.0 / (ds * ds);
    let tol = 1e-12 * expect;
    let pair = |h: fn(f64) -> [f64; 4]| -> Result<(f64, f64)> {
        let (a, b) = (ground(h(-ds / 2.0)), ground(h(ds / 2.0)));
        let pa = DiscreteDistribution::new(a.probabilities())?;
        let pb = DiscreteDistribution::new(b.probabilities())?;
        Ok((finite_diff_fim_segment(&pa, &pb, ds)?, finite_diff_fim_segment_quantum(&a, &b, ds)?))
    };
    let (xc, xq) = pair(|s| [0.0, s, s, 0.0])?;
    let (zc, zq) = pair(|s| [s, 0.0, 0.0, -s])?;
    let passed = xc.abs() <= tol && (xq - expect).abs() <= tol && (zc - expect).abs() <= tol && (zq - expect).abs() <= tol;
    Ok(Outcome::new(passed, format!("sX classical={xc:.3e} quantum={xq:.6} sZ classical={zc:.6} quantum={zq:.6} expect={expect}")))
}

fn c5() -> Result<Outcome> {
    let mut worst = 0.0f64;
    let mut all = true;
    // 100 full-rank orbits, then 100 constant-rank orbits with a null space,
    // where the bound is not trivially 0 = 0.
    for seed in 0..200u64 {
        let d = 2 + seed as usize % 5;
        let rank = if seed < 100 { d } else { 1 + seed as usize % (d - 1) };
        let w: Vec<f64> = (0..d).map(|i| if i < rank { (i + 1) as f64 } else { 0.0 }).collect();
        let tot: f64 = w.iter().sum();
        let spec: Vec<f64> = w.iter().map(|x| x / tot).collect();
        let (rho, drho, hess) = unitary_orbit(&spec, 2, seed)?;
        let rep = check_prop5_bound(&rho, &drho, &hess, &[1.0, -0.7])?;
        worst = worst.max((rep.lhs - rep.rhs).abs());
        all &= rep.tight && (rep.lhs - rep.rhs).abs() <= 1e-8;
    }
    let (p, _) = sin_cos(0.0);
    let rho = DensityMatrix::from_diagonal(&p)?;
    let strict = check_prop5_bound(&rho, &[CMat::zeros(2, 2)], &DMatrix::from_element(1, 1, 2.0), &[1.0])?;
    let passed = all && strict.lhs == 1.0 && strict.rhs == 0.0 && !strict.tight;
    Ok(Outcome::new(passed, format!("100 full-rank and 100 rank-deficient orbits max|lhs-rhs|={worst:.2e} strict lhs={} rhs={}", strict.lhs, strict.rhs)))
}

/// Temperature of the single inner peak of the seed-averaged field.
fn ising_peak(l: usize, grid: &ParameterGrid) -> Result<(Vec<f64>, usize)> {
    let mut mean: Option<FimField> = None;
    for seed in 0..11u64 {
        let ds = ising_generate(l, grid, &McmcSchedule::default(), seed)?;
        let f = mcmc_field(&ds, &ClassicalFamily::Ising { l })?;
        match &mut mean {
            None => mean = Some(f),
            Some(m) => m.entries.iter_mut().zip(&f.entries).for_each(|(a, b)| a.g00 += b.g00),
        }
    }
    let s = fim_field_to_slice_peaks(&mean.unwrap(), Cutoff::default(), BoundaryRule::default());
    let inner: Vec<f64> = s[0].inner().map(|p| 4.0 * p.position).collect();
    Ok((inner.clone(), inner.len()))
}

fn c6() -> Result<Outcome> {
    let grid = ParameterGrid::nodes_from_spacing(1, 64)?;
    let (p10, n10) = ising_peak(10, &grid)?;
    let (p16, n16) = ising_peak(16, &grid)?;
    let in_window = |t: f64| (ISING_TC..=ISING_TC + 0.35).contains(&t);
    let passed = n10 == 1 && n16 == 1 && in_window(p10[0]) && in_window(p16[0]) && (p16[0] - ISING_TC).abs() <= (p10[0] - ISING_TC).abs();
    Ok(Outcome::new(passed, format!("inner peaks T: L=10 {p10:?} L=16 {p16:?} Tc={ISING_TC:.4}")))
}

fn c7() -> Result<Outcome> {
    // T = 4λ from 1.4 to 3.4 in steps of 0.2: ten node pairs.
    let grid = ParameterGrid::new(1, 20, 11, 7.0)?;
    let schedule = McmcSchedule {
        n_chains: 1000,
        samples_per_point: 100,
        gap: 2.0,
        ..McmcSchedule::default()
    };
    let ds = ising_generate(3, &grid, &schedule, 7)?;
    let est = mcmc_field(&ds, &ClassicalFamily::Ising { l: 3 })?;
    let dists: Vec<DiscreteDistribution> = (0..grid.len())
        .map(|i| exact_enumeration_distribution(3, &Couplings::ferromagnet(), 4.0 * grid.axis_coord(i)))
        .collect::<fimlab::Result<_>>()?;
    let exact = grid_fim_from_distributions(&dists, &grid)?;
    let se = est.stderr.as_ref().expect("mcmc field carries standard errors");
    let z: Vec<f64> = (0..exact.grid.len())
        .map(|c| (est.entries[c].g00 - exact.entries[c].g00).abs() / se[c].g00)
        .collect();
    let worst = z.iter().copied().fold(0.0, f64::max);
    Ok(Outcome::new(z.len() == 10 && worst <= 3.0, format!("{} pairs worst |mcmc - exact| = {worst:.2} stderr", z.len())))
}

/// Most prominent peaks of a 1D center field, as (coordinate, prominence).
fn top_peaks(field: &FimField, n: usize) -> Vec<f64> {
    let v: Vec<f64> = field.entries.iter().map(|m| m.g00).collect();
    let mut p = find_peaks(&v, Cutoff::default().resolve(&v));
    p.sort_by(|a, b| b.prominence.total_cmp(&a.prominence));
    p.iter().take(n).map(|p| field.grid.axis_coord(p.index)).collect()
}

fn c8() -> Result<Outcome> {
    let grid = ParameterGrid::nodes(1, 64)?;
    let cfg = GroundTruthConfig::default();
    let t = Instant::now();
    let tfim = quantum_grid_ground_truth(&ModelSpec::new(ModelKind::Tfim, 10)?, &grid, &cfg, 1)?;
    let t_tfim = t.elapsed();
    let h: Vec<f64> = top_peaks(&tfim.classical, 1).iter().map(|x| 2.0 * x).collect();
    let t = Instant::now();
    let kitaev = quantum_grid_ground_truth(&ModelSpec::new(ModelKind::Kitaev, 8)?, &grid, &cfg, 1)?;
    let t_kitaev = t.elapsed();
    let mut mu: Vec<f64> = top_peaks(&kitaev.classical, 2).iter().map(|x| 8.0 * x - 4.0).collect();
    mu.sort_by(f64::total_cmp);
    let passed = h.len() == 1
        && (h[0] - 1.0).abs() <= 0.1
        && mu.len() == 2
        && (mu[0] + 2.0).abs() <= 0.3
        && (mu[1] - 2.0).abs() <= 0.3
        && t_tfim <= minutes(5.0)
        && t_kitaev <= minutes(5.0);
    Ok(Outcome::new(
        passed,
        format!("tfim n=10 peak h={h:?} ({:.1}s) kitaev L=8 peaks mu={mu:?} ({:.1}s)", t_tfim.as_secs_f64(), t_kitaev.as_secs_f64()),
    ))
}

fn c9() -> Result<Outcome> {
    // Analytic classifier on four independent bits with P(1) = 0.2 + 0.6λ.
    let (n_bits, r) = (4, 32);
    let grid = ParameterGrid::nodes(1, r)?;
    let p = |l: &[f64]| 0.2 + 0.6 * l[0];
    let bc = analytic_bc(&grid, &bernoulli_distributions(&grid, n_bits, &p)?)?;
    let ds = bernoulli_dataset(&grid, n_bits, 100_000, 9, &p)?;
    let est = estimate_fim(&bc, &ds, Split::Train, 1.0 / r as f64)?;
    let rel_err = |i: usize| {
        let q = p(&grid.coords(i));
        let exact = n_bits as f64 * 0.36 / (q * (1.0 - q));
        (est.field.entries[i].g00 - exact).abs() / exact
    };
    // End nodes probe λ ± h/2 outside the grid, where the log-linear
    // interpolation extrapolates the end cell's slope: O(h) bias, reported only.
    let rel = (1..grid.len() - 1).map(rel_err).fold(0.0, f64::max);
    let ends = rel_err(0).max(rel_err(grid.len() - 1));

    // Trained classifier on Ising L = 10 with the default pipeline.
    let grid = ParameterGrid::nodes_from_spacing(1, 64)?;
    let ds = split_train_test(ising_generate(10, &grid, &McmcSchedule::default(), 0)?, 0.9, 0)?;
    let truth = mcmc_field(&ds, &ClassicalFamily::Ising { l: 10 })?;
    let truth_peaks = fim_field_to_slice_peaks(&truth, Cutoff::default(), BoundaryRule::default());
    let t_truth: Vec<f64> = truth_peaks[0].inner().map(|p| 4.0 * p.position).collect();
    let cfg = TrainConfig {
        budget: Some(minutes(10.0)),
        ..TrainConfig::default()
    };
    let (net, report) = train_bc(&ds, &cfg, 0)?;
    let bc = NeuralClassifier { net, resolution: 64 };
    let est = node_field_to_centers(&estimate_fim(&bc, &ds, Split::Test, 1.0 / 64.0)?.field)?;
    let t_est: Vec<f64> = top_peaks(&est, 1).iter().map(|x| 4.0 * x).collect();
    let near = t_truth.len() == 1 && t_est.len() == 1 && (t_est[0] - t_truth[0]).abs() <= 0.35;
    Ok(Outcome::new(
        rel <= 0.05 && near,
        format!(
            "analytic max rel err={rel:.4} (end nodes {ends:.4}); ising L=10 truth T={t_truth:?} estimate T={t_est:?} epochs={} budget_hit={}",
            report.epoch_losses.len(),
            report.stopped_by_budget
        ),
    ))
}

fn inner_truth(fixed: usize, positions: &[f64]) -> SlicePeaks {
    SlicePeaks {
        id: SliceId { axis: 0, fixed },
        cutoff: 1.0,
        peaks: positions
            .iter()
            .map(|&position| Peak {
                position,
                height: 2.0,
                prominence: 2.0,
                kind: PeakKind::Inner,
            })
            .collect(),
    }
}

fn guesses(fixed: usize, g: &[f64]) -> SlicePrediction {
    SlicePrediction {
        id: SliceId { axis: 0, fixed },
        guesses: g.to_vec(),
    }
}

fn c10() -> Result<Outcome> {
    let t = [inner_truth(0, &[0.5])];
    let empty = peak_rmse(&t, &[guesses(0, &[])])?.rmse;
    let t2 = [inner_truth(0, &[0.3]), inner_truth(1, &[0.7])];
    let two = peak_rmse(&t2, &[guesses(0, &[0.32]), guesses(1, &[0.7])])?.rmse;
    let perfect = peak_rmse(&t2, &[guesses(0, &[0.3]), guesses(1, &[0.7])])?.rmse;
    let want = (0.02f64.powi(2) / 2.0).sqrt();
    let passed = perfect == Some(0.0)
        && empty.is_some_and(|x| (x - 0.5).abs() <= 1e-12)
        && two.is_some_and(|x| (x - want).abs() <= 1e-12);
    Ok(Outcome::new(passed, format!("perfect={perfect:?} one_slice={empty:?} two_slices={two:?}")))
}

fn two_point_dataset(a: u64, b: u64) -> SampleDataset {
    let mut ds = SampleDataset::new(RunManifest::new("acceptance", 0), ParameterGrid::nodes(1, 2).unwrap(), 4);
    ds.push(0, &[a], None);
    ds.push(1, &[b], None);
    ds
}

fn c11() -> Result<Outcome> {
    use std::f64::consts::E;
    let same = spca_kernel(&two_point_dataset(0b1011, 0b1011), 1.0, 1.0)?.k[(0, 1)];
    let opposite = spca_kernel(&two_point_dataset(0b1011, 0b0100), 1.0, 1.0)?.k[(0, 1)];
    let r = 32;
    let grid = ParameterGrid::nodes(1, r)?;
    let ds = bernoulli_dataset(&grid, 20, 40, 4, &|l| if l[0] < 0.4 { 0.15 } else { 0.85 })?;
    let e = kernel_pca(&spca_kernel(&ds, 1.0, 1.0)?, &grid, 3)?;
    let pc: Vec<f64> = (0..r).map(|i| e.coords[(i, 0)]).collect();
    let changes: Vec<usize> = (1..r).filter(|&i| pc[i].signum() != pc[i - 1].signum()).collect();
    let passed = (same - E.exp()).abs() <= 1e-12
        && (opposite - E).abs() <= 1e-12
        && changes.len() == 1
        && (changes[0] as f64 - 0.4 * r as f64).abs() <= 2.0;
    Ok(Outcome::new(passed, format!("kernel errors {:.1e} {:.1e}; sign changes at {changes:?} boundary index {}", (same - E.exp()).abs(), (opposite - E).abs(), 0.4 * r as f64)))
}

fn c12() -> Result<Outcome> {
    let r = 16;
    let grid = ParameterGrid::nodes(1, r)?;
    let dataset = |p: &dyn Fn(&[f64]) -> f64, seed| split_train_test(bernoulli_dataset(&grid, 12, 60, seed, p)?, 0.75, seed);
    let cands = default_candidates(&grid);
    let cfg = ConfusionConfig::default();
    let step = confusion_scan(&dataset(&|l| if l[0] < 0.5 { 0.2 } else { 0.8 }, 3)?, &cands, &cfg, 1)?;
    let located = step.interior_maximum().map(|i| cands[i]);
    let flat = confusion_scan(&dataset(&|_| 0.5, 5)?, &cands, &cfg, 2)?;
    let ends = flat.accuracy[0].max(flat.accuracy[cands.len() - 1]);
    // Largest excess of an interior local maximum over the better endpoint, in standard errors.
    let excess = find_peaks(&flat.accuracy, 0.0)
        .iter()
        .map(|p| (flat.accuracy[p.index] - ends) / flat.std_error(p.index).max(1e-300))
        .reduce(f64::max);
    let passed = located.is_some_and(|c| (c - 0.5).abs() <= 2.0 / r as f64) && excess.is_none_or(|z| z <= 3.0);
    let excess = excess.map_or("none (no interior maximum)".to_string(), |z| format!("{z:.2} sigma"));
    Ok(Outcome::new(passed, format!("step change at 0.5 located at {located:?}; flat family max interior excess {excess}")))
}

fn cli(dir: &Path, args: &[&str]) -> Result<()> {
    let out = Command::new(env!("CARGO_BIN_EXE_fimlab"))
        .args(args)
        .current_dir(dir)
        .env_remove("SOURCE_DATE_EPOCH")
        .output()?;
    if !out.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr).trim()).into());
    }
    Ok(())
}

fn c13() -> Result<Outcome> {
    let tmp = tempfile::tempdir()?;
    let d = tmp.path();
    let steps: &[&[&str]] = &[
        &["generate", "tfim", "--n", "6", "--grid", "16", "--samples", "60", "--seed", "3", "--out", "q"],
        &["generate", "ising", "--L", "4", "--grid", "8", "--samples", "20", "--seed", "4", "--out", "c"],
        &["ground-truth", "--dataset", "c", "--out", "c.tsv"],
        &["ground-truth", "--dataset", "q", "--out", "q.tsv"],
        &["estimate", "classifim", "--dataset", "q", "--out", "est.tsv", "--epochs", "3", "--seed", "5"],
        &["evaluate", "--truth", "q.tsv", "--estimate", "est.tsv", "--out", "report.tsv"],
        &["estimate", "spca", "--dataset", "c", "--out", "emb.tsv", "--components", "2"],
        &["estimate", "confusion", "--dataset", "c", "--out", "curve.tsv", "--epochs", "2"],
        &["render", "--input", "q.tsv", "--out", "q.svg"],
    ];
    for s in steps {
        cli(d, s)?;
    }
    let reruns = [
        ("q/run.manifest", "q"),
        ("c/run.manifest", "c"),
        ("c.tsv.manifest", "c.tsv"),
        ("q.tsv.manifest", "q.tsv"),
        ("est.tsv.manifest", "est.tsv"),
        ("report.tsv.manifest", "report.tsv"),
        ("emb.tsv.manifest", "emb.tsv"),
        ("curve.tsv.manifest", "curve.tsv"),
        ("q.svg.manifest", "q.svg"),
    ];
    let mut mismatched = Vec::new();
    let mut compared = 0;
    for (m, orig) in reruns {
        let copy = format!("re_{}", orig);
        cli(d, &["rerun", "--manifest", m, "--out", &copy])?;
        let (a, b) = (d.join(orig), d.join(&copy));
        let files: Vec<(std::path::PathBuf, std::path::PathBuf)> = if a.is_dir() {
            let mut names: Vec<_> = fs::read_dir(&a)?
                .filter_map(|e| e.ok().map(|e| e.file_name()))
                .filter(|n| n != "run.manifest")
                .collect();
            names.sort();
            names.iter().map(|n| (a.join(n), b.join(n))).collect()
        } else {
            let mut v = vec![(a.clone(), b.clone())];
            if orig == "report.tsv" {
                v.push((d.join("report.tsv.pred.tsv"), d.join("re_report.tsv.pred.tsv")));
            }
            v
        };
        for (x, y) in files {
            compared += 1;
            if fs::read(&x).ok() != fs::read(&y).ok() || !x.exists() {
                mismatched.push(x.strip_prefix(d).unwrap_or(&x).display().to_string());
            }
        }
    }
    Ok(Outcome::new(mismatched.is_empty(), format!("{compared} files compared, mismatched {mismatched:?}")))
}

fn main() {
    let _ = env_logger::builder().is_test(true).try_init();
    let criteria: Vec<(usize, Duration, fn() -> Result<Outcome>)> = vec![
        (1, Duration::from_secs(30), c1),
        (2, minutes(5.0), c2),
        (3, minutes(1.0), c3),
        (4, minutes(1.0), c4),
        (5, minutes(1.0), c5),
        (6, minutes(10.0), c6),
        (7, minutes(2.0), c7),
        (8, minutes(10.0), c8),
        (9, minutes(15.0), c9),
        (10, minutes(1.0), c10),
        (11, minutes(1.0), c11),
        (12, minutes(5.0), c12),
        (13, minutes(5.0), c13),
    ];
    let failed: Vec<usize> = criteria
        .into_iter()
        .filter_map(|(n, limit, f)| (!run(n, limit, f)).then_some(n))
        .collect();
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
