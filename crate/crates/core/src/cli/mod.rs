//! The `fimlab` command line.
//!
//! Every command writes a run manifest next to its output (`<out>.manifest`
//! for files, `<out>/run.manifest` for directories). The manifest records the
//! full argument list, so `fimlab rerun` can regenerate the artifact; the
//! rerun pins `SOURCE_DATE_EPOCH` to the recorded creation time, which makes
//! the regenerated files byte-identical.

pub mod render;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use crate::baselines::{confusion_scan, default_candidates, kernel_pca, slice_dataset, spca_kernel, ConfusionConfig};
use crate::classical::{isnnn::PtSchedule, mcmc_field, schedule::McmcSchedule, ClassicalFamily};
use crate::classifim::{estimate_fim, train_bc, NeuralClassifier, TrainConfig};
use crate::error::{Error, Result};
use crate::evaluation::{
    fim_field_to_slice_peaks, node_field_to_centers, peak_rmse, predictions_from_field, predictions_from_tsv, predictions_to_tsv,
    BoundaryRule, Cutoff, SliceId,
};
use crate::quantum::{quantum_grid_ground_truth, GroundTruthConfig, ModelKind, ModelSpec};
use crate::store::manifest::parse_kv;
use crate::store::{load_dataset, save_dataset, split_train_test, FimField, ParameterGrid, RunManifest, SampleDataset, Split};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "FIMLAB_WORKERS";
const RUN_MANIFEST: &str = "run.manifest";

#[derive(Debug, Parser)]
#[command(name = "fimlab", version, about = "Fisher information metric estimation for phase transitions")]
pub struct Cli {
    /// Worker threads (default: $FIMLAB_WORKERS, else all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a model on a parameter grid.
    Generate(GenerateArgs),
    /// Ground-truth FIM field of a dataset's model.
    GroundTruth(GroundTruthArgs),
    /// Run an estimator on a dataset.
    #[command(subcommand)]
    Estimate(EstimateCommand),
    /// Score peak predictions against a ground-truth field.
    Evaluate(EvaluateArgs),
    /// Draw a field, curve or embedding table as SVG.
    Render(RenderArgs),
    /// Regenerate an artifact from its run manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Ising,
    Isnnn,
    Tfim,
    Fil,
    Kitaev,
    Xxz,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    pub model: Model,
    /// Output dataset directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Lattice side (classical), qubits (tfim, kitaev, xxz) or rungs (fil).
    #[arg(long, visible_aliases = ["n", "L"], default_value_t = 10)]
    pub size: usize,
    /// Grid points per axis.
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    /// Samples per grid point.
    #[arg(long, default_value_t = 140)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fraction of samples tagged for training.
    #[arg(long, default_value_t = 0.9)]
    pub train_fraction: f64,
    /// Inverse temperature used to resolve near-degenerate ground states.
    #[arg(long, default_value_t = crate::quantum::ground::DEFAULT_BETA)]
    pub beta: f64,
    /// Eigenpairs computed per grid point.
    #[arg(long, default_value_t = crate::quantum::ground::DEFAULT_K)]
    pub k: usize,
}

#[derive(Debug, Args)]
pub struct GroundTruthArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Output field (TSV).
    #[arg(long)]
    pub out: PathBuf,
    /// For quantum models, use ground-state overlaps instead of the
    /// measured distributions.
    #[arg(long)]
    pub quantum: bool,
}

#[derive(Debug, Subcommand)]
pub enum EstimateCommand {
    /// Train the pair classifier and read off the FIM.
    Classifim(ClassifimArgs),
    /// Kernel PCA on bitstring samples.
    Spca(SpcaArgs),
    /// Confusion scheme along one slice.
    Confusion(ConfusionArgs),
}

#[derive(Debug, Args)]
pub struct ClassifimArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Output field (TSV, node grid).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    /// Wall-clock cap on training; the best model so far is kept.
    #[arg(long)]
    pub budget_minutes: Option<f64>,
    /// Where to save the trained network.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpcaArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Output embedding (TSV); the pulled-back metric goes to
    /// `<out>.pullback.tsv`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub components: usize,
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
}

#[derive(Debug, Args)]
pub struct ConfusionArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Output curve (TSV).
    #[arg(long)]
    pub out: PathBuf,
    /// `row=K` (λ₀ varies at λ₁ index K), `col=K`, or `axis:K`; required
    /// for 2D datasets.
    #[arg(long)]
    pub slice: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Ground-truth field (TSV).
    #[arg(long)]
    pub truth: PathBuf,
    /// Peak predictions (TSV: slice id, then guesses).
    #[arg(long, conflicts_with = "estimate", required_unless_present = "estimate")]
    pub pred: Option<PathBuf>,
    /// Estimated field to read predictions from.
    #[arg(long)]
    pub estimate: Option<PathBuf>,
    /// Prominence cutoff: `0.1rel` (fraction of each slice's range) or an
    /// absolute value.
    #[arg(long = "C", default_value = "0.1rel")]
    pub cutoff: String,
    /// Scale the boundary distances with the grid instead of keeping them
    /// at 6/64 and 3/64.
    #[arg(long)]
    pub grid_relative: bool,
    /// Per-slice report (TSV).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Field, confusion curve or embedding table.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Colour-ring radius; default is the 95th percentile of √trace g.
    #[arg(long)]
    pub scale: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RerunArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write to this path instead of the recorded output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `argv` (including the program name), runs the command and
/// returns the exit status. Errors are reported on stderr as one line.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    set_argv(argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect());
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = configure_workers(cli.workers) {
        return report(&e);
    }
    match dispatch(&cli.command) {
        Ok(()) => 0,
        Err(e) => report(&e),
    }
}

fn report(e: &Error) -> i32 {
    eprintln!("error kind={} code={}: {e}", e.kind(), e.exit_code());
    e.exit_code()
}

fn configure_workers(flag: Option<usize>) -> Result<()> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var(WORKERS_ENV) {
            Ok(v) => Some(v.parse().map_err(|_| Error::InvalidArgument(format!("{WORKERS_ENV}={v} is not a count")))?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(Error::InvalidArgument("--workers must be at least 1".into()));
        }
        // A second call in the same process (tests, rerun) keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn dispatch(cmd: &Command) -> Result<()> {
    match cmd {
        Command::Generate(a) => generate(a),
        Command::GroundTruth(a) => ground_truth(a),
        Command::Estimate(EstimateCommand::Classifim(a)) => estimate_classifim(a),
        Command::Estimate(EstimateCommand::Spca(a)) => estimate_spca(a),
        Command::Estimate(EstimateCommand::Confusion(a)) => estimate_confusion(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Render(a) => render_cmd(a),
        Command::Rerun(a) => rerun(a),
    }
}

thread_local! {
    /// Arguments of the command being run, recorded in its manifest.
    static ARGV: std::cell::RefCell<Vec<String>> = const { std::cell::RefCell::new(Vec::new()) };
}

fn argv_now() -> Vec<String> {
    ARGV.with(|a| a.borrow().clone())
}

fn set_argv(argv: Vec<String>) {
    ARGV.with(|a| *a.borrow_mut() = argv);
}

/// Manifest for a CLI run: the command line plus command-specific results.
fn run_manifest(command: &str, seed: u64, argv: &[String]) -> RunManifest {
    let mut m = RunManifest::new(command, seed);
    for (i, a) in argv.iter().enumerate() {
        m.set(&format!("argv.{i:03}"), a);
    }
    m
}

fn manifest_path(out: &Path, is_dir: bool) -> PathBuf {
    if is_dir {
        out.join(RUN_MANIFEST)
    } else {
        let mut s = out.as_os_str().to_owned();
        s.push(".manifest");
        PathBuf::from(s)
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn write_manifest(m: &RunManifest, out: &Path, is_dir: bool) -> Result<()> {
    write_file(&manifest_path(out, is_dir), m.to_text())
}

/// Node grid for a model: temperature axes start one spacing above zero.
fn model_grid(model: Model, r: usize) -> Result<ParameterGrid> {
    match model {
        Model::Ising => ParameterGrid::nodes_from_spacing(1, r),
        Model::Isnnn => ParameterGrid::nodes_from_spacing(2, r),
        Model::Tfim | Model::Kitaev => ParameterGrid::nodes(1, r),
        Model::Fil | Model::Xxz => ParameterGrid::nodes(2, r),
    }
}

fn quantum_kind(model: Model) -> Option<ModelKind> {
    match model {
        Model::Tfim => Some(ModelKind::Tfim),
        Model::Fil => Some(ModelKind::FilLadder),
        Model::Kitaev => Some(ModelKind::Kitaev),
        Model::Xxz => Some(ModelKind::XxzBondAlt),
        Model::Ising | Model::Isnnn => None,
    }
}

/// Chains needed for `samples` per point at two samples per chain.
fn chains_for(samples: usize) -> Result<usize> {
    if samples == 0 || samples % 2 != 0 {
        return Err(Error::InvalidArgument(format!("classical models need an even, positive sample count, got {samples}")));
    }
    Ok(samples / 2)
}

fn generate(a: &GenerateArgs) -> Result<()> {
    let grid = model_grid(a.model, a.grid)?;
    let dataset = match a.model {
        Model::Ising => {
            let schedule = McmcSchedule {
                n_chains: chains_for(a.samples)?,
                ..McmcSchedule::default()
            };
            crate::classical::ising::ising_generate(a.size, &grid, &schedule, a.seed)?
        }
        Model::Isnnn => {
            let schedule = PtSchedule {
                n_chains: chains_for(a.samples)?,
                ..PtSchedule::default()
            };
            crate::classical::isnnn::isnnn_generate(a.size, &grid, &schedule, a.seed)?
        }
        m => {
            let spec = ModelSpec::new(quantum_kind(m).expect("quantum model"), a.size)?;
            let cfg = GroundTruthConfig {
                beta: a.beta,
                k: a.k,
                samples_per_point: a.samples,
            };
            let truth = quantum_grid_ground_truth(&spec, &grid, &cfg, a.seed)?;
            truth.classical.save(&a.out.join("fim.tsv"))?;
            truth.quantum.save(&a.out.join("fim_quantum.tsv"))?;
            truth.dataset
        }
    };
    let dataset = split_train_test(dataset, a.train_fraction, a.seed)?;
    save_dataset(&dataset, &a.out)?;
    info!("wrote {} samples to {}", dataset.total(), a.out.display());
    write_manifest(&run_manifest("generate", a.seed, &argv_now()), &a.out, true)
}

fn classical_family(ds: &SampleDataset) -> Result<Option<ClassicalFamily>> {
    let l = || -> Result<usize> { ds.manifest.param_parsed("L") };
    Ok(match ds.manifest.model.as_str() {
        "ising" => Some(ClassicalFamily::Ising { l: l()? }),
        "isnnn" => Some(ClassicalFamily::IsNnn { l: l()? }),
        _ => None,
    })
}

fn ground_truth(a: &GroundTruthArgs) -> Result<()> {
    let ds = load_dataset(&a.dataset)?;
    let field = match classical_family(&ds)? {
        Some(family) => {
            if a.quantum {
                return Err(Error::InvalidArgument("--quantum applies to quantum models only".into()));
            }
            mcmc_field(&ds, &family)?
        }
        None => {
            let kind: ModelKind = ds.manifest.model.parse()?;
            let spec = ModelSpec::new(kind, ds.manifest.param_parsed("size")?)?;
            let cfg = GroundTruthConfig {
                beta: ds.manifest.param_parsed("beta")?,
                k: ds.manifest.param_parsed("k")?,
                samples_per_point: 0,
            };
            let truth = quantum_grid_ground_truth(&spec, &ds.grid, &cfg, ds.manifest.seed)?;
            if a.quantum {
                truth.quantum
            } else {
                truth.classical
            }
        }
    };
    field.save(&a.out)?;
    write_manifest(&run_manifest("ground-truth", ds.manifest.seed, &argv_now()), &a.out, false)
}

fn estimate_classifim(a: &ClassifimArgs) -> Result<()> {
    let ds = load_dataset(&a.dataset)?;
    let budget = match a.budget_minutes {
        Some(m) if m > 0.0 && m.is_finite() => Some(Duration::from_secs_f64(60.0 * m)),
        Some(m) => return Err(Error::InvalidArgument(format!("budget must be positive minutes, got {m}"))),
        None => None,
    };
    let cfg = TrainConfig {
        epochs: a.epochs,
        learning_rate: a.learning_rate,
        batch: a.batch,
        budget,
        ..TrainConfig::default()
    };
    let (net, report) = train_bc(&ds, &cfg, a.seed)?;
    if let Some(path) = &a.checkpoint {
        net.save(path)?;
    }
    let resolution = ds.grid.resolution();
    let bc = NeuralClassifier { net, resolution };
    let est = estimate_fim(&bc, &ds, Split::Test, 1.0 / resolution as f64)?;
    est.field.save(&a.out)?;
    let mut m = run_manifest("estimate-classifim", a.seed, &argv_now());
    cfg.record(&mut m);
    m.set("epochs_run", report.epoch_losses.len());
    m.set("best_epoch", report.best_epoch);
    m.set("stopped_by_budget", report.stopped_by_budget);
    m.set("train_seconds", format!("{:.3}", report.elapsed.as_secs_f64()));
    write_manifest(&m, &a.out, false)
}

fn estimate_spca(a: &SpcaArgs) -> Result<()> {
    let ds = load_dataset(&a.dataset)?;
    let kernel = spca_kernel(&ds, a.tau, a.gamma)?;
    let emb = kernel_pca(&kernel, &ds.grid, a.components)?;
    write_file(&a.out, emb.to_tsv())?;
    let mut pull = a.out.as_os_str().to_owned();
    pull.push(".pullback.tsv");
    emb.pullback_metric()?.save(Path::new(&pull))?;
    let mut m = run_manifest("estimate-spca", ds.manifest.seed, &argv_now());
    m.set("components_kept", emb.components());
    write_manifest(&m, &a.out, false)
}

/// `row=K`, `col=K` or `axis:K`.
pub fn parse_slice(s: &str) -> Result<SliceId> {
    let bad = || Error::InvalidArgument(format!("bad slice {s:?}; use row=K, col=K or axis:K"));
    if let Some((kind, k)) = s.split_once('=') {
        let fixed = k.parse().map_err(|_| bad())?;
        return match kind {
            "row" => Ok(SliceId { axis: 0, fixed }),
            "col" => Ok(SliceId { axis: 1, fixed }),
            _ => Err(bad()),
        };
    }
    s.parse().map_err(|_| bad())
}

fn estimate_confusion(a: &ConfusionArgs) -> Result<()> {
    let ds = load_dataset(&a.dataset)?;
    let ds = match (&a.slice, ds.grid.dims()) {
        (Some(s), 2) => slice_dataset(&ds, parse_slice(s)?)?,
        (None, 2) => return Err(Error::InvalidArgument("--slice is required for 2D datasets".into())),
        _ => ds,
    };
    let cfg = ConfusionConfig {
        epochs: a.epochs,
        ..ConfusionConfig::default()
    };
    let curve = confusion_scan(&ds, &default_candidates(&ds.grid), &cfg, a.seed)?;
    write_file(&a.out, curve.to_tsv())?;
    let mut m = run_manifest("estimate-confusion", a.seed, &argv_now());
    cfg.record(&mut m);
    if let Some(i) = curve.interior_maximum() {
        m.set("interior_maximum", curve.candidates[i]);
    }
    write_manifest(&m, &a.out, false)
}

fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let cutoff: Cutoff = a.cutoff.parse()?;
    let truth_field = FimField::load(&a.truth)?;
    let rule = if a.grid_relative {
        BoundaryRule::grid_relative(truth_field.grid.resolution())
    } else {
        BoundaryRule::default()
    };
    let truth = fim_field_to_slice_peaks(&truth_field, cutoff, rule);
    let preds = match (&a.pred, &a.estimate) {
        (Some(p), _) => predictions_from_tsv(&fs::read_to_string(p).map_err(|e| Error::io(p, e))?)?,
        (None, Some(e)) => {
            let mut est = FimField::load(e)?;
            if est.grid != truth_field.grid && est.grid.centers().ok().as_ref() == Some(&truth_field.grid) {
                est = node_field_to_centers(&est)?;
            }
            let preds = predictions_from_field(&est, &truth, cutoff)?;
            let mut path = a.out.as_os_str().to_owned();
            path.push(".pred.tsv");
            write_file(Path::new(&path), predictions_to_tsv(&preds))?;
            preds
        }
        (None, None) => return Err(Error::InvalidArgument("need --pred or --estimate".into())),
    };
    let report = peak_rmse(&truth, &preds)?;
    write_file(&a.out, report.to_tsv())?;
    println!("{}", report.summary());
    let mut m = run_manifest("evaluate", 0, &argv_now());
    m.set("cutoff", cutoff);
    m.set("n_inner", report.n_inner);
    m.set("peak_rmse", report.rmse.map_or("nan".to_string(), |r| r.to_string()));
    write_manifest(&m, &a.out, false)
}

fn render_cmd(a: &RenderArgs) -> Result<()> {
    let text = fs::read_to_string(&a.input).map_err(|e| Error::io(&a.input, e))?;
    let svg = if text.starts_with("# provenance=") {
        let field = FimField::from_tsv(&text)?;
        if field.grid.dims() == 1 {
            let mut tsv = String::from("lambda0\tg00\n");
            for (i, m) in field.entries.iter().enumerate() {
                tsv.push_str(&format!("{}\t{}\n", field.grid.axis_coord(i), m.g00));
            }
            let mut path = a.out.as_os_str().to_owned();
            path.push(".tsv");
            write_file(Path::new(&path), tsv)?;
        }
        render::render_field(&field, a.scale)?
    } else {
        render::render_table(&render::Table::parse(&text)?)?
    };
    write_file(&a.out, svg)?;
    write_manifest(&run_manifest("render", 0, &argv_now()), &a.out, false)
}

/// Replaces the value of `--out` (either `--out X` or `--out=X`).
fn replace_out(argv: &[String], out: &Path) -> Result<Vec<String>> {
    let mut v = argv.to_vec();
    let out = out.to_string_lossy().into_owned();
    for i in 0..v.len() {
        if v[i] == "--out" && i + 1 < v.len() {
            v[i + 1] = out;
            return Ok(v);
        }
        if v[i].starts_with("--out=") {
            v[i] = format!("--out={out}");
            return Ok(v);
        }
    }
    Err(Error::malformed("run manifest", "recorded command has no --out"))
}

fn rerun(a: &RerunArgs) -> Result<()> {
    let text = fs::read_to_string(&a.manifest).map_err(|e| Error::io(&a.manifest, e))?;
    let m = RunManifest::from_kv(&parse_kv(&text)?)?;
    let mut argv: Vec<String> = m.params.iter().filter(|(k, _)| k.starts_with("argv.")).map(|(_, v)| v.clone()).collect();
    if argv.is_empty() {
        return Err(Error::malformed("run manifest", "no recorded command line"));
    }
    if argv.iter().any(|s| s == "rerun") {
        return Err(Error::malformed("run manifest", "refusing to replay a rerun"));
    }
    if let Some(out) = &a.out {
        argv = replace_out(&argv, out)?;
    }
    // Reproduce the recorded timestamps in every manifest written below.
    std::env::set_var("SOURCE_DATE_EPOCH", m.created_unix.to_string());
    let cli = Cli::try_parse_from(std::iter::once("fimlab".to_string()).chain(argv.iter().cloned()))
        .map_err(|e| Error::malformed("run manifest", e.to_string()))?;
    set_argv(argv);
    dispatch(&cli.command)
}
