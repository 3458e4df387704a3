//! `gtnn` — command-line driver for synthetic data generation, training,
//! evaluation, gradient checking, and the analytic verification battery.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use gtnn::harness::{
    derive_seed, generate_planted_filter_dataset, generate_synthetic_clouds,
    generate_synthetic_molecules, load_dataset, load_planted_meta, mae, meta_path, metrics_csv,
    mse, planted_csv, predict_all, r_squared, run_experiment, run_planted_experiment,
    save_dataset, save_json, save_planted_meta, save_text, stack_targets, train_model, CloudModel,
    ExperimentConfig, FilterModel, GraphModel, ModelKind, MoleculeModel, PlantedMeta, Sample,
    Task,
};
use gtnn::layers::{equivariance_check, layer_gradient_check, LayerKind};
use gtnn::nn::ParamPack;
use gtnn::theory::{
    random_pd_sigma, random_shift_pair, run_theory_checks_with, FilterClass, TheoryCheckOptions,
};
use gtnn::Tensor;

#[derive(Parser)]
#[command(
    name = "gtnn",
    version,
    about = "Graph-tuple network toolkit: data generation, training, and verification"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic dataset and write it as JSON lines.
    GenData(GenDataArgs),
    /// Run the experiment described by a JSON config and write reports.
    Train(TrainArgs),
    /// Evaluate a saved model on a dataset.
    Eval(EvalArgs),
    /// Finite-difference gradient checks, optionally with equivariance probes.
    Gradcheck(GradcheckArgs),
    /// Run the analytic verification battery for the filter theory.
    VerifyTheory(VerifyTheoryArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TaskArg {
    Molecule,
    Pointcloud,
    PlantedFilter,
}

impl From<TaskArg> for Task {
    fn from(arg: TaskArg) -> Self {
        match arg {
            TaskArg::Molecule => Task::Molecule,
            TaskArg::Pointcloud => Task::Pointcloud,
            TaskArg::PlantedFilter => Task::PlantedFilter,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LayerArg {
    All,
    GineConv,
    Egcl,
    GineGt,
    EgnnGt,
}

impl LayerArg {
    fn kinds(self) -> Vec<LayerKind> {
        match self {
            LayerArg::All => LayerKind::ALL.to_vec(),
            LayerArg::GineConv => vec![LayerKind::GineConv],
            LayerArg::Egcl => vec![LayerKind::Egcl],
            LayerArg::GineGt => vec![LayerKind::GineGt],
            LayerArg::EgnnGt => vec![LayerKind::EgnnGt],
        }
    }
}

#[derive(Args)]
struct GenDataArgs {
    /// Which synthetic dataset to generate.
    #[arg(long, value_enum)]
    task: TaskArg,
    /// Number of records.
    #[arg(long, default_value_t = 100)]
    count: usize,
    /// RNG seed.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output path (JSON lines). Planted-filter data gets a `.meta.json` sidecar.
    #[arg(long)]
    out: PathBuf,
    /// Smallest molecule size (molecule task).
    #[arg(long, default_value_t = 4)]
    atoms_min: usize,
    /// Largest molecule size (molecule task).
    #[arg(long, default_value_t = 12)]
    atoms_max: usize,
    /// Points per cloud (pointcloud task).
    #[arg(long, default_value_t = 32)]
    points: usize,
    /// Signal dimension of the planted-filter problem.
    #[arg(long, default_value_t = 4)]
    dim: usize,
    /// Polynomial degree of the planted filter.
    #[arg(long, default_value_t = 2)]
    degree: usize,
    /// Commutator coefficient of the planted filter.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Observation noise variance.
    #[arg(long, default_value_t = 0.01)]
    noise_var: f64,
}

#[derive(Args)]
struct TrainArgs {
    /// Experiment config (JSON mirroring the library's `ExperimentConfig`).
    #[arg(long, conflicts_with = "task")]
    config: Option<PathBuf>,
    /// Use the built-in default config for this task instead of --config.
    #[arg(long, value_enum)]
    task: Option<TaskArg>,
    /// Dataset (JSON lines).
    #[arg(long)]
    data: PathBuf,
    /// Report output path (JSON); per-run CSV metrics are written next to it.
    #[arg(long)]
    out: PathBuf,
    /// Override the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// After the evaluation runs, fit one model on the full dataset and save it here.
    #[arg(long)]
    save_model: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Saved model file (from `train --save-model`).
    #[arg(long)]
    model: PathBuf,
    /// Dataset to evaluate on (JSON lines).
    #[arg(long)]
    data: PathBuf,
    /// Optional JSON output for the metrics.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GradcheckArgs {
    /// Layer to check.
    #[arg(long, value_enum, default_value = "all")]
    layer: LayerArg,
    /// Random instances per layer.
    #[arg(long, default_value_t = 20)]
    instances: usize,
    /// RNG seed.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Maximum allowed relative error between analytic and numerical gradients.
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    /// Finite-difference step.
    #[arg(long, default_value_t = 1e-6)]
    h: f64,
    /// Also run this many random equivariance trials.
    #[arg(long)]
    equiv_trials: Option<usize>,
}

#[derive(Args)]
struct VerifyTheoryArgs {
    /// Maximum word length of the filter classes.
    #[arg(long, default_value_t = 2)]
    m: usize,
    /// Dimension of the random shift operators.
    #[arg(long, default_value_t = 4)]
    n: usize,
    /// Trial count for the randomized and Monte Carlo checks.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// RNG seed.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Optional JSON output for the full report.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

/// `Ok(false)` means the command completed but a check failed.
fn run(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::GenData(args) => gen_data(args),
        Cmd::Train(args) => train(args),
        Cmd::Eval(args) => eval(args),
        Cmd::Gradcheck(args) => gradcheck(args),
        Cmd::VerifyTheory(args) => verify_theory(args),
    }
}

fn gen_data(args: GenDataArgs) -> Result<bool> {
    let (samples, planted) = match args.task {
        TaskArg::Molecule => {
            if args.atoms_min < 2 || args.atoms_max < args.atoms_min {
                bail!("--atoms-min/--atoms-max must satisfy 2 <= min <= max");
            }
            let samples = generate_synthetic_molecules(
                args.count,
                args.atoms_min..=args.atoms_max,
                args.seed,
            )?;
            (samples, None)
        }
        TaskArg::Pointcloud => (
            generate_synthetic_clouds(args.count, args.points, args.seed)?,
            None,
        ),
        TaskArg::PlantedFilter => {
            // The problem instance (shifts, covariance, filter coefficients)
            // is drawn from a seed stream separate from the sample noise.
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(args.seed, 0xD0));
            let s = random_shift_pair(args.dim, true, &mut rng);
            let sigma = random_pd_sigma(args.dim, &mut rng);
            let coeffs: Vec<f64> = (0..=args.degree)
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            let (samples, meta) = generate_planted_filter_dataset(
                &s,
                &coeffs,
                args.alpha,
                &sigma,
                args.noise_var,
                args.degree,
                args.count,
                args.seed,
            )?;
            (samples, Some(meta))
        }
    };
    save_dataset(&args.out, &samples)?;
    if let Some(meta) = &planted {
        save_planted_meta(&args.out, meta)?;
        println!(
            "planted filter: degree {}, alpha {}, analytic risk gap {:.6e}",
            meta.degree, meta.alpha, meta.analytic_gap
        );
        println!("ground truth written to {}", meta_path(&args.out).display());
    }
    println!("wrote {} records to {}", samples.len(), args.out.display());
    Ok(true)
}

fn load_config(args: &TrainArgs) -> Result<ExperimentConfig> {
    let mut cfg: ExperimentConfig = match (&args.config, args.task) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            serde_json::from_str(&text)
                .with_context(|| format!("parsing config {}", path.display()))?
        }
        (None, Some(task)) => ExperimentConfig::default_for(task.into()),
        (None, None) => bail!("one of --config or --task is required"),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn train(args: TrainArgs) -> Result<bool> {
    let cfg = load_config(&args)?;
    let samples = load_dataset(&args.data)?;
    let csv_out = args.out.with_extension("csv");
    match cfg.task {
        Task::PlantedFilter => {
            let meta = load_planted_meta(&args.data)
                .with_context(|| format!("loading sidecar {}", meta_path(&args.data).display()))?;
            let report = run_planted_experiment(&cfg, &samples, &meta)?;
            save_json(&args.out, &report)?;
            save_text(&csv_out, &planted_csv(&report))?;
            println!(
                "planted comparison over {} repeats: mean tuple-over-tied improvement {:.6e} (analytic gap {:.6e})",
                report.runs.len(),
                report.mean_improvement,
                report.analytic_gap
            );
            if let Some(frac) = report.gap_fraction {
                println!("improvement captures {:.1}% of the analytic gap", 100.0 * frac);
            }
            if let Some(path) = &args.save_model {
                save_final_model(&cfg, &samples, Some(&meta), path)?;
            }
        }
        Task::Molecule | Task::Pointcloud => {
            let report = run_experiment(&cfg, &samples)?;
            save_json(&args.out, &report)?;
            save_text(&csv_out, &metrics_csv(&report))?;
            let s = &report.summary;
            println!(
                "{} {} on {} samples ({} model)",
                report.folds.len(),
                if cfg.task == Task::Molecule { "folds" } else { "repeats" },
                report.n_samples,
                cfg.model.name()
            );
            println!("  mae per target: {}", fmt_vec(&s.mae_mean));
            println!("  mse per target: {}", fmt_vec(&s.mse_mean));
            if let Some(r2) = &s.r2_mean {
                println!("  r2  per target: {}", fmt_vec(r2));
            }
            if let Some(path) = &args.save_model {
                save_final_model(&cfg, &samples, None, path)?;
            }
        }
    }
    println!(
        "report written to {} (csv: {})",
        args.out.display(),
        csv_out.display()
    );
    Ok(true)
}

/// Saved-model format: rebuild the architecture from the config, then
/// restore the flat parameter vector.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    config: ExperimentConfig,
    n_targets: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    planted: Option<PlantedMeta>,
    params: Vec<f64>,
}

fn prepare_all<M: GraphModel>(model: &M, samples: &[Sample]) -> Result<Vec<M::Prep>> {
    Ok(samples
        .iter()
        .map(|s| model.prepare(s))
        .collect::<gtnn::Result<Vec<_>>>()?)
}

fn planted_model(cfg: &ExperimentConfig, meta: &PlantedMeta) -> Result<FilterModel> {
    let degree = cfg
        .filter_degree
        .context("planted-filter config needs `filter_degree`")?;
    let class = match cfg.model {
        ModelKind::GraphTuple => FilterClass::HGt,
        ModelKind::SingleGraph => FilterClass::H0,
    };
    Ok(FilterModel::new(class, degree, &meta.s, &meta.sigma)?)
}

fn save_final_model(
    cfg: &ExperimentConfig,
    samples: &[Sample],
    planted: Option<&PlantedMeta>,
    path: &Path,
) -> Result<()> {
    if samples.is_empty() {
        bail!("cannot fit a final model on an empty dataset");
    }
    let t = samples[0].targets.len();
    let all: Vec<usize> = (0..samples.len()).collect();
    let targets: Vec<Tensor> = samples.iter().map(Sample::target_row).collect();
    let run_seed = derive_seed(cfg.seed, 0xF1);
    let shuffle_seed = derive_seed(run_seed, 0xA5);
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
    let params = match cfg.task {
        Task::Molecule => {
            let mut model = MoleculeModel::new(cfg, t, &mut rng)?;
            let preps = prepare_all(&model, samples)?;
            train_model(&mut model, &preps, &targets, &all, &[], cfg, shuffle_seed)?;
            model.pack()
        }
        Task::Pointcloud => {
            let mut model = CloudModel::new(cfg, t, &mut rng)?;
            let preps = prepare_all(&model, samples)?;
            train_model(&mut model, &preps, &targets, &all, &[], cfg, shuffle_seed)?;
            model.pack()
        }
        Task::PlantedFilter => {
            let meta = planted.expect("caller provides metadata for planted configs");
            let mut model = planted_model(cfg, meta)?;
            let preps = prepare_all(&model, samples)?;
            train_model(&mut model, &preps, &targets, &all, &[], cfg, shuffle_seed)?;
            model.pack()
        }
    };
    let file = ModelFile {
        config: cfg.clone(),
        n_targets: t,
        planted: planted.cloned(),
        params,
    };
    save_json(path, &file)?;
    println!("model written to {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct EvalReport {
    n_samples: usize,
    mae: Vec<f64>,
    mse: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r2: Option<Vec<f64>>,
}

fn eval(args: EvalArgs) -> Result<bool> {
    let text = std::fs::read_to_string(&args.model)
        .with_context(|| format!("reading model {}", args.model.display()))?;
    let file: ModelFile = serde_json::from_str(&text)
        .with_context(|| format!("parsing model {}", args.model.display()))?;
    file.config.validate()?;
    let samples = load_dataset(&args.data)?;
    if samples.is_empty() {
        bail!("dataset {} is empty", args.data.display());
    }
    let t = samples[0].targets.len();
    if t != file.n_targets {
        bail!(
            "model predicts {} targets but dataset has {}",
            file.n_targets,
            t
        );
    }
    let all: Vec<usize> = (0..samples.len()).collect();
    let cfg = &file.config;
    let pred = match cfg.task {
        Task::Molecule => {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let mut model = MoleculeModel::new(cfg, t, &mut rng)?;
            restore_params(&mut model, &file.params)?;
            let preps = prepare_all(&model, &samples)?;
            predict_all(&model, &preps, &all)?
        }
        Task::Pointcloud => {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let mut model = CloudModel::new(cfg, t, &mut rng)?;
            restore_params(&mut model, &file.params)?;
            let preps = prepare_all(&model, &samples)?;
            predict_all(&model, &preps, &all)?
        }
        Task::PlantedFilter => {
            let meta = file
                .planted
                .as_ref()
                .context("planted model file lacks the planted problem metadata")?;
            let mut model = planted_model(cfg, meta)?;
            restore_params(&mut model, &file.params)?;
            let preps = prepare_all(&model, &samples)?;
            predict_all(&model, &preps, &all)?
        }
    };
    let targets: Vec<Tensor> = samples.iter().map(Sample::target_row).collect();
    let y = stack_targets(&targets, &all)?;
    let report = EvalReport {
        n_samples: samples.len(),
        mae: mae(&pred, &y)?,
        mse: mse(&pred, &y)?,
        r2: r_squared(&pred, &y).ok(),
    };
    println!("evaluated {} samples", report.n_samples);
    println!("  mae per target: {}", fmt_vec(&report.mae));
    println!("  mse per target: {}", fmt_vec(&report.mse));
    if let Some(r2) = &report.r2 {
        println!("  r2  per target: {}", fmt_vec(r2));
    }
    if let Some(out) = &args.out {
        save_json(out, &report)?;
        println!("metrics written to {}", out.display());
    }
    Ok(true)
}

fn restore_params<M: GraphModel>(model: &mut M, params: &[f64]) -> Result<()> {
    if params.len() != model.num_params() {
        bail!(
            "model file has {} parameters but the configured architecture has {}",
            params.len(),
            model.num_params()
        );
    }
    model.unpack(params)?;
    Ok(())
}

fn gradcheck(args: GradcheckArgs) -> Result<bool> {
    let mut ok = true;
    for kind in args.layer.kinds() {
        let err = layer_gradient_check(kind, args.instances, args.seed, args.h)?;
        let passed = err <= args.tol;
        ok &= passed;
        println!(
            "[{}] {:<9} max relative gradient error {:.3e} over {} instances (tol {:.1e})",
            verdict(passed),
            kind.name(),
            err,
            args.instances,
            args.tol
        );
    }
    if let Some(trials) = args.equiv_trials {
        let rep = equivariance_check(trials, args.seed)?;
        let e3 = rep.max_e3_coord_err.max(rep.max_e3_feat_err);
        let e3_ok = e3 <= 1e-9;
        let perm_ok = rep.max_permutation_err <= 1e-12;
        ok &= e3_ok && perm_ok;
        println!(
            "[{}] E(3) equivariance: max deviation {:.3e} over {} trials ({} with reflection), tol 1.0e-9",
            verdict(e3_ok),
            e3,
            rep.trials,
            rep.reflection_trials
        );
        println!(
            "[{}] permutation equivariance: max deviation {:.3e}, tol 1.0e-12",
            verdict(perm_ok),
            rep.max_permutation_err
        );
    }
    Ok(ok)
}

fn verify_theory(args: VerifyTheoryArgs) -> Result<bool> {
    let report = run_theory_checks_with(TheoryCheckOptions {
        seed: args.seed,
        m: args.m,
        n: args.n,
        trials: args.trials,
    })?;
    for check in &report.checks {
        println!(
            "[{}] {}: {:.6e} {} {:.6e} — {}",
            verdict(check.passed),
            check.name,
            check.observed,
            check.comparison,
            check.threshold,
            check.detail
        );
    }
    let n_pass = report.checks.iter().filter(|c| c.passed).count();
    println!(
        "{}/{} checks passed (m={}, n={}, trials={}, seed={})",
        n_pass,
        report.checks.len(),
        args.m,
        args.n,
        args.trials,
        args.seed
    );
    if let Some(out) = &args.out {
        save_json(out, &report)?;
        println!("report written to {}", out.display());
    }
    Ok(report.passed)
}

fn verdict(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}

fn fmt_vec(vals: &[f64]) -> String {
    vals.iter()
        .map(|v| format!("{v:.4e}"))
        .collect::<Vec<_>>()
        .join(" ")
}
