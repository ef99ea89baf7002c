use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use qsf_core::experiment::{
    load_dataset, load_saved_report, prepare_data, render_saved, run_cv_experiment, run_eigen_experiment, write_cv_run,
    write_eigen_run, ExperimentConfig, ExperimentKind, ReportFormat,
};

#[derive(Parser)]
#[command(name = "qsf", version, about = "Quantum spectral filter experiments")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "QSF_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn Laplacian eigenbases of random graphs over a grid of qubit and layer counts.
    EigenApprox(RunArgs),
    /// Stratified k-fold cross-validated classification.
    Cv(RunArgs),
    /// Train and test on a single stratified split.
    Train(RunArgs),
    /// Convert a `summary.json` report.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "csv")]
        format: ReportFormat,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Dataset directory; overrides the config's path.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Run directory; overrides the config's output_dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Prepared-sample cache directory.
    #[arg(long, env = "QSF_CACHE_DIR")]
    cache_dir: Option<PathBuf>,
}

fn load_config(args: &RunArgs, kind: ExperimentKind) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if cfg.kind != kind {
        // `train` and `cv` share config files; only eigen-approx is distinct.
        if cfg.kind == ExperimentKind::EigenApprox || kind == ExperimentKind::EigenApprox {
            bail!("{} is a {:?} config", args.config.display(), cfg.kind);
        }
        cfg.kind = kind;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_dir(cfg: &ExperimentConfig) -> PathBuf {
    if let Some(dir) = &cfg.output_dir {
        return dir.clone();
    }
    let kind = match cfg.kind {
        ExperimentKind::EigenApprox => "eigen-approx",
        ExperimentKind::Train => "train",
        ExperimentKind::Cv => "cv",
    };
    let name = cfg.dataset.as_ref().map_or("er", |d| d.name.as_str());
    Path::new("runs").join(format!("{kind}-{name}-seed{}", cfg.seed))
}

fn eigen(args: &RunArgs) -> Result<()> {
    let cfg = load_config(args, ExperimentKind::EigenApprox)?;
    let report = run_eigen_experiment(&cfg)?;
    let dir = run_dir(&cfg);
    write_eigen_run(&report, &dir)?;
    for c in &report.cells {
        println!(
            "{} qubits, {:>2} layers: mean final loss {:.6} ({} stalled)",
            c.n_qubits,
            c.n_layers,
            c.mean_final_loss,
            c.stalled_graphs.len()
        );
    }
    println!("wrote {}", dir.display());
    Ok(())
}

fn classify(args: &RunArgs, kind: ExperimentKind) -> Result<()> {
    let cfg = load_config(args, kind)?;
    let bundle = load_dataset(&cfg, args.dataset.as_deref())?;
    log::info!(
        "{}: {} graphs, {} classes, max {} nodes, {} features",
        bundle.name,
        bundle.len(),
        bundle.n_classes,
        bundle.max_nodes,
        bundle.feature_dim
    );
    let data = prepare_data(&cfg, &bundle, args.cache_dir.as_deref())?;
    let run = run_cv_experiment(&cfg, &data)?;
    let dir = run_dir(&cfg);
    write_cv_run(&run, &dir)?;
    let r = &run.report;
    println!(
        "{}: test accuracy {:.4} ± {:.4} over {} fold(s), {} parameters ({} quantum)",
        r.dataset,
        r.mean_test_accuracy,
        r.std_test_accuracy,
        r.folds.len(),
        r.parameter_count,
        r.quantum_parameters
    );
    println!("wrote {}", dir.display());
    Ok(())
}

fn report(input: &Path, format: ReportFormat, out: Option<&Path>) -> Result<()> {
    let r = load_saved_report(input).with_context(|| format!("reading {}", input.display()))?;
    let text = render_saved(&r, format);
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match &cli.command {
        Command::EigenApprox(args) => eigen(args),
        Command::Cv(args) => classify(args, ExperimentKind::Cv),
        Command::Train(args) => classify(args, ExperimentKind::Train),
        Command::Report { input, format, out } => report(input, *format, out.as_deref()),
    }
}
