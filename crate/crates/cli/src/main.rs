//! `stmean`: generate Stiefel sample sets, average them, validate matrix
//! files and run the comparison experiments.
//!
//! Exit codes: 0 on success, 1 for usage errors (bad flags, unreadable or
//! malformed files, unsupported map pairs), 2 for numerical-domain failures.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use stiefel_mean::experiments::{run_to_dir, ExperimentKind, ExperimentSpec};
use stiefel_mean::manifold::{orthonormality_defect, TOL_ORTH};
use stiefel_mean::sample_io::{read_raw, read_sample_set, read_weights, write_point, write_sample_set};
use stiefel_mean::{
    fixed_point_mean, initial_guess, rng_from_seed, AveragingConfig, Dims, Error, MapPair, SampleSet, Weights,
};

#[derive(Debug, Parser)]
#[command(name = "stmean", version, about = "Fixed-point means on the Stiefel manifold")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a seeded sample set around a random center.
    Gen(GenArgs),
    /// Average a sample set with one retraction/lifting pair.
    Mean(MeanArgs),
    /// Report the orthonormality defect of every block in a matrix file.
    Validate(ValidateArgs),
    /// Run one of the comparison experiments and write its CSV.
    Exp(ExpArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    p: usize,
    #[arg(long)]
    n: usize,
    /// Number of samples.
    #[arg(long = "N", value_name = "N")]
    count: usize,
    #[arg(long)]
    sigma: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct MeanArgs {
    #[arg(long)]
    input: PathBuf,
    /// polar, ortho or mixed.
    #[arg(long, default_value = "mixed")]
    pair: String,
    /// Where to write the mean (a one-sample set file).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the per-iteration CSV trace.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// One positive weight per line, one line per sample.
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    conv_tol: Option<f64>,
    #[arg(long)]
    epsilon_init: Option<f64>,
    #[arg(long)]
    domain_radius: Option<f64>,
    /// Seed for the initial-guess perturbation; defaults to the file's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Lift samples on the rayon pool.
    #[arg(long)]
    parallel: bool,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    input: PathBuf,
}

#[derive(Debug, Args)]
struct ExpArgs {
    /// discrepancy_stats, convergence, runtime_vs_n or runtime_vs_p.
    #[arg(long)]
    kind: String,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Use the full-size sample counts, trial counts and sweeps.
    #[arg(long)]
    full_scale: bool,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long = "N", value_name = "N")]
    count: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated sweep values.
    #[arg(long, value_delimiter = ',')]
    sweep: Option<Vec<usize>>,
    /// Comma-separated pair names.
    #[arg(long, value_delimiter = ',')]
    pairs: Option<Vec<String>>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    conv_tol: Option<f64>,
    #[arg(long)]
    epsilon_init: Option<f64>,
    #[arg(long)]
    parallel_trials: bool,
}

/// Failure split by exit code.
enum Failure {
    Usage(anyhow::Error),
    Numerical(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        let numerical = e
            .chain()
            .any(|c| c.downcast_ref::<Error>().is_some_and(Error::is_numerical));
        if numerical {
            Failure::Numerical(e)
        } else {
            Failure::Usage(e)
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Mean(a) => mean(a),
        Command::Validate(a) => validate(a),
        Command::Exp(a) => exp(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("numerical error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn gen(a: GenArgs) -> Result<(), Failure> {
    let set = SampleSet::generate(Dims::new(a.p, a.n)?, a.sigma, a.count, a.seed)?;
    let mut w = create(&a.out)?;
    write_sample_set(&set, &mut w).map_err(anyhow::Error::from)?;
    w.flush().context("flushing output")?;
    println!("wrote {} samples on St({},{}) to {}", set.len(), a.p, a.n, a.out.display());
    Ok(())
}

fn mean(a: MeanArgs) -> Result<(), Failure> {
    let pair: MapPair = a.pair.parse().map_err(|e: Error| Failure::Usage(e.into()))?;
    let set = read_sample_set(open(&a.input)?)
        .map_err(anyhow::Error::from)
        .with_context(|| format!("reading {}", a.input.display()))?;

    let mut config = AveragingConfig::new(pair);
    if let Some(v) = a.max_iters {
        config.max_iters = v;
    }
    if let Some(v) = a.conv_tol {
        config.conv_tol = v;
    }
    if let Some(v) = a.epsilon_init {
        config.epsilon_init = v;
    }
    if let Some(v) = a.domain_radius {
        config.domain_radius = v;
    }
    config.parallel = a.parallel;
    if let Some(path) = &a.weights {
        let w = read_weights(open(path)?)
            .map_err(anyhow::Error::from)
            .with_context(|| format!("reading {}", path.display()))?;
        config = config.with_weights(Weights::Fixed(w));
    }
    config.validate().map_err(|e| Failure::Usage(e.into()))?;

    let seed = a.seed.unwrap_or(set.seed());
    let start = initial_guess(&set, &config, &mut rng_from_seed(seed))?;
    let report = fixed_point_mean(&set, &config, &start)?;

    println!("pair={}", report.pair);
    println!("converged={}", report.converged);
    println!("iterations={}", report.iterations_used);
    println!("final_step={:e}", report.step_sizes.last().copied().unwrap_or(0.0));
    if let Some(d) = report.delta_to_center.as_ref().and_then(|d| d.last()) {
        println!("delta_to_center={d:e}");
    }
    println!("residual_field_norm={:e}", report.residual_field_norm);
    println!("wall_time_ns={}", report.wall_time.as_nanos());

    if let Some(path) = &a.out {
        let mut w = create(path)?;
        write_point(&report.final_point, set.sigma(), seed, &mut w).map_err(anyhow::Error::from)?;
        w.flush().context("flushing mean")?;
    }
    if let Some(path) = &a.trace {
        let mut w = create(path)?;
        report.write_trace_csv(&mut w).map_err(anyhow::Error::from)?;
        w.flush().context("flushing trace")?;
    }
    Ok(())
}

fn validate(a: ValidateArgs) -> Result<(), Failure> {
    let raw = read_raw(open(&a.input)?)
        .map_err(anyhow::Error::from)
        .with_context(|| format!("reading {}", a.input.display()))?;
    let labelled = raw
        .center
        .iter()
        .map(|c| ("center".to_string(), c))
        .chain(raw.blocks.iter().enumerate().map(|(k, b)| (format!("sample {k}"), b)));
    let mut worst: Option<(String, f64)> = None;
    for (label, m) in labelled {
        let defect = orthonormality_defect(m);
        println!("{label}: defect={defect:e}");
        if !(defect < TOL_ORTH) && worst.as_ref().is_none_or(|(_, d)| defect > *d || defect.is_nan()) {
            worst = Some((label, defect));
        }
    }
    match worst {
        None => {
            println!("ok: all blocks on St({},{})", raw.p, raw.n);
            Ok(())
        }
        Some((label, defect)) => Err(anyhow::Error::from(Error::NotOrthonormal { defect })
            .context(format!("{label} is off the manifold"))
            .into()),
    }
}

fn exp(a: ExpArgs) -> Result<(), Failure> {
    let kind: ExperimentKind = a.kind.parse().map_err(|e: Error| Failure::Usage(e.into()))?;
    let mut spec = if a.full_scale {
        ExperimentSpec::full(kind, a.seed)
    } else {
        ExperimentSpec::desk(kind, a.seed)
    };
    if let Some(v) = a.p {
        spec.p = v;
    }
    if let Some(v) = a.n {
        spec.n = v;
    }
    if let Some(v) = a.count {
        spec.samples = v;
    }
    if let Some(v) = a.sigma {
        spec.sigma = v;
    }
    if let Some(v) = a.trials {
        spec.trials = v;
    }
    if let Some(v) = a.sweep {
        spec.sweep = v;
    }
    if let Some(names) = a.pairs {
        spec.pairs = names
            .iter()
            .map(|s| s.parse::<MapPair>())
            .collect::<Result<_, _>>()
            .map_err(|e| Failure::Usage(e.into()))?;
    }
    if let Some(v) = a.max_iters {
        spec.max_iters = v;
    }
    if let Some(v) = a.conv_tol {
        spec.conv_tol = v;
    }
    if let Some(v) = a.epsilon_init {
        spec.epsilon_init = v;
    }
    spec.parallel_trials = a.parallel_trials;
    spec.validate().map_err(|e| Failure::Usage(e.into()))?;

    let (output, path) = run_to_dir(&spec, &a.out_dir)?;
    for line in output.summary_lines() {
        println!("{line}");
    }
    println!("wrote {}", path.display());
    Ok(())
}
