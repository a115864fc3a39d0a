//! Seeded experiment runners comparing the retraction/lifting pairs.
//!
//! Four protocols are provided: the distribution of the mixed-composition
//! discrepancy `Δ_C(Xₖ)` against `δ(C,Xₖ)`, per-iteration convergence of the
//! three pairs on one shared sample set, and runtime sweeps over `n` on
//! `St(100,n)` and over `p` on `St(p,10)`.
//!
//! Every output is a CSV file whose `#` header lines record the full spec,
//! so a run can be regenerated bit-for-bit (apart from wall-clock columns).

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::averaging::{fixed_point_mean, initial_guess, AveragingConfig, AveragingReport};
use crate::error::{Error, Result};
use crate::manifold::{discrepancy, Dims, StiefelPoint};
use crate::maps::{composition_discrepancy_direct, MapPair};
use crate::sampling::{derive_seed, rng_from_seed, SampleSet, DEFAULT_EPSILON_INIT};
use crate::stats::{median, spearman};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    DiscrepancyStats,
    Convergence,
    RuntimeVsN,
    RuntimeVsP,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::DiscrepancyStats => "discrepancy_stats",
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::RuntimeVsN => "runtime_vs_n",
            ExperimentKind::RuntimeVsP => "runtime_vs_p",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "discrepancy_stats" | "discrepancy" => Ok(ExperimentKind::DiscrepancyStats),
            "convergence" => Ok(ExperimentKind::Convergence),
            "runtime_vs_n" => Ok(ExperimentKind::RuntimeVsN),
            "runtime_vs_p" => Ok(ExperimentKind::RuntimeVsP),
            _ => Err(Error::InvalidConfig(format!("unknown experiment kind '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    /// Row count; the fixed `p` of the `n` sweep.
    pub p: usize,
    /// Column count; the fixed `n` of the `p` sweep.
    pub n: usize,
    /// Swept `n` (RuntimeVsN) or `p` (RuntimeVsP); unused otherwise.
    pub sweep: Vec<usize>,
    pub samples: usize,
    pub sigma: f64,
    pub trials: usize,
    pub seed: u64,
    pub pairs: Vec<MapPair>,
    pub epsilon_init: f64,
    pub max_iters: usize,
    pub conv_tol: f64,
    /// Run trials on the rayon pool. Off by default for timing runs.
    pub parallel_trials: bool,
}

impl ExperimentSpec {
    /// Defaults sized to finish in minutes on a desktop.
    pub fn desk(kind: ExperimentKind, seed: u64) -> Self {
        let base = AveragingConfig::default();
        let mut spec = Self {
            kind,
            p: 20,
            n: 4,
            sweep: Vec::new(),
            samples: 1000,
            sigma: 0.05,
            trials: 1,
            seed,
            pairs: MapPair::ALL.to_vec(),
            epsilon_init: DEFAULT_EPSILON_INIT,
            max_iters: base.max_iters,
            conv_tol: base.conv_tol,
            parallel_trials: false,
        };
        match kind {
            ExperimentKind::DiscrepancyStats => spec.pairs = vec![MapPair::MixedPolarOrtho],
            ExperimentKind::Convergence => {
                spec.samples = 30;
                spec.sigma = 0.2;
            }
            ExperimentKind::RuntimeVsN => {
                spec.p = 100;
                spec.sweep = vec![5, 10, 20, 30];
                spec.samples = 50;
                spec.sigma = 0.01;
                spec.trials = 20;
            }
            ExperimentKind::RuntimeVsP => {
                spec.n = 10;
                spec.sweep = vec![20, 50, 100, 200];
                spec.samples = 50;
                spec.sigma = 0.01;
                spec.trials = 20;
            }
        }
        spec
    }

    /// The full-size protocols (20000 samples, 100 timing trials, wider sweeps).
    pub fn full(kind: ExperimentKind, seed: u64) -> Self {
        let mut spec = Self::desk(kind, seed);
        match kind {
            ExperimentKind::DiscrepancyStats => spec.samples = 20_000,
            ExperimentKind::Convergence => {}
            ExperimentKind::RuntimeVsN => {
                spec.sweep = vec![5, 10, 15, 20, 25, 30, 35, 40];
                spec.trials = 100;
            }
            ExperimentKind::RuntimeVsP => {
                spec.sweep = vec![10, 20, 50, 100, 200, 500];
                spec.trials = 100;
            }
        }
        spec
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        if self.samples == 0 {
            return bad("sample count must be >= 1".into());
        }
        if !(self.sigma >= 0.0) {
            return bad(format!("sigma must be >= 0, got {}", self.sigma));
        }
        if self.pairs.is_empty() {
            return bad("at least one map pair is required".into());
        }
        match self.kind {
            ExperimentKind::RuntimeVsN | ExperimentKind::RuntimeVsP => {
                if self.sweep.is_empty() || self.sweep.windows(2).any(|w| w[0] >= w[1]) {
                    return bad("sweep must be nonempty and strictly increasing".into());
                }
                for &d in &self.sweep {
                    self.dims_at(d)?;
                }
            }
            _ => {
                Dims::new(self.p, self.n)?;
            }
        }
        Ok(())
    }

    /// Dimensions of one sweep point.
    pub fn dims_at(&self, point: usize) -> Result<Dims> {
        match self.kind {
            ExperimentKind::RuntimeVsN => Dims::new(self.p, point),
            ExperimentKind::RuntimeVsP => Dims::new(point, self.n),
            _ => Dims::new(self.p, self.n),
        }
    }

    fn averaging_config(&self, pair: MapPair) -> AveragingConfig {
        let mut c = AveragingConfig::new(pair);
        c.epsilon_init = self.epsilon_init;
        c.max_iters = self.max_iters;
        c.conv_tol = self.conv_tol;
        c
    }

    /// `#`-prefixed header lines describing the run.
    pub fn header_lines(&self) -> Vec<String> {
        let join = |v: Vec<String>| v.join(";");
        vec![
            format!("# kind={}", self.kind),
            format!("# p={}", self.p),
            format!("# n={}", self.n),
            format!("# sweep={}", join(self.sweep.iter().map(|v| v.to_string()).collect())),
            format!("# N={}", self.samples),
            format!("# sigma={}", self.sigma),
            format!("# trials={}", self.trials),
            format!("# seed={}", self.seed),
            format!("# pairs={}", join(self.pairs.iter().map(|p| p.to_string()).collect())),
            format!("# epsilon_init={}", self.epsilon_init),
            format!("# max_iters={}", self.max_iters),
            format!("# conv_tol={}", self.conv_tol),
            format!("# parallel_trials={}", self.parallel_trials),
        ]
    }

    pub fn file_name(&self) -> String {
        format!("{}_{}.csv", self.kind, self.seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscrepancyRow {
    pub k: usize,
    /// `δ(C, Xₖ)`.
    pub delta: f64,
    /// `Δ_C(Xₖ)`.
    pub composition: f64,
}

#[derive(Debug, Clone)]
pub struct DiscrepancyStats {
    pub rows: Vec<DiscrepancyRow>,
    pub median_delta: f64,
    pub median_composition: f64,
    /// Spearman correlation between the two columns (`None` if a column is constant).
    pub rank_correlation: Option<f64>,
}

pub fn run_discrepancy_stats(spec: &ExperimentSpec) -> Result<DiscrepancyStats> {
    expect_kind(spec, ExperimentKind::DiscrepancyStats)?;
    let set = SampleSet::generate(Dims::new(spec.p, spec.n)?, spec.sigma, spec.samples, spec.seed)?;
    let center = set.center().expect("generated sets carry their center");
    let rows = set
        .samples()
        .iter()
        .enumerate()
        .map(|(k, x)| {
            let delta = discrepancy(center, x)?;
            let composition = composition_discrepancy_direct(center, x)
                .map_err(|e| e.for_sample(k))?
                .value;
            Ok(DiscrepancyRow { k, delta, composition })
        })
        .collect::<Result<Vec<_>>>()?;
    let deltas: Vec<f64> = rows.iter().map(|r| r.delta).collect();
    let comps: Vec<f64> = rows.iter().map(|r| r.composition).collect();
    Ok(DiscrepancyStats {
        median_delta: median(&deltas).unwrap_or(0.0),
        median_composition: median(&comps).unwrap_or(0.0),
        rank_correlation: spearman(&deltas, &comps),
        rows,
    })
}

#[derive(Debug, Clone)]
pub struct ConvergenceOutcome {
    pub pair: MapPair,
    pub result: std::result::Result<AveragingReport, String>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceResult {
    pub center: StiefelPoint,
    pub initial: StiefelPoint,
    pub outcomes: Vec<ConvergenceOutcome>,
}

/// All pairs from the same sample set and the same initial guess. A pair
/// that fails is recorded and the others still run.
pub fn run_convergence(spec: &ExperimentSpec) -> Result<ConvergenceResult> {
    expect_kind(spec, ExperimentKind::Convergence)?;
    let set = SampleSet::generate(Dims::new(spec.p, spec.n)?, spec.sigma, spec.samples, spec.seed)?;
    let base = spec.averaging_config(spec.pairs[0]);
    let initial = initial_guess(&set, &base, &mut rng_from_seed(derive_seed(spec.seed, &[1])))?;
    let outcomes = spec
        .pairs
        .iter()
        .map(|&pair| ConvergenceOutcome {
            pair,
            result: fixed_point_mean(&set, &spec.averaging_config(pair), &initial).map_err(|e| e.to_string()),
        })
        .collect();
    Ok(ConvergenceResult {
        center: set.center().expect("generated sets carry their center").clone(),
        initial,
        outcomes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRecord {
    pub pair: MapPair,
    /// The swept dimension (`n` or `p`).
    pub dim: usize,
    pub trial: usize,
    pub wall_time: Duration,
    pub iterations: usize,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingSummary {
    pub pair: MapPair,
    pub dim: usize,
    /// Median over completed trials; `None` if every trial failed.
    pub median: Option<Duration>,
    pub completed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone)]
pub struct RuntimeResult {
    pub records: Vec<TimingRecord>,
    pub summary: Vec<TimingSummary>,
}

impl RuntimeResult {
    pub fn median(&self, pair: MapPair, dim: usize) -> Option<Duration> {
        self.summary
            .iter()
            .find(|s| s.pair == pair && s.dim == dim)
            .and_then(|s| s.median)
    }

    /// Medians of one pair in sweep order, in seconds.
    pub fn medians_secs(&self, pair: MapPair) -> Vec<(usize, f64)> {
        self.summary
            .iter()
            .filter(|s| s.pair == pair)
            .filter_map(|s| s.median.map(|m| (s.dim, m.as_secs_f64())))
            .collect()
    }
}

pub fn run_runtime_vs_n(spec: &ExperimentSpec) -> Result<RuntimeResult> {
    expect_kind(spec, ExperimentKind::RuntimeVsN)?;
    run_runtime(spec)
}

pub fn run_runtime_vs_p(spec: &ExperimentSpec) -> Result<RuntimeResult> {
    expect_kind(spec, ExperimentKind::RuntimeVsP)?;
    run_runtime(spec)
}

fn run_runtime(spec: &ExperimentSpec) -> Result<RuntimeResult> {
    spec.validate()?;
    let jobs: Vec<(usize, usize)> = spec
        .sweep
        .iter()
        .flat_map(|&d| (0..spec.trials).map(move |t| (d, t)))
        .collect();
    let per_job = |&(dim, trial): &(usize, usize)| timed_trial(spec, dim, trial);
    let nested: Vec<Vec<TimingRecord>> = if spec.parallel_trials {
        jobs.par_iter().map(per_job).collect::<Result<_>>()?
    } else {
        jobs.iter().map(per_job).collect::<Result<_>>()?
    };
    let records: Vec<TimingRecord> = nested.into_iter().flatten().collect();

    let mut summary = Vec::new();
    for &dim in &spec.sweep {
        for &pair in &spec.pairs {
            let (ok, failed): (Vec<_>, Vec<_>) = records
                .iter()
                .filter(|r| r.pair == pair && r.dim == dim)
                .partition(|r| r.error.is_none());
            let secs: Vec<f64> = ok.iter().map(|r| r.wall_time.as_secs_f64()).collect();
            summary.push(TimingSummary {
                pair,
                dim,
                median: median(&secs).map(Duration::from_secs_f64),
                completed: ok.len(),
                failed: failed.len(),
            });
        }
    }
    Ok(RuntimeResult { records, summary })
}

/// One trial: a fresh sample set, then for each pair an untimed warm-up run
/// followed by a timed run of the full averaging call.
fn timed_trial(spec: &ExperimentSpec, dim: usize, trial: usize) -> Result<Vec<TimingRecord>> {
    let dims = spec.dims_at(dim)?;
    let seed = derive_seed(spec.seed, &[dim as u64, trial as u64]);
    let set = SampleSet::generate(dims, spec.sigma, spec.samples, seed)?;
    let base = spec.averaging_config(spec.pairs[0]);
    let initial = initial_guess(&set, &base, &mut rng_from_seed(derive_seed(seed, &[1])))?;

    Ok(spec
        .pairs
        .iter()
        .map(|&pair| {
            let config = spec.averaging_config(pair);
            let _ = fixed_point_mean(&set, &config, &initial);
            let start = Instant::now();
            let result = fixed_point_mean(&set, &config, &initial);
            let wall_time = start.elapsed();
            match result {
                Ok(report) => TimingRecord {
                    pair,
                    dim,
                    trial,
                    wall_time,
                    iterations: report.iterations_used,
                    converged: report.converged,
                    error: None,
                },
                Err(e) => TimingRecord {
                    pair,
                    dim,
                    trial,
                    wall_time,
                    iterations: 0,
                    converged: false,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect())
}

fn expect_kind(spec: &ExperimentSpec, kind: ExperimentKind) -> Result<()> {
    if spec.kind != kind {
        return Err(Error::InvalidConfig(format!(
            "expected a {kind} spec, got {}",
            spec.kind
        )));
    }
    spec.validate()
}

#[derive(Debug, Clone)]
pub enum ExperimentOutput {
    Discrepancy(DiscrepancyStats),
    Convergence(ConvergenceResult),
    Runtime(RuntimeResult),
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    Ok(match spec.kind {
        ExperimentKind::DiscrepancyStats => ExperimentOutput::Discrepancy(run_discrepancy_stats(spec)?),
        ExperimentKind::Convergence => ExperimentOutput::Convergence(run_convergence(spec)?),
        ExperimentKind::RuntimeVsN => ExperimentOutput::Runtime(run_runtime_vs_n(spec)?),
        ExperimentKind::RuntimeVsP => ExperimentOutput::Runtime(run_runtime_vs_p(spec)?),
    })
}

impl ExperimentOutput {
    /// Summary lines (without the `#` prefix) for headers and terminal output.
    pub fn summary_lines(&self) -> Vec<String> {
        match self {
            ExperimentOutput::Discrepancy(s) => vec![
                format!("median_delta={:e}", s.median_delta),
                format!("median_composition={:e}", s.median_composition),
                format!(
                    "spearman={}",
                    s.rank_correlation.map_or("undefined".into(), |r| format!("{r:.6}"))
                ),
            ],
            ExperimentOutput::Convergence(c) => c
                .outcomes
                .iter()
                .map(|o| match &o.result {
                    Ok(r) => format!(
                        "pair={} converged={} iterations={} final_delta_to_center={:e} residual={:e}",
                        o.pair,
                        r.converged,
                        r.iterations_used,
                        r.delta_to_center.as_ref().and_then(|d| d.last().copied()).unwrap_or(f64::NAN),
                        r.residual_field_norm
                    ),
                    Err(e) => format!("pair={} error={e}", o.pair),
                })
                .collect(),
            ExperimentOutput::Runtime(r) => r
                .summary
                .iter()
                .map(|s| {
                    format!(
                        "pair={} dim={} median_ns={} completed={} failed={}",
                        s.pair,
                        s.dim,
                        s.median.map_or("NA".into(), |m| m.as_nanos().to_string()),
                        s.completed,
                        s.failed
                    )
                })
                .collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, spec: &ExperimentSpec, mut w: W) -> Result<()> {
        for line in spec.header_lines() {
            writeln!(w, "{line}")?;
        }
        for line in self.summary_lines() {
            writeln!(w, "# {line}")?;
        }
        let mut out = csv::Writer::from_writer(w);
        match self {
            ExperimentOutput::Discrepancy(s) => {
                out.write_record(["k", "delta_C_Xk", "Delta_C_Xk"])?;
                for r in &s.rows {
                    out.write_record([r.k.to_string(), format!("{:e}", r.delta), format!("{:e}", r.composition)])?;
                }
            }
            ExperimentOutput::Convergence(c) => {
                out.write_record(["pair", "iter", "delta_to_center"])?;
                for o in &c.outcomes {
                    if let Ok(report) = &o.result {
                        for (i, d) in report.delta_to_center.iter().flatten().enumerate() {
                            out.write_record([o.pair.to_string(), i.to_string(), format!("{d:e}")])?;
                        }
                    }
                }
            }
            ExperimentOutput::Runtime(r) => {
                out.write_record(["pair", "dim", "trial", "wall_time_ns", "iterations", "converged"])?;
                for rec in &r.records {
                    out.write_record([
                        rec.pair.to_string(),
                        rec.dim.to_string(),
                        rec.trial.to_string(),
                        rec.wall_time.as_nanos().to_string(),
                        rec.iterations.to_string(),
                        rec.converged.to_string(),
                    ])?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Runs `spec` and writes `<dir>/<kind>_<seed>.csv`.
pub fn run_to_dir(spec: &ExperimentSpec, dir: &Path) -> Result<(ExperimentOutput, PathBuf)> {
    let output = run_experiment(spec)?;
    std::fs::create_dir_all(dir)?;
    let path = dir.join(spec.file_name());
    let mut w = BufWriter::new(File::create(&path)?);
    output.write_csv(spec, &mut w)?;
    w.flush()?;
    Ok((output, path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweeps_must_increase() {
        let mut spec = ExperimentSpec::desk(ExperimentKind::RuntimeVsN, 1);
        spec.sweep = vec![10, 5];
        assert!(spec.validate().is_err());
        spec.sweep = vec![];
        assert!(spec.validate().is_err());
        spec.sweep = vec![5, 200];
        assert!(spec.validate().is_err(), "n > p must be rejected");
        let mut spec = ExperimentSpec::desk(ExperimentKind::Convergence, 1);
        spec.trials = 0;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in [
            ExperimentKind::DiscrepancyStats,
            ExperimentKind::Convergence,
            ExperimentKind::RuntimeVsN,
            ExperimentKind::RuntimeVsP,
        ] {
            assert_eq!(kind.name().parse::<ExperimentKind>().unwrap(), kind);
        }
        assert!("histogram".parse::<ExperimentKind>().is_err());
    }

    #[test]
    fn wrong_kind_is_rejected() {
        let spec = ExperimentSpec::desk(ExperimentKind::Convergence, 1);
        assert!(run_discrepancy_stats(&spec).is_err());
    }

    #[test]
    fn zero_spread_discrepancies_vanish() {
        let mut spec = ExperimentSpec::desk(ExperimentKind::DiscrepancyStats, 3);
        spec.samples = 20;
        spec.sigma = 0.0;
        let stats = run_discrepancy_stats(&spec).unwrap();
        assert!(stats.rows.iter().all(|r| r.delta < 1e-14 && r.composition < 1e-14));
    }

    #[test]
    fn small_runtime_sweep_is_complete() {
        let mut spec = ExperimentSpec::desk(ExperimentKind::RuntimeVsP, 5);
        spec.sweep = vec![10, 12];
        spec.n = 3;
        spec.trials = 2;
        spec.samples = 5;
        let result = run_runtime_vs_p(&spec).unwrap();
        assert_eq!(result.records.len(), 2 * 2 * 3);
        assert!(result.summary.iter().all(|s| s.completed == 2 && s.median.is_some()));
        let mut buf = Vec::new();
        ExperimentOutput::Runtime(result).write_csv(&spec, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# kind=runtime_vs_p\n"));
        assert!(text.contains("\npair,dim,trial,wall_time_ns,iterations,converged\n"));
    }
}
