//! The `reach` command-line tool.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 validation ran
//! but did not certify `1 - ε` accuracy, 3 numerical failure.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use log::info;

use crate::christoffel::{fit_with, ChristoffelEstimator, FitOptions};
use crate::config::RunConfig;
use crate::document::{write_atomic, EstimatorDocument};
use crate::error::{Error, Result};
use crate::grid::{evaluate_grid, write_grid_csv, GridSpec};
use crate::pac::{pac_sample_size, ChernoffParams, PacParams};
use crate::sampler::{generate_cloud, SampleCloud};
use crate::systems::monotone_interval;
use crate::validator::{validate, validate_cloud, AccuracyReport, ValidateOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NOT_WITNESSED: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "reach",
    version,
    about = "Data-driven reachable set estimation"
)]
pub struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the number of samples needed for an ε-accurate estimate with
    /// confidence 1-δ.
    SampleSize {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        delta: f64,
        /// State dimension used for fitting.
        #[arg(long)]
        n: usize,
        /// Christoffel function order.
        #[arg(long)]
        k: usize,
    },
    /// Simulate, fit and write an estimator document.
    Estimate {
        #[arg(long)]
        config: PathBuf,
        /// Training seed (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
        /// Estimator document path (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the training cloud here.
        #[arg(long)]
        cloud: Option<PathBuf>,
    },
    /// Estimate the accuracy of an estimator on fresh samples.
    Validate {
        #[arg(long)]
        estimator: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        margin: f64,
        #[arg(long, default_value_t = 0.9999)]
        confidence: f64,
        /// Validation seed (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
        /// Report path; a JSON copy is written next to it.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Validate on the regenerated training cloud instead of fresh samples.
        #[arg(long)]
        training: bool,
        /// Keep the points that fall outside the estimate in the JSON report.
        #[arg(long)]
        keep_misclassified: bool,
    },
    /// Evaluate a 2-D estimator on a rectangular grid.
    Grid {
        #[arg(long)]
        estimator: PathBuf,
        /// x1min,x1max,x2min,x2max
        #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
        bounds: Vec<f64>,
        /// rows,cols
        #[arg(long, value_delimiter = ',', default_value = "200,200")]
        resolution: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tight interval enclosure of a monotone system's reachable set.
    Interval {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Parses arguments and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    run(cli)
}

pub fn run(cli: Cli) -> i32 {
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot start thread pool: {e}");
            return EXIT_USAGE;
        }
    };
    match pool.install(|| execute(cli.command)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: Command) -> Result<i32> {
    let mut stdout = std::io::stdout().lock();
    let out = |e| Error::io("<stdout>", e);
    match command {
        Command::SampleSize {
            epsilon,
            delta,
            n,
            k,
        } => {
            let n = pac_sample_size(&PacParams::new(epsilon, delta, n, k)?)?;
            writeln!(stdout, "{n}").map_err(out)?;
            Ok(EXIT_OK)
        }
        Command::Estimate {
            config,
            seed,
            out: out_path,
            cloud,
        } => {
            let cfg = RunConfig::load(&config)?;
            let doc_path = out_path
                .or_else(|| cfg.output.estimator.clone())
                .ok_or_else(|| {
                    Error::Config("no estimator output path (use --out or output.estimator)".into())
                })?;
            let cloud_path = cloud.or_else(|| cfg.output.cloud.clone());
            let run = estimate(&cfg, seed)?;
            if let Some(path) = cloud_path {
                let mut buf = Vec::new();
                run.cloud.write_csv(&mut buf)?;
                write_atomic(&path, &buf)?;
            }
            run.document.write(&doc_path)?;
            writeln!(stdout, "wrote {}", doc_path.display()).map_err(out)?;
            Ok(EXIT_OK)
        }
        Command::Validate {
            estimator,
            config,
            margin,
            confidence,
            seed,
            out: out_path,
            training,
            keep_misclassified,
        } => {
            let chernoff = ChernoffParams::new(margin, confidence)?;
            let cfg = RunConfig::load(&config)?;
            let doc = EstimatorDocument::read(&estimator)?;
            let est = doc.to_estimator()?;
            let options = ValidateOptions { keep_misclassified };
            let report = if training {
                validate_on_training(&cfg, &est, chernoff, options)?
            } else {
                let seed = seed.unwrap_or(cfg.seeds.validate);
                validate(&est, &cfg.problem()?, chernoff, seed, options)?
            };
            let text = report.to_text();
            write!(stdout, "{text}").map_err(out)?;
            if let Some(path) = out_path.or_else(|| cfg.output.report.clone()) {
                write_report(&path, &report)?;
            }
            let required = 1.0 - cfg.fit.epsilon;
            if report.certified_lower_bound >= required {
                Ok(EXIT_OK)
            } else {
                eprintln!(
                    "certified accuracy {} is below the required {required}",
                    report.certified_lower_bound
                );
                Ok(EXIT_NOT_WITNESSED)
            }
        }
        Command::Grid {
            estimator,
            bounds,
            resolution,
            out: out_path,
        } => {
            let bounds: [f64; 4] = bounds.try_into().map_err(|_| {
                Error::InvalidArgument("--bounds takes x1min,x1max,x2min,x2max".into())
            })?;
            let [rows, cols]: [usize; 2] = resolution
                .try_into()
                .map_err(|_| Error::InvalidArgument("--resolution takes rows,cols".into()))?;
            let spec = GridSpec::new(bounds, rows, cols)?;
            let est = EstimatorDocument::read(&estimator)?.to_estimator()?;
            let records = evaluate_grid(&est, &spec)?;
            let mut buf = Vec::new();
            write_grid_csv(&records, &mut buf)?;
            write_atomic(&out_path, &buf)?;
            let inside = records.iter().filter(|r| r.inside).count();
            writeln!(
                stdout,
                "wrote {} ({inside} of {} points inside)",
                out_path.display(),
                records.len()
            )
            .map_err(out)?;
            Ok(EXIT_OK)
        }
        Command::Interval { config } => {
            let cfg = RunConfig::load(&config)?;
            let (lower, upper) = interval(&cfg)?;
            writeln!(stdout, "lower = {}", format_vector(&lower)).map_err(out)?;
            writeln!(stdout, "upper = {}", format_vector(&upper)).map_err(out)?;
            Ok(EXIT_OK)
        }
    }
}

/// Output of one estimation run.
pub struct EstimateRun {
    pub estimator: ChristoffelEstimator,
    pub cloud: SampleCloud,
    pub document: EstimatorDocument,
}

/// Samples the training cloud and fits the estimator described by `cfg`.
pub fn estimate(cfg: &RunConfig, seed: Option<u64>) -> Result<EstimateRun> {
    let started = Instant::now();
    let problem = cfg.problem()?;
    let samples = cfg.sample_count()?;
    let seed = seed.unwrap_or(cfg.seeds.train);
    info!(
        "system {} (n = {}), k = {}, N = {samples}, seed = {seed}",
        problem.system.id(),
        problem.effective_dim(),
        cfg.fit.k
    );
    let cloud = generate_cloud(&problem, samples, seed)?;
    info!(
        "sampled {} final states in {:.2?}",
        cloud.len(),
        started.elapsed()
    );
    let estimator = fit_with(
        &cloud,
        cfg.fit.k,
        FitOptions {
            normalize: cfg.fit.normalize,
        },
    )?;
    info!(
        "m = {}, alpha = {}, jitter = {:e}, wall time {:.2?}",
        estimator.basis().len(),
        estimator.alpha(),
        estimator.meta().jitter,
        started.elapsed()
    );
    let document =
        EstimatorDocument::from_estimator(&estimator, Some(cfg.fit.epsilon), Some(cfg.fit.delta));
    Ok(EstimateRun {
        estimator,
        cloud,
        document,
    })
}

fn validate_on_training(
    cfg: &RunConfig,
    est: &ChristoffelEstimator,
    chernoff: ChernoffParams,
    options: ValidateOptions,
) -> Result<AccuracyReport> {
    let problem = cfg.problem()?;
    let meta = est.meta();
    if let Some(digest) = &meta.digest {
        if *digest != problem.digest() {
            return Err(Error::Config(
                "estimator was fitted on a different problem than this config describes".into(),
            ));
        }
    }
    let seed = meta.seed.unwrap_or(cfg.seeds.train);
    let cloud = generate_cloud(&problem, meta.samples, seed)?;
    validate_cloud(est, &cloud, chernoff, seed, options)
}

fn write_report(path: &Path, report: &AccuracyReport) -> Result<()> {
    let mut json_path = path.with_extension("json");
    let mut text_path = path.to_path_buf();
    if json_path == text_path {
        text_path = path.with_extension("txt");
        json_path = path.to_path_buf();
    }
    write_atomic(&text_path, report.to_text().as_bytes())?;
    let json = serde_json::to_string_pretty(report).expect("report serializes") + "\n";
    write_atomic(&json_path, json.as_bytes())
}

/// Monotone interval for the configured problem, projected like the cloud.
pub fn interval(cfg: &RunConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    let problem = cfg.problem()?;
    let (d_lo, d_hi) = match &problem.disturbance {
        Some(d) => (d.lower.clone(), d.upper.clone()),
        None => (Vec::new(), Vec::new()),
    };
    let (lower, upper) = monotone_interval(
        &problem.system,
        &problem.integrator,
        problem.t0,
        problem.t1,
        &problem.initial.lower,
        &problem.initial.upper,
        &d_lo,
        &d_hi,
    )?;
    Ok(match &problem.projection {
        Some(p) => (
            p.iter().map(|&i| lower[i]).collect(),
            p.iter().map(|&i| upper[i]).collect(),
        ),
        None => (lower, upper),
    })
}

fn format_vector(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(f64::to_string).collect();
    format!("[{}]", items.join(", "))
}
