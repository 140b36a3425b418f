//! Command-line front end: `fit`, `benchmark`, `ct` and `diagnose`.
//!
//! Every command reads an optional TOML (or JSON) document, applies flag
//! overrides, validates, runs, and writes its artifacts together with a
//! `manifest.json` holding the effective configuration.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bench::report::{write_curve_csv, write_report_csv, write_report_json};
use crate::bench::{
    benchmark_sampler, regression_convergence, run_benchmark, run_ct, summarize_fit, BenchmarkSpec,
    CtSpec, ScalePriorSpec, TestFunction,
};
use crate::diagnostics::{burn_in_protocol, ess, run_until_converged, ConvergenceOptions};
use crate::error::{Error, Result};
use crate::kernels::MotherFunction;
use crate::models::io::{create, read_regression_csv, write_image_csv, write_pgm16, write_radon_csv};
use crate::models::GaussianRegression;
use crate::sampler::{read_trace_csv, write_trace_csv, SamplerConfig, TraceRecord};
use crate::SimRng;

pub const OUT_DIR_ENV: &str = "SGMIX_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "sgmix-out";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_CONVERGENCE: i32 = 4;
pub const EXIT_INTERNAL: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "sgmix", version, about = "Symmetric Gamma process mixture regression")]
pub struct Cli {
    /// Master seed; overrides the config document.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for independent replications.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, env = OUT_DIR_ENV)]
    pub out: Option<PathBuf>,
    /// Add wall-clock timings to the manifest and reports.
    #[arg(long, global = true)]
    pub record_timing: bool,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a univariate regression dataset (CSV with columns x,y).
    Fit(FitArgs),
    /// Run the test-function benchmark.
    Benchmark(BenchmarkArgs),
    /// Reconstruct the Shepp-Logan phantom from simulated Radon data.
    Ct(CtArgs),
    /// Re-run the burn-in protocol and ESS on a stored trace.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    pub data: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub kernel: Option<MotherFunction>,
    /// Sweeps before the first convergence check.
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Test function name or `all`; repeatable.
    #[arg(long = "function")]
    pub functions: Vec<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub replications: Option<usize>,
    #[arg(long)]
    pub rsnr: Option<f64>,
    #[arg(long)]
    pub kernel: Option<MotherFunction>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Write the mean curve and band of every replication.
    #[arg(long)]
    pub dump_curves: bool,
}

#[derive(Debug, Args)]
pub struct CtArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long)]
    pub n_radii: Option<usize>,
    #[arg(long)]
    pub n_angles: Option<usize>,
    #[arg(long)]
    pub sigma2: Option<f64>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// 256 radii, 128 angles and a 256-pixel image. Long running.
    #[arg(long)]
    pub full: bool,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    pub trace: PathBuf,
    /// Trace column to diagnose.
    #[arg(long, default_value = "loglik")]
    pub column: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub kernel: MotherFunction,
    pub prior: ScalePriorSpec,
    pub sampler: SamplerConfig,
    pub convergence: ConvergenceOptions,
    pub band_level: f64,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            kernel: MotherFunction::Gaussian,
            prior: ScalePriorSpec::default(),
            sampler: benchmark_sampler(),
            convergence: regression_convergence(),
            band_level: 0.95,
            seed: 1,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        self.prior.prior()?;
        self.sampler.validate()?;
        if !(self.band_level > 0.0 && self.band_level < 1.0) {
            return Err(Error::Config(format!(
                "band_level must lie in (0, 1), got {}",
                self.band_level
            )));
        }
        if self.sampler.snapshot_every == 0 {
            return Err(Error::Config("fit needs sampler.snapshot_every >= 1".into()));
        }
        Ok(())
    }
}

/// Benchmark document: the function list plus one shared spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkConfig {
    pub functions: Vec<String>,
    pub benchmark: BenchmarkSpec,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            functions: vec!["blip".into()],
            benchmark: BenchmarkSpec::default(),
        }
    }
}

impl BenchmarkConfig {
    /// Resolves names, expanding `all`; unknown names are a usage error.
    pub fn resolve_functions(&self) -> Result<Vec<TestFunction>> {
        let mut out = Vec::new();
        for name in &self.functions {
            if name == "all" {
                out.extend(TestFunction::ALL);
            } else {
                out.push(name.parse()?);
            }
        }
        if out.is_empty() {
            return Err(Error::Config("no test function selected".into()));
        }
        Ok(out)
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("sgmix: error[{}]: {e}", error_kind(&e));
            exit_code(&e)
        }
    }
}

pub fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Parameter(_) => "parameter",
        Error::Config(_) => "config",
        Error::Io { .. } => "io",
        Error::Parse { .. } => "parse",
        Error::DegenerateSeries(_) | Error::DegenerateSignal(_) => "data",
        Error::Unsupported(_) => "unsupported",
        Error::Convergence { .. } => "convergence",
        Error::Numeric(_) | Error::IndexOutOfRange { .. } => "internal",
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parameter(_) | Error::Config(_) | Error::Io { .. } => EXIT_USAGE,
        Error::Parse { .. }
        | Error::DegenerateSeries(_)
        | Error::DegenerateSignal(_)
        | Error::Unsupported(_) => EXIT_DATA,
        Error::Convergence { .. } => EXIT_CONVERGENCE,
        Error::Numeric(_) | Error::IndexOutOfRange { .. } => EXIT_INTERNAL,
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let out = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    let ctx = Context {
        out,
        seed: cli.seed,
        threads: cli.threads,
        timing: cli.record_timing,
        verbose: cli.verbose,
        start: Instant::now(),
    };
    match &cli.command {
        Command::Fit(a) => cmd_fit(&ctx, a),
        Command::Benchmark(a) => ctx.in_pool(|| cmd_benchmark(&ctx, a)),
        Command::Ct(a) => cmd_ct(&ctx, a),
        Command::Diagnose(a) => cmd_diagnose(&ctx, a),
    }
}

struct Context {
    out: PathBuf,
    seed: Option<u64>,
    threads: Option<usize>,
    timing: bool,
    verbose: u8,
    start: Instant,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn prepare(&self) -> Result<()> {
        std::fs::create_dir_all(&self.out).map_err(|e| Error::io(&self.out, e))
    }

    fn log(&self, msg: impl AsRef<str>) {
        if self.verbose > 0 {
            eprintln!("sgmix: {}", msg.as_ref());
        }
    }

    fn in_pool<R: Send>(&self, f: impl FnOnce() -> Result<R> + Send) -> Result<R> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = self.threads {
            if n == 0 {
                return Err(Error::Config("--threads must be at least 1".into()));
            }
            b = b.num_threads(n);
        }
        let pool = b
            .build()
            .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
        pool.install(f)
    }

    fn manifest(&self, command: &str, config: Value, artifacts: &[&str], extra: Value) -> Result<()> {
        let mut m = json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": config,
            "artifacts": artifacts,
        });
        if let (Value::Object(map), Value::Object(add)) = (&mut m, extra) {
            map.extend(add);
        }
        if self.timing {
            m["wall_clock_secs"] = json!(self.start.elapsed().as_secs_f64());
        }
        write_json(&self.path("manifest.json"), &m)
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Numeric(format!("cannot serialise {}: {e}", path.display())))?;
    let mut w = create(path)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.write_all(b"\n"))
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

fn to_value(v: &impl Serialize) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Numeric(format!("cannot serialise config: {e}")))
}

/// Reads a TOML document, or JSON when the extension is `.json`.
pub fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if json {
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    } else {
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

fn override_iterations(c: &mut ConvergenceOptions, init: Option<usize>, max: Option<usize>) {
    if let Some(n) = init {
        c.initial_iterations = n;
        c.max_iterations = c.max_iterations.max(n);
    }
    if let Some(n) = max {
        c.max_iterations = n;
    }
}

fn cmd_fit(ctx: &Context, a: &FitArgs) -> Result<()> {
    let mut cfg: FitConfig = load_config(a.config.as_deref())?;
    if let Some(s) = ctx.seed {
        cfg.seed = s;
    }
    if let Some(p) = a.p {
        cfg.sampler.p = p;
    }
    if let Some(k) = a.kernel {
        cfg.kernel = k;
    }
    override_iterations(&mut cfg.convergence, a.iterations, a.max_iterations);
    cfg.validate()?;
    let data = read_regression_csv(&a.data)?;
    if data.dim() != 1 {
        return Err(Error::Unsupported(format!(
            "fit handles one covariate, {} has {}",
            a.data.display(),
            data.dim()
        )));
    }
    let x = data.points().to_vec();
    let model = GaussianRegression::new(data, cfg.prior.kernel(cfg.kernel))?;
    ctx.prepare()?;
    ctx.log(format!("fitting {} observations", x.len()));
    let mut rng = SimRng::seed_from(cfg.seed);
    let run = run_until_converged(&cfg.sampler, cfg.prior.prior()?, &model, &mut rng, &cfg.convergence)?;
    let fit = summarize_fit(&run, x, cfg.band_level)?;

    let mean_path = ctx.path("posterior_mean.csv");
    let mut w = create(&mean_path)?;
    let res = (|| -> std::io::Result<()> {
        writeln!(w, "x,mean")?;
        for (x, m) in fit.x.iter().zip(&fit.bands.mean) {
            writeln!(w, "{x},{m}")?;
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(&mean_path, e))?;
    write_curve_csv(&ctx.path("bands.csv"), &fit, None)?;
    write_trace_csv(&ctx.path("trace.csv"), &run.trace.records)?;
    ctx.manifest(
        "fit",
        to_value(&cfg)?,
        &["posterior_mean.csv", "bands.csv", "trace.csv", "manifest.json"],
        json!({
            "data": a.data.display().to_string(),
            "seed": cfg.seed,
            "diagnostics": run.report,
            "first_kept_record": run.first_kept,
            "snapshots_used": fit.snapshots_used,
            "mean_sigma2": fit.mean_sigma2,
        }),
    )
}

fn cmd_benchmark(ctx: &Context, a: &BenchmarkArgs) -> Result<()> {
    let mut cfg: BenchmarkConfig = load_config(a.config.as_deref())?;
    if !a.functions.is_empty() {
        cfg.functions = a.functions.clone();
    }
    let b = &mut cfg.benchmark;
    if let Some(s) = ctx.seed {
        b.seed = s;
    }
    if let Some(n) = a.n {
        b.n = n;
    }
    if let Some(r) = a.replications {
        b.replications = r;
    }
    if let Some(r) = a.rsnr {
        b.rsnr = r;
    }
    if let Some(k) = a.kernel {
        b.kernel = k;
    }
    if let Some(p) = a.p {
        b.sampler.p = p;
    }
    override_iterations(&mut b.convergence, a.iterations, a.max_iterations);
    let functions = cfg.resolve_functions()?;
    cfg.benchmark.validate()?;
    ctx.prepare()?;

    let mut reports = Vec::with_capacity(functions.len());
    for f in &functions {
        ctx.log(format!("benchmark {f}"));
        let spec = BenchmarkSpec {
            function: *f,
            ..cfg.benchmark.clone()
        };
        let report = run_benchmark(&spec)?;
        if a.dump_curves {
            for r in &report.replications {
                if let Some(fit) = &r.fit {
                    let name = format!("curves/{f}_rep{:03}.csv", r.index);
                    write_curve_csv(&ctx.path(&name), fit, Some(&report.f0))?;
                }
            }
        }
        reports.push(report);
    }
    write_report_csv(&ctx.path("report.csv"), &reports)?;
    write_report_json(&ctx.path("report.json"), &reports, ctx.timing)?;
    let failed: usize = reports.iter().map(|r| r.failed).sum();
    ctx.manifest(
        "benchmark",
        to_value(&cfg)?,
        &["report.csv", "report.json", "manifest.json"],
        json!({
            "seed": cfg.benchmark.seed,
            "threads": ctx.threads,
            "curves_dumped": a.dump_curves,
            "failed_replications": failed,
        }),
    )
}

fn cmd_ct(ctx: &Context, a: &CtArgs) -> Result<()> {
    let mut spec: CtSpec = load_config(a.config.as_deref())?;
    if a.full {
        spec.resolution = 256;
        spec.n_radii = 256;
        spec.n_angles = 128;
    }
    if let Some(s) = ctx.seed {
        spec.seed = s;
    }
    if let Some(v) = a.resolution {
        spec.resolution = v;
    }
    if let Some(v) = a.n_radii {
        spec.n_radii = v;
    }
    if let Some(v) = a.n_angles {
        spec.n_angles = v;
    }
    if let Some(v) = a.sigma2 {
        spec.sigma2 = v;
    }
    if let Some(p) = a.p {
        spec.sampler.p = p;
    }
    override_iterations(&mut spec.convergence, a.iterations, a.max_iterations);
    spec.validate()?;
    ctx.prepare()?;
    ctx.log(format!("ct reconstruction from {} observations", spec.n_obs()));
    let outcome = run_ct(&spec)?;
    write_pgm16(&ctx.path("reconstruction.pgm"), &outcome.reconstruction, 0.0, 2.0)?;
    write_image_csv(&ctx.path("reconstruction.csv"), &outcome.reconstruction)?;
    write_pgm16(&ctx.path("phantom.pgm"), &outcome.phantom, 0.0, 2.0)?;
    write_radon_csv(&ctx.path("sinogram.csv"), &outcome.data)?;
    write_json(&ctx.path("report.json"), &outcome.report)?;
    ctx.manifest(
        "ct",
        to_value(&spec)?,
        &[
            "reconstruction.pgm",
            "reconstruction.csv",
            "phantom.pgm",
            "sinogram.csv",
            "report.json",
            "manifest.json",
        ],
        json!({
            "seed": spec.seed,
            "n_obs": spec.n_obs(),
            "sigma2": spec.sigma2,
            "rmse": outcome.report.rmse,
            "zero_image_rmse": outcome.report.zero_rmse,
        }),
    )
}

/// Diagnostics of one trace column, as written by `diagnose`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseReport {
    pub column: String,
    pub records: usize,
    pub burn_in: crate::diagnostics::BurnInDecision,
    pub discarded_records: usize,
    pub ess: f64,
}

pub fn trace_column(records: &[TraceRecord], column: &str) -> Result<Vec<f64>> {
    let f: fn(&TraceRecord) -> f64 = match column {
        "loglik" => |r| r.loglik,
        "T" => |r| r.total_mass,
        "sigma2" => |r| r.sigma2,
        "alpha" => |r| r.alpha,
        "n_clusters" => |r| r.n_clusters as f64,
        other => {
            return Err(Error::Config(format!(
                "cannot diagnose column {other:?}; use loglik, T, sigma2, alpha or n_clusters"
            )))
        }
    };
    Ok(records.iter().map(f).collect())
}

pub fn diagnose_records(records: &[TraceRecord], column: &str) -> Result<DiagnoseReport> {
    let series = trace_column(records, column)?;
    let burn_in = burn_in_protocol(&series)?;
    let discarded = (burn_in.discard_fraction * series.len() as f64).floor() as usize;
    let ess = ess(&series[discarded..])?;
    Ok(DiagnoseReport {
        column: column.to_string(),
        records: series.len(),
        burn_in,
        discarded_records: discarded,
        ess,
    })
}

fn cmd_diagnose(ctx: &Context, a: &DiagnoseArgs) -> Result<()> {
    // validate the column before reading so usage errors come first
    trace_column(&[], &a.column)?;
    let records = read_trace_csv(&a.trace)?;
    let report = diagnose_records(&records, &a.column)?;
    ctx.prepare()?;
    write_json(&ctx.path("diagnostics.json"), &report)?;
    ctx.manifest(
        "diagnose",
        json!({ "trace": a.trace.display().to_string(), "column": a.column }),
        &["diagnostics.json", "manifest.json"],
        json!({}),
    )?;
    let text = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Numeric(format!("cannot serialise report: {e}")))?;
    println!("{text}");
    Ok(())
}
