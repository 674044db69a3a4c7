//! `cgpr`: analyze signals, simulate studies, run benchmarks and inspect kernels.
//!
//! Exit codes: 0 success, 1 output I/O failure, 2 bad input (usage, parse,
//! config), 3 ill-conditioned regression, 4 study aborted, 5 kernel
//! validation failure.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use cgpr_core::baselines::{analytic_representation, morlet_transform_with, WaveletParams};
use cgpr_core::cgpr::{posterior_mean_complex_with, ProblemConfig};
use cgpr_core::io;
use cgpr_core::kernels::{
    default_xi_grid, spectral_diagnostics, validate_kernel, ComplexKernel, KernelConfig,
};
use cgpr_core::par::{configure_threads, Exec};
use cgpr_core::signals::{extract_attrs, ComplexSeries, TimeGrid};
use cgpr_core::simulate::{add_white_noise, sample_study_params};
use cgpr_core::study::{run_study_with, write_binned_csv, write_results_csv, Method, StudyConfig};
use cgpr_core::Error;
use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use sha2::{Digest, Sha256};

#[derive(Parser, Debug)]
#[command(name = "cgpr", version, about = "Complex-valued GP regression for instantaneous signal attributes")]
struct Cli {
    /// Directory for output files (created if missing).
    #[arg(long, global = true, default_value = ".")]
    output_dir: PathBuf,

    /// Worker threads for benchmark trials; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate the complex signal and its attributes from a `t,value` CSV.
    Analyze {
        signal: PathBuf,
        #[arg(long, value_enum, default_value_t = AnalyzeMethod::Cgpr)]
        method: AnalyzeMethod,
        /// Problem config (cgpr, required) or wavelet parameters (optional).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output file name inside the output directory.
        #[arg(long, default_value = "analysis.csv")]
        output: String,
    },
    /// Write ground-truth CSVs for every trial of a study.
    Simulate {
        study: PathBuf,
        /// Overrides the seed in the study file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a study and write report.json, results.csv and binned.csv.
    Bench {
        study: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated method list, overriding the study file.
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        trim_frac: Option<f64>,
    },
    /// Spectral diagnostics and covariance validity checks for a kernel.
    InspectKernel {
        kernel: PathBuf,
        /// Validation grid size.
        #[arg(long, default_value_t = 64)]
        grid_n: usize,
        /// Validation grid spacing in seconds.
        #[arg(long, default_value_t = 0.01)]
        grid_dt: f64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum AnalyzeMethod {
    Cgpr,
    Hilbert,
    Wavelet,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Failure { code: 2, msg: msg.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.msg)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Conditioning { .. } => 3,
            Error::StudyAborted { .. } => 4,
            Error::Io(_) => 1,
            _ => 2,
        };
        Failure { code, msg: e.to_string() }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn require_file(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::usage(format!("{}: no such file", path.display())))
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn output_path(dir: &Path, name: &str) -> CliResult<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Failure {
        code: 1,
        msg: format!("{}: {e}", dir.display()),
    })?;
    Ok(dir.join(name))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| Failure {
        code: 1,
        msg: format!("{}: {e}", path.display()),
    })
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn analyze(out: &Path, signal: &Path, method: AnalyzeMethod, config: Option<&Path>, output: &str) -> CliResult<()> {
    require_file(signal)?;
    if let Some(c) = config {
        require_file(c)?;
    }
    let s = io::read_real_series(io::open(signal)?)?;
    let z: ComplexSeries = match method {
        AnalyzeMethod::Cgpr => {
            let path = config.ok_or_else(|| Failure::usage("--method cgpr requires --config"))?;
            let cfg: ProblemConfig = read_json(path)?;
            let result = posterior_mean_complex_with(Exec::Sequential, &cfg.problem(s, None)?)?;
            log::info!(
                "solve: jitter {:.3e}, {} attempt(s), condition ~{:.3e}",
                result.diagnostics.jitter,
                result.diagnostics.attempts,
                result.diagnostics.condition_estimate
            );
            result.mean
        }
        AnalyzeMethod::Hilbert => analytic_representation(&s)?,
        AnalyzeMethod::Wavelet => {
            let p = match config {
                Some(path) => read_json::<WaveletParams>(path)?,
                None => WaveletParams::new(2.0 * std::f64::consts::PI * 2.0, 0.2)?,
            };
            p.validate()?;
            let raw = morlet_transform_with(Exec::Sequential, &s, &p)?;
            let k = p.amplitude_scale();
            ComplexSeries::new(raw.grid().clone(), raw.values().iter().map(|v| v * k).collect())?
        }
    };
    let attrs = extract_attrs(&z);
    let path = output_path(out, output)?;
    io::write_analysis(io::create(&path)?, &z, &attrs)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn load_study(path: &Path, seed: Option<u64>) -> CliResult<StudyConfig> {
    require_file(path)?;
    let mut cfg: StudyConfig = read_json(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn simulate(out: &Path, study: &Path, seed: Option<u64>) -> CliResult<()> {
    let cfg = load_study(study, seed)?;
    cfg.validate()?;
    if cfg.n == 0 {
        log::info!("empty study, nothing written");
        return Ok(());
    }
    let grid: TimeGrid = cfg.grid.to_grid()?;
    let specs = sample_study_params(cfg.study, cfg.n, cfg.seed);
    for (i, spec) in specs.iter().enumerate() {
        let truth = spec.generate(&grid)?;
        io::write_ground_truth(io::create(&output_path(out, &format!("truth_{i:04}.csv"))?)?, &truth)?;
        if cfg.noise_sd > 0.0 {
            let obs = add_white_noise(&truth.signal, cfg.noise_sd, cfg.seed.wrapping_add(i as u64))?;
            io::write_real_series(io::create(&output_path(out, &format!("observed_{i:04}.csv"))?)?, &obs)?;
        }
    }
    let text = serde_json::to_string_pretty(&specs).map_err(Error::from)? + "\n";
    write_text(&output_path(out, "trials.json")?, &text)
}

fn bench(
    out: &Path,
    jobs: usize,
    study: &Path,
    seed: Option<u64>,
    method: Option<&str>,
    trim_frac: Option<f64>,
) -> CliResult<()> {
    let mut cfg = load_study(study, seed)?;
    if let Some(list) = method {
        let methods = list
            .split(',')
            .map(|m| Method::from_str(m.trim()))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Failure::usage(e.to_string()))?;
        cfg.methods = Some(methods);
    }
    if let Some(t) = trim_frac {
        cfg.trim_frac = t;
    }
    cfg.validate()?;
    let exec = if jobs == 1 {
        Exec::Sequential
    } else {
        if jobs > 1 && !configure_threads(jobs) {
            log::warn!("thread pool already initialized; --jobs ignored");
        }
        Exec::Parallel
    };
    let canonical = serde_json::to_string(&cfg).map_err(Error::from)?;
    let mut report = run_study_with(exec, &cfg)?;
    report.config_hash = Some(sha256_hex(canonical.as_bytes()));
    write_text(&output_path(out, "report.json")?, &report.to_json()?)?;
    write_results_csv(io::create(&output_path(out, "results.csv")?)?, &report)?;
    write_binned_csv(io::create(&output_path(out, "binned.csv")?)?, &report, cfg.n_bins)?;
    for s in &report.summaries {
        println!(
            "{:<14} median MAD amplitude {:.4e}  frequency {:.4e} rad/s",
            s.method.name(),
            s.median_mad_amp,
            s.median_mad_freq
        );
    }
    if !report.failures.is_empty() {
        log::warn!("{} of {} trials failed", report.failures.len(), cfg.n);
    }
    Ok(())
}

fn inspect_kernel(out: &Path, kernel: &Path, grid_n: usize, grid_dt: f64, tol: f64) -> CliResult<()> {
    require_file(kernel)?;
    let cfg: KernelConfig = read_json(kernel)?;
    let k = ComplexKernel::from_config(cfg)?;
    let diag = spectral_diagnostics(&k, &default_xi_grid(&k))?;
    io::write_diagnostics(io::create(&output_path(out, "diagnostics.csv")?)?, &diag)?;
    let grid = TimeGrid::uniform(0.0, grid_dt, grid_n)?;
    let report = validate_kernel(&k, &grid, tol)?;
    let json = serde_json::to_string_pretty(&report).map_err(Error::from)? + "\n";
    write_text(&output_path(out, "validation.json")?, &json)?;
    println!("{:<22} {:>12}  status", "check", "value");
    for (name, value, ok) in report.rows() {
        println!("{name:<22} {value:>12.3e}  {}", if ok { "ok" } else { "FAIL" });
    }
    if report.passes {
        println!("validation passed (tol {tol:.1e})");
        Ok(())
    } else {
        Err(Failure {
            code: 5,
            msg: format!("kernel validation failed (tol {tol:.1e})"),
        })
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let out = cli.output_dir.as_path();
    match &cli.command {
        Command::Analyze { signal, method, config, output } => {
            analyze(out, signal, *method, config.as_deref(), output)
        }
        Command::Simulate { study, seed } => simulate(out, study, *seed),
        Command::Bench { study, seed, method, trim_frac } => {
            bench(out, cli.jobs, study, *seed, method.as_deref(), *trim_frac)
        }
        Command::InspectKernel { kernel, grid_n, grid_dt, tol } => {
            inspect_kernel(out, kernel, *grid_n, *grid_dt, *tol)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CGPR_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
