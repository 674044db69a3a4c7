//! Comparative simulation studies: generate ground truth, run each method,
//! score amplitude and frequency errors, and test paired differences.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{analytic_representation, morlet_transform_with, WaveletParams};
use crate::cgpr::{NoiseModel, PosteriorOperator};
use crate::error::{Error, Result};
use crate::kernels::ComplexKernel;
use crate::par::{map_indices, Exec};
use crate::signals::{extract_attrs, ComplexSeries, SampledSignal, TimeGrid};
use crate::simulate::{add_white_noise, sample_study_params, GridSpec, StudyKind, TrialSpec};
use crate::stats::{mad, median, wilcoxon_signed_rank, WILCOXON_MIN_N};

/// Relative jitter for CGPR factorizations inside studies.
const STUDY_JITTER: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "cgpr-periodic")]
    CgprPeriodic,
    #[serde(rename = "cgpr-harmonic")]
    CgprHarmonic,
    #[serde(rename = "analytic")]
    Analytic,
    #[serde(rename = "wavelet")]
    Wavelet,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::CgprPeriodic,
        Method::CgprHarmonic,
        Method::Analytic,
        Method::Wavelet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::CgprPeriodic => "cgpr-periodic",
            Method::CgprHarmonic => "cgpr-harmonic",
            Method::Analytic => "analytic",
            Method::Wavelet => "wavelet",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let valid: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
                Error::InvalidParameter(format!(
                    "unknown method {s:?}; valid methods: {}",
                    valid.join(", ")
                ))
            })
    }
}

/// Periodic quasi-quadrature CGPR with white noise `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodicParams {
    pub omega0: f64,
    pub rho: f64,
    pub mu: f64,
    pub lambda: f64,
}

/// Harmonic quasi-quadrature CGPR with white noise `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicParams {
    pub omega0: f64,
    pub mu: f64,
    pub lambda: f64,
}

/// Optional per-method overrides.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodParams {
    #[serde(rename = "cgpr-periodic", default, skip_serializing_if = "Option::is_none")]
    pub cgpr_periodic: Option<PeriodicParams>,
    #[serde(rename = "cgpr-harmonic", default, skip_serializing_if = "Option::is_none")]
    pub cgpr_harmonic: Option<HarmonicParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavelet: Option<WaveletParams>,
}

/// Parameters actually used, after defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolvedParams {
    #[serde(rename = "cgpr-periodic")]
    pub cgpr_periodic: PeriodicParams,
    #[serde(rename = "cgpr-harmonic")]
    pub cgpr_harmonic: HarmonicParams,
    pub wavelet: WaveletParams,
}

fn default_bins() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub study: StudyKind,
    pub n: usize,
    pub seed: u64,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub methods: Option<Vec<Method>>,
    /// Standard deviation of added white noise; 0 for noise-free studies.
    #[serde(default)]
    pub noise_sd: f64,
    /// Fraction of points excluded from the error at each end.
    #[serde(default)]
    pub trim_frac: f64,
    #[serde(default)]
    pub params: MethodParams,
    /// Number of initial-frequency bins in the binned summary.
    #[serde(default = "default_bins")]
    pub n_bins: usize,
}

impl StudyConfig {
    /// A config with all defaults for `study`.
    pub fn new(study: StudyKind, n: usize, seed: u64) -> Self {
        Self {
            study,
            n,
            seed,
            grid: GridSpec::default(),
            methods: None,
            noise_sd: 0.0,
            trim_frac: 0.0,
            params: MethodParams::default(),
            n_bins: default_bins(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return bad(format!("noise_sd must be >= 0, got {}", self.noise_sd));
        }
        if !(0.0..0.5).contains(&self.trim_frac) {
            return bad(format!("trim_frac must lie in [0, 0.5), got {}", self.trim_frac));
        }
        if self.n_bins == 0 {
            return bad("n_bins must be positive".into());
        }
        let methods = self.resolved_methods();
        if methods.is_empty() {
            return bad("at least one method is required".into());
        }
        for (i, m) in methods.iter().enumerate() {
            if methods[..i].contains(m) {
                return bad(format!("method {m} listed twice"));
            }
        }
        self.grid.to_grid()?;
        let p = self.resolved_params();
        for (name, v) in [
            ("cgpr-periodic.lambda", p.cgpr_periodic.lambda),
            ("cgpr-harmonic.lambda", p.cgpr_harmonic.lambda),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        p.wavelet.validate()
    }

    /// Configured methods, or the study's default set.
    pub fn resolved_methods(&self) -> Vec<Method> {
        match &self.methods {
            Some(m) => m.clone(),
            None if self.noise_sd > 0.0 => {
                vec![Method::CgprPeriodic, Method::CgprHarmonic, Method::Wavelet]
            }
            None => vec![Method::CgprPeriodic, Method::Analytic, Method::Wavelet],
        }
    }

    /// Method parameters with study-dependent defaults filled in.
    pub fn resolved_params(&self) -> ResolvedParams {
        let lambda = if self.noise_sd > 0.0 {
            0.8
        } else {
            match self.study {
                StudyKind::Chirplet => 1e-6,
                StudyKind::StochOsc => 1e-4,
            }
        };
        ResolvedParams {
            cgpr_periodic: self.params.cgpr_periodic.unwrap_or(PeriodicParams {
                omega0: 2.0 * PI * 0.5,
                rho: 0.1,
                mu: 0.3,
                lambda,
            }),
            cgpr_harmonic: self.params.cgpr_harmonic.unwrap_or(HarmonicParams {
                omega0: 2.0 * PI * 2.0,
                mu: 0.2,
                lambda,
            }),
            wavelet: self.params.wavelet.unwrap_or(WaveletParams {
                omega0: 2.0 * PI * 2.0,
                mu: 0.2,
            }),
        }
    }
}

/// A method ready to run on signals sampled on a fixed grid.
pub enum Estimator {
    Cgpr(Box<PosteriorOperator>),
    Analytic,
    /// Output rescaled so a unit cosine at the center frequency has unit modulus.
    Wavelet(WaveletParams),
}

impl Estimator {
    pub fn prepare(exec: Exec, method: Method, params: &ResolvedParams, grid: &TimeGrid) -> Result<Self> {
        let cgpr = |kernel: ComplexKernel, lambda: f64| -> Result<Self> {
            let noise = NoiseModel::white(lambda)?;
            let op = PosteriorOperator::new(exec, &kernel, &noise, grid, None, STUDY_JITTER)?;
            Ok(Estimator::Cgpr(Box::new(op)))
        };
        match method {
            Method::CgprPeriodic => {
                let p = params.cgpr_periodic;
                cgpr(ComplexKernel::periodic(p.omega0, p.rho, p.mu)?, p.lambda)
            }
            Method::CgprHarmonic => {
                let p = params.cgpr_harmonic;
                cgpr(ComplexKernel::harmonic(p.omega0, p.mu)?, p.lambda)
            }
            Method::Analytic => Ok(Estimator::Analytic),
            Method::Wavelet => {
                params.wavelet.validate()?;
                Ok(Estimator::Wavelet(params.wavelet))
            }
        }
    }

    pub fn estimate(&self, exec: Exec, s: &SampledSignal) -> Result<ComplexSeries> {
        match self {
            Estimator::Cgpr(op) => ComplexSeries::new(op.targets().clone(), op.apply(s.values())?),
            Estimator::Analytic => analytic_representation(s),
            Estimator::Wavelet(p) => {
                let raw = morlet_transform_with(exec, s, p)?;
                let k = p.amplitude_scale();
                ComplexSeries::new(
                    raw.grid().clone(),
                    raw.values().iter().map(|z| z * k).collect(),
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub trial: usize,
    pub method: Method,
    pub mad_amp: f64,
    /// rad/s
    pub mad_freq: f64,
    pub mad_freq_hz: f64,
    /// True frequency at the first sample (rad/s).
    pub initial_freq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialFailure {
    pub trial: usize,
    pub error: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Amplitude,
    Frequency,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseTest {
    pub method_a: Method,
    pub method_b: Method,
    pub metric: Metric,
    /// Paired trials.
    pub n: usize,
    pub median_a: f64,
    pub median_b: f64,
    /// `min(W+, W−)`; null when too few nonzero differences.
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    pub median_mad_amp: f64,
    pub median_mad_freq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub resolved_params: ResolvedParams,
    pub methods: Vec<Method>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    pub n_trials: usize,
    pub failures: Vec<TrialFailure>,
    pub summaries: Vec<MethodSummary>,
    pub pairwise_tests: Vec<PairwiseTest>,
    pub trials: Vec<TrialResult>,
}

impl StudyReport {
    pub fn summary(&self, method: Method) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }

    /// The test comparing `a` and `b` on `metric`, in either order.
    pub fn test(&self, a: Method, b: Method, metric: Metric) -> Option<&PairwiseTest> {
        self.pairwise_tests.iter().find(|t| {
            t.metric == metric
                && ((t.method_a == a && t.method_b == b) || (t.method_a == b && t.method_b == a))
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

fn score(
    exec: Exec,
    est: &Estimator,
    observed: &SampledSignal,
    truth_amp: &[f64],
    truth_freq: &[f64],
    trim: usize,
) -> Result<(f64, f64)> {
    let z = est.estimate(exec, observed)?;
    let attrs = extract_attrs(&z);
    let n = truth_amp.len();
    let mask: Vec<bool> = (0..n)
        .map(|j| j >= trim && j + trim < n && !attrs.flagged[j])
        .collect();
    let a = mad(&attrs.amplitude, truth_amp, Some(&mask))?;
    let f = mad(&attrs.frequency, truth_freq, Some(&mask))?;
    if !(a.is_finite() && f.is_finite()) {
        return Err(Error::InvalidParameter("non-finite error metric".into()));
    }
    Ok((a, f))
}

fn run_trial(
    exec: Exec,
    config: &StudyConfig,
    grid: &TimeGrid,
    trial: usize,
    spec: &TrialSpec,
    estimators: &[(Method, Estimator)],
) -> Result<Vec<TrialResult>> {
    let truth = spec.generate(grid)?;
    let observed = add_white_noise(&truth.signal, config.noise_sd, config.seed.wrapping_add(trial as u64))?;
    let trim = (config.trim_frac * grid.len() as f64).floor() as usize;
    estimators
        .iter()
        .map(|(method, est)| {
            let (a, f) = score(exec, est, &observed, &truth.amplitude, &truth.frequency, trim)
                .map_err(|e| Error::InvalidParameter(format!("{method}: {e}")))?;
            Ok(TrialResult {
                trial,
                method: *method,
                mad_amp: a,
                mad_freq: f,
                mad_freq_hz: f / (2.0 * PI),
                initial_freq: truth.frequency[0],
            })
        })
        .collect()
}

pub fn run_study(config: &StudyConfig) -> Result<StudyReport> {
    run_study_with(Exec::default(), config)
}

/// Run a study. Trials are distributed according to `exec`; the report is
/// identical either way.
pub fn run_study_with(exec: Exec, config: &StudyConfig) -> Result<StudyReport> {
    config.validate()?;
    let grid = config.grid.to_grid()?;
    let methods = config.resolved_methods();
    let params = config.resolved_params();
    let estimators: Vec<(Method, Estimator)> = methods
        .iter()
        .map(|&m| Ok((m, Estimator::prepare(exec, m, &params, &grid)?)))
        .collect::<Result<_>>()?;
    let specs = sample_study_params(config.study, config.n, config.seed);
    log::info!(
        "running {:?} study: {} trials, methods {:?}",
        config.study,
        config.n,
        methods.iter().map(|m| m.name()).collect::<Vec<_>>()
    );
    let outcomes = map_indices(exec, specs.len(), |i| {
        run_trial(Exec::Sequential, config, &grid, i, &specs[i], &estimators)
    });

    let mut trials = Vec::new();
    let mut failures = Vec::new();
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(r) => trials.extend(r),
            Err(e) => {
                log::warn!("trial {i} failed: {e}");
                failures.push(TrialFailure {
                    trial: i,
                    error: e.to_string(),
                });
            }
        }
    }
    if failures.len() * 10 > config.n {
        return Err(Error::StudyAborted {
            failed: failures.len(),
            total: config.n,
            first: failures[0].error.clone(),
        });
    }

    let column = |m: Method, metric: Metric| -> Vec<f64> {
        trials
            .iter()
            .filter(|t| t.method == m)
            .map(|t| match metric {
                Metric::Amplitude => t.mad_amp,
                Metric::Frequency => t.mad_freq,
            })
            .collect()
    };
    let summaries = methods
        .iter()
        .filter(|_| !trials.is_empty())
        .map(|&m| MethodSummary {
            method: m,
            median_mad_amp: median(&column(m, Metric::Amplitude)).unwrap_or(f64::NAN),
            median_mad_freq: median(&column(m, Metric::Frequency)).unwrap_or(f64::NAN),
        })
        .collect();

    let mut pairwise_tests = Vec::new();
    for metric in [Metric::Amplitude, Metric::Frequency] {
        for (i, &a) in methods.iter().enumerate() {
            for &b in &methods[i + 1..] {
                let xa = column(a, metric);
                let xb = column(b, metric);
                let diffs: Vec<f64> = xa.iter().zip(&xb).map(|(x, y)| x - y).collect();
                let nonzero = diffs.iter().filter(|d| **d != 0.0).count();
                let test = if nonzero >= WILCOXON_MIN_N {
                    Some(wilcoxon_signed_rank(&diffs)?)
                } else {
                    None
                };
                pairwise_tests.push(PairwiseTest {
                    method_a: a,
                    method_b: b,
                    metric,
                    n: diffs.len(),
                    median_a: median(&xa).unwrap_or(f64::NAN),
                    median_b: median(&xb).unwrap_or(f64::NAN),
                    statistic: test.map(|t| t.statistic),
                    p_value: test.map(|t| t.p_value),
                });
            }
        }
    }

    Ok(StudyReport {
        config: config.clone(),
        resolved_params: params,
        methods,
        seed: config.seed,
        config_hash: None,
        n_trials: config.n,
        failures,
        summaries,
        pairwise_tests,
        trials,
    })
}

/// `trial,method,mad_amp,mad_freq`
pub fn write_results_csv<W: Write>(writer: W, report: &StudyReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["trial", "method", "mad_amp", "mad_freq"])?;
    for t in &report.trials {
        w.write_record([
            t.trial.to_string(),
            t.method.name().to_string(),
            t.mad_amp.to_string(),
            t.mad_freq.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row of the initial-frequency binned summary.
#[derive(Debug, Clone, PartialEq)]
pub struct BinRow {
    pub lo_hz: f64,
    pub hi_hz: f64,
    pub method: Method,
    pub count: usize,
    pub median_mad_amp: f64,
    pub median_mad_freq: f64,
}

/// Medians per method in equal-width bins of the true initial frequency.
pub fn binned_summary(report: &StudyReport, n_bins: usize) -> Vec<BinRow> {
    if report.trials.is_empty() || n_bins == 0 {
        return Vec::new();
    }
    let hz: Vec<f64> = report.trials.iter().map(|t| t.initial_freq / (2.0 * PI)).collect();
    let lo = hz.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = hz.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / n_bins as f64 } else { 1.0 };
    let bin_of = |f: f64| (((f - lo) / width).floor() as usize).min(n_bins - 1);
    let mut rows = Vec::new();
    for b in 0..n_bins {
        for &m in &report.methods {
            let members: Vec<&TrialResult> = report
                .trials
                .iter()
                .zip(&hz)
                .filter(|(t, &f)| t.method == m && bin_of(f) == b)
                .map(|(t, _)| t)
                .collect();
            let amp: Vec<f64> = members.iter().map(|t| t.mad_amp).collect();
            let freq: Vec<f64> = members.iter().map(|t| t.mad_freq).collect();
            rows.push(BinRow {
                lo_hz: lo + b as f64 * width,
                hi_hz: lo + (b + 1) as f64 * width,
                method: m,
                count: members.len(),
                median_mad_amp: median(&amp).unwrap_or(f64::NAN),
                median_mad_freq: median(&freq).unwrap_or(f64::NAN),
            });
        }
    }
    rows
}

/// `bin_lo_hz,bin_hi_hz,method,count,median_mad_amp,median_mad_freq`
pub fn write_binned_csv<W: Write>(writer: W, report: &StudyReport, n_bins: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "bin_lo_hz",
        "bin_hi_hz",
        "method",
        "count",
        "median_mad_amp",
        "median_mad_freq",
    ])?;
    for r in binned_summary(report, n_bins) {
        w.write_record([
            r.lo_hz.to_string(),
            r.hi_hz.to_string(),
            r.method.name().to_string(),
            r.count.to_string(),
            r.median_mad_amp.to_string(),
            r.median_mad_freq.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
