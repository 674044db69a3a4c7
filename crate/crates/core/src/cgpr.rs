//! Complex-valued GP regression: the posterior expectation of a complex
//! process `ζ` whose real part generated the observations.
//!
//! With a Hermitian prior covariance `K_ζ`, the real part has covariance
//! `ℜK_ζ` and the cross-covariance of `ζ` with its real part is `K_ζ`, so
//!
//! ```text
//! m_{ζ|s} = K_ζ (ℜK_ζ + Q)⁻¹ s
//! ```
//!
//! The matrix being inverted is real and symmetric positive definite and is
//! factorized once per problem; the result is a fixed linear map of `s`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{gram_with, real_gram_with, ComplexKernel, KernelConfig};
use crate::par::Exec;
use crate::signals::{ComplexSeries, SampledSignal, TimeGrid};

/// Number of ×10 jitter escalations after the first factorization attempt.
pub const MAX_JITTER_ESCALATIONS: usize = 3;

/// One additive component of the observation-noise covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseTerm {
    /// `σ²·δ_jk`
    White { sigma2: f64 },
    /// Ornstein-Uhlenbeck `ν²·exp(−b|t_j − t_k|)`
    Ou { nu2: f64, b: f64 },
}

/// Sum of noise terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<NoiseTerm>", into = "Vec<NoiseTerm>")]
pub struct NoiseModel {
    terms: Vec<NoiseTerm>,
}

impl TryFrom<Vec<NoiseTerm>> for NoiseModel {
    type Error = Error;

    fn try_from(terms: Vec<NoiseTerm>) -> Result<Self> {
        Self::new(terms)
    }
}

impl From<NoiseModel> for Vec<NoiseTerm> {
    fn from(n: NoiseModel) -> Self {
        n.terms
    }
}

impl NoiseModel {
    pub fn new(terms: Vec<NoiseTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidParameter("noise model needs at least one term".into()));
        }
        for t in &terms {
            let ok = match *t {
                NoiseTerm::White { sigma2 } => sigma2 >= 0.0 && sigma2.is_finite(),
                NoiseTerm::Ou { nu2, b } => {
                    nu2 >= 0.0 && nu2.is_finite() && b > 0.0 && b.is_finite()
                }
            };
            if !ok {
                return Err(Error::InvalidParameter(format!("invalid noise term {t:?}")));
            }
        }
        let model = Self { terms };
        if !(model.zero_lag_variance() > 0.0) {
            return Err(Error::InvalidParameter(
                "noise model must have positive variance at zero lag".into(),
            ));
        }
        Ok(model)
    }

    /// White noise of variance `sigma2`.
    pub fn white(sigma2: f64) -> Result<Self> {
        Self::new(vec![NoiseTerm::White { sigma2 }])
    }

    pub fn terms(&self) -> &[NoiseTerm] {
        &self.terms
    }

    pub fn zero_lag_variance(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| match *t {
                NoiseTerm::White { sigma2 } => sigma2,
                NoiseTerm::Ou { nu2, .. } => nu2,
            })
            .sum()
    }

    /// Covariance between two sample times; white terms count only when
    /// `same_sample` is set.
    fn cov(&self, dt: f64, same_sample: bool) -> f64 {
        self.terms
            .iter()
            .map(|t| match *t {
                NoiseTerm::White { sigma2 } if same_sample => sigma2,
                NoiseTerm::White { .. } => 0.0,
                NoiseTerm::Ou { nu2, b } => nu2 * (-b * dt.abs()).exp(),
            })
            .sum()
    }
}

/// Noise covariance `Q` on sample times.
pub fn build_noise_cov(noise: &NoiseModel, times: &[f64]) -> DMatrix<f64> {
    let n = times.len();
    DMatrix::from_fn(n, n, |j, k| noise.cov(times[j] - times[k], j == k))
}

/// How the factorization of `ℜK + Q` went.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveDiagnostics {
    /// Absolute diagonal jitter that was finally added.
    pub jitter: f64,
    /// Factorization attempts, including the successful one.
    pub attempts: usize,
    /// `(max L_ii / min L_ii)²`, a cheap lower bound on the condition number.
    pub condition_estimate: f64,
}

/// Cholesky factorization with diagonal jitter escalation.
///
/// Starts at `rel_jitter·mean(diag)`; on failure multiplies by 10 up to
/// [`MAX_JITTER_ESCALATIONS`] times. A zero starting jitter first tries the
/// bare matrix and then escalates from `1e-12·mean(diag)`.
pub fn factorize(
    a: DMatrix<f64>,
    rel_jitter: f64,
) -> Result<(Cholesky<f64, Dyn>, SolveDiagnostics)> {
    if !(rel_jitter >= 0.0) || !rel_jitter.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "jitter must be non-negative, got {rel_jitter}"
        )));
    }
    let n = a.nrows();
    let mean_diag = a.diagonal().mean().abs().max(f64::MIN_POSITIVE);
    let mut steps = Vec::with_capacity(MAX_JITTER_ESCALATIONS + 2);
    let mut j = rel_jitter * mean_diag;
    if j == 0.0 {
        steps.push(0.0);
        j = 1e-12 * mean_diag;
    }
    for _ in 0..=MAX_JITTER_ESCALATIONS {
        steps.push(j);
        j *= 10.0;
    }
    let mut last = 0.0;
    for (attempt, &jit) in steps.iter().enumerate() {
        last = jit;
        let mut m = a.clone();
        for i in 0..n {
            m[(i, i)] += jit;
        }
        if let Some(ch) = Cholesky::new(m) {
            let d = ch.l_dirty().diagonal();
            let (lo, hi) = d
                .iter()
                .fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
            if attempt > 0 {
                log::debug!("factorization succeeded with jitter {jit:e} after {attempt} retries");
            }
            return Ok((
                ch,
                SolveDiagnostics {
                    jitter: jit,
                    attempts: attempt + 1,
                    condition_estimate: (hi / lo).powi(2),
                },
            ));
        }
    }
    Err(Error::Conditioning {
        attempts: steps.len(),
        jitter: last,
    })
}

/// Real GP posterior mean `K×(K + Q)⁻¹ s` on `targets`.
///
/// Works on raw time slices so that single-sample problems are expressible.
pub fn posterior_mean_real<F>(
    kernel: F,
    noise: &NoiseModel,
    times: &[f64],
    values: &[f64],
    targets: &[f64],
    rel_jitter: f64,
) -> Result<Vec<f64>>
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    if times.is_empty() {
        return Err(Error::InsufficientData("no samples".into()));
    }
    if values.len() != times.len() {
        return Err(Error::LengthMismatch {
            expected: times.len(),
            got: values.len(),
        });
    }
    let exec = Exec::default();
    let a = real_gram_with(exec, &kernel, times, times) + build_noise_cov(noise, times);
    let (ch, _) = factorize(a, rel_jitter)?;
    let alpha = ch.solve(&DVector::from_column_slice(values));
    let cross = real_gram_with(exec, &kernel, targets, times);
    Ok((cross * alpha).as_slice().to_vec())
}

/// A complex regression problem.
#[derive(Debug, Clone)]
pub struct RegressionProblem {
    pub kernel: ComplexKernel,
    pub noise: NoiseModel,
    pub signal: SampledSignal,
    /// Defaults to the sample grid.
    pub targets: Option<TimeGrid>,
    pub jitter: f64,
}

#[derive(Debug, Clone)]
pub struct PosteriorResult {
    pub mean: ComplexSeries,
    pub diagnostics: SolveDiagnostics,
}

/// The linear map `s ↦ K×_ζ (ℜK_ζ + Q)⁻¹ s` for a fixed kernel, noise model
/// and pair of grids.
pub struct PosteriorOperator {
    cross: DMatrix<Complex64>,
    chol: Cholesky<f64, Dyn>,
    targets: TimeGrid,
    n_samples: usize,
    diagnostics: SolveDiagnostics,
}

impl PosteriorOperator {
    pub fn new(
        exec: Exec,
        kernel: &ComplexKernel,
        noise: &NoiseModel,
        samples: &TimeGrid,
        targets: Option<&TimeGrid>,
        rel_jitter: f64,
    ) -> Result<Self> {
        let t = samples.points();
        let k_ss = gram_with(exec, kernel, t, t)?;
        let a = k_ss.map(|z| z.re) + build_noise_cov(noise, t);
        let (chol, diagnostics) = factorize(a, rel_jitter)?;
        let (cross, targets) = match targets {
            Some(g) if g.points() != t => (gram_with(exec, kernel, g.points(), t)?, g.clone()),
            _ => (k_ss, samples.clone()),
        };
        Ok(Self {
            cross,
            chol,
            targets,
            n_samples: t.len(),
            diagnostics,
        })
    }

    pub fn diagnostics(&self) -> SolveDiagnostics {
        self.diagnostics
    }

    pub fn targets(&self) -> &TimeGrid {
        &self.targets
    }

    /// Posterior mean on the targets for observations `values`.
    pub fn apply(&self, values: &[f64]) -> Result<Vec<Complex64>> {
        if values.len() != self.n_samples {
            return Err(Error::LengthMismatch {
                expected: self.n_samples,
                got: values.len(),
            });
        }
        let alpha = self.chol.solve(&DVector::from_column_slice(values));
        let alpha = alpha.map(|x| Complex64::new(x, 0.0));
        let m = &self.cross * alpha;
        if let Some(i) = m.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite(i));
        }
        Ok(m.as_slice().to_vec())
    }
}

/// Posterior expectation of the complex signal given its real part.
pub fn posterior_mean_complex(problem: &RegressionProblem) -> Result<PosteriorResult> {
    posterior_mean_complex_with(Exec::default(), problem)
}

pub fn posterior_mean_complex_with(
    exec: Exec,
    problem: &RegressionProblem,
) -> Result<PosteriorResult> {
    let op = PosteriorOperator::new(
        exec,
        &problem.kernel,
        &problem.noise,
        problem.signal.grid(),
        problem.targets.as_ref(),
        problem.jitter,
    )?;
    let values = op.apply(problem.signal.values())?;
    Ok(PosteriorResult {
        mean: ComplexSeries::new(op.targets.clone(), values)?,
        diagnostics: op.diagnostics,
    })
}

fn default_jitter() -> f64 {
    1e-10
}

/// JSON problem configuration: kernel, noise terms and jitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub kernel: KernelConfig,
    pub noise: NoiseModel,
    #[serde(default = "default_jitter")]
    pub jitter: f64,
}

impl ProblemConfig {
    pub fn problem(&self, signal: SampledSignal, targets: Option<TimeGrid>) -> Result<RegressionProblem> {
        Ok(RegressionProblem {
            kernel: ComplexKernel::from_config(self.kernel)?,
            noise: self.noise.clone(),
            signal,
            targets,
            jitter: self.jitter,
        })
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use proptest::prelude::*;

    use super::*;
    use crate::kernels::RealKernelSpec;

    fn grid(n: usize, dt: f64) -> TimeGrid {
        TimeGrid::uniform(0.0, dt, n).unwrap()
    }

    fn test_signal(g: &TimeGrid) -> SampledSignal {
        let v = g
            .points()
            .iter()
            .map(|&t| (2.0 * PI * 2.0 * t).cos() * (1.0 + 0.3 * t) + 0.2 * (7.0 * t).sin())
            .collect();
        SampledSignal::new(g.clone(), v).unwrap()
    }

    fn harmonic_problem(signal: SampledSignal, sigma2: f64) -> RegressionProblem {
        RegressionProblem {
            kernel: ComplexKernel::harmonic(2.0 * PI * 2.0, 0.2).unwrap(),
            noise: NoiseModel::white(sigma2).unwrap(),
            signal,
            targets: None,
            jitter: 1e-10,
        }
    }

    #[test]
    fn noise_covariance_examples() {
        let q = build_noise_cov(&NoiseModel::white(0.25).unwrap(), &[0.0, 0.1, 0.5]);
        assert_eq!(q, DMatrix::identity(3, 3) * 0.25);

        let ou = NoiseModel::new(vec![NoiseTerm::Ou { nu2: 1.0, b: 1.0 }]).unwrap();
        let q = build_noise_cov(&ou, &[0.0, 1.0]);
        let e = (-1.0f64).exp();
        assert_eq!(q, DMatrix::from_row_slice(2, 2, &[1.0, e, e, 1.0]));

        let meg = NoiseModel::new(vec![
            NoiseTerm::White { sigma2: 0.25 },
            NoiseTerm::Ou { nu2: 1.0, b: 1.0 },
        ])
        .unwrap();
        let q = build_noise_cov(&meg, &[0.0, 0.3, 0.9, 2.0]);
        assert!(q.diagonal().iter().all(|&d| d == 1.25));
        assert_eq!(q, q.transpose());
    }

    #[test]
    fn noise_model_validation() {
        assert!(NoiseModel::new(vec![]).is_err());
        assert!(NoiseModel::white(0.0).is_err());
        assert!(NoiseModel::white(-1.0).is_err());
        assert!(NoiseModel::new(vec![NoiseTerm::Ou { nu2: 1.0, b: 0.0 }]).is_err());
        let json = r#"[{"kind":"white","sigma2":0.25},{"kind":"ou","nu2":1.0,"b":1.0}]"#;
        let n: NoiseModel = serde_json::from_str(json).unwrap();
        assert_eq!(n.terms().len(), 2);
        assert_eq!(serde_json::to_string(&n).unwrap(), json.replace(' ', ""));
        assert!(serde_json::from_str::<NoiseModel>("[]").is_err());
        assert!(serde_json::from_str::<NoiseModel>(r#"[{"kind":"white","sigma":1}]"#).is_err());
    }

    #[test]
    fn problem_config_json() {
        let json = r#"{
            "kernel": {"base": {"kind": "cosine", "omega0": 12.566},
                       "envelope": {"kind": "squared_exponential", "mu": 0.2}},
            "noise": [{"kind": "white", "sigma2": 0.8}],
            "jitter": 1e-10
        }"#;
        let c: ProblemConfig = serde_json::from_str(json).unwrap();
        assert_eq!(c.jitter, 1e-10);
        let bad = json.replace("\"jitter\"", "\"jiter\"");
        assert!(serde_json::from_str::<ProblemConfig>(&bad).is_err());
    }

    #[test]
    fn single_point_halves_the_observation() {
        let noise = NoiseModel::white(1.0).unwrap();
        let m = posterior_mean_real(|_| 1.0, &noise, &[0.3], &[3.0], &[0.3], 0.0).unwrap();
        assert!((m[0] - 1.5).abs() < 1e-15);
    }

    #[test]
    fn interpolates_functions_in_the_kernel_span() {
        let se = |tau: f64| (-0.5 * (tau / 0.3).powi(2)).exp();
        let t: Vec<f64> = (0..30).map(|j| j as f64 / 29.0).collect();
        let centers = [0.1, 0.45, 0.8];
        let weights = [1.0, -0.7, 0.4];
        let s: Vec<f64> = t
            .iter()
            .map(|&x| centers.iter().zip(weights).map(|(c, w)| w * se(x - c)).sum())
            .collect();
        let noise = NoiseModel::white(1e-12).unwrap();
        let m = posterior_mean_real(se, &noise, &t, &s, &t, 0.0).unwrap();
        for (a, b) in m.iter().zip(&s) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn large_noise_shrinks_to_prior_mean() {
        let g = grid(50, 0.02);
        let sig = test_signal(&g);
        let m = posterior_mean_complex(&harmonic_problem(sig, 1e12)).unwrap();
        assert!(m.mean.values().iter().all(|z| z.norm() < 1e-9));
    }

    #[test]
    fn real_part_matches_real_regression() {
        let g = grid(80, 0.01);
        let sig = test_signal(&g);
        let p = harmonic_problem(sig.clone(), 0.05);
        let complex = posterior_mean_complex(&p).unwrap();
        let k = p.kernel.clone();
        let real = posterior_mean_real(
            move |tau| k.eval_real_part(tau),
            &p.noise,
            sig.times(),
            sig.values(),
            sig.times(),
            p.jitter,
        )
        .unwrap();
        for (z, r) in complex.mean.values().iter().zip(&real) {
            assert!((z.re - r).abs() < 1e-10);
        }
    }

    #[test]
    fn real_part_reproduces_signal_when_noise_free() {
        let g = grid(200, 0.01);
        for (k, b, f0, f1) in [(2.0, 0.3, 1.5, 0.4), (1.0, 0.1, 0.1, 0.1), (3.0, 0.2, 2.0, 0.4)] {
            let v: Vec<f64> = g
                .points()
                .iter()
                .map(|&t: &f64| {
                    t.powf(k) * (-t / b).exp() * (2.0 * PI * (f0 + f1 * t) * t).cos()
                })
                .collect();
            let sig = SampledSignal::new(g.clone(), v).unwrap();
            let p = RegressionProblem {
                kernel: ComplexKernel::periodic(2.0 * PI * 0.5, 0.1, 0.3).unwrap(),
                noise: NoiseModel::white(1e-6).unwrap(),
                signal: sig.clone(),
                targets: None,
                jitter: 1e-10,
            };
            let m = posterior_mean_complex(&p).unwrap();
            let err = m
                .mean
                .values()
                .iter()
                .zip(sig.values())
                .map(|(z, s)| (z.re - s).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-4, "k={k} b={b}: {err:e}");
        }
    }

    #[test]
    fn cosine_kernel_recovers_complex_exponential() {
        let w0 = 2.0 * PI * 3.0;
        // 4 whole periods
        let n = 400;
        let g = grid(n, 4.0 / 3.0 / n as f64);
        let sig = SampledSignal::new(g.clone(), g.points().iter().map(|&t| (w0 * t).cos()).collect())
            .unwrap();
        let p = RegressionProblem {
            kernel: ComplexKernel::quadrature(RealKernelSpec::Cosine { omega0: w0 }).unwrap(),
            noise: NoiseModel::white(1e-8).unwrap(),
            signal: sig,
            targets: None,
            jitter: 0.0,
        };
        let m = posterior_mean_complex(&p).unwrap();
        for (z, &t) in m.mean.values().iter().zip(g.points()) {
            let expect = Complex64::from_polar(1.0, w0 * t);
            assert!((z - expect).norm() < 1e-3);
        }
    }

    #[test]
    fn off_grid_targets_agree_with_on_grid_values() {
        let g = grid(60, 0.02);
        let sig = test_signal(&g);
        let mut p = harmonic_problem(sig, 0.1);
        let on = posterior_mean_complex(&p).unwrap();
        let mut shifted: Vec<f64> = g.points().to_vec();
        shifted.push(1.5);
        p.targets = Some(TimeGrid::new(shifted).unwrap());
        let off = posterior_mean_complex(&p).unwrap();
        for (a, b) in on.mean.values().iter().zip(off.mean.values()) {
            assert!((a - b).norm() < 1e-12);
        }
        assert_eq!(off.mean.len(), 61);
    }

    #[test]
    fn shrinkage_is_monotone_in_noise() {
        let g = grid(100, 0.01);
        let sig = test_signal(&g);
        let mut prev = f64::INFINITY;
        for lambda in [1e-4, 1e-2, 1.0, 1e2] {
            let m = posterior_mean_complex(&harmonic_problem(sig.clone(), lambda)).unwrap();
            let avg = m.mean.values().iter().map(|z| z.norm()).sum::<f64>() / g.len() as f64;
            assert!(avg < prev, "λ={lambda}: {avg} ≥ {prev}");
            prev = avg;
        }
    }

    #[test]
    fn negation_is_exact() {
        let g = grid(50, 0.02);
        let sig = test_signal(&g);
        let neg = sig.with_values(sig.values().iter().map(|v| -v).collect()).unwrap();
        let a = posterior_mean_complex(&harmonic_problem(sig, 0.1)).unwrap();
        let b = posterior_mean_complex(&harmonic_problem(neg, 0.1)).unwrap();
        for (x, y) in a.mean.values().iter().zip(b.mean.values()) {
            assert_eq!(*x, -*y);
        }
    }

    #[test]
    fn jitter_escalation_and_conditioning_error() {
        // rank-one matrix: needs jitter
        let a = DMatrix::from_element(4, 4, 1.0);
        let (_, d) = factorize(a.clone(), 0.0).unwrap();
        assert!(d.attempts >= 2);
        assert!(d.jitter > 0.0);
        // indefinite beyond what jitter 1e-7·mean diag can fix
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        match factorize(bad, 1e-10) {
            Err(Error::Conditioning { attempts, jitter }) => {
                assert_eq!(attempts, MAX_JITTER_ESCALATIONS + 1);
                assert!((jitter - 1e-7).abs() < 1e-20);
            }
            other => panic!("expected conditioning error, got {other:?}"),
        }
        assert!(factorize(DMatrix::identity(2, 2), -1.0).is_err());
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let g = grid(120, 0.01);
        let sig = test_signal(&g);
        let p = harmonic_problem(sig, 0.1);
        let a = posterior_mean_complex_with(Exec::Sequential, &p).unwrap();
        let b = posterior_mean_complex_with(Exec::Parallel, &p).unwrap();
        assert_eq!(a.mean.values(), b.mean.values());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn posterior_is_linear(
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
            seed in 0u64..1000,
        ) {
            let g = grid(40, 0.025);
            let s1: Vec<f64> = g.points().iter().map(|&t| (9.0 * t + seed as f64).sin()).collect();
            let s2: Vec<f64> = g.points().iter().map(|&t| (t * t * 5.0).cos() - 0.2 * seed as f64 / 1000.0).collect();
            let k = ComplexKernel::harmonic(2.0 * PI * 2.0, 0.2).unwrap();
            let op = PosteriorOperator::new(
                Exec::default(), &k, &NoiseModel::white(0.05).unwrap(), &g, None, 1e-10,
            ).unwrap();
            let combo: Vec<f64> = s1.iter().zip(&s2).map(|(x, y)| a * x + b * y).collect();
            let m1 = op.apply(&s1).unwrap();
            let m2 = op.apply(&s2).unwrap();
            let mc = op.apply(&combo).unwrap();
            for j in 0..g.len() {
                let lin = m1[j] * a + m2[j] * b;
                prop_assert!((mc[j] - lin).norm() < 1e-10);
            }
        }
    }
}
