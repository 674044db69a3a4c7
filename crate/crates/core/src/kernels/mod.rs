//! Quadrature and quasi-quadrature complex covariance functions.
//!
//! A [`ComplexKernel`] is `f(τ)·(k(τ) + i·ℋk(τ))`: a real stationary kernel
//! `k`, lifted by the quadrature filter, times an even positive-definite
//! envelope `f`. With a constant envelope the kernel is a quadrature kernel
//! and its sample paths are analytic; a squared-exponential envelope gives a
//! quasi-quadrature kernel whose real and imaginary parts are only in
//! quadrature in expectation.

mod hilbert;
mod real;
mod spectral;
mod validate;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use hilbert::{
    dawson, hilbert_of_kernel, hilbert_of_samples, hilbert_squared_exponential, LagTable,
};
pub use real::{
    eval_real, gaussian_spectrum, periodic_harmonic_weights, BaseSpectrum, EnvelopeSpec,
    RealKernelSpec, SpectralLine,
};
pub use spectral::{
    coherency_direct, coherency_from_eigen, cross_spectral_matrix, default_xi_grid,
    deviation_probability, spectral_diagnostics, SpectralDiagnostics, EIGVEC_1, EIGVEC_2,
};
pub use validate::{validate_kernel, ValidationReport};

use crate::error::{Error, Result};
use crate::par::{map_indices, Exec};

/// How the imaginary part `ℋk` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HilbertMode {
    /// Closed form: `sin` for the cosine kernel, the harmonic sine series for
    /// the periodic kernel, Dawson's integral for the squared exponential.
    Analytic,
    /// DFT over a lag table spanning `±lag_span` seconds with `n_lags` nodes.
    NumericalFft { lag_span: f64, n_lags: usize },
}

/// Deliberate corruption of a kernel, used to exercise validation failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sabotage {
    /// Imaginary part evaluated at `|τ|`, making it even instead of odd.
    EvenImaginary,
}

/// Serializable description of a complex kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub base: RealKernelSpec,
    #[serde(default = "default_envelope")]
    pub envelope: EnvelopeSpec,
    #[serde(default = "default_mode")]
    pub hilbert_mode: HilbertMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sabotage: Option<Sabotage>,
}

fn default_envelope() -> EnvelopeSpec {
    EnvelopeSpec::Constant
}

fn default_mode() -> HilbertMode {
    HilbertMode::Analytic
}

#[derive(Debug, Clone, PartialEq)]
enum ImagPart {
    Sine { omega0: f64 },
    Harmonics { omega0: f64, coeffs: Vec<f64> },
    Dawson { time_scale: f64 },
    Table(LagTable),
}

/// Hermitian covariance function `f(τ)·𝒜k(τ)`.
///
/// Any lag tables or harmonic coefficients are computed eagerly in
/// [`ComplexKernel::new`]; evaluation is then pure.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexKernel {
    config: KernelConfig,
    imag: ImagPart,
}

impl ComplexKernel {
    pub fn new(base: RealKernelSpec, envelope: EnvelopeSpec, mode: HilbertMode) -> Result<Self> {
        Self::from_config(KernelConfig {
            base,
            envelope,
            hilbert_mode: mode,
            sabotage: None,
        })
    }

    /// Quadrature kernel `𝒜k` (constant envelope, closed-form imaginary part).
    pub fn quadrature(base: RealKernelSpec) -> Result<Self> {
        Self::new(base, EnvelopeSpec::Constant, HilbertMode::Analytic)
    }

    /// Quasi-quadrature kernel with a squared-exponential envelope.
    pub fn quasi_quadrature(base: RealKernelSpec, mu: f64) -> Result<Self> {
        Self::new(
            base,
            EnvelopeSpec::SquaredExponential { mu },
            HilbertMode::Analytic,
        )
    }

    /// Harmonic quasi-quadrature kernel `exp(−τ²/2μ²)·exp(iω0τ)`.
    pub fn harmonic(omega0: f64, mu: f64) -> Result<Self> {
        Self::quasi_quadrature(RealKernelSpec::Cosine { omega0 }, mu)
    }

    /// Periodic quasi-quadrature kernel.
    pub fn periodic(omega0: f64, rho: f64, mu: f64) -> Result<Self> {
        Self::quasi_quadrature(RealKernelSpec::Periodic { omega0, rho }, mu)
    }

    pub fn from_config(config: KernelConfig) -> Result<Self> {
        config.base.validate()?;
        if let EnvelopeSpec::SquaredExponential { mu } = config.envelope {
            if !(mu > 0.0 && mu.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "envelope mu must be positive and finite, got {mu}"
                )));
            }
        }
        let imag = match (config.hilbert_mode, config.base) {
            (HilbertMode::NumericalFft { lag_span, n_lags }, base) => {
                ImagPart::Table(LagTable::build(&base, lag_span, n_lags)?)
            }
            (HilbertMode::Analytic, RealKernelSpec::Cosine { omega0 }) => ImagPart::Sine { omega0 },
            (HilbertMode::Analytic, RealKernelSpec::Periodic { omega0, rho }) => {
                let w = periodic_harmonic_weights(rho);
                let coeffs = w.iter().skip(1).map(|x| 2.0 * x).collect();
                ImagPart::Harmonics { omega0, coeffs }
            }
            (HilbertMode::Analytic, RealKernelSpec::SquaredExponential { time_scale }) => {
                ImagPart::Dawson { time_scale }
            }
        };
        Ok(Self { config, imag })
    }

    pub fn config(&self) -> &KernelConfig {
        &self.config
    }

    pub fn base(&self) -> &RealKernelSpec {
        &self.config.base
    }

    pub fn envelope(&self) -> &EnvelopeSpec {
        &self.config.envelope
    }

    pub fn with_sabotage(mut self, sabotage: Sabotage) -> Self {
        self.config.sabotage = Some(sabotage);
        self
    }

    /// Envelope `f(τ)`.
    pub fn envelope_at(&self, tau: f64) -> f64 {
        match self.config.envelope {
            EnvelopeSpec::Constant => 1.0,
            EnvelopeSpec::SquaredExponential { mu } => (-0.5 * (tau / mu).powi(2)).exp(),
        }
    }

    /// `ℋk(τ)`, without the envelope.
    pub fn hilbert_at(&self, tau: f64) -> Result<f64> {
        let tau = match self.config.sabotage {
            Some(Sabotage::EvenImaginary) => tau.abs(),
            None => tau,
        };
        Ok(match &self.imag {
            ImagPart::Sine { omega0 } => (omega0 * tau).sin(),
            ImagPart::Harmonics { omega0, coeffs } => harmonic_sine_series(*omega0, coeffs, tau),
            ImagPart::Dawson { time_scale } => hilbert_squared_exponential(*time_scale, tau),
            ImagPart::Table(t) => t.eval(tau)?,
        })
    }

    /// Real part `f(τ)k(τ)`.
    pub fn eval_real_part(&self, tau: f64) -> f64 {
        self.envelope_at(tau) * self.config.base.eval(tau)
    }

    /// `f(τ)·(k(τ) + i·ℋk(τ))`.
    pub fn eval(&self, tau: f64) -> Result<Complex64> {
        let f = self.envelope_at(tau);
        if let (ImagPart::Sine { omega0 }, None) = (&self.imag, self.config.sabotage) {
            return Ok(Complex64::from_polar(f, omega0 * tau));
        }
        Ok(Complex64::new(
            f * self.config.base.eval(tau),
            f * self.hilbert_at(tau)?,
        ))
    }

    /// Largest lag the kernel can evaluate.
    pub fn max_lag(&self) -> f64 {
        match &self.imag {
            ImagPart::Table(t) => t.span(),
            _ => f64::INFINITY,
        }
    }
}

/// `Σ_n c_n sin(n ω0 τ)` by the angle-addition recurrence.
fn harmonic_sine_series(omega0: f64, coeffs: &[f64], tau: f64) -> f64 {
    let (s1, c1) = (omega0 * tau).sin_cos();
    let (mut s, mut c) = (s1, c1);
    let mut acc = 0.0;
    for (n, &cn) in coeffs.iter().enumerate() {
        acc += cn * s;
        // resynchronize periodically to bound recurrence drift
        if (n + 1) % 32 == 0 {
            let (sn, cn2) = ((n + 2) as f64 * omega0 * tau).sin_cos();
            s = sn;
            c = cn2;
        } else {
            let next_s = s * c1 + c * s1;
            c = c * c1 - s * s1;
            s = next_s;
        }
    }
    acc
}

pub fn eval_complex(k: &ComplexKernel, tau: f64) -> Result<Complex64> {
    k.eval(tau)
}

fn same_uniform_grid(a: &[f64], b: &[f64]) -> bool {
    if a.len() < 2 || a != b {
        return false;
    }
    let n = a.len();
    let dt = (a[n - 1] - a[0]) / (n - 1) as f64;
    a.windows(2).all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt)
}

/// Complex Gram matrix `G[j,k] = k(a_j − b_k)`.
pub fn gram(k: &ComplexKernel, a: &[f64], b: &[f64]) -> Result<DMatrix<Complex64>> {
    gram_with(Exec::default(), k, a, b)
}

pub fn gram_with(
    exec: Exec,
    k: &ComplexKernel,
    a: &[f64],
    b: &[f64],
) -> Result<DMatrix<Complex64>> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData("Gram matrix needs nonempty grids".into()));
    }
    let (n, m) = (a.len(), b.len());
    if same_uniform_grid(a, b) && k.config.sabotage.is_none() {
        // Toeplitz: one evaluation per lag, Hermitian by construction
        let lags: Vec<Result<Complex64>> =
            map_indices(exec, n, |d| k.eval(a[d] - a[0]));
        let lags: Vec<Complex64> = lags.into_iter().collect::<Result<_>>()?;
        return Ok(DMatrix::from_fn(n, n, |j, l| {
            if j >= l {
                lags[j - l]
            } else {
                lags[l - j].conj()
            }
        }));
    }
    let rows: Vec<Result<Vec<Complex64>>> = map_indices(exec, n, |j| {
        b.iter().map(|&bk| k.eval(a[j] - bk)).collect()
    });
    let mut out = DMatrix::zeros(n, m);
    for (j, row) in rows.into_iter().enumerate() {
        for (l, v) in row?.into_iter().enumerate() {
            out[(j, l)] = v;
        }
    }
    Ok(out)
}

/// Real Gram matrix `G[j,k] = kernel(a_j − b_k)`.
pub fn real_gram<F>(kernel: F, a: &[f64], b: &[f64]) -> DMatrix<f64>
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    real_gram_with(Exec::default(), kernel, a, b)
}

pub fn real_gram_with<F>(exec: Exec, kernel: F, a: &[f64], b: &[f64]) -> DMatrix<f64>
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    let (n, m) = (a.len(), b.len());
    if same_uniform_grid(a, b) {
        let lags: Vec<f64> = map_indices(exec, n, |d| kernel(a[d] - a[0]));
        return DMatrix::from_fn(n, n, |j, l| lags[j.abs_diff(l)]);
    }
    let rows: Vec<Vec<f64>> =
        map_indices(exec, n, |j| b.iter().map(|&bk| kernel(a[j] - bk)).collect());
    DMatrix::from_fn(n, m, |j, l| rows[j][l])
}
