use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Real stationary covariance function `k(τ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RealKernelSpec {
    /// `exp(−τ²/2ℓ²)`
    SquaredExponential { time_scale: f64 },
    /// `exp(−2 sin²(ω0 τ/2)/ρ²)`
    Periodic { omega0: f64, rho: f64 },
    /// `cos(ω0 τ)`
    Cosine { omega0: f64 },
}

/// Even, positive-definite envelope `f(τ)` of a quasi-quadrature kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvelopeSpec {
    Constant,
    /// `exp(−τ²/2μ²)`
    SquaredExponential { mu: f64 },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

/// One spectral line `weight·δ(ξ − freq)` of a periodic kernel's spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralLine {
    pub freq: f64,
    pub weight: f64,
}

/// Spectrum `k̃(ξ) = (1/2π)∫ e^{−iξτ} k(τ) dτ` of a real kernel.
#[derive(Debug, Clone, PartialEq)]
pub enum BaseSpectrum {
    /// Discrete lines, sorted by frequency and symmetric about zero.
    Lines(Vec<SpectralLine>),
    /// Gaussian density of a squared-exponential kernel.
    Gaussian { time_scale: f64 },
}

impl BaseSpectrum {
    /// Highest frequency carrying non-negligible power.
    pub fn extent(&self) -> f64 {
        match self {
            BaseSpectrum::Lines(lines) => {
                let max = lines.iter().map(|l| l.weight).fold(0.0, f64::max);
                lines
                    .iter()
                    .filter(|l| l.weight >= 1e-8 * max)
                    .map(|l| l.freq.abs())
                    .fold(0.0, f64::max)
            }
            BaseSpectrum::Gaussian { time_scale } => 6.0 / time_scale,
        }
    }

    /// Density value for continuous spectra, `None` for line spectra.
    pub fn density(&self, xi: f64) -> Option<f64> {
        match self {
            BaseSpectrum::Gaussian { time_scale } => Some(gaussian_spectrum(*time_scale, xi)),
            BaseSpectrum::Lines(_) => None,
        }
    }
}

/// Spectral density of `exp(−τ²/2ℓ²)`: `ℓ/√(2π)·exp(−ℓ²ξ²/2)`.
pub fn gaussian_spectrum(time_scale: f64, xi: f64) -> f64 {
    time_scale / (2.0 * PI).sqrt() * (-0.5 * time_scale * time_scale * xi * xi).exp()
}

impl RealKernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RealKernelSpec::SquaredExponential { time_scale } => positive("time_scale", time_scale),
            RealKernelSpec::Periodic { omega0, rho } => {
                positive("omega0", omega0)?;
                positive("rho", rho)
            }
            RealKernelSpec::Cosine { omega0 } => positive("omega0", omega0),
        }
    }

    pub fn eval(&self, tau: f64) -> f64 {
        match *self {
            RealKernelSpec::SquaredExponential { time_scale } => {
                (-0.5 * (tau / time_scale).powi(2)).exp()
            }
            RealKernelSpec::Periodic { omega0, rho } => {
                let s = (0.5 * omega0 * tau).sin();
                (-2.0 * s * s / (rho * rho)).exp()
            }
            RealKernelSpec::Cosine { omega0 } => (omega0 * tau).cos(),
        }
    }

    /// Fundamental angular frequency, if the kernel is periodic.
    pub fn omega0(&self) -> Option<f64> {
        match *self {
            RealKernelSpec::Periodic { omega0, .. } | RealKernelSpec::Cosine { omega0 } => {
                Some(omega0)
            }
            RealKernelSpec::SquaredExponential { .. } => None,
        }
    }

    pub fn period(&self) -> Option<f64> {
        self.omega0().map(|w| 2.0 * PI / w)
    }

    pub fn spectrum(&self) -> BaseSpectrum {
        match *self {
            RealKernelSpec::SquaredExponential { time_scale } => {
                BaseSpectrum::Gaussian { time_scale }
            }
            RealKernelSpec::Cosine { omega0 } => BaseSpectrum::Lines(vec![
                SpectralLine {
                    freq: -omega0,
                    weight: 0.5,
                },
                SpectralLine {
                    freq: omega0,
                    weight: 0.5,
                },
            ]),
            RealKernelSpec::Periodic { omega0, rho } => {
                let w = periodic_harmonic_weights(rho);
                let mut lines = Vec::with_capacity(2 * w.len() - 1);
                for n in (1..w.len()).rev() {
                    lines.push(SpectralLine {
                        freq: -(n as f64) * omega0,
                        weight: w[n],
                    });
                }
                for (n, &weight) in w.iter().enumerate() {
                    lines.push(SpectralLine {
                        freq: n as f64 * omega0,
                        weight,
                    });
                }
                BaseSpectrum::Lines(lines)
            }
        }
    }
}

pub fn eval_real(spec: &RealKernelSpec, tau: f64) -> f64 {
    spec.eval(tau)
}

/// Line weights `w_n = e^{−z} I_n(z)`, `z = 1/ρ²`, of the periodic kernel
/// `Σ_n w_n e^{i n ω0 τ}`, truncated once they fall below 1e-18 of `w_0`.
///
/// Evaluated as `(1/π)∫_0^π e^{z(cos θ − 1)} cos(nθ) dθ` with the trapezoid
/// rule, which converges geometrically for this periodic integrand.
pub fn periodic_harmonic_weights(rho: f64) -> Vec<f64> {
    let z = 1.0 / (rho * rho);
    // w_n ~ exp(−n²/2z) for large z; keep ~9.5 standard deviations
    let n_max = ((2.0 * z * 44.0).sqrt().ceil() as usize).clamp(8, 200_000) + 4;
    let m = (16 * n_max).max(4096);
    let h = PI / m as f64;
    let samples: Vec<f64> = (0..=m)
        .map(|j| {
            let theta = j as f64 * h;
            let e = (z * (theta.cos() - 1.0)).exp();
            if j == 0 || j == m {
                0.5 * e
            } else {
                e
            }
        })
        .collect();
    let mut weights = Vec::new();
    for n in 0..=n_max {
        let w: f64 = samples
            .iter()
            .enumerate()
            .map(|(j, s)| s * (n as f64 * j as f64 * h).cos())
            .sum::<f64>()
            * h
            / PI;
        if n > 0 && w.abs() < 1e-18 * weights[0] {
            break;
        }
        weights.push(w.max(0.0));
    }
    weights
}
