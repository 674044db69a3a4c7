//! Cross-spectral eigenvalues, coherency and conditional variance.
//!
//! Fourier convention: `k̃(ξ) = (1/2π)∫ e^{−iξτ} k(τ) dτ`. Absolute scales
//! of the eigenvalues depend on this choice; coherency and eigenvalue ratios
//! do not.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use statrs::function::erf::erfc;

use super::real::{gaussian_spectrum, BaseSpectrum, EnvelopeSpec};
use super::ComplexKernel;
use crate::error::{Error, Result};
use crate::par::{map_indices, Exec};

/// Eigenvector `(i, 1)/√2` of the cross-spectral matrix, paired with `λ1`.
pub const EIGVEC_1: [Complex64; 2] = [
    Complex64::new(0.0, FRAC_1_SQRT_2),
    Complex64::new(FRAC_1_SQRT_2, 0.0),
];
/// Eigenvector `(−i, 1)/√2`, paired with `λ2`.
pub const EIGVEC_2: [Complex64; 2] = [
    Complex64::new(0.0, -FRAC_1_SQRT_2),
    Complex64::new(FRAC_1_SQRT_2, 0.0),
];

/// Spectral diagnostics of a complex kernel on a frequency grid (rad/s).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDiagnostics {
    pub xi: Vec<f64>,
    /// Counterclockwise (analytic) eigenvalue `λ1(ξ)`.
    pub lambda1: Vec<f64>,
    /// Clockwise (anti-analytic) eigenvalue `λ2(ξ)`.
    pub lambda2: Vec<f64>,
    pub coherency: Vec<Complex64>,
    /// False where `λ1 + λ2 = 0` and the coherency is undefined.
    pub coherency_defined: Vec<bool>,
    /// Conditional variance `χ(ξ)` of the imaginary coefficient given the real one.
    pub cond_variance: Vec<f64>,
}

/// Heaviside step with `h(0) = 1/2`.
fn heaviside(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        0.0
    } else {
        0.5
    }
}

/// Symmetric 4097-point grid covering the kernel's spectral support.
pub fn default_xi_grid(k: &ComplexKernel) -> Vec<f64> {
    let extent = k.base().spectrum().extent();
    let span = match *k.envelope() {
        EnvelopeSpec::SquaredExponential { mu } => extent + 6.0 / mu,
        EnvelopeSpec::Constant => 1.25 * extent,
    };
    let n = 4097;
    let step = 2.0 * span / (n - 1) as f64;
    (0..n).map(|j| -span + j as f64 * step).collect()
}

fn xi_step(xi: &[f64]) -> Result<f64> {
    if xi.len() < 2 {
        return Err(Error::InvalidGrid("frequency grid needs at least 2 points".into()));
    }
    let n = xi.len();
    let d = (xi[n - 1] - xi[0]) / (n - 1) as f64;
    let dev = xi
        .windows(2)
        .map(|w| ((w[1] - w[0]) - d).abs())
        .fold(0.0, f64::max);
    if !(d > 0.0) || dev > 1e-9 * d {
        return Err(Error::NonUniformGrid(dev));
    }
    Ok(d)
}

/// `exp(−q)·erfc(x)`, kept positive far into the tail where both factors
/// would underflow separately.
fn scaled_erfc(q: f64, x: f64) -> f64 {
    if x < 10.0 {
        return (-q).exp() * erfc(x);
    }
    // erfc(x) = e^{−x²}/(x√π)·Σ (−1)^n (2n−1)!!/(2x²)^n
    let r = 1.0 / (2.0 * x * x);
    let mut term = 1.0;
    let mut series = 1.0;
    for n in 1..12 {
        term *= -((2 * n - 1) as f64) * r;
        series += term;
    }
    (-q - x * x).exp() / (x * PI.sqrt()) * series
}

/// Closed form of `∫_{υ≷0} f̃(ξ−υ)·k̃(υ) dυ` for Gaussian `f̃` (envelope
/// scale `mu`) and Gaussian `k̃` (time scale `ell`).
fn gaussian_half_convolutions(mu: f64, ell: f64, xi: f64) -> (f64, f64) {
    let a = mu * mu + ell * ell;
    let c = mu * mu * xi / a;
    let q = 0.5 * mu * mu * ell * ell * xi * xi / a;
    let pre = mu * ell / (2.0 * PI) * (PI / (2.0 * a)).sqrt();
    let x = c * (0.5 * a).sqrt();
    (pre * scaled_erfc(q, -x), pre * scaled_erfc(q, x))
}

/// Eigenvalues `λ1,2(ξ) = ∫ f̃(ξ−υ)·k̃(υ)·h(±υ) dυ`.
fn eigenvalues(k: &ComplexKernel, xi: &[f64], dxi: f64) -> (Vec<f64>, Vec<f64>) {
    let spectrum = k.base().spectrum();
    let n = xi.len();
    match (spectrum, *k.envelope()) {
        (BaseSpectrum::Lines(lines), EnvelopeSpec::SquaredExponential { mu }) => {
            let pairs = map_indices(Exec::default(), n, |j| {
                lines.iter().fold((0.0, 0.0), |(a, b), l| {
                    let f = l.weight * gaussian_spectrum(mu, xi[j] - l.freq);
                    (a + f * heaviside(l.freq), b + f * heaviside(-l.freq))
                })
            });
            pairs.into_iter().unzip()
        }
        (BaseSpectrum::Lines(lines), EnvelopeSpec::Constant) => {
            // δ envelope spectrum: each line lands in the bin containing it
            let mut l1 = vec![0.0; n];
            let mut l2 = vec![0.0; n];
            for l in &lines {
                let pos = (l.freq - xi[0]) / dxi;
                let idx = pos.round();
                if idx < 0.0 || idx >= n as f64 {
                    continue;
                }
                let idx = idx as usize;
                l1[idx] += l.weight * heaviside(l.freq) / dxi;
                l2[idx] += l.weight * heaviside(-l.freq) / dxi;
            }
            (l1, l2)
        }
        (BaseSpectrum::Gaussian { time_scale }, EnvelopeSpec::SquaredExponential { mu }) => {
            let pairs = map_indices(Exec::default(), n, |j| {
                gaussian_half_convolutions(mu, time_scale, xi[j])
            });
            pairs.into_iter().unzip()
        }
        (BaseSpectrum::Gaussian { time_scale }, EnvelopeSpec::Constant) => xi
            .iter()
            .map(|&x| {
                let d = gaussian_spectrum(time_scale, x);
                (d * heaviside(x), d * heaviside(-x))
            })
            .unzip(),
    }
}

/// Eigenvalues, coherency and conditional variance of `k` on a uniform
/// frequency grid.
pub fn spectral_diagnostics(k: &ComplexKernel, xi: &[f64]) -> Result<SpectralDiagnostics> {
    let dxi = xi_step(xi)?;
    let (lambda1, lambda2) = eigenvalues(k, xi, dxi);
    let n = xi.len();
    let mut coherency = Vec::with_capacity(n);
    let mut defined = Vec::with_capacity(n);
    let mut chi = Vec::with_capacity(n);
    for j in 0..n {
        let (a, b) = (lambda1[j], lambda2[j]);
        let sum = a + b;
        if xi[j].abs() <= 1e-9 * dxi {
            coherency.push(Complex64::new(0.0, 0.0));
            defined.push(true);
        } else if sum > 0.0 {
            coherency.push(Complex64::new(0.0, -(a - b) / sum));
            defined.push(true);
        } else {
            coherency.push(Complex64::new(0.0, 0.0));
            defined.push(false);
        }
        chi.push(if sum > 0.0 { 4.0 * a * b / sum } else { 0.0 });
    }
    Ok(SpectralDiagnostics {
        xi: xi.to_vec(),
        lambda1,
        lambda2,
        coherency,
        coherency_defined: defined,
        cond_variance: chi,
    })
}

/// Cross-spectral matrix of (real, imaginary) parts assembled from the
/// eigenvalues: `Θ[a][b] = Σ_m λ_m·conj(v_m[a])·v_m[b]`.
pub fn cross_spectral_matrix(lambda1: f64, lambda2: f64) -> [[Complex64; 2]; 2] {
    let mut theta = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (lambda, v) in [(lambda1, EIGVEC_1), (lambda2, EIGVEC_2)] {
        for a in 0..2 {
            for b in 0..2 {
                theta[a][b] += lambda * v[a].conj() * v[b];
            }
        }
    }
    theta
}

/// `Θ12/√(Θ11·Θ22)`, or `None` for a degenerate diagonal.
pub fn coherency_direct(theta: &[[Complex64; 2]; 2]) -> Option<Complex64> {
    let d = theta[0][0].re * theta[1][1].re;
    (d > 0.0).then(|| theta[0][1] / d.sqrt())
}

/// Coherency written directly in terms of eigenvalues and eigenvectors.
pub fn coherency_from_eigen(lambda1: f64, lambda2: f64) -> Option<Complex64> {
    let (v1, v2) = (EIGVEC_1, EIGVEC_2);
    let num = v1[0].conj() * v1[1] * lambda1 + v2[0].conj() * v2[1] * lambda2;
    let d1 = v1[0].norm_sqr() * lambda1 + v2[0].norm_sqr() * lambda2;
    let d2 = v1[1].norm_sqr() * lambda1 + v2[1].norm_sqr() * lambda2;
    let d = d1 * d2;
    (d > 0.0).then(|| num / d.sqrt())
}

/// `P(|η| > ε) = exp(−ε²/χ)` for a circular complex normal `η` of variance
/// `χ`; zero when `χ = 0`.
pub fn deviation_probability(chi: f64, eps: f64) -> f64 {
    if chi <= 0.0 {
        0.0
    } else {
        (-eps * eps / chi).exp()
    }
}
