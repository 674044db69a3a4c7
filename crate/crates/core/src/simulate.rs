//! Ground-truth signal generators: chirplets, stochastic oscillations, the
//! two-sided exponential demo signal, and white-noise corruption.
//!
//! Every stochastic generator is a pure function of its inputs and a seed.
//! GP draws use ChaCha8 stream 0 and noise draws stream 1, so a trial can
//! reuse one seed for both without correlating them.

use std::f64::consts::PI;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cgpr::factorize;
use crate::error::{Error, Result};
use crate::kernels::real_gram;
use crate::signals::{differentiate, hann_window, SampledSignal, TimeGrid};

const NOISE_STREAM: u64 = 1;

/// Uniform grid `t0 + j·dt`, `j < n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub t0: f64,
    pub dt: f64,
    pub n: usize,
}

impl Default for GridSpec {
    /// 2 s at 100 Hz.
    fn default() -> Self {
        Self {
            t0: 0.0,
            dt: 0.01,
            n: 200,
        }
    }
}

impl GridSpec {
    pub fn to_grid(&self) -> Result<TimeGrid> {
        TimeGrid::uniform(self.t0, self.dt, self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseLaw {
    /// `(ω0 + a t) t`
    Linear,
    /// `(ω0 + a t²) t`
    Quadratic,
    /// `(ω0 + a e^{t/2}) t`
    Exponential,
}

/// `t^k e^{−t/b} cos Φ(t)` for `t ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChirpletSpec {
    pub k: u32,
    pub b: f64,
    pub omega0: f64,
    pub a: f64,
    pub law: PhaseLaw,
    pub phi0: f64,
}

impl ChirpletSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(1..=3).contains(&self.k) {
            return bad(format!("chirplet exponent k must be 1, 2 or 3, got {}", self.k));
        }
        for (name, v) in [("b", self.b), ("omega0", self.omega0), ("a", self.a)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("chirplet {name} must be positive, got {v}"));
            }
        }
        if !(self.phi0 > -PI && self.phi0 <= PI) {
            return bad(format!("chirplet phi0 must lie in (-pi, pi], got {}", self.phi0));
        }
        Ok(())
    }

    /// Phase `Φ(t)` including `φ0`.
    pub fn phase(&self, t: f64) -> f64 {
        let core = match self.law {
            PhaseLaw::Linear => (self.omega0 + self.a * t) * t,
            PhaseLaw::Quadratic => (self.omega0 + self.a * t * t) * t,
            PhaseLaw::Exponential => (self.omega0 + self.a * (0.5 * t).exp()) * t,
        };
        core + self.phi0
    }

    /// `dΦ/dt` in closed form.
    pub fn frequency(&self, t: f64) -> f64 {
        match self.law {
            PhaseLaw::Linear => self.omega0 + 2.0 * self.a * t,
            PhaseLaw::Quadratic => self.omega0 + 3.0 * self.a * t * t,
            PhaseLaw::Exponential => self.omega0 + self.a * (0.5 * t).exp() * (1.0 + 0.5 * t),
        }
    }

    pub fn amplitude(&self, t: f64) -> f64 {
        if t < 0.0 {
            0.0
        } else {
            t.powi(self.k as i32) * (-t / self.b).exp()
        }
    }
}

/// Stochastic oscillation with GP-driven amplitude and phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StochOscSpec {
    pub mu_x: f64,
    pub omega0: f64,
    pub mu_p: f64,
    pub seed: u64,
}

impl StochOscSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mu_x", self.mu_x), ("omega0", self.omega0), ("mu_p", self.mu_p)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "stochastic oscillation {name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// A simulated signal with its true instantaneous attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub signal: SampledSignal,
    pub amplitude: Vec<f64>,
    /// Unwrapped phase (rad).
    pub phase: Vec<f64>,
    /// Angular frequency (rad/s).
    pub frequency: Vec<f64>,
}

pub fn gen_chirplet(spec: &ChirpletSpec, grid: &TimeGrid) -> Result<GroundTruth> {
    spec.validate()?;
    let t = grid.points();
    if t[0] < 0.0 {
        return Err(Error::InvalidGrid(format!(
            "chirplet grid must start at t >= 0, got {}",
            t[0]
        )));
    }
    let amplitude: Vec<f64> = t.iter().map(|&x| spec.amplitude(x)).collect();
    let phase: Vec<f64> = t.iter().map(|&x| spec.phase(x)).collect();
    let frequency = t.iter().map(|&x| spec.frequency(x)).collect();
    let values = amplitude
        .iter()
        .zip(&phase)
        .map(|(a, p)| a * p.cos())
        .collect();
    Ok(GroundTruth {
        signal: SampledSignal::new(grid.clone(), values)?,
        amplitude,
        phase,
        frequency,
    })
}

/// Draw `mean + L z` with `L Lᵀ` the (jittered) Gram of `kernel` on `grid`.
pub fn sample_gp_with<F>(mean: &[f64], kernel: F, grid: &TimeGrid, rng: &mut ChaCha8Rng) -> Result<Vec<f64>>
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    let t = grid.points();
    if mean.len() != t.len() {
        return Err(Error::LengthMismatch {
            expected: t.len(),
            got: mean.len(),
        });
    }
    let k = real_gram(kernel, t, t);
    let z = DVector::from_iterator(t.len(), (0..t.len()).map(|_| rng.sample::<f64, _>(StandardNormal)));
    if k.diagonal().iter().all(|&d| d == 0.0) {
        return Ok(mean.to_vec());
    }
    let (ch, _) = factorize(k, 1e-10)?;
    let draw = ch.l() * z;
    Ok(mean.iter().zip(draw.iter()).map(|(m, d)| m + d).collect())
}

/// Seeded GP draw.
pub fn sample_gp<F>(mean: &[f64], kernel: F, grid: &TimeGrid, seed: u64) -> Result<Vec<f64>>
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    sample_gp_with(mean, kernel, grid, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn squared_exponential(scale: f64) -> impl Fn(f64) -> f64 + Sync + Send {
    move |tau| (-0.5 * (tau / scale).powi(2)).exp()
}

/// Uniform draw on `(−π, π]`.
fn uniform_phase<R: Rng>(rng: &mut R) -> f64 {
    PI - rng.random_range(0.0..2.0 * PI)
}

/// `𝔄 = √(x²+1) − 1`, `x ~ GP(√3, SE μ_x)`; `𝔓 ~ GP(ω0 t, SE μ_P)` plus a
/// uniform offset; Hann-tapered signal and amplitude.
pub fn gen_stoch_osc(spec: &StochOscSpec, grid: &TimeGrid) -> Result<GroundTruth> {
    spec.validate()?;
    let t = grid.points();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let x = sample_gp_with(&vec![3f64.sqrt(); t.len()], squared_exponential(spec.mu_x), grid, &mut rng)?;
    let drift: Vec<f64> = t.iter().map(|&s| spec.omega0 * s).collect();
    let p = sample_gp_with(&drift, squared_exponential(spec.mu_p), grid, &mut rng)?;
    let phi0 = uniform_phase(&mut rng);
    let taper = hann_window(t.len());
    let amplitude: Vec<f64> = x
        .iter()
        .zip(&taper)
        .map(|(x, w)| w * ((x * x + 1.0).sqrt() - 1.0))
        .collect();
    let phase: Vec<f64> = p.iter().map(|v| v + phi0).collect();
    let frequency = differentiate(t, &p);
    let values = amplitude
        .iter()
        .zip(&phase)
        .map(|(a, ph)| a * ph.cos())
        .collect();
    Ok(GroundTruth {
        signal: SampledSignal::new(grid.clone(), values)?,
        amplitude,
        phase,
        frequency,
    })
}

/// `exp(−|t|/σ)·cos(2π f0 t)`.
pub fn gen_demo_signal(sigma: f64, f0: f64, grid: &TimeGrid) -> Result<SampledSignal> {
    if !(sigma > 0.0 && sigma.is_finite() && f0.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "demo signal needs sigma > 0 and finite f0, got {sigma}, {f0}"
        )));
    }
    let values = grid
        .points()
        .iter()
        .map(|&t| (-t.abs() / sigma).exp() * (2.0 * PI * f0 * t).cos())
        .collect();
    SampledSignal::new(grid.clone(), values)
}

/// `s + sd·N(0, 1)` draws from the seed's noise stream.
pub fn add_white_noise(s: &SampledSignal, sd: f64, seed: u64) -> Result<SampledSignal> {
    if !(sd >= 0.0 && sd.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise sd must be >= 0, got {sd}")));
    }
    if sd == 0.0 {
        return Ok(s.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(NOISE_STREAM);
    let values = s
        .values()
        .iter()
        .map(|v| v + sd * rng.sample::<f64, _>(StandardNormal))
        .collect();
    s.with_values(values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    Chirplet,
    StochOsc,
}

/// Per-trial signal parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrialSpec {
    Chirplet(ChirpletSpec),
    StochOsc(StochOscSpec),
}

impl TrialSpec {
    pub fn generate(&self, grid: &TimeGrid) -> Result<GroundTruth> {
        match self {
            TrialSpec::Chirplet(c) => gen_chirplet(c, grid),
            TrialSpec::StochOsc(s) => gen_stoch_osc(s, grid),
        }
    }

    /// Initial angular frequency, used to bin results.
    pub fn initial_frequency(&self) -> f64 {
        match self {
            TrialSpec::Chirplet(c) => c.omega0,
            TrialSpec::StochOsc(s) => s.omega0,
        }
    }
}

/// Draw `n` trial specs. Frequency brackets are in Hz and converted to rad/s.
///
/// Chirplets: `b ∈ [0.1, 0.3]`, `ω0/2π ∈ [0.1, 2]`, `k ∈ {1,2,3}`,
/// `a/2π ∈ [0.1, 0.4]`, law uniform over the three.
/// Stochastic oscillations: `μ_x, μ_P ∈ [0.1, 0.4]`, `ω0/2π ∈ [1, 3]`; the
/// trial seed is `seed + i`.
pub fn sample_study_params(study: StudyKind, n: usize, seed: u64) -> Vec<TrialSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| match study {
            StudyKind::Chirplet => {
                let b = rng.random_range(0.1..=0.3);
                let omega0 = 2.0 * PI * rng.random_range(0.1..=2.0);
                let k = rng.random_range(1..=3u32);
                let a = 2.0 * PI * rng.random_range(0.1..=0.4);
                let law = [PhaseLaw::Linear, PhaseLaw::Quadratic, PhaseLaw::Exponential]
                    [rng.random_range(0..3usize)];
                let phi0 = uniform_phase(&mut rng);
                TrialSpec::Chirplet(ChirpletSpec {
                    k,
                    b,
                    omega0,
                    a,
                    law,
                    phi0,
                })
            }
            StudyKind::StochOsc => TrialSpec::StochOsc(StochOscSpec {
                mu_x: rng.random_range(0.1..=0.4),
                omega0: 2.0 * PI * rng.random_range(1.0..=3.0),
                mu_p: rng.random_range(0.1..=0.4),
                seed: seed.wrapping_add(i as u64),
            }),
        })
        .collect()
}
