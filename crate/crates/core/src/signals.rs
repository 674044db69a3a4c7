//! Series types and instantaneous-attribute extraction.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Strictly increasing sample times in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    points: Vec<f64>,
}

impl TimeGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 points, got {}",
                points.len()
            )));
        }
        if let Some(i) = points.iter().position(|t| !t.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        if let Some(i) = points.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!(
                "time stamps not strictly increasing at index {}",
                i + 1
            )));
        }
        Ok(Self { points })
    }

    /// `n` points starting at `t0` spaced by `dt`.
    pub fn uniform(t0: f64, dt: f64, n: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidGrid(format!("step must be positive, got {dt}")));
        }
        Self::new((0..n).map(|j| t0 + j as f64 * dt).collect())
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.points[self.points.len() - 1] - self.points[0]
    }

    pub fn mean_step(&self) -> f64 {
        self.duration() / (self.points.len() - 1) as f64
    }

    /// Largest deviation of a successive spacing from the mean spacing.
    pub fn max_step_deviation(&self) -> f64 {
        let mean = self.mean_step();
        self.points
            .windows(2)
            .map(|w| ((w[1] - w[0]) - mean).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_uniform(&self, tol: f64) -> bool {
        self.max_step_deviation() < tol
    }

    /// Mean step, or an error when spacings deviate by more than a relative
    /// 1e-6 of the step.
    pub fn require_uniform(&self) -> Result<f64> {
        let dt = self.mean_step();
        let dev = self.max_step_deviation();
        if dev > 1e-6 * dt {
            return Err(Error::NonUniformGrid(dev));
        }
        Ok(dt)
    }
}

fn check_values<T>(grid: &TimeGrid, values: &[T], finite: impl Fn(&T) -> bool) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: values.len(),
        });
    }
    match values.iter().position(|v| !finite(v)) {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(()),
    }
}

/// Real-valued observations on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl SampledSignal {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        check_values(&grid, &values, |v| v.is_finite())?;
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        self.grid.points()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Same grid, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.grid.clone(), values)
    }
}

/// Complex-valued series on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSeries {
    grid: TimeGrid,
    values: Vec<Complex64>,
}

impl ComplexSeries {
    pub fn new(grid: TimeGrid, values: Vec<Complex64>) -> Result<Self> {
        check_values(&grid, &values, |v| v.re.is_finite() && v.im.is_finite())?;
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        self.grid.points()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn real_part(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }

    pub fn imag_part(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.im).collect()
    }
}

/// Instantaneous amplitude, unwrapped phase (rad) and angular frequency (rad/s).
#[derive(Debug, Clone, PartialEq)]
pub struct InstAttrs {
    pub grid: TimeGrid,
    pub amplitude: Vec<f64>,
    pub phase_unwrapped: Vec<f64>,
    pub frequency: Vec<f64>,
    /// Points where the source had zero modulus; their phase was interpolated.
    pub flagged: Vec<bool>,
}

impl InstAttrs {
    /// Mask of points with a defined phase.
    pub fn valid_mask(&self) -> Vec<bool> {
        self.flagged.iter().map(|f| !f).collect()
    }

    pub fn frequency_hz(&self) -> Vec<f64> {
        self.frequency.iter().map(|w| w / (2.0 * PI)).collect()
    }
}

/// Maps an angle into (−π, π].
pub fn wrap_phase(phi: f64) -> f64 {
    let mut w = phi.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// Unwraps a sequence of principal arguments.
///
/// Successive jumps are mapped into (−π, π]; a jump of exactly ±π therefore
/// resolves to +π.
pub fn unwrap_phase(raw: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(raw.len());
    let mut turns = 0.0_f64;
    for (j, &p) in raw.iter().enumerate() {
        if j > 0 {
            let jump = p - raw[j - 1];
            if jump > PI {
                turns -= ((jump - PI) / (2.0 * PI)).ceil();
            } else if jump <= -PI {
                turns += ((-jump - PI) / (2.0 * PI)).floor() + 1.0;
            }
        }
        out.push(p + 2.0 * PI * turns);
    }
    out
}

/// Derivative of `y` with respect to `t`: central differences in the
/// interior, one-sided at the two ends.
pub fn differentiate(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = y.len();
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n)
            .map(|j| {
                let (a, b) = match j {
                    0 => (0, 1),
                    j if j == n - 1 => (n - 2, n - 1),
                    j => (j - 1, j + 1),
                };
                (y[b] - y[a]) / (t[b] - t[a])
            })
            .collect(),
    }
}

/// Amplitude, unwrapped phase and frequency of a complex series.
///
/// Zero-modulus points have no phase; they are flagged and their unwrapped
/// phase is linearly interpolated between the nearest valid neighbours
/// (held constant beyond the first/last valid point).
pub fn extract_attrs(z: &ComplexSeries) -> InstAttrs {
    let t = z.times();
    let values = z.values();
    let amplitude: Vec<f64> = values.iter().map(|v| v.norm()).collect();
    let flagged: Vec<bool> = amplitude.iter().map(|&a| a == 0.0).collect();

    let valid: Vec<usize> = (0..values.len()).filter(|&j| !flagged[j]).collect();
    let raw: Vec<f64> = valid.iter().map(|&j| values[j].arg()).collect();
    let unwrapped_valid = unwrap_phase(&raw);

    let mut phase = vec![0.0; values.len()];
    if !valid.is_empty() {
        for (&j, &p) in valid.iter().zip(&unwrapped_valid) {
            phase[j] = p;
        }
        let mut next = 0usize;
        for j in 0..values.len() {
            if !flagged[j] {
                next += 1;
                continue;
            }
            // valid[next - 1] < j < valid[next]
            phase[j] = match (next.checked_sub(1).map(|i| valid[i]), valid.get(next)) {
                (Some(a), Some(&b)) => {
                    let w = (t[j] - t[a]) / (t[b] - t[a]);
                    phase[a] + w * (phase[b] - phase[a])
                }
                (Some(a), None) => phase[a],
                (None, Some(&b)) => phase[b],
                (None, None) => 0.0,
            };
        }
    }

    let frequency = differentiate(t, &phase);
    InstAttrs {
        grid: z.grid().clone(),
        amplitude,
        phase_unwrapped: phase,
        frequency,
        flagged,
    }
}

/// Hann window weights `0.5·(1 − cos(2πj/(n−1)))`.
pub fn hann_window(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![1.0],
        _ => (0..n)
            .map(|j| {
                if j == 0 || j == n - 1 {
                    0.0
                } else {
                    0.5 * (1.0 - (2.0 * PI * j as f64 / (n - 1) as f64).cos())
                }
            })
            .collect(),
    }
}

pub fn hann_taper(s: &SampledSignal) -> SampledSignal {
    let w = hann_window(s.len());
    let values = s.values().iter().zip(&w).map(|(v, w)| v * w).collect();
    SampledSignal {
        grid: s.grid.clone(),
        values,
    }
}
