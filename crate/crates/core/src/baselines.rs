//! Comparison methods: the FFT analytic representation and Morlet wavelet
//! analysis.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{map_indices, Exec};
use crate::signals::{ComplexSeries, SampledSignal};

/// Analytic representation `s + iℋs` by the discrete quadrature filter.
///
/// Positive-frequency bins are doubled, negative ones zeroed, DC and (for
/// even lengths) Nyquist kept. The real part of the output is `s` exactly.
pub fn analytic_representation(s: &SampledSignal) -> Result<ComplexSeries> {
    s.grid().require_uniform()?;
    let v = s.values();
    let n = v.len();
    let imag = if v.iter().all(|&x| x == v[0]) {
        vec![0.0; n]
    } else {
        let mut buf: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(n).process(&mut buf);
        for (j, c) in buf.iter_mut().enumerate() {
            if j == 0 || 2 * j == n {
                continue;
            }
            if 2 * j < n {
                *c *= 2.0;
            } else {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        planner.plan_fft_inverse(n).process(&mut buf);
        buf.iter().map(|c| c.im / n as f64).collect()
    };
    let out = v
        .iter()
        .zip(imag)
        .map(|(&re, im)| Complex64::new(re, im))
        .collect();
    ComplexSeries::new(s.grid().clone(), out)
}

/// Discrete Hilbert transform: the imaginary part of the analytic
/// representation.
pub fn hilbert(s: &SampledSignal) -> Result<SampledSignal> {
    let a = analytic_representation(s)?;
    s.with_values(a.imag_part())
}

/// Morlet wavelet `exp(−u²/2μ²)·exp(iω0u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveletParams {
    /// Center angular frequency (rad/s).
    pub omega0: f64,
    /// Temporal localization (s).
    pub mu: f64,
}

impl WaveletParams {
    pub fn new(omega0: f64, mu: f64) -> Result<Self> {
        let p = Self { omega0, mu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("omega0", self.omega0), ("mu", self.mu)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "wavelet {name} must be positive and finite, got {v}"
                )));
            }
        }
        if self.omega0 * self.mu < 1.0 {
            log::warn!(
                "wavelet omega0*mu = {:.3} < 1: the wavelet is far from analytic",
                self.omega0 * self.mu
            );
        }
        Ok(())
    }

    /// Gain of the transform at angular frequency `xi`:
    /// `μ√(2π)·exp(−μ²(ξ−ω0)²/2)`.
    pub fn frequency_response(&self, xi: f64) -> f64 {
        self.mu * (2.0 * PI).sqrt() * (-0.5 * (self.mu * (xi - self.omega0)).powi(2)).exp()
    }

    /// Factor that maps the transform of a unit cosine at `ω0` to unit
    /// modulus: the cosine puts half its amplitude on `+ω0`.
    pub fn amplitude_scale(&self) -> f64 {
        2.0 / self.frequency_response(self.omega0)
    }
}

/// Quadrature weights for a possibly irregular grid: half the distance
/// between neighbors (the step itself on uniform grids).
fn voronoi_widths(t: &[f64]) -> Vec<f64> {
    let n = t.len();
    (0..n)
        .map(|j| {
            let lo = if j == 0 { t[0] } else { 0.5 * (t[j - 1] + t[j]) };
            let hi = if j + 1 == n { t[n - 1] } else { 0.5 * (t[j] + t[j + 1]) };
            let w = hi - lo;
            // ends of a uniform grid count a full step
            if j == 0 || j + 1 == n {
                2.0 * w
            } else {
                w
            }
        })
        .collect()
}

/// Morlet transform `out_j = Σ_k exp(−(t_j−t_k)²/2μ²)·exp(iω0(t_j−t_k))·s_k·w_k`
/// with `w_k` the local sample spacing. No padding at the boundaries.
pub fn morlet_transform(s: &SampledSignal, p: &WaveletParams) -> Result<ComplexSeries> {
    morlet_transform_with(Exec::default(), s, p)
}

pub fn morlet_transform_with(
    exec: Exec,
    s: &SampledSignal,
    p: &WaveletParams,
) -> Result<ComplexSeries> {
    p.validate()?;
    let t = s.times();
    let v = s.values();
    let w = voronoi_widths(t);
    let weighted: Vec<f64> = v.iter().zip(&w).map(|(a, b)| a * b).collect();
    let inv = 1.0 / (2.0 * p.mu * p.mu);
    // beyond 40μ the Gaussian is below e^{−800}
    let reach = 40.0 * p.mu;
    let out = map_indices(exec, t.len(), |j| {
        let tj = t[j];
        let lo = t.partition_point(|&x| x < tj - reach);
        let hi = t.partition_point(|&x| x <= tj + reach);
        let mut acc = Complex64::new(0.0, 0.0);
        for k in lo..hi {
            let u = tj - t[k];
            acc += Complex64::from_polar((-u * u * inv).exp() * weighted[k], p.omega0 * u);
        }
        acc
    });
    ComplexSeries::new(s.grid().clone(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::TimeGrid;
    use proptest::prelude::*;

    fn periodic_grid(n: usize, duration: f64) -> TimeGrid {
        TimeGrid::uniform(0.0, duration / n as f64, n).unwrap()
    }

    fn dft(v: &[Complex64]) -> Vec<Complex64> {
        let mut buf = v.to_vec();
        FftPlanner::new().plan_fft_forward(v.len()).process(&mut buf);
        buf
    }

    #[test]
    fn cosine_becomes_complex_exponential() {
        let g = periodic_grid(512, 1.0);
        let w = 2.0 * PI * 3.0;
        let s = SampledSignal::new(g.clone(), g.points().iter().map(|t| (w * t).cos()).collect())
            .unwrap();
        let a = analytic_representation(&s).unwrap();
        for (z, &t) in a.values().iter().zip(g.points()) {
            assert!((z - Complex64::from_polar(1.0, w * t)).norm() < 1e-9);
        }
        let h = hilbert(&s).unwrap();
        for (x, &t) in h.values().iter().zip(g.points()) {
            assert!((x - (w * t).sin()).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_is_untouched() {
        let g = periodic_grid(100, 1.0);
        let s = SampledSignal::new(g, vec![1.0; 100]).unwrap();
        let a = analytic_representation(&s).unwrap();
        assert!(a.values().iter().all(|z| *z == Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn rejects_irregular_grid() {
        let g = TimeGrid::new(vec![0.0, 0.1, 0.25, 0.3]).unwrap();
        let s = SampledSignal::new(g, vec![1.0, 2.0, 0.0, 1.0]).unwrap();
        assert!(matches!(
            analytic_representation(&s),
            Err(Error::NonUniformGrid(_))
        ));
    }

    #[test]
    fn hilbert_twice_negates_zero_mean_signals() {
        let g = periodic_grid(256, 2.0);
        let v: Vec<f64> = g
            .points()
            .iter()
            .map(|&t| 0.7 + (2.0 * PI * 1.5 * t).sin() - 0.3 * (2.0 * PI * 11.0 * t + 0.4).cos())
            .collect();
        let s = SampledSignal::new(g, v.clone()).unwrap();
        let hh = hilbert(&hilbert(&s).unwrap()).unwrap();
        for (a, b) in hh.values().iter().zip(&v) {
            assert!((a - (-b + 0.7)).abs() < 1e-9);
        }
    }

    #[test]
    fn demo_signal_counterclockwise_part_leaks_to_negative_frequencies() {
        let (sigma, f0) = (0.15, 3.0);
        let n = 1024;
        let g = TimeGrid::uniform(-2.0, 4.0 / n as f64, n).unwrap();
        let s_plus: Vec<Complex64> = g
            .points()
            .iter()
            .map(|&t| Complex64::from_polar((-t.abs() / sigma).exp(), 2.0 * PI * f0 * t))
            .collect();
        let real = SampledSignal::new(g, s_plus.iter().map(|z| z.re).collect()).unwrap();
        let analytic = analytic_representation(&real).unwrap();
        let neg_max = |c: &[Complex64]| {
            c[n / 2 + 1..].iter().map(|z| z.norm()).fold(0.0, f64::max)
        };
        let pos_max = |c: &[Complex64]| c[1..n / 2].iter().map(|z| z.norm()).fold(0.0, f64::max);
        let cp = dft(&s_plus);
        let ca = dft(analytic.values());
        assert!(neg_max(&cp) > 1e-3 * pos_max(&cp));
        assert!(neg_max(&ca) < 1e-10 * pos_max(&ca));
    }

    #[test]
    fn wavelet_tone_at_center_has_flat_interior_modulus() {
        let p = WaveletParams::new(2.0 * PI * 2.0, 0.2).unwrap();
        let g = TimeGrid::uniform(0.0, 0.01, 400).unwrap();
        let s = SampledSignal::new(
            g.clone(),
            g.points().iter().map(|t| (p.omega0 * t).cos()).collect(),
        )
        .unwrap();
        let out = morlet_transform(&s, &p).unwrap();
        // closed form: half the tone at +ω0 with gain μ√(2π), plus the
        // negative-frequency leak exp(−2μ²ω0²)
        let expect = 0.5 * p.frequency_response(p.omega0);
        let leak = 0.5 * p.frequency_response(-p.omega0);
        for z in &out.values()[100..300] {
            assert!((z.norm() - expect).abs() <= leak + 1e-6 * expect);
            assert!((z.norm() - expect).abs() < 0.01 * expect);
            assert!((z.norm() * p.amplitude_scale() - 1.0).abs() < 0.01);
        }
        let zero = SampledSignal::new(g, vec![0.0; 400]).unwrap();
        assert!(morlet_transform(&zero, &p)
            .unwrap()
            .values()
            .iter()
            .all(|z| z.norm() == 0.0));
    }

    #[test]
    fn wavelet_row_spectrum_is_gaussian() {
        let p = WaveletParams::new(2.0 * PI * 4.0, 0.25).unwrap();
        let n = 2048;
        let dt = 0.005;
        let c = n / 2;
        // row c of the wavelet matrix, as a function of t_c − t_k
        let row: Vec<Complex64> = (0..n)
            .map(|k| {
                let u = (c as f64 - k as f64) * dt;
                Complex64::from_polar((-u * u / (2.0 * p.mu * p.mu)).exp() * dt, p.omega0 * u)
            })
            .collect();
        // reorder so lag u = m·dt sits at index m mod n
        let lagged: Vec<Complex64> = (0..n).map(|m| row[(c + n - m) % n]).collect();
        let spec = dft(&lagged);
        for k in 1..n / 2 {
            let xi = 2.0 * PI * k as f64 / (n as f64 * dt);
            let expect = p.frequency_response(xi);
            if expect > 1e-3 * p.frequency_response(p.omega0) {
                assert!(((spec[k].re - expect) / expect).abs() < 1e-6, "xi={xi}");
                assert!(spec[k].im.abs() < 1e-6 * expect);
            }
        }
    }

    #[test]
    fn wavelet_sequential_matches_parallel_on_irregular_grid() {
        let t: Vec<f64> = (0..150).map(|j| j as f64 * 0.01 + 0.003 * (j as f64).sin()).collect();
        let g = TimeGrid::new(t).unwrap();
        let s = SampledSignal::new(g.clone(), g.points().iter().map(|t| (9.0 * t).cos()).collect())
            .unwrap();
        let p = WaveletParams::new(9.0, 0.3).unwrap();
        let a = morlet_transform_with(Exec::Sequential, &s, &p).unwrap();
        let b = morlet_transform_with(Exec::Parallel, &s, &p).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn voronoi_widths_on_uniform_grid_equal_step() {
        let t: Vec<f64> = (0..10).map(|j| j as f64 * 0.25).collect();
        for w in voronoi_widths(&t) {
            assert!((w - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_wavelet_params() {
        assert!(WaveletParams::new(0.0, 0.2).is_err());
        assert!(WaveletParams::new(1.0, f64::INFINITY).is_err());
        assert!(WaveletParams::new(0.5, 0.5).is_ok());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn analytic_output_properties(
            coeffs in prop::collection::vec(-2.0f64..2.0, 6),
            n in 16usize..300,
        ) {
            let g = TimeGrid::uniform(0.0, 1.0 / n as f64, n).unwrap();
            let v: Vec<f64> = g.points().iter().enumerate().map(|(j, &t)| {
                coeffs[0] + coeffs[1] * (2.0 * PI * 2.0 * t).cos()
                    + coeffs[2] * (2.0 * PI * 5.0 * t).sin()
                    + coeffs[3] * (17.0 * t).sin()
                    + coeffs[4] * t * t
                    + coeffs[5] * ((j * 7919) % 13) as f64 / 13.0
            }).collect();
            let s = SampledSignal::new(g, v.clone()).unwrap();
            let a = analytic_representation(&s).unwrap();
            // real part preserved
            for (z, x) in a.values().iter().zip(&v) {
                prop_assert!((z.re - x).abs() < 1e-10);
            }
            // no negative-frequency content
            let c = dft(a.values());
            let pos = c[1..n.div_ceil(2)].iter().map(|z| z.norm()).fold(0.0, f64::max);
            let neg = c[n / 2 + 1..].iter().map(|z| z.norm()).fold(0.0, f64::max);
            prop_assert!(neg < 1e-10 * pos.max(1e-300) || pos == 0.0);
            // Parseval: analytic energy is twice the zero-mean energy, less
            // the Nyquist bin, which is kept once
            let mean = v.iter().sum::<f64>() / n as f64;
            let e_s: f64 = v.iter().map(|x| (x - mean).powi(2)).sum();
            let e_a: f64 = a.values().iter().map(|z| (z - mean).norm_sqr()).sum();
            let nyq = if n % 2 == 0 { c[n / 2].norm_sqr() / n as f64 } else { 0.0 };
            prop_assert!((e_a - (2.0 * e_s - nyq)).abs() < 1e-8 * e_s.max(1.0));
        }
    }
}
