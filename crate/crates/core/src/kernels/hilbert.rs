//! Hilbert transforms of real kernels: DFT-based tables and closed forms.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::real::RealKernelSpec;
use crate::error::{Error, Result};

/// Discrete Hilbert transform of a periodic sequence: each DFT coefficient at
/// frequency ξ is multiplied by `−i·sgn(ξ)`. DC and (for even lengths) the
/// Nyquist bin are zeroed.
pub fn hilbert_of_samples(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    for (k, c) in buf.iter_mut().enumerate() {
        let sign = if k == 0 || (n.is_multiple_of(2) && k == half) {
            0.0
        } else if k <= (n - 1) / 2 {
            1.0
        } else {
            -1.0
        };
        *c *= Complex64::new(0.0, -sign);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter()
        .map(|c| {
            // the imaginary residue is rounding noise for real input
            debug_assert!(c.im.abs() * scale < 1e-8 * (1.0 + c.re.abs() * scale));
            c.re * scale
        })
        .collect()
}

fn check_lag_grid(lags: &[f64]) -> Result<f64> {
    if lags.len() < 4 {
        return Err(Error::InvalidGrid(format!(
            "lag grid needs at least 4 points, got {}",
            lags.len()
        )));
    }
    let n = lags.len();
    let dt = (lags[n - 1] - lags[0]) / (n - 1) as f64;
    let dev = lags
        .windows(2)
        .map(|w| ((w[1] - w[0]) - dt).abs())
        .fold(0.0, f64::max);
    if !(dt > 0.0) || dev > 1e-9 * dt {
        return Err(Error::NonUniformGrid(dev));
    }
    // symmetric either as a closed interval [−L, L] or as a DFT period [−L, L)
    let closed = (lags[0] + lags[n - 1]).abs();
    let periodic = (lags[0] + lags[n - 1] + dt).abs();
    if closed.min(periodic) > 1e-9 * dt {
        return Err(Error::InvalidGrid("lag grid is not symmetric about 0".into()));
    }
    Ok(dt)
}

/// Numerical Hilbert transform of `spec` sampled on a uniform lag grid
/// symmetric about zero.
///
/// Periodic kernels should be sampled over an integer number of periods, in
/// which case the DFT result is exact up to harmonic truncation. For the
/// aperiodic squared-exponential kernel the outer 10% of the span on each side
/// is cosine-tapered before the transform.
pub fn hilbert_of_kernel(spec: &RealKernelSpec, lags: &[f64]) -> Result<Vec<f64>> {
    check_lag_grid(lags)?;
    let mut samples: Vec<f64> = lags.iter().map(|&t| spec.eval(t)).collect();
    if spec.period().is_none() {
        apply_edge_taper(lags, &mut samples, 0.1);
    }
    Ok(hilbert_of_samples(&samples))
}

fn apply_edge_taper(lags: &[f64], samples: &mut [f64], frac: f64) {
    let half_span = lags[lags.len() - 1].abs().max(lags[0].abs());
    let start = (1.0 - frac) * half_span;
    for (t, s) in lags.iter().zip(samples.iter_mut()) {
        let a = t.abs();
        if a > start {
            let x = ((a - start) / (half_span - start)).min(1.0);
            *s *= 0.5 * (1.0 + (PI * x).cos());
        }
    }
}

/// Precomputed ℋk on `[−L, L)` with cubic interpolation between nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct LagTable {
    half_span: f64,
    usable_span: f64,
    dt: f64,
    values: Vec<f64>,
}

impl LagTable {
    /// Builds a table covering at least `lag_span` seconds on each side with
    /// `n_lags` nodes (rounded up to an even count). Periodic kernels get the
    /// span rounded up to a whole number of periods.
    pub fn build(spec: &RealKernelSpec, lag_span: f64, n_lags: usize) -> Result<Self> {
        if !(lag_span > 0.0) || !lag_span.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lag_span must be positive, got {lag_span}"
            )));
        }
        if n_lags < 16 {
            return Err(Error::InvalidParameter(format!(
                "n_lags must be at least 16, got {n_lags}"
            )));
        }
        let n = n_lags + n_lags % 2;
        let half_span = match spec.period() {
            Some(p) => {
                let periods = ((2.0 * lag_span) / p).ceil().max(1.0);
                0.5 * periods * p
            }
            None => {
                let RealKernelSpec::SquaredExponential { time_scale } = *spec else {
                    unreachable!()
                };
                // aperiodic: cover the requested lags plus 8 time scales of
                // decay before the tapered edge
                lag_span.max(8.0 * time_scale) / 0.9 + 8.0 * time_scale
            }
        };
        let dt = 2.0 * half_span / n as f64;
        let lags: Vec<f64> = (0..n).map(|j| -half_span + j as f64 * dt).collect();
        let values = hilbert_of_kernel(spec, &lags)?;
        Ok(Self {
            half_span,
            usable_span: lag_span,
            dt,
            values,
        })
    }

    pub fn span(&self) -> f64 {
        self.usable_span
    }

    pub fn step(&self) -> f64 {
        self.dt
    }

    /// ℋk(τ) for `|τ| ≤ span()`; odd symmetry is imposed exactly.
    pub fn eval(&self, tau: f64) -> Result<f64> {
        if !(tau.abs() <= self.usable_span) {
            return Err(Error::LagOutOfSpan {
                lag: tau,
                span: self.usable_span,
            });
        }
        let a = tau.abs();
        let v = self.interp(a);
        Ok(if tau < 0.0 { -v } else { v })
    }

    fn interp(&self, tau: f64) -> f64 {
        let n = self.values.len() as isize;
        let x = (tau + self.half_span) / self.dt;
        let i = x.floor();
        let f = x - i;
        let i = i as isize;
        let at = |k: isize| self.values[k.rem_euclid(n) as usize];
        let (p0, p1, p2, p3) = (at(i - 1), at(i), at(i + 1), at(i + 2));
        // four-point cubic Lagrange interpolation
        let c0 = -f * (f - 1.0) * (f - 2.0) / 6.0;
        let c1 = (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0;
        let c2 = -(f + 1.0) * f * (f - 2.0) / 2.0;
        let c3 = (f + 1.0) * f * (f - 1.0) / 6.0;
        c0 * p0 + c1 * p1 + c2 * p2 + c3 * p3
    }
}

/// Dawson's integral `F(x) = e^{−x²}∫_0^x e^{t²} dt`, via Rybicki's
/// exponentially convergent sum with step 0.1.
pub fn dawson(x: f64) -> f64 {
    const H: f64 = 0.1;
    const NMAX: usize = 36;
    let ax = x.abs();
    if ax < 1e-4 {
        let x2 = x * x;
        return x * (1.0 - 2.0 / 3.0 * x2 * (1.0 - 0.4 * x2));
    }
    if ax > 1e7 {
        return 0.5 / x;
    }
    let n0 = 2.0 * (0.5 * ax / H).round();
    let xp = ax - n0 * H;
    let mut e1 = (2.0 * xp * H).exp();
    let e2 = e1 * e1;
    let mut d1 = n0 + 1.0;
    let mut d2 = d1 - 2.0;
    let mut sum = 0.0;
    for i in 1..=NMAX {
        let c = (-((2.0 * i as f64 - 1.0) * H).powi(2)).exp();
        sum += c * (e1 / d1 + 1.0 / (d2 * e1));
        d1 += 2.0;
        d2 -= 2.0;
        e1 *= e2;
    }
    (-xp * xp).exp() * sum / PI.sqrt() * x.signum()
}

/// Closed-form ℋ of `exp(−τ²/2ℓ²)`: `(2/√π)·F(τ/(√2ℓ))`.
pub fn hilbert_squared_exponential(time_scale: f64, tau: f64) -> f64 {
    2.0 / PI.sqrt() * dawson(tau / (2.0_f64.sqrt() * time_scale))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn periodic_lags(period: f64, periods: usize, n: usize) -> Vec<f64> {
        let half = 0.5 * period * periods as f64;
        let dt = 2.0 * half / n as f64;
        (0..n).map(|j| -half + j as f64 * dt).collect()
    }

    #[test]
    fn cosine_maps_to_sine() {
        let w = 2.0 * PI * 3.0;
        let lags = periodic_lags(2.0 * PI / w, 4, 512);
        let h = hilbert_of_kernel(&RealKernelSpec::Cosine { omega0: w }, &lags).unwrap();
        for (t, v) in lags.iter().zip(&h) {
            assert!((v - (w * t).sin()).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_maps_to_zero() {
        let h = hilbert_of_samples(&[1.0; 64]);
        assert!(h.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn periodic_kernel_transform_is_odd() {
        let w = 2.0 * PI * 3.0;
        let spec = RealKernelSpec::Periodic { omega0: w, rho: 0.5 };
        let n = 1024;
        let lags = periodic_lags(2.0 * PI / w, 2, n);
        let h = hilbert_of_kernel(&spec, &lags).unwrap();
        // index n/2 is τ = 0; n/2 ± m are ∓τ
        for m in 0..n / 2 {
            assert!((h[n / 2 + m] + h[n / 2 - m]).abs() < 1e-10);
        }
        // agrees with the closed-form harmonic sine series
        let wts = super::super::real::periodic_harmonic_weights(0.5);
        for (t, v) in lags.iter().zip(&h) {
            let series: f64 = wts
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, wk)| 2.0 * wk * (k as f64 * w * t).sin())
                .sum();
            assert!((series - v).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_lag_grids() {
        let spec = RealKernelSpec::Cosine { omega0: 1.0 };
        assert!(matches!(
            hilbert_of_kernel(&spec, &[-1.0, -0.5, 0.0, 0.7, 1.0]),
            Err(Error::NonUniformGrid(_))
        ));
        assert!(hilbert_of_kernel(&spec, &[0.0, 1.0, 2.0, 3.0]).is_err());
        assert!(hilbert_of_kernel(&spec, &[-1.5, -0.5, 0.5, 1.5]).is_ok());
    }

    /// Dawson oracle: Simpson quadrature of e^{t²} on [0, x].
    fn dawson_quadrature(x: f64) -> f64 {
        let n = 20_000;
        let h = x / n as f64;
        let mut s = 0.0;
        for i in 0..=n {
            let t = i as f64 * h;
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            s += w * (t * t - x * x).exp();
        }
        s * h / 3.0
    }

    #[test]
    fn dawson_matches_quadrature() {
        for x in [1e-5, 0.05, 0.2, 0.5, 0.9241, 1.0, 1.7, 3.0] {
            let q = dawson_quadrature(x);
            assert!((dawson(x) - q).abs() < 1e-13, "x={x}: {} vs {q}", dawson(x));
            assert_eq!(dawson(-x), -dawson(x));
        }
        // reference values from an independent double-precision implementation
        for (x, f) in [
            (0.05, 0.04991674994050922),
            (0.9241, 0.5410442238175845),
            (3.0, 0.17827103061055827),
            (5.5, 0.09249323231075478),
            (9.0, 0.05590504672435046),
        ] {
            assert!((dawson(x) - f).abs() < 2e-15, "x={x}");
        }
        // large-argument asymptotics
        let x: f64 = 200.0;
        let asym = 0.5 / x + 0.25 / x.powi(3) + 0.375 / x.powi(5);
        assert!((dawson(x) - asym).abs() < 1e-14);
    }

    #[test]
    fn squared_exponential_closed_form_matches_dft() {
        let l = 0.1;
        let n = 1 << 16;
        let half = 400.0 * l;
        let dt = 2.0 * half / n as f64;
        let lags: Vec<f64> = (0..n).map(|j| -half + j as f64 * dt).collect();
        let h = hilbert_of_kernel(&RealKernelSpec::SquaredExponential { time_scale: l }, &lags)
            .unwrap();
        for m in [0usize, 1, 10, 50, 200, 1000] {
            let j = n / 2 + m;
            let exact = hilbert_squared_exponential(l, lags[j]);
            // DFT wrap-around of the slowly decaying 1/τ tail limits agreement
            assert!((h[j] - exact).abs() < 1e-3, "m={m}: {} vs {exact}", h[j]);
        }
    }

    #[test]
    fn lag_table_interpolates_and_enforces_span() {
        let w = 2.0 * PI * 2.0;
        let spec = RealKernelSpec::Cosine { omega0: w };
        let table = LagTable::build(&spec, 2.0, 4096).unwrap();
        for tau in [-1.93, -0.4, 0.0, 0.0123, 0.77, 2.0] {
            let v = table.eval(tau).unwrap();
            assert!((v - (w * tau).sin()).abs() < 1e-6, "tau={tau}");
        }
        assert!(matches!(
            table.eval(2.5),
            Err(Error::LagOutOfSpan { .. })
        ));
        assert_eq!(table.eval(-0.3).unwrap(), -table.eval(0.3).unwrap());
    }
}
