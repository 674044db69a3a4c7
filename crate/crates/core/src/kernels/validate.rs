use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use super::{gram, ComplexKernel};
use crate::error::{Error, Result};
use crate::signals::TimeGrid;

/// Residuals from checking that a complex kernel is a valid covariance
/// function on a given grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    /// `max |k(−τ) − conj k(τ)|` over all pairwise lags.
    pub hermitian_residual: f64,
    /// `max |ℜk(−τ) − ℜk(τ)|`.
    pub real_even_residual: f64,
    /// `max |ℑk(−τ) + ℑk(τ)|`.
    pub imag_odd_residual: f64,
    /// Smallest over largest eigenvalue of the Hermitian part of the Gram.
    pub gram_min_eig_rel: f64,
    /// Smallest over largest eigenvalue of the real part of the Gram.
    pub real_gram_min_eig_rel: f64,
    pub tol: f64,
    pub passes: bool,
}

impl ValidationReport {
    /// Named residuals paired with whether each is within tolerance.
    pub fn rows(&self) -> Vec<(&'static str, f64, bool)> {
        let t = self.tol;
        vec![
            ("hermitian", self.hermitian_residual, self.hermitian_residual <= t),
            ("real_even", self.real_even_residual, self.real_even_residual <= t),
            ("imag_odd", self.imag_odd_residual, self.imag_odd_residual <= t),
            ("gram_min_eig_rel", self.gram_min_eig_rel, self.gram_min_eig_rel >= -t),
            (
                "real_gram_min_eig_rel",
                self.real_gram_min_eig_rel,
                self.real_gram_min_eig_rel >= -t,
            ),
        ]
    }
}

fn min_over_max(eigs: &[f64]) -> f64 {
    let max = eigs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    if max > 0.0 {
        min / max
    } else {
        min
    }
}

/// Check Hermitian symmetry, parity of the real and imaginary parts, and
/// positive semi-definiteness of the Gram matrices on `grid`.
pub fn validate_kernel(k: &ComplexKernel, grid: &TimeGrid, tol: f64) -> Result<ValidationReport> {
    if grid.len() < 8 {
        return Err(Error::InsufficientData(format!(
            "kernel validation needs at least 8 grid points, got {}",
            grid.len()
        )));
    }
    let t = grid.points();
    let mut herm = 0.0f64;
    let mut even = 0.0f64;
    let mut odd = 0.0f64;
    for (j, &tj) in t.iter().enumerate() {
        for &tl in &t[j..] {
            let tau = tl - tj;
            let pos = k.eval(tau)?;
            let neg = k.eval(-tau)?;
            herm = herm.max((neg - pos.conj()).norm());
            even = even.max((neg.re - pos.re).abs());
            odd = odd.max((neg.im + pos.im).abs());
        }
    }

    let g = gram(k, t, t)?;
    let h: DMatrix<Complex64> = (&g + g.adjoint()).map(|z| z * 0.5);
    let eig_h = SymmetricEigen::new(h).eigenvalues;
    let re = g.map(|z| z.re);
    let re_sym = (&re + re.transpose()) * 0.5;
    let eig_r = SymmetricEigen::new(re_sym).eigenvalues;

    let gram_rel = min_over_max(eig_h.as_slice());
    let real_rel = min_over_max(eig_r.as_slice());
    let passes = herm <= tol && even <= tol && odd <= tol && gram_rel >= -tol && real_rel >= -tol;
    Ok(ValidationReport {
        hermitian_residual: herm,
        real_even_residual: even,
        imag_odd_residual: odd,
        gram_min_eig_rel: gram_rel,
        real_gram_min_eig_rel: real_rel,
        tol,
        passes,
    })
}
