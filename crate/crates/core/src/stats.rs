//! Error metrics and the Wilcoxon signed-rank test.

use serde::Serialize;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Minimum number of nonzero differences for the signed-rank test.
pub const WILCOXON_MIN_N: usize = 10;

/// Mean of `|estimate − truth|` over points where `mask` is set (all points
/// when `mask` is `None`).
pub fn mad(estimate: &[f64], truth: &[f64], mask: Option<&[bool]>) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::LengthMismatch {
            expected: truth.len(),
            got: estimate.len(),
        });
    }
    if let Some(m) = mask {
        if m.len() != truth.len() {
            return Err(Error::LengthMismatch {
                expected: truth.len(),
                got: m.len(),
            });
        }
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for j in 0..truth.len() {
        if mask.is_none_or(|m| m[j]) {
            sum += (estimate[j] - truth[j]).abs();
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::InsufficientData("empty mask".into()));
    }
    Ok(sum / count as f64)
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WilcoxonResult {
    /// `min(W+, W−)`.
    pub statistic: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    /// Nonzero differences used.
    pub n: usize,
    pub p_value: f64,
}

/// Average ranks of `|d|` (1-based) and the tie-group sizes.
fn signed_ranks(diffs: &[f64]) -> (Vec<(f64, bool)>, Vec<usize>) {
    let mut nz: Vec<f64> = diffs.iter().cloned().filter(|&d| d != 0.0).collect();
    nz.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    let mut ranked = Vec::with_capacity(nz.len());
    let mut ties = Vec::new();
    let mut i = 0;
    while i < nz.len() {
        let mut j = i + 1;
        while j < nz.len() && nz[j].abs() == nz[i].abs() {
            j += 1;
        }
        let rank = 0.5 * ((i + 1) + j) as f64;
        for d in &nz[i..j] {
            ranked.push((rank, *d > 0.0));
        }
        ties.push(j - i);
        i = j;
    }
    (ranked, ties)
}

fn rank_sums(ranked: &[(f64, bool)]) -> (f64, f64) {
    ranked.iter().fold((0.0, 0.0), |(p, m), &(r, pos)| {
        if pos {
            (p + r, m)
        } else {
            (p, m + r)
        }
    })
}

/// Two-sided signed-rank test on paired differences, normal approximation
/// with tie and continuity correction. Zero differences are dropped.
pub fn wilcoxon_signed_rank(diffs: &[f64]) -> Result<WilcoxonResult> {
    if let Some(i) = diffs.iter().position(|d| !d.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let (ranked, ties) = signed_ranks(diffs);
    let n = ranked.len();
    if n < WILCOXON_MIN_N {
        return Err(Error::InsufficientData(format!(
            "signed-rank test needs at least {WILCOXON_MIN_N} nonzero differences, got {n}"
        )));
    }
    let (w_plus, w_minus) = rank_sums(&ranked);
    let t = w_plus.min(w_minus);
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_term: f64 = ties.iter().map(|&c| (c * c * c - c) as f64).sum::<f64>() / 48.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
    let d = t - mean;
    let d = d - 0.5 * d.signum();
    let p = if var > 0.0 {
        let z = d / var.sqrt();
        erfc(z.abs() / std::f64::consts::SQRT_2)
    } else {
        1.0
    };
    Ok(WilcoxonResult {
        statistic: t,
        w_plus,
        w_minus,
        n,
        p_value: p.clamp(0.0, 1.0),
    })
}

/// Exact two-sided p-value of the signed-rank statistic under the
/// permutation null, for small samples (ties handled through half ranks).
pub fn wilcoxon_exact_p(diffs: &[f64]) -> Result<f64> {
    let (ranked, _) = signed_ranks(diffs);
    let n = ranked.len();
    if n == 0 {
        return Err(Error::InsufficientData("no nonzero differences".into()));
    }
    if n > 60 {
        return Err(Error::InvalidParameter(format!(
            "exact signed-rank distribution limited to 60 differences, got {n}"
        )));
    }
    // doubled ranks are integers
    let r2: Vec<usize> = ranked.iter().map(|&(r, _)| (2.0 * r).round() as usize).collect();
    let total: usize = r2.iter().sum();
    let mut counts = vec![0f64; total + 1];
    counts[0] = 1.0;
    for &r in &r2 {
        for s in (r..=total).rev() {
            counts[s] += counts[s - r];
        }
    }
    let (wp, wm) = rank_sums(&ranked);
    let t2 = (2.0 * wp.min(wm)).round() as usize;
    let all = 2f64.powi(n as i32);
    let lower: f64 = counts[..=t2].iter().sum::<f64>() / all;
    Ok((2.0 * lower).min(1.0))
}
