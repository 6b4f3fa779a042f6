//! Detrended fluctuation analysis of price profiles and the variance ratio.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DfaResult {
    pub window_sizes: Vec<usize>,
    pub fluctuation: Vec<f64>,
    /// Slope of ln F(s) against ln s.
    pub exponent: f64,
    pub fit_r2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VrResult {
    pub lag: usize,
    pub vr: f64,
    pub mean_r: f64,
    pub var_r: f64,
}

/// What a price row is turned into before DFA.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DfaInput {
    /// ln P(t), used directly as the profile.
    #[default]
    LogPrice,
    /// P(t) itself.
    RawPrice,
}

pub fn dfa_profile(prices: &[f64], input: DfaInput) -> Vec<f64> {
    match input {
        DfaInput::LogPrice => prices.iter().map(|p| p.ln()).collect(),
        DfaInput::RawPrice => prices.to_vec(),
    }
}

/// 12 log-spaced integer window sizes in [10, n/4], deduplicated.
pub fn default_windows(n: usize) -> Result<Vec<usize>> {
    const LO: f64 = 10.0;
    const COUNT: usize = 12;
    let hi = (n / 4) as f64;
    if hi < LO {
        return Err(Error::Length { needed: 40, got: n });
    }
    let mut ws: Vec<usize> = (0..COUNT)
        .map(|k| (LO * (hi / LO).powf(k as f64 / (COUNT - 1) as f64)).round() as usize)
        .map(|s| s.min(n / 4))
        .collect();
    ws.dedup();
    Ok(ws)
}

/// Residual sum of squares after a least-squares line through `y`
/// against 0, 1, …, len − 1.
fn linear_rss(y: &[f64]) -> f64 {
    let s = y.len() as f64;
    let xm = (s - 1.0) / 2.0;
    let ym = y.iter().sum::<f64>() / s;
    let sxx = s * (s * s - 1.0) / 12.0;
    let sxy: f64 = y.iter().enumerate().map(|(i, v)| (i as f64 - xm) * (v - ym)).sum();
    let slope = sxy / sxx;
    y.iter()
        .enumerate()
        .map(|(i, v)| {
            let r = v - ym - slope * (i as f64 - xm);
            r * r
        })
        .sum()
}

/// First-order DFA with windows laid from both ends of the profile.
pub fn dfa(profile: &[f64], window_sizes: &[usize]) -> Result<DfaResult> {
    let mut sizes = window_sizes.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    let max_s = *sizes
        .last()
        .ok_or_else(|| Error::Config("no DFA window sizes".into()))?;
    if let Some(&s) = sizes.iter().find(|&&s| s < 4) {
        return Err(Error::Config(format!("DFA window size {s} below 4")));
    }
    let n = profile.len();
    if n < 4 * max_s {
        return Err(Error::Length {
            needed: 4 * max_s,
            got: n,
        });
    }
    if profile.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("non-finite profile value".into()));
    }
    let magnitude = profile.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let tolerance = 1e-9 * magnitude;

    let mut fluctuation = Vec::with_capacity(sizes.len());
    for &s in &sizes {
        let windows = n / s;
        let mut rss = 0.0;
        for k in 0..windows {
            rss += linear_rss(&profile[k * s..(k + 1) * s]);
        }
        for k in 0..windows {
            let end = n - k * s;
            rss += linear_rss(&profile[end - s..end]);
        }
        let f = (rss / (2 * windows * s) as f64).sqrt();
        if !(f > tolerance) {
            return Err(Error::DegenerateDetrend(s));
        }
        fluctuation.push(f);
    }
    let log_s: Vec<f64> = sizes.iter().map(|&s| (s as f64).ln()).collect();
    let log_f: Vec<f64> = fluctuation.iter().map(|f| f.ln()).collect();
    let (exponent, fit_r2) = if sizes.len() >= 2 {
        let fit = stats::linear_fit(&log_s, &log_f)?;
        (fit.slope, fit.r2)
    } else {
        return Err(Error::Config("DFA needs at least two window sizes".into()));
    };
    Ok(DfaResult {
        window_sizes: sizes,
        fluctuation,
        exponent,
        fit_r2,
    })
}

/// Variance ratio of a return series at lag `l`:
///
/// `VR(l) = Σ_{k=l}^{T} (Σ_{t=k−l}^{k−1} R_t − l μ)² / [σ² l (T − l + 1)(1 − l/T)]`
///
/// with zero-based `R_t`, and μ, σ² the population mean and variance.
pub fn variance_ratio(returns: &[f64], lag: usize) -> Result<VrResult> {
    let t = returns.len();
    if lag < 2 || lag > t / 2 {
        return Err(Error::Lag { lag, max: t / 2 });
    }
    if returns.iter().all(|x| *x == returns[0]) {
        return Err(Error::DegenerateVariance("constant return series".into()));
    }
    let mean = stats::mean(returns);
    let centered: Vec<f64> = returns.iter().map(|r| r - mean).collect();
    let var = centered.iter().map(|d| d * d).sum::<f64>() / t as f64;
    if !(var > 0.0) {
        return Err(Error::DegenerateVariance("zero return variance".into()));
    }
    let numerator: f64 = centered
        .windows(lag)
        .map(|w| {
            let s: f64 = w.iter().sum();
            s * s
        })
        .sum();
    let (tf, lf) = (t as f64, lag as f64);
    let denominator = var * lf * (tf - lf + 1.0) * (1.0 - lf / tf);
    Ok(VrResult {
        lag,
        vr: numerator / denominator,
        mean_r: mean,
        var_r: var,
    })
}
