//! Log returns, leave-one-out normalized returns and sample moments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::MarketClass;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    pub values: Vec<f64>,
    /// Horizon in days.
    pub horizon: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedReturns {
    pub values: Vec<f64>,
    /// Mean of the source returns over all observations.
    pub source_mean: f64,
    /// Leave-one-out volatility used for each observation.
    pub sigma_series: Vec<f64>,
}

/// Population moments; `kurtosis` is Pearson's α₄ (3 for a Gaussian).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub std: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

/// `ln p[t+h] − ln p[t]` for every admissible `t`.
pub fn log_returns(prices: &[f64], horizon: usize) -> Result<ReturnSeries> {
    let horizon = horizon.max(1);
    if prices.len() < horizon + 1 {
        return Err(Error::Length {
            needed: horizon + 1,
            got: prices.len(),
        });
    }
    if let Some((i, p)) = prices.iter().enumerate().find(|(_, p)| !(**p > 0.0)) {
        return Err(Error::Domain(format!("non-positive price {p} at index {i}")));
    }
    let logs: Vec<f64> = prices.iter().map(|p| p.ln()).collect();
    let values = logs.windows(horizon + 1).map(|w| w[horizon] - w[0]).collect();
    Ok(ReturnSeries { values, horizon })
}

/// One-day log returns of a row with gaps. Returns are formed only between
/// consecutive present days, so every gap drops its adjacent returns. The
/// second vector holds, for each return, the day index it ends on.
pub fn gapped_log_returns(row: &[Option<f64>]) -> (ReturnSeries, Vec<usize>) {
    let mut values = Vec::new();
    let mut ends = Vec::new();
    for (t, w) in row.windows(2).enumerate() {
        if let (Some(a), Some(b)) = (w[0], w[1]) {
            values.push(b.ln() - a.ln());
            ends.push(t + 1);
        }
    }
    (ReturnSeries { values, horizon: 1 }, ends)
}

/// Centers by the full-sample mean and divides each observation by the
/// standard deviation of the *other* observations (divisor T − 2).
pub fn normalize_returns(returns: &ReturnSeries) -> Result<NormalizedReturns> {
    let r = &returns.values;
    let n = r.len();
    if n < 3 {
        return Err(Error::Length { needed: 3, got: n });
    }
    if r.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("non-finite return".into()));
    }
    if r.iter().all(|x| *x == r[0]) {
        return Err(Error::DegenerateVariance("constant return series".into()));
    }
    let mean = r.iter().sum::<f64>() / n as f64;
    let sq: Vec<f64> = r.iter().map(|x| (x - mean).powi(2)).collect();
    // prefix[t] = Σ_{t' < t} sq; suffix sums avoid S − d_t² cancellation.
    let mut prefix = vec![0.0; n + 1];
    for t in 0..n {
        prefix[t + 1] = prefix[t] + sq[t];
    }
    let mut suffix = vec![0.0; n + 1];
    for t in (0..n).rev() {
        suffix[t] = suffix[t + 1] + sq[t];
    }
    let denom = (n - 2) as f64;
    let mut values = Vec::with_capacity(n);
    let mut sigma_series = Vec::with_capacity(n);
    for t in 0..n {
        let others = prefix[t] + suffix[t + 1];
        let sigma = (others / denom).sqrt();
        if !(sigma > 0.0) {
            return Err(Error::DegenerateVariance(format!(
                "leave-one-out volatility vanishes at t = {t}"
            )));
        }
        values.push((r[t] - mean) / sigma);
        sigma_series.push(sigma);
    }
    Ok(NormalizedReturns {
        values,
        source_mean: mean,
        sigma_series,
    })
}

pub fn moments(sample: &[f64]) -> Result<Moments> {
    let n = sample.len();
    if n < 4 {
        return Err(Error::Length { needed: 4, got: n });
    }
    let nf = n as f64;
    let mean = sample.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for x in sample {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    if !(m2 > 0.0) {
        return Err(Error::DegenerateVariance("constant sample".into()));
    }
    let std = m2.sqrt();
    Ok(Moments {
        mean,
        std,
        skewness: m3 / (m2 * std),
        kurtosis: m4 / (m2 * m2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupStat {
    pub count: usize,
    pub mean: f64,
    /// Population standard deviation (divisor n).
    pub sd: f64,
}

/// Mean ± sd of skewness per market class, in the order developed,
/// emerging, frontier. Classes with no members are `None`.
pub fn group_skewness(labeled: &[(MarketClass, f64)]) -> Vec<(MarketClass, Option<GroupStat>)> {
    MarketClass::ALL
        .iter()
        .map(|&class| {
            let xs: Vec<f64> = labeled.iter().filter(|(c, _)| *c == class).map(|(_, s)| *s).collect();
            if xs.is_empty() {
                return (class, None);
            }
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
            (
                class,
                Some(GroupStat {
                    count: xs.len(),
                    mean,
                    sd,
                }),
            )
        })
        .collect()
}
