//! Empirical CCDFs and one-sided continuous power-law tail fits.
//!
//! A tail fit on magnitudes `x ≥ x_min` uses the closed-form maximum
//! likelihood estimate `γ = 1 + n / Σ ln(x_i / x_min)` for the PDF exponent;
//! the CCDF exponent is `α = γ − 1`. The cutoff is either the candidate that
//! minimises the Kolmogorov–Smirnov distance between the tail and the fitted
//! law, or a fixed sample quantile.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{self, quantile_sorted};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Positive,
    Negative,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Positive => "positive",
            Side::Negative => "negative",
        }
    }
}

/// Complementary CDF evaluated at each distinct sample value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ccdf {
    /// `(x, P_c(x))` with `x` ascending and `P_c(x) = #{samples ≥ x} / n`.
    pub points: Vec<(f64, f64)>,
}

impl Ccdf {
    /// At most `max_points` points, evenly spaced in log rank from the far
    /// tail; always keeps the first and last point.
    pub fn thinned(&self, max_points: usize) -> Ccdf {
        let n = self.points.len();
        if n <= max_points || max_points < 2 {
            return self.clone();
        }
        let mut keep: Vec<usize> = (0..max_points)
            .map(|k| {
                let from_end = (n as f64).powf(k as f64 / (max_points - 1) as f64).round() as usize;
                n - from_end.clamp(1, n)
            })
            .collect();
        keep.sort_unstable();
        keep.dedup();
        Ccdf {
            points: keep.into_iter().map(|i| self.points[i]).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub side: Side,
    pub x_min: f64,
    /// PDF exponent γ.
    pub gamma: f64,
    /// CCDF exponent α = γ − 1.
    pub alpha: f64,
    pub n_tail: usize,
    pub ks: f64,
    pub stderr: f64,
}

impl TailFit {
    /// CCDF exponent at or below 2: the Lévy-stable regime.
    pub fn is_levy_stable(&self) -> bool {
        self.alpha <= 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XminMode {
    #[default]
    /// Scan candidate cutoffs and keep the minimum-KS fit.
    KsScan,
    /// Fixed cutoff at this sample quantile of the magnitudes.
    Quantile(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TailOptions {
    /// Minimum number of samples at or above the cutoff.
    pub min_tail: usize,
    /// Cap on the number of scanned cutoff candidates.
    pub max_candidates: usize,
    /// Minimum number of positive samples before a scan is attempted.
    pub min_samples: usize,
    pub mode: XminMode,
}

impl Default for TailOptions {
    fn default() -> Self {
        TailOptions {
            min_tail: 50,
            max_candidates: 500,
            min_samples: 100,
            mode: XminMode::KsScan,
        }
    }
}

pub fn empirical_ccdf(samples: &[f64]) -> Result<Ccdf> {
    if samples.is_empty() {
        return Err(Error::Length { needed: 1, got: 0 });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut points = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        points.push((sorted[i], (sorted.len() - i) as f64 / n));
        let x = sorted[i];
        while i < sorted.len() && sorted[i] == x {
            i += 1;
        }
    }
    Ok(Ccdf { points })
}

/// Maximum-likelihood fit of the samples at or above `x_min`.
pub fn fit_tail_mle(samples: &[f64], x_min: f64, min_tail: usize) -> Result<TailFit> {
    if !(x_min > 0.0) {
        return Err(Error::Domain(format!("x_min must be positive, got {x_min}")));
    }
    let mut sorted: Vec<f64> = samples.iter().copied().filter(|x| *x >= x_min).collect();
    sorted.sort_by(f64::total_cmp);
    fit_sorted_tail(&sorted, x_min, min_tail, Side::Positive)
}

/// Fit over an ascending slice that contains only the tail.
fn fit_sorted_tail(tail: &[f64], x_min: f64, min_tail: usize, side: Side) -> Result<TailFit> {
    let n = tail.len();
    if n < min_tail.max(1) {
        return Err(Error::Sparsity {
            needed: min_tail.max(1),
            got: n,
        });
    }
    let log_sum: f64 = tail.iter().map(|x| (x / x_min).ln()).sum();
    if !(log_sum > 0.0) {
        return Err(Error::DivergentExponent);
    }
    let nf = n as f64;
    let gamma = 1.0 + nf / log_sum;
    let alpha = gamma - 1.0;
    let mut ks: f64 = 0.0;
    let mut i = 0;
    while i < n {
        let x = tail[i];
        let mut j = i;
        while j < n && tail[j] == x {
            j += 1;
        }
        let model_cdf = 1.0 - (x / x_min).powf(-alpha);
        let below = i as f64 / nf;
        let through = j as f64 / nf;
        ks = ks.max((model_cdf - below).abs()).max((model_cdf - through).abs());
        i = j;
    }
    Ok(TailFit {
        side,
        x_min,
        gamma,
        alpha,
        n_tail: n,
        ks: ks.min(1.0),
        stderr: alpha / nf.sqrt(),
    })
}

/// Every admissible cutoff candidate with its fit, in ascending `x_min`.
pub fn scan_xmin(samples: &[f64], opts: &TailOptions) -> Result<Vec<TailFit>> {
    let mut sorted: Vec<f64> = samples.iter().copied().filter(|x| *x > 0.0).collect();
    if sorted.len() < opts.min_samples {
        return Err(Error::Sparsity {
            needed: opts.min_samples,
            got: sorted.len(),
        });
    }
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let min_tail = opts.min_tail.max(2);
    // Start index of each distinct value leaving at least `min_tail` samples.
    let mut starts = Vec::new();
    let mut i = 0;
    while i < n && n - i >= min_tail {
        starts.push(i);
        let x = sorted[i];
        while i < n && sorted[i] == x {
            i += 1;
        }
    }
    if starts.len() > opts.max_candidates && opts.max_candidates >= 2 {
        let m = starts.len();
        let k = opts.max_candidates;
        let mut picked: Vec<usize> = (0..k)
            .map(|j| starts[(j as f64 * (m - 1) as f64 / (k - 1) as f64).round() as usize])
            .collect();
        picked.dedup();
        starts = picked;
    }
    let fits: Vec<TailFit> = starts
        .iter()
        .filter_map(|&s| fit_sorted_tail(&sorted[s..], sorted[s], min_tail, Side::Positive).ok())
        .collect();
    if fits.is_empty() {
        return Err(Error::Sparsity {
            needed: min_tail,
            got: n,
        });
    }
    Ok(fits)
}

/// Cutoff minimising the KS distance; ties go to the smaller cutoff.
pub fn select_xmin(samples: &[f64], opts: &TailOptions) -> Result<(f64, TailFit)> {
    let fits = scan_xmin(samples, opts)?;
    let best = fits
        .iter()
        .copied()
        .reduce(|best, f| if f.ks < best.ks { f } else { best })
        .expect("scan_xmin never returns an empty list");
    Ok((best.x_min, best))
}

/// Tail magnitudes of one side: `{r : r > 0}` or `{−r : r < 0}`.
pub fn side_magnitudes(r: &[f64], side: Side) -> Vec<f64> {
    match side {
        Side::Positive => r.iter().copied().filter(|x| *x > 0.0).collect(),
        Side::Negative => r.iter().filter(|x| **x < 0.0).map(|x| -x).collect(),
    }
}

/// Fits one tail of a return sample with the configured cutoff rule.
pub fn fit_side(r: &[f64], side: Side, opts: &TailOptions) -> Result<TailFit> {
    let mags = side_magnitudes(r, side);
    let fit = match opts.mode {
        XminMode::KsScan => select_xmin(&mags, opts)?.1,
        XminMode::Quantile(q) => {
            if !(0.0..1.0).contains(&q) {
                return Err(Error::Config(format!("x_min quantile must lie in [0, 1), got {q}")));
            }
            if mags.len() < opts.min_samples {
                return Err(Error::Sparsity {
                    needed: opts.min_samples,
                    got: mags.len(),
                });
            }
            let mut sorted = mags.clone();
            sorted.sort_by(f64::total_cmp);
            let x_min = quantile_sorted(&sorted, q);
            let start = sorted.partition_point(|x| *x < x_min);
            fit_sorted_tail(&sorted[start..], x_min, opts.min_tail, Side::Positive)?
        }
    };
    Ok(TailFit { side, ..fit })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentSummary {
    pub n: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
    pub histogram: Vec<HistogramBin>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailExponentSummary {
    pub positive: ExponentSummary,
    pub negative: ExponentSummary,
}

/// Median (midpoint for even counts), quartiles and an equal-width
/// histogram of exponents.
pub fn summarize_exponents(gammas: &[f64], bins: usize) -> Result<ExponentSummary> {
    if gammas.is_empty() {
        return Err(Error::Length { needed: 1, got: 0 });
    }
    let mut sorted = gammas.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (min, max) = (sorted[0], sorted[sorted.len() - 1]);
    let bins = bins.max(1);
    let width = (max - min) / bins as f64;
    let mut histogram: Vec<HistogramBin> = (0..bins)
        .map(|b| HistogramBin {
            lo: min + b as f64 * width,
            hi: if b + 1 == bins {
                max
            } else {
                min + (b + 1) as f64 * width
            },
            count: 0,
        })
        .collect();
    for g in &sorted {
        let b = if width > 0.0 {
            (((g - min) / width) as usize).min(bins - 1)
        } else {
            0
        };
        histogram[b].count += 1;
    }
    Ok(ExponentSummary {
        n: sorted.len(),
        median: quantile_sorted(&sorted, 0.5),
        q1: quantile_sorted(&sorted, 0.25),
        q3: quantile_sorted(&sorted, 0.75),
        min,
        max,
        histogram,
    })
}

pub fn tail_exponent_summary(fits: &[TailFit], bins: usize) -> Result<TailExponentSummary> {
    let side = |s: Side| -> Vec<f64> { fits.iter().filter(|f| f.side == s).map(|f| f.gamma).collect() };
    Ok(TailExponentSummary {
        positive: summarize_exponents(&side(Side::Positive), bins)?,
        negative: summarize_exponents(&side(Side::Negative), bins)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KurtosisPair {
    pub code: String,
    pub gamma: f64,
    pub alpha4: f64,
}

/// `α₄ = exp[(γ / A)^(−β)]`, fitted as a line of `ln ln α₄` on `ln γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KurtosisExponentFit {
    pub a: f64,
    pub beta: f64,
    pub rho: f64,
    pub p: f64,
    pub n: usize,
}

impl KurtosisExponentFit {
    pub fn predict(&self, gamma: f64) -> f64 {
        (gamma / self.a).powf(-self.beta).exp()
    }
}

pub fn fit_kurtosis_exponent_relation(pairs: &[KurtosisPair]) -> Result<KurtosisExponentFit> {
    if pairs.len() < 3 {
        return Err(Error::Length {
            needed: 3,
            got: pairs.len(),
        });
    }
    for p in pairs {
        if !(p.alpha4 > 1.0) {
            return Err(Error::Domain(format!(
                "kurtosis {} of {} is not above 1",
                p.alpha4, p.code
            )));
        }
        if !(p.gamma > 0.0) {
            return Err(Error::Domain(format!(
                "exponent {} of {} is not positive",
                p.gamma, p.code
            )));
        }
    }
    let x: Vec<f64> = pairs.iter().map(|p| p.gamma.ln()).collect();
    let y: Vec<f64> = pairs.iter().map(|p| p.alpha4.ln().ln()).collect();
    let fit = stats::linear_fit(&x, &y)?;
    let beta = -fit.slope;
    if beta == 0.0 {
        return Err(Error::Domain("flat relation: β = 0 leaves A undefined".into()));
    }
    let rho = stats::pearson(&x, &y)?;
    Ok(KurtosisExponentFit {
        a: (fit.intercept / beta).exp(),
        beta,
        rho,
        p: stats::correlation_p_value(rho, pairs.len()),
        n: pairs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::synthetic::pareto_sample;
    use proptest::prelude::*;

    #[test]
    fn ccdf_counting() {
        let c = empirical_ccdf(&[3.0, 1.0, 4.0, 2.0]).unwrap();
        assert_eq!(c.points, vec![(1.0, 1.0), (2.0, 0.75), (3.0, 0.5), (4.0, 0.25)]);
        let c = empirical_ccdf(&[5.0; 7]).unwrap();
        assert_eq!(c.points, vec![(5.0, 1.0)]);
        assert!(matches!(empirical_ccdf(&[]), Err(Error::Length { .. })));
    }

    #[test]
    fn ccdf_thinning_keeps_extremes() {
        let xs: Vec<f64> = (1..=10_000).map(f64::from).collect();
        let c = empirical_ccdf(&xs).unwrap();
        let t = c.thinned(100);
        assert!(t.points.len() <= 100);
        assert_eq!(t.points.first(), c.points.first());
        assert_eq!(t.points.last(), c.points.last());
    }

    #[test]
    fn closed_form_two_points() {
        let e = std::f64::consts::E;
        let f = fit_tail_mle(&[e, e], 1.0, 1).unwrap();
        assert!((f.gamma - 2.0).abs() < 1e-15);
        assert_eq!(f.alpha, f.gamma - 1.0);
        assert_eq!(f.n_tail, 2);
    }

    #[test]
    fn divergent_and_sparse() {
        assert!(matches!(
            fit_tail_mle(&[2.0; 60], 2.0, 50),
            Err(Error::DivergentExponent)
        ));
        assert!(matches!(
            fit_tail_mle(&[2.0, 3.0], 1.0, 50),
            Err(Error::Sparsity { .. })
        ));
        let fifty = pareto_sample(3.0, 1.0, 50, 1);
        assert!(matches!(
            select_xmin(&fifty, &TailOptions::default()),
            Err(Error::Sparsity { needed: 100, got: 50 })
        ));
    }

    #[test]
    fn pareto_mle_recovery() {
        // stderr = (γ−1)/√n = 0.02 at n = 10⁴; 3·stderr = 0.06.
        for seed in 0..10 {
            let xs = pareto_sample(3.0, 1.0, 10_000, seed);
            let f = fit_tail_mle(&xs, 1.0, 50).unwrap();
            assert!((f.gamma - 3.0).abs() < 0.06, "seed {seed}: {}", f.gamma);
            assert!(f.ks < 0.03);
        }
    }

    #[test]
    fn select_on_pure_pareto() {
        // Every cutoff is admissible on a pure power law, so the KS argmin
        // wanders; γ̂ must hold on every seed, the cutoff location on most.
        let mut low_cutoffs = 0;
        for seed in 0..20 {
            let xs = pareto_sample(3.0, 1.0, 10_000, 100 + seed);
            let (x_min, fit) = select_xmin(&xs, &TailOptions::default()).unwrap();
            let mut sorted = xs.clone();
            sorted.sort_by(f64::total_cmp);
            assert!(x_min >= 1.0);
            if x_min <= quantile_sorted(&sorted, 0.2) {
                low_cutoffs += 1;
            }
            assert!((fit.gamma - 3.0).abs() < 0.15, "seed {seed}: {}", fit.gamma);
        }
        assert!(low_cutoffs >= 10, "{low_cutoffs}/20 cutoffs within the lower quintile");
    }

    #[test]
    fn select_on_body_tail_mixture() {
        for seed in 0..10 {
            let xs = body_tail_mixture(10_000, seed);
            let (x_min, fit) = select_xmin(&xs, &TailOptions::default()).unwrap();
            assert!(
                (fit.gamma - 3.0).abs() < 0.2,
                "seed {seed}: γ={} x_min={x_min}",
                fit.gamma
            );
        }
    }

    #[test]
    fn select_is_argmin_over_scan() {
        let xs = pareto_sample(2.5, 0.3, 3_000, 77);
        let opts = TailOptions::default();
        let scan = scan_xmin(&xs, &opts).unwrap();
        assert!(scan.len() <= opts.max_candidates);
        let (_, best) = select_xmin(&xs, &opts).unwrap();
        assert!(scan.iter().all(|f| best.ks <= f.ks));
        assert!(scan.iter().all(|f| f.n_tail >= opts.min_tail));
    }

    #[test]
    fn error_shrinks_with_sample_size() {
        let err = |n: usize| -> f64 {
            let errs: Vec<f64> = (0..20)
                .map(|s| {
                    let xs = pareto_sample(3.0, 1.0, n, 1000 + s);
                    (fit_tail_mle(&xs, 1.0, 10).unwrap().gamma - 3.0).abs()
                })
                .collect();
            stats::median(&errs).unwrap()
        };
        assert!(err(10_000) < err(100));
    }

    #[test]
    fn quantile_mode() {
        let xs = pareto_sample(3.0, 1.0, 5_000, 3);
        let opts = TailOptions {
            mode: XminMode::Quantile(0.5),
            ..Default::default()
        };
        let f = fit_side(&xs, Side::Positive, &opts).unwrap();
        assert!((f.n_tail as f64 - 2_500.0).abs() <= 1.0);
        assert!((f.gamma - 3.0).abs() < 0.15);
        let bad = TailOptions {
            mode: XminMode::Quantile(1.5),
            ..Default::default()
        };
        assert!(matches!(fit_side(&xs, Side::Positive, &bad), Err(Error::Config(_))));
    }

    #[test]
    fn reflection_symmetry() {
        let xs = pareto_sample(3.0, 1.0, 2_000, 5);
        let r: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| if i % 3 == 0 { -x } else { *x * 0.5 })
            .collect();
        let neg: Vec<f64> = r.iter().map(|x| -x).collect();
        let opts = TailOptions::default();
        let a = fit_side(&r, Side::Negative, &opts).unwrap();
        let b = fit_side(&neg, Side::Positive, &opts).unwrap();
        assert_eq!(a.gamma, b.gamma);
        assert_eq!(a.x_min, b.x_min);
        assert_eq!(a.side, Side::Negative);
    }

    #[test]
    fn summary_median() {
        let s = summarize_exponents(&[2.0, 3.0, 4.0], 4).unwrap();
        assert_eq!(s.median, 3.0);
        assert_eq!(s.histogram.iter().map(|b| b.count).sum::<usize>(), 3);
        let s = summarize_exponents(&[2.0, 3.0, 4.0, 5.0], 2).unwrap();
        assert_eq!(s.median, 3.5);
        let same = summarize_exponents(&[3.0; 5], 10).unwrap();
        assert_eq!(same.histogram[0].count, 5);
        assert!(summarize_exponents(&[], 3).is_err());
    }

    #[test]
    fn noiseless_kurtosis_relation() {
        let (a, beta) = (5.8, 2.4);
        let pairs: Vec<KurtosisPair> = [2.1, 2.7, 3.0, 3.4, 4.2, 5.5]
            .iter()
            .enumerate()
            .map(|(i, &g)| KurtosisPair {
                code: format!("C{i}"),
                gamma: g,
                alpha4: (g / a).powf(-beta).exp(),
            })
            .collect();
        let fit = fit_kurtosis_exponent_relation(&pairs).unwrap();
        assert!((fit.a - a).abs() < 1e-9, "{}", fit.a);
        assert!((fit.beta - beta).abs() < 1e-9);
        assert!((fit.rho + 1.0).abs() < 1e-12);
        assert!((fit.predict(3.0) - pairs[2].alpha4).abs() < 1e-9);
    }

    #[test]
    fn repeated_pair_on_a_line() {
        let (a, beta) = (5.6, 2.8);
        let mk = |code: &str, g: f64| KurtosisPair {
            code: code.into(),
            gamma: g,
            alpha4: (g / a).powf(-beta).exp(),
        };
        let pairs = vec![mk("A", 2.5), mk("B", 4.0), mk("C", 4.0)];
        let fit = fit_kurtosis_exponent_relation(&pairs).unwrap();
        assert!((fit.beta - beta).abs() < 1e-9 && (fit.a - a).abs() < 1e-9);
        assert!((fit.rho.abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kurtosis_relation_domain_error_names_currency() {
        let pairs = vec![
            KurtosisPair {
                code: "AAA".into(),
                gamma: 3.0,
                alpha4: 4.0,
            },
            KurtosisPair {
                code: "BBB".into(),
                gamma: 3.5,
                alpha4: 0.9,
            },
            KurtosisPair {
                code: "CCC".into(),
                gamma: 4.0,
                alpha4: 3.0,
            },
        ];
        match fit_kurtosis_exponent_relation(&pairs) {
            Err(Error::Domain(m)) => assert!(m.contains("BBB")),
            other => panic!("unexpected {other:?}"),
        }
    }

    /// 70% half-normal body, 30% Pareto(γ = 3, x_min = 2) tail.
    pub(crate) fn body_tail_mixture(n: usize, seed: u64) -> Vec<f64> {
        let mut s = crate::rng::SeededStream::new(seed);
        (0..n)
            .map(|_| {
                if s.uniform() < 0.3 {
                    crate::ingest::synthetic::pareto_draw(&mut s, 3.0, 2.0)
                } else {
                    s.normal().abs()
                }
            })
            .collect()
    }

    proptest! {
        #[test]
        fn mle_scale_equivariant(seed in 0u64..1000, c in 0.001f64..1000.0) {
            let xs = pareto_sample(2.5, 1.0, 200, seed);
            let a = fit_tail_mle(&xs, 1.0, 10).unwrap();
            let scaled: Vec<f64> = xs.iter().map(|x| x * c).collect();
            let b = fit_tail_mle(&scaled, c, 10).unwrap();
            prop_assert!((a.gamma - b.gamma).abs() < 1e-12);
            prop_assert_eq!(a.alpha, a.gamma - 1.0);
            prop_assert!((0.0..=1.0).contains(&a.ks));
        }
    }
}
