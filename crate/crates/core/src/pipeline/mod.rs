//! Full analysis runs: input preparation, period splitting, per-currency
//! statistics, cross-sectional fits, clustering and report output.

mod bundled;
mod config;
mod render;

use std::collections::BTreeMap;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{self, ClusterCut, Dendrogram, Linkage};
use crate::error::{Error, Result};
use crate::ingest::{self, MarketClass, PricePanel, Regime};
use crate::macroecon::{self, CorrelationResult, PowerFit, RegressionFit};
use crate::returns::{self, GroupStat, Moments};
use crate::scaling::{self, DfaResult, VrResult};
use crate::similarity::{self, DistanceMatrix};
use crate::tails::{self, Ccdf, KurtosisExponentFit, KurtosisPair, Side, TailExponentSummary, TailFit};

pub use bundled::{bundled_panel, bundled_series, BUNDLED_LENGTH};
pub use config::AnalysisConfig;
pub use render::{manifest, render_report};

/// Splits the days of `panel` into `k` contiguous periods of
/// `⌊days / k⌋` days; leftover days go to the last period.
pub fn split_periods(panel: &PricePanel, k: usize) -> Result<Vec<PricePanel>> {
    Ok(period_ranges(panel.n_days(), k)?
        .into_iter()
        .map(|r| panel.window(r))
        .collect())
}

fn period_ranges(days: usize, k: usize) -> Result<Vec<std::ops::Range<usize>>> {
    if k == 0 {
        return Err(Error::Config("period count must be at least 1".into()));
    }
    if k > days {
        return Err(Error::Split { days, periods: k });
    }
    let len = days / k;
    let rem = days - len * k;
    if rem > 0 {
        log::info!("{rem} leftover day(s) appended to period {k}");
    }
    Ok((0..k)
        .map(|i| {
            let end = if i + 1 == k { days } else { (i + 1) * len };
            i * len..end
        })
        .collect())
}

/// A stage that failed for one currency or one cross-sectional fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurrencyRecord {
    pub code: String,
    pub market_class: Option<MarketClass>,
    pub regime: Option<Regime>,
    pub region: Option<String>,
    pub n_prices: usize,
    pub n_returns: usize,
    /// Moments of the normalized returns.
    pub moments: Option<Moments>,
    pub tail_positive: Option<TailFit>,
    pub tail_negative: Option<TailFit>,
    pub ccdf_positive: Option<Ccdf>,
    pub ccdf_negative: Option<Ccdf>,
    pub dfa: Option<DfaResult>,
    pub vr: Option<VrResult>,
    pub g_mean: Option<f64>,
    pub theil_mean: Option<f64>,
    pub failures: Vec<StageFailure>,
}

impl CurrencyRecord {
    pub fn kurtosis(&self) -> Option<f64> {
        self.moments.map(|m| m.kurtosis)
    }

    pub fn tail(&self, side: Side) -> Option<&TailFit> {
        match side {
            Side::Positive => self.tail_positive.as_ref(),
            Side::Negative => self.tail_negative.as_ref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSkewness {
    pub market_class: MarketClass,
    pub stat: Option<GroupStat>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CrossSection {
    pub tail_summary: Option<TailExponentSummary>,
    pub skewness_by_class: Vec<ClassSkewness>,
    pub kurtosis_vs_gamma_positive: Option<KurtosisExponentFit>,
    pub kurtosis_vs_gamma_negative: Option<KurtosisExponentFit>,
    pub kurtosis_vs_g: Option<PowerFit>,
    pub kurtosis_g_correlation: Option<CorrelationResult>,
    pub kurtosis_vs_theil: Option<PowerFit>,
    pub kurtosis_theil_correlation: Option<CorrelationResult>,
    pub regression: Option<RegressionFit>,
    pub failures: Vec<StageFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedCurrency {
    pub code: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub linkage: Linkage,
    pub dendrogram: Dendrogram,
    pub newick: String,
    /// Cut with the most clusters of two or more currencies.
    pub max_cut: ClusterCut,
    pub threshold_cut: Option<ClusterCut>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Similarity {
    pub matrix: DistanceMatrix,
    pub excluded: Vec<ExcludedCurrency>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodReport {
    pub label: String,
    pub start: Option<NaiveDate>,
    pub end: Option<NaiveDate>,
    pub n_days: usize,
    /// Sorted by code.
    pub currencies: Vec<CurrencyRecord>,
    pub cross_section: CrossSection,
    pub similarity: Option<Similarity>,
    pub clusterings: Vec<Clustering>,
    pub warnings: Vec<String>,
}

impl PeriodReport {
    pub fn currency(&self, code: &str) -> Option<&CurrencyRecord> {
        self.currencies.iter().find(|c| c.code == code)
    }

    pub fn clustering(&self, linkage: Linkage) -> Option<&Clustering> {
        self.clusterings.iter().find(|c| c.linkage == linkage)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub config: AnalysisConfig,
    /// Panel path, or a note that the bundled panel was used.
    pub source: String,
    pub excluded: Vec<ExcludedCurrency>,
    pub warnings: Vec<String>,
    pub full: PeriodReport,
    pub periods: Vec<PeriodReport>,
}

impl Report {
    /// `0` is the full span, `1..=k` the periods.
    pub fn period(&self, n: usize) -> Option<&PeriodReport> {
        if n == 0 {
            Some(&self.full)
        } else {
            self.periods.get(n - 1)
        }
    }

    pub fn sections(&self) -> impl Iterator<Item = &PeriodReport> {
        std::iter::once(&self.full).chain(&self.periods)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Which parts of a period analysis to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stages {
    pub tails: bool,
    pub scaling: bool,
    pub similarity: bool,
    pub clustering: bool,
}

impl Stages {
    pub const ALL: Stages = Stages {
        tails: true,
        scaling: true,
        similarity: true,
        clustering: true,
    };
    pub const NONE: Stages = Stages {
        tails: false,
        scaling: false,
        similarity: false,
        clustering: false,
    };
}

/// A validated panel with metadata and indicators attached.
#[derive(Debug, Clone)]
pub struct PreparedInput {
    pub panel: PricePanel,
    pub source: String,
    /// `(g_mean, theil_mean)` per code.
    pub indicators: BTreeMap<String, (Option<f64>, Option<f64>)>,
    pub excluded: Vec<ExcludedCurrency>,
    pub warnings: Vec<String>,
}

pub fn prepare_input(cfg: &AnalysisConfig) -> Result<PreparedInput> {
    cfg.validate()?;
    let mut warnings = Vec::new();
    let metadata = match &cfg.metadata {
        Some(p) => ingest::load_metadata(p)?,
        None => ingest::table1(),
    };
    let (mut panel, source) = match &cfg.panel {
        Some(p) => (ingest::load_price_panel(p)?, p.display().to_string()),
        None => (
            bundled_panel(cfg.seed)?,
            format!("bundled synthetic panel (seed {})", cfg.seed),
        ),
    };
    for code in panel.attach_metadata(&metadata) {
        let w = format!("{code}: no metadata row");
        log::warn!("{w}");
        warnings.push(w);
    }
    let (panel_kept, low) = panel.exclude_low_coverage(cfg.coverage_threshold);
    panel = panel_kept;
    let excluded: Vec<ExcludedCurrency> = low
        .into_iter()
        .map(|(code, c)| {
            log::warn!("{code}: coverage {c:.3} below threshold, excluded");
            ExcludedCurrency {
                code,
                reason: format!("coverage {c:.4} below {}", cfg.coverage_threshold),
            }
        })
        .collect();
    if panel.n_currencies() == 0 {
        return Err(Error::Coverage("no currencies left after coverage exclusion".into()));
    }

    let mut indicators: BTreeMap<String, (Option<f64>, Option<f64>)> = metadata
        .iter()
        .map(|r| (r.meta.code.clone(), (r.g_mean, r.theil_mean)))
        .collect();
    if cfg.gdp.is_some() || cfg.exports.is_some() {
        let gdp = match &cfg.gdp {
            Some(p) => macroecon::load_gdp(p)?,
            None => BTreeMap::new(),
        };
        let exports = match &cfg.exports {
            Some(p) => macroecon::load_exports(p)?,
            None => BTreeMap::new(),
        };
        let records = macroecon::build_records(gdp, exports, cfg.years(), cfg.theil_slots, cfg.theil_mode)?;
        for r in records {
            let entry = indicators.entry(r.code.clone()).or_default();
            if cfg.gdp.is_some() {
                entry.0 = r.g_mean;
            }
            if cfg.exports.is_some() {
                entry.1 = r.theil_mean;
            }
        }
    }
    Ok(PreparedInput {
        panel,
        source,
        indicators,
        excluded,
        warnings,
    })
}

pub fn run_analysis(cfg: &AnalysisConfig) -> Result<Report> {
    let input = prepare_input(cfg)?;
    run_prepared(cfg, &input)
}

pub fn run_prepared(cfg: &AnalysisConfig, input: &PreparedInput) -> Result<Report> {
    let parts = split_periods(&input.panel, cfg.period_count)?;
    let mut warnings = input.warnings.clone();
    let days = input.panel.n_days();
    if !days.is_multiple_of(cfg.period_count) {
        warnings.push(format!(
            "{} leftover day(s) appended to period {}",
            days % cfg.period_count,
            cfg.period_count
        ));
    }
    let mut jobs: Vec<(String, &PricePanel)> = vec![("full".to_string(), &input.panel)];
    jobs.extend(parts.iter().enumerate().map(|(i, p)| (format!("period_{}", i + 1), p)));
    let mut sections: Vec<PeriodReport> = jobs
        .into_par_iter()
        .map(|(label, panel)| analyze_period(cfg, panel, &input.indicators, &label, Stages::ALL))
        .collect();
    let full = sections.remove(0);
    Ok(Report {
        version: crate::VERSION.to_string(),
        config: cfg.clone(),
        source: input.source.clone(),
        excluded: input.excluded.clone(),
        warnings,
        full,
        periods: sections,
    })
}

/// Runs the requested stages over one panel window. Per-currency and
/// per-fit failures are recorded, never propagated.
pub fn analyze_period(
    cfg: &AnalysisConfig,
    panel: &PricePanel,
    indicators: &BTreeMap<String, (Option<f64>, Option<f64>)>,
    label: &str,
    stages: Stages,
) -> PeriodReport {
    let mut warnings = Vec::new();
    let mut order: Vec<usize> = (0..panel.n_currencies()).collect();
    order.sort_by(|&a, &b| panel.currencies()[a].code.cmp(&panel.currencies()[b].code));
    let analyzed: Vec<Option<(CurrencyRecord, Option<Vec<f64>>)>> = order
        .par_iter()
        .map(|&i| {
            let meta = &panel.currencies()[i];
            let row = &panel.rows()[i];
            if row.iter().all(Option::is_none) {
                return None;
            }
            let ind = indicators.get(&meta.code).copied().unwrap_or((None, None));
            Some(analyze_currency(cfg, meta, row, ind, stages))
        })
        .collect();
    let mut currencies = Vec::new();
    let mut samples = Vec::new();
    for (record, normalized) in analyzed.into_iter().flatten() {
        for f in &record.failures {
            warnings.push(format!("{label} {}: {} failed: {}", record.code, f.stage, f.error));
        }
        if let Some(n) = normalized {
            samples.push((record.code.clone(), n));
        }
        currencies.push(record);
    }

    let cross_section = cross_section(&currencies);

    let mut similarity = None;
    let mut clusterings = Vec::new();
    if stages.similarity || stages.clustering {
        match similarity::distance_matrix(&samples, cfg.bins, cfg.binning) {
            Ok(out) => {
                let excluded = out
                    .excluded
                    .into_iter()
                    .map(|(code, reason)| ExcludedCurrency { code, reason })
                    .collect();
                if stages.clustering {
                    clusterings = Linkage::ALL
                        .par_iter()
                        .filter_map(|&l| cluster(&out.matrix, l, cfg.cut_threshold).ok())
                        .collect();
                }
                similarity = Some(Similarity {
                    matrix: out.matrix,
                    excluded,
                });
            }
            Err(e) => warnings.push(format!("{label}: distance matrix failed: {e}")),
        }
    }

    let dates = panel.dates();
    PeriodReport {
        label: label.to_string(),
        start: dates.first().copied(),
        end: dates.last().copied(),
        n_days: dates.len(),
        currencies,
        cross_section,
        similarity,
        clusterings,
        warnings,
    }
}

fn cluster(matrix: &DistanceMatrix, linkage: Linkage, threshold: Option<f64>) -> Result<Clustering> {
    let dendrogram = clustering::agglomerate(matrix, linkage)?;
    Ok(Clustering {
        linkage,
        newick: dendrogram.to_newick(),
        max_cut: clustering::max_cluster_cut(&dendrogram),
        threshold_cut: threshold.map(|t| clustering::cut_threshold(&dendrogram, t)),
        dendrogram,
    })
}

fn failure(stage: &str, e: impl std::fmt::Display) -> StageFailure {
    StageFailure {
        stage: stage.to_string(),
        error: e.to_string(),
    }
}

fn analyze_currency(
    cfg: &AnalysisConfig,
    meta: &ingest::CurrencyMeta,
    row: &[Option<f64>],
    (g_mean, theil_mean): (Option<f64>, Option<f64>),
    stages: Stages,
) -> (CurrencyRecord, Option<Vec<f64>>) {
    let mut rec = CurrencyRecord {
        code: meta.code.clone(),
        market_class: meta.market_class,
        regime: meta.regime,
        region: meta.region.clone(),
        n_prices: row.iter().filter(|c| c.is_some()).count(),
        n_returns: 0,
        moments: None,
        tail_positive: None,
        tail_negative: None,
        ccdf_positive: None,
        ccdf_negative: None,
        dfa: None,
        vr: None,
        g_mean,
        theil_mean,
        failures: Vec::new(),
    };
    let (raw, _) = returns::gapped_log_returns(row);
    rec.n_returns = raw.values.len();

    if stages.scaling {
        let prices: Vec<f64> = row.iter().flatten().copied().collect();
        let profile = scaling::dfa_profile(&prices, cfg.dfa_input);
        let windows = match &cfg.dfa_windows {
            Some(ws) => Ok(ws.clone()),
            None => scaling::default_windows(profile.len()),
        };
        match windows.and_then(|ws| scaling::dfa(&profile, &ws)) {
            Ok(d) => rec.dfa = Some(d),
            Err(e) => rec.failures.push(failure("dfa", e)),
        }
        match scaling::variance_ratio(&raw.values, cfg.vr_lag) {
            Ok(v) => rec.vr = Some(v),
            Err(e) => rec.failures.push(failure("variance_ratio", e)),
        }
    }

    let normalized = match returns::normalize_returns(&raw) {
        Ok(n) => n.values,
        Err(e) => {
            rec.failures.push(failure("normalize", e));
            return (rec, None);
        }
    };
    match returns::moments(&normalized) {
        Ok(m) => rec.moments = Some(m),
        Err(e) => rec.failures.push(failure("moments", e)),
    }
    if stages.tails {
        for side in [Side::Positive, Side::Negative] {
            let mags = tails::side_magnitudes(&normalized, side);
            let ccdf = tails::empirical_ccdf(&mags).ok().map(|c| c.thinned(cfg.ccdf_points));
            let fit = tails::fit_side(&normalized, side, &cfg.tails);
            let stage = format!("tail_{}", side.as_str());
            match side {
                Side::Positive => rec.ccdf_positive = ccdf,
                Side::Negative => rec.ccdf_negative = ccdf,
            }
            match fit {
                Ok(f) if side == Side::Positive => rec.tail_positive = Some(f),
                Ok(f) => rec.tail_negative = Some(f),
                Err(e) => rec.failures.push(failure(&stage, e)),
            }
        }
    }
    (rec, Some(normalized))
}

fn cross_section(records: &[CurrencyRecord]) -> CrossSection {
    let mut cs = CrossSection::default();
    let mut failures = Vec::new();

    let fits: Vec<TailFit> = records
        .iter()
        .flat_map(|r| [r.tail_positive, r.tail_negative])
        .flatten()
        .collect();
    if !fits.is_empty() {
        match tails::tail_exponent_summary(&fits, 20) {
            Ok(s) => cs.tail_summary = Some(s),
            Err(e) => failures.push(cs_fail("tail_summary", e)),
        }
    }

    let labeled: Vec<(MarketClass, f64)> = records
        .iter()
        .filter_map(|r| Some((r.market_class?, r.moments?.skewness)))
        .collect();
    cs.skewness_by_class = returns::group_skewness(&labeled)
        .into_iter()
        .map(|(market_class, stat)| ClassSkewness { market_class, stat })
        .collect();

    for side in [Side::Positive, Side::Negative] {
        let pairs: Vec<KurtosisPair> = records
            .iter()
            .filter_map(|r| {
                Some(KurtosisPair {
                    code: r.code.clone(),
                    gamma: r.tail(side)?.gamma,
                    alpha4: r.kurtosis()?,
                })
            })
            .collect();
        if pairs.len() >= 3 {
            match tails::fit_kurtosis_exponent_relation(&pairs) {
                Ok(f) if side == Side::Positive => cs.kurtosis_vs_gamma_positive = Some(f),
                Ok(f) => cs.kurtosis_vs_gamma_negative = Some(f),
                Err(e) => failures.push(cs_fail(&format!("kurtosis_vs_gamma_{}", side.as_str()), e)),
            }
        }
    }

    let with_g: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| Some((r.g_mean?, r.kurtosis()?)))
        .collect();
    if with_g.len() >= 3 {
        let (g, a): (Vec<f64>, Vec<f64>) = with_g.into_iter().unzip();
        match macroecon::loglog_power_fit(&g, &a) {
            Ok(f) => cs.kurtosis_vs_g = Some(f),
            Err(e) => failures.push(cs_fail("kurtosis_vs_g", e)),
        }
        match macroecon::log_pearson(&g, &a) {
            Ok(c) => cs.kurtosis_g_correlation = Some(c),
            Err(e) => failures.push(cs_fail("kurtosis_g_correlation", e)),
        }
    }
    let with_t: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| Some((r.theil_mean?, r.kurtosis()?)))
        .collect();
    if with_t.len() >= 3 {
        let (t, a): (Vec<f64>, Vec<f64>) = with_t.into_iter().unzip();
        match macroecon::loglog_power_fit(&t, &a) {
            Ok(f) => cs.kurtosis_vs_theil = Some(f),
            Err(e) => failures.push(cs_fail("kurtosis_vs_theil", e)),
        }
        match macroecon::log_pearson(&t, &a) {
            Ok(c) => cs.kurtosis_theil_correlation = Some(c),
            Err(e) => failures.push(cs_fail("kurtosis_theil_correlation", e)),
        }
    }
    let full: Vec<(f64, f64, f64)> = records
        .iter()
        .filter_map(|r| Some((r.kurtosis()?, r.g_mean?, r.theil_mean?)))
        .collect();
    if full.len() >= 4 {
        let a: Vec<f64> = full.iter().map(|x| x.0).collect();
        let g: Vec<f64> = full.iter().map(|x| x.1).collect();
        let t: Vec<f64> = full.iter().map(|x| x.2).collect();
        match macroecon::multilinear_fit(&a, &g, &t) {
            Ok(f) => cs.regression = Some(f),
            Err(e) => failures.push(cs_fail("regression", e)),
        }
    }
    cs.failures = failures;
    cs
}

fn cs_fail(stage: &str, e: Error) -> StageFailure {
    log::warn!("cross-section {stage} failed: {e}");
    failure(stage, e)
}
