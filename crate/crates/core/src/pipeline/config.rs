use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::clustering::Linkage;
use crate::error::{Error, Result};
use crate::macroecon::{TheilMode, DEFAULT_PRODUCT_SLOTS};
use crate::scaling::DfaInput;
use crate::similarity::{BinningMode, DEFAULT_BINS};
use crate::tails::TailOptions;

/// Settings for a full analysis run, read from TOML. Every field has a
/// default, so an empty file analyzes the bundled synthetic panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Price panel CSV. Without one the bundled synthetic panel is used.
    pub panel: Option<PathBuf>,
    /// Currency metadata CSV. Defaults to the bundled table.
    pub metadata: Option<PathBuf>,
    /// `code,year,gdp_per_capita` CSV.
    pub gdp: Option<PathBuf>,
    /// `code,year,product_id,value_usd` CSV.
    pub exports: Option<PathBuf>,
    pub period_count: usize,
    pub bins: usize,
    pub binning: BinningMode,
    pub vr_lag: usize,
    /// Explicit DFA window sizes; log-spaced defaults when absent.
    pub dfa_windows: Option<Vec<usize>>,
    pub dfa_input: DfaInput,
    /// Linkage whose cut is reported as the primary clustering.
    pub linkage: Linkage,
    /// Extra fixed-height cut applied to every dendrogram.
    pub cut_threshold: Option<f64>,
    pub tails: TailOptions,
    /// Currencies observed on fewer than this fraction of days are dropped.
    pub coverage_threshold: f64,
    pub year_start: i32,
    pub year_end: i32,
    pub theil_slots: usize,
    pub theil_mode: TheilMode,
    /// Points kept per CCDF in the report.
    pub ccdf_points: usize,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            panel: None,
            metadata: None,
            gdp: None,
            exports: None,
            period_count: 3,
            bins: DEFAULT_BINS,
            binning: BinningMode::PerPair,
            vr_lag: 10,
            dfa_windows: None,
            dfa_input: DfaInput::LogPrice,
            linkage: Linkage::Complete,
            cut_threshold: None,
            tails: TailOptions::default(),
            coverage_threshold: 0.8,
            year_start: 1995,
            year_end: 2012,
            theil_slots: DEFAULT_PRODUCT_SLOTS,
            theil_mode: TheilMode::FixedSlots,
            ccdf_points: 200,
            output_dir: PathBuf::from("fx-tails-out"),
            seed: 0,
        }
    }
}

impl AnalysisConfig {
    /// Parses TOML. Relative paths are resolved against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: AnalysisConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for p in [&mut cfg.panel, &mut cfg.metadata, &mut cfg.gdp, &mut cfg.exports]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.period_count == 0 {
            return fail("period_count must be at least 1".into());
        }
        if self.bins < 2 {
            return fail(format!("bins must be at least 2, got {}", self.bins));
        }
        if self.vr_lag < 2 {
            return fail(format!("vr_lag must be at least 2, got {}", self.vr_lag));
        }
        if let Some(ws) = &self.dfa_windows {
            if ws.len() < 2 || ws.iter().any(|&s| s < 3) {
                return fail("dfa_windows needs at least two sizes of 3 or more".into());
            }
        }
        if !(0.0..=1.0).contains(&self.coverage_threshold) {
            return fail(format!("coverage_threshold {} outside [0, 1]", self.coverage_threshold));
        }
        if self.year_end < self.year_start {
            return fail(format!("year range {}..{} is empty", self.year_start, self.year_end));
        }
        if self.theil_slots == 0 {
            return fail("theil_slots must be positive".into());
        }
        if self.tails.min_tail < 2 {
            return fail("tails.min_tail must be at least 2".into());
        }
        if let Some(t) = self.cut_threshold {
            if !(t > 0.0) {
                return fail(format!("cut_threshold must be positive, got {t}"));
            }
        }
        Ok(())
    }

    pub fn years(&self) -> std::ops::RangeInclusive<i32> {
        self.year_start..=self.year_end
    }
}
