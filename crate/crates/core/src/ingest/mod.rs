//! Loading, validating and aligning price panels and currency metadata,
//! plus deterministic synthetic panels for oracle tests.

mod metadata;
mod panel;
mod splice;
pub mod synthetic;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub(crate) use metadata::csv_error as csv_err;
pub use metadata::{load_metadata, parse_metadata, table1, MetadataRow};
pub use panel::{align_panels, load_price_panel, parse_price_panel, save_price_panel, PricePanel};
pub use splice::{splice_series, DatedValue};
pub use synthetic::{
    default_start as default_start_date, gen_synthetic_panel, Generator, SyntheticSeries, SyntheticSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Floating,
    FixedPeg,
    CrawlingPeg,
    HorizontalBand,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarketClass {
    Developed,
    Emerging,
    Frontier,
}

impl MarketClass {
    pub const ALL: [MarketClass; 3] = [MarketClass::Developed, MarketClass::Emerging, MarketClass::Frontier];

    pub fn as_str(self) -> &'static str {
        match self {
            MarketClass::Developed => "developed",
            MarketClass::Emerging => "emerging",
            MarketClass::Frontier => "frontier",
        }
    }
}

impl fmt::Display for MarketClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MarketClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "developed" => Ok(MarketClass::Developed),
            "emerging" => Ok(MarketClass::Emerging),
            "frontier" => Ok(MarketClass::Frontier),
            other => Err(Error::Validation(format!("unknown market class {other:?}"))),
        }
    }
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Floating => "floating",
            Regime::FixedPeg => "fixed_peg",
            Regime::CrawlingPeg => "crawling_peg",
            Regime::HorizontalBand => "horizontal_band",
        }
    }
}

impl FromStr for Regime {
    type Err = Error;

    /// Accepts the snake_case vocabulary as well as the long-form labels
    /// ("Fixed peg", "Pegged within horizontal band").
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s.split_whitespace().collect::<Vec<_>>().join("_").to_ascii_lowercase();
        match norm.as_str() {
            "floating" => Ok(Regime::Floating),
            "fixed_peg" => Ok(Regime::FixedPeg),
            "crawling_peg" => Ok(Regime::CrawlingPeg),
            "horizontal_band" | "pegged_within_horizontal_band" => Ok(Regime::HorizontalBand),
            other => Err(Error::Validation(format!("unknown exchange-rate regime {other:?}"))),
        }
    }
}

/// Descriptive metadata of one currency. Fields other than `code` are
/// optional so that a bare price file can be analysed without a metadata
/// table; when present, `market_class` is one of the three MSCI classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurrencyMeta {
    pub code: String,
    #[serde(default)]
    pub regime: Option<Regime>,
    #[serde(default)]
    pub market_class: Option<MarketClass>,
    #[serde(default)]
    pub region: Option<String>,
}

impl CurrencyMeta {
    pub fn bare(code: impl Into<String>) -> Self {
        CurrencyMeta {
            code: code.into(),
            regime: None,
            market_class: None,
            region: None,
        }
    }
}
