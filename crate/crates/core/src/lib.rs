//! Fluctuation analysis of currency exchange-rate panels.
//!
//! The crate covers the whole path from a CSV panel of daily rates to a
//! self-describing report:
//!
//! - [`ingest`]: panel and metadata loading, splicing, synthetic panels
//! - [`returns`]: log returns, leave-one-out normalization, moments
//! - [`tails`]: CCDFs and continuous power-law tail fits
//! - [`scaling`]: detrended fluctuation analysis and the variance ratio
//! - [`similarity`]: histograms, KL/JS divergence, √JS distance matrices
//! - [`clustering`]: agglomerative clustering, threshold cuts, Newick export
//! - [`macroecon`]: Theil index, indicator means, log-log fits, regression
//! - [`pipeline`]: period splitting, full analysis runs, report rendering

// NaN must fail these guards, so `!(x > 0.0)` is deliberate throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clustering;
pub mod error;
pub mod ingest;
pub mod macroecon;
pub mod pipeline;
pub mod returns;
pub mod rng;
pub mod scaling;
pub mod similarity;
pub mod stats;
pub mod tails;

pub use error::{Error, Result};

/// Tool version embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
