//! The bundled 75-currency synthetic panel: one series per row of the
//! bundled metadata table, with tail heaviness tied to market class and
//! income level.

use crate::error::Result;
use crate::ingest::synthetic::{default_start, gen_synthetic_panel, Generator, SyntheticSeries, SyntheticSpec};
use crate::ingest::{table1, MarketClass, PricePanel};

/// Price observations per bundled series.
pub const BUNDLED_LENGTH: usize = 6035;

const DAILY_SCALE: f64 = 0.005;

/// Income rank in `[0, 1]`: 0 for the poorest listed economy, 1 for the
/// richest.
fn income_position(g: f64, lo: f64, hi: f64) -> f64 {
    ((g.ln() - lo) / (hi - lo)).clamp(0.0, 1.0)
}

pub fn bundled_series(seed: u64) -> Vec<SyntheticSeries> {
    let rows = table1();
    let logs: Vec<f64> = rows.iter().filter_map(|r| r.g_mean).map(f64::ln).collect();
    let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            let class = row.meta.market_class.unwrap_or(MarketClass::Emerging);
            let z = row.g_mean.map_or(0.5, |g| income_position(g, lo, hi));
            let (generator, scale) = match class {
                MarketClass::Developed => (Generator::StudentTReturns { nu: 5.0 + 5.0 * z }, DAILY_SCALE),
                MarketClass::Emerging => (Generator::StudentTReturns { nu: 3.0 + 2.0 * z }, DAILY_SCALE),
                MarketClass::Frontier => (
                    Generator::ParetoReturns {
                        gamma: 2.6 + 1.0 * z,
                        x_min: 1.0,
                    },
                    DAILY_SCALE / 2.0,
                ),
            };
            let series_seed = seed.wrapping_mul(1_000_003).wrapping_add(i as u64);
            SyntheticSeries {
                code: row.meta.code.clone(),
                market_class: row.meta.market_class,
                regime: row.meta.regime,
                region: row.meta.region.clone(),
                spec: SyntheticSpec::new(generator, BUNDLED_LENGTH, series_seed).with_scale(scale),
            }
        })
        .collect()
}

pub fn bundled_panel(seed: u64) -> Result<PricePanel> {
    gen_synthetic_panel(&bundled_series(seed), default_start())
}
