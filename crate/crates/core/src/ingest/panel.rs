use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::Write;
use std::ops::Range;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::metadata::{csv_error, MetadataRow};
use super::CurrencyMeta;
use crate::error::{Error, Result};

/// Aligned daily exchange rates: one row per currency, one column per day.
/// Missing cells are `None`. Panels built through [`PricePanel::new`] have
/// strictly positive prices, strictly increasing dates and at least three
/// consecutive observations per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricePanel {
    currencies: Vec<CurrencyMeta>,
    dates: Vec<NaiveDate>,
    prices: Vec<Vec<Option<f64>>>,
}

/// Minimum run of consecutive observations a row must contain.
pub const MIN_CONSECUTIVE: usize = 3;

impl PricePanel {
    pub fn new(currencies: Vec<CurrencyMeta>, dates: Vec<NaiveDate>, prices: Vec<Vec<Option<f64>>>) -> Result<Self> {
        let panel = Self::new_unchecked_rows(currencies, dates, prices)?;
        for (meta, row) in panel.currencies.iter().zip(&panel.prices) {
            if longest_run(row) < MIN_CONSECUTIVE {
                return Err(Error::Validation(format!(
                    "currency {} has fewer than {MIN_CONSECUTIVE} consecutive observations",
                    meta.code
                )));
            }
        }
        Ok(panel)
    }

    /// Like [`PricePanel::new`] but without the per-row observation-count
    /// check, which windowed sub-panels cannot always satisfy.
    fn new_unchecked_rows(
        currencies: Vec<CurrencyMeta>,
        dates: Vec<NaiveDate>,
        prices: Vec<Vec<Option<f64>>>,
    ) -> Result<Self> {
        if currencies.len() != prices.len() {
            return Err(Error::Validation(format!(
                "{} currencies but {} price rows",
                currencies.len(),
                prices.len()
            )));
        }
        let mut codes = HashSet::new();
        for meta in &currencies {
            if meta.code.is_empty() {
                return Err(Error::Validation("empty currency code".into()));
            }
            if !codes.insert(meta.code.as_str()) {
                return Err(Error::Validation(format!("duplicate currency code {}", meta.code)));
            }
        }
        if let Some(w) = dates.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::Validation(format!(
                "dates not strictly increasing: {} followed by {}",
                w[0], w[1]
            )));
        }
        for (meta, row) in currencies.iter().zip(&prices) {
            if row.len() != dates.len() {
                return Err(Error::Validation(format!(
                    "row {} has {} cells for {} dates",
                    meta.code,
                    row.len(),
                    dates.len()
                )));
            }
            for (date, cell) in dates.iter().zip(row) {
                if let Some(p) = cell {
                    if !(p.is_finite() && *p > 0.0) {
                        return Err(Error::Validation(format!(
                            "non-positive or non-finite price {p} for {} on {date}",
                            meta.code
                        )));
                    }
                }
            }
        }
        Ok(PricePanel {
            currencies,
            dates,
            prices,
        })
    }

    pub fn currencies(&self) -> &[CurrencyMeta] {
        &self.currencies
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn rows(&self) -> &[Vec<Option<f64>>] {
        &self.prices
    }

    pub fn n_currencies(&self) -> usize {
        self.currencies.len()
    }

    pub fn n_days(&self) -> usize {
        self.dates.len()
    }

    pub fn index_of(&self, code: &str) -> Option<usize> {
        self.currencies.iter().position(|c| c.code == code)
    }

    pub fn row(&self, code: &str) -> Option<&[Option<f64>]> {
        self.index_of(code).map(|i| self.prices[i].as_slice())
    }

    /// Fraction of days with an observation, per currency.
    pub fn coverage(&self) -> Vec<f64> {
        self.prices
            .iter()
            .map(|row| {
                if row.is_empty() {
                    0.0
                } else {
                    row.iter().filter(|c| c.is_some()).count() as f64 / row.len() as f64
                }
            })
            .collect()
    }

    /// Drops currencies whose coverage is below `threshold`, returning the
    /// reduced panel and the excluded `(code, coverage)` pairs.
    pub fn exclude_low_coverage(&self, threshold: f64) -> (PricePanel, Vec<(String, f64)>) {
        let cov = self.coverage();
        let mut excluded = Vec::new();
        let mut currencies = Vec::new();
        let mut prices = Vec::new();
        for ((meta, row), c) in self.currencies.iter().zip(&self.prices).zip(cov) {
            if c < threshold {
                excluded.push((meta.code.clone(), c));
            } else {
                currencies.push(meta.clone());
                prices.push(row.clone());
            }
        }
        let panel = PricePanel {
            currencies,
            dates: self.dates.clone(),
            prices,
        };
        (panel, excluded)
    }

    /// Contiguous sub-window of days. Rows are kept whole even if the window
    /// leaves them with few observations.
    pub fn window(&self, days: Range<usize>) -> PricePanel {
        PricePanel {
            currencies: self.currencies.clone(),
            dates: self.dates[days.clone()].to_vec(),
            prices: self.prices.iter().map(|r| r[days.clone()].to_vec()).collect(),
        }
    }

    /// Concatenates panels over consecutive day ranges (inverse of splitting).
    pub fn concat(parts: &[PricePanel]) -> Result<PricePanel> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Validation("no panels to concatenate".into()))?;
        let mut dates = Vec::new();
        let mut prices = vec![Vec::new(); first.n_currencies()];
        for p in parts {
            if p.currencies != first.currencies {
                return Err(Error::Validation("panels have different currencies".into()));
            }
            dates.extend_from_slice(&p.dates);
            for (acc, row) in prices.iter_mut().zip(&p.prices) {
                acc.extend_from_slice(row);
            }
        }
        Self::new_unchecked_rows(first.currencies.clone(), dates, prices)
    }

    /// Fills currency metadata from a metadata table by code. Returns the
    /// codes that had no metadata row.
    pub fn attach_metadata(&mut self, rows: &[MetadataRow]) -> Vec<String> {
        let by_code: HashMap<&str, &MetadataRow> = rows.iter().map(|r| (r.meta.code.as_str(), r)).collect();
        let mut missing = Vec::new();
        for meta in &mut self.currencies {
            match by_code.get(meta.code.as_str()) {
                Some(row) => *meta = row.meta.clone(),
                None => missing.push(meta.code.clone()),
            }
        }
        missing
    }
}

fn longest_run(row: &[Option<f64>]) -> usize {
    let mut best = 0;
    let mut run = 0;
    for cell in row {
        if cell.is_some() {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
    }
    best
}

pub fn load_price_panel(path: &Path) -> Result<PricePanel> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_price_panel(file)
}

/// Parses a panel CSV: first column `date` (ISO-8601), then one column per
/// currency code; empty cells are missing observations.
pub fn parse_price_panel<R: std::io::Read>(reader: R) -> Result<PricePanel> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    if headers.get(0).map(|h| h.eq_ignore_ascii_case("date")) != Some(true) {
        return Err(Error::Parse {
            line: 1,
            message: "first column must be `date`".into(),
        });
    }
    let codes: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    if codes.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "no currency columns".into(),
        });
    }
    let mut dates = Vec::new();
    let mut prices: Vec<Vec<Option<f64>>> = vec![Vec::new(); codes.len()];
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d").map_err(|e| Error::Parse {
            line,
            message: format!("bad date {:?}: {e}", &record[0]),
        })?;
        if let Some(prev) = dates.last() {
            if date <= *prev {
                return Err(Error::Validation(format!(
                    "dates out of order at line {line}: {date} after {prev}"
                )));
            }
        }
        for (i, cell) in record.iter().skip(1).enumerate() {
            let value = if cell.is_empty() {
                None
            } else {
                let v: f64 = cell.parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("not a number: {cell:?}"),
                })?;
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::Validation(format!(
                        "non-positive price {cell} for {} on {date} (line {line})",
                        codes[i]
                    )));
                }
                Some(v)
            };
            prices[i].push(value);
        }
        dates.push(date);
    }
    let currencies = codes.into_iter().map(CurrencyMeta::bare).collect();
    PricePanel::new(currencies, dates, prices)
}

pub fn save_price_panel(panel: &PricePanel, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    write_price_panel(panel, &mut out).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn write_price_panel<W: Write>(panel: &PricePanel, out: &mut W) -> std::io::Result<()> {
    write!(out, "date")?;
    for c in &panel.currencies {
        write!(out, ",{}", c.code)?;
    }
    writeln!(out)?;
    for (t, date) in panel.dates.iter().enumerate() {
        write!(out, "{}", date.format("%Y-%m-%d"))?;
        for row in &panel.prices {
            match row[t] {
                Some(v) => write!(out, ",{v}")?,
                None => write!(out, ",")?,
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Outer join on dates. Currency codes must be distinct across panels;
/// days absent from a panel become gaps in its rows.
pub fn align_panels(panels: &[PricePanel]) -> Result<PricePanel> {
    let dates: Vec<NaiveDate> = panels
        .iter()
        .flat_map(|p| p.dates.iter().copied())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let position: HashMap<NaiveDate, usize> = dates.iter().enumerate().map(|(i, d)| (*d, i)).collect();
    let mut currencies = Vec::new();
    let mut prices = Vec::new();
    for p in panels {
        for (meta, row) in p.currencies.iter().zip(&p.prices) {
            let mut aligned = vec![None; dates.len()];
            for (d, cell) in p.dates.iter().zip(row) {
                aligned[position[d]] = *cell;
            }
            currencies.push(meta.clone());
            prices.push(aligned);
        }
    }
    PricePanel::new(currencies, dates, prices)
}
