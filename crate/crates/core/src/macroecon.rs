//! Macroeconomic indicators and the cross-sectional fits against them.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::csv_err;
use crate::stats::{self, P_FLOOR};

/// Size of the export product classification.
pub const DEFAULT_PRODUCT_SLOTS: usize = 777;
pub const DEFAULT_YEARS: RangeInclusive<i32> = 1995..=2012;

/// Condition numbers above this make a design singular.
const MAX_CONDITION: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheilMode {
    /// Mean taken over all `M` slots, zeros included.
    #[default]
    FixedSlots,
    /// `M` is the number of products with non-zero value.
    NonzeroOnly,
}

/// Theil index of export values. Products absent from `exports` count as
/// zero-valued slots. The result lies in `[0, ln M]`.
pub fn theil_index(exports: &[f64], slots: usize, mode: TheilMode) -> Result<f64> {
    if let Some(i) = exports.iter().position(|x| !(*x >= 0.0) || !x.is_finite()) {
        return Err(Error::Domain(format!("export value {} at index {i}", exports[i])));
    }
    let nonzero = exports.iter().filter(|x| **x > 0.0).count();
    if nonzero == 0 {
        return Err(Error::DegenerateExports);
    }
    let m = match mode {
        TheilMode::FixedSlots => {
            if slots == 0 || exports.len() > slots {
                return Err(Error::Config(format!(
                    "{} products do not fit in {slots} slots",
                    exports.len()
                )));
            }
            slots
        }
        TheilMode::NonzeroOnly => nonzero,
    };
    let positive = exports.iter().filter(|x| **x > 0.0);
    // Every slot at the mean; summing shares would leave rounding residue.
    let first = exports.iter().copied().find(|x| *x > 0.0).unwrap_or(0.0);
    if nonzero == m && positive.clone().all(|x| *x == first) {
        return Ok(0.0);
    }
    let total: f64 = exports.iter().sum();
    let mf = m as f64;
    let t: f64 = positive
        .map(|&x| {
            let s = x / total;
            s * (s * mf).ln()
        })
        .sum();
    Ok(t.clamp(0.0, mf.ln()))
}

/// Arithmetic mean over the years of `range` present in `annual`.
pub fn mean_indicator(annual: &BTreeMap<i32, f64>, range: RangeInclusive<i32>) -> Result<f64> {
    let values: Vec<f64> = annual.range(range.clone()).map(|(_, v)| *v).collect();
    if values.is_empty() {
        return Err(Error::Coverage(format!(
            "no data between {} and {}",
            range.start(),
            range.end()
        )));
    }
    let span = (range.end() - range.start() + 1) as usize;
    if values.len() < span {
        log::warn!("{} of {span} years missing; averaging the rest", span - values.len());
    }
    Ok(stats::mean(&values))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub rho: f64,
    pub p: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r2: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub r2: f64,
    pub p: f64,
    pub n: usize,
}

fn logs(name: &str, xs: &[f64]) -> Result<Vec<f64>> {
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            if x > 0.0 && x.is_finite() {
                Ok(x.ln())
            } else {
                Err(Error::Domain(format!("{name}[{i}] = {x} is not positive")))
            }
        })
        .collect()
}

fn check_lengths(n: usize, others: &[usize], needed: usize) -> Result<()> {
    if others.iter().any(|&m| m != n) {
        return Err(Error::Validation(format!("length mismatch: {n} vs {others:?}")));
    }
    if n < needed {
        return Err(Error::Length { needed, got: n });
    }
    Ok(())
}

/// Pearson correlation of `ln x` and `ln y` with its two-sided p-value.
pub fn log_pearson(x: &[f64], y: &[f64]) -> Result<CorrelationResult> {
    check_lengths(x.len(), &[y.len()], 3)?;
    let (lx, ly) = (logs("x", x)?, logs("y", y)?);
    let rho = stats::pearson(&lx, &ly)?;
    Ok(CorrelationResult {
        rho,
        p: stats::correlation_p_value(rho, x.len()),
        n: x.len(),
    })
}

/// Fits `y = prefactor · x^exponent` by least squares in log space.
pub fn loglog_power_fit(x: &[f64], y: &[f64]) -> Result<PowerFit> {
    check_lengths(x.len(), &[y.len()], 3)?;
    let (lx, ly) = (logs("x", x)?, logs("y", y)?);
    let fit = stats::linear_fit(&lx, &ly)?;
    Ok(PowerFit {
        exponent: fit.slope,
        prefactor: fit.intercept.exp(),
        r2: fit.r2,
        n: x.len(),
    })
}

/// `ln α₄ = b0 + b1 ln g + b2 ln T` by least squares.
pub fn multilinear_fit(alpha4: &[f64], g: &[f64], theil: &[f64]) -> Result<RegressionFit> {
    let n = alpha4.len();
    check_lengths(n, &[g.len(), theil.len()], 4)?;
    let y = DVector::from_vec(logs("alpha4", alpha4)?);
    let (lg, lt) = (logs("g", g)?, logs("theil", theil)?);
    let x = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => 1.0,
        1 => lg[i],
        _ => lt[i],
    });
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(cond < MAX_CONDITION) {
        return Err(Error::SingularDesign(cond));
    }
    let b = svd
        .solve(&y, 0.0)
        .map_err(|e| Error::Validation(format!("least squares failed: {e}")))?;
    let resid = &y - &x * &b;
    let ss_res = resid.norm_squared();
    let my = y.mean();
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if ss_tot <= 0.0 {
        return Err(Error::DegenerateVariance("alpha4 is constant".into()));
    }
    let r2 = (1.0 - ss_res / ss_tot).clamp(0.0, 1.0);
    let df2 = n - 3;
    let p = if r2 >= 1.0 {
        P_FLOOR
    } else {
        stats::f_test_p_value((r2 / 2.0) / ((1.0 - r2) / df2 as f64), 2, df2)
    };
    Ok(RegressionFit {
        b0: b[0],
        b1: b[1],
        b2: b[2],
        r2,
        p,
        n,
    })
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MacroRecord {
    pub code: String,
    pub g_annual: BTreeMap<i32, f64>,
    /// Product values per year, indexed by product id order.
    pub exports_annual: BTreeMap<i32, Vec<f64>>,
    pub g_mean: Option<f64>,
    pub theil_mean: Option<f64>,
}

impl MacroRecord {
    /// Fills `g_mean` and `theil_mean` from the annual data. Indicators
    /// with no data in range stay `None`.
    pub fn summarize(&mut self, years: RangeInclusive<i32>, slots: usize, mode: TheilMode) -> Result<()> {
        self.g_mean = match mean_indicator(&self.g_annual, years.clone()) {
            Ok(v) => Some(v),
            Err(Error::Coverage(_)) => None,
            Err(e) => return Err(e),
        };
        let mut theil = BTreeMap::new();
        for (&year, values) in self.exports_annual.range(years.clone()) {
            match theil_index(values, slots, mode) {
                Ok(t) => {
                    theil.insert(year, t);
                }
                Err(Error::DegenerateExports) => {
                    log::warn!("{}: no exports recorded in {year}", self.code);
                }
                Err(e) => return Err(e),
            }
        }
        self.theil_mean = match mean_indicator(&theil, years) {
            Ok(v) => Some(v),
            Err(Error::Coverage(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(())
    }
}

fn read_csv(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("missing column {name:?}"),
        })
}

fn field<T: std::str::FromStr>(record: &csv::StringRecord, idx: usize, name: &str) -> Result<T> {
    let line = record.position().map_or(0, |p| p.line());
    let raw = record.get(idx).unwrap_or("");
    raw.parse().map_err(|_| Error::Parse {
        line,
        message: format!("bad {name} {raw:?}"),
    })
}

fn non_negative(v: f64, record: &csv::StringRecord, name: &str) -> Result<f64> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        let line = record.position().map_or(0, |p| p.line());
        Err(Error::Parse {
            line,
            message: format!("{name} must be non-negative, got {v}"),
        })
    }
}

/// Reads `code,year,gdp_per_capita` rows.
pub fn parse_gdp<R: std::io::Read>(reader: csv::Reader<R>) -> Result<BTreeMap<String, BTreeMap<i32, f64>>> {
    let mut reader = reader;
    let headers = reader.headers().map_err(csv_err)?.clone();
    let (c, y, g) = (
        column(&headers, "code")?,
        column(&headers, "year")?,
        column(&headers, "gdp_per_capita")?,
    );
    let mut out: BTreeMap<String, BTreeMap<i32, f64>> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let code: String = field(&record, c, "code")?;
        let year: i32 = field(&record, y, "year")?;
        let value = non_negative(field(&record, g, "gdp_per_capita")?, &record, "gdp_per_capita")?;
        out.entry(code).or_default().insert(year, value);
    }
    Ok(out)
}

pub fn load_gdp(path: &Path) -> Result<BTreeMap<String, BTreeMap<i32, f64>>> {
    parse_gdp(read_csv(path)?)
}

/// Reads `code,year,product_id,value_usd` rows. Values repeated for the
/// same product and year are summed.
pub fn parse_exports<R: std::io::Read>(reader: csv::Reader<R>) -> Result<BTreeMap<String, BTreeMap<i32, Vec<f64>>>> {
    let mut reader = reader;
    let headers = reader.headers().map_err(csv_err)?.clone();
    let c = column(&headers, "code")?;
    let y = column(&headers, "year")?;
    let p = column(&headers, "product_id")?;
    let v = column(&headers, "value_usd")?;
    let mut by_product: BTreeMap<String, BTreeMap<i32, BTreeMap<String, f64>>> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let code: String = field(&record, c, "code")?;
        let year: i32 = field(&record, y, "year")?;
        let product: String = field(&record, p, "product_id")?;
        let value = non_negative(field(&record, v, "value_usd")?, &record, "value_usd")?;
        *by_product
            .entry(code)
            .or_default()
            .entry(year)
            .or_default()
            .entry(product)
            .or_default() += value;
    }
    Ok(by_product
        .into_iter()
        .map(|(code, years)| {
            let years = years.into_iter().map(|(y, p)| (y, p.into_values().collect())).collect();
            (code, years)
        })
        .collect())
}

pub fn load_exports(path: &Path) -> Result<BTreeMap<String, BTreeMap<i32, Vec<f64>>>> {
    parse_exports(read_csv(path)?)
}

/// Joins GDP and export tables into summarized records, one per code.
pub fn build_records(
    gdp: BTreeMap<String, BTreeMap<i32, f64>>,
    exports: BTreeMap<String, BTreeMap<i32, Vec<f64>>>,
    years: RangeInclusive<i32>,
    slots: usize,
    mode: TheilMode,
) -> Result<Vec<MacroRecord>> {
    let mut records: BTreeMap<String, MacroRecord> = BTreeMap::new();
    for (code, g) in gdp {
        records
            .entry(code.clone())
            .or_insert_with(|| MacroRecord {
                code,
                ..Default::default()
            })
            .g_annual = g;
    }
    for (code, x) in exports {
        records
            .entry(code.clone())
            .or_insert_with(|| MacroRecord {
                code,
                ..Default::default()
            })
            .exports_annual = x;
    }
    let mut out: Vec<MacroRecord> = records.into_values().collect();
    for r in &mut out {
        r.summarize(years.clone(), slots, mode)?;
    }
    Ok(out)
}
