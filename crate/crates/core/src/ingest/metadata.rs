use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CurrencyMeta, MarketClass, Regime};
use crate::error::{Error, Result};

/// One row of a metadata CSV: `code,regime,market_class,region` with
/// optional trailing `g_mean,theil_mean` indicator columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetadataRow {
    pub meta: CurrencyMeta,
    pub g_mean: Option<f64>,
    pub theil_mean: Option<f64>,
}

const TABLE1: &str = include_str!("../../data/table1.csv");

/// The 75-currency reference table (codes, regimes, MSCI classes, regions,
/// mean GDP per capita and mean Theil index).
pub fn table1() -> Vec<MetadataRow> {
    parse_metadata(TABLE1.as_bytes()).expect("bundled table is well-formed")
}

pub fn load_metadata(path: &Path) -> Result<Vec<MetadataRow>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_metadata(file)
}

pub fn parse_metadata<R: std::io::Read>(reader: R) -> Result<Vec<MetadataRow>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let code_col = col("code").ok_or_else(|| Error::Parse {
        line: 1,
        message: "metadata header lacks a `code` column".into(),
    })?;
    let (regime_col, class_col, region_col) = (col("regime"), col("market_class"), col("region"));
    let (g_col, t_col) = (col("g_mean"), col("theil_mean"));

    let mut rows = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |c: Option<usize>| c.and_then(|i| record.get(i)).filter(|s| !s.is_empty());
        let code = field(Some(code_col))
            .ok_or_else(|| Error::Parse {
                line,
                message: "empty currency code".into(),
            })?
            .to_string();
        if !seen.insert(code.clone()) {
            return Err(Error::Validation(format!(
                "duplicate currency code {code} at line {line}"
            )));
        }
        let at_line = |e: Error| match e {
            Error::Validation(m) => Error::Parse { line, message: m },
            other => other,
        };
        let regime = field(regime_col)
            .map(str::parse::<Regime>)
            .transpose()
            .map_err(at_line)?;
        let market_class = field(class_col)
            .map(str::parse::<MarketClass>)
            .transpose()
            .map_err(at_line)?;
        let number = |c: Option<usize>| -> Result<Option<f64>> {
            field(c)
                .map(|s| {
                    s.parse::<f64>().map_err(|_| Error::Parse {
                        line,
                        message: format!("not a number: {s:?}"),
                    })
                })
                .transpose()
        };
        rows.push(MetadataRow {
            meta: CurrencyMeta {
                code,
                regime,
                market_class,
                region: field(region_col).map(str::to_string),
            },
            g_mean: number(g_col)?,
            theil_mean: number(t_col)?,
        });
    }
    Ok(rows)
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Parse {
        line,
        message: e.to_string(),
    }
}
