use chrono::NaiveDate;

use crate::error::{Error, Result};

/// A dated observation of a single price series.
pub type DatedValue = (NaiveDate, f64);

/// Joins two series at `switch_date`: `fallback` strictly before it and
/// `primary` on and after it (e.g. ECU rates ahead of the euro).
///
/// `primary` must contain an observation dated exactly `switch_date`.
pub fn splice_series(
    primary: &[DatedValue],
    fallback: &[DatedValue],
    switch_date: NaiveDate,
) -> Result<Vec<DatedValue>> {
    for (name, s) in [("primary", primary), ("fallback", fallback)] {
        if s.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Validation(format!(
                "{name} series dates not strictly increasing"
            )));
        }
    }
    if !primary.iter().any(|(d, _)| *d == switch_date) {
        return Err(Error::Splice(format!(
            "primary series has no observation on the switch date {switch_date}"
        )));
    }
    let mut out: Vec<DatedValue> = fallback.iter().filter(|(d, _)| *d < switch_date).copied().collect();
    out.extend(primary.iter().filter(|(d, _)| *d >= switch_date).copied());
    Ok(out)
}
