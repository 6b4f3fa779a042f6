//! Synthetic price panels with known ground truth.
//!
//! A synthetic spec file is TOML: an optional top-level `start_date`
//! (ISO date, default 1995-10-23) and one `[[series]]` table per currency:
//!
//! ```toml
//! start_date = "1995-10-23"
//!
//! [[series]]
//! code = "AAA"
//! market_class = "developed"     # optional
//! regime = "floating"            # optional
//! region = "Europe"              # optional
//! generator = "student_t_returns"
//! nu = 4.0
//! length = 6033                  # price observations, >= 100
//! seed = 17
//! scale = 0.005                  # optional log-return multiplier, default 1
//! ```
//!
//! Generators and their parameters: `gaussian_random_walk`,
//! `ar1_profile` (`phi`), `pareto_returns` (`gamma`, `x_min`),
//! `student_t_returns` (`nu`). Random variates come from
//! [`crate::rng::SeededStream`].

use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{CurrencyMeta, MarketClass, PricePanel, Regime};
use crate::error::{Error, Result};
use crate::rng::SeededStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum Generator {
    /// Log price accumulates i.i.d. standard normal returns.
    GaussianRandomWalk,
    /// Stationary AR(1) path used directly as the log-price profile.
    Ar1Profile { phi: f64 },
    /// i.i.d. Pareto magnitudes `x_min * u^(-1/(gamma-1))` with alternating
    /// signs (+, −, +, …) accumulated into the log price.
    ParetoReturns { gamma: f64, x_min: f64 },
    /// i.i.d. Student-t returns with `nu` degrees of freedom.
    StudentTReturns { nu: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    #[serde(flatten)]
    pub generator: Generator,
    /// Number of price observations.
    pub length: usize,
    pub seed: u64,
    #[serde(default = "unit_scale")]
    pub scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

pub const MIN_SYNTHETIC_LENGTH: usize = 100;

impl SyntheticSpec {
    pub fn new(generator: Generator, length: usize, seed: u64) -> Self {
        SyntheticSpec {
            generator,
            length,
            seed,
            scale: 1.0,
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.length < MIN_SYNTHETIC_LENGTH {
            return Err(Error::Config(format!(
                "synthetic length {} below minimum {MIN_SYNTHETIC_LENGTH}",
                self.length
            )));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::Config(format!("scale must be positive, got {}", self.scale)));
        }
        match self.generator {
            Generator::GaussianRandomWalk => Ok(()),
            Generator::Ar1Profile { phi } if phi.abs() < 1.0 => Ok(()),
            Generator::Ar1Profile { phi } => Err(Error::Config(format!(
                "AR(1) coefficient must satisfy |phi| < 1, got {phi}"
            ))),
            Generator::ParetoReturns { gamma, x_min } if gamma > 1.0 && x_min > 0.0 => Ok(()),
            Generator::ParetoReturns { gamma, x_min } => Err(Error::Config(format!(
                "Pareto returns need gamma > 1 and x_min > 0, got gamma={gamma}, x_min={x_min}"
            ))),
            Generator::StudentTReturns { nu } if nu > 0.0 => Ok(()),
            Generator::StudentTReturns { nu } => Err(Error::Config(format!(
                "Student-t degrees of freedom must be > 0, got {nu}"
            ))),
        }
    }

    /// Unscaled log-price path of `length` points starting at 0 (for the
    /// AR(1) generator, the stationary profile itself).
    pub fn log_path(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let mut stream = SeededStream::new(self.seed);
        let n = self.length;
        let path = match self.generator {
            Generator::Ar1Profile { phi } => {
                let mut x = stream.normal() / (1.0 - phi * phi).sqrt();
                let mut path = Vec::with_capacity(n);
                path.push(x);
                for _ in 1..n {
                    x = phi * x + stream.normal();
                    path.push(x);
                }
                path
            }
            _ => {
                let increments = self.increments_from(&mut stream, n - 1);
                let mut path = Vec::with_capacity(n);
                let mut level = 0.0;
                path.push(level);
                for r in increments {
                    level += r;
                    path.push(level);
                }
                path
            }
        };
        Ok(path)
    }

    /// The `length - 1` unscaled returns a return-based generator draws
    /// (for `ar1_profile`, the differences of its profile).
    pub fn increments(&self) -> Result<Vec<f64>> {
        match self.generator {
            Generator::Ar1Profile { .. } => {
                let p = self.log_path()?;
                Ok(p.windows(2).map(|w| w[1] - w[0]).collect())
            }
            _ => {
                self.validate()?;
                let mut stream = SeededStream::new(self.seed);
                Ok(self.increments_from(&mut stream, self.length - 1))
            }
        }
    }

    fn increments_from(&self, stream: &mut SeededStream, n: usize) -> Vec<f64> {
        match self.generator {
            Generator::GaussianRandomWalk => (0..n).map(|_| stream.normal()).collect(),
            Generator::ParetoReturns { gamma, x_min } => (0..n)
                .map(|i| {
                    let x = pareto_draw(stream, gamma, x_min);
                    if i % 2 == 0 {
                        x
                    } else {
                        -x
                    }
                })
                .collect(),
            Generator::StudentTReturns { nu } => (0..n).map(|_| stream.student_t(nu)).collect(),
            Generator::Ar1Profile { .. } => unreachable!("profile generator has no i.i.d. increments"),
        }
    }

    /// Prices `exp(scale * log_path)`.
    pub fn prices(&self) -> Result<Vec<f64>> {
        Ok(self.log_path()?.into_iter().map(|x| (self.scale * x).exp()).collect())
    }
}

/// One Pareto variate with PDF exponent `gamma` and lower cutoff `x_min`.
pub fn pareto_draw(stream: &mut SeededStream, gamma: f64, x_min: f64) -> f64 {
    x_min * stream.uniform().powf(-1.0 / (gamma - 1.0))
}

/// `n` i.i.d. Pareto magnitudes.
pub fn pareto_sample(gamma: f64, x_min: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut stream = SeededStream::new(seed);
    (0..n).map(|_| pareto_draw(&mut stream, gamma, x_min)).collect()
}

/// `n` i.i.d. standard normals.
pub fn normal_sample(n: usize, seed: u64) -> Vec<f64> {
    let mut stream = SeededStream::new(seed);
    (0..n).map(|_| stream.normal()).collect()
}

/// `n` i.i.d. Student-t variates.
pub fn student_t_sample(nu: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut stream = SeededStream::new(seed);
    (0..n).map(|_| stream.student_t(nu)).collect()
}

/// A synthetic currency: metadata plus the spec that generates its prices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSeries {
    pub code: String,
    #[serde(default)]
    pub market_class: Option<MarketClass>,
    #[serde(default)]
    pub regime: Option<Regime>,
    #[serde(default)]
    pub region: Option<String>,
    #[serde(flatten)]
    pub spec: SyntheticSpec,
}

impl SyntheticSeries {
    pub fn meta(&self) -> CurrencyMeta {
        CurrencyMeta {
            code: self.code.clone(),
            regime: self.regime,
            market_class: self.market_class,
            region: self.region.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticFile {
    #[serde(default = "default_start")]
    pub start_date: NaiveDate,
    pub series: Vec<SyntheticSeries>,
}

pub fn default_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(1995, 10, 23).expect("valid date")
}

impl SyntheticFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("synthetic spec: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("synthetic spec serializes")
    }

    pub fn generate(&self) -> Result<PricePanel> {
        gen_synthetic_panel(&self.series, self.start_date)
    }
}

/// Builds a panel of consecutive calendar days from `start`. Series shorter
/// than the longest one get trailing gaps.
pub fn gen_synthetic_panel(series: &[SyntheticSeries], start: NaiveDate) -> Result<PricePanel> {
    if series.is_empty() {
        return Err(Error::Config("no synthetic series given".into()));
    }
    let rows: Vec<Vec<f64>> = series.iter().map(|s| s.spec.prices()).collect::<Result<_>>()?;
    let days = rows.iter().map(Vec::len).max().unwrap_or(0);
    let dates = (0..days).map(|i| start + chrono::Days::new(i as u64)).collect();
    let prices = rows
        .into_iter()
        .map(|row| {
            let mut cells: Vec<Option<f64>> = row.into_iter().map(Some).collect();
            cells.resize(days, None);
            cells
        })
        .collect();
    PricePanel::new(series.iter().map(SyntheticSeries::meta).collect(), dates, prices)
}
