//! `fx-tails`: run the fluctuation analysis from the command line.
//!
//! Log verbosity follows `FX_TAILS_LOG` (`error`, `warn`, `info`, `debug`).
//! Exit status is 0 on success, 1 for unusable input data and 2 for a bad
//! configuration or command line.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use fx_tails_core::clustering::Linkage;
use fx_tails_core::ingest::synthetic::SyntheticFile;
use fx_tails_core::ingest::{default_start_date, gen_synthetic_panel, save_price_panel};
use fx_tails_core::pipeline::{
    analyze_period, bundled_series, prepare_input, render_report, run_analysis, split_periods, AnalysisConfig,
    PeriodReport, PreparedInput, Report, Stages,
};
use fx_tails_core::Error;

const LOG_ENV: &str = "FX_TAILS_LOG";

#[derive(Parser)]
#[command(
    name = "fx-tails",
    version,
    about = "Heavy-tail, scaling and similarity analysis of exchange-rate panels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Analysis config (TOML). Defaults analyze the bundled synthetic panel.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// 0 for the full span, 1..=period_count for a sub-period.
    #[arg(long, value_name = "N", default_value_t = 0)]
    period: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Full analysis; writes the report and plot-ready tables.
    Run {
        #[command(flatten)]
        common: Common,
        /// Output directory, overriding the config.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Load and validate the panel, metadata and indicators.
    IngestCheck {
        #[command(flatten)]
        common: Common,
    },
    /// Power-law tail fits and moments per currency.
    Tails {
        #[command(flatten)]
        common: Common,
    },
    /// DFA exponents and variance ratios per currency.
    Scaling {
        #[command(flatten)]
        common: Common,
    },
    /// √JS distance matrix as CSV.
    Similarity {
        #[command(flatten)]
        common: Common,
    },
    /// Dendrograms and cuts of the distance matrix.
    Cluster {
        #[command(flatten)]
        common: Common,
        /// Only this linkage.
        #[arg(long)]
        linkage: Option<Linkage>,
    },
    /// Cross-sectional fits of kurtosis against the macro indicators.
    Macro {
        #[command(flatten)]
        common: Common,
    },
    /// Write a synthetic price panel CSV.
    Synth {
        /// Series definitions (TOML); the bundled 75-currency panel if absent.
        #[arg(long, value_name = "FILE")]
        spec: Option<PathBuf>,
        /// Seed for the bundled panel.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Render a saved report.json into a directory.
    Report {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
}

fn load_config(path: Option<&Path>) -> Result<AnalysisConfig, Error> {
    match path {
        Some(p) => AnalysisConfig::load(p),
        None => Ok(AnalysisConfig::default()),
    }
}

/// Analyzes the requested window with the given stages.
fn section(common: &Common, stages: Stages) -> Result<(PreparedInput, PeriodReport), Error> {
    let cfg = load_config(common.config.as_deref())?;
    let input = prepare_input(&cfg)?;
    let report = if common.period == 0 {
        analyze_period(&cfg, &input.panel, &input.indicators, "full", stages)
    } else {
        if common.period > cfg.period_count {
            return Err(Error::Config(format!(
                "period {} requested but the config defines {}",
                common.period, cfg.period_count
            )));
        }
        let parts = split_periods(&input.panel, cfg.period_count)?;
        let label = format!("period_{}", common.period);
        analyze_period(&cfg, &parts[common.period - 1], &input.indicators, &label, stages)
    };
    Ok((input, report))
}

fn print_json(v: &Value) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(v)?;
    emit(&format!("{text}\n"))
}

// A closed pipe (e.g. `| head`) is a normal way to stop reading.
fn emit(text: &str) -> Result<(), Error> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::Io {
            path: PathBuf::from("<stdout>"),
            source: e,
        }),
        _ => Ok(()),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { common, out } => {
            let mut cfg = load_config(common.config.as_deref())?;
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            let report = run_analysis(&cfg)?;
            let files = render_report(&report, &cfg.output_dir)?;
            let shown = report.period(common.period).ok_or_else(|| {
                Error::Config(format!(
                    "no period {} in a {}-period run",
                    common.period, cfg.period_count
                ))
            })?;
            print_json(&json!({
                "output_dir": cfg.output_dir,
                "files": files.len(),
                "section": shown.label,
                "currencies": shown.currencies.len(),
                "tail_summary": shown.cross_section.tail_summary,
                "kurtosis_g_correlation": shown.cross_section.kurtosis_g_correlation,
                "regression": shown.cross_section.regression,
                "warnings": report.warnings.len() + report.sections().map(|s| s.warnings.len()).sum::<usize>(),
            }))
        }
        Command::IngestCheck { common } => {
            let cfg = load_config(common.config.as_deref())?;
            let input = prepare_input(&cfg)?;
            let panel = &input.panel;
            let coverage: Vec<Value> = panel
                .currencies()
                .iter()
                .zip(panel.coverage())
                .map(|(m, c)| json!({ "code": m.code, "market_class": m.market_class, "coverage": c }))
                .collect();
            print_json(&json!({
                "source": input.source,
                "currencies": panel.n_currencies(),
                "days": panel.n_days(),
                "first_date": panel.dates().first(),
                "last_date": panel.dates().last(),
                "coverage": coverage,
                "excluded": input.excluded,
                "warnings": input.warnings,
            }))
        }
        Command::Tails { common } => {
            let (_, s) = section(
                &common,
                Stages {
                    tails: true,
                    ..Stages::NONE
                },
            )?;
            let rows: Vec<Value> = s
                .currencies
                .iter()
                .map(|c| {
                    json!({
                        "code": c.code,
                        "moments": c.moments,
                        "positive": c.tail_positive,
                        "negative": c.tail_negative,
                        "failures": c.failures,
                    })
                })
                .collect();
            print_json(&json!({ "section": s.label, "currencies": rows, "summary": s.cross_section.tail_summary }))
        }
        Command::Scaling { common } => {
            let (_, s) = section(
                &common,
                Stages {
                    scaling: true,
                    ..Stages::NONE
                },
            )?;
            let rows: Vec<Value> = s
                .currencies
                .iter()
                .map(|c| json!({ "code": c.code, "dfa": c.dfa, "vr": c.vr, "failures": c.failures }))
                .collect();
            print_json(&json!({ "section": s.label, "currencies": rows }))
        }
        Command::Similarity { common } => {
            let (_, s) = section(
                &common,
                Stages {
                    similarity: true,
                    ..Stages::NONE
                },
            )?;
            let sim = s
                .similarity
                .ok_or_else(|| Error::Validation("fewer than two currencies with usable returns".into()))?;
            for e in &sim.excluded {
                log::warn!("{} excluded: {}", e.code, e.reason);
            }
            emit(&sim.matrix.to_csv())
        }
        Command::Cluster { common, linkage } => {
            let (_, s) = section(
                &common,
                Stages {
                    clustering: true,
                    ..Stages::NONE
                },
            )?;
            if s.clusterings.is_empty() {
                return Err(Error::Validation(
                    "fewer than two currencies with usable returns".into(),
                ));
            }
            let rows: Vec<Value> = s
                .clusterings
                .iter()
                .filter(|c| linkage.is_none_or(|l| l == c.linkage))
                .map(|c| {
                    json!({
                        "linkage": c.linkage,
                        "newick": c.newick,
                        "max_cut": c.max_cut,
                        "threshold_cut": c.threshold_cut,
                    })
                })
                .collect();
            print_json(&json!({ "section": s.label, "clusterings": rows }))
        }
        Command::Macro { common } => {
            let (input, s) = section(&common, Stages::NONE)?;
            let rows: Vec<Value> = s
                .currencies
                .iter()
                .map(|c| {
                    json!({
                        "code": c.code,
                        "market_class": c.market_class,
                        "g_mean": c.g_mean,
                        "theil_mean": c.theil_mean,
                        "kurtosis": c.kurtosis(),
                    })
                })
                .collect();
            let cs = &s.cross_section;
            print_json(&json!({
                "section": s.label,
                "source": input.source,
                "currencies": rows,
                "kurtosis_vs_g": cs.kurtosis_vs_g,
                "kurtosis_g_correlation": cs.kurtosis_g_correlation,
                "kurtosis_vs_theil": cs.kurtosis_vs_theil,
                "kurtosis_theil_correlation": cs.kurtosis_theil_correlation,
                "regression": cs.regression,
                "failures": cs.failures,
            }))
        }
        Command::Synth { spec, seed, out } => {
            let panel = match spec {
                Some(p) => SyntheticFile::load(&p)?.generate()?,
                None => gen_synthetic_panel(&bundled_series(seed), default_start_date())?,
            };
            save_price_panel(&panel, &out)?;
            eprintln!(
                "wrote {} currencies x {} days to {}",
                panel.n_currencies(),
                panel.n_days(),
                out.display()
            );
            Ok(())
        }
        Command::Report { input, out } => {
            let text =
                std::fs::read_to_string(&input).map_err(|e| Error::Validation(format!("{}: {e}", input.display())))?;
            let report = Report::from_json(&text)?;
            let files = render_report(&report, &out)?;
            eprintln!("wrote {} files to {}", files.len(), out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fx-tails: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
