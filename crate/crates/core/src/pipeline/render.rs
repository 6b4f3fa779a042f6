use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{CurrencyRecord, PeriodReport, Report};
use crate::clustering::Linkage;
use crate::error::{Error, Result};

const CURRENCY_HEADER: &str = "code,market_class,regime,region,n_prices,n_returns,mean,std,skewness,kurtosis,\
gamma_positive,alpha_positive,xmin_positive,ntail_positive,ks_positive,\
gamma_negative,alpha_negative,xmin_negative,ntail_negative,ks_negative,\
dfa_exponent,dfa_r2,vr,g_mean,theil_mean";

/// Files written for each report section, relative to its directory.
fn section_files() -> Vec<String> {
    let mut files: Vec<String> = [
        "currencies.csv",
        "ccdf.csv",
        "dfa.csv",
        "distance_matrix.csv",
        "cross_section.json",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for l in Linkage::ALL {
        for ext in ["nwk", "json"] {
            files.push(format!("dendrogram_{l}.{ext}"));
        }
        files.push(format!("merges_{l}.csv"));
        files.push(format!("clusters_{l}.csv"));
    }
    files
}

/// Relative paths of every file `render_report` writes for `report`:
/// `report.json`, then one directory per section (`full`, `period_1`, …).
pub fn manifest(report: &Report) -> Vec<PathBuf> {
    let mut out = vec![PathBuf::from("report.json")];
    for section in report.sections() {
        for f in section_files() {
            out.push(Path::new(&section.label).join(f));
        }
    }
    out
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn currency_row(r: &CurrencyRecord) -> String {
    let m = r.moments;
    let tp = r.tail_positive;
    let tn = r.tail_negative;
    let fields = [
        csv_field(&r.code),
        r.market_class.map(|c| c.as_str().to_string()).unwrap_or_default(),
        r.regime.map(|c| c.as_str().to_string()).unwrap_or_default(),
        csv_field(r.region.as_deref().unwrap_or("")),
        r.n_prices.to_string(),
        r.n_returns.to_string(),
        opt(m.map(|m| m.mean)),
        opt(m.map(|m| m.std)),
        opt(m.map(|m| m.skewness)),
        opt(m.map(|m| m.kurtosis)),
        opt(tp.map(|t| t.gamma)),
        opt(tp.map(|t| t.alpha)),
        opt(tp.map(|t| t.x_min)),
        tp.map(|t| t.n_tail.to_string()).unwrap_or_default(),
        opt(tp.map(|t| t.ks)),
        opt(tn.map(|t| t.gamma)),
        opt(tn.map(|t| t.alpha)),
        opt(tn.map(|t| t.x_min)),
        tn.map(|t| t.n_tail.to_string()).unwrap_or_default(),
        opt(tn.map(|t| t.ks)),
        opt(r.dfa.as_ref().map(|d| d.exponent)),
        opt(r.dfa.as_ref().map(|d| d.fit_r2)),
        opt(r.vr.map(|v| v.vr)),
        opt(r.g_mean),
        opt(r.theil_mean),
    ];
    fields.join(",")
}

fn render_section(section: &PeriodReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut text = format!("{CURRENCY_HEADER}\n");
    for r in &section.currencies {
        text.push_str(&currency_row(r));
        text.push('\n');
    }
    write(&dir.join("currencies.csv"), &text)?;

    let mut text = String::from("code,side,x,ccdf\n");
    for r in &section.currencies {
        for (side, ccdf) in [("positive", &r.ccdf_positive), ("negative", &r.ccdf_negative)] {
            for (x, p) in ccdf.iter().flat_map(|c| &c.points) {
                let _ = writeln!(text, "{},{side},{x},{p}", csv_field(&r.code));
            }
        }
    }
    write(&dir.join("ccdf.csv"), &text)?;

    let mut text = String::from("code,window,fluctuation\n");
    for r in &section.currencies {
        if let Some(d) = &r.dfa {
            for (s, f) in d.window_sizes.iter().zip(&d.fluctuation) {
                let _ = writeln!(text, "{},{s},{f}", csv_field(&r.code));
            }
        }
    }
    write(&dir.join("dfa.csv"), &text)?;

    let matrix = section
        .similarity
        .as_ref()
        .map_or_else(|| "code\n".to_string(), |s| s.matrix.to_csv());
    write(&dir.join("distance_matrix.csv"), &matrix)?;
    write(
        &dir.join("cross_section.json"),
        &serde_json::to_string_pretty(&section.cross_section)?,
    )?;

    for l in Linkage::ALL {
        let c = section.clustering(l);
        write(
            &dir.join(format!("dendrogram_{l}.nwk")),
            &c.map_or(String::new(), |c| format!("{}\n", c.newick)),
        )?;
        let json = match c {
            Some(c) => c.dendrogram.to_json()?,
            None => "null".to_string(),
        };
        write(&dir.join(format!("dendrogram_{l}.json")), &json)?;
        let merges = c.map_or_else(
            || "merge,a,b,height,size,x_a,x_b,x,height_a,height_b\n".to_string(),
            |c| c.dendrogram.merge_coordinates_csv(),
        );
        write(&dir.join(format!("merges_{l}.csv")), &merges)?;
        let clusters = c.map_or_else(|| "code,cluster_id\n".to_string(), |c| c.max_cut.to_csv(&c.dendrogram));
        write(&dir.join(format!("clusters_{l}.csv")), &clusters)?;
    }
    Ok(())
}

/// Writes the JSON report and plot-ready tables under `outdir`, replacing
/// earlier output. Returns the absolute paths written, in manifest order.
pub fn render_report(report: &Report, outdir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(outdir).map_err(|e| Error::io(outdir, e))?;
    write(&outdir.join("report.json"), &report.to_json()?)?;
    for section in report.sections() {
        render_section(section, &outdir.join(&section.label))?;
    }
    Ok(manifest(report).into_iter().map(|p| outdir.join(p)).collect())
}
