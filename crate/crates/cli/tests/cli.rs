use std::path::Path;
use std::process::{Command, Output};

const SPEC: &str = r#"
start_date = "2001-01-01"

[[series]]
code = "CAD"
market_class = "developed"
generator = "gaussian_random_walk"
length = 700
seed = 1
scale = 0.004

[[series]]
code = "BRL"
market_class = "emerging"
generator = "student_t_returns"
nu = 3.0
length = 700
seed = 2
scale = 0.005

[[series]]
code = "KES"
market_class = "frontier"
generator = "pareto_returns"
gamma = 3.0
x_min = 1.0
length = 700
seed = 3
scale = 0.002

[[series]]
code = "NGN"
market_class = "frontier"
generator = "pareto_returns"
gamma = 2.7
x_min = 1.0
length = 700
seed = 4
scale = 0.002
"#;

fn fx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fx-tails"))
        .args(args)
        .env("FX_TAILS_LOG", "error")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes the synthetic panel and a config pointing at it.
fn setup(dir: &Path) -> std::path::PathBuf {
    let spec = dir.join("synth.toml");
    std::fs::write(&spec, SPEC).unwrap();
    let panel = dir.join("panel.csv");
    let out = fx(&["synth", "--spec", s(&spec), "--out", s(&panel)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cfg = dir.join("config.toml");
    std::fs::write(&cfg, "panel = \"panel.csv\"\nbins = 100\noutput_dir = \"out\"\n").unwrap();
    cfg
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn ingest_check_reports_panel() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path());
    let v = json(&fx(&["ingest-check", "--config", s(&cfg)]));
    assert_eq!(v["currencies"], 4);
    assert_eq!(v["days"], 700);
    assert_eq!(v["first_date"], "2001-01-01");
}

#[test]
fn run_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path());
    let v = json(&fx(&["run", "--config", s(&cfg)]));
    assert_eq!(v["files"], 69);
    assert!(dir.path().join("out/report.json").exists());
    assert!(dir.path().join("out/period_3/dendrogram_complete.nwk").exists());

    let again = dir.path().join("again");
    let out = fx(&[
        "report",
        "--input",
        s(&dir.path().join("out/report.json")),
        "--out",
        s(&again),
    ]);
    assert!(out.status.success());
    assert_eq!(
        std::fs::read(again.join("full/currencies.csv")).unwrap(),
        std::fs::read(dir.path().join("out/full/currencies.csv")).unwrap()
    );
}

#[test]
fn analysis_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path());
    let v = json(&fx(&["tails", "--config", s(&cfg)]));
    assert_eq!(v["currencies"].as_array().unwrap().len(), 4);
    let v = json(&fx(&["scaling", "--config", s(&cfg), "--period", "2"]));
    assert_eq!(v["section"], "period_2");
    assert!(v["currencies"][0]["vr"]["vr"].is_number());
    let v = json(&fx(&["cluster", "--config", s(&cfg), "--linkage", "single"]));
    assert_eq!(v["clusterings"].as_array().unwrap().len(), 1);
    assert!(v["clusterings"][0]["newick"].as_str().unwrap().ends_with(';'));
    let v = json(&fx(&["macro", "--config", s(&cfg)]));
    assert!(v["kurtosis_g_correlation"]["rho"].is_number());

    let out = fx(&["similarity", "--config", s(&cfg)]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "code,BRL,CAD,KES,NGN");
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path());
    assert_eq!(
        fx(&["tails", "--config", s(&cfg), "--period", "4"]).status.code(),
        Some(2)
    );

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "period_count = 0\n").unwrap();
    assert_eq!(fx(&["run", "--config", s(&bad)]).status.code(), Some(2));
    std::fs::write(&bad, "no_such_key = 1\n").unwrap();
    assert_eq!(fx(&["tails", "--config", s(&bad)]).status.code(), Some(2));
    assert_eq!(
        fx(&["run", "--config", s(&dir.path().join("absent.toml"))])
            .status
            .code(),
        Some(2)
    );

    let missing = dir.path().join("missing.toml");
    std::fs::write(&missing, "panel = \"nope.csv\"\n").unwrap();
    assert_eq!(fx(&["ingest-check", "--config", s(&missing)]).status.code(), Some(1));

    let broken = dir.path().join("broken.csv");
    std::fs::write(&broken, "date,AAA\n2001-01-01,1\n2001-01-02,-4\n").unwrap();
    std::fs::write(&missing, "panel = \"broken.csv\"\n").unwrap();
    let out = fx(&["ingest-check", "--config", s(&missing)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());

    assert_eq!(fx(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn synth_bundled_panel() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bundled.csv");
    assert!(fx(&["synth", "--seed", "5", "--out", s(&out)]).status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(header.split(',').count(), 76);
    assert_eq!(text.lines().count(), 6036);
}
