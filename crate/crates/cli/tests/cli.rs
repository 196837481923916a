//! Config and report formats, exit codes, and export through the binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sampcert::export::{export, Format};
use sampcert::report::BoxRow;
use sampcert::{run_levelset, run_verify_dt, Overrides, RunConfig, RunReport, Verdict};

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn bundled(name: &str) -> RunConfig {
    RunConfig::load(&configs().join(format!("{name}.json"))).unwrap()
}

fn sampcert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sampcert")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const UNSTABLE_DT: &str = r#"{
  "name": "doubling",
  "system": { "dim": 1, "mode": "discrete", "regions": [{ "field": ["2*x1"] }] },
  "candidate": { "P": [[1]], "rho": 0.999, "M": 1, "M_max": 2 },
  "search": { "S": { "lo": [-1], "hi": [1] }, "delta_min": 0.1, "spacing": 0.1 }
}"#;

const UNSTABLE_CT: &str = r#"{
  "name": "growth",
  "system": { "dim": 1, "mode": "continuous", "h": 0.1, "regions": [{ "field": ["x1"] }] },
  "candidate": { "P": [[1]], "rho": 0.999, "M": 1, "M_max": 1 },
  "search": { "S": { "lo": [-1], "hi": [1] }, "delta_min": 0.1, "spacing": 0.1 }
}"#;

#[test]
fn bundled_configs_round_trip() {
    for name in ["2d", "piecewise", "3d", "powertrain"] {
        let cfg = bundled(name);
        assert_eq!(cfg.name, name);
        let back = RunConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.digest(), cfg.digest());
        assert_eq!(cfg.digest().len(), 64);
        cfg.prepare().unwrap();
    }
}

#[test]
fn digest_ignores_workers_only() {
    let cfg = bundled("2d");
    let mut more = cfg.clone();
    more.apply(&Overrides { workers: Some(8), ..Overrides::default() });
    assert_eq!(more.run.workers, 8);
    assert_eq!(more.digest(), cfg.digest());
    let mut finer = cfg.clone();
    finer.apply(&Overrides { delta_min: Some(0.01), ..Overrides::default() });
    assert_ne!(finer.digest(), cfg.digest());
}

#[test]
fn invalid_configs_are_rejected() {
    let base: serde_json::Value = serde_json::from_str(UNSTABLE_DT).unwrap();
    let broken = |edit: &dyn Fn(&mut serde_json::Value)| {
        let mut v = base.clone();
        edit(&mut v);
        RunConfig::from_json(&v.to_string())
    };
    assert!(broken(&|_| {}).is_ok());
    assert!(broken(&|v| v["search"]["S"]["hi"][0] = (-1.0).into()).is_err(), "degenerate S");
    assert!(broken(&|v| v["search"]["delta_min"] = 2.0.into()).is_err());
    assert!(broken(&|v| v["candidate"]["M"] = 3.into()).is_err());
    assert!(broken(&|v| v["candidate"]["P"][0][0] = (-1.0).into()).is_err());
    assert!(broken(&|v| v["system"]["regions"][0]["field"][0] = "2*x2".into()).is_err());
    assert!(broken(&|v| v["system"]["regions"][0]["field"][0] = "2*".into()).is_err());
    assert!(broken(&|v| v["system"]["h"] = 0.1.into()).is_err());
    assert!(broken(&|v| v["search"]["typo"] = 1.into()).is_err());
    assert!(broken(&|v| v["run"] = serde_json::json!({ "workers": 0 })).is_err());
}

#[test]
fn report_round_trips_with_infinite_values() {
    let mut report = run_verify_dt(&RunConfig::from_json(UNSTABLE_DT).unwrap()).unwrap();
    report.wrong.push(BoxRow { c: vec![0.5], delta: vec![0.1, -0.1], f: f64::NAN, gamma: f64::INFINITY, flag: Some("domain-error".into()) });
    let text = report.to_json();
    assert!(text.contains("\"inf\""));
    let back = RunReport::from_json(&text).unwrap();
    let row = back.wrong.last().unwrap();
    assert!(row.f.is_nan() && row.gamma == f64::INFINITY);
    assert_eq!(back.ledger().unwrap().wrong.len(), report.wrong.len());
    let mut future = serde_json::to_value(&back).unwrap();
    future["version"] = 99.into();
    assert!(RunReport::from_json(&future.to_string()).is_err());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let run = sampcert(&["verify-dt", configs().join("piecewise.json").to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let report = RunReport::load(&out).unwrap();
    assert_eq!(report.verdict, Verdict::KlStableOnW);
    assert_eq!(report.m_final, 3);

    let unstable = write(dir.path(), "doubling.json", UNSTABLE_DT);
    let run = sampcert(&["verify-dt", &unstable]);
    assert_eq!(run.status.code(), Some(2));
    let report = RunReport::from_json(&String::from_utf8(run.stdout).unwrap()).unwrap();
    assert_eq!(report.verdict, Verdict::Halted);
    assert!(report.hint.is_some() && report.good.is_empty());
    assert_eq!(report.tried.len(), 2);

    let degenerate = write(dir.path(), "flat.json", &UNSTABLE_DT.replace(r#""hi": [1]"#, r#""hi": [-1]"#));
    let run = sampcert(&["verify-dt", &degenerate]);
    assert_eq!(run.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&run.stderr).starts_with("error:"));
    assert_eq!(sampcert(&["verify-dt", "missing.json"]).status.code(), Some(1));
    let run = sampcert(&["verify-ct", configs().join("piecewise.json").to_str().unwrap(), "--with", out.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(1), "verify-ct needs a continuous system");
}

#[test]
fn growing_continuous_system_halts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "growth.json", UNSTABLE_CT);
    let prior = dir.path().join("dt.json");
    let run = sampcert(&["verify-dt", &cfg, "-o", prior.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(2));
    let run = sampcert(&["verify-ct", &cfg, "--with", prior.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(2));
    let report = RunReport::from_json(&String::from_utf8(run.stdout).unwrap()).unwrap();
    assert_eq!(report.kind, "verify-ct");
    assert_eq!(report.verdict, Verdict::Halted);
    assert!(report.good.is_empty());
}

#[test]
fn overrides_reach_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let cfg = configs().join("piecewise.json");
    let run = sampcert(&["verify-dt", cfg.to_str().unwrap(), "--delta-min", "0.2", "--bound-method", "best", "--workers", "2", "-o", out.to_str().unwrap()]);
    assert!(run.status.code().is_some_and(|c| c != 1), "{}", String::from_utf8_lossy(&run.stderr));
    let report = RunReport::load(&out).unwrap();
    // Boxes are split while wider than delta_min: 1.5 -> 0.75 -> 0.375 -> 0.1875.
    let finest = report.good.iter().chain(&report.wrong).map(|b| b.delta.iter().fold(0.0f64, |m, d| m.max(d.abs()))).fold(f64::INFINITY, f64::min);
    assert_eq!(finest, 0.1875);
    assert_eq!(sampcert(&["verify-dt", cfg.to_str().unwrap(), "--bound-method", "fancy"]).status.code(), Some(1));
    assert_eq!(sampcert(&["--help"]).status.code(), Some(0));
}

#[test]
fn levelset_rerun_matches_the_original() {
    let cfg = bundled("piecewise");
    let report = run_verify_dt(&cfg).unwrap();
    let again = run_levelset(&cfg, &report).unwrap();
    assert_eq!(again.kind, "levelset");
    assert_eq!(again.level, report.level);
    assert_eq!(again.verdict, report.verdict);
    let mut coarse = cfg.clone();
    coarse.search.spacing = 0.05;
    let coarse = run_levelset(&coarse, &report).unwrap();
    assert_eq!(coarse.level.unwrap().lbar1, report.level.as_ref().unwrap().lbar1);
}

fn lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path).unwrap().lines().map(String::from).collect()
}

#[test]
fn export_of_an_empty_report_has_headers_only() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_verify_dt(&RunConfig::from_json(UNSTABLE_DT).unwrap()).unwrap();
    assert!(report.good.is_empty());
    let empty = RunReport { wrong: Vec::new(), ..report };
    let files = export(&empty, None, Format::Csv, dir.path()).unwrap();
    assert_eq!(files.len(), 3);
    assert_eq!(lines(&dir.path().join("boxes.csv")), ["status,c1,delta1,delta2,F,gamma,flag"]);
    assert_eq!(lines(&dir.path().join("contour.csv")), ["x1"]);
    assert_eq!(lines(&dir.path().join("trajectories.csv")), ["trace,step,x1"]);
}

#[test]
fn export_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("piecewise.json");
    let out = dir.path().join("r.json");
    sampcert(&["verify-dt", cfg.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    let report = RunReport::load(&out).unwrap();
    let csv_dir = dir.path().join("csv");
    let run = sampcert(&["export", out.to_str().unwrap(), "--config", cfg.to_str().unwrap(), "--out-dir", csv_dir.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(0));
    assert_eq!(lines(&csv_dir.join("boxes.csv")).len(), 1 + report.good.len() + report.wrong.len());
    let contour = lines(&csv_dir.join("contour.csv"));
    assert_eq!(contour[0], "x1,x2");
    assert!(contour.len() > 300);
    // Contour points sit on W = Lbar.
    let level = report.level.as_ref().unwrap().lbar;
    let prep = bundled("piecewise").prepare().unwrap();
    let obj = sampcert_core::verifier::Objective::level(&prep.dt, &prep.v, report.m_final);
    for row in &contour[1..] {
        let x: Vec<f64> = row.split(',').map(|v| v.parse().unwrap()).collect();
        assert!((obj.eval_point(&x).unwrap() - level).abs() < 1e-6 * level.max(1.0), "{row}");
    }
    let traces = lines(&csv_dir.join("trajectories.csv"));
    assert_eq!(traces[1], "0,0,1.4,0.6");
    // Traces stop early once they blow up.
    for k in 0..2 {
        let steps: Vec<usize> = traces[1..].iter().filter(|t| t.starts_with(&format!("{k},"))).map(|t| t.split(',').nth(1).unwrap().parse().unwrap()).collect();
        assert!(!steps.is_empty() && steps.len() <= 31);
        assert!(steps.iter().enumerate().all(|(i, &s)| i == s));
    }

    let json_dir = dir.path().join("json");
    let run = sampcert(&["export", out.to_str().unwrap(), "--format", "json", "--out-dir", json_dir.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(0));
    let plot: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(json_dir.join("plot.json")).unwrap()).unwrap();
    assert_eq!(plot["good"].as_array().unwrap().len(), report.good.len());
    assert!(plot["contour"].as_array().unwrap().is_empty());
}
