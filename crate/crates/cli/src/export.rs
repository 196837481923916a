//! Plot data: boxes, level-set contour points and trajectory traces.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use sampcert_core::system::CandidateV;
use sampcert_core::verifier::Objective;
use serde::Serialize;

use crate::config::RunConfig;
use crate::report::{BoxRow, RunReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => anyhow::bail!("unknown format `{s}` (expected csv or json)"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Trace {
    pub seed: Vec<f64>,
    pub points: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct PlotData {
    pub good: Vec<BoxRow>,
    pub wrong: Vec<BoxRow>,
    /// Points on `W = Lbar` found along rays from the origin.
    pub contour: Vec<Vec<f64>>,
    pub trajectories: Vec<Trace>,
}

const RAY_STEPS: usize = 400;
const BISECTIONS: usize = 40;

fn directions(n: usize) -> Vec<Vec<f64>> {
    match n {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..360)
            .map(|k| {
                let t = (k as f64).to_radians();
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => {
            // Fibonacci sphere.
            let count = 1000;
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let t = golden * k as f64;
                    vec![r * t.cos(), r * t.sin(), z]
                })
                .collect()
        }
        _ => (0..n)
            .flat_map(|i| {
                [1.0, -1.0].map(|s| {
                    let mut d = vec![0.0; n];
                    d[i] = s;
                    d
                })
            })
            .collect(),
    }
}

/// First crossing of `W = level` on each ray from the origin inside `S`.
fn contour(obj: &Objective, level: f64, cfg: &RunConfig) -> Vec<Vec<f64>> {
    let s = &cfg.search.s;
    let at = |d: &[f64], t: f64| d.iter().map(|x| x * t).collect::<Vec<_>>();
    let inside = |x: &[f64]| x.iter().enumerate().all(|(i, v)| *v >= s.lo[i] && *v <= s.hi[i]);
    let mut out = Vec::new();
    for d in directions(cfg.system.dim) {
        let reach = d
            .iter()
            .enumerate()
            .map(|(i, &c)| if c > 0.0 { s.hi[i] / c } else if c < 0.0 { s.lo[i] / c } else { f64::INFINITY })
            .fold(f64::INFINITY, f64::min);
        if !(reach > 0.0 && reach.is_finite()) {
            continue;
        }
        let w = |t: f64| obj.eval_point(&at(&d, t)).unwrap_or(f64::INFINITY);
        let mut prev = 0.0;
        for k in 1..=RAY_STEPS {
            let t = reach * k as f64 / RAY_STEPS as f64;
            if w(t) > level {
                let (mut lo, mut hi) = (prev, t);
                for _ in 0..BISECTIONS {
                    let mid = 0.5 * (lo + hi);
                    if w(mid) > level {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let x = at(&d, lo);
                if inside(&x) {
                    out.push(x);
                }
                break;
            }
            prev = t;
        }
    }
    out
}

/// Collect plot data. Contours and traces need the config that produced
/// the report.
pub fn plot_data(report: &RunReport, cfg: Option<&RunConfig>) -> Result<PlotData> {
    let mut data = PlotData {
        good: report.good.clone(),
        wrong: report.wrong.clone(),
        ..PlotData::default()
    };
    let Some(cfg) = cfg else {
        return Ok(data);
    };
    let prep = cfg.prepare()?;
    let v = CandidateV::new(sampcert_core::linalg::Mat::from_rows(&report.w.p)?, report.w.rho)?;
    if let Some(level) = report.level.as_ref().map(|l| l.lbar).filter(|l| l.is_finite() && *l > 0.0) {
        let obj = Objective::level(&prep.dt, &v, report.w.m);
        data.contour = contour(&obj, level, cfg);
    }
    for seed in &cfg.run.trajectory_seeds {
        let mut points = vec![seed.clone()];
        let mut x = seed.clone();
        for _ in 0..cfg.run.trajectory_steps {
            match prep.dt.step(&x, None) {
                Ok(next) if next.iter().all(|v| v.is_finite()) => {
                    x = next;
                    points.push(x.clone());
                }
                _ => break,
            }
        }
        data.trajectories.push(Trace { seed: seed.clone(), points });
    }
    Ok(data)
}

fn write_boxes(path: &Path, n: usize, data: &PlotData) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["status".to_string()];
    header.extend((1..=n).map(|i| format!("c{i}")));
    header.extend((1..=2 * n).map(|i| format!("delta{i}")));
    header.extend(["F", "gamma", "flag"].map(String::from));
    w.write_record(&header)?;
    for (status, rows) in [("good", &data.good), ("wrong", &data.wrong)] {
        for r in rows {
            let mut rec = vec![status.to_string()];
            rec.extend(r.c.iter().chain(&r.delta).map(f64::to_string));
            rec.push(r.f.to_string());
            rec.push(r.gamma.to_string());
            rec.push(r.flag.clone().unwrap_or_default());
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_points(path: &Path, n: usize, lead: &[&str], rows: impl Iterator<Item = (Vec<String>, Vec<f64>)>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = lead.iter().map(|s| s.to_string()).collect();
    header.extend((1..=n).map(|i| format!("x{i}")));
    w.write_record(&header)?;
    for (mut rec, x) in rows {
        rec.extend(x.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Write the plot data under `dir`; returns the files written.
pub fn export(report: &RunReport, cfg: Option<&RunConfig>, format: Format, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let data = plot_data(report, cfg)?;
    let n = report.w.p.len();
    match format {
        Format::Json => {
            let path = dir.join("plot.json");
            std::fs::write(&path, serde_json::to_string_pretty(&data)?)?;
            Ok(vec![path])
        }
        Format::Csv => {
            let boxes = dir.join("boxes.csv");
            write_boxes(&boxes, n, &data)?;
            let contour = dir.join("contour.csv");
            write_points(&contour, n, &[], data.contour.iter().map(|x| (Vec::new(), x.clone())))?;
            let traces = dir.join("trajectories.csv");
            let rows = data
                .trajectories
                .iter()
                .enumerate()
                .flat_map(|(i, t)| t.points.iter().enumerate().map(move |(k, x)| (vec![i.to_string(), k.to_string()], x.clone())));
            write_points(&traces, n, &["trace", "step"], rows)?;
            Ok(vec![boxes, contour, traces])
        }
    }
}
