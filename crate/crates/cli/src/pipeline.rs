//! Run orchestration: horizon search, local certificate, level set.

use std::time::Instant;

use anyhow::{bail, ensure, Result};
use sampcert_core::geometry::{HyperRect, SampleLedger};
use sampcert_core::levelset::{check_containment, estimate_level, local_inside_level, Ellipsoid};
use sampcert_core::linalg::Mat;
use sampcert_core::localyap::{common_dlyap, linearize, verify_local, verify_local_ct, HoleCheck, LocalCert};
use sampcert_core::system::{CandidateV, Mode, PiecewiseSystem};
use sampcert_core::verifier::{find_m_and_w, verify_ct, AVerdict, Certificate, Objective};

use crate::config::{Prepared, RunConfig};
use crate::exec::executor;
use crate::report::{BoxRow, LevelReport, LocalReport, RunReport, Timings, Tried, Verdict, WReport, REPORT_VERSION};

/// Bisection depth used when checking the local set against `{W <= L}`.
const LOCAL_INSIDE_DEPTH: usize = 8;

fn rows(m: &Mat) -> Vec<Vec<f64>> {
    m.to_rows()
}

fn hole_name(h: HoleCheck) -> &'static str {
    match h {
        HoleCheck::NotNeeded => "not-needed",
        HoleCheck::Curvature => "curvature",
        HoleCheck::Reach => "reach",
        HoleCheck::Failed => "failed",
    }
}

fn local_report(l: &LocalCert, checked_on: &str) -> LocalReport {
    LocalReport {
        a_lin: l.a_lin.iter().map(rows).collect(),
        p_l: rows(&l.p_l),
        level_l: l.level,
        verified: l.verified,
        hole: hole_name(l.hole).into(),
        undecided: l.construction.ledger.wrong.len(),
        checked_on: checked_on.into(),
    }
}

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

/// Local matrix: from the config, else a common solution of the discrete
/// Lyapunov equations of the linearizations.
fn local_matrix(prep: &Prepared) -> Result<Mat> {
    if let Some(p) = &prep.p_l {
        return Ok(p.clone());
    }
    let a = linearize(&prep.dt)?;
    Ok(common_dlyap(&a, &Mat::identity(prep.dt.n))?)
}

struct Level {
    report: LevelReport,
    sound: bool,
}

/// Level-set estimate on a certified ledger and the checks the verdict
/// depends on.
fn assess(
    cfg: &RunConfig,
    prep: &Prepared,
    v: &CandidateV,
    m: usize,
    ledger: &SampleLedger,
    local: Option<(&Ellipsoid, &HyperRect)>,
) -> Level {
    let method = prep.verify.method;
    let obj = Objective::level(&prep.dt, v, m);
    let ell = local.map(|(e, _)| e);
    let est = estimate_level(&obj, ledger, &prep.verify.s, prep.spacing, ell, method);
    let cont = check_containment(&obj, est.lbar, ledger, &est, ell, method, cfg.run.containment_depth);
    let inside = local.is_some_and(|(e, n1)| local_inside_level(&obj, est.lbar, e, n1, LOCAL_INSIDE_DEPTH));
    let positive = est.lbar > 0.0 && est.lbar.is_finite();
    Level {
        sound: positive && cont.ok && inside,
        report: LevelReport {
            lbar1: est.lbar1,
            lbar2: est.lbar2,
            lbar: est.lbar,
            samples: est.samples.len(),
            skipped: est.skipped.len(),
            containment_ok: cont.ok,
            containment_gaps: cont.gaps.len(),
            local_inside: inside,
        },
    }
}

fn verdict(cert: AVerdict, local_ok: bool, level: Option<&Level>) -> Verdict {
    match cert {
        AVerdict::Halted => Verdict::Halted,
        AVerdict::CertifiedOnA if local_ok && level.is_some_and(|l| l.sound) => Verdict::KlStableOnW,
        AVerdict::CertifiedOnA => Verdict::CertifiedAOnly,
    }
}

fn w_report(cfg: &RunConfig, prep: &Prepared, v: &CandidateV, m: usize) -> WReport {
    WReport {
        p: rows(&v.p),
        rho: v.rho,
        m,
        h: cfg.system.h,
        equilibrium: prep.equilibrium.clone(),
    }
}

fn base_report(kind: &str, cfg: &RunConfig, prep: &Prepared, v: &CandidateV, cert: &Certificate) -> RunReport {
    let c = &cert.construction;
    RunReport {
        version: REPORT_VERSION,
        kind: kind.into(),
        config_name: cfg.name.clone(),
        config_digest: cfg.digest(),
        m_final: cert.m_final,
        verdict: Verdict::Halted,
        hint: cert.hint.clone(),
        tried: cert.tried.iter().map(|&(m, f)| Tried { m, certified_fraction: f }).collect(),
        explored: c.explored,
        certified_fraction: c.certified_fraction(&prep.verify.s),
        w: w_report(cfg, prep, v, cert.m_final),
        good: c.ledger.good.iter().map(BoxRow::from_record).collect(),
        wrong: c.ledger.wrong.iter().map(BoxRow::from_record).collect(),
        local: None,
        level: None,
        notes: Vec::new(),
        timings: Timings::default(),
    }
}

fn undecided_note(report: &mut RunReport) {
    if !report.wrong.is_empty() {
        report.notes.push(format!(
            "{} boxes of S remain undecided and are listed under `wrong`; they are not rescued",
            report.wrong.len()
        ));
    }
}

/// Discrete pipeline: horizon search, local certificate, level set.
pub fn run_verify_dt(cfg: &RunConfig) -> Result<RunReport> {
    let start = Instant::now();
    let prep = cfg.prepare()?;
    let exec = executor(cfg.run.workers)?;
    let cert = find_m_and_w(&prep.dt, &prep.v, &prep.verify, exec.as_ref())?;
    let mut report = base_report("verify-dt", cfg, &prep, &prep.v, &cert);
    report.timings.construct_s = secs(start);
    if prep.original.mode == Mode::Continuous {
        report.notes.push("continuous system sampled on its Euler discretization".into());
    }

    let t = Instant::now();
    let local = match &prep.n1 {
        None => {
            report.notes.push("no N1 given; no local invariant set".into());
            None
        }
        Some(n1) => match local_matrix(&prep).and_then(|p| {
            Ok(verify_local(&prep.dt, &p, prep.v.rho, n1, prep.local_delta_min, prep.verify.method, exec.as_ref())?)
        }) {
            Ok(l) => Some(l),
            Err(e) => {
                report.notes.push(format!("local certificate unavailable: {e}"));
                None
            }
        },
    };
    report.timings.local_s = secs(t);
    report.local = local.as_ref().map(|l| local_report(l, "discrete map"));
    finish(cfg, &prep, &prep.v, &cert, local.as_ref(), &mut report);
    report.timings.total_s = secs(start);
    Ok(report)
}

fn finish(cfg: &RunConfig, prep: &Prepared, v: &CandidateV, cert: &Certificate, local: Option<&LocalCert>, report: &mut RunReport) {
    let t = Instant::now();
    let ell = local.filter(|l| l.verified).map(|l| (Ellipsoid { p: l.p_l.clone(), c: l.level }, l.n1.clone()));
    let level = (!cert.construction.ledger.good.is_empty())
        .then(|| assess(cfg, prep, v, cert.m_final, &cert.construction.ledger, ell.as_ref().map(|(e, n)| (e, n))));
    report.timings.level_s = secs(t);
    report.verdict = verdict(cert.verdict, ell.is_some(), level.as_ref());
    report.level = level.map(|l| l.report);
    undecided_note(report);
}

fn prior_candidate(prior: &RunReport) -> Result<CandidateV> {
    Ok(CandidateV::new(Mat::from_rows(&prior.w.p)?, prior.w.rho)?)
}

fn check_prior(cfg: &RunConfig, prior: &RunReport, report: &mut RunReport) -> Result<()> {
    ensure!(prior.w.p.len() == cfg.system.dim, "prior report has dimension {}, config {}", prior.w.p.len(), cfg.system.dim);
    if prior.config_name != cfg.name {
        report.notes.push(format!("prior report comes from config `{}`", prior.config_name));
    }
    Ok(())
}

/// Continuous-time check of `Ẇ < 0` for the `W` of a prior discrete run.
pub fn run_verify_ct(cfg: &RunConfig, prior: &RunReport) -> Result<RunReport> {
    let start = Instant::now();
    let prep = cfg.prepare()?;
    let ct: &PiecewiseSystem = &prep.original;
    if ct.mode != Mode::Continuous {
        bail!("verify-ct needs a continuous system");
    }
    let h = cfg.system.h.expect("continuous configs carry h");
    let v = prior_candidate(prior)?;
    let exec = executor(cfg.run.workers)?;
    let cert = verify_ct(ct, h, &v, prior.w.m, &prep.verify, exec.as_ref())?;
    let mut report = base_report("verify-ct", cfg, &prep, &v, &cert);
    check_prior(cfg, prior, &mut report)?;
    report.timings.construct_s = secs(start);

    let t = Instant::now();
    // The prior discrete run's P_L is reused when present.
    let local = match &prep.n1 {
        None => {
            report.notes.push("no N1 given; no local invariant set".into());
            None
        }
        Some(n1) => {
            let p = match prior.local.as_ref() {
                Some(l) => l.p_l(),
                None => local_matrix(&prep),
            };
            match p.and_then(|p| Ok(verify_local_ct(ct, &p, n1, prep.local_delta_min, prep.verify.method, exec.as_ref())?)) {
                Ok(l) => Some(l),
                Err(e) => {
                    report.notes.push(format!("local certificate unavailable: {e}"));
                    None
                }
            }
        }
    };
    report.timings.local_s = secs(t);
    report.local = local.as_ref().map(|l| local_report(l, "continuous vector field"));
    finish(cfg, &prep, &v, &cert, local.as_ref(), &mut report);
    report.timings.total_s = secs(start);
    Ok(report)
}

/// Re-estimate the level set on the ledger of a prior run, e.g. with a
/// different boundary spacing.
pub fn run_levelset(cfg: &RunConfig, prior: &RunReport) -> Result<RunReport> {
    let start = Instant::now();
    let prep = cfg.prepare()?;
    let v = prior_candidate(prior)?;
    let ledger = prior.ledger()?;
    let mut report = prior.clone();
    report.kind = "levelset".into();
    report.config_digest = cfg.digest();
    report.notes.clear();
    check_prior(cfg, prior, &mut report)?;
    let ell = prior
        .local
        .as_ref()
        .filter(|l| l.verified)
        .map(|l| Ok::<_, anyhow::Error>(Ellipsoid { p: l.p_l()?, c: l.level_l }))
        .transpose()?;
    let n1 = prep.n1.clone();
    let local = match (ell.as_ref(), n1.as_ref()) {
        (Some(e), Some(n)) => Some((e, n)),
        _ => None,
    };
    let level = (!ledger.good.is_empty()).then(|| assess(cfg, &prep, &v, prior.w.m, &ledger, local));
    let a = if prior.verdict == Verdict::Halted { AVerdict::Halted } else { AVerdict::CertifiedOnA };
    report.verdict = verdict(a, local.is_some(), level.as_ref());
    report.level = level.map(|l| l.report);
    undecided_note(&mut report);
    report.timings = Timings { level_s: secs(start), total_s: secs(start), ..Timings::default() };
    Ok(report)
}
