//! Run report persisted as JSON.

use std::path::Path;

use anyhow::{Context, Result};
use sampcert_core::geometry::{tau_of, RecordFlag, SampleLedger, SampleRecord};
use sampcert_core::linalg::Mat;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub const REPORT_VERSION: u32 = 1;

/// Non-finite floats are written as `null` and read back as NaN, except
/// that `+inf` sentinels are kept as the string `"inf"`.
mod float {
    use super::*;

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
        Null(Option<()>),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v == f64::INFINITY {
            s.serialize_str("inf")
        } else if *v == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(match Repr::deserialize(d)? {
            Repr::Num(v) => v,
            Repr::Text(t) if t == "inf" => f64::INFINITY,
            Repr::Text(t) if t == "-inf" => f64::NEG_INFINITY,
            Repr::Text(t) => return Err(serde::de::Error::custom(format!("bad number `{t}`"))),
            Repr::Null(_) => f64::NAN,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// Stable on the emitted sublevel set of `W`.
    KlStableOnW,
    /// The decrease condition holds on `A` but the sublevel set could not be
    /// assembled.
    CertifiedAOnly,
    Halted,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::KlStableOnW => 0,
            Verdict::CertifiedAOnly | Verdict::Halted => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRow {
    pub c: Vec<f64>,
    pub delta: Vec<f64>,
    #[serde(rename = "F", with = "float")]
    pub f: f64,
    #[serde(with = "float")]
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<String>,
}

fn flag_name(f: RecordFlag) -> &'static str {
    match f {
        RecordFlag::BranchOverflow => "branch-overflow",
        RecordFlag::DomainError => "domain-error",
        RecordFlag::LeftDomain => "left-domain",
    }
}

fn flag_of(s: &str) -> Result<RecordFlag> {
    Ok(match s {
        "branch-overflow" => RecordFlag::BranchOverflow,
        "domain-error" => RecordFlag::DomainError,
        "left-domain" => RecordFlag::LeftDomain,
        _ => anyhow::bail!("unknown record flag `{s}`"),
    })
}

impl BoxRow {
    pub fn from_record(r: &SampleRecord) -> Self {
        BoxRow {
            c: r.spoint.clone(),
            delta: r.del.clone(),
            f: r.f_value,
            gamma: r.gamma,
            flag: r.flag.map(|f| flag_name(f).to_string()),
        }
    }

    pub fn record(&self) -> Result<SampleRecord> {
        anyhow::ensure!(self.delta.len() == 2 * self.c.len(), "box row has mismatched center and delta");
        Ok(SampleRecord {
            spoint: self.c.clone(),
            del: self.delta.clone(),
            tau: tau_of(&self.delta),
            f_value: self.f,
            gamma: self.gamma,
            flag: self.flag.as_deref().map(flag_of).transpose()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tried {
    #[serde(rename = "M")]
    pub m: usize,
    pub certified_fraction: f64,
}

/// The Lyapunov function `W(x) = Σ_{j<M} V(G^j x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WReport {
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
    pub rho: f64,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equilibrium: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalReport {
    #[serde(rename = "A_lin")]
    pub a_lin: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "P_L")]
    pub p_l: Vec<Vec<f64>>,
    #[serde(rename = "level_L")]
    pub level_l: f64,
    pub verified: bool,
    /// How the boxes left undecided around the origin were settled.
    pub hole: String,
    pub undecided: usize,
    /// Which map the decrease was checked on.
    pub checked_on: String,
}

impl LocalReport {
    pub fn p_l(&self) -> Result<Mat> {
        Ok(Mat::from_rows(&self.p_l)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    #[serde(rename = "Lbar1", with = "float")]
    pub lbar1: f64,
    #[serde(rename = "Lbar2", with = "float")]
    pub lbar2: f64,
    #[serde(rename = "Lbar", with = "float")]
    pub lbar: f64,
    pub samples: usize,
    pub skipped: usize,
    /// `{W <= Lbar} ∩ S` lies in the certified boxes or the local set.
    pub containment_ok: bool,
    pub containment_gaps: usize,
    /// The local set lies in `{W <= Lbar}`.
    pub local_inside: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub construct_s: f64,
    pub local_s: f64,
    pub level_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: u32,
    /// Subcommand that produced the report.
    pub kind: String,
    pub config_name: String,
    pub config_digest: String,
    #[serde(rename = "M_final")]
    pub m_final: usize,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hint: Option<String>,
    pub tried: Vec<Tried>,
    pub explored: usize,
    pub certified_fraction: f64,
    #[serde(rename = "W")]
    pub w: WReport,
    pub good: Vec<BoxRow>,
    pub wrong: Vec<BoxRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local: Option<LocalReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<LevelReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub timings: Timings,
}

impl RunReport {
    pub fn ledger(&self) -> Result<SampleLedger> {
        Ok(SampleLedger {
            good: self.good.iter().map(BoxRow::record).collect::<Result<_>>()?,
            wrong: self.wrong.iter().map(BoxRow::record).collect::<Result<_>>()?,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: RunReport = serde_json::from_str(text)?;
        anyhow::ensure!(r.version == REPORT_VERSION, "unsupported report version {}", r.version);
        Ok(r)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in report {}", path.display()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).with_context(|| format!("writing {}", path.display()))
    }

    /// The report without timings, for comparing runs.
    pub fn without_timings(&self) -> RunReport {
        RunReport { timings: Timings::default(), ..self.clone() }
    }
}
