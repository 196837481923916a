//! Run configuration: one JSON document describing the system, the
//! candidate function, the search set and run options.

use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use sampcert_core::bounds::BoundMethod;
use sampcert_core::expr::VectorField;
use sampcert_core::geometry::HyperRect;
use sampcert_core::linalg::Mat;
use sampcert_core::system::{CandidateV, Guard, Mode, PiecewiseSystem, Region, MAX_BRANCHES};
use sampcert_core::verifier::VerifyConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub system: SystemSpec,
    pub candidate: CandidateSpec,
    pub search: SearchSpec,
    #[serde(default)]
    pub run: RunSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeSpec {
    Discrete,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub dim: usize,
    pub mode: ModeSpec,
    pub regions: Vec<RegionSpec>,
    /// Equilibrium to move to the origin; refined by Newton iterations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equilibrium: Option<Vec<f64>>,
    /// Euler step for continuous systems.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    /// Trajectories that leave this box are flagged.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<BoxSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    #[serde(default)]
    pub guards: Vec<String>,
    pub field: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateSpec {
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
    pub rho: f64,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "M_max")]
    pub m_max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxSpec {
    pub fn rect(&self) -> Result<HyperRect> {
        Ok(HyperRect::from_bounds(&self.lo, &self.hi)?)
    }
}

fn default_gate() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpec {
    #[serde(rename = "S")]
    pub s: BoxSpec,
    pub delta_min: f64,
    /// Resolution of the local verification; `delta_min` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_delta_min: Option<f64>,
    #[serde(rename = "N1", default, skip_serializing_if = "Option::is_none")]
    pub n1: Option<BoxSpec>,
    /// Local Lyapunov matrix; solved from the linearization when absent.
    #[serde(rename = "P_L", default, skip_serializing_if = "Option::is_none")]
    pub p_l: Option<Vec<Vec<f64>>>,
    pub spacing: f64,
    #[serde(default = "default_gate")]
    pub volume_gate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodSpec {
    #[default]
    Split,
    Combined,
    Best,
}

impl MethodSpec {
    pub fn method(self) -> BoundMethod {
        match self {
            MethodSpec::Split => BoundMethod::Split,
            MethodSpec::Combined => BoundMethod::Combined,
            MethodSpec::Best => BoundMethod::Best,
        }
    }
}

impl std::str::FromStr for MethodSpec {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "split" => MethodSpec::Split,
            "combined" => MethodSpec::Combined,
            "best" => MethodSpec::Best,
            _ => bail!("unknown bound method `{s}` (expected split, combined or best)"),
        })
    }
}

fn default_workers() -> usize {
    1
}
fn default_cap() -> usize {
    MAX_BRANCHES
}
fn default_depth() -> usize {
    4
}
fn default_steps() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    #[serde(default)]
    pub bound_method: MethodSpec,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_cap")]
    pub branch_cap: usize,
    /// Bisection depth of the containment check.
    #[serde(default = "default_depth")]
    pub containment_depth: usize,
    /// Initial states for exported trajectory traces.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trajectory_seeds: Vec<Vec<f64>>,
    #[serde(default = "default_steps")]
    pub trajectory_steps: usize,
}

impl Default for RunSpec {
    fn default() -> Self {
        RunSpec {
            bound_method: MethodSpec::Split,
            workers: default_workers(),
            branch_cap: default_cap(),
            containment_depth: default_depth(),
            trajectory_seeds: Vec::new(),
            trajectory_steps: default_steps(),
        }
    }
}

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub workers: Option<usize>,
    pub delta_min: Option<f64>,
    pub m: Option<usize>,
    pub bound_method: Option<MethodSpec>,
}

/// Everything a run needs, built from a validated config.
#[derive(Debug, Clone)]
pub struct Prepared {
    /// The system as given (after translation), continuous or discrete.
    pub original: PiecewiseSystem,
    /// The discrete map the sampling runs on.
    pub dt: PiecewiseSystem,
    pub v: CandidateV,
    pub verify: VerifyConfig,
    pub n1: Option<HyperRect>,
    pub p_l: Option<Mat>,
    pub local_delta_min: f64,
    pub spacing: f64,
    /// Equilibrium after refinement, in original coordinates.
    pub equilibrium: Option<Vec<f64>>,
}

fn matrix(rows: &[Vec<f64>], n: usize, what: &str) -> Result<Mat> {
    ensure!(rows.len() == n && rows.iter().all(|r| r.len() == n), "{what} must be {n}x{n}");
    let m = Mat::from_rows(rows)?;
    ensure!(m.is_symmetric(1e-12), "{what} must be symmetric");
    Ok(m)
}

fn check_box(b: &BoxSpec, n: usize, what: &str) -> Result<HyperRect> {
    ensure!(b.lo.len() == n && b.hi.len() == n, "{what} must have {n} bounds per side");
    b.rect().with_context(|| format!("invalid box {what}"))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.prepare()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical serialization. The worker count does not
    /// change results and is left out.
    pub fn digest(&self) -> String {
        let mut canonical = self.clone();
        canonical.run.workers = default_workers();
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(w) = o.workers {
            self.run.workers = w;
        }
        if let Some(d) = o.delta_min {
            self.search.delta_min = d;
        }
        if let Some(m) = o.m {
            self.candidate.m = m;
            self.candidate.m_max = self.candidate.m_max.max(m);
        }
        if let Some(b) = o.bound_method {
            self.run.bound_method = b;
        }
    }

    fn system(&self) -> Result<PiecewiseSystem> {
        let n = self.system.dim;
        ensure!(n > 0, "dimension must be positive");
        ensure!(!self.system.regions.is_empty(), "at least one region is required");
        let regions = self
            .system
            .regions
            .iter()
            .enumerate()
            .map(|(i, r)| {
                ensure!(r.field.len() == n, "region {i}: field needs {n} components");
                let texts: Vec<&str> = r.field.iter().map(String::as_str).collect();
                let field = VectorField::parse(&texts, n).with_context(|| format!("region {i}: field"))?;
                let guards = r
                    .guards
                    .iter()
                    .map(|g| Guard::parse(g, n).with_context(|| format!("region {i}: guard `{g}`")))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Region { guards, field })
            })
            .collect::<Result<Vec<_>>>()?;
        let mode = match self.system.mode {
            ModeSpec::Discrete => Mode::Discrete,
            ModeSpec::Continuous => Mode::Continuous,
        };
        let domain = self.system.domain.as_ref().map(|d| check_box(d, n, "domain")).transpose()?;
        Ok(PiecewiseSystem::new(n, mode, regions)?.with_domain(domain))
    }

    /// Validate and build the run inputs.
    pub fn prepare(&self) -> Result<Prepared> {
        let n = self.system.dim;
        let mut sys = self.system()?;
        let equilibrium = match &self.system.equilibrium {
            Some(x0) => {
                ensure!(x0.len() == n, "equilibrium must have {n} entries");
                let x0 = sys.refine_equilibrium(x0, 50)?;
                sys = sys.translated(&x0);
                Some(x0)
            }
            None => None,
        };
        let dt = match (sys.mode, self.system.h) {
            (Mode::Discrete, None) => sys.clone(),
            (Mode::Discrete, Some(_)) => bail!("h only applies to continuous systems"),
            (Mode::Continuous, Some(h)) => sys.euler_discretize(h)?,
            (Mode::Continuous, None) => bail!("continuous systems need an Euler step h"),
        };
        let c = &self.candidate;
        let v = CandidateV::new(matrix(&c.p, n, "P")?, c.rho)?;
        ensure!(v.p.data.iter().all(|x| x.is_finite()), "P must be finite");
        sampcert_core::linalg::cholesky(&v.p).context("P must be positive definite")?;
        let s = check_box(&self.search.s, n, "S")?;
        ensure!((0..n).all(|i| s.width(i) > 0.0), "S must have positive width on every axis");
        let mut verify = VerifyConfig::new(s, self.search.delta_min, c.m, c.m_max);
        verify.method = self.run.bound_method.method();
        verify.branch_cap = self.run.branch_cap;
        verify.volume_gate = self.search.volume_gate;
        verify.validate()?;
        ensure!(self.search.spacing > 0.0, "spacing must be positive");
        ensure!(self.run.workers > 0, "workers must be positive");
        let n1 = self.search.n1.as_ref().map(|b| check_box(b, n, "N1")).transpose()?;
        let p_l = self.search.p_l.as_ref().map(|m| matrix(m, n, "P_L")).transpose()?;
        let local_delta_min = self.search.local_delta_min.unwrap_or(self.search.delta_min);
        ensure!(local_delta_min > 0.0, "local_delta_min must be positive");
        for (i, seed) in self.run.trajectory_seeds.iter().enumerate() {
            ensure!(seed.len() == n, "trajectory seed {i} must have {n} entries");
        }
        Ok(Prepared {
            original: sys,
            dt,
            v,
            verify,
            n1,
            p_l,
            local_delta_min,
            spacing: self.search.spacing,
            equilibrium,
        })
    }
}
