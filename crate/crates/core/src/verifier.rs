//! Sampling certificate engine.
//!
//! A box passes when `F(x_s) < -γ̄` at its center. Rejected boxes are split
//! in half along every axis until they reach the resolution floor; the
//! certified boxes form the set `A` on which `F < 0` holds.

use alloc::string::String;
use alloc::vec::Vec;

use crate::bounds::{coeffs_for, Side, gamma_bar, BoundMethod, GammaBar};
use crate::dual::{Dual1, Dual2};
use crate::error::{Error, Result};
use crate::geometry::{refine2, HyperRect, RecordFlag, SampleLedger, SampleRecord};
use crate::interval::{Interval, IntervalVector};
use crate::scalar::Scalar;
use crate::system::{BranchSequence, CandidateV, Mode, PiecewiseSystem, MAX_BRANCHES};

/// Which function of the state is being bounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    /// `V(G^M(x)) - rho * V(x)`.
    Decrease,
    /// `W(x) = Σ_{j<M} V(G^j(x))`.
    Level,
    /// `Ẇ(x) = ∇W(x) · G_c(x)`.
    Derivative,
}

/// A scalar function of the state built from a system, a quadratic `V` and
/// a horizon.
#[derive(Debug, Clone, Copy)]
pub struct Objective<'a> {
    /// Discrete map `G` (the Euler map for continuous systems).
    pub sys: &'a PiecewiseSystem,
    /// Continuous vector field, needed for [`ObjectiveKind::Derivative`].
    pub ct: Option<&'a PiecewiseSystem>,
    pub v: &'a CandidateV,
    pub m: usize,
    pub kind: ObjectiveKind,
}

impl<'a> Objective<'a> {
    pub fn decrease(sys: &'a PiecewiseSystem, v: &'a CandidateV, m: usize) -> Self {
        Objective { sys, ct: None, v, m, kind: ObjectiveKind::Decrease }
    }

    pub fn level(sys: &'a PiecewiseSystem, v: &'a CandidateV, m: usize) -> Self {
        Objective { sys, ct: None, v, m, kind: ObjectiveKind::Level }
    }

    pub fn derivative(sys: &'a PiecewiseSystem, ct: &'a PiecewiseSystem, v: &'a CandidateV, m: usize) -> Self {
        Objective { sys, ct: Some(ct), v, m, kind: ObjectiveKind::Derivative }
    }

    /// Number of map applications a branch sequence covers.
    pub fn horizon(&self) -> usize {
        match self.kind {
            ObjectiveKind::Decrease => self.m,
            ObjectiveKind::Level => self.m.saturating_sub(1),
            ObjectiveKind::Derivative => self.m.saturating_sub(1).max(1),
        }
    }

    fn check(&self) -> Result<()> {
        if self.sys.mode != Mode::Discrete {
            return Err(Error::WrongMode("discrete-time"));
        }
        if self.m == 0 {
            return Err(Error::InvalidArgument("horizon M must be at least 1".into()));
        }
        if self.v.dim() != self.sys.n {
            return Err(Error::DimensionMismatch { expected: self.sys.n, got: self.v.dim() });
        }
        if self.kind == ObjectiveKind::Derivative {
            match self.ct {
                Some(ct) if ct.mode == Mode::Continuous && ct.regions.len() == self.sys.regions.len() => {}
                _ => return Err(Error::WrongMode("continuous-time")),
            }
        }
        Ok(())
    }

    fn w_sum<S: Scalar>(&self, states: &[Vec<S>]) -> S {
        let mut acc = self.v.eval(&states[0]);
        for s in &states[1..self.m] {
            acc = acc.add(&self.v.eval(s));
        }
        acc
    }

    /// Evaluate along a fixed branch sequence of length [`Self::horizon`].
    pub fn eval<S: Scalar>(&self, x: &[S], branch: &[usize]) -> Result<S> {
        match self.kind {
            ObjectiveKind::Decrease => {
                let states = self.sys.trajectory(x, branch)?;
                let end = self.v.eval(&states[self.m]);
                Ok(end.sub(&self.v.eval(x).scale(self.v.rho)))
            }
            ObjectiveKind::Level => {
                let states = self.sys.trajectory(x, &branch[..self.m - 1])?;
                Ok(self.w_sum(&states))
            }
            ObjectiveKind::Derivative => {
                let n = x.len();
                let xd: Vec<Dual1<S>> = x.iter().enumerate().map(|(i, v)| Dual1::var(v.clone(), i, n)).collect();
                let states = self.sys.trajectory(&xd, &branch[..self.m - 1])?;
                let grad = self.w_sum(&states).grad(n);
                let ct = self.ct.ok_or(Error::WrongMode("continuous-time"))?;
                let gc = ct.regions[branch[0]].field.eval(x)?;
                let mut acc = grad[0].mul(&gc[0]);
                for i in 1..n {
                    acc = acc.add(&grad[i].mul(&gc[i]));
                }
                Ok(acc)
            }
        }
    }

    /// Real value at `x` following the system's own region choices.
    pub fn eval_point(&self, x: &[f64]) -> Result<f64> {
        let (_, branch) = self.sys.iterate(x, self.horizon(), &[])?;
        self.eval(x, &branch)
    }

    /// Enclosure of the value at the point `x` along `branch`, with gradient.
    pub fn value_and_grad(&self, x: &[f64], branch: &[usize]) -> Result<(Interval, Vec<Interval>)> {
        let n = x.len();
        let xd: Vec<Dual1<Interval>> = x
            .iter()
            .enumerate()
            .map(|(i, &v)| Dual1::var(Interval::point(v), i, n))
            .collect();
        let f = self.eval(&xd, branch)?;
        Ok((f.v, f.grad(n)))
    }

    /// Enclosures of the value and Hessian (row-major) over the box `x`.
    pub fn value_and_hessian(&self, x: &IntervalVector, branch: &[usize]) -> Result<(Interval, Vec<Interval>)> {
        let n = x.len();
        let xd: Vec<Dual2<Interval>> = x.iter().enumerate().map(|(i, &v)| Dual2::var(v, i, n)).collect();
        let f = self.eval(&xd, branch)?;
        Ok((f.v, f.hess(n)))
    }
}

/// Bound data for one branch over one box.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchBound {
    pub branch: BranchSequence,
    /// Enclosure of `F_σ(x_s)`.
    pub value: Interval,
    pub grad: Vec<Interval>,
    pub hess: Vec<Interval>,
    /// Enclosure of `F_σ` over the whole box.
    pub range: Interval,
}

/// Per-branch bound data for every branch that some point of `b` may
/// follow. Fails with the flag that explains why the box is undecided.
pub fn branch_bounds(obj: &Objective, b: &HyperRect, cap: usize) -> core::result::Result<Vec<BranchBound>, RecordFlag> {
    let boxed = b.to_intervals();
    let h = obj.horizon();
    let branches = obj
        .sys
        .enumerate_box_branches::<Interval>(&boxed.0, h, cap)
        .map_err(flag_of)?;
    if let Some(d) = &obj.sys.domain {
        let dom = d.to_intervals();
        for (_, states) in &branches {
            for s in &states[1..] {
                if !IntervalVector(s.clone()).subset_of(&dom) {
                    return Err(RecordFlag::DomainError);
                }
            }
        }
    }
    let pieces = hessian_pieces(b);
    let mut out = Vec::with_capacity(branches.len());
    for (branch, _) in branches {
        let (range, mut hess) = obj.value_and_hessian(&boxed, &branch).map_err(flag_of)?;
        if !pieces.is_empty() {
            let mut hull: Option<Vec<Interval>> = None;
            for p in &pieces {
                let (_, h) = obj.value_and_hessian(p, &branch).map_err(flag_of)?;
                hull = Some(match hull {
                    None => h,
                    Some(acc) => acc.iter().zip(&h).map(|(a, c)| a.hull(c)).collect(),
                });
            }
            // Both are enclosures; keep the tighter end of each entry.
            for (e, p) in hess.iter_mut().zip(hull.expect("nonempty")) {
                *e = e.intersect(&p).unwrap_or(p);
            }
        }
        let (value, grad) = obj.value_and_grad(&b.center, &branch).map_err(flag_of)?;
        out.push(BranchBound { branch, value, grad, hess, range });
    }
    Ok(out)
}

/// Largest dimension for which Hessians are also enclosed on the `2^n`
/// halves of a box.
const HESSIAN_SPLIT_MAX_DIM: usize = 4;

fn hessian_pieces(b: &HyperRect) -> Vec<IntervalVector> {
    if b.dim() > HESSIAN_SPLIT_MAX_DIM {
        return Vec::new();
    }
    refine2(b, Some(&split_axes(b)))
        .map(|c| c.iter().map(HyperRect::to_intervals).collect())
        .unwrap_or_default()
}

fn flag_of(e: Error) -> RecordFlag {
    match e {
        Error::BranchOverflow(_) => RecordFlag::BranchOverflow,
        _ => RecordFlag::DomainError,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoxStatus {
    Certified,
    Rejected,
    Undecided(RecordFlag),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxResult {
    pub record: SampleRecord,
    pub status: BoxStatus,
    pub gamma: Option<GammaBar>,
    pub branches: usize,
}

/// Reference value at the center, the jump `ε` between the branches active
/// at the center, and those branches.
///
/// The reference is the value along the branch the system itself follows
/// from `x_s`. When the center branches cannot be enumerated every box
/// branch counts as active.
fn reference_and_jump(
    obj: &Objective,
    x_s: &[f64],
    bounds: &[BranchBound],
    cap: usize,
) -> core::result::Result<(Interval, f64, Vec<BranchSequence>), RecordFlag> {
    let h = obj.horizon();
    let mut point = Vec::new();
    if let Ok(pb) = obj.sys.enumerate_branches_capped(x_s, h, cap) {
        for br in pb {
            if let Some(d) = &obj.sys.domain {
                let states = obj.sys.trajectory(x_s, &br).map_err(flag_of)?;
                if states[1..].iter().any(|s| !d.contains_point(s)) {
                    return Err(RecordFlag::LeftDomain);
                }
            }
            let (v, _) = obj.value_and_grad(x_s, &br).map_err(flag_of)?;
            point.push((br, v));
        }
    }
    if point.is_empty() {
        point = bounds.iter().map(|b| (b.branch.clone(), b.value)).collect();
    }
    let own = obj
        .sys
        .iterate(x_s, h, &[])
        .ok()
        .and_then(|(_, br)| obj.value_and_grad(x_s, &br).ok())
        .map(|(v, _)| v);
    let f_ref = match own {
        Some(v) => v,
        None => point
            .iter()
            .map(|p| p.1)
            .max_by(|a, b| a.hi().total_cmp(&b.hi()))
            .ok_or(RecordFlag::DomainError)?,
    };
    let eps = point.iter().fold(0.0f64, |m, p| m.max((p.1 - f_ref).magnitude_upper()));
    Ok((f_ref, eps, point.into_iter().map(|p| p.0).collect()))
}

const FORK_DEPTH: usize = 4;
const FORK_BUDGET: usize = 512;

/// Bound of `F_σ` over the part of `b` whose points may follow `σ`.
///
/// The box is bisected and pieces whose branch enclosure excludes `σ` are
/// dropped. `Upper` returns the largest upper end over the kept pieces and
/// stops splitting a piece once its upper end is below `accept`; `Lower`
/// mirrors this. `None` when the piece budget runs out.
pub fn restricted_bound(obj: &Objective, b: &HyperRect, branch: &[usize], side: Side, accept: f64, cap: usize) -> Option<f64> {
    let h = obj.horizon();
    let mut acc: Option<f64> = None;
    let mut stack = alloc::vec![(b.clone(), 0usize)];
    let mut budget = FORK_BUDGET;
    while let Some((piece, level)) = stack.pop() {
        let iv = piece.to_intervals();
        let reaches = match obj.sys.enumerate_box_branches::<Interval>(&iv.0, h, cap) {
            Ok(list) => list.iter().any(|(br, _)| br.as_slice() == branch),
            Err(_) => true,
        };
        if !reaches {
            continue;
        }
        let r = obj.eval(&iv.0, branch).ok()?;
        let (v, done) = match side {
            Side::Lower => (r.lo(), r.lo() > accept),
            _ => (r.hi(), r.hi() < accept),
        };
        if done || level == FORK_DEPTH {
            acc = Some(match (acc, side) {
                (None, _) => v,
                (Some(a), Side::Lower) => a.min(v),
                (Some(a), _) => a.max(v),
            });
            continue;
        }
        let children = refine2(&piece, Some(&split_axes(&piece))).ok()?;
        budget = budget.checked_sub(children.len())?;
        stack.extend(children.into_iter().map(|c| (c, level + 1)));
    }
    // No piece can follow the branch: it contributes nothing.
    Some(acc.unwrap_or(match side {
        Side::Lower => f64::INFINITY,
        _ => f64::NEG_INFINITY,
    }))
}

/// Test one box.
///
/// The slack coefficients `a`, `b` come from the branches active at the
/// center. A branch that only other points of the box follow enters through
/// `ε`, with an upper bound of its value over the box, so that
/// `f_ref + a·ξ + b + ε` still dominates every branch everywhere.
pub fn verify_box(obj: &Objective, b: &HyperRect, method: BoundMethod, cap: usize) -> BoxResult {
    let base = SampleRecord {
        spoint: b.center.clone(),
        del: b.delta.clone(),
        tau: b.tau(),
        f_value: f64::NAN,
        gamma: f64::NAN,
        flag: None,
    };
    let undecided = |flag: RecordFlag| BoxResult {
        record: SampleRecord { flag: Some(flag), ..base.clone() },
        status: BoxStatus::Undecided(flag),
        gamma: None,
        branches: 0,
    };
    if obj.check().is_err() {
        return undecided(RecordFlag::DomainError);
    }
    let bounds = match branch_bounds(obj, b, cap) {
        Ok(v) => v,
        Err(f) => return undecided(f),
    };
    let (f_ref, point_eps, active) = match reference_and_jump(obj, &b.center, &bounds, cap) {
        Ok(v) => v,
        Err(f) => return undecided(f),
    };
    let xi = b.max_abs_delta();
    let tau = b.tau();
    let offsets = b.offsets();
    let coeffs: Vec<_> = bounds
        .iter()
        .map(|bb| coeffs_for(method, Side::Upper, &bb.grad, &bb.hess, &tau, &offsets, xi))
        .collect();
    let is_active = |bb: &BranchBound| active.iter().any(|a| *a == bb.branch);
    let mut core_coeffs: Vec<_> = bounds.iter().zip(&coeffs).filter(|(bb, _)| is_active(bb)).map(|(_, c)| *c).collect();
    if core_coeffs.is_empty() {
        core_coeffs = coeffs.clone();
    }
    let base_g = gamma_bar(&core_coeffs, 0.0, xi);
    let slack = base_g.value;
    let mut forks = Vec::new();
    let mut eps = point_eps;
    for (bb, c) in bounds.iter().zip(&coeffs) {
        if is_active(bb) {
            continue;
        }
        let taylor = (bb.value + Interval::point(c.a) * Interval::point(xi) + Interval::point(c.b)).hi();
        let ub = taylor.min(bb.range.hi());
        eps = eps.max((Interval::point(ub) - f_ref - Interval::point(slack)).hi());
        forks.push((bb, ub));
    }
    let mut g = gamma_bar(&core_coeffs, eps, xi);
    if !(f_ref.hi() < -g.value) && !forks.is_empty() {
        let mut tight = point_eps;
        for (bb, ub) in &forks {
            let ub = restricted_bound(obj, b, &bb.branch, Side::Upper, 0.0, cap).map_or(*ub, |r| r.min(*ub));
            tight = tight.max((Interval::point(ub) - f_ref - Interval::point(slack)).hi());
        }
        g = gamma_bar(&core_coeffs, tight, xi);
    }
    let certified = f_ref.hi() < -g.value;
    BoxResult {
        record: SampleRecord {
            f_value: f_ref.hi(),
            gamma: g.value,
            ..base
        },
        status: if certified { BoxStatus::Certified } else { BoxStatus::Rejected },
        gamma: Some(g),
        branches: bounds.len(),
    }
}

/// Runs box tests, possibly in parallel. Implementations must return the
/// results in input order.
pub trait Executor: Sync {
    fn map(&self, boxes: &[HyperRect], f: &(dyn Fn(&HyperRect) -> BoxResult + Sync)) -> Vec<BoxResult>;
}

/// Runs everything on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct SerialExecutor;

impl Executor for SerialExecutor {
    fn map(&self, boxes: &[HyperRect], f: &(dyn Fn(&HyperRect) -> BoxResult + Sync)) -> Vec<BoxResult> {
        boxes.iter().map(f).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    /// Search set.
    pub s: HyperRect,
    pub delta_min: f64,
    pub m: usize,
    pub m_max: usize,
    pub method: BoundMethod,
    pub branch_cap: usize,
    /// Smallest certified fraction of the volume of `S` that counts as success.
    pub volume_gate: f64,
    /// Initial boxes; `S` itself when empty.
    pub seed: Vec<HyperRect>,
}

impl VerifyConfig {
    pub fn new(s: HyperRect, delta_min: f64, m: usize, m_max: usize) -> Self {
        VerifyConfig {
            s,
            delta_min,
            m,
            m_max,
            method: BoundMethod::Split,
            branch_cap: MAX_BRANCHES,
            volume_gate: 0.5,
            seed: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let xi = self.s.max_abs_delta();
        if !(self.delta_min > 0.0) || self.delta_min > xi {
            return Err(Error::InvalidArgument("delta_min must lie in (0, max |delta| of S]".into()));
        }
        if self.m == 0 || self.m > self.m_max {
            return Err(Error::InvalidArgument("horizons must satisfy 1 <= M <= M_max".into()));
        }
        if !(0.0..=1.0).contains(&self.volume_gate) {
            return Err(Error::InvalidArgument("volume gate must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Result of one multi-resolution pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Construction {
    pub ledger: SampleLedger,
    /// Number of boxes tested, refined ones included.
    pub explored: usize,
    /// Number of refinement levels visited.
    pub levels: usize,
}

impl Construction {
    pub fn certified_fraction(&self, s: &HyperRect) -> f64 {
        let v = s.volume();
        if v > 0.0 {
            self.ledger.certified_volume() / v
        } else {
            0.0
        }
    }

    /// Undecided boxes, i.e. wrong boxes carrying a flag.
    pub fn undecided(&self) -> impl Iterator<Item = &SampleRecord> {
        self.ledger.wrong.iter().filter(|r| r.flag.is_some())
    }
}

fn split_axes(b: &HyperRect) -> Vec<usize> {
    (0..b.dim()).filter(|&i| b.width(i) > 0.0).collect()
}

/// True while every non-degenerate half-width of the box exceeds
/// `delta_min`. A box stops refining once its finest axis has reached the
/// resolution; on cubes this is `max |delta| > delta_min`. Half-widths
/// within a few ulps of `delta_min` count as reaching it, since refinement
/// may widen offsets by rounding.
pub fn above_resolution(b: &HyperRect, delta_min: f64) -> bool {
    let limit = delta_min * (1.0 + 16.0 * f64::EPSILON);
    b.tau().iter().filter(|&&t| t > 0.0).all(|&t| t > limit)
}

/// Breadth-first multi-resolution construction of the certified set.
pub fn construct_a(
    obj: &Objective,
    s: &HyperRect,
    delta_min: f64,
    method: BoundMethod,
    cap: usize,
    seed: &[HyperRect],
    exec: &dyn Executor,
) -> Construction {
    let mut ledger = SampleLedger::default();
    let mut queue: Vec<HyperRect> = if seed.is_empty() { alloc::vec![s.clone()] } else { seed.to_vec() };
    let mut explored = 0;
    let mut levels = 0;
    while !queue.is_empty() {
        levels += 1;
        explored += queue.len();
        let results = exec.map(&queue, &|b| verify_box(obj, b, method, cap));
        let mut next = Vec::new();
        for (b, r) in queue.iter().zip(results) {
            let refinable = above_resolution(b, delta_min) && r.status != BoxStatus::Undecided(RecordFlag::LeftDomain);
            match r.status {
                BoxStatus::Certified => ledger.good.push(r.record),
                _ if refinable => {
                    let axes = split_axes(b);
                    match refine2(b, Some(&axes)) {
                        Ok(children) => next.extend(children),
                        Err(_) => ledger.wrong.push(r.record),
                    }
                }
                _ => ledger.wrong.push(r.record),
            }
        }
        queue = next;
    }
    ledger.sort();
    Construction { ledger, explored, levels }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AVerdict {
    CertifiedOnA,
    Halted,
}

/// Output of the horizon search.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub construction: Construction,
    pub m_final: usize,
    pub verdict: AVerdict,
    /// Certified fraction of `S` for each horizon tried, in order.
    pub tried: Vec<(usize, f64)>,
    pub hint: Option<String>,
}

impl Certificate {
    pub fn ledger(&self) -> &SampleLedger {
        &self.construction.ledger
    }
}

/// Increase the horizon from `M` until the certified set passes the volume
/// gate or `M_max` is exhausted.
pub fn find_m_and_w(sys: &PiecewiseSystem, v: &CandidateV, cfg: &VerifyConfig, exec: &dyn Executor) -> Result<Certificate> {
    cfg.validate()?;
    if sys.mode != Mode::Discrete {
        return Err(Error::WrongMode("discrete-time"));
    }
    let mut tried = Vec::new();
    let mut last = None;
    for m in cfg.m..=cfg.m_max {
        let obj = Objective::decrease(sys, v, m);
        obj.check()?;
        let c = construct_a(&obj, &cfg.s, cfg.delta_min, cfg.method, cfg.branch_cap, &cfg.seed, exec);
        let frac = c.certified_fraction(&cfg.s);
        tried.push((m, frac));
        if frac >= cfg.volume_gate && !c.ledger.good.is_empty() {
            return Ok(Certificate {
                construction: c,
                m_final: m,
                verdict: AVerdict::CertifiedOnA,
                tried,
                hint: None,
            });
        }
        last = Some((m, c));
    }
    let (m, c) = last.expect("at least one horizon is tried");
    Ok(Certificate {
        construction: c,
        m_final: m,
        verdict: AVerdict::Halted,
        tried,
        hint: Some("M_max reached without a satisfactory certified set; select another function V".into()),
    })
}

/// Certify `Ẇ < 0` for a continuous system, with `W` built from its Euler map.
pub fn verify_ct(
    ct: &PiecewiseSystem,
    h: f64,
    v: &CandidateV,
    m: usize,
    cfg: &VerifyConfig,
    exec: &dyn Executor,
) -> Result<Certificate> {
    cfg.validate()?;
    if ct.mode != Mode::Continuous {
        return Err(Error::WrongMode("continuous-time"));
    }
    let dt = ct.euler_discretize(h)?;
    let obj = Objective::derivative(&dt, ct, v, m);
    obj.check()?;
    let c = construct_a(&obj, &cfg.s, cfg.delta_min, cfg.method, cfg.branch_cap, &cfg.seed, exec);
    let frac = c.certified_fraction(&cfg.s);
    let ok = frac >= cfg.volume_gate && !c.ledger.good.is_empty();
    Ok(Certificate {
        construction: c,
        m_final: m,
        verdict: if ok { AVerdict::CertifiedOnA } else { AVerdict::Halted },
        tried: alloc::vec![(m, frac)],
        hint: if ok { None } else { Some("derivative condition fails on most of S; select another candidate W".into()) },
    })
}

/// True if the box `x` is covered by the union of `targets`, checked by
/// bisection down to width `min_width`.
pub fn covered_by_union(x: &IntervalVector, targets: &[IntervalVector], min_width: f64) -> bool {
    let hits: Vec<&IntervalVector> = targets.iter().filter(|t| t.intersects(x)).collect();
    if hits.is_empty() {
        return false;
    }
    if hits.iter().any(|t| x.subset_of(t)) {
        return true;
    }
    let (axis, w) = x
        .iter()
        .enumerate()
        .map(|(i, iv)| (i, iv.width()))
        .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    if w <= min_width {
        return false;
    }
    let iv = x[axis];
    let mid = iv.mid();
    let (Ok(lo), Ok(hi)) = (Interval::new(iv.lo(), mid), Interval::new(mid, iv.hi())) else {
        return false;
    };
    let owned: Vec<IntervalVector> = hits.into_iter().cloned().collect();
    [lo, hi].iter().all(|&half| {
        let mut y = x.clone();
        y[axis] = half;
        covered_by_union(&y, &owned, min_width)
    })
}

/// One-step images of the `n2` boxes stay inside the union of `target`
/// boxes. Failing boxes are refined down to `delta_min`.
pub fn reach_fallback(sys: &PiecewiseSystem, n2: &[HyperRect], target: &[HyperRect], delta_min: f64) -> Result<bool> {
    if sys.mode != Mode::Discrete {
        return Err(Error::WrongMode("discrete-time"));
    }
    let targets: Vec<IntervalVector> = target.iter().map(HyperRect::to_intervals).collect();
    let mut stack: Vec<HyperRect> = n2.to_vec();
    while let Some(b) = stack.pop() {
        let ok = sys.regions_intersecting(&b.to_intervals()).into_iter().all(|r| match sys.reach_box(&b, r) {
            Ok(img) => covered_by_union(&img, &targets, delta_min / 8.0),
            Err(_) => false,
        });
        if ok {
            continue;
        }
        if !above_resolution(&b, delta_min) {
            return Ok(false);
        }
        stack.extend(refine2(&b, Some(&split_axes(&b)))?);
    }
    Ok(true)
}

/// Invariance of `{W <= L}` from its ingredients: the annulus outside the
/// local set is covered by certified boxes, and the local set is invariant.
pub fn check_fact1_invariance(annulus_covered: bool, local_invariant: bool, gaps: &[HyperRect]) -> bool {
    annulus_covered && local_invariant && gaps.is_empty()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::VectorField;
    use crate::linalg::Mat;
    use alloc::vec;

    fn scalar_map(text: &str) -> PiecewiseSystem {
        PiecewiseSystem::smooth(Mode::Discrete, VectorField::parse(&[text], 1).unwrap()).unwrap()
    }

    #[test]
    fn one_dimensional_box() {
        let sys = scalar_map("0.5*x1");
        let v = CandidateV::new(Mat::identity(1), 0.9).unwrap();
        let obj = Objective::decrease(&sys, &v, 1);
        let b = HyperRect::symmetric(vec![1.0], &[0.1]).unwrap();
        let r = verify_box(&obj, &b, BoundMethod::Split, MAX_BRANCHES);
        assert!((r.record.f_value + 0.65).abs() < 1e-12);
        assert_eq!(r.status, BoxStatus::Certified);
    }

    #[test]
    fn annulus_in_one_dimension() {
        let sys = scalar_map("0.5*x1");
        let v = CandidateV::new(Mat::identity(1), 0.9).unwrap();
        let obj = Objective::decrease(&sys, &v, 1);
        let s = HyperRect::symmetric(vec![0.0], &[1.0]).unwrap();
        let c = construct_a(&obj, &s, 0.01, BoundMethod::Split, MAX_BRANCHES, &[], &SerialExecutor);
        let hole: f64 = c.ledger.wrong.iter().map(|r| r.rect().volume()).sum();
        assert!(hole > 0.0 && hole <= 4.0 * 0.01 + 1e-12);
        assert!(c.ledger.wrong.iter().all(|r| r.max_abs_delta() <= 0.01));
    }

    #[test]
    fn identity_map_halts() {
        let sys = scalar_map("x1");
        let v = CandidateV::new(Mat::identity(1), 0.9).unwrap();
        let s = HyperRect::symmetric(vec![0.0], &[1.0]).unwrap();
        let cfg = VerifyConfig::new(s, 0.1, 1, 2);
        let cert = find_m_and_w(&sys, &v, &cfg, &SerialExecutor).unwrap();
        assert_eq!(cert.verdict, AVerdict::Halted);
        assert!(cert.hint.is_some());
        assert_eq!(cert.tried.len(), 2);
    }

    #[test]
    fn reach_examples() {
        let n2 = [HyperRect::symmetric(vec![0.0], &[0.1]).unwrap()];
        let target = [HyperRect::symmetric(vec![0.0], &[0.2]).unwrap()];
        assert!(reach_fallback(&scalar_map("0.5*x1"), &n2, &target, 0.01).unwrap());
        assert!(!reach_fallback(&scalar_map("3*x1"), &n2, &target, 0.01).unwrap());
    }

    #[test]
    fn derivative_objective() {
        let ct = PiecewiseSystem::smooth(Mode::Continuous, VectorField::parse(&["-x1"], 1).unwrap()).unwrap();
        let dt = ct.euler_discretize(0.1).unwrap();
        let v = CandidateV::new(Mat::identity(1), 0.9).unwrap();
        let obj = Objective::derivative(&dt, &ct, &v, 1);
        assert_eq!(obj.eval_point(&[1.0]).unwrap(), -2.0);
        assert_eq!(obj.eval_point(&[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn fact1_assembly() {
        assert!(check_fact1_invariance(true, true, &[]));
        let gap = HyperRect::point(vec![0.0]);
        assert!(!check_fact1_invariance(true, true, &[gap]));
        assert!(!check_fact1_invariance(false, true, &[]));
    }
}
