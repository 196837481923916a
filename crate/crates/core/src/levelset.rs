//! Largest sublevel set of `W` inside the certified region.
//!
//! Each sample box gets a lower bound of `W` over the box. The level is the
//! smallest such bound over the rejected boxes that border certified ones
//! and over the faces of `S` that certified boxes touch.

use alloc::vec::Vec;

use crate::bounds::{coeffs_for, Side, BoundMethod};
use crate::geometry::{refine2, HyperRect, SampleLedger, SampleRecord};
use crate::interval::{Interval, IntervalVector};
use crate::linalg::Mat;
use crate::system::{CandidateV, MAX_BRANCHES};
use crate::verifier::{branch_bounds, restricted_bound, BranchBound, Objective};

/// Sublevel set `{x : xᵀPx <= c}` of the local Lyapunov function.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    pub p: Mat,
    pub c: f64,
}

impl Ellipsoid {
    fn value(&self, b: &IntervalVector) -> Interval {
        CandidateV { p: self.p.clone(), rho: 0.5 }.eval(&b.0)
    }

    /// Every point of the box lies in the set.
    pub fn contains_box(&self, b: &IntervalVector) -> bool {
        self.value(b).hi() <= self.c
    }

    /// No point of the box lies in the set.
    pub fn misses_box(&self, b: &IntervalVector) -> bool {
        self.value(b).lo() > self.c
    }
}

/// Largest double strictly below `v`.
fn below(v: f64) -> f64 {
    if v.is_finite() {
        v - (v.abs() * f64::EPSILON).max(f64::MIN_POSITIVE)
    } else {
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleKind {
    Obstacle,
    Boundary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSample {
    pub rect: HyperRect,
    pub kind: SampleKind,
    /// Lower bound of `W` over the box.
    pub lbar: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelEstimate {
    /// Bound from rejected boxes (`+∞` when there are none).
    pub lbar1: f64,
    /// Bound from the faces of `S`.
    pub lbar2: f64,
    pub lbar: f64,
    pub samples: Vec<LevelSample>,
    /// Sample boxes whose bound could not be computed.
    pub skipped: Vec<HyperRect>,
}

const SAMPLE_DEPTH: usize = 3;
const SAMPLE_BUDGET: usize = 64;

/// Lower bound of `W` over the sample box.
///
/// The per-piece bound is `min_σ (W_σ(x_s) − a_σ·ξ − b_σ)`. Pieces are
/// split best-first, always the one with the smallest bound, until that
/// piece is at the depth limit or the budget runs out; the smallest bound
/// over the current pieces is returned. `None` when some piece cannot be
/// evaluated.
pub fn lbar_at_sample(obj: &Objective, b: &HyperRect, method: BoundMethod) -> Option<f64> {
    let mut pieces = alloc::vec![(lbar_piece(obj, b, method)?, b.clone(), 0usize)];
    let mut budget = SAMPLE_BUDGET;
    loop {
        let (k, _) = pieces
            .iter()
            .enumerate()
            .min_by(|x, y| x.1 .0.total_cmp(&y.1 .0))
            .expect("nonempty");
        let (lb, piece, depth) = &pieces[k];
        let axes: Vec<usize> = (0..piece.dim()).filter(|&i| piece.width(i) > 0.0).collect();
        if *depth == SAMPLE_DEPTH || axes.is_empty() || budget < (1 << axes.len()) {
            return Some(*lb);
        }
        let depth = *depth;
        let (_, piece, _) = pieces.swap_remove(k);
        let children = refine2(&piece, Some(&axes)).ok()?;
        budget -= children.len();
        for c in children {
            pieces.push((lbar_piece(obj, &c, method)?, c, depth + 1));
        }
    }
}

/// `min_σ (W_σ(x_s) − a_σ·ξ − b_σ)` over the branches of one box. Branches
/// that the center does not follow are also bounded on the part of the box
/// that can follow them, and the better of the two bounds is kept.
fn lbar_piece(obj: &Objective, b: &HyperRect, method: BoundMethod) -> Option<f64> {
    let bounds = branch_bounds(obj, b, MAX_BRANCHES).ok()?;
    let xi = b.max_abs_delta();
    let tau = b.tau();
    let offsets = b.offsets();
    let active = obj.sys.enumerate_branches_capped(&b.center, obj.horizon(), MAX_BRANCHES).unwrap_or_default();
    let taylor = |bb: &BranchBound| {
        let c = coeffs_for(method, Side::Lower, &bb.grad, &bb.hess, &tau, &offsets, xi);
        (bb.value - Interval::point(c.a) * Interval::point(xi) - Interval::point(c.b))
            .lo()
            .max(bb.range.lo())
    };
    let (core, forks): (Vec<&BranchBound>, Vec<&BranchBound>) =
        bounds.iter().partition(|bb| active.is_empty() || active.contains(&bb.branch));
    let base = core.iter().map(|bb| taylor(bb)).fold(f64::INFINITY, f64::min);
    let lbar = forks
        .iter()
        .map(|bb| {
            let t = taylor(bb);
            if t >= base {
                return t;
            }
            restricted_bound(obj, b, &bb.branch, Side::Lower, base, MAX_BRANCHES).map_or(t, |r| r.max(t))
        })
        .fold(base, f64::min);
    lbar.is_finite().then_some(lbar)
}

/// Enclosure of `W` over the box, hulled over its branches.
pub fn w_range(obj: &Objective, b: &HyperRect) -> Option<Interval> {
    let bounds = branch_bounds(obj, b, MAX_BRANCHES).ok()?;
    bounds.iter().map(|bb| bb.range).reduce(|a, c| a.hull(&c))
}

fn touches(a: &HyperRect, b: &HyperRect) -> bool {
    let (ta, tb) = (a.tau(), b.tau());
    (0..a.dim()).all(|i| {
        let gap = (a.center[i] - b.center[i]).abs();
        let reach = ta[i] + tb[i];
        gap <= reach + 1e-12 * reach.max(a.center[i].abs()).max(1e-300)
    })
}

/// Rejected boxes that border a certified box and are not inside the local
/// set.
pub fn select_obstacle_samples<'a>(ledger: &'a SampleLedger, local: Option<&Ellipsoid>) -> Vec<&'a SampleRecord> {
    let good: Vec<HyperRect> = ledger.good.iter().map(SampleRecord::rect).collect();
    ledger
        .wrong
        .iter()
        .filter(|w| {
            let r = w.rect();
            !local.is_some_and(|l| l.contains_box(&r.to_intervals())) && good.iter().any(|g| touches(&r, g))
        })
        .collect()
}

/// Face samples of `S` with the face-normal axis collapsed, taken from the
/// faces of certified boxes that lie on the boundary of `S`. Tangential
/// half-widths are at most `spacing`.
pub fn boundary_samples(s: &HyperRect, spacing: f64, ledger: &SampleLedger) -> Vec<HyperRect> {
    let n = s.dim();
    let mut out = Vec::new();
    for rec in &ledger.good {
        let g = rec.rect();
        for axis in 0..n {
            let (slo, shi) = s.bounds(axis);
            let (glo, ghi) = g.bounds(axis);
            let tol = 1e-12 * (shi - slo).abs().max(1.0);
            for (face, on) in [(slo, (glo - slo).abs() <= tol), (shi, (ghi - shi).abs() <= tol)] {
                if !on {
                    continue;
                }
                let mut cells: Vec<(Vec<f64>, Vec<f64>)> = alloc::vec![(Vec::new(), Vec::new())];
                for j in 0..n {
                    let next = if j == axis {
                        cells
                            .into_iter()
                            .map(|(mut c, mut d)| {
                                c.push(face);
                                d.extend([0.0, 0.0]);
                                (c, d)
                            })
                            .collect()
                    } else {
                        let (lo, hi) = g.bounds(j);
                        let w = hi - lo;
                        let k = if spacing > 0.0 { libm::ceil(w / (2.0 * spacing)).max(1.0) as usize } else { 1 };
                        let hw = w / (2 * k) as f64;
                        let mut acc = Vec::with_capacity(cells.len() * k);
                        for (c, d) in &cells {
                            for t in 0..k {
                                let mut c = c.clone();
                                let mut d = d.clone();
                                c.push(lo + (2 * t + 1) as f64 * hw);
                                d.extend([hw, -hw]);
                                acc.push((c, d));
                            }
                        }
                        acc
                    };
                    cells = next;
                }
                out.extend(cells.into_iter().map(|(center, delta)| HyperRect { center, delta }));
            }
        }
    }
    out
}

/// `L̄ = min(L̄₁, L̄₂)`, kept strictly below every sample bound.
pub fn estimate_level(
    obj: &Objective,
    ledger: &SampleLedger,
    s: &HyperRect,
    spacing: f64,
    local: Option<&Ellipsoid>,
    method: BoundMethod,
) -> LevelEstimate {
    let mut samples = Vec::new();
    let mut skipped = Vec::new();
    let mut lbar1 = f64::INFINITY;
    let mut lbar2 = f64::INFINITY;
    let obstacles = select_obstacle_samples(ledger, local).into_iter().map(|r| (r.rect(), SampleKind::Obstacle));
    let faces = boundary_samples(s, spacing, ledger).into_iter().map(|r| (r, SampleKind::Boundary));
    for (rect, kind) in obstacles.chain(faces) {
        match lbar_at_sample(obj, &rect, method) {
            Some(l) => {
                let slot = if kind == SampleKind::Obstacle { &mut lbar1 } else { &mut lbar2 };
                *slot = slot.min(below(l));
                samples.push(LevelSample { rect, kind, lbar: l });
            }
            None => skipped.push(rect),
        }
    }
    LevelEstimate {
        lbar1,
        lbar2,
        lbar: lbar1.min(lbar2),
        samples,
        skipped,
    }
}

/// Outcome of checking `{W <= level} ∩ S ⊆ A ∪ L`.
#[derive(Debug, Clone, PartialEq)]
pub struct Containment {
    pub ok: bool,
    /// Parts of rejected or skipped boxes where `W <= level` could not be
    /// excluded.
    pub gaps: Vec<HyperRect>,
}

fn excluded(obj: &Objective, b: &HyperRect, level: f64, local: Option<&Ellipsoid>, method: BoundMethod, depth: usize, gaps: &mut Vec<HyperRect>) {
    let iv = b.to_intervals();
    if local.is_some_and(|l| l.contains_box(&iv)) {
        return;
    }
    if lbar_at_sample(obj, b, method).is_some_and(|l| l > level) || w_range(obj, b).is_some_and(|r| r.lo() > level) {
        return;
    }
    let axes: Vec<usize> = (0..b.dim()).filter(|&i| b.width(i) > 0.0).collect();
    if depth == 0 || axes.is_empty() {
        gaps.push(b.clone());
        return;
    }
    match refine2(b, Some(&axes)) {
        Ok(children) => {
            for c in children {
                excluded(obj, &c, level, local, method, depth - 1, gaps);
            }
        }
        Err(_) => gaps.push(b.clone()),
    }
}

/// Every rejected box, and every face sample that could not be bounded,
/// either lies inside the local set or has `W > level` on it. Boxes that
/// fail are bisected up to `depth` times.
pub fn check_containment(
    obj: &Objective,
    level: f64,
    ledger: &SampleLedger,
    estimate: &LevelEstimate,
    local: Option<&Ellipsoid>,
    method: BoundMethod,
    depth: usize,
) -> Containment {
    let mut gaps = Vec::new();
    if !(level > 0.0) {
        return Containment { ok: false, gaps };
    }
    for w in &ledger.wrong {
        excluded(obj, &w.rect(), level, local, method, depth, &mut gaps);
    }
    for b in &estimate.skipped {
        excluded(obj, b, level, local, method, depth, &mut gaps);
    }
    Containment { ok: gaps.is_empty(), gaps }
}

/// The local set lies inside `{W <= level}`; `n1` must contain it.
pub fn local_inside_level(obj: &Objective, level: f64, local: &Ellipsoid, n1: &HyperRect, depth: usize) -> bool {
    let iv = n1.to_intervals();
    if local.misses_box(&iv) {
        return true;
    }
    if w_range(obj, n1).is_some_and(|r| r.hi() <= level) {
        return true;
    }
    if depth == 0 {
        return false;
    }
    let axes: Vec<usize> = (0..n1.dim()).filter(|&i| n1.width(i) > 0.0).collect();
    match refine2(n1, Some(&axes)) {
        Ok(children) => children.iter().all(|c| local_inside_level(obj, level, local, c, depth - 1)),
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::VectorField;
    use crate::geometry::SampleRecord;
    use crate::system::{Mode, PiecewiseSystem};
    use alloc::vec;

    fn rec(center: Vec<f64>, half: f64) -> SampleRecord {
        let r = HyperRect::symmetric(center, &vec![half; 2]).unwrap();
        SampleRecord {
            spoint: r.center.clone(),
            tau: r.tau(),
            del: r.delta,
            f_value: 0.0,
            gamma: 0.0,
            flag: None,
        }
    }

    #[test]
    fn obstacle_adjacency() {
        let mut ledger = SampleLedger::default();
        for i in -2..=2 {
            for j in -2..=2 {
                let r = rec(vec![i as f64, j as f64], 0.5);
                if i == 0 && j == 0 || (i == 2 && j == 2) {
                    ledger.wrong.push(r);
                } else {
                    ledger.good.push(r);
                }
            }
        }
        ledger.wrong.push(rec(vec![10.0, 10.0], 0.5));
        let sel = select_obstacle_samples(&ledger, None);
        assert_eq!(sel.len(), 2);
        let inside = Ellipsoid { p: Mat::identity(2), c: 1.0 };
        assert_eq!(select_obstacle_samples(&ledger, Some(&inside)).len(), 1);
    }

    #[test]
    fn face_samples() {
        let s = HyperRect::symmetric(vec![0.0, 0.0], &[1.0, 1.0]).unwrap();
        let mut ledger = SampleLedger::default();
        ledger.good.push(SampleRecord {
            spoint: vec![0.5, 0.5],
            del: vec![0.5, -0.5, 0.5, -0.5],
            tau: vec![0.5, 0.5],
            f_value: 0.0,
            gamma: 0.0,
            flag: None,
        });
        let b = boundary_samples(&s, 0.25, &ledger);
        assert_eq!(b.len(), 4);
        assert!(b.iter().any(|r| r.delta == [0.0, 0.0, 0.25, -0.25] && r.center[0] == 1.0));
        assert!(b.iter().any(|r| r.delta == [0.25, -0.25, 0.0, 0.0] && r.center[1] == 1.0));
        let s1 = HyperRect::symmetric(vec![0.0], &[1.0]).unwrap();
        let mut l1 = SampleLedger::default();
        l1.good.push(SampleRecord {
            spoint: vec![0.0],
            del: vec![1.0, -1.0],
            tau: vec![1.0],
            f_value: 0.0,
            gamma: 0.0,
            flag: None,
        });
        let pts = boundary_samples(&s1, 0.1, &l1);
        assert_eq!(pts.len(), 2);
        assert!(pts.iter().all(|p| p.delta == [0.0, 0.0] && p.center[0].abs() == 1.0));
    }

    #[test]
    fn lower_bound_of_quadratic() {
        let sys = PiecewiseSystem::smooth(Mode::Discrete, VectorField::parse(&["0.5*x1", "0.5*x2"], 2).unwrap()).unwrap();
        let v = CandidateV::new(Mat::identity(2), 0.9).unwrap();
        let obj = Objective::level(&sys, &v, 1);
        let p = HyperRect::point(vec![1.0, 2.0]);
        assert_eq!(lbar_at_sample(&obj, &p, BoundMethod::Split), Some(5.0));
        let b = HyperRect::symmetric(vec![1.0, 2.0], &[0.1, 0.1]).unwrap();
        let l = lbar_at_sample(&obj, &b, BoundMethod::Split).unwrap();
        assert!(l <= 0.9 * 0.9 + 1.9 * 1.9);
    }
}
