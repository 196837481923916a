//! Hyper-rectangles in center/offset form and their refinement.
//!
//! A box is stored as a center `x_s` and a vector `delta` of length `2n`
//! where `delta[2i] >= 0` is the upper offset and `delta[2i + 1] <= 0` the
//! lower offset on axis `i`. Distances to the center are measured in the
//! infinity norm.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalVector};

#[derive(Debug, Clone, PartialEq)]
pub struct HyperRect {
    pub center: Vec<f64>,
    pub delta: Vec<f64>,
}

impl HyperRect {
    pub fn new(center: Vec<f64>, delta: Vec<f64>) -> Result<Self> {
        if delta.len() != 2 * center.len() {
            return Err(Error::DimensionMismatch {
                expected: 2 * center.len(),
                got: delta.len(),
            });
        }
        for (i, pair) in delta.chunks(2).enumerate() {
            if !(pair[0] >= 0.0 && pair[1] <= 0.0) || !center[i].is_finite() {
                return Err(Error::InvalidArgument(alloc::format!(
                    "offsets on axis {} must satisfy upper >= 0 >= lower",
                    i + 1
                )));
            }
        }
        Ok(HyperRect { center, delta })
    }

    /// Box `center ± half[i]` on every axis.
    pub fn symmetric(center: Vec<f64>, half: &[f64]) -> Result<Self> {
        let delta = half.iter().flat_map(|&r| [r.abs(), -r.abs()]).collect();
        HyperRect::new(center, delta)
    }

    /// Box `[lo_i, hi_i]` centered at the midpoint.
    pub fn from_bounds(lo: &[f64], hi: &[f64]) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        let center: Vec<f64> = lo.iter().zip(hi).map(|(&a, &b)| 0.5 * a + 0.5 * b).collect();
        let delta = center
            .iter()
            .zip(lo.iter().zip(hi))
            .flat_map(|(&c, (&a, &b))| [(b - c).max(0.0), (a - c).min(0.0)])
            .collect();
        HyperRect::new(center, delta)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn upper(&self, i: usize) -> f64 {
        self.delta[2 * i]
    }

    pub fn lower(&self, i: usize) -> f64 {
        self.delta[2 * i + 1]
    }

    /// Lower and upper bound on axis `i` (nearest rounding).
    pub fn bounds(&self, i: usize) -> (f64, f64) {
        (self.center[i] + self.lower(i), self.center[i] + self.upper(i))
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper(i) - self.lower(i)
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.width(i)).product()
    }

    pub fn tau(&self) -> Vec<f64> {
        tau_of(&self.delta)
    }

    pub fn max_abs_delta(&self) -> f64 {
        max_abs_delta(&self.delta)
    }

    /// Interval enclosure, rounded outward.
    pub fn to_intervals(&self) -> IntervalVector {
        IntervalVector(
            (0..self.dim())
                .map(|i| {
                    let c = Interval::point(self.center[i]);
                    let lo = (c + Interval::point(self.lower(i))).lo();
                    let hi = (c + Interval::point(self.upper(i))).hi();
                    Interval::new(lo, hi).unwrap_or(c)
                })
                .collect(),
        )
    }

    /// Offsets `X - x_s` as intervals.
    pub fn offsets(&self) -> IntervalVector {
        IntervalVector(
            (0..self.dim())
                .map(|i| Interval::new(self.lower(i), self.upper(i)).unwrap_or(Interval::ZERO))
                .collect(),
        )
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        contains_point(self, x)
    }

    /// True if the closed boxes share at least one point.
    pub fn intersects(&self, other: &HyperRect) -> bool {
        (0..self.dim()).all(|i| {
            let (a, b) = self.bounds(i);
            let (c, d) = other.bounds(i);
            a <= d && c <= b
        })
    }

    pub fn subset_of(&self, other: &HyperRect) -> bool {
        (0..self.dim()).all(|i| {
            let (a, b) = self.bounds(i);
            let (c, d) = other.bounds(i);
            c <= a && b <= d
        })
    }

    /// All `2^n` corners.
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..1usize << n)
            .map(|mask| {
                (0..n)
                    .map(|i| {
                        let off = if mask >> i & 1 == 1 { self.upper(i) } else { self.lower(i) };
                        self.center[i] + off
                    })
                    .collect()
            })
            .collect()
    }

    /// Axis with the largest width (lowest index on ties).
    pub fn longest_axis(&self) -> usize {
        let mut best = 0;
        for i in 1..self.dim() {
            if self.width(i) > self.width(best) {
                best = i;
            }
        }
        best
    }

    /// Degenerate box at a point.
    pub fn point(x: Vec<f64>) -> Self {
        let n = x.len();
        HyperRect {
            center: x,
            delta: alloc::vec![0.0; 2 * n],
        }
    }
}

/// Offsets of the bounding box of `vertices` relative to `center`.
pub fn delta_from_vertices(center: &[f64], vertices: &[Vec<f64>]) -> Result<Vec<f64>> {
    if vertices.is_empty() {
        return Err(Error::InvalidArgument("at least one vertex is required".into()));
    }
    let n = center.len();
    let mut delta = alloc::vec![0.0; 2 * n];
    for (k, v) in vertices.iter().enumerate() {
        if v.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: v.len() });
        }
        for i in 0..n {
            let d = v[i] - center[i];
            if k == 0 {
                delta[2 * i] = d;
                delta[2 * i + 1] = d;
            } else {
                delta[2 * i] = delta[2 * i].max(d);
                delta[2 * i + 1] = delta[2 * i + 1].min(d);
            }
        }
    }
    Ok(delta)
}

/// Per-axis largest absolute offset.
pub fn tau_of(delta: &[f64]) -> Vec<f64> {
    delta.chunks(2).map(|p| p[0].abs().max(p[1].abs())).collect()
}

pub fn max_abs_delta(delta: &[f64]) -> f64 {
    delta.iter().fold(0.0, |m, d| m.max(d.abs()))
}

pub fn contains_point(b: &HyperRect, x: &[f64]) -> bool {
    x.len() == b.dim()
        && (0..b.dim()).all(|i| {
            let d = x[i] - b.center[i];
            b.lower(i) <= d && d <= b.upper(i)
        })
}

/// Split `b` in half along `dims` (all axes when `None`).
///
/// Children are ordered by a binary counter over the refined axes, lower
/// half first.
pub fn refine2(b: &HyperRect, dims: Option<&[usize]>) -> Result<Vec<HyperRect>> {
    let all: Vec<usize> = (0..b.dim()).collect();
    let axes = dims.unwrap_or(&all);
    if axes.is_empty() {
        return Err(Error::InvalidArgument("no axes to refine".into()));
    }
    for &a in axes {
        if a >= b.dim() {
            return Err(Error::DimensionMismatch { expected: b.dim(), got: a + 1 });
        }
        if b.width(a) <= 0.0 {
            return Err(Error::InvalidArgument(alloc::format!("axis {} is degenerate", a + 1)));
        }
    }
    let mut out = Vec::with_capacity(1 << axes.len());
    for mask in 0..1usize << axes.len() {
        let mut center = b.center.clone();
        let mut delta = b.delta.clone();
        for (k, &a) in axes.iter().enumerate() {
            let (c, u, l) = (b.center[a], b.upper(a), b.lower(a));
            let upper = mask >> k & 1 == 1;
            let child = c + 0.5 * if upper { u } else { l };
            // The halves meet at `c + (u + l)/2`. A rounded child center
            // shifts the box, so the offsets are widened to keep its half
            // covered; exact halves stay exact.
            let from = |x: f64| Interval::point(c) + Interval::point(x) - Interval::point(child);
            let split = Interval::point(c) + Interval::point(0.5 * u) + Interval::point(0.5 * l) - Interval::point(child);
            let (lo, hi) = if upper { (split.lo(), from(u).hi()) } else { (from(l).lo(), split.hi()) };
            center[a] = child;
            delta[2 * a] = hi.max(0.0);
            delta[2 * a + 1] = lo.min(0.0);
        }
        out.push(HyperRect { center, delta });
    }
    Ok(out)
}

/// Lexicographic order on center, then size, then offsets.
pub fn box_order(a: &HyperRect, b: &HyperRect) -> Ordering {
    lex(&a.center, &b.center)
        .then_with(|| a.max_abs_delta().total_cmp(&b.max_abs_delta()))
        .then_with(|| lex(&a.delta, &b.delta))
}

fn lex(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// Why a box ended up undecided rather than simply failing the test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordFlag {
    /// More branch sequences than the cap.
    BranchOverflow,
    /// An interval operation left its domain (division by zero, sqrt of a negative).
    DomainError,
    /// The sample point's own trajectory leaves the declared domain.
    LeftDomain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub spoint: Vec<f64>,
    pub del: Vec<f64>,
    pub tau: Vec<f64>,
    /// Upper bound of `F(x_s)`, or NaN when it could not be computed.
    pub f_value: f64,
    /// Slack `γ̄`, or NaN when it could not be computed.
    pub gamma: f64,
    pub flag: Option<RecordFlag>,
}

impl SampleRecord {
    pub fn rect(&self) -> HyperRect {
        HyperRect {
            center: self.spoint.clone(),
            delta: self.del.clone(),
        }
    }

    pub fn max_abs_delta(&self) -> f64 {
        max_abs_delta(&self.del)
    }
}

/// Certified (`good`) and rejected (`wrong`) boxes of a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleLedger {
    pub good: Vec<SampleRecord>,
    pub wrong: Vec<SampleRecord>,
}

impl SampleLedger {
    pub fn sort(&mut self) {
        let key = |a: &SampleRecord, b: &SampleRecord| box_order(&a.rect(), &b.rect());
        self.good.sort_by(key);
        self.wrong.sort_by(key);
    }

    pub fn certified_volume(&self) -> f64 {
        self.good.iter().map(|r| r.rect().volume()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn delta_from_vertices_examples() {
        let verts = vec![vec![1.0, 1.3], vec![1.0, -1.3], vec![-1.0, 1.3], vec![-1.0, -1.3]];
        assert_eq!(delta_from_vertices(&[0.0, 0.0], &verts).unwrap(), [1.0, -1.0, 1.3, -1.3]);
        assert_eq!(delta_from_vertices(&[2.0, 3.0], &[vec![2.0, 3.0]]).unwrap(), [0.0; 4]);
        assert_eq!(delta_from_vertices(&[0.0], &[vec![-2.0], vec![3.0]]).unwrap(), [3.0, -2.0]);
        assert!(delta_from_vertices(&[0.0], &[vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn tau_and_max_examples() {
        assert_eq!(tau_of(&[1.0, -1.0, 1.3, -1.3]), [1.0, 1.3]);
        assert_eq!(tau_of(&[0.2, -0.1]), [0.2]);
        assert_eq!(tau_of(&[0.0; 4]), [0.0, 0.0]);
        assert_eq!(max_abs_delta(&[1.0, -1.0, 1.3, -1.3]), 1.3);
        assert_eq!(max_abs_delta(&[0.02, -0.02, 0.01, -0.01]), 0.02);
        assert_eq!(max_abs_delta(&[0.0; 4]), 0.0);
    }

    #[test]
    fn refine_examples() {
        let b = HyperRect::symmetric(vec![0.0, 0.0], &[1.0, 1.0]).unwrap();
        let kids = refine2(&b, None).unwrap();
        assert_eq!(kids.len(), 4);
        for k in &kids {
            assert_eq!(k.delta, [0.5, -0.5, 0.5, -0.5]);
            assert!(k.center.iter().all(|c| c.abs() == 0.5));
        }
        let line = HyperRect::symmetric(vec![0.0], &[1.0]).unwrap();
        let kids = refine2(&line, None).unwrap();
        assert_eq!(kids[0].center, [-0.5]);
        assert_eq!(kids[1].center, [0.5]);
        assert!(refine2(&line, Some(&[])).is_err());
        assert!(refine2(&HyperRect::point(vec![0.0]), None).is_err());
    }

    #[test]
    fn asymmetric_refinement_tiles() {
        let b = HyperRect::new(vec![0.0], vec![0.75, -0.25]).unwrap();
        let kids = refine2(&b, None).unwrap();
        assert_eq!(kids[0].bounds(0), (-0.25, 0.25));
        assert_eq!(kids[1].bounds(0), (0.25, 0.75));
    }

    #[test]
    fn membership_examples() {
        let b = HyperRect::symmetric(vec![0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!(contains_point(&b, &[0.5, -1.0]));
        assert!(!contains_point(&b, &[1.01, 0.0]));
        assert!(contains_point(&b, &[0.0, 0.0]));
    }

    #[test]
    fn rejects_bad_offsets() {
        assert!(HyperRect::new(vec![0.0], vec![-0.1, -0.2]).is_err());
        assert!(HyperRect::new(vec![0.0], vec![0.1]).is_err());
    }
}
