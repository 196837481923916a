//! Closed real intervals with outward-rounded arithmetic.
//!
//! Rounding is handled by widening each computed endpoint by a relative
//! `4 * f64::EPSILON` after the operation instead of switching FPU rounding
//! modes. Every result therefore encloses the exact real image of its
//! operands, at the cost of a few ulps of extra width.

use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::error::{Error, Result};

const INFLATE: f64 = 4.0 * f64::EPSILON;
const TINY: f64 = 5e-324;

/// Tolerance below zero that `sqrt` silently clamps away.
pub const SQRT_CLAMP_TOL: f64 = 1e-12;

#[inline]
fn down(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        x
    } else {
        x - (x.abs() * INFLATE).max(TINY)
    }
}

#[inline]
fn up(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        x
    } else {
        x + (x.abs() * INFLATE).max(TINY)
    }
}

// Error-free transforms: a result is only widened when it is inexact.
#[inline]
fn sum_exact(a: f64, b: f64, s: f64) -> bool {
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    err == 0.0 && s.is_finite()
}

const SPLIT: f64 = 134217729.0; // 2^27 + 1
const SPLIT_LIMIT: f64 = 1e290;

#[inline]
fn split(a: f64) -> (f64, f64) {
    let c = SPLIT * a;
    let hi = c - (c - a);
    (hi, a - hi)
}

#[inline]
fn prod_exact(a: f64, b: f64, p: f64) -> bool {
    if !p.is_finite() || a.abs() > SPLIT_LIMIT || b.abs() > SPLIT_LIMIT || p.abs() < 1e-290 {
        return false;
    }
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    let err = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
    err == 0.0
}

#[inline]
fn sum_down(a: f64, b: f64) -> f64 {
    let s = a + b;
    if sum_exact(a, b, s) {
        s
    } else {
        down(s)
    }
}

#[inline]
fn sum_up(a: f64, b: f64) -> f64 {
    let s = a + b;
    if sum_exact(a, b, s) {
        s
    } else {
        up(s)
    }
}

// Products that round to zero only lose sign information through underflow.
#[inline]
fn prod(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

#[inline]
fn prod_down(a: f64, b: f64) -> f64 {
    let p = prod(a, b);
    if p == 0.0 && a != 0.0 && b != 0.0 {
        -TINY
    } else if p == 0.0 || prod_exact(a, b, p) {
        p
    } else {
        down(p)
    }
}

#[inline]
fn prod_up(a: f64, b: f64) -> f64 {
    let p = prod(a, b);
    if p == 0.0 && a != 0.0 && b != 0.0 {
        TINY
    } else if p == 0.0 || prod_exact(a, b, p) {
        p
    } else {
        up(p)
    }
}

#[inline]
fn quot_exact(a: f64, b: f64, q: f64) -> bool {
    q == 0.0 && a == 0.0 || prod_exact(q, b, a) && q * b == a
}

fn powi_f64(mut base: f64, mut k: u32) -> f64 {
    let mut acc = 1.0;
    while k > 0 {
        if k & 1 == 1 {
            acc *= base;
        }
        base *= base;
        k >>= 1;
    }
    acc
}

/// A closed interval `[lo, hi]` with `lo <= hi`.
#[derive(Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    pub const ONE: Interval = Interval { lo: 1.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::InvalidInterval { lo, hi });
        }
        Ok(Interval { lo, hi })
    }

    /// Degenerate interval `[x, x]`.
    pub const fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    /// Interval `[c - r, c + r]` rounded outward.
    pub fn centered(c: f64, r: f64) -> Self {
        let r = r.abs();
        Interval {
            lo: down(c - r),
            hi: up(c + r),
        }
    }

    #[inline]
    pub fn lo(&self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn mid(&self) -> f64 {
        0.5 * self.lo + 0.5 * self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    /// `self ⊆ other`.
    pub fn subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn intersects(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    /// Upper bound of `|x|` over the interval.
    pub fn magnitude_upper(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// Lower bound of `|x|` over the interval.
    pub fn mignitude(&self) -> f64 {
        if self.contains_zero() {
            0.0
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    /// Smallest interval containing both operands.
    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn checked_div(&self, rhs: &Interval) -> Result<Interval> {
        if rhs.contains_zero() {
            return Err(Error::Domain { op: "div" });
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for a in [self.lo, self.hi] {
            for b in [rhs.lo, rhs.hi] {
                let q = a / b;
                if quot_exact(a, b, q) {
                    lo = lo.min(q);
                    hi = hi.max(q);
                } else {
                    lo = lo.min(down(q));
                    hi = hi.max(up(q));
                }
            }
        }
        Ok(Interval { lo, hi })
    }

    pub fn recip(&self) -> Result<Interval> {
        Interval::ONE.checked_div(self)
    }

    /// Square root; lower endpoints in `[-SQRT_CLAMP_TOL, 0)` are clamped to zero.
    pub fn sqrt(&self) -> Result<Interval> {
        if self.hi < 0.0 || self.lo < -SQRT_CLAMP_TOL {
            return Err(Error::Domain { op: "sqrt" });
        }
        let root = |x: f64, widen: fn(f64) -> f64| {
            let r = libm::sqrt(x);
            if prod_exact(r, r, x) && r * r == x {
                r
            } else {
                widen(r)
            }
        };
        Ok(Interval {
            lo: root(self.lo.max(0.0), down).max(0.0),
            hi: root(self.hi, up),
        })
    }

    /// Integer power with the tight even/odd image rule.
    pub fn powi(&self, k: u32) -> Interval {
        if k == 0 {
            return Interval::ONE;
        }
        if k == 1 {
            return *self;
        }
        if k == 2 {
            let (a, b) = (self.lo.abs(), self.hi.abs());
            let lo = if self.contains_zero() { 0.0 } else { prod_down(a.min(b), a.min(b)) };
            return Interval {
                lo: lo.max(0.0),
                hi: prod_up(a.max(b), a.max(b)),
            };
        }
        let rel = (k as f64 + 4.0) * f64::EPSILON;
        let widen_lo = |x: f64| if x == 0.0 { 0.0 } else { x - x.abs() * rel - TINY };
        let widen_hi = |x: f64| if x == 0.0 { 0.0 } else { x + x.abs() * rel + TINY };
        if k % 2 == 1 {
            Interval {
                lo: widen_lo(powi_f64(self.lo, k)),
                hi: widen_hi(powi_f64(self.hi, k)),
            }
        } else if self.lo >= 0.0 {
            Interval {
                lo: widen_lo(powi_f64(self.lo, k)).max(0.0),
                hi: widen_hi(powi_f64(self.hi, k)),
            }
        } else if self.hi <= 0.0 {
            Interval {
                lo: widen_lo(powi_f64(self.hi, k)).max(0.0),
                hi: widen_hi(powi_f64(self.lo, k)),
            }
        } else {
            Interval {
                lo: 0.0,
                hi: widen_hi(powi_f64(self.magnitude_upper(), k)),
            }
        }
    }

    pub fn abs(&self) -> Interval {
        if self.lo >= 0.0 {
            *self
        } else if self.hi <= 0.0 {
            -*self
        } else {
            Interval {
                lo: 0.0,
                hi: self.magnitude_upper(),
            }
        }
    }

    /// Multiply by a real constant.
    pub fn scale(&self, c: f64) -> Interval {
        *self * Interval::point(c)
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval {
            lo: sum_down(self.lo, rhs.lo),
            hi: sum_up(self.hi, rhs.hi),
        }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval {
            lo: sum_down(self.lo, -rhs.hi),
            hi: sum_up(self.hi, -rhs.lo),
        }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        let (a, b, c, d) = (self.lo, self.hi, rhs.lo, rhs.hi);
        let lo = prod_down(a, c)
            .min(prod_down(a, d))
            .min(prod_down(b, c))
            .min(prod_down(b, d));
        let hi = prod_up(a, c)
            .max(prod_up(a, d))
            .max(prod_up(b, c))
            .max(prod_up(b, d));
        Interval { lo, hi }
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

/// Binary interval operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Unary interval operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Sqrt,
    PowInt(u32),
    Abs,
}

pub fn iv_binary(op: BinaryOp, a: Interval, b: Interval) -> Result<Interval> {
    Ok(match op {
        BinaryOp::Add => a + b,
        BinaryOp::Sub => a - b,
        BinaryOp::Mul => a * b,
        BinaryOp::Div => a.checked_div(&b)?,
    })
}

pub fn iv_unary(op: UnaryOp, a: Interval) -> Result<Interval> {
    Ok(match op {
        UnaryOp::Neg => -a,
        UnaryOp::Sqrt => a.sqrt()?,
        UnaryOp::PowInt(k) => a.powi(k),
        UnaryOp::Abs => a.abs(),
    })
}

/// A box in `R^n` as a vector of intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalVector(pub Vec<Interval>);

impl IntervalVector {
    pub fn from_points(x: &[f64]) -> Self {
        IntervalVector(x.iter().map(|&v| Interval::point(v)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Interval> {
        self.0.iter()
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        x.len() == self.len() && self.0.iter().zip(x).all(|(iv, &v)| iv.contains(v))
    }

    pub fn subset_of(&self, other: &IntervalVector) -> bool {
        self.len() == other.len() && self.0.iter().zip(&other.0).all(|(a, b)| a.subset_of(b))
    }

    pub fn intersects(&self, other: &IntervalVector) -> bool {
        self.len() == other.len() && self.0.iter().zip(&other.0).all(|(a, b)| a.intersects(b))
    }

    pub fn hull(&self, other: &IntervalVector) -> IntervalVector {
        IntervalVector(self.0.iter().zip(&other.0).map(|(a, b)| a.hull(b)).collect())
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.0.iter().map(Interval::mid).collect()
    }

    pub fn max_width(&self) -> f64 {
        self.0.iter().map(Interval::width).fold(0.0, f64::max)
    }
}

impl Index<usize> for IntervalVector {
    type Output = Interval;
    fn index(&self, i: usize) -> &Interval {
        &self.0[i]
    }
}

impl IndexMut<usize> for IntervalVector {
    fn index_mut(&mut self, i: usize) -> &mut Interval {
        &mut self.0[i]
    }
}

/// Row-major grid of intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Interval>,
}

impl IntervalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntervalMatrix {
            rows,
            cols,
            data: alloc::vec![Interval::ZERO; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Interval>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(IntervalMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Interval {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Interval) {
        self.data[i * self.cols + j] = v;
    }

    /// Componentwise `magnitude_upper`, row-major.
    pub fn magnitude_upper(&self) -> Vec<f64> {
        self.data.iter().map(Interval::magnitude_upper).collect()
    }

    pub fn contains_matrix(&self, m: &[f64]) -> bool {
        m.len() == self.data.len() && self.data.iter().zip(m).all(|(iv, &v)| iv.contains(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    fn approx(a: Interval, lo: f64, hi: f64) -> bool {
        a.contains(lo) && a.contains(hi) && (a.lo() - lo).abs() < 1e-12 && (a.hi() - hi).abs() < 1e-12
    }

    #[test]
    fn rejects_reversed_endpoints() {
        assert!(Interval::new(2.0, 1.0).is_err());
        assert!(Interval::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn binary_examples() {
        assert!(approx(iv_binary(BinaryOp::Add, iv(1.0, 2.0), iv(3.0, 5.0)).unwrap(), 4.0, 7.0));
        assert!(approx(iv_binary(BinaryOp::Mul, iv(-1.0, 2.0), iv(3.0, 4.0)).unwrap(), -4.0, 8.0));
        assert_eq!(
            iv_binary(BinaryOp::Div, iv(1.0, 2.0), iv(0.0, 1.0)),
            Err(Error::Domain { op: "div" })
        );
    }

    #[test]
    fn unary_examples() {
        assert!(approx(iv_unary(UnaryOp::Sqrt, iv(4.0, 9.0)).unwrap(), 2.0, 3.0));
        assert_eq!(iv_unary(UnaryOp::PowInt(2), iv(-1.0, 2.0)).unwrap().lo(), 0.0);
        assert!(approx(iv(-1.0, 2.0).powi(2), 0.0, 4.0));
        assert_eq!(iv(-3.0, 2.0).abs(), iv(0.0, 3.0));
        assert!(iv(-2.0, -1.0).sqrt().is_err());
        assert!(iv(-1.0, 4.0).sqrt().is_err());
        let clamped = iv(-1e-13, 4.0).sqrt().unwrap();
        assert_eq!(clamped.lo(), 0.0);
    }

    #[test]
    fn odd_power_keeps_sign() {
        let r = iv(-2.0, 1.0).powi(3);
        assert!(approx(r, -8.0, 1.0));
    }

    #[test]
    fn magnitude_examples() {
        assert_eq!(iv(-3.0, 2.0).magnitude_upper(), 3.0);
        assert_eq!(iv(0.0, 0.0).magnitude_upper(), 0.0);
        assert_eq!(iv(1.5, 2.5).magnitude_upper(), 2.5);
    }

    #[test]
    fn hull_examples() {
        assert_eq!(iv(0.0, 1.0).hull(&iv(2.0, 3.0)), iv(0.0, 3.0));
        assert_eq!(iv(0.0, 2.0).hull(&iv(1.0, 3.0)), iv(0.0, 3.0));
        let a = iv(-0.5, 0.25);
        assert_eq!(a.hull(&a), a);
    }

    #[test]
    fn outward_rounding_encloses_inexact_sum() {
        let s = Interval::point(0.1) + Interval::point(0.2);
        assert!(s.lo() < 0.30000000000000004 && s.hi() >= 0.30000000000000004);
        assert!(s.lo() <= 0.3);
    }

    #[test]
    fn exact_operations_stay_exact() {
        assert_eq!(Interval::point(2.0) * Interval::point(1.0), Interval::point(2.0));
        assert_eq!(Interval::point(0.5) + Interval::point(0.25), Interval::point(0.75));
        assert_eq!(Interval::point(1.0).checked_div(&Interval::point(4.0)).unwrap(), Interval::point(0.25));
        assert_eq!(Interval::point(9.0).sqrt().unwrap(), Interval::point(3.0));
        assert_eq!(iv(-3.0, 2.0).powi(2), iv(0.0, 9.0));
        let third = Interval::point(1.0).checked_div(&Interval::point(3.0)).unwrap();
        assert!(third.lo() < 1.0 / 3.0 && third.hi() > 1.0 / 3.0);
    }

    #[test]
    fn underflowing_product_keeps_sign_enclosure() {
        let p = Interval::point(-1e-200) * Interval::point(1e-200);
        assert!(p.lo() < 0.0);
    }
}
