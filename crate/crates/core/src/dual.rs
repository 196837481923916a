//! Forward-mode dual numbers carrying gradients and Hessians.
//!
//! Both types are generic over the coefficient [`Scalar`], so the same code
//! yields point derivatives (`f64`), rigorous derivative enclosures
//! (`Interval`) and, by nesting `Dual1<Dual2<Interval>>`, third-order
//! information. An empty gradient (or Hessian) vector stands for zero, which
//! is what constants carry.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::scalar::Scalar;

fn merge<S: Scalar>(
    a: &[S],
    b: &[S],
    both: impl Fn(&S, &S) -> S,
    left: impl Fn(&S) -> S,
    right: impl Fn(&S) -> S,
) -> Vec<S> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| match (a.get(i), b.get(i)) {
            (Some(x), Some(y)) => both(x, y),
            (Some(x), None) => left(x),
            (None, Some(y)) => right(y),
            (None, None) => unreachable!(),
        })
        .collect()
}

fn accumulate<S: Scalar>(acc: &mut Option<S>, term: S) {
    *acc = Some(match acc.take() {
        Some(a) => a.add(&term),
        None => term,
    });
}

/// Value with first derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct Dual1<S> {
    pub v: S,
    pub g: Vec<S>,
}

impl<S: Scalar> Dual1<S> {
    /// Independent variable `i` of `n`, with value `v`.
    pub fn var(v: S, i: usize, n: usize) -> Self {
        let g = (0..n).map(|j| S::cst(if i == j { 1.0 } else { 0.0 })).collect();
        Dual1 { v, g }
    }

    /// Gradient padded with zeros to length `n`.
    pub fn grad(&self, n: usize) -> Vec<S> {
        (0..n)
            .map(|i| self.g.get(i).cloned().unwrap_or_else(|| S::cst(0.0)))
            .collect()
    }

    fn chain(&self, f: S, df: &S) -> Self {
        Dual1 {
            v: f,
            g: self.g.iter().map(|gi| df.mul(gi)).collect(),
        }
    }
}

impl<S: Scalar> Scalar for Dual1<S> {
    fn cst(c: f64) -> Self {
        Dual1 {
            v: S::cst(c),
            g: Vec::new(),
        }
    }

    fn add(&self, rhs: &Self) -> Self {
        Dual1 {
            v: self.v.add(&rhs.v),
            g: merge(&self.g, &rhs.g, |x, y| x.add(y), S::clone, S::clone),
        }
    }

    fn sub(&self, rhs: &Self) -> Self {
        Dual1 {
            v: self.v.sub(&rhs.v),
            g: merge(&self.g, &rhs.g, |x, y| x.sub(y), S::clone, S::neg),
        }
    }

    fn mul(&self, rhs: &Self) -> Self {
        Dual1 {
            v: self.v.mul(&rhs.v),
            g: merge(
                &self.g,
                &rhs.g,
                |x, y| rhs.v.mul(x).add(&self.v.mul(y)),
                |x| rhs.v.mul(x),
                |y| self.v.mul(y),
            ),
        }
    }

    fn neg(&self) -> Self {
        Dual1 {
            v: self.v.neg(),
            g: self.g.iter().map(S::neg).collect(),
        }
    }

    fn div(&self, rhs: &Self) -> Result<Self> {
        let inv = rhs.v.recip_checked()?;
        let q = self.v.mul(&inv);
        let g = merge(
            &self.g,
            &rhs.g,
            |x, y| x.sub(&q.mul(y)).mul(&inv),
            |x| x.mul(&inv),
            |y| q.mul(y).mul(&inv).neg(),
        );
        Ok(Dual1 { v: q, g })
    }

    fn sqrt(&self) -> Result<Self> {
        let s = self.v.sqrt()?;
        let d = S::cst(0.5).div(&s)?;
        Ok(self.chain(s, &d))
    }

    fn powi(&self, k: u32) -> Self {
        if k == 0 {
            return Self::cst(1.0);
        }
        let d = self.v.powi(k - 1).scale(k as f64);
        self.chain(self.v.powi(k), &d)
    }

    fn abs(&self) -> Result<Self> {
        let r = self.v.range();
        if r.lo() > 0.0 {
            Ok(self.clone())
        } else if r.hi() < 0.0 {
            Ok(self.neg())
        } else if self.g.is_empty() {
            Ok(Dual1 {
                v: self.v.abs()?,
                g: Vec::new(),
            })
        } else {
            Err(Error::NotDifferentiable("abs at zero"))
        }
    }

    fn range(&self) -> Interval {
        self.v.range()
    }
}

/// Value with gradient and full Hessian (row-major, `n * n`).
#[derive(Debug, Clone, PartialEq)]
pub struct Dual2<S> {
    pub v: S,
    pub g: Vec<S>,
    pub h: Vec<S>,
}

impl<S: Scalar> Dual2<S> {
    pub fn var(v: S, i: usize, n: usize) -> Self {
        let g = (0..n).map(|j| S::cst(if i == j { 1.0 } else { 0.0 })).collect();
        Dual2 { v, g, h: Vec::new() }
    }

    pub fn grad(&self, n: usize) -> Vec<S> {
        (0..n)
            .map(|i| self.g.get(i).cloned().unwrap_or_else(|| S::cst(0.0)))
            .collect()
    }

    /// Hessian padded with zeros to `n * n`, row-major.
    pub fn hess(&self, n: usize) -> Vec<S> {
        if self.h.len() == n * n {
            return self.h.clone();
        }
        let mut out = alloc::vec![S::cst(0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                if let Some(x) = self.hess_at(i, j) {
                    out[i * n + j] = x.clone();
                }
            }
        }
        out
    }

    // Constants carry no gradient; every other value has a full one.
    fn dim(&self) -> usize {
        self.g.len()
    }

    fn hess_at(&self, i: usize, j: usize) -> Option<&S> {
        let m = self.dim();
        if i < m && j < m {
            self.h.get(i * m + j)
        } else {
            None
        }
    }

    // f(u) with f'(u) = d1, f''(u) = d2.
    fn chain(&self, f: S, d1: &S, d2: &S) -> Self {
        let n = self.dim();
        let g: Vec<S> = self.g.iter().map(|gi| d1.mul(gi)).collect();
        let mut h = Vec::new();
        if n > 0 && (!self.g.is_empty() || !self.h.is_empty()) {
            h.reserve(n * n);
            for i in 0..n {
                for j in 0..n {
                    let mut hij = self.hess_at(i, j).map(|x| d1.mul(x));
                    if let (Some(gi), Some(gj)) = (self.g.get(i), self.g.get(j)) {
                        accumulate(&mut hij, d2.mul(&gi.mul(gj)));
                    }
                    h.push(hij.unwrap_or_else(|| S::cst(0.0)));
                }
            }
        }
        Dual2 { v: f, g, h }
    }

    fn recip(&self) -> Result<Self> {
        let inv = self.v.recip_checked()?;
        let inv2 = inv.mul(&inv);
        let d1 = inv2.neg();
        let d2 = inv2.mul(&inv).scale(2.0);
        Ok(self.chain(inv, &d1, &d2))
    }
}

impl<S: Scalar> Scalar for Dual2<S> {
    fn cst(c: f64) -> Self {
        Dual2 {
            v: S::cst(c),
            g: Vec::new(),
            h: Vec::new(),
        }
    }

    fn add(&self, rhs: &Self) -> Self {
        let n = self.dim().max(rhs.dim());
        Dual2 {
            v: self.v.add(&rhs.v),
            g: merge(&self.g, &rhs.g, |x, y| x.add(y), S::clone, S::clone),
            h: match (self.h.is_empty(), rhs.h.is_empty()) {
                (true, true) => Vec::new(),
                (false, true) => self.hess(n),
                (true, false) => rhs.hess(n),
                (false, false) => merge(&self.hess(n), &rhs.hess(n), |x, y| x.add(y), S::clone, S::clone),
            },
        }
    }

    fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }

    fn mul(&self, rhs: &Self) -> Self {
        let n = self.dim().max(rhs.dim());
        let g = merge(
            &self.g,
            &rhs.g,
            |x, y| rhs.v.mul(x).add(&self.v.mul(y)),
            |x| rhs.v.mul(x),
            |y| self.v.mul(y),
        );
        let mut h = Vec::new();
        let any = !(self.g.is_empty() && rhs.g.is_empty() && self.h.is_empty() && rhs.h.is_empty());
        if n > 0 && any {
            h.reserve(n * n);
            for i in 0..n {
                for j in 0..n {
                    let mut hij: Option<S> = None;
                    if let Some(x) = rhs.hess_at(i, j) {
                        accumulate(&mut hij, self.v.mul(x));
                    }
                    if let Some(x) = self.hess_at(i, j) {
                        accumulate(&mut hij, rhs.v.mul(x));
                    }
                    if let (Some(ai), Some(bj)) = (self.g.get(i), rhs.g.get(j)) {
                        accumulate(&mut hij, ai.mul(bj));
                    }
                    if let (Some(aj), Some(bi)) = (self.g.get(j), rhs.g.get(i)) {
                        accumulate(&mut hij, bi.mul(aj));
                    }
                    h.push(hij.unwrap_or_else(|| S::cst(0.0)));
                }
            }
        }
        Dual2 {
            v: self.v.mul(&rhs.v),
            g,
            h,
        }
    }

    fn neg(&self) -> Self {
        Dual2 {
            v: self.v.neg(),
            g: self.g.iter().map(S::neg).collect(),
            h: self.h.iter().map(S::neg).collect(),
        }
    }

    fn div(&self, rhs: &Self) -> Result<Self> {
        if rhs.g.is_empty() && rhs.h.is_empty() {
            let inv = rhs.v.recip_checked()?;
            return Ok(Dual2 {
                v: self.v.mul(&inv),
                g: self.g.iter().map(|x| x.mul(&inv)).collect(),
                h: self.h.iter().map(|x| x.mul(&inv)).collect(),
            });
        }
        Ok(self.mul(&rhs.recip()?))
    }

    fn sqrt(&self) -> Result<Self> {
        let s = self.v.sqrt()?;
        let d1 = S::cst(0.5).div(&s)?;
        let d2 = d1.mul(&d1).mul(&d1).scale(-2.0);
        Ok(self.chain(s, &d1, &d2))
    }

    fn powi(&self, k: u32) -> Self {
        match k {
            0 => Self::cst(1.0),
            1 => self.clone(),
            _ => {
                let d1 = self.v.powi(k - 1).scale(k as f64);
                let d2 = self.v.powi(k - 2).scale((k * (k - 1)) as f64);
                self.chain(self.v.powi(k), &d1, &d2)
            }
        }
    }

    fn abs(&self) -> Result<Self> {
        let r = self.v.range();
        if r.lo() > 0.0 {
            Ok(self.clone())
        } else if r.hi() < 0.0 {
            Ok(self.neg())
        } else if self.g.is_empty() && self.h.is_empty() {
            Ok(Dual2 {
                v: self.v.abs()?,
                g: Vec::new(),
                h: Vec::new(),
            })
        } else {
            Err(Error::NotDifferentiable("abs at zero"))
        }
    }

    fn range(&self) -> Interval {
        self.v.range()
    }
}

trait RecipChecked: Sized {
    fn recip_checked(&self) -> Result<Self>;
}

impl<S: Scalar> RecipChecked for S {
    fn recip_checked(&self) -> Result<Self> {
        S::cst(1.0).div(self)
    }
}
