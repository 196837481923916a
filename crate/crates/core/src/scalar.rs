//! Number types that expression trees can be evaluated over.

use core::fmt::Debug;

use crate::error::{Error, Result};
use crate::interval::{Interval, SQRT_CLAMP_TOL};

/// Arithmetic shared by reals, intervals and dual numbers.
///
/// Fallible operations return `Err` on domain violations instead of
/// producing NaN. `range` gives an enclosure of the underlying value and is
/// what branching decisions (guards, abs) look at.
pub trait Scalar: Clone + Debug {
    fn cst(c: f64) -> Self;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn div(&self, rhs: &Self) -> Result<Self>;
    fn sqrt(&self) -> Result<Self>;
    fn powi(&self, k: u32) -> Self;
    fn abs(&self) -> Result<Self>;
    fn range(&self) -> Interval;

    fn scale(&self, c: f64) -> Self {
        self.mul(&Self::cst(c))
    }
}

impl Scalar for f64 {
    fn cst(c: f64) -> Self {
        c
    }

    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }

    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }

    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }

    fn neg(&self) -> Self {
        -self
    }

    fn div(&self, rhs: &Self) -> Result<Self> {
        if *rhs == 0.0 {
            return Err(Error::Domain { op: "div" });
        }
        Ok(self / rhs)
    }

    fn sqrt(&self) -> Result<Self> {
        if *self < -SQRT_CLAMP_TOL || self.is_nan() {
            return Err(Error::Domain { op: "sqrt" });
        }
        Ok(libm::sqrt(self.max(0.0)))
    }

    fn powi(&self, k: u32) -> Self {
        let mut acc = 1.0;
        for _ in 0..k {
            acc *= self;
        }
        acc
    }

    fn abs(&self) -> Result<Self> {
        Ok(libm::fabs(*self))
    }

    fn range(&self) -> Interval {
        Interval::point(*self)
    }
}

impl Scalar for Interval {
    fn cst(c: f64) -> Self {
        Interval::point(c)
    }

    fn add(&self, rhs: &Self) -> Self {
        *self + *rhs
    }

    fn sub(&self, rhs: &Self) -> Self {
        *self - *rhs
    }

    fn mul(&self, rhs: &Self) -> Self {
        *self * *rhs
    }

    fn neg(&self) -> Self {
        -*self
    }

    fn div(&self, rhs: &Self) -> Result<Self> {
        self.checked_div(rhs)
    }

    fn sqrt(&self) -> Result<Self> {
        Interval::sqrt(self)
    }

    fn powi(&self, k: u32) -> Self {
        Interval::powi(self, k)
    }

    fn abs(&self) -> Result<Self> {
        Ok(Interval::abs(self))
    }

    fn range(&self) -> Interval {
        *self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_domain_errors() {
        assert!(Scalar::div(&1.0, &0.0).is_err());
        assert!(Scalar::sqrt(&-1.0).is_err());
        assert_eq!(Scalar::sqrt(&-1e-14).unwrap(), 0.0);
    }

    #[test]
    fn real_powi_matches_repeated_product() {
        assert_eq!(Scalar::powi(&3.0, 0), 1.0);
        assert_eq!(Scalar::powi(&-2.0, 3), -8.0);
    }
}
