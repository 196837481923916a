//! Sampling-based certification of Lyapunov decrease conditions with
//! rigorous interval error bounds.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

pub mod dual;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod interval;
pub mod levelset;
pub mod linalg;
pub mod localyap;
pub mod bounds;
pub mod scalar;
pub mod system;
pub mod verifier;

pub use error::{Error, Result};
pub use interval::{Interval, IntervalMatrix, IntervalVector};
pub use scalar::Scalar;
