//! Random polynomial systems and the pointwise check of certified boxes.
//! Shared with the acceptance suite of the command-line crate.

#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use sampcert_core::expr::VectorField;
use sampcert_core::geometry::SampleRecord;
use sampcert_core::system::{Guard, Mode, PiecewiseSystem, Region};
use sampcert_core::verifier::Objective;

fn monomial(rng: &mut StdRng, n: usize, degree: u32) -> String {
    let mut factors = Vec::new();
    let mut left = degree;
    while left > 0 {
        let i = rng.gen_range(1..=n);
        let p = rng.gen_range(1..=left);
        factors.push(if p == 1 { format!("x{i}") } else { format!("x{i}^{p}") });
        left -= p;
    }
    factors.join("*")
}

/// A stable linear part plus a few nonlinear terms of degree 2 or 3.
fn component(rng: &mut StdRng, n: usize, row: usize) -> String {
    let mut terms = Vec::new();
    for j in 0..n {
        let a: f64 = if j == row { rng.gen_range(-0.6..0.6) } else { rng.gen_range(-0.15..0.15) };
        terms.push(format!("{a:.4}*x{}", j + 1));
    }
    for _ in 0..rng.gen_range(1..=3) {
        let degree = rng.gen_range(2..=3);
        let c: f64 = rng.gen_range(-0.5..0.5);
        terms.push(format!("{c:.4}*{}", monomial(rng, n, degree)));
    }
    terms.join(" + ").replace("+ -", "- ")
}

fn field(rng: &mut StdRng, n: usize) -> VectorField {
    let comps: Vec<String> = (0..n).map(|r| component(rng, n, r)).collect();
    let refs: Vec<&str> = comps.iter().map(String::as_str).collect();
    VectorField::parse(&refs, n).unwrap()
}

/// Discrete polynomial system of dimension 1 to 3 and degree at most 3.
/// Odd seeds switch on the sign of `x1`.
pub fn random_system(seed: u64) -> PiecewiseSystem {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = 1 + (seed as usize % 3);
    if seed % 2 == 0 {
        PiecewiseSystem::smooth(Mode::Discrete, field(&mut rng, n)).unwrap()
    } else {
        let regions = vec![
            Region { guards: vec![Guard::parse("x1 >= 0", n).unwrap()], field: field(&mut rng, n) },
            Region { guards: vec![Guard::parse("x1 < 0", n).unwrap()], field: field(&mut rng, n) },
        ];
        PiecewiseSystem::new(n, Mode::Discrete, regions).unwrap()
    }
}

pub fn interior_point(rng: &mut StdRng, r: &SampleRecord) -> Vec<f64> {
    let b = r.rect();
    (0..b.dim())
        .map(|k| {
            let (lo, hi) = b.bounds(k);
            if lo < hi { rng.gen_range(lo..hi) } else { lo }
        })
        .collect()
}

#[derive(Debug, Default)]
pub struct Tally {
    pub boxes: usize,
    pub points: usize,
    pub violations: Vec<String>,
}

impl Tally {
    pub fn merge(&mut self, other: Tally) {
        self.boxes += other.boxes;
        self.points += other.points;
        self.violations.extend(other.violations);
    }
}

/// Evaluate the objective at `per_box` random points of every record;
/// anything but a strictly negative value is a violation.
pub fn check_certified(obj: &Objective, records: &[SampleRecord], per_box: usize, seed: u64) -> Tally {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut t = Tally { boxes: records.len(), ..Tally::default() };
    for r in records {
        for _ in 0..per_box {
            let x = interior_point(&mut rng, r);
            t.points += 1;
            match obj.eval_point(&x) {
                Ok(f) if f < 0.0 => {}
                other => t.violations.push(format!("F({x:?}) = {other:?} in box {:?} {:?}", r.spoint, r.del)),
            }
        }
    }
    t
}
