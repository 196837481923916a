//! Piecewise systems: guarded regions, each with its own vector field.
//!
//! Region membership comes in two flavours. The *closure* rule relaxes
//! strict guards on exact boundary hits, so a point on a switching surface
//! belongs to every adjacent region. The *exact* rule applies the guards
//! literally and is what the dynamics themselves follow.

use alloc::string::ToString;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::expr::{parse_expr, Expr, VectorField};
use crate::geometry::HyperRect;
use crate::interval::{Interval, IntervalVector};
use crate::linalg::{cholesky, Mat};
use crate::scalar::Scalar;

/// Default cap on the number of branch sequences per sample.
pub const MAX_BRANCHES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Lt,
    Ge,
    Gt,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Lt => "<",
            Relation::Ge => ">=",
            Relation::Gt => ">",
        }
    }
}

/// Constraint `expr rel 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Guard {
    pub expr: Expr,
    pub rel: Relation,
}

impl Guard {
    /// Parse `lhs rel rhs` into `lhs - rhs rel 0`.
    pub fn parse(text: &str, dim: usize) -> Result<Guard> {
        let ops = [(">=", Relation::Ge), ("<=", Relation::Le), (">", Relation::Gt), ("<", Relation::Lt)];
        for (sym, rel) in ops {
            if let Some(at) = text.find(sym) {
                let lhs = parse_expr(&text[..at], dim)?;
                let rhs = parse_expr(&text[at + sym.len()..], dim)?;
                let expr = match rhs {
                    Expr::Const(c) if c == 0.0 => lhs,
                    rhs => Expr::Sub(alloc::boxed::Box::new(lhs), alloc::boxed::Box::new(rhs)),
                };
                return Ok(Guard { expr, rel });
            }
        }
        Err(Error::Syntax {
            column: 1,
            message: "guard needs one of <=, <, >=, >".to_string(),
        })
    }

    fn holds_closed(&self, v: f64) -> bool {
        match self.rel {
            Relation::Le | Relation::Lt => v <= 0.0,
            Relation::Ge | Relation::Gt => v >= 0.0,
        }
    }

    fn holds_exact(&self, v: f64) -> bool {
        match self.rel {
            Relation::Le => v <= 0.0,
            Relation::Lt => v < 0.0,
            Relation::Ge => v >= 0.0,
            Relation::Gt => v > 0.0,
        }
    }

    // Some point of the enclosure satisfies the closed guard.
    fn may_hold(&self, v: Interval) -> bool {
        match self.rel {
            Relation::Le | Relation::Lt => v.lo() <= 0.0,
            Relation::Ge | Relation::Gt => v.hi() >= 0.0,
        }
    }

    fn may_hold_exact(&self, v: Interval) -> bool {
        match self.rel {
            Relation::Le => v.lo() <= 0.0,
            Relation::Lt => v.lo() < 0.0,
            Relation::Ge => v.hi() >= 0.0,
            Relation::Gt => v.hi() > 0.0,
        }
    }

    // Every point of the enclosure satisfies the guard literally.
    fn surely_holds(&self, v: Interval) -> bool {
        match self.rel {
            Relation::Le => v.hi() <= 0.0,
            Relation::Lt => v.hi() < 0.0,
            Relation::Ge => v.lo() >= 0.0,
            Relation::Gt => v.lo() > 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub guards: Vec<Guard>,
    pub field: VectorField,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Discrete,
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseSystem {
    pub n: usize,
    pub mode: Mode,
    pub regions: Vec<Region>,
    /// Optional box the dynamics are valid in.
    pub domain: Option<HyperRect>,
}

/// Region indices applied at successive steps.
pub type BranchSequence = Vec<usize>;

impl PiecewiseSystem {
    pub fn new(n: usize, mode: Mode, regions: Vec<Region>) -> Result<Self> {
        if regions.is_empty() {
            return Err(Error::InvalidArgument("a system needs at least one region".into()));
        }
        for r in &regions {
            if r.field.dim_in != n || r.field.dim_out() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: if r.field.dim_in != n { r.field.dim_in } else { r.field.dim_out() },
                });
            }
            if r.field.contains_abs() {
                return Err(Error::InvalidArgument("abs is only allowed in guards".into()));
            }
            if r.guards.iter().any(|g| g.expr.arity() > n) {
                return Err(Error::DimensionMismatch { expected: n, got: n + 1 });
            }
        }
        Ok(PiecewiseSystem {
            n,
            mode,
            regions,
            domain: None,
        })
    }

    /// Single-region system.
    pub fn smooth(mode: Mode, field: VectorField) -> Result<Self> {
        let n = field.dim_in;
        PiecewiseSystem::new(n, mode, alloc::vec![Region { guards: Vec::new(), field }])
    }

    pub fn with_domain(mut self, domain: Option<HyperRect>) -> Self {
        self.domain = domain;
        self
    }

    pub(crate) fn require(&self, mode: Mode) -> Result<()> {
        if self.mode != mode {
            return Err(Error::WrongMode(match mode {
                Mode::Discrete => "discrete-time",
                Mode::Continuous => "continuous-time",
            }));
        }
        Ok(())
    }

    fn guard_values(&self, r: &Region, x: &[f64]) -> Option<Vec<f64>> {
        r.guards.iter().map(|g| g.expr.eval(x).ok()).collect()
    }

    /// Regions active at `x` under the closure rule.
    pub fn region_of(&self, x: &[f64]) -> Result<Vec<usize>> {
        let set: Vec<usize> = (0..self.regions.len())
            .filter(|&i| {
                let r = &self.regions[i];
                self.guard_values(r, x)
                    .is_some_and(|v| r.guards.iter().zip(&v).all(|(g, &v)| g.holds_closed(v)))
            })
            .collect();
        if set.is_empty() {
            return Err(Error::CoverageViolation);
        }
        Ok(set)
    }

    /// Regions whose guards hold literally at `x` (possibly none).
    pub fn region_of_exact(&self, x: &[f64]) -> Vec<usize> {
        (0..self.regions.len())
            .filter(|&i| {
                let r = &self.regions[i];
                self.guard_values(r, x)
                    .is_some_and(|v| r.guards.iter().zip(&v).all(|(g, &v)| g.holds_exact(v)))
            })
            .collect()
    }

    /// Regions that may act on some point of the box (over-approximation).
    ///
    /// Closure semantics in general. When one region's guards hold
    /// literally on the whole box, every point has an exact region and the
    /// closure fallback never applies, so only regions whose guards may hold
    /// literally are returned.
    pub fn regions_intersecting(&self, x: &IntervalVector) -> Vec<usize> {
        let vals: Vec<Option<Vec<Interval>>> = self
            .regions
            .iter()
            .map(|r| r.guards.iter().map(|g| g.expr.eval(&x.0).ok()).collect())
            .collect();
        let test = |i: usize, f: &dyn Fn(&Guard, Interval) -> bool, missing: bool| match &vals[i] {
            Some(v) => self.regions[i].guards.iter().zip(v).all(|(g, &v)| f(g, v)),
            None => missing,
        };
        let covered = (0..self.regions.len()).any(|i| test(i, &|g, v| g.surely_holds(v), false));
        (0..self.regions.len())
            .filter(|&i| {
                if covered {
                    test(i, &|g, v| g.may_hold_exact(v), true)
                } else {
                    test(i, &|g, v| g.may_hold(v), true)
                }
            })
            .collect()
    }

    /// Region that the dynamics use at `x`.
    pub fn active_region(&self, x: &[f64]) -> Result<usize> {
        let exact = self.region_of_exact(x);
        match exact.len() {
            1 => Ok(exact[0]),
            0 => {
                let closed = self.region_of(x)?;
                if closed.len() == 1 {
                    Ok(closed[0])
                } else {
                    Err(Error::Tie)
                }
            }
            _ => Err(Error::Tie),
        }
    }

    pub fn step(&self, x: &[f64], forced: Option<usize>) -> Result<Vec<f64>> {
        self.require(Mode::Discrete)?;
        let r = match forced {
            Some(i) => {
                if !self.region_of(x)?.contains(&i) {
                    return Err(Error::ForcedRegionInactive(i));
                }
                i
            }
            None => self.active_region(x)?,
        };
        self.regions[r].field.eval(x)
    }

    /// `M` steps from `x`; the first `forced.len()` steps use the given regions.
    pub fn iterate(&self, x: &[f64], m: usize, forced: &[usize]) -> Result<(Vec<f64>, BranchSequence)> {
        self.require(Mode::Discrete)?;
        let mut state = x.to_vec();
        let mut branch = Vec::with_capacity(m);
        for k in 0..m {
            let r = match forced.get(k) {
                Some(&i) => {
                    if !self.region_of(&state)?.contains(&i) {
                        return Err(Error::ForcedRegionInactive(i));
                    }
                    i
                }
                None => self.active_region(&state)?,
            };
            state = self.regions[r].field.eval(&state)?;
            branch.push(r);
        }
        Ok((state, branch))
    }

    /// Apply the fields of `branch` in order without checking guards.
    pub fn trajectory<S: Scalar>(&self, x: &[S], branch: &[usize]) -> Result<Vec<Vec<S>>> {
        let mut states = Vec::with_capacity(branch.len() + 1);
        states.push(x.to_vec());
        for &r in branch {
            let next = self.regions[r].field.eval(states.last().unwrap())?;
            states.push(next);
        }
        Ok(states)
    }

    /// Branch sequences of length `m` starting at the point `x_s`.
    ///
    /// The first step forks over every region in the closure of `x_s`; later
    /// steps follow the literal guards and fork only where those are still
    /// ambiguous.
    pub fn enumerate_branches(&self, x_s: &[f64], m: usize) -> Result<Vec<BranchSequence>> {
        self.enumerate_branches_capped(x_s, m, MAX_BRANCHES)
    }

    pub fn enumerate_branches_capped(&self, x_s: &[f64], m: usize, cap: usize) -> Result<Vec<BranchSequence>> {
        let mut out = Vec::new();
        let mut stack: Vec<(Vec<f64>, BranchSequence)> = alloc::vec![(x_s.to_vec(), Vec::new())];
        while let Some((x, seq)) = stack.pop() {
            if seq.len() == m {
                out.push(seq);
                if out.len() > cap {
                    return Err(Error::BranchOverflow(cap));
                }
                continue;
            }
            let choices = if seq.is_empty() {
                self.region_of(&x)?
            } else {
                let exact = self.region_of_exact(&x);
                if exact.is_empty() {
                    self.region_of(&x)?
                } else {
                    exact
                }
            };
            for &r in choices.iter().rev() {
                let next = self.regions[r].field.eval(&x)?;
                let mut s = seq.clone();
                s.push(r);
                stack.push((next, s));
            }
            if stack.len() > cap * m.max(1) + 1 {
                return Err(Error::BranchOverflow(cap));
            }
        }
        out.sort();
        out.dedup();
        Ok(out)
    }

    /// Branches of length `m` that some point of the box `x0` may follow,
    /// with the enclosure of every intermediate state.
    pub fn enumerate_box_branches<S: Scalar>(
        &self,
        x0: &[S],
        m: usize,
        cap: usize,
    ) -> Result<Vec<(BranchSequence, Vec<Vec<S>>)>> {
        let mut out = Vec::new();
        let mut stack: Vec<(BranchSequence, Vec<Vec<S>>)> = alloc::vec![(Vec::new(), alloc::vec![x0.to_vec()])];
        while let Some((seq, states)) = stack.pop() {
            if seq.len() == m {
                out.push((seq, states));
                if out.len() > cap {
                    return Err(Error::BranchOverflow(cap));
                }
                continue;
            }
            let x = states.last().unwrap();
            let enclosure = IntervalVector(x.iter().map(Scalar::range).collect());
            let choices = self.regions_intersecting(&enclosure);
            if choices.is_empty() {
                return Err(Error::CoverageViolation);
            }
            for &r in choices.iter().rev() {
                let next = self.regions[r].field.eval(x)?;
                let mut s = seq.clone();
                s.push(r);
                let mut st = states.clone();
                st.push(next);
                stack.push((s, st));
            }
            if stack.len() + out.len() > cap * (m + 1) {
                return Err(Error::BranchOverflow(cap));
            }
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(out)
    }

    /// `V(G^M(x)) - rho * V(x)` along `branch`.
    pub fn f_dt(&self, v: &CandidateV, m: usize, x: &[f64], branch: &[usize]) -> Result<f64> {
        self.require(Mode::Discrete)?;
        let (y, _) = self.iterate(x, m, branch)?;
        Ok(v.eval(&y) - v.rho * v.eval(x))
    }

    /// Largest pairwise gap of `F` over the branches at `x_s`.
    pub fn epsilon_jump(&self, v: &CandidateV, m: usize, x_s: &[f64]) -> Result<f64> {
        self.require(Mode::Discrete)?;
        let branches = self.enumerate_branches(x_s, m)?;
        let mut vals = Vec::with_capacity(branches.len());
        for b in &branches {
            let states = self.trajectory(x_s, b)?;
            vals.push(v.eval(states.last().unwrap()) - v.rho * v.eval(x_s));
        }
        let mut eps: f64 = 0.0;
        for (i, a) in vals.iter().enumerate() {
            for b in &vals[i + 1..] {
                eps = eps.max((a - b).abs());
            }
        }
        Ok(eps)
    }

    /// Explicit Euler map `x + h * G_c(x)` with the same guards.
    pub fn euler_discretize(&self, h: f64) -> Result<PiecewiseSystem> {
        self.require(Mode::Continuous)?;
        if !(h > 0.0) {
            return Err(Error::InvalidArgument("step size must be positive".into()));
        }
        let regions = self
            .regions
            .iter()
            .map(|r| Region {
                guards: r.guards.clone(),
                field: r.field.euler(h),
            })
            .collect();
        Ok(PiecewiseSystem {
            n: self.n,
            mode: Mode::Discrete,
            regions,
            domain: self.domain.clone(),
        })
    }

    /// Enclosure of the one-step image of a box under one region's field.
    pub fn reach_box(&self, b: &HyperRect, region: usize) -> Result<IntervalVector> {
        self.require(Mode::Discrete)?;
        let r = self
            .regions
            .get(region)
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("no region {}", region)))?;
        Ok(IntervalVector(r.field.eval(&b.to_intervals().0)?))
    }

    /// Largest residual `|G_i(0)|` (discrete) or `|G_c,i(0)|` over regions active at 0.
    pub fn equilibrium_residual(&self) -> Result<f64> {
        let zero = alloc::vec![0.0; self.n];
        let mut worst: f64 = 0.0;
        for r in self.region_of(&zero)? {
            for v in self.regions[r].field.eval(&zero)? {
                worst = worst.max(v.abs());
            }
        }
        Ok(worst)
    }

    /// Newton iterations from `x0` on `G_c(x) = 0` (continuous) or
    /// `G(x) = x` (discrete), using the region active at each iterate.
    pub fn refine_equilibrium(&self, x0: &[f64], iters: usize) -> Result<Vec<f64>> {
        let n = self.n;
        let mut x = x0.to_vec();
        for _ in 0..iters {
            let field = &self.regions[self.active_region(&x)?].field;
            let mut r = field.eval(&x)?;
            let mut jac = field.jacobian(&x)?;
            if self.mode == Mode::Discrete {
                for i in 0..n {
                    r[i] -= x[i];
                    jac[i * n + i] -= 1.0;
                }
            }
            let j = crate::linalg::Mat { rows: n, cols: n, data: jac };
            let step = crate::linalg::solve(&j, &r)?;
            for (xi, s) in x.iter_mut().zip(&step) {
                *xi -= s;
            }
            if step.iter().zip(&x).all(|(s, xi)| libm::fabs(*s) <= 1e-15 * (1.0 + libm::fabs(*xi))) {
                break;
            }
        }
        Ok(x)
    }

    /// Express the system in coordinates centered at `x0`.
    pub fn translated(&self, x0: &[f64]) -> PiecewiseSystem {
        let discrete = self.mode == Mode::Discrete;
        let regions = self
            .regions
            .iter()
            .map(|r| Region {
                guards: r
                    .guards
                    .iter()
                    .map(|g| Guard {
                        expr: g.expr.shift_vars(x0),
                        rel: g.rel,
                    })
                    .collect(),
                field: r.field.translate(x0, discrete),
            })
            .collect();
        let domain = self.domain.as_ref().map(|d| HyperRect {
            center: d.center.iter().zip(x0).map(|(c, o)| c - o).collect(),
            delta: d.delta.clone(),
        });
        PiecewiseSystem {
            n: self.n,
            mode: self.mode,
            regions,
            domain,
        }
    }
}

/// Quadratic candidate `V(x) = xᵀ P x` with contraction `ρ(s) = rho * s`.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateV {
    pub p: Mat,
    pub rho: f64,
}

impl CandidateV {
    pub fn new(p: Mat, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::InvalidArgument("rho must lie in (0, 1)".into()));
        }
        cholesky(&p)?;
        Ok(CandidateV { p, rho })
    }

    pub fn dim(&self) -> usize {
        self.p.rows
    }

    pub fn eval<S: Scalar>(&self, x: &[S]) -> S {
        let n = self.p.rows;
        let mut acc: Option<S> = None;
        let mut push = |t: S| {
            acc = Some(match acc.take() {
                Some(a) => a.add(&t),
                None => t,
            })
        };
        for i in 0..n {
            let d = self.p.get(i, i);
            if d != 0.0 {
                push(x[i].powi(2).scale(d));
            }
            for j in i + 1..n {
                let o = self.p.get(i, j) + self.p.get(j, i);
                if o != 0.0 {
                    push(x[i].mul(&x[j]).scale(o));
                }
            }
        }
        acc.unwrap_or_else(|| S::cst(0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    pub(crate) fn switched() -> PiecewiseSystem {
        let r1 = Region {
            guards: vec![Guard::parse("x2 >= 0", 2).unwrap()],
            field: VectorField::parse(&["0.5*x1", "-0.8*x2 - x1^2"], 2).unwrap(),
        };
        let r2 = Region {
            guards: vec![Guard::parse("x2 < 0", 2).unwrap()],
            field: VectorField::parse(&["0.5*x1 + x1*x2", "-0.8*x2"], 2).unwrap(),
        };
        PiecewiseSystem::new(2, Mode::Discrete, vec![r1, r2]).unwrap()
    }

    fn v_id(rho: f64) -> CandidateV {
        CandidateV::new(Mat::identity(2), rho).unwrap()
    }

    #[test]
    fn region_membership() {
        let s = switched();
        assert_eq!(s.region_of(&[1.0, 0.5]).unwrap(), [0]);
        assert_eq!(s.region_of(&[1.0, 0.0]).unwrap(), [0, 1]);
        assert_eq!(s.region_of(&[1.0, -0.5]).unwrap(), [1]);
    }

    #[test]
    fn interval_region_membership() {
        let s = switched();
        let above = HyperRect::symmetric(vec![0.0, 0.5], &[0.1, 0.1]).unwrap();
        assert_eq!(s.regions_intersecting(&above.to_intervals()), [0]);
        let across = HyperRect::symmetric(vec![0.0, 0.0], &[0.1, 0.1]).unwrap();
        assert_eq!(s.regions_intersecting(&across.to_intervals()), [0, 1]);
        let touching = HyperRect::from_bounds(&[0.0, -0.2], &[0.1, 0.0]).unwrap();
        assert_eq!(s.regions_intersecting(&touching.to_intervals()), [0, 1]);
        // The face x2 = 0 belongs to the first region only.
        let resting = HyperRect::from_bounds(&[0.0, 0.0], &[0.1, 0.2]).unwrap();
        assert_eq!(s.regions_intersecting(&resting.to_intervals()), [0]);
    }

    #[test]
    fn steps_and_iterates() {
        let s = switched();
        assert_eq!(s.step(&[1.0, 0.0], Some(0)).unwrap(), [0.5, -1.0]);
        assert_eq!(s.step(&[1.0, 0.0], Some(1)).unwrap(), [0.5, 0.0]);
        assert_eq!(s.step(&[0.0, 0.0], Some(1)).unwrap(), [0.0, 0.0]);
        assert_eq!(s.step(&[1.0, 0.0], None).unwrap(), [0.5, -1.0]);
        assert_eq!(s.step(&[1.0, 0.5], Some(1)), Err(Error::ForcedRegionInactive(1)));
        let (y, b) = s.iterate(&[1.0, 0.0], 3, &[0]).unwrap();
        assert!((y[0] + 0.125).abs() < 1e-15 && (y[1] + 0.7025).abs() < 1e-15);
        assert_eq!(b, [0, 1, 0]);
        let (y, b) = s.iterate(&[1.0, 0.0], 3, &[1]).unwrap();
        assert!((y[0] - 0.0625).abs() < 1e-15 && (y[1] - 0.2).abs() < 1e-15);
        assert_eq!(b, [1, 0, 1]);
        assert_eq!(s.iterate(&[0.0, 0.0], 3, &[0]).unwrap().0, [0.0, 0.0]);
    }

    #[test]
    fn overlapping_guards_tie() {
        let f = VectorField::parse(&["x1"], 1).unwrap();
        let r1 = Region { guards: vec![Guard::parse("x1 <= 0", 1).unwrap()], field: f.clone() };
        let r2 = Region { guards: vec![Guard::parse("x1 >= 0", 1).unwrap()], field: f };
        let s = PiecewiseSystem::new(1, Mode::Discrete, vec![r1, r2]).unwrap();
        assert_eq!(s.step(&[0.0], None), Err(Error::Tie));
        assert_eq!(s.iterate(&[0.0], 2, &[]), Err(Error::Tie));
        assert_eq!(s.step(&[0.0], Some(1)).unwrap(), [0.0]);
    }

    #[test]
    fn branch_enumeration() {
        let s = switched();
        assert_eq!(s.enumerate_branches(&[1.0, 0.0], 3).unwrap().len(), 2);
        assert_eq!(s.enumerate_branches(&[1.0, 0.7], 3).unwrap().len(), 1);
        assert_eq!(s.enumerate_branches(&[0.0, 0.0], 3).unwrap().len(), 2);
    }

    #[test]
    fn example_f_values_and_jump() {
        let s = switched();
        let v = v_id(0.5);
        let f1 = s.f_dt(&v, 3, &[1.0, 0.0], &[0]).unwrap();
        let f2 = s.f_dt(&v, 3, &[1.0, 0.0], &[1]).unwrap();
        assert!((f1 - (0.5091 - 0.5)).abs() < 5e-5);
        assert!((f2 - (0.0439 - 0.5)).abs() < 5e-5);
        let eps = s.epsilon_jump(&v, 3, &[1.0, 0.0]).unwrap();
        assert!((eps - 0.4652).abs() < 5e-5);
        assert_eq!(s.epsilon_jump(&v, 3, &[0.3, 0.9]).unwrap(), 0.0);
        assert_eq!(s.epsilon_jump(&v, 3, &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(s.f_dt(&v, 3, &[0.0, 0.0], &[0]).unwrap(), 0.0);
    }

    #[test]
    fn euler_fixes_origin() {
        let ct = PiecewiseSystem::smooth(
            Mode::Continuous,
            VectorField::parse(&["-x1 + x2^2", "-x2"], 2).unwrap(),
        )
        .unwrap();
        let dt = ct.euler_discretize(0.1).unwrap();
        assert_eq!(dt.step(&[0.0, 0.0], None).unwrap(), [0.0, 0.0]);
        assert!(ct.euler_discretize(0.0).is_err());
        assert!(dt.euler_discretize(0.1).is_err());
    }

    #[test]
    fn reach_of_linear_map() {
        let s = PiecewiseSystem::smooth(Mode::Discrete, VectorField::parse(&["0.5*x1"], 1).unwrap()).unwrap();
        let b = HyperRect::symmetric(vec![0.0], &[1.0]).unwrap();
        let r = s.reach_box(&b, 0).unwrap();
        assert!(r[0].lo() >= -0.5 - 1e-12 && r[0].hi() <= 0.5 + 1e-12);
        let z = s.reach_box(&HyperRect::point(vec![0.0]), 0).unwrap();
        assert_eq!(z[0], Interval::ZERO);
    }

    #[test]
    fn abs_rejected_in_dynamics() {
        let f = VectorField::parse(&["abs(x1)"], 1).unwrap();
        assert!(PiecewiseSystem::smooth(Mode::Discrete, f).is_err());
    }
}
