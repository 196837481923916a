//! Local quadratic Lyapunov function around the origin.
//!
//! The linearization gives `P_L` through a Lyapunov equation; the nonlinear
//! decrease on a box `N1` is then certified with the same sampling engine,
//! and the residual hole at the origin is closed with a curvature argument
//! or, failing that, a one-step reachability check.

use alloc::vec::Vec;

use crate::bounds::BoundMethod;
use crate::error::{Error, Result};
use crate::geometry::HyperRect;
use crate::interval::{Interval, IntervalVector};
use crate::linalg::{cholesky, inverse, solve, Mat};
use crate::system::{CandidateV, Mode, PiecewiseSystem, MAX_BRANCHES};
use crate::verifier::{construct_a, reach_fallback, Construction, Executor, Objective};

/// Residual allowed when checking the origin is an equilibrium.
pub const EQUILIBRIUM_TOL: f64 = 1e-9;

/// Jacobians at the origin of every region adjacent to it.
///
/// For discrete systems these are the Jacobians of `G_i`; for continuous
/// ones, of `G_c,i`.
pub fn linearize(sys: &PiecewiseSystem) -> Result<Vec<Mat>> {
    let residual = sys.equilibrium_residual()?;
    if residual > EQUILIBRIUM_TOL {
        return Err(Error::NotEquilibrium(residual));
    }
    let zero = alloc::vec![0.0; sys.n];
    let mut out: Vec<Mat> = Vec::new();
    for r in sys.region_of(&zero)? {
        let jac = sys.regions[r].field.jacobian(&zero)?;
        let m = Mat {
            rows: sys.n,
            cols: sys.n,
            data: jac,
        };
        if !out.contains(&m) {
            out.push(m);
        }
    }
    Ok(out)
}

fn check_square(a: &Mat, q: &Mat) -> Result<()> {
    if !a.is_square() || !q.is_square() || a.rows != q.rows {
        return Err(Error::DimensionMismatch {
            expected: a.rows,
            got: q.rows,
        });
    }
    if cholesky(q).is_err() {
        return Err(Error::InvalidArgument("Q must be symmetric positive definite".into()));
    }
    Ok(())
}

fn lyap_from_kron(k: &Mat, q: &Mat, n: usize) -> Result<Mat> {
    let rhs: Vec<f64> = q.vec_cols().iter().map(|v| -v).collect();
    let p = solve(k, &rhs).map_err(|_| Error::NotLocallyStable)?;
    Ok(Mat::from_vec_cols(n, n, &p).symmetrized())
}

/// `P` with `AᵀPA − P = −Q`.
pub fn solve_dlyap(a: &Mat, q: &Mat) -> Result<Mat> {
    check_square(a, q)?;
    let n = a.rows;
    let at = a.transpose();
    let k = at.kron(&at).sub(&Mat::identity(n * n));
    let p = lyap_from_kron(&k, q, n)?;
    // With Q > 0 the solution is positive definite exactly when A is Schur.
    if cholesky(&p).is_err() {
        return Err(Error::NotLocallyStable);
    }
    Ok(p)
}

/// `P` with `AᵀP + PA = −Q`.
pub fn solve_clyap(a: &Mat, q: &Mat) -> Result<Mat> {
    check_square(a, q)?;
    let n = a.rows;
    let at = a.transpose();
    let id = Mat::identity(n);
    let k = id.kron(&at).add(&at.kron(&id));
    let p = lyap_from_kron(&k, q, n)?;
    if cholesky(&p).is_err() {
        return Err(Error::NotLocallyStable);
    }
    Ok(p)
}

/// `‖AᵀPA − P + Q‖_max`.
pub fn dlyap_residual(a: &Mat, p: &Mat, q: &Mat) -> f64 {
    let at = a.transpose();
    let apa = at.matmul(p).and_then(|m| m.matmul(a)).expect("square matrices of equal size");
    apa.sub(p).add(q).max_abs()
}

/// `AᵀPA − P` is negative definite.
pub fn decreases(a: &Mat, p: &Mat) -> bool {
    let at = a.transpose();
    match at.matmul(p).and_then(|m| m.matmul(a)) {
        Ok(apa) => cholesky(&p.sub(&apa).symmetrized()).is_ok(),
        Err(_) => false,
    }
}

/// A `P` that decreases along every matrix of `a_list`.
///
/// Tries the solution of the summed equation `Σ (A_iᵀPA_i − P) = −k Q`
/// first, then each single-matrix solution.
pub fn common_dlyap(a_list: &[Mat], q: &Mat) -> Result<Mat> {
    let first = a_list
        .first()
        .ok_or_else(|| Error::InvalidArgument("no linearization given".into()))?;
    check_square(first, q)?;
    if a_list.len() == 1 {
        return solve_dlyap(first, q);
    }
    let n = first.rows;
    let mut k = Mat::zeros(n * n, n * n);
    for a in a_list {
        if a.rows != n || !a.is_square() {
            return Err(Error::DimensionMismatch { expected: n, got: a.rows });
        }
        let at = a.transpose();
        k = k.add(&at.kron(&at).sub(&Mat::identity(n * n)));
    }
    let mut candidates = Vec::new();
    if let Ok(p) = lyap_from_kron(&k, &q.scale(a_list.len() as f64), n) {
        candidates.push(p);
    }
    for a in a_list {
        if let Ok(p) = solve_dlyap(a, q) {
            candidates.push(p);
        }
    }
    candidates
        .into_iter()
        .find(|p| cholesky(p).is_ok() && a_list.iter().all(|a| decreases(a, p)))
        .ok_or(Error::NoCommonLyapunov)
}

/// Largest `c` with `{x : xᵀPx <= c}` inside the box `n1`, which must
/// contain the origin in its interior.
pub fn max_levelset_in_box(p: &Mat, n1: &HyperRect) -> Result<f64> {
    if p.rows != n1.dim() {
        return Err(Error::DimensionMismatch { expected: n1.dim(), got: p.rows });
    }
    cholesky(p)?;
    let inv = inverse(p)?;
    let mut c = f64::INFINITY;
    for i in 0..n1.dim() {
        let (lo, hi) = n1.bounds(i);
        if !(lo < 0.0 && hi > 0.0) {
            return Err(Error::InvalidArgument("N1 must contain the origin in its interior".into()));
        }
        let r = hi.min(-lo);
        c = c.min(r * r / inv.get(i, i));
    }
    Ok(c)
}

/// How the boxes left undecided around the origin were handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HoleCheck {
    /// Every box of `N1` was certified.
    NotNeeded,
    /// The Hessian of the decrease function is negative definite on a box
    /// around the origin that holds every undecided box.
    Curvature,
    /// The one-step image of the undecided boxes stays inside `N1`.
    Reach,
    Failed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalCert {
    pub a_lin: Vec<Mat>,
    pub p_l: Mat,
    pub rho: f64,
    pub n1: HyperRect,
    pub level: f64,
    pub verified: bool,
    pub hole: HoleCheck,
    pub construction: Construction,
}

/// Every entry of `h` (row-major `n × n`) lies in a matrix with strictly
/// negative Gershgorin discs.
pub fn gershgorin_negative(h: &[Interval], n: usize) -> bool {
    (0..n).all(|i| {
        let mut row = Interval::point(h[i * n + i].hi());
        for j in 0..n {
            if j != i {
                row = row + Interval::point(h[i * n + j].magnitude_upper());
            }
        }
        row.hi() < 0.0
    })
}

const CURVATURE_PIECES: usize = 4096;

/// Gershgorin test on pieces of `hull`, bisecting the widest axis of any
/// piece that fails. Negative definiteness at every point of the convex
/// hull is all the curvature argument needs.
fn hessian_negative_on(obj: &Objective, hull: &IntervalVector, branch: &[usize]) -> bool {
    let n = hull.len();
    let mut stack = alloc::vec![hull.clone()];
    let mut budget = CURVATURE_PIECES;
    while let Some(piece) = stack.pop() {
        match obj.value_and_hessian(&piece, branch) {
            Ok((_, h)) if gershgorin_negative(&h, n) => continue,
            Ok(_) if budget >= 2 => {
                budget -= 2;
                let k = (0..n)
                    .max_by(|&a, &b| piece[a].width().total_cmp(&piece[b].width()))
                    .expect("nonzero dimension");
                let (lo, hi, m) = (piece[k].lo(), piece[k].hi(), piece[k].mid());
                for (a, b) in [(lo, m), (m, hi)] {
                    let mut half = piece.clone();
                    half[k] = Interval::new(a, b).expect("ordered halves");
                    stack.push(half);
                }
            }
            _ => return false,
        }
    }
    true
}

/// `V_L(G_r(x)) − ρ V_L(x)` vanishes to second order at 0 and is strictly
/// concave on `hull` for every region `r` that may act there.
fn curvature_closes_hole(obj: &Objective, hull: &IntervalVector) -> bool {
    let n = hull.len();
    let zero = alloc::vec![0.0; n];
    if !hull.contains_point(&zero) {
        return false;
    }
    let regions = obj.sys.regions_intersecting(hull);
    !regions.is_empty()
        && regions.into_iter().all(|r| {
            let branch = [r];
            let flat = match obj.value_and_grad(&zero, &branch) {
                Ok((v, g)) => v.magnitude_upper() == 0.0 && g.iter().all(|g| g.magnitude_upper() == 0.0),
                Err(_) => false,
            };
            flat && hessian_negative_on(obj, hull, &branch)
        })
}

fn close_hole(obj: &Objective, construction: &Construction, reach: Option<f64>) -> Result<HoleCheck> {
    let wrong: Vec<HyperRect> = construction.ledger.wrong.iter().map(|r| r.rect()).collect();
    let Some(hull) = wrong.iter().map(HyperRect::to_intervals).reduce(|a, b| a.hull(&b)) else {
        return Ok(HoleCheck::NotNeeded);
    };
    if curvature_closes_hole(obj, &hull) {
        return Ok(HoleCheck::Curvature);
    }
    let Some(delta_min) = reach else {
        return Ok(HoleCheck::Failed);
    };
    let mut target = wrong.clone();
    target.extend(construction.ledger.good.iter().map(|r| r.rect()));
    Ok(if reach_fallback(obj.sys, &wrong, &target, delta_min)? {
        HoleCheck::Reach
    } else {
        HoleCheck::Failed
    })
}

/// Certify that `V_L(x) = xᵀP_Lx` decreases by the factor `rho` along the
/// discrete map on `n1` minus the origin.
pub fn verify_local(
    sys: &PiecewiseSystem,
    p_l: &Mat,
    rho: f64,
    n1: &HyperRect,
    delta_min: f64,
    method: BoundMethod,
    exec: &dyn Executor,
) -> Result<LocalCert> {
    if sys.mode != Mode::Discrete {
        return Err(Error::WrongMode("discrete-time"));
    }
    let v = CandidateV::new(p_l.clone(), rho)?;
    let a_lin = linearize(sys)?;
    let level = max_levelset_in_box(p_l, n1)?;
    let obj = Objective::decrease(sys, &v, 1);
    let construction = construct_a(&obj, n1, delta_min, method, MAX_BRANCHES, &[], exec);
    let hole = close_hole(&obj, &construction, Some(delta_min))?;
    Ok(LocalCert {
        a_lin,
        p_l: p_l.clone(),
        rho,
        n1: n1.clone(),
        level,
        verified: hole != HoleCheck::Failed,
        hole,
        construction,
    })
}

/// Certify `∇V_L(x)·G_c(x) < 0` on `n1` minus the origin for a continuous
/// system. Only the curvature argument can close the hole here; there is
/// no one-step map to chase. The returned `rho` is unused.
pub fn verify_local_ct(
    ct: &PiecewiseSystem,
    p_l: &Mat,
    n1: &HyperRect,
    delta_min: f64,
    method: BoundMethod,
    exec: &dyn Executor,
) -> Result<LocalCert> {
    ct.require(Mode::Continuous)?;
    let rho = 0.999;
    let v = CandidateV::new(p_l.clone(), rho)?;
    let a_lin = linearize(ct)?;
    let level = max_levelset_in_box(p_l, n1)?;
    // The step size does not enter the derivative objective.
    let dt = ct.euler_discretize(1.0)?;
    let obj = Objective::derivative(&dt, ct, &v, 1);
    let construction = construct_a(&obj, n1, delta_min, method, MAX_BRANCHES, &[], exec);
    let hole = close_hole(&obj, &construction, None)?;
    Ok(LocalCert {
        a_lin,
        p_l: p_l.clone(),
        rho,
        n1: n1.clone(),
        level,
        verified: hole != HoleCheck::Failed,
        hole,
        construction,
    })
}
