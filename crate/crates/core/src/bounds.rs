//! Slack `γ̄ = a·ξ + b + ε` that extends a sign test at a box center to the
//! whole box.
//!
//! Distances are measured in the infinity norm, so gradients are measured
//! in its dual, the 1-norm. On boxes that are not cubes each axis of the
//! 1-norm is weighted by `τ_k/ξ`, which keeps `a·ξ = Σ |g_k| τ_k` a valid
//! bound on the linear term while reducing to the plain 1-norm on cubes.
//! Every quantity is accumulated in interval
//! arithmetic and the upper end is kept, so the returned reals are upper
//! bounds of the exact values.

use crate::interval::{Interval, IntervalVector};
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundMethod {
    /// First-order coefficient at the center plus a Lagrange remainder.
    #[default]
    Split,
    /// Gradient and remainder folded into one interval coefficient.
    Combined,
    /// Whichever of the two gives the smaller slack.
    Best,
}

/// Which deviation from the center value the slack has to cover. The
/// decrease test only needs `F(x) − F(x_s)` from above, level estimates
/// only need `W(x) − W(x_s)` from below.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Side {
    #[default]
    Both,
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCoeffs {
    pub a: f64,
    pub b: f64,
    pub method: BoundMethod,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaBar {
    pub a: f64,
    pub b: f64,
    pub eps: f64,
    pub value: f64,
}

fn sum_up(terms: impl Iterator<Item = Interval>) -> f64 {
    terms.fold(Interval::ZERO, |acc, t| acc + t).hi().max(0.0)
}

/// `‖∇F(x_s)‖₁` for an enclosure of the gradient.
pub fn grad_coeff_a(grad: &[Interval]) -> f64 {
    sum_up(grad.iter().map(|g| Interval::point(g.magnitude_upper())))
}

/// Per-axis weights `τ_k / max τ`, rounded up. All ones on cubes.
pub fn axis_weights(tau: &[f64]) -> Vec<Interval> {
    let xi = tau.iter().fold(0.0f64, |m, &t| m.max(t));
    tau.iter()
        .map(|&t| {
            if xi == 0.0 || t == xi {
                Interval::ONE
            } else {
                match Interval::point(xi).recip() {
                    Ok(r) => Interval::point((Interval::point(t) * r).hi().min(1.0)),
                    Err(_) => Interval::ONE,
                }
            }
        })
        .collect()
}

/// `Σ |g_k| w_k`, the weighted 1-norm of a gradient enclosure.
pub fn weighted_grad_coeff(grad: &[Interval], weights: &[Interval]) -> f64 {
    sum_up(grad.iter().zip(weights).map(|(g, w)| Interval::point(g.magnitude_upper()) * *w))
}

/// `½ τᵀ |H| τ` with `|H|` the entrywise magnitude of a Hessian enclosure
/// (row-major `n × n`) over the box and `τ` its per-axis radius.
pub fn lagrange_b(hess: &[Interval], tau: &[f64]) -> f64 {
    lagrange_b_sided(hess, tau, Side::Both)
}

/// One-sided remainder: a bound on `½ dᵀHd` from above (`Upper`) or on
/// `−½ dᵀHd` (`Lower`) for `|d_k| ≤ τ_k`. A diagonal entry of the right
/// sign contributes nothing; off-diagonal terms keep their magnitude.
pub fn lagrange_b_sided(hess: &[Interval], tau: &[f64], side: Side) -> f64 {
    let n = tau.len();
    let mut acc = Interval::ZERO;
    for i in 0..n {
        for j in 0..n {
            let h = hess[i * n + j];
            let m = match side {
                Side::Upper if i == j => h.hi().max(0.0),
                Side::Lower if i == j => (-h.lo()).max(0.0),
                _ => h.magnitude_upper(),
            };
            if m != 0.0 {
                acc = acc + Interval::point(m) * Interval::point(tau[i]) * Interval::point(tau[j]);
            }
        }
    }
    acc.scale(0.5).hi().max(0.0)
}

/// Bound coefficients from the center gradient and the box Hessian.
pub fn split_coeff(grad: &[Interval], hess: &[Interval], tau: &[f64]) -> BoundCoeffs {
    split_coeff_sided(grad, hess, tau, Side::Both)
}

pub fn split_coeff_sided(grad: &[Interval], hess: &[Interval], tau: &[f64], side: Side) -> BoundCoeffs {
    BoundCoeffs {
        a: weighted_grad_coeff(grad, &axis_weights(tau)),
        b: lagrange_b_sided(hess, tau, side),
        method: BoundMethod::Split,
    }
}

/// `a = ‖∇F(x_s) + ½ Hᵀ(X − x_s)‖₁` (axis-weighted) over the box offsets, with `b = 0`.
pub fn combined_coeff(grad: &[Interval], hess: &[Interval], offsets: &IntervalVector) -> BoundCoeffs {
    let n = grad.len();
    let tau: Vec<f64> = offsets.iter().map(|o| o.magnitude_upper()).collect();
    let w = axis_weights(&tau);
    let a = sum_up((0..n).map(|k| {
        let mut t = Interval::ZERO;
        for j in 0..n {
            t = t + offsets[j] * hess[j * n + k];
        }
        Interval::point((grad[k] + t.scale(0.5)).magnitude_upper()) * w[k]
    }));
    BoundCoeffs {
        a,
        b: 0.0,
        method: BoundMethod::Combined,
    }
}

/// Coefficients for the requested method. `Best` keeps the one with the
/// smaller `a·ξ + b`. Only the split remainder uses `side`.
pub fn coeffs_for(
    method: BoundMethod,
    side: Side,
    grad: &[Interval],
    hess: &[Interval],
    tau: &[f64],
    offsets: &IntervalVector,
    xi: f64,
) -> BoundCoeffs {
    match method {
        BoundMethod::Split => split_coeff_sided(grad, hess, tau, side),
        BoundMethod::Combined => combined_coeff(grad, hess, offsets),
        BoundMethod::Best => {
            let s = split_coeff_sided(grad, hess, tau, side);
            let c = combined_coeff(grad, hess, offsets);
            if slack(&c, xi) < slack(&s, xi) {
                c
            } else {
                s
            }
        }
    }
}

fn slack(c: &BoundCoeffs, xi: f64) -> f64 {
    (Interval::point(c.a) * Interval::point(xi) + Interval::point(c.b)).hi()
}

/// Combine per-branch coefficients: `a` and `b` are maximized separately.
pub fn gamma_bar(coeffs: &[BoundCoeffs], eps: f64, xi: f64) -> GammaBar {
    let a = coeffs.iter().fold(0.0f64, |m, c| m.max(c.a));
    let b = coeffs.iter().fold(0.0f64, |m, c| m.max(c.b));
    let value = (Interval::point(a) * Interval::point(xi) + Interval::point(b) + Interval::point(eps)).hi();
    GammaBar { a, b, eps, value }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    fn pts(v: &[f64]) -> Vec<Interval> {
        v.iter().map(|&x| Interval::point(x)).collect()
    }

    #[test]
    fn gradient_coefficient() {
        assert_eq!(grad_coeff_a(&pts(&[2.0, 2.0])), 4.0);
        assert_eq!(grad_coeff_a(&pts(&[1.0, -3.0, 0.5])), 4.5);
    }

    #[test]
    fn weights_on_rectangles() {
        let w = axis_weights(&[0.5, 0.25]);
        assert_eq!((w[0].hi(), w[1].hi()), (1.0, 0.5));
        let c = split_coeff(&pts(&[2.0, 2.0]), &pts(&[0.0; 4]), &[0.5, 0.25]);
        assert_eq!(c.a * 0.5, 2.0 * 0.5 + 2.0 * 0.25);
        assert!(axis_weights(&[0.3, 0.3]).iter().all(|w| *w == Interval::ONE));
    }

    #[test]
    fn remainder_of_quadratic() {
        let h = pts(&[2.0, 0.0, 0.0, 2.0]);
        assert_eq!(lagrange_b(&h, &[0.5, 0.5]), 0.5);
        assert_eq!(lagrange_b(&pts(&[0.0; 4]), &[0.5, 0.5]), 0.0);
    }

    #[test]
    fn one_sided_remainder() {
        let h = pts(&[-2.0, 0.5, 0.5, 3.0]);
        let tau = [0.5, 0.5];
        assert_eq!(lagrange_b(&h, &tau), 0.75);
        assert_eq!(lagrange_b_sided(&h, &tau, Side::Both), 0.75);
        assert_eq!(lagrange_b_sided(&h, &tau, Side::Upper), 0.5 * (3.0 + 1.0) * 0.25);
        assert_eq!(lagrange_b_sided(&h, &tau, Side::Lower), 0.5 * (2.0 + 1.0) * 0.25);
    }

    #[test]
    fn combined_for_linear_and_constant() {
        let off = IntervalVector(vec![Interval::centered(0.0, 0.3), Interval::centered(0.0, 0.3)]);
        let c = combined_coeff(&pts(&[1.0, -2.0]), &pts(&[0.0; 4]), &off);
        assert_eq!((c.a, c.b), (3.0, 0.0));
        let z = combined_coeff(&pts(&[0.0, 0.0]), &pts(&[0.0; 4]), &off);
        assert_eq!((z.a, z.b), (0.0, 0.0));
    }

    #[test]
    fn gamma_composition() {
        let c = BoundCoeffs { a: 4.0, b: 0.5, method: BoundMethod::Split };
        assert_eq!(gamma_bar(&[c], 0.0, 0.5).value, 2.5);
        let g = gamma_bar(&[c], 0.4652, 0.0);
        assert!(g.value >= 0.5 + 0.4652 && g.value - (0.5 + 0.4652) < 1e-15);
        let two = [
            BoundCoeffs { a: 1.0, b: 0.0, method: BoundMethod::Split },
            BoundCoeffs { a: 0.0, b: 2.0, method: BoundMethod::Split },
        ];
        assert_eq!(gamma_bar(&two, 0.0, 1.0).value, 3.0);
    }
}
