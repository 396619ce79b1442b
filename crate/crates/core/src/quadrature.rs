//! Gauss rules mapped to `[0, 1]` plus a small adaptive integrator.

use std::num::NonZeroUsize;

use gauss_quad::{FiniteAboveNegOneF64, GaussJacobi, GaussLegendre};

use crate::error::{Error, Result};

/// Nodes and weights on `[0, 1]` for `∫_0^1 w(x) f(x) dx`.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Exponent of `(1 - x)` in the weight function.
    pub right_exp: f64,
    /// Exponent of `x` in the weight function.
    pub left_exp: f64,
}

impl Rule {
    /// Gauss–Legendre rule with `n` points.
    pub fn legendre(n: usize) -> Rule {
        let deg = NonZeroUsize::new(n.max(1)).expect("nonzero");
        let gl = GaussLegendre::new(deg);
        let (nodes, weights) = gl
            .iter()
            .map(|(x, w)| ((x + 1.0) / 2.0, w / 2.0))
            .unzip();
        Rule {
            nodes,
            weights,
            right_exp: 0.0,
            left_exp: 0.0,
        }
    }

    /// Gauss–Jacobi rule for the weight `(1-x)^right_exp * x^left_exp`.
    ///
    /// The point count is rounded up to an even number; the underlying
    /// eigen-solver pins the middle node of odd rules at the centre, which
    /// is only correct for symmetric weights.
    pub fn jacobi(n: usize, right_exp: f64, left_exp: f64) -> Result<Rule> {
        let n = (n.max(2) + 1) & !1;
        let a = FiniteAboveNegOneF64::new(right_exp)
            .ok_or_else(|| Error::domain(format!("jacobi exponent {right_exp} must exceed -1")))?;
        let b = FiniteAboveNegOneF64::new(left_exp)
            .ok_or_else(|| Error::domain(format!("jacobi exponent {left_exp} must exceed -1")))?;
        let gj = GaussJacobi::new(NonZeroUsize::new(n).expect("nonzero"), a, b);
        let scale = 2f64.powf(right_exp + left_exp + 1.0);
        let (nodes, weights) = gj
            .iter()
            .map(|(x, w)| ((x + 1.0) / 2.0, w / scale))
            .unzip();
        Ok(Rule {
            nodes,
            weights,
            right_exp,
            left_exp,
        })
    }

    /// `∫_a^b (b-x)^right_exp (x-a)^left_exp f(x) dx`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let len = b - a;
        let jac = len.powf(1.0 + self.right_exp + self.left_exp);
        let s: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(a + len * x))
            .sum();
        s * jac
    }

    /// Composite version of [`Rule::integrate`] for unweighted rules.
    pub fn integrate_composite(
        &self,
        a: f64,
        b: f64,
        pieces: usize,
        mut f: impl FnMut(f64) -> f64,
    ) -> f64 {
        let h = (b - a) / pieces as f64;
        (0..pieces)
            .map(|k| {
                let lo = a + k as f64 * h;
                self.integrate(lo, lo + h, &mut f)
            })
            .sum()
    }
}

/// Adaptive Gauss–Legendre integration by interval bisection, comparing a
/// 10-point and a 20-point rule on each piece.
pub fn adaptive(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let coarse = Rule::legendre(10);
    let fine = Rule::legendre(20);
    let mut stack = vec![(a, b, 0u32)];
    let mut total = 0.0;
    let mut evaluations = 0usize;
    while let Some((lo, hi, depth)) = stack.pop() {
        let c = coarse.integrate(lo, hi, &f);
        let v = fine.integrate(lo, hi, &f);
        evaluations += 30;
        let local_tol = tol * (hi - lo) / (b - a);
        if (v - c).abs() <= local_tol.max(f64::EPSILON * v.abs()) || depth >= 60 {
            total += v;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
        if evaluations > 5_000_000 {
            return Err(Error::Internal("adaptive quadrature did not converge".into()));
        }
    }
    if !total.is_finite() {
        return Err(Error::Internal("adaptive quadrature produced a non-finite value".into()));
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        let r = Rule::legendre(6);
        let v = r.integrate(0.0, 2.0, |x| x.powi(11));
        assert!((v - 2f64.powi(12) / 12.0).abs() < 1e-10);
    }

    #[test]
    fn jacobi_moments_are_exact() {
        // ∫_0^1 (1-x)^{-0.3} x^{0.4} dx = B(1.4, 0.7)
        let r = Rule::jacobi(8, -0.3, 0.4).unwrap();
        let exact = crate::special::beta(1.4, 0.7);
        assert!((r.integrate(0.0, 1.0, |_| 1.0) - exact).abs() < 1e-13);
        // rescaled interval: ∫_2^5 (5-x)^{-0.3} (x-2)^{0.4} x dx
        let v = r.integrate(2.0, 5.0, |x| x);
        let s = 3f64.powf(1.1);
        let exact = s * (2.0 * exact + 3.0 * crate::special::beta(2.4, 0.7));
        assert!((v - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn odd_request_is_rounded_to_even() {
        let r = Rule::jacobi(5, 0.0, -0.2).unwrap();
        assert_eq!(r.nodes.len(), 6);
        let exact = 1.0 / 0.8;
        assert!((r.integrate(0.0, 1.0, |_| 1.0) - exact).abs() < 1e-13);
        let m1 = 1.0 / 1.8;
        assert!((r.integrate(0.0, 1.0, |x| x) - m1).abs() < 1e-13);
    }

    #[test]
    fn adaptive_handles_endpoint_kink() {
        let v = adaptive(|x: f64| x.abs().sqrt(), -1.0, 1.0, 1e-12).unwrap();
        assert!((v - 4.0 / 3.0).abs() < 1e-10);
    }
}
