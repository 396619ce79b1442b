use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Test functions for the estimators.
///
/// All are bounded except `Linear`, which is only meant as an oracle with a
/// known gradient and is refused by the inequality checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestFunction {
    Constant { c: f64 },
    /// `tanh(⟨a, x⟩) + offset`
    Tanh { a: Vec<f64>, offset: f64 },
    /// `tanh²(⟨a, x⟩) + offset`
    TanhSquared { a: Vec<f64>, offset: f64 },
    /// `exp(-|x - m|²)`
    Bump { m: Vec<f64> },
    /// `(1 - tanh((|x - center| - radius) / width)) / 2`
    SmoothIndicator { center: Vec<f64>, radius: f64, width: f64 },
    /// `⟨a, x⟩`
    Linear { a: Vec<f64> },
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

impl TestFunction {
    pub fn tanh(dim: usize) -> TestFunction {
        TestFunction::Tanh { a: vec![1.0; dim], offset: 0.0 }
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        let (len, finite) = match self {
            TestFunction::Constant { c } => (dim, c.is_finite()),
            TestFunction::Tanh { a, offset } | TestFunction::TanhSquared { a, offset } => {
                (a.len(), offset.is_finite() && a.iter().all(|v| v.is_finite()))
            }
            TestFunction::Bump { m } => (m.len(), m.iter().all(|v| v.is_finite())),
            TestFunction::SmoothIndicator { center, radius, width } => (
                center.len(),
                *width > 0.0 && radius.is_finite() && center.iter().all(|v| v.is_finite()),
            ),
            TestFunction::Linear { a } => (a.len(), a.iter().all(|v| v.is_finite())),
        };
        if len != dim {
            return Err(Error::domain(format!("test function has dimension {len}, model {dim}")));
        }
        if !finite {
            return Err(Error::domain("test function parameters must be finite (width > 0)"));
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            TestFunction::Constant { c } => *c,
            TestFunction::Tanh { a, offset } => dot(a, x).tanh() + offset,
            TestFunction::TanhSquared { a, offset } => dot(a, x).tanh().powi(2) + offset,
            TestFunction::Bump { m } => (-x.iter().zip(m).map(|(u, v)| (u - v).powi(2)).sum::<f64>()).exp(),
            TestFunction::SmoothIndicator { center, radius, width } => {
                let r = x.iter().zip(center).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
                0.5 * (1.0 - ((r - radius) / width).tanh())
            }
            TestFunction::Linear { a } => dot(a, x),
        }
    }

    /// `f(x + shift)`.
    pub fn eval_shifted(&self, x: &[f64], shift: &[f64]) -> f64 {
        let z: Vec<f64> = x.iter().zip(shift).map(|(a, b)| a + b).collect();
        self.eval(&z)
    }

    /// Directional derivative `∇_y f(x)`.
    pub fn directional(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            TestFunction::Constant { .. } => 0.0,
            TestFunction::Tanh { a, .. } => {
                let c = dot(a, x).cosh();
                dot(a, y) / (c * c)
            }
            TestFunction::TanhSquared { a, .. } => {
                let u = dot(a, x);
                let c = u.cosh();
                2.0 * u.tanh() * dot(a, y) / (c * c)
            }
            TestFunction::Bump { m } => {
                let diff: Vec<f64> = x.iter().zip(m).map(|(u, v)| u - v).collect();
                -2.0 * dot(&diff, y) * self.eval(x)
            }
            TestFunction::SmoothIndicator { center, radius, width } => {
                let diff: Vec<f64> = x.iter().zip(center).map(|(u, v)| u - v).collect();
                let r = dot(&diff, &diff).sqrt();
                if r == 0.0 {
                    return 0.0;
                }
                let c = ((r - radius) / width).cosh();
                -0.5 / (width * c * c) * dot(&diff, y) / r
            }
            TestFunction::Linear { a } => dot(a, y),
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self, TestFunction::Linear { .. })
    }

    /// Bounded with a strictly positive value everywhere, as the Harnack
    /// inequalities require.
    pub fn is_positive_bounded(&self) -> bool {
        match self {
            TestFunction::Constant { c } => *c > 0.0,
            TestFunction::Tanh { offset, .. } => *offset > 1.0,
            TestFunction::TanhSquared { offset, .. } => *offset > 0.0,
            TestFunction::Bump { .. } | TestFunction::SmoothIndicator { .. } => true,
            TestFunction::Linear { .. } => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradients_match_finite_differences() {
        let fs = [
            TestFunction::Tanh { a: vec![0.5, -1.0], offset: 2.0 },
            TestFunction::TanhSquared { a: vec![1.0, 0.3], offset: 1.0 },
            TestFunction::Bump { m: vec![0.2, 0.1] },
            TestFunction::SmoothIndicator { center: vec![0.0, 0.5], radius: 1.0, width: 0.3 },
            TestFunction::Linear { a: vec![2.0, 3.0] },
        ];
        let x = [0.4, -0.7];
        let y = [0.3, 0.9];
        let h = 1e-5;
        for f in &fs {
            let p: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + h * b).collect();
            let m: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - h * b).collect();
            let fd = (f.eval(&p) - f.eval(&m)) / (2.0 * h);
            assert!((fd - f.directional(&x, &y)).abs() < 1e-8, "{f:?}");
        }
    }
}
