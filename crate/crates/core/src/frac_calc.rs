//! Riemann–Liouville fractional integrals, Marchaud derivatives and the
//! inverse Volterra operator `K_H^{-1}` on uniform grids.
//!
//! Every operator is a precomputed lower-triangular weight matrix. Singular
//! kernels are integrated in closed form against the interpolant of the data.

use crate::error::{Error, Result};
use crate::fbm::{Hurst, Regime, TimeGrid};
use crate::quadrature::adaptive;
use crate::special::{gamma, inverse_scale};

/// Values of a (possibly vector-valued) function at the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    pub grid: TimeGrid,
    pub dim: usize,
    /// Node-major, `(n + 1) * dim` entries.
    pub values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(grid: TimeGrid, dim: usize, values: Vec<f64>) -> Result<SampledFunction> {
        if dim == 0 || values.len() != (grid.n_steps() + 1) * dim {
            return Err(Error::domain(format!(
                "expected {} values for {} nodes, got {}",
                (grid.n_steps() + 1) * dim,
                grid.n_steps() + 1,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("sampled function has non-finite values"));
        }
        Ok(SampledFunction { grid, dim, values })
    }

    /// Scalar function sampled at the nodes.
    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> SampledFunction {
        SampledFunction {
            grid,
            dim: 1,
            values: grid.nodes().into_iter().map(f).collect(),
        }
    }

    pub fn component(&self, k: usize) -> Vec<f64> {
        self.values.iter().skip(k).step_by(self.dim).copied().collect()
    }

    fn from_components(grid: TimeGrid, comps: Vec<Vec<f64>>) -> SampledFunction {
        let dim = comps.len();
        let n = grid.n_steps() + 1;
        let mut values = vec![0.0; n * dim];
        for (k, c) in comps.iter().enumerate() {
            for (i, v) in c.iter().enumerate() {
                values[i * dim + k] = *v;
            }
        }
        SampledFunction { grid, dim, values }
    }
}

/// How the operand is interpolated between nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    /// Nodal values `f_0..f_n`, linear on each cell.
    Linear,
    /// Cell values `f_0..f_{n-1}`, constant on each cell.
    Cellwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Integral,
    Derivative,
}

/// Product-integration weights for `I^α` or `D^α` on a fixed grid.
///
/// Row `i` gives the value at node `t_i`; node 0 is mapped to 0 (for the
/// derivative the value there is undefined).
#[derive(Debug, Clone)]
pub struct FracOperatorPlan {
    alpha: f64,
    grid: TimeGrid,
    kind: OperatorKind,
    interp: Interpolation,
    /// Packed rows for `i = 1..=n`, each of length `row_len(i)`.
    rows: Vec<f64>,
    offsets: Vec<usize>,
}

impl FracOperatorPlan {
    /// `I^α f(t) = Γ(α)^{-1} ∫_0^t (t-s)^{α-1} f(s) ds`, `0 < α ≤ 1`.
    pub fn integral(grid: TimeGrid, alpha: f64, interp: Interpolation) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::domain(format!("integral order {alpha} not in (0, 1]")));
        }
        let dt_a = grid.dt().powf(alpha);
        let plan = Self::build(grid, alpha, OperatorKind::Integral, interp, |i, row| {
            let fi = i as f64;
            match interp {
                Interpolation::Linear => {
                    let c = dt_a / gamma(alpha + 2.0);
                    let p = |m: f64| m.powf(alpha + 1.0);
                    row[0] = c * (p(fi - 1.0) - (fi - alpha - 1.0) * fi.powf(alpha));
                    for (j, w) in row.iter_mut().enumerate().take(i).skip(1) {
                        let m = (i - j) as f64;
                        *w = c * (p(m + 1.0) - 2.0 * p(m) + p(m - 1.0));
                    }
                    row[i] = c;
                }
                Interpolation::Cellwise => {
                    let c = dt_a / gamma(alpha + 1.0);
                    for (j, w) in row.iter_mut().enumerate() {
                        let m = (i - j) as f64;
                        *w = c * (m.powf(alpha) - (m - 1.0).powf(alpha));
                    }
                }
            }
        });
        Ok(plan)
    }

    /// Marchaud derivative
    /// `D^α f(t) = Γ(1-α)^{-1} [f(t) t^{-α} + α ∫_0^t (f(t)-f(s)) (t-s)^{-1-α} ds]`.
    ///
    /// For cellwise data the value at `t_i` is taken from the cell ending
    /// there, so the last cell contributes nothing to the singular integral.
    pub fn derivative(grid: TimeGrid, alpha: f64, interp: Interpolation) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!("derivative order {alpha} not in (0, 1)")));
        }
        let dt = grid.dt();
        let scale = 1.0 / gamma(1.0 - alpha);
        let plan = Self::build(grid, alpha, OperatorKind::Derivative, interp, |i, row| {
            let fi = i as f64;
            let boundary = (fi * dt).powf(-alpha);
            let c = dt.powf(-alpha);
            match interp {
                Interpolation::Linear => {
                    for j in 0..i {
                        let m = (i - j) as f64;
                        let q = (m.powf(1.0 - alpha) - (m - 1.0).powf(1.0 - alpha)) / (1.0 - alpha);
                        if i - j == 1 {
                            row[i] += alpha * c * q;
                            row[i - 1] -= alpha * c * q;
                        } else {
                            let p = ((m - 1.0).powf(-alpha) - m.powf(-alpha)) / alpha;
                            row[i] += alpha * c * p;
                            row[j] += alpha * c * ((m - 1.0) * p - q);
                            row[j + 1] += alpha * c * (q - m * p);
                        }
                    }
                    row[i] += boundary;
                }
                Interpolation::Cellwise => {
                    let mut own = boundary;
                    for (j, w) in row.iter_mut().enumerate().take(i - 1) {
                        let m = (i - j) as f64;
                        let k = c * ((m - 1.0).powf(-alpha) - m.powf(-alpha));
                        own += k;
                        *w -= k;
                    }
                    row[i - 1] += own;
                }
            }
            for w in row.iter_mut() {
                *w *= scale;
            }
        });
        Ok(plan)
    }

    fn build(
        grid: TimeGrid,
        alpha: f64,
        kind: OperatorKind,
        interp: Interpolation,
        fill: impl Fn(usize, &mut [f64]),
    ) -> FracOperatorPlan {
        let n = grid.n_steps();
        let row_len = |i: usize| match interp {
            Interpolation::Linear => i + 1,
            Interpolation::Cellwise => i,
        };
        let mut offsets = Vec::with_capacity(n + 1);
        let mut total = 0;
        offsets.push(0);
        for i in 1..=n {
            offsets.push(total);
            total += row_len(i);
        }
        let mut rows = vec![0.0; total];
        for i in 1..=n {
            let start = offsets[i];
            fill(i, &mut rows[start..start + row_len(i)]);
        }
        FracOperatorPlan {
            alpha,
            grid,
            kind,
            interp,
            rows,
            offsets,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interp
    }

    /// Weights producing the value at node `i >= 1`.
    pub fn row(&self, i: usize) -> &[f64] {
        let len = match self.interp {
            Interpolation::Linear => i + 1,
            Interpolation::Cellwise => i,
        };
        &self.rows[self.offsets[i]..self.offsets[i] + len]
    }

    /// Apply to scalar data: `n + 1` nodal values (linear) or `n` cell
    /// values (cellwise). Returns `n + 1` nodal values with node 0 set to 0.
    pub fn apply(&self, data: &[f64]) -> Vec<f64> {
        let n = self.grid.n_steps();
        let expected = match self.interp {
            Interpolation::Linear => n + 1,
            Interpolation::Cellwise => n,
        };
        assert_eq!(data.len(), expected, "operand length");
        let mut out = vec![0.0; n + 1];
        for (i, o) in out.iter_mut().enumerate().skip(1) {
            let row = self.row(i);
            *o = row.iter().zip(data).map(|(w, f)| w * f).sum();
        }
        out
    }

    fn apply_fn(&self, f: &SampledFunction) -> SampledFunction {
        let comps = (0..f.dim).map(|k| self.apply(&f.component(k))).collect();
        SampledFunction::from_components(f.grid, comps)
    }
}

/// `I^α f` with `f` linear between nodes.
pub fn rl_integral(f: &SampledFunction, alpha: f64) -> Result<SampledFunction> {
    let plan = FracOperatorPlan::integral(f.grid, alpha, Interpolation::Linear)?;
    Ok(plan.apply_fn(f))
}

/// `D^α f` with `f` linear between nodes. The value at node 0 is set to 0.
pub fn rl_derivative(f: &SampledFunction, alpha: f64) -> Result<SampledFunction> {
    let plan = FracOperatorPlan::derivative(f.grid, alpha, Interpolation::Linear)?;
    Ok(plan.apply_fn(f))
}

/// Inverse of the unit-variance Volterra operator, `K_H^{-1} h`, for `h`
/// absolutely continuous with `h(0) = 0`.
///
/// With `φ = s^{1/2-H} h'` the operator reads `s^{H-1/2} D^{H-1/2} φ` for
/// `H > 1/2` and `s^{H-1/2} I^{1/2-H} φ` for `H < 1/2`. `φ` is estimated per
/// cell by the difference quotient of `h` against `t^{H+1/2}`, which is exact
/// when `h` is a multiple of `t^{H+1/2}` (the image of constants), and is then
/// treated as piecewise constant. At `H = 1/2` the result is the difference
/// quotient of the cell ending at each node.
///
/// Values are returned at nodes `1..=n`; node 0 holds 0.
pub fn k_h_inverse(h: &SampledFunction, hurst: Hurst) -> Result<SampledFunction> {
    let grid = h.grid;
    let n = grid.n_steps();
    let hv = hurst.value();
    if h.values[..h.dim].iter().any(|v| v.abs() > 1e-14) {
        return Err(Error::domain("k_h_inverse needs h(0) = 0"));
    }
    let p = hv + 0.5;
    let tp: Vec<f64> = grid.nodes().iter().map(|t| t.powf(p)).collect();
    let scale = inverse_scale(hv);
    let plan = match hurst.regime() {
        Regime::High => Some(FracOperatorPlan::derivative(grid, hv - 0.5, Interpolation::Cellwise)?),
        Regime::Low => Some(FracOperatorPlan::integral(grid, 0.5 - hv, Interpolation::Cellwise)?),
        Regime::Brownian => None,
    };
    let mut comps = Vec::with_capacity(h.dim);
    for k in 0..h.dim {
        let hk = h.component(k);
        let phi: Vec<f64> = (0..n)
            .map(|j| p * (hk[j + 1] - hk[j]) / (tp[j + 1] - tp[j]))
            .collect();
        let mut out = match &plan {
            Some(plan) => plan.apply(&phi),
            None => std::iter::once(0.0).chain(phi.iter().copied()).collect(),
        };
        for (i, v) in out.iter_mut().enumerate().skip(1) {
            *v *= scale * grid.node(i).powf(hv - 0.5);
        }
        comps.push(out);
    }
    Ok(SampledFunction::from_components(grid, comps))
}

/// `|C_0|` with `C_0 = ∫_0^1 (θ^{1/2-H} - 1) / (1-θ)^{1/2+H} dθ`, `H > 1/2`.
///
/// The integrand is positive on `(0, 1)` because `θ^{1/2-H} > 1` there; the
/// magnitude is returned so callers never depend on a sign convention. Each
/// half of the interval is mapped by a power substitution that absorbs its
/// endpoint singularity before adaptive integration.
pub fn c0_constant(hurst: Hurst) -> Result<f64> {
    if hurst.regime() != Regime::High {
        return Err(Error::domain("C_0 is defined for H > 1/2"));
    }
    let a = hurst.value() - 0.5;
    if a < 1e-12 {
        return Ok(0.0);
    }
    let q = 1.0 / (1.0 - a);
    // θ = w^q on [0, 1/2]: θ^{-a} dθ = q dw.
    let left_top = 0.5f64.powf(1.0 - a);
    let left = adaptive(
        |w: f64| {
            let th = w.powf(q);
            q * (1.0 - th.powf(a)) * (1.0 - th).powf(-1.0 - a)
        },
        0.0,
        left_top,
        1e-14,
    )?;
    // 1 - θ = w^q on [1/2, 1]: (1-θ)^{-a} dθ = q dw.
    let right = adaptive(
        |w: f64| {
            let om = w.powf(q);
            // (θ^{-a} - 1) / (1 - θ), written to avoid cancellation
            let num = (-a * (-om).ln_1p()).exp_m1();
            let ratio = if om > 0.0 { num / om } else { a };
            q * ratio
        },
        0.0,
        left_top,
        1e-14,
    )?;
    Ok((left + right).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> TimeGrid {
        TimeGrid::new(1.0, n).unwrap()
    }

    #[test]
    fn integral_examples() {
        let g = grid(64);
        let one = SampledFunction::from_fn(g, |_| 1.0);
        let v = rl_integral(&one, 0.5).unwrap();
        assert!((v.values[64] - 1.0 / gamma(1.5)).abs() < 1e-12);
        let t = SampledFunction::from_fn(g, |t| t);
        let v = rl_integral(&t, 0.5).unwrap();
        assert!((v.values[64] - gamma(2.0) / gamma(2.5)).abs() < 1e-12);
        let z = SampledFunction::from_fn(g, |_| 0.0);
        assert!(rl_integral(&z, 0.3).unwrap().values.iter().all(|&v| v == 0.0));
        assert!(rl_integral(&z, 1.5).is_err());
        assert!(rl_integral(&z, 0.0).is_err());
    }

    #[test]
    fn unit_order_is_trapezoid() {
        let g = grid(10);
        let f = SampledFunction::from_fn(g, |t| t * t);
        let v = rl_integral(&f, 1.0).unwrap();
        let mut acc = 0.0;
        for i in 1..=10 {
            acc += 0.5 * g.dt() * (f.values[i - 1] + f.values[i]);
            assert!((v.values[i] - acc).abs() < 1e-14);
        }
    }

    #[test]
    fn derivative_examples() {
        let g = grid(256);
        let c = SampledFunction::from_fn(g, |_| 2.0);
        let d = rl_derivative(&c, 0.3).unwrap();
        for i in 1..=256 {
            let exact = 2.0 / gamma(0.7) * g.node(i).powf(-0.3);
            assert!((d.values[i] - exact).abs() < 1e-12 * exact);
        }
        assert!(rl_derivative(&c, 1.0).is_err());
        let f = SampledFunction::from_fn(g, |t| t.sqrt());
        let d = rl_derivative(&f, 0.5).unwrap();
        assert!((d.values[256] - gamma(1.5)).abs() < 2e-3);
    }

    #[test]
    fn derivative_of_linear_is_exact() {
        // D^α t = t^{1-α} / Γ(2-α)
        let g = grid(32);
        let f = SampledFunction::from_fn(g, |t| t);
        let d = rl_derivative(&f, 0.4).unwrap();
        for i in 1..=32 {
            let exact = g.node(i).powf(0.6) / gamma(1.6);
            assert!((d.values[i] - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn cellwise_operators_are_exact_on_constants() {
        let g = grid(16);
        let ones = vec![1.0; 16];
        let i = FracOperatorPlan::integral(g, 0.3, Interpolation::Cellwise).unwrap().apply(&ones);
        let d = FracOperatorPlan::derivative(g, 0.3, Interpolation::Cellwise).unwrap().apply(&ones);
        for k in 1..=16 {
            let t = g.node(k);
            assert!((i[k] - t.powf(0.3) / gamma(1.3)).abs() < 1e-13);
            assert!((d[k] - t.powf(-0.3) / gamma(0.7)).abs() < 1e-12);
        }
    }

    #[test]
    fn k_h_inverse_brownian_is_difference_quotient() {
        let g = grid(100);
        let h = SampledFunction::from_fn(g, |t| t);
        let u = k_h_inverse(&h, Hurst::new(0.5).unwrap()).unwrap();
        assert!(u.values[1..].iter().all(|v| (v - 1.0).abs() < 1e-10));
        let z = SampledFunction::from_fn(g, |_| 0.0);
        for hv in [0.3, 0.5, 0.7] {
            let u = k_h_inverse(&z, Hurst::new(hv).unwrap()).unwrap();
            assert!(u.values.iter().all(|&v| v == 0.0));
        }
        let bad = SampledFunction::from_fn(g, |t| 1.0 + t);
        assert!(k_h_inverse(&bad, Hurst::new(0.7).unwrap()).is_err());
    }

    #[test]
    fn c0_examples() {
        let closed = |h: f64| {
            let a = h - 0.5;
            (1.0 - gamma(1.0 - a).powi(2) / gamma(1.0 - 2.0 * a)) / a
        };
        for h in [0.55, 0.7, 0.9] {
            let c = c0_constant(Hurst::new(h).unwrap()).unwrap();
            assert!((c - closed(h)).abs() < 1e-10 * closed(h), "{h}: {c} vs {}", closed(h));
        }
        assert!((c0_constant(Hurst::new(0.7).unwrap()).unwrap() - 0.449_107_301_6).abs() < 1e-9);
        assert!(c0_constant(Hurst::new(0.5 + 1e-9).unwrap()).unwrap() < 1e-6);
        assert!(c0_constant(Hurst::new(0.5).unwrap()).is_err());
    }
}
