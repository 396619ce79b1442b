//! Malliavin-type weights for the derivative formulas, the Girsanov density
//! of a drift perturbation, and the constants of the Harnack inequalities.

mod harnack;
mod plan;

pub use harnack::{
    fernique_estimate, harnack_constants, low_shift_constant, pair_point_bounds,
    quad_variation_bound_check, FerniqueEstimate, HarnackConstants,
};
pub use plan::{Integrand, WeightPlan};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fbm::{PathPair, Regime};
use crate::frac_calc::SampledFunction;
use crate::sde::{SdeModel, SolvedPath};
use crate::stats::pairwise_sum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WeightKind {
    Bismut,
    IbpLow,
    IbpHigh,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightTerms {
    pub term1: f64,
    pub term2: f64,
    /// Absent for the low-Hurst weight, which has a single term.
    pub term3: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MalliavinWeight {
    pub value: f64,
    pub terms: WeightTerms,
    /// `Σ_i |u_i|² Δt / T²`, the discrete bracket of the weight.
    pub quad_variation: f64,
    pub kind: WeightKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GirsanovDensity {
    pub log_density: f64,
    /// `Σ_i |u_i|² Δt` for the shift `u = K_H^{-1}(∫η)`.
    pub shift_l2: f64,
}

impl GirsanovDensity {
    pub fn density(&self) -> f64 {
        self.log_density.exp()
    }
}

fn check(plan: &WeightPlan, model: &SdeModel, x: &SolvedPath, path: &PathPair, y: &[f64]) -> Result<()> {
    let d = model.dim();
    if !model.is_additive() {
        return Err(Error::domain("weights are defined for additive noise"));
    }
    if x.dim != d || path.dim != d || y.len() != d {
        return Err(Error::domain("dimension mismatch between model, solution, path and direction"));
    }
    if x.grid != plan.grid() || path.grid != plan.grid() {
        return Err(Error::domain("solution and path must live on the plan's grid"));
    }
    if plan.hurst() != model.hurst {
        return Err(Error::domain("plan and model have different Hurst parameters"));
    }
    Ok(())
}

/// Node-major rate `g(t_i) = a(t_i) ∇_y b(t_i, X_i) + y`.
fn rate(model: &SdeModel, x: &SolvedPath, y: &[f64], a: impl Fn(f64) -> f64) -> Vec<f64> {
    let d = x.dim;
    let n = x.grid.n_steps();
    let mut g = vec![0.0; (n + 1) * d];
    let mut dir = vec![0.0; d];
    for i in 0..=n {
        let t = x.grid.node(i);
        model.drift().directional(t, x.state(i), y, &mut dir);
        let c = a(t);
        for k in 0..d {
            g[i * d + k] = c * dir[k] + y[k];
        }
    }
    g
}

/// Itô sums of the three terms against `ΔW`, plus `Σ|u|²Δt`.
fn ito_sums(plan: &WeightPlan, g: &[f64], d: usize, path: &PathPair) -> ([f64; 3], f64) {
    let n = plan.grid().n_steps();
    let dt = plan.grid().dt();
    let mut sums = [0.0; 3];
    let mut qv = 0.0;
    let mut out = Integrand::default();
    let mut comp = vec![0.0; n + 1];
    let mut buf = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut sq = vec![0.0; n];
    for k in 0..d {
        for (i, c) in comp.iter_mut().enumerate() {
            *c = g[i * d + k];
        }
        plan.integrand(&comp, &mut out);
        for i in 0..n {
            let dw = path.w_increments[i * d + k];
            buf[0][i] = out.term1[i] * dw;
            buf[1][i] = out.term2[i] * dw;
            buf[2][i] = out.term3[i] * dw;
            sq[i] = out.total(i).powi(2);
        }
        for (s, b) in sums.iter_mut().zip(&buf) {
            *s += pairwise_sum(b);
        }
        qv += pairwise_sum(&sq) * dt;
    }
    (sums, qv)
}

fn assemble(sums: [f64; 3], qv: f64, horizon: f64, kind: WeightKind) -> MalliavinWeight {
    let term1 = sums[0] / horizon;
    let term2 = sums[1] / horizon;
    let term3 = (kind != WeightKind::IbpLow).then_some(sums[2] / horizon);
    MalliavinWeight {
        value: term1 + term2 + term3.unwrap_or(0.0),
        terms: WeightTerms { term1, term2, term3 },
        quad_variation: qv / (horizon * horizon),
        kind,
    }
}

/// Weight `N_T` with `∇_y P_T f(x) = E[f(X_T) N_T]`, for `H > 1/2` and a
/// time-homogeneous additive model. The rate is `(T - r)∇_y b(X_r) + y`.
pub fn bismut_weight(
    plan: &WeightPlan,
    model: &SdeModel,
    x: &SolvedPath,
    path: &PathPair,
    y: &[f64],
) -> Result<MalliavinWeight> {
    if model.hurst.regime() != Regime::High {
        return Err(Error::domain("the Bismut weight requires H > 1/2"));
    }
    if model.time_dependent() {
        return Err(Error::domain("the Bismut weight needs a time-homogeneous drift"));
    }
    check(plan, model, x, path, y)?;
    let t = plan.grid().horizon();
    let g = rate(model, x, y, |r| t - r);
    let (sums, qv) = ito_sums(plan, &g, x.dim, path);
    Ok(assemble(sums, qv, t, WeightKind::Bismut))
}

fn ibp_weight(
    plan: &WeightPlan,
    model: &SdeModel,
    x: &SolvedPath,
    path: &PathPair,
    y: &[f64],
    kind: WeightKind,
) -> Result<MalliavinWeight> {
    check(plan, model, x, path, y)?;
    let t = plan.grid().horizon();
    let g = rate(model, x, y, |r| -r);
    let (sums, qv) = ito_sums(plan, &g, x.dim, path);
    Ok(assemble(sums, qv, t, kind))
}

/// Weight `N^1_T` with `P_T(∇_y f)(x) = E[f(X_T) N^1_T]` for `H < 1/2`; the
/// drift may depend on time. The rate is `y - r ∇_y b(r, X_r)`.
pub fn ibp_weight_low(
    plan: &WeightPlan,
    model: &SdeModel,
    x: &SolvedPath,
    path: &PathPair,
    y: &[f64],
) -> Result<MalliavinWeight> {
    if model.hurst.regime() != Regime::Low {
        return Err(Error::domain("the weight N^1 requires H < 1/2"));
    }
    ibp_weight(plan, model, x, path, y, WeightKind::IbpLow)
}

/// Weight `N^2_T` with `P_T(∇_y f)(x) = E[f(X_T) N^2_T]` for `H > 1/2`.
pub fn ibp_weight_high(
    plan: &WeightPlan,
    model: &SdeModel,
    x: &SolvedPath,
    path: &PathPair,
    y: &[f64],
) -> Result<MalliavinWeight> {
    if model.hurst.regime() != Regime::High {
        return Err(Error::domain("the weight N^2 requires H > 1/2"));
    }
    if model.time_dependent() {
        return Err(Error::domain("the weight N^2 needs a time-homogeneous drift"));
    }
    ibp_weight(plan, model, x, path, y, WeightKind::IbpHigh)
}

/// `R = exp[-Σ⟨u_i, ΔW_i⟩ - ½ Σ|u_i|² Δt]` with `u = K_H^{-1}(∫_0^· η)`.
///
/// `η` is linear between nodes, so its running integral is the trapezoid
/// cumulation; `u_i` only depends on `η` up to `t_i`.
pub fn girsanov_density(plan: &WeightPlan, eta: &SampledFunction, path: &PathPair) -> Result<GirsanovDensity> {
    if eta.grid != plan.grid() || path.grid != plan.grid() {
        return Err(Error::domain("η and the path must live on the plan's grid"));
    }
    if eta.dim != path.dim {
        return Err(Error::domain("η and the path have different dimensions"));
    }
    let n = plan.grid().n_steps();
    let dt = plan.grid().dt();
    let mut out = Integrand::default();
    let mut lin = vec![0.0; n];
    let mut sq = vec![0.0; n];
    let (mut ito, mut l2) = (0.0, 0.0);
    for k in 0..eta.dim {
        let comp = eta.component(k);
        plan.check_rate(&comp)?;
        plan.integrand(&comp, &mut out);
        for i in 0..n {
            let u = out.total(i);
            lin[i] = u * path.w_increments[i * eta.dim + k];
            sq[i] = u * u;
        }
        ito += pairwise_sum(&lin);
        l2 += pairwise_sum(&sq) * dt;
    }
    Ok(GirsanovDensity {
        log_density: -ito - 0.5 * l2,
        shift_l2: l2,
    })
}

/// The perturbation `η_t = b(X_t) - b(X^ε_t) - εy/T` under which the shifted
/// solution of the Bismut coupling solves the original equation.
pub fn bismut_coupling_eta(
    model: &SdeModel,
    base: &SolvedPath,
    shifted: &SolvedPath,
    y: &[f64],
    eps: f64,
) -> Result<SampledFunction> {
    let d = model.dim();
    let grid = base.grid;
    let t = grid.horizon();
    let mut values = vec![0.0; (grid.n_steps() + 1) * d];
    let (mut b0, mut b1) = (vec![0.0; d], vec![0.0; d]);
    for i in 0..=grid.n_steps() {
        let s = grid.node(i);
        model.drift().eval(s, base.state(i), &mut b0);
        model.drift().eval(s, shifted.state(i), &mut b1);
        for k in 0..d {
            values[i * d + k] = b0[k] - b1[k] - eps * y[k] / t;
        }
    }
    SampledFunction::new(grid, d, values)
}
