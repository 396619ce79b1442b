use serde::Serialize;

use crate::error::{Error, Result};
use crate::fbm::{PathPair, Regime, TimeGrid};

use super::{DriftConstants, SdeModel};

/// Euler solution on the grid of the driving path.
#[derive(Debug, Clone, PartialEq)]
pub struct SolvedPath {
    pub grid: TimeGrid,
    pub dim: usize,
    pub x0: Vec<f64>,
    /// Node-major, `(n + 1) * dim` entries; the first `dim` equal `x0`.
    pub values: Vec<f64>,
}

impl SolvedPath {
    pub fn state(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn terminal(&self) -> &[f64] {
        self.state(self.grid.n_steps())
    }

    pub fn component(&self, k: usize) -> Vec<f64> {
        self.values.iter().skip(k).step_by(self.dim).copied().collect()
    }

    /// Largest Euclidean norm over the nodes.
    pub fn sup_norm(&self) -> f64 {
        self.values
            .chunks(self.dim)
            .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

/// Gronwall envelope of an additive solution started at `x`:
/// `‖X‖_∞ ≤ [(1+K1 T)|x| + T|b(x)| + ‖B^H‖_∞] e^{K1 T}`, together with the
/// increment constants
/// `d1 = K1 e^{K1 T}|x| + (1 + K1 T e^{K1 T})(K1|x| + |b(x)|)` and
/// `d2 = K1 e^{K1 T}`.
///
/// The discrete Gronwall lemma gives the same envelope for the Euler scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AprioriBounds {
    pub d1: f64,
    pub d2: f64,
    pub sup_bound: f64,
}

impl AprioriBounds {
    pub fn new(c: &DriftConstants, x_norm: f64, bx_norm: f64, horizon: f64, noise_sup: f64) -> Self {
        let e = (c.k1 * horizon).exp();
        AprioriBounds {
            d1: c.k1 * e * x_norm + (1.0 + c.k1 * horizon * e) * (c.k1 * x_norm + bx_norm),
            d2: c.k1 * e,
            sup_bound: ((1.0 + c.k1 * horizon) * x_norm + horizon * bx_norm + noise_sup) * e,
        }
    }

    pub fn for_path(model: &SdeModel, x0: &[f64], path: &PathPair) -> Self {
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let bx = model.b(0.0, x0);
        AprioriBounds::new(&model.constants, norm(x0), norm(&bx), path.grid.horizon(), path.fbm_sup())
    }
}

fn check_inputs(model: &SdeModel, x0: &[f64], path: &PathPair) -> Result<()> {
    if !model.is_additive() {
        return Err(Error::domain("additive solver called on a model with diffusion"));
    }
    if x0.len() != model.dim() || path.dim != model.dim() {
        return Err(Error::domain(format!(
            "dimension mismatch: model {}, x0 {}, path {}",
            model.dim(),
            x0.len(),
            path.dim
        )));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("initial point is not finite"));
    }
    Ok(())
}

/// Euler recursion `X_{i+1} = X_i + (b(t_i, X_i) + shift) Δt + ΔB_i`.
fn euler(model: &SdeModel, x0: &[f64], path: &PathPair, shift: Option<&[f64]>) -> Result<SolvedPath> {
    let grid = path.grid;
    let n = grid.n_steps();
    let d = model.dim();
    let dt = grid.dt();
    let mut values = vec![0.0; (n + 1) * d];
    values[..d].copy_from_slice(x0);
    let mut b = vec![0.0; d];
    for i in 0..n {
        let (head, tail) = values.split_at_mut((i + 1) * d);
        let x = &head[i * d..];
        model.drift().eval(grid.node(i), x, &mut b);
        let db = &path.fbm_values;
        for k in 0..d {
            let s = shift.map_or(0.0, |s| s[k]);
            tail[k] = x[k] + (b[k] + s) * dt + (db[(i + 1) * d + k] - db[i * d + k]);
        }
        if tail[..d].iter().any(|v| !v.is_finite()) {
            return Err(Error::Solver {
                step: i + 1,
                reason: "non-finite state".into(),
            });
        }
    }
    Ok(SolvedPath {
        grid,
        dim: d,
        x0: x0.to_vec(),
        values,
    })
}

fn assert_apriori(model: &SdeModel, path: &PathPair, sol: &SolvedPath) -> Result<()> {
    if model.time_dependent() {
        return Ok(());
    }
    let bound = AprioriBounds::for_path(model, &sol.x0, path).sup_bound;
    let limit = bound * (1.0 + 1e-9) + 1e-12;
    for (i, v) in sol.values.chunks(sol.dim).enumerate() {
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > limit {
            return Err(Error::AprioriViolation {
                step: i,
                value: norm,
                bound,
            });
        }
    }
    Ok(())
}

/// Explicit Euler for `dX = b(t, X) dt + dB^H`; the noise term is exact.
pub fn solve_additive(model: &SdeModel, x0: &[f64], path: &PathPair) -> Result<SolvedPath> {
    check_inputs(model, x0, path)?;
    let sol = euler(model, x0, path, None)?;
    assert_apriori(model, path, &sol)?;
    Ok(sol)
}

/// `dX = b(X) dt + σ(X) dB^H` in one dimension, solved as `Y = F(X)` with
/// the additive Lamperti model and mapped back node by node.
pub fn solve_multiplicative_1d(model: &SdeModel, x0: f64, path: &PathPair) -> Result<SolvedPath> {
    let map = model
        .lamperti()
        .ok_or_else(|| Error::domain("model has no diffusion coefficient"))?;
    if model.hurst.regime() != Regime::High {
        return Err(Error::domain("multiplicative noise requires H > 1/2"));
    }
    let transformed = model.lamperti_model()?;
    let y0 = map.forward(x0)?;
    let (lo, hi) = map.image_range();
    let ys = solve_additive(transformed, &[y0], path)?;
    let values = ys
        .values
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            map.inverse(y).map_err(|_| Error::Solver {
                step: i,
                reason: format!("Y = {y} left the Lamperti image [{lo}, {hi}]"),
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(SolvedPath {
        grid: ys.grid,
        dim: 1,
        x0: vec![x0],
        values,
    })
}

fn coupled(
    model: &SdeModel,
    x: &[f64],
    start: &[f64],
    shift: &[f64],
    path: &PathPair,
) -> Result<(SolvedPath, SolvedPath)> {
    let base = solve_additive(model, x, path)?;
    let grid = path.grid;
    let n = grid.n_steps();
    let d = model.dim();
    let dt = grid.dt();
    let mut values = vec![0.0; (n + 1) * d];
    values[..d].copy_from_slice(start);
    let mut b = vec![0.0; d];
    for i in 0..n {
        model.drift().eval(grid.node(i), base.state(i), &mut b);
        for k in 0..d {
            let db = path.fbm_values[(i + 1) * d + k] - path.fbm_values[i * d + k];
            values[(i + 1) * d + k] = values[i * d + k] + (b[k] + shift[k]) * dt + db;
        }
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Solver {
            step: n,
            reason: "non-finite coupled state".into(),
        });
    }
    let shifted = SolvedPath {
        grid,
        dim: d,
        x0: start.to_vec(),
        values,
    };
    Ok((base, shifted))
}

/// Coupling for the Bismut formula: `X^ε` starts at `x + εy` and uses the
/// drift `b(X_t) - εy/T` evaluated along `X`, so that
/// `X^ε_t - X_t = (T - t) ε y / T` and `X^ε_T = X_T`.
pub fn coupled_bismut_pair(
    model: &SdeModel,
    x: &[f64],
    y: &[f64],
    eps: f64,
    path: &PathPair,
) -> Result<(SolvedPath, SolvedPath)> {
    if model.time_dependent() {
        return Err(Error::domain("the Bismut coupling needs a time-homogeneous drift"));
    }
    check_inputs(model, x, path)?;
    if y.len() != x.len() {
        return Err(Error::domain("direction has the wrong dimension"));
    }
    let t = path.grid.horizon();
    let start: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + eps * b).collect();
    let shift: Vec<f64> = y.iter().map(|v| -eps * v / t).collect();
    coupled(model, x, &start, &shift, path)
}

/// Coupling for the integration-by-parts formulas: same start, drift
/// `b(t, X_t) + εy/T` along `X`, so that `X^ε_t - X_t = t ε y / T`.
pub fn coupled_ibp_pair(
    model: &SdeModel,
    x: &[f64],
    y: &[f64],
    eps: f64,
    path: &PathPair,
) -> Result<(SolvedPath, SolvedPath)> {
    check_inputs(model, x, path)?;
    if y.len() != x.len() {
        return Err(Error::domain("direction has the wrong dimension"));
    }
    let t = path.grid.horizon();
    let shift: Vec<f64> = y.iter().map(|v| eps * v / t).collect();
    coupled(model, x, x, &shift, path)
}
