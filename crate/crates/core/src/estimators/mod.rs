//! Monte Carlo estimators of `P_T f` and its gradients, the inequality
//! harnesses, the Krylov–Bogoliubov iteration and the density smoke test.
//!
//! Replicas run in parallel on independent streams `(seed, index)`; results
//! are collected in index order and reduced by pairwise summation, so the
//! output does not depend on the number of threads.

mod density;
mod functions;
mod inequalities;
mod invariant;

pub use density::{chi_square_against, density_smoke, ChiSquareFit, DensityReport};
pub use functions::TestFunction;
pub use inequalities::{
    harnack_check, harnack_sweep, shift_harnack_check, shift_harnack_sweep, HarnackSetup,
    InequalityReport,
};
pub use invariant::{invariant_measure_iterate, InvariantOptions, InvariantMeasureTrace};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fbm::{Regime, TimeGrid, VolterraPlan};
use crate::sde::{solve_additive, solve_multiplicative_1d, SdeModel, SolvedPath};
use crate::stats::mean_se;
use crate::weights::{bismut_weight, ibp_weight_high, ibp_weight_low, WeightPlan};
use crate::PathPair;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Replicas dropped after a solver failure.
    pub n_failed: usize,
}

impl McEstimate {
    fn from_samples(xs: &[f64], seed: u64, n_failed: usize) -> McEstimate {
        let (mean, std_error) = mean_se(xs);
        McEstimate {
            mean,
            std_error,
            n_paths: xs.len(),
            seed,
            n_failed,
        }
    }
}

/// Grid, replica count and seed of a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub grid: TimeGrid,
    pub n_paths: usize,
    pub seed: u64,
}

impl McConfig {
    pub fn new(grid: TimeGrid, n_paths: usize, seed: u64) -> Result<McConfig> {
        if n_paths == 0 {
            return Err(Error::domain("n_paths must be positive"));
        }
        Ok(McConfig { grid, n_paths, seed })
    }
}

/// Successful replica outputs in index order, and the failure count.
pub(crate) struct Replicas<T> {
    pub values: Vec<T>,
    pub n_failed: usize,
}

/// Run `job(index)` for every replica. Fails when more than 0.1% of them
/// fail; otherwise the failures are dropped and counted.
pub(crate) fn run_replicas<T: Send>(
    n: usize,
    job: impl Fn(u64) -> Result<T> + Sync + Send,
) -> Result<Replicas<T>> {
    if n == 0 {
        return Err(Error::domain("n_paths must be positive"));
    }
    let results: Vec<Result<T>> = (0..n as u64).into_par_iter().map(job).collect();
    let mut values = Vec::with_capacity(n);
    let mut first = None;
    let mut failed = 0;
    for r in results {
        match r {
            Ok(v) => values.push(v),
            Err(e) => {
                failed += 1;
                first.get_or_insert(e);
            }
        }
    }
    if failed * 1000 > n {
        return Err(Error::ReplicaFailures {
            failed,
            total: n,
            first: first.map(|e| e.to_string()).unwrap_or_default(),
        });
    }
    if failed > 0 {
        log::warn!("{failed} of {n} replicas failed and were dropped");
    }
    Ok(Replicas { values, n_failed: failed })
}

/// Solve from `x`, routing scalar multiplicative models through Lamperti.
pub(crate) fn solve(model: &SdeModel, x: &[f64], path: &PathPair) -> Result<SolvedPath> {
    if model.is_additive() {
        solve_additive(model, x, path)
    } else {
        solve_multiplicative_1d(model, x[0], path)
    }
}

pub(crate) fn check_point(model: &SdeModel, x: &[f64], name: &str) -> Result<()> {
    if x.len() != model.dim() || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain(format!(
            "{name} must be a finite vector of dimension {}",
            model.dim()
        )));
    }
    Ok(())
}

/// `P_T f(x) = E f(X_T^x)`.
pub fn estimate_pt(model: &SdeModel, x: &[f64], f: &TestFunction, cfg: &McConfig) -> Result<McEstimate> {
    check_point(model, x, "x")?;
    f.check_dim(model.dim())?;
    let plan = VolterraPlan::new(cfg.grid, model.hurst);
    let r = run_replicas(cfg.n_paths, |i| {
        let path = plan.sample(model.dim(), cfg.seed, i);
        Ok(f.eval(solve(model, x, &path)?.terminal()))
    })?;
    Ok(McEstimate::from_samples(&r.values, cfg.seed, r.n_failed))
}

/// `∇_y P_T f(x)` from the Bismut weight, with the control variate
/// `f(x) N_T` (the weight has mean zero).
pub fn gradient_bismut(
    model: &SdeModel,
    x: &[f64],
    y: &[f64],
    f: &TestFunction,
    cfg: &McConfig,
) -> Result<McEstimate> {
    check_point(model, x, "x")?;
    check_point(model, y, "y")?;
    f.check_dim(model.dim())?;
    if model.hurst.regime() != Regime::High {
        return Err(Error::domain("the Bismut formula requires H > 1/2"));
    }
    let plan = VolterraPlan::new(cfg.grid, model.hurst);
    let wplan = WeightPlan::new(cfg.grid, model.hurst)?;
    let fx = f.eval(x);
    let r = run_replicas(cfg.n_paths, |i| {
        let path = plan.sample(model.dim(), cfg.seed, i);
        let sol = solve_additive(model, x, &path)?;
        let w = bismut_weight(&wplan, model, &sol, &path, y)?;
        Ok((f.eval(sol.terminal()) - fx) * w.value)
    })?;
    Ok(McEstimate::from_samples(&r.values, cfg.seed, r.n_failed))
}

/// Central finite difference with common random numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdEstimate {
    /// Step `fd_eps`.
    pub estimate: McEstimate,
    /// Step `fd_eps / 2`, on the same paths.
    pub half_step: McEstimate,
    /// Richardson estimate `(4/3)|D(h) - D(h/2)|` of the bias of `D(h)`.
    pub bias_bound: f64,
    pub fd_eps: f64,
}

pub fn gradient_fd(
    model: &SdeModel,
    x: &[f64],
    y: &[f64],
    f: &TestFunction,
    cfg: &McConfig,
    fd_eps: f64,
) -> Result<FdEstimate> {
    check_point(model, x, "x")?;
    check_point(model, y, "y")?;
    f.check_dim(model.dim())?;
    if !(fd_eps > 0.0 && fd_eps.is_finite()) {
        return Err(Error::domain("fd_eps must be positive"));
    }
    let plan = VolterraPlan::new(cfg.grid, model.hurst);
    let at = |h: f64, path: &PathPair| -> Result<f64> {
        let xp: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + h * b).collect();
        let xm: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - h * b).collect();
        let fp = f.eval(solve(model, &xp, path)?.terminal());
        let fm = f.eval(solve(model, &xm, path)?.terminal());
        Ok((fp - fm) / (2.0 * h))
    };
    let r = run_replicas(cfg.n_paths, |i| {
        let path = plan.sample(model.dim(), cfg.seed, i);
        Ok((at(fd_eps, &path)?, at(0.5 * fd_eps, &path)?))
    })?;
    let full: Vec<f64> = r.values.iter().map(|v| v.0).collect();
    let half: Vec<f64> = r.values.iter().map(|v| v.1).collect();
    let gap: Vec<f64> = r.values.iter().map(|v| v.0 - v.1).collect();
    let (g, _) = mean_se(&gap);
    Ok(FdEstimate {
        estimate: McEstimate::from_samples(&full, cfg.seed, r.n_failed),
        half_step: McEstimate::from_samples(&half, cfg.seed, r.n_failed),
        bias_bound: 4.0 / 3.0 * g.abs(),
        fd_eps,
    })
}

/// Both sides of `P_T(∇_y f)(x) = E[f(X_T) N]` on the same paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IbpReport {
    pub lhs: McEstimate,
    pub rhs: McEstimate,
    /// Per-path difference `∇_y f(X_T) - f(X_T) N`.
    pub diff: McEstimate,
}

pub fn ibp_check(
    model: &SdeModel,
    x: &[f64],
    y: &[f64],
    f: &TestFunction,
    cfg: &McConfig,
) -> Result<IbpReport> {
    check_point(model, x, "x")?;
    check_point(model, y, "y")?;
    f.check_dim(model.dim())?;
    let regime = model.hurst.regime();
    if regime == Regime::Brownian {
        return Err(Error::domain("the integration by parts weights need H != 1/2"));
    }
    let plan = VolterraPlan::new(cfg.grid, model.hurst);
    let wplan = WeightPlan::new(cfg.grid, model.hurst)?;
    let r = run_replicas(cfg.n_paths, |i| {
        let path = plan.sample(model.dim(), cfg.seed, i);
        let sol = solve_additive(model, x, &path)?;
        let w = if regime == Regime::Low {
            ibp_weight_low(&wplan, model, &sol, &path, y)?
        } else {
            ibp_weight_high(&wplan, model, &sol, &path, y)?
        };
        let xt = sol.terminal();
        Ok((f.directional(xt, y), f.eval(xt) * w.value))
    })?;
    let lhs: Vec<f64> = r.values.iter().map(|v| v.0).collect();
    let rhs: Vec<f64> = r.values.iter().map(|v| v.1).collect();
    let diff: Vec<f64> = r.values.iter().map(|v| v.0 - v.1).collect();
    Ok(IbpReport {
        lhs: McEstimate::from_samples(&lhs, cfg.seed, r.n_failed),
        rhs: McEstimate::from_samples(&rhs, cfg.seed, r.n_failed),
        diff: McEstimate::from_samples(&diff, cfg.seed, r.n_failed),
    })
}
