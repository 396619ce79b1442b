use serde::Serialize;

use crate::error::{Error, Result};
use crate::fbm::{path_norms, Regime, TimeGrid, VolterraPlan};
use crate::rng::sub_seed;
use crate::sde::{solve_additive, AprioriBounds, SdeModel};
use crate::stats::mean_se;

use super::run_replicas;

/// Inputs of the moment bound that are not determined by the model: the
/// constant `L` of the Young-integral estimate and the Hölder exponent
/// `β ∈ (1/2, H)` (default `(1/2 + H)/2`), plus the number of fBm paths
/// used for the norm expectations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvariantOptions {
    pub l: f64,
    pub beta: Option<f64>,
    pub n_norm_paths: usize,
}

impl Default for InvariantOptions {
    fn default() -> Self {
        InvariantOptions {
            l: 1.0,
            beta: None,
            n_norm_paths: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantMeasureTrace {
    pub block_t: f64,
    pub n_blocks: usize,
    pub n_chains: usize,
    /// `endpoint_samples[c][k]` is chain `c` after block `k + 1` (node-major
    /// state of length `dim`).
    pub endpoint_samples: Vec<Vec<Vec<f64>>>,
    /// Cesàro averages `(1/n) Σ_{k≤n} E|X_k|²`, `n = 1..=n_blocks`.
    pub second_moments: Vec<f64>,
    pub second_moment_se: Vec<f64>,
    /// `C13/(1 - C14) + |x0|²` when `C14 < 1`.
    pub bound: Option<f64>,
    pub c11: f64,
    pub c12: f64,
    pub c13: f64,
    pub c14: f64,
    pub l: f64,
    pub beta: f64,
}

/// Krylov–Bogoliubov iteration: `n_chains` independent chains, each block of
/// length `block_t` driven by a fresh fBm path, so that block `k` samples
/// `δ_{x0} P_T^k`.
///
/// The moment constants use `d1, d2` at `x0` and Monte Carlo estimates of
/// `E‖B‖_β`, `E(‖B‖_∞‖B‖_β)` and `E‖B‖²_β`; they are conditional on the
/// chosen `L` and `β`.
pub fn invariant_measure_iterate(
    model: &SdeModel,
    x0: &[f64],
    block_grid: TimeGrid,
    n_blocks: usize,
    n_chains: usize,
    seed: u64,
    opts: &InvariantOptions,
) -> Result<InvariantMeasureTrace> {
    let h = model.hurst.value();
    if model.hurst.regime() != Regime::High {
        return Err(Error::domain("the invariant measure iteration requires H > 1/2"));
    }
    if !model.is_additive() || model.time_dependent() {
        return Err(Error::domain("the invariant measure iteration needs a time-homogeneous additive model"));
    }
    let k3 = model
        .constants
        .k3
        .ok_or_else(|| Error::domain("model has no dissipativity constant K3"))?;
    if n_blocks == 0 || n_chains == 0 {
        return Err(Error::domain("n_blocks and n_chains must be positive"));
    }
    super::check_point(model, x0, "x0")?;
    let beta = opts.beta.unwrap_or((0.5 + h) / 2.0);
    if !(beta > 0.5 && beta < h) {
        return Err(Error::domain(format!("β = {beta} must lie in (1/2, H)")));
    }
    if !(opts.l > 0.0) {
        return Err(Error::domain("L must be positive"));
    }
    let d = model.dim();
    let plan = VolterraPlan::new(block_grid, model.hurst);
    let chains = run_replicas(n_chains, |c| {
        let mut x = x0.to_vec();
        let mut ends = Vec::with_capacity(n_blocks);
        for k in 0..n_blocks {
            let path = plan.sample(d, seed, c * n_blocks as u64 + k as u64);
            x = solve_additive(model, &x, &path)?.terminal().to_vec();
            ends.push(x.clone());
        }
        Ok(ends)
    })?;
    if chains.n_failed > 0 {
        return Err(Error::ReplicaFailures {
            failed: chains.n_failed,
            total: n_chains,
            first: "chain failure".into(),
        });
    }
    let ends = chains.values;
    let mut second_moments = Vec::with_capacity(n_blocks);
    let mut second_moment_se = Vec::with_capacity(n_blocks);
    let mut running = vec![0.0; ends.len()];
    for k in 0..n_blocks {
        for (acc, chain) in running.iter_mut().zip(&ends) {
            *acc += chain[k].iter().map(|v| v * v).sum::<f64>();
        }
        let avg: Vec<f64> = running.iter().map(|s| s / (k + 1) as f64).collect();
        let (m, se) = mean_se(&avg);
        second_moments.push(m);
        second_moment_se.push(se);
    }

    // constants of the moment recursion
    let t = block_grid.horizon();
    let norms = run_replicas(opts.n_norm_paths, |i| {
        let p = plan.sample(d, sub_seed(seed, 2), i);
        let n = path_norms(&p.fbm_values, d, block_grid.dt(), beta)?;
        Ok((n.holder_norm, n.sup_norm * n.holder_norm, n.holder_norm * n.holder_norm))
    })?;
    let e_b = mean_se(&norms.values.iter().map(|v| v.0).collect::<Vec<_>>()).0;
    let e_sb = mean_se(&norms.values.iter().map(|v| v.1).collect::<Vec<_>>()).0;
    let e_b2 = mean_se(&norms.values.iter().map(|v| v.2).collect::<Vec<_>>()).0;
    let x_norm = x0.iter().map(|v| v * v).sum::<f64>().sqrt();
    let bx = model.b(0.0, x0).iter().map(|v| v * v).sum::<f64>().sqrt();
    let ap = AprioriBounds::new(&model.constants, x_norm, bx, t, 0.0);
    let k1 = model.constants.k1;
    let e1 = (k1 * t).exp();
    let pre = 2.0 * opts.l * t.powf(beta) / (beta - 0.5);
    let c11 = pre
        * ((ap.d1 * t + (1.0 + k1 * t).powi(2) * e1 * e1 / 4.0 + bx * t * e1) * e_b
            + (e1 + ap.d2 * t) * e_sb
            + t.powf(beta) * e_b2);
    let c12 = 1.0 + pre * e_b;
    let growth = (2.0 * k3 * t).exp();
    let (c13, c14) = (c11 * growth, c12 * growth);
    let bound = if c14 < 1.0 {
        Some(c13 / (1.0 - c14) + x_norm * x_norm)
    } else {
        log::warn!("C14 = {c14:.4} >= 1: the moment bound is not available for this configuration");
        None
    };
    Ok(InvariantMeasureTrace {
        block_t: t,
        n_blocks,
        n_chains,
        endpoint_samples: ends,
        second_moments,
        second_moment_se,
        bound,
        c11,
        c12,
        c13,
        c14,
        l: opts.l,
        beta,
    })
}
