use serde::Serialize;

use crate::error::{Error, Result};

/// Largest step count for which the exact pairwise Hölder norm is computed.
pub const MAX_NORM_STEPS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathNorms {
    pub sup_norm: f64,
    pub holder_norm: f64,
    pub beta: f64,
    /// `sup_norm + holder_norm`.
    pub combined: f64,
}

/// Sup norm and `beta`-Hölder seminorm of a path sampled on a uniform grid
/// with spacing `dt`, taken over all node pairs.
///
/// `values` is node-major with `dim` components per node; distances are
/// Euclidean.
pub fn path_norms(values: &[f64], dim: usize, dt: f64, beta: f64) -> Result<PathNorms> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::domain(format!("Hölder exponent {beta} not in (0, 1)")));
    }
    if dim == 0 || values.len() % dim != 0 {
        return Err(Error::domain("path length is not a multiple of the dimension"));
    }
    let nodes = values.len() / dim;
    if nodes < 2 {
        return Err(Error::domain("path norms need at least two nodes"));
    }
    if nodes - 1 > MAX_NORM_STEPS {
        return Err(Error::domain(format!(
            "path with {} steps exceeds the {} step limit for norms",
            nodes - 1,
            MAX_NORM_STEPS
        )));
    }
    let node = |i: usize| &values[i * dim..(i + 1) * dim];
    let sup_norm = (0..nodes)
        .map(|i| node(i).iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let inv_gap: Vec<f64> = (0..nodes).map(|k| (k as f64 * dt).powf(-beta)).collect();
    let mut best_sq = 0.0f64;
    if dim == 1 {
        for lag in 1..nodes {
            let w = inv_gap[lag] * inv_gap[lag];
            let m = values[lag..]
                .iter()
                .zip(values)
                .map(|(a, b)| (a - b) * (a - b))
                .fold(0.0, f64::max);
            best_sq = best_sq.max(m * w);
        }
    } else {
        for i in 0..nodes {
            for j in i + 1..nodes {
                let d2: f64 = node(j).iter().zip(node(i)).map(|(a, b)| (a - b) * (a - b)).sum();
                let w = inv_gap[j - i];
                best_sq = best_sq.max(d2 * w * w);
            }
        }
    }
    let holder_norm = best_sq.sqrt();
    Ok(PathNorms {
        sup_norm,
        holder_norm,
        beta,
        combined: sup_norm + holder_norm,
    })
}
