use crate::error::Result;
use crate::rng::{fill_normal, replica_rng, ReplicaRng};

use super::{Hurst, VolterraKernel, Regime, TimeGrid};

/// Brownian increments and the fBm built from them on one grid.
///
/// Storage is node-major: component `k` at step/node `i` lives at
/// `i * dim + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPair {
    pub grid: TimeGrid,
    pub dim: usize,
    /// `n * dim` increments `ΔW_i`, each `N(0, T/n)`.
    pub w_increments: Vec<f64>,
    /// `(n + 1) * dim` values `B^H(t_i)`, with `B^H(0) = 0`.
    pub fbm_values: Vec<f64>,
}

impl PathPair {
    /// A path with `W ≡ 0` and `B^H ≡ 0`, for deterministic regression runs.
    pub fn zero_noise(grid: TimeGrid, dim: usize) -> PathPair {
        let n = grid.n_steps();
        PathPair {
            grid,
            dim,
            w_increments: vec![0.0; n * dim],
            fbm_values: vec![0.0; (n + 1) * dim],
        }
    }

    pub fn dw(&self, i: usize) -> &[f64] {
        &self.w_increments[i * self.dim..(i + 1) * self.dim]
    }

    pub fn fbm(&self, i: usize) -> &[f64] {
        &self.fbm_values[i * self.dim..(i + 1) * self.dim]
    }

    /// Component `k` of the fBm at every node.
    pub fn fbm_component(&self, k: usize) -> Vec<f64> {
        self.fbm_values.iter().skip(k).step_by(self.dim).copied().collect()
    }

    /// Component `k` of `W` at every node (cumulated increments).
    pub fn w_component(&self, k: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.grid.n_steps() + 1);
        let mut acc = 0.0;
        out.push(0.0);
        for dw in self.w_increments.iter().skip(k).step_by(self.dim) {
            acc += dw;
            out.push(acc);
        }
        out
    }

    /// Largest Euclidean norm of `B^H(t_i)` over the nodes.
    pub fn fbm_sup(&self) -> f64 {
        self.fbm_values
            .chunks(self.dim)
            .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

/// Precomputed lower-triangular matrix `K_H(t_i, (j + 1/2)Δt)`, `j < i`.
///
/// Building the plan costs `O(n²)` kernel evaluations; it is meant to be
/// built once per experiment and shared by every replica.
#[derive(Debug, Clone)]
pub struct VolterraPlan {
    grid: TimeGrid,
    hurst: Hurst,
    /// Row `i` (for `i = 1..=n`) starts at `i (i - 1) / 2`.
    rows: Vec<f64>,
}

impl VolterraPlan {
    pub fn new(grid: TimeGrid, hurst: Hurst) -> VolterraPlan {
        let n = grid.n_steps();
        let rows = if hurst.regime() == Regime::Brownian {
            Vec::new()
        } else {
            let dt = grid.dt();
            let eval = VolterraKernel::new(hurst);
            let mut rows = Vec::with_capacity(n * (n + 1) / 2);
            for i in 1..=n {
                let t = grid.node(i);
                for j in 0..i {
                    rows.push(eval.eval(t, (j as f64 + 0.5) * dt));
                }
            }
            rows
        };
        VolterraPlan { grid, hurst, rows }
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn hurst(&self) -> Hurst {
        self.hurst
    }

    /// Kernel weights used for node `i >= 1`.
    pub fn row(&self, i: usize) -> &[f64] {
        let start = i * (i - 1) / 2;
        &self.rows[start..start + i]
    }

    /// Build the fBm from given increments.
    pub fn path_from_increments(&self, dim: usize, w_increments: Vec<f64>) -> PathPair {
        let n = self.grid.n_steps();
        assert_eq!(w_increments.len(), n * dim, "increment count");
        let mut fbm_values = vec![0.0; (n + 1) * dim];
        if self.rows.is_empty() {
            for i in 0..n {
                for k in 0..dim {
                    fbm_values[(i + 1) * dim + k] = fbm_values[i * dim + k] + w_increments[i * dim + k];
                }
            }
        } else {
            let mut comp = vec![0.0; n];
            for k in 0..dim {
                for (i, c) in comp.iter_mut().enumerate() {
                    *c = w_increments[i * dim + k];
                }
                for i in 1..=n {
                    let row = self.row(i);
                    let v: f64 = row.iter().zip(&comp[..i]).map(|(a, b)| a * b).sum();
                    fbm_values[i * dim + k] = v;
                }
            }
        }
        PathPair {
            grid: self.grid,
            dim,
            w_increments,
            fbm_values,
        }
    }

    /// Draw a path from an explicit generator.
    pub fn sample_with(&self, dim: usize, rng: &mut ReplicaRng) -> PathPair {
        let mut dw = vec![0.0; self.grid.n_steps() * dim];
        fill_normal(rng, self.grid.dt().sqrt(), &mut dw);
        self.path_from_increments(dim, dw)
    }

    /// Path for replica `index` of an experiment seeded with `seed`.
    pub fn sample(&self, dim: usize, seed: u64, index: u64) -> PathPair {
        self.sample_with(dim, &mut replica_rng(seed, index))
    }
}

/// Single path; builds a fresh plan, so prefer [`VolterraPlan`] in loops.
pub fn sample_path_pair(grid: TimeGrid, dim: usize, h: Hurst, seed: u64) -> Result<PathPair> {
    if dim == 0 {
        return Err(crate::Error::domain("dimension must be at least 1"));
    }
    Ok(VolterraPlan::new(grid, h).sample(dim, seed, 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brownian_case_is_cumulated_w() {
        let g = TimeGrid::new(1.0, 200).unwrap();
        let p = sample_path_pair(g, 2, Hurst::new(0.5).unwrap(), 11).unwrap();
        for k in 0..2 {
            let w = p.w_component(k);
            let b = p.fbm_component(k);
            let err = w.iter().zip(&b).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max);
            assert!(err <= 1e-10);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let g = TimeGrid::new(1.0, 64).unwrap();
        let h = Hurst::new(0.3).unwrap();
        let a = sample_path_pair(g, 2, h, 5).unwrap();
        let b = sample_path_pair(g, 2, h, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.fbm(0), &[0.0, 0.0]);
    }

    #[test]
    fn zero_noise_is_zero() {
        let g = TimeGrid::new(1.0, 8).unwrap();
        let p = PathPair::zero_noise(g, 3);
        assert!(p.fbm_values.iter().all(|&v| v == 0.0));
        assert_eq!(p.fbm_sup(), 0.0);
    }
}
