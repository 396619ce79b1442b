use serde::Serialize;

use crate::error::{Error, Result};
use crate::fbm::{Regime, VolterraPlan};
use crate::sde::solve_additive;
use crate::sde::SdeModel;
use crate::stats::mean_se;

use super::{check_point, run_replicas, McConfig};

/// Histogram of `X_T` for a scalar model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityReport {
    /// `n_bins + 1` equally spaced edges over `mean ± 5 sd`.
    pub edges: Vec<f64>,
    /// Counts per bin; samples outside the edges are in `below` / `above`.
    pub counts: Vec<usize>,
    pub below: usize,
    pub above: usize,
    pub n_paths: usize,
    pub mean: f64,
    pub std_dev: f64,
    /// Largest fraction of samples in one bin.
    pub max_bin_mass: f64,
    /// Largest fraction of samples sharing one exact value.
    pub max_tie_mass: f64,
    /// Raised when some value carries more than 1% of the samples, which a
    /// law with a density cannot do.
    pub atom_flag: bool,
    /// Terminal values in replica order.
    pub samples: Vec<f64>,
}

pub fn density_smoke(model: &SdeModel, x: &[f64], cfg: &McConfig, n_bins: usize) -> Result<DensityReport> {
    if model.hurst.regime() != Regime::Low {
        return Err(Error::domain("the density smoke test is for H < 1/2"));
    }
    if model.dim() != 1 || !model.is_additive() {
        return Err(Error::domain("the density smoke test needs a scalar additive model"));
    }
    if n_bins == 0 {
        return Err(Error::domain("n_bins must be positive"));
    }
    check_point(model, x, "x")?;
    let plan = VolterraPlan::new(cfg.grid, model.hurst);
    let r = run_replicas(cfg.n_paths, |i| {
        let path = plan.sample(1, cfg.seed, i);
        Ok(solve_additive(model, x, &path)?.terminal()[0])
    })?;
    let samples = r.values;
    let n = samples.len();
    let (mean, se) = mean_se(&samples);
    let std_dev = se * (n as f64).sqrt();
    let (lo, hi) = if std_dev > 0.0 {
        (mean - 5.0 * std_dev, mean + 5.0 * std_dev)
    } else {
        (mean - 0.5, mean + 0.5)
    };
    let width = (hi - lo) / n_bins as f64;
    let edges: Vec<f64> = (0..=n_bins).map(|k| lo + k as f64 * width).collect();
    let mut counts = vec![0usize; n_bins];
    let (mut below, mut above) = (0, 0);
    for &v in &samples {
        if v < lo {
            below += 1;
        } else if v >= hi {
            above += 1;
        } else {
            counts[(((v - lo) / width) as usize).min(n_bins - 1)] += 1;
        }
    }
    let mut sorted = samples.clone();
    sorted.sort_by(f64::total_cmp);
    let mut max_tie = 1usize;
    let mut run = 1usize;
    for w in sorted.windows(2) {
        run = if w[0] == w[1] { run + 1 } else { 1 };
        max_tie = max_tie.max(run);
    }
    let max_bin = counts.iter().copied().max().unwrap_or(0);
    let max_tie_mass = if n > 1 { max_tie as f64 / n as f64 } else { 0.0 };
    Ok(DensityReport {
        edges,
        counts,
        below,
        above,
        n_paths: n,
        mean,
        std_dev,
        max_bin_mass: max_bin as f64 / n as f64,
        max_tie_mass,
        atom_flag: n > 1 && max_tie > 1 && max_tie_mass > 0.01,
        samples,
    })
}

/// Pearson goodness-of-fit of a histogram against a reference law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquareFit {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Chi-square statistic of `report` against the distribution function
/// `cdf`, including both tails; adjacent cells are merged until each
/// expects at least 5 samples.
pub fn chi_square_against(report: &DensityReport, cdf: impl Fn(f64) -> f64) -> Result<ChiSquareFit> {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let n = report.n_paths as f64;
    let edges = &report.edges;
    let mut cells = Vec::with_capacity(report.counts.len() + 2);
    cells.push((cdf(edges[0]) * n, report.below as f64));
    for (k, &c) in report.counts.iter().enumerate() {
        cells.push(((cdf(edges[k + 1]) - cdf(edges[k])) * n, c as f64));
    }
    cells.push(((1.0 - cdf(edges[edges.len() - 1])) * n, report.above as f64));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    let mut open = (0.0, 0.0);
    for (e, o) in cells {
        open = (open.0 + e, open.1 + o);
        if open.0 >= 5.0 {
            merged.push(open);
            open = (0.0, 0.0);
        }
    }
    match merged.last_mut() {
        Some(last) => {
            last.0 += open.0;
            last.1 += open.1;
        }
        None => return Err(Error::domain("too few samples for a chi-square test")),
    }
    if merged.len() < 2 {
        return Err(Error::domain("too few cells for a chi-square test"));
    }
    let statistic: f64 = merged.iter().map(|(e, o)| (o - e) * (o - e) / e).sum();
    let dof = merged.len() - 1;
    let law = ChiSquared::new(dof as f64).map_err(|e| Error::Internal(e.to_string()))?;
    Ok(ChiSquareFit {
        statistic,
        dof,
        p_value: 1.0 - law.cdf(statistic),
    })
}
