use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::rng::{fill_normal, replica_rng, ReplicaRng};

use super::Hurst;

/// Autocovariance of fractional Gaussian noise with step `dt` at lag `k`.
pub fn fgn_autocovariance(h: Hurst, k: usize, dt: f64) -> f64 {
    let e = 2.0 * h.value();
    let k = k as f64;
    0.5 * ((k + 1.0).powf(e) - 2.0 * k.powf(e) + (k - 1.0).abs().powf(e)) * dt.powf(e)
}

/// Exact sampler for a stationary Gaussian sequence with given
/// autocovariance (lags `0..n`).
///
/// Uses circulant embedding of size `2(n-1)`. Negative embedding
/// eigenvalues are clipped when their mass is below `1e-8` of the trace;
/// otherwise the sampler falls back to a Durbin–Levinson (Toeplitz
/// Cholesky) recursion and logs a warning.
pub struct StationaryGaussian {
    n: usize,
    method: Method,
}

enum Method {
    Circulant {
        sqrt_eig: Vec<f64>,
        fft: Arc<dyn Fft<f64>>,
    },
    Levinson {
        /// Prediction coefficients for each position, flattened.
        phi: Vec<Vec<f64>>,
        sd: Vec<f64>,
    },
}

impl StationaryGaussian {
    pub fn new(acov: &[f64]) -> Result<StationaryGaussian> {
        let n = acov.len();
        if n < 2 {
            return Err(Error::domain("need at least two lags"));
        }
        let m = 2 * (n - 1);
        let mut row: Vec<Complex<f64>> = Vec::with_capacity(m);
        row.extend(acov.iter().map(|&c| Complex::new(c, 0.0)));
        row.extend(acov[1..n - 1].iter().rev().map(|&c| Complex::new(c, 0.0)));
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(m);
        fft.process(&mut row);
        let trace: f64 = row.iter().map(|c| c.re.abs()).sum();
        let negative: f64 = row.iter().filter(|c| c.re < 0.0).map(|c| -c.re).sum();
        if negative <= 1e-8 * trace {
            let sqrt_eig = row.iter().map(|c| (c.re.max(0.0) / m as f64).sqrt()).collect();
            return Ok(StationaryGaussian {
                n,
                method: Method::Circulant { sqrt_eig, fft },
            });
        }
        log::warn!(
            "circulant embedding has negative eigenvalue mass {:.3e} (trace {:.3e}); \
             falling back to Cholesky",
            negative,
            trace
        );
        let (phi, sd) = durbin_levinson(acov)?;
        Ok(StationaryGaussian {
            n,
            method: Method::Levinson { phi, sd },
        })
    }

    pub fn used_fallback(&self) -> bool {
        matches!(self.method, Method::Levinson { .. })
    }

    pub fn sample(&self, rng: &mut ReplicaRng) -> Vec<f64> {
        match &self.method {
            Method::Circulant { sqrt_eig, fft } => {
                let m = sqrt_eig.len();
                let mut re = vec![0.0; m];
                let mut im = vec![0.0; m];
                fill_normal(rng, 1.0, &mut re);
                fill_normal(rng, 1.0, &mut im);
                let mut buf: Vec<Complex<f64>> = (0..m)
                    .map(|k| Complex::new(re[k] * sqrt_eig[k], im[k] * sqrt_eig[k]))
                    .collect();
                fft.process(&mut buf);
                buf[..self.n].iter().map(|c| c.re).collect()
            }
            Method::Levinson { phi, sd } => {
                let mut z = vec![0.0; self.n];
                fill_normal(rng, 1.0, &mut z);
                let mut x = vec![0.0; self.n];
                for t in 0..self.n {
                    let pred: f64 = phi[t].iter().enumerate().map(|(j, p)| p * x[t - 1 - j]).sum();
                    x[t] = pred + sd[t] * z[t];
                }
                x
            }
        }
    }
}

fn durbin_levinson(acov: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let n = acov.len();
    let mut phis: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut sd = Vec::with_capacity(n);
    let mut v = acov[0];
    if v <= 0.0 {
        return Err(Error::domain("autocovariance is not positive definite"));
    }
    phis.push(Vec::new());
    sd.push(v.sqrt());
    let mut prev: Vec<f64> = Vec::new();
    for t in 1..n {
        let num = acov[t] - prev.iter().enumerate().map(|(j, p)| p * acov[t - 1 - j]).sum::<f64>();
        let kappa = num / v;
        let mut cur = Vec::with_capacity(t);
        for j in 0..t - 1 {
            cur.push(prev[j] - kappa * prev[t - 2 - j]);
        }
        cur.push(kappa);
        v *= 1.0 - kappa * kappa;
        if v <= 0.0 {
            return Err(Error::domain("autocovariance is not positive definite"));
        }
        phis.push(cur.clone());
        sd.push(v.sqrt());
        prev = cur;
    }
    Ok((phis, sd))
}

/// Exactly distributed fGn sample, with the fallback flag surfaced.
#[derive(Debug, Clone)]
pub struct FgnSample {
    pub values: Vec<f64>,
    pub used_fallback: bool,
}

/// `n` fGn increments with step `dt`.
pub fn sample_fgn_exact(h: Hurst, n: usize, dt: f64, seed: u64) -> Result<FgnSample> {
    if n < 2 {
        return Err(Error::domain("fGn sample needs n >= 2"));
    }
    let acov: Vec<f64> = (0..n).map(|k| fgn_autocovariance(h, k, dt)).collect();
    let gen = StationaryGaussian::new(&acov)?;
    Ok(FgnSample {
        values: gen.sample(&mut replica_rng(seed, 0)),
        used_fallback: gen.used_fallback(),
    })
}
