//! Euler solvers for SDEs driven by fBm, the Lamperti route for scalar
//! multiplicative noise, and the exact coupling constructions used by the
//! derivative formulas.

mod lamperti;
mod models;
mod solve;

pub use lamperti::{Lamperti, LampertiDrift};
pub use models::{build_model, ModelSpec};
pub use solve::{
    coupled_bismut_pair, coupled_ibp_pair, solve_additive, solve_multiplicative_1d, AprioriBounds,
    SolvedPath,
};

use std::fmt::Debug;
use std::sync::Arc;

use rand::RngExt;

use crate::error::{Error, Result};
use crate::fbm::{Hurst, Regime};
use crate::rng::replica_rng;

/// Drift `b(t, x)` on `R^d` with its directional derivative.
pub trait Drift: Send + Sync + Debug {
    fn dim(&self) -> usize;

    fn eval(&self, t: f64, x: &[f64], out: &mut [f64]);

    /// `out = ∇b(t, x) y`, the derivative of `b` at `x` in direction `y`.
    fn directional(&self, t: f64, x: &[f64], y: &[f64], out: &mut [f64]);

    fn time_dependent(&self) -> bool {
        false
    }
}

/// Scalar diffusion coefficient `σ(x)` with two derivatives.
pub trait Diffusion1d: Send + Sync + Debug {
    fn sigma(&self, x: f64) -> f64;
    fn dsigma(&self, x: f64) -> f64;
    fn d2sigma(&self, x: f64) -> f64;
}

/// Regularity constants of the drift: `|∇b| ≤ K1`, `∇b` is `K2`-Lipschitz,
/// and optionally `⟨x, b(x)⟩ ≤ K3 |x|²`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DriftConstants {
    pub k1: f64,
    pub k2: f64,
    pub k3: Option<f64>,
}

/// `d3 ≤ σ ≤ d4`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DiffusionBounds {
    pub d3: f64,
    pub d4: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Multiplicative {
    pub sigma: Arc<dyn Diffusion1d>,
    pub bounds: DiffusionBounds,
    pub lamperti: Arc<Lamperti>,
    /// The equivalent additive model for `Y = F(X)`.
    pub transformed: Arc<SdeModel>,
}

/// A registered model: drift, constants, optional scalar diffusion and the
/// Hurst parameter of the driving noise.
#[derive(Debug, Clone)]
pub struct SdeModel {
    pub name: String,
    drift: Arc<dyn Drift>,
    pub constants: DriftConstants,
    pub hurst: Hurst,
    pub(crate) diffusion: Option<Multiplicative>,
}

/// Number of random points used to spot-check registered constants.
pub const SPOT_CHECKS: usize = 1000;

impl SdeModel {
    /// Additive-noise model `dX = b(t, X) dt + dB^H`.
    ///
    /// The constants are spot-checked on random points; a time-dependent
    /// drift is only accepted for `H < 1/2`.
    pub fn additive(
        name: impl Into<String>,
        drift: Arc<dyn Drift>,
        constants: DriftConstants,
        hurst: Hurst,
    ) -> Result<SdeModel> {
        if drift.dim() == 0 {
            return Err(Error::domain("drift dimension must be at least 1"));
        }
        if drift.time_dependent() && hurst.regime() != Regime::Low {
            return Err(Error::domain("time-dependent drift requires H < 1/2"));
        }
        spot_check_drift(drift.as_ref(), &constants)?;
        Ok(SdeModel {
            name: name.into(),
            drift,
            constants,
            hurst,
            diffusion: None,
        })
    }

    /// Scalar model `dX = b(X) dt + σ(X) dB^H`, solved through the Lamperti
    /// transform.
    pub fn multiplicative(
        name: impl Into<String>,
        drift: Arc<dyn Drift>,
        constants: DriftConstants,
        sigma: Arc<dyn Diffusion1d>,
        bounds: DiffusionBounds,
        hurst: Hurst,
    ) -> Result<SdeModel> {
        if drift.dim() != 1 {
            return Err(Error::domain("multiplicative noise is only supported in dimension 1"));
        }
        if drift.time_dependent() {
            return Err(Error::domain("multiplicative models need a time-homogeneous drift"));
        }
        if !(bounds.d3 > 0.0 && bounds.d3 <= bounds.d4) {
            return Err(Error::domain("diffusion bounds need 0 < d3 <= d4"));
        }
        spot_check_drift(drift.as_ref(), &constants)?;
        let mut rng = replica_rng(0x5107, 1);
        for _ in 0..SPOT_CHECKS {
            let x: f64 = rng.random_range(-10.0..10.0);
            let s = sigma.sigma(x);
            if !(s >= bounds.d3 * (1.0 - 1e-12) && s <= bounds.d4 * (1.0 + 1e-12)) {
                return Err(Error::domain(format!(
                    "σ({x}) = {s} outside [{}, {}]",
                    bounds.d3, bounds.d4
                )));
            }
        }
        let name = name.into();
        let lamperti = Arc::new(Lamperti::new(sigma.clone(), (-64.0, 64.0), 4096)?);
        let tdrift = Arc::new(LampertiDrift::new(drift.clone(), sigma.clone(), lamperti.clone()));
        let tconst = tdrift.scan_constants();
        let transformed = Arc::new(SdeModel::additive(
            format!("lamperti[{name}]"),
            tdrift,
            tconst,
            hurst,
        )?);
        Ok(SdeModel {
            name,
            drift,
            constants,
            hurst,
            diffusion: Some(Multiplicative {
                sigma,
                bounds,
                lamperti,
                transformed,
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.drift.dim()
    }

    pub fn drift(&self) -> &dyn Drift {
        self.drift.as_ref()
    }

    pub fn drift_arc(&self) -> Arc<dyn Drift> {
        self.drift.clone()
    }

    pub fn is_additive(&self) -> bool {
        self.diffusion.is_none()
    }

    pub fn time_dependent(&self) -> bool {
        self.drift.time_dependent()
    }

    pub fn diffusion_bounds(&self) -> Option<DiffusionBounds> {
        self.diffusion.as_ref().map(|d| d.bounds)
    }

    pub fn lamperti(&self) -> Option<&Lamperti> {
        self.diffusion.as_ref().map(|d| d.lamperti.as_ref())
    }

    /// The additive model obtained from the Lamperti transform, with drift
    /// `(b/σ) ∘ F^{-1}` and constants estimated by a dense scan.
    pub fn lamperti_model(&self) -> Result<&SdeModel> {
        self.diffusion
            .as_ref()
            .map(|m| m.transformed.as_ref())
            .ok_or_else(|| Error::domain("model has no diffusion coefficient"))
    }

    pub fn sigma(&self) -> Option<&dyn Diffusion1d> {
        self.diffusion.as_ref().map(|m| m.sigma.as_ref())
    }

    pub fn b(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.drift.eval(t, x, &mut out);
        out
    }
}

fn spot_check_drift(drift: &dyn Drift, c: &DriftConstants) -> Result<()> {
    let d = drift.dim();
    let mut rng = replica_rng(0x5107, 0);
    let mut x = vec![0.0; d];
    let mut x2 = vec![0.0; d];
    let mut y = vec![0.0; d];
    let mut g1 = vec![0.0; d];
    let mut g2 = vec![0.0; d];
    let mut b = vec![0.0; d];
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    for _ in 0..SPOT_CHECKS {
        let t = if drift.time_dependent() { rng.random_range(0.0..10.0) } else { 0.0 };
        for k in 0..d {
            x[k] = rng.random_range(-5.0..5.0);
            x2[k] = x[k] + rng.random_range(-1.0..1.0);
            y[k] = rng.random_range(-1.0..1.0);
        }
        let ny = norm(&y);
        if ny == 0.0 {
            continue;
        }
        y.iter_mut().for_each(|v| *v /= ny);
        drift.directional(t, &x, &y, &mut g1);
        drift.directional(t, &x2, &y, &mut g2);
        let slack = 1e-9;
        if norm(&g1) > c.k1 * (1.0 + slack) + slack {
            return Err(Error::domain(format!("|∇b| = {} exceeds K1 = {}", norm(&g1), c.k1)));
        }
        let diff: Vec<f64> = g1.iter().zip(&g2).map(|(a, b)| a - b).collect();
        let dx: Vec<f64> = x.iter().zip(&x2).map(|(a, b)| a - b).collect();
        if norm(&diff) > c.k2 * norm(&dx) * (1.0 + slack) + slack {
            return Err(Error::domain(format!("∇b is not {}-Lipschitz", c.k2)));
        }
        if let Some(k3) = c.k3 {
            drift.eval(t, &x, &mut b);
            let inner: f64 = x.iter().zip(&b).map(|(a, b)| a * b).sum();
            let nx = norm(&x);
            if inner > k3 * nx * nx + slack * (1.0 + nx * nx) * (1.0 + k3.abs()) {
                return Err(Error::domain(format!("⟨x, b(x)⟩ exceeds K3|x|² with K3 = {k3}")));
            }
        }
    }
    Ok(())
}
