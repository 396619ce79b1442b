//! Fractional Brownian motion: covariance, Volterra kernel, path sampling,
//! an exact fGn generator and discrete path norms.

mod fgn;
mod norms;
mod path;

pub use fgn::{fgn_autocovariance, sample_fgn_exact, FgnSample, StationaryGaussian};
pub use norms::{path_norms, PathNorms, MAX_NORM_STEPS};
pub use path::{sample_path_pair, PathPair, VolterraPlan};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::Rule;
use crate::special::kernel_constant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Low,
    Brownian,
    High,
}

/// Hurst parameter, validated to lie in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Hurst(f64);

impl Hurst {
    pub fn new(h: f64) -> Result<Hurst> {
        if h.is_finite() && h > 0.0 && h < 1.0 {
            Ok(Hurst(h))
        } else {
            Err(Error::domain(format!("hurst out of range: {h} is not in (0, 1)")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn regime(self) -> Regime {
        if self.0 < 0.5 {
            Regime::Low
        } else if self.0 > 0.5 {
            Regime::High
        } else {
            Regime::Brownian
        }
    }
}

impl TryFrom<f64> for Hurst {
    type Error = Error;
    fn try_from(h: f64) -> Result<Hurst> {
        Hurst::new(h)
    }
}

impl From<Hurst> for f64 {
    fn from(h: Hurst) -> f64 {
        h.0
    }
}

/// Uniform partition `t_i = i T / n` of `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, n_steps: usize) -> Result<TimeGrid> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::domain(format!("horizon must be positive, got {horizon}")));
        }
        if n_steps == 0 {
            return Err(Error::domain("grid needs at least one step"));
        }
        Ok(TimeGrid { horizon, n_steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.n_steps {
            self.horizon
        } else {
            i as f64 * self.dt()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|i| self.node(i)).collect()
    }
}

/// `R_H(t,s) = (t^{2H} + s^{2H} - |t-s|^{2H}) / 2`.
pub fn fbm_covariance(t: f64, s: f64, h: Hurst) -> Result<f64> {
    if t < 0.0 || s < 0.0 {
        return Err(Error::domain(format!("negative time in covariance ({t}, {s})")));
    }
    let e = 2.0 * h.value();
    Ok(0.5 * (t.powf(e) + s.powf(e) - (t - s).abs().powf(e)))
}

/// Volterra kernel `K_H(t,s)` with `R_H(t,s) = ∫_0^{t∧s} K_H(t,r) K_H(s,r) dr`.
pub fn volterra_kernel(t: f64, s: f64, h: Hurst) -> Result<f64> {
    VolterraKernel::new(h).value(t, s)
}

/// Reusable evaluator for the kernel; holds the quadrature rules.
pub struct VolterraKernel {
    h: f64,
    c: f64,
    /// Exponent of `(u - s)` in the inner integral.
    e: f64,
    gl: Rule,
    gj: Rule,
}

impl VolterraKernel {
    pub fn new(h: Hurst) -> VolterraKernel {
        let hv = h.value();
        let e = if hv > 0.5 { hv - 1.5 } else { hv - 0.5 };
        VolterraKernel {
            h: hv,
            c: kernel_constant(hv),
            e,
            gl: Rule::legendre(12),
            gj: Rule::jacobi(12, 0.0, e).expect("exponent above -1"),
        }
    }

    /// Checked evaluation, see [`volterra_kernel`].
    pub fn value(&self, t: f64, s: f64) -> Result<f64> {
        if !(s > 0.0 && s < t) {
            return Err(Error::domain(format!("kernel needs 0 < s < t, got s={s}, t={t}")));
        }
        Ok(self.eval(t, s))
    }

    /// Kernel value for `0 < s < t` (unchecked).
    pub(crate) fn eval(&self, t: f64, s: f64) -> f64 {
        let h = self.h;
        if h == 0.5 {
            return 1.0;
        }
        if h > 0.5 {
            let a = h - 0.5;
            let inner = self.inner(t, s, |u| u.powf(a));
            self.c * s.powf(-a) * inner
        } else {
            let b = 0.5 - h;
            let inner = self.inner(t, s, |u| u.powf(-b - 1.0));
            self.c * ((t / s).powf(-b) * (t - s).powf(-b) + b * s.powf(b) * inner)
        }
    }

    /// `∫_s^t (u-s)^e g(u) du`. The first piece carries the `(u-s)^e`
    /// singularity in a Jacobi weight; later pieces grow geometrically so
    /// that the `u = 0` singularity of `g` stays well separated.
    fn inner(&self, t: f64, s: f64, g: impl Fn(f64) -> f64) -> f64 {
        let len = t - s;
        let mut hi = s.min(len);
        let mut total = self.gj.integrate(0.0, hi, |v| g(s + v));
        let e = self.e;
        while hi < len {
            let lo = hi;
            hi = (4.0 * hi).min(len);
            total += self.gl.integrate(lo, hi, |v| v.powf(e) * g(s + v));
        }
        total
    }
}
