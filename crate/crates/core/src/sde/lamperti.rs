use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::Rule;

use super::{Diffusion1d, Drift, DriftConstants};

/// Tabulated Lamperti map `F(x) = ∫_0^x dz / σ(z)` and its inverse.
#[derive(Debug, Clone)]
pub struct Lamperti {
    sigma: Arc<dyn Diffusion1d>,
    lo: f64,
    h: f64,
    xs: Vec<f64>,
    fs: Vec<f64>,
    rule: Rule,
}

impl Lamperti {
    /// Tabulate `F` on `range` (which must contain 0) with `n_table` cells.
    pub fn new(sigma: Arc<dyn Diffusion1d>, range: (f64, f64), n_table: usize) -> Result<Lamperti> {
        let (lo, hi) = range;
        if !(lo < 0.0 && hi > 0.0) || n_table < 2 {
            return Err(Error::domain("Lamperti range must straddle 0 with at least two cells"));
        }
        let h = (hi - lo) / n_table as f64;
        let rule = Rule::legendre(8);
        let xs: Vec<f64> = (0..=n_table).map(|k| lo + k as f64 * h).collect();
        let inv = |z: f64| 1.0 / sigma.sigma(z);
        let mut fs = Vec::with_capacity(n_table + 1);
        let mut acc = 0.0;
        fs.push(0.0);
        for k in 0..n_table {
            acc += rule.integrate(xs[k], xs[k + 1], inv);
            fs.push(acc);
        }
        // re-anchor so that F(0) = 0
        let k0 = ((0.0 - lo) / h).floor() as usize;
        let shift = fs[k0] + rule.integrate(xs[k0], 0.0, inv);
        fs.iter_mut().for_each(|f| *f -= shift);
        if fs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("σ must be positive on the Lamperti range"));
        }
        Ok(Lamperti {
            sigma,
            lo,
            h,
            xs,
            fs,
            rule,
        })
    }

    /// Tabulated `x`-range.
    pub fn range(&self) -> (f64, f64) {
        (self.lo, *self.xs.last().expect("table"))
    }

    /// Image of the tabulated range under `F`.
    pub fn image_range(&self) -> (f64, f64) {
        (self.fs[0], *self.fs.last().expect("table"))
    }

    pub fn sigma(&self) -> &dyn Diffusion1d {
        self.sigma.as_ref()
    }

    pub fn forward(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.range();
        if !(x >= lo && x <= hi) {
            return Err(Error::domain(format!("x = {x} outside Lamperti range [{lo}, {hi}]")));
        }
        let k = (((x - lo) / self.h).floor() as usize).min(self.xs.len() - 2);
        Ok(self.fs[k] + self.rule.integrate(self.xs[k], x, |z| 1.0 / self.sigma.sigma(z)))
    }

    /// `F^{-1}(z)`: cubic Hermite interpolation of the table followed by one
    /// Newton step on `F(x) = z`.
    pub fn inverse(&self, z: f64) -> Result<f64> {
        let (flo, fhi) = self.image_range();
        if !(z >= flo && z <= fhi) {
            return Err(Error::domain(format!("y = {z} outside Lamperti image [{flo}, {fhi}]")));
        }
        let k = match self.fs.binary_search_by(|f| f.total_cmp(&z)) {
            Ok(k) => return Ok(self.xs[k]),
            Err(k) => k.clamp(1, self.fs.len() - 1) - 1,
        };
        let (f0, f1) = (self.fs[k], self.fs[k + 1]);
        let (x0, x1) = (self.xs[k], self.xs[k + 1]);
        let dz = f1 - f0;
        let t = (z - f0) / dz;
        let m0 = self.sigma.sigma(x0) * dz;
        let m1 = self.sigma.sigma(x1) * dz;
        let t2 = t * t;
        let t3 = t2 * t;
        let x = (2.0 * t3 - 3.0 * t2 + 1.0) * x0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * x1
            + (t3 - t2) * m1;
        let x = x.clamp(x0, x1);
        let fx = self.fs[k] + self.rule.integrate(x0, x, |v| 1.0 / self.sigma.sigma(v));
        Ok(x - (fx - z) * self.sigma.sigma(x))
    }
}

/// Drift of the transformed equation, `b̃(y) = b(F^{-1}(y)) / σ(F^{-1}(y))`.
///
/// Points outside the tabulated image evaluate to NaN, which the solver
/// reports as a failure at that step.
#[derive(Debug, Clone)]
pub struct LampertiDrift {
    drift: Arc<dyn Drift>,
    sigma: Arc<dyn Diffusion1d>,
    map: Arc<Lamperti>,
}

impl LampertiDrift {
    pub fn new(drift: Arc<dyn Drift>, sigma: Arc<dyn Diffusion1d>, map: Arc<Lamperti>) -> Self {
        LampertiDrift { drift, sigma, map }
    }

    /// `b̃'` expressed in the original variable:
    /// `(b'(x) σ(x) - b(x) σ'(x)) / σ(x)`.
    fn slope_at(&self, x: f64) -> f64 {
        let mut b = [0.0];
        let mut db = [0.0];
        self.drift.eval(0.0, &[x], &mut b);
        self.drift.directional(0.0, &[x], &[1.0], &mut db);
        let s = self.sigma.sigma(x);
        (db[0] * s - b[0] * self.sigma.dsigma(x)) / s
    }

    /// Sup bounds of `|b̃'|` and `|b̃''|` from a dense scan of the tabulated
    /// range, inflated by 0.1% to cover the gaps between scan points.
    pub fn scan_constants(&self) -> DriftConstants {
        let (lo, hi) = self.map.range();
        let n = 20_000;
        let eps = 1e-5;
        let mut k1 = 0.0f64;
        let mut k2 = 0.0f64;
        for i in 0..=n {
            let x = lo + (hi - lo) * i as f64 / n as f64;
            k1 = k1.max(self.slope_at(x).abs());
            let d = (self.slope_at(x + eps) - self.slope_at(x - eps)) / (2.0 * eps);
            k2 = k2.max((self.sigma.sigma(x) * d).abs());
        }
        DriftConstants {
            k1: k1 * 1.001,
            k2: k2 * 1.001,
            k3: None,
        }
    }
}

impl Drift for LampertiDrift {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, _t: f64, y: &[f64], out: &mut [f64]) {
        out[0] = match self.map.inverse(y[0]) {
            Ok(x) => {
                let mut b = [0.0];
                self.drift.eval(0.0, &[x], &mut b);
                b[0] / self.sigma.sigma(x)
            }
            Err(_) => f64::NAN,
        };
    }

    fn directional(&self, _t: f64, y: &[f64], v: &[f64], out: &mut [f64]) {
        out[0] = match self.map.inverse(y[0]) {
            Ok(x) => self.slope_at(x) * v[0],
            Err(_) => f64::NAN,
        };
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug)]
    struct Const(f64);
    impl Diffusion1d for Const {
        fn sigma(&self, _x: f64) -> f64 {
            self.0
        }
        fn dsigma(&self, _x: f64) -> f64 {
            0.0
        }
        fn d2sigma(&self, _x: f64) -> f64 {
            0.0
        }
    }

    #[derive(Debug)]
    struct Tanh;
    impl Diffusion1d for Tanh {
        fn sigma(&self, x: f64) -> f64 {
            2.0 + x.tanh()
        }
        fn dsigma(&self, x: f64) -> f64 {
            1.0 / x.cosh().powi(2)
        }
        fn d2sigma(&self, x: f64) -> f64 {
            -2.0 * x.tanh() / x.cosh().powi(2)
        }
    }

    #[test]
    fn constant_sigma() {
        let one = Lamperti::new(Arc::new(Const(1.0)), (-10.0, 10.0), 100).unwrap();
        let two = Lamperti::new(Arc::new(Const(2.0)), (-10.0, 10.0), 100).unwrap();
        for x in [-3.3, 0.0, 0.7, 9.99] {
            assert!((one.forward(x).unwrap() - x).abs() < 1e-14);
            assert!((one.inverse(x).unwrap() - x).abs() < 1e-14);
            assert!((two.forward(x).unwrap() - x / 2.0).abs() < 1e-14);
            assert!((two.inverse(x / 2.0).unwrap() - x).abs() < 1e-13);
        }
    }

    #[test]
    fn tanh_sigma_round_trip_and_ode() {
        let map = Lamperti::new(Arc::new(Tanh), (-20.0, 20.0), 1000).unwrap();
        assert!(map.forward(0.0).unwrap().abs() < 1e-15);
        for i in 0..100 {
            let x = -8.0 + 16.0 * i as f64 / 99.0;
            let back = map.inverse(map.forward(x).unwrap()).unwrap();
            assert!((back - x).abs() < 1e-10, "{x}: {back}");
            let e = 1e-5;
            let slope = (map.forward(x + e).unwrap() - map.forward(x - e).unwrap()) / (2.0 * e);
            assert!((slope * (2.0 + x.tanh()) - 1.0).abs() < 1e-8);
        }
        assert!(map.forward(25.0).is_err());
        assert!(map.inverse(1e3).is_err());
    }
}
