//! Built-in models addressable by name.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fbm::Hurst;

use super::{DiffusionBounds, Diffusion1d, Drift, DriftConstants, SdeModel};

/// Largest value of `|d/dx sech² x| = 2 sech² x |tanh x|`.
const SECH2_SLOPE: f64 = 0.769_800_358_919_501_3;

#[derive(Debug, Clone, Copy)]
struct Zero(usize);

impl Drift for Zero {
    fn dim(&self) -> usize {
        self.0
    }
    fn eval(&self, _t: f64, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn directional(&self, _t: f64, _x: &[f64], _y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

/// `b(x) = -κ x`.
#[derive(Debug, Clone, Copy)]
struct Ou {
    kappa: f64,
    dim: usize,
}

impl Drift for Ou {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(x) {
            *o = -self.kappa * v;
        }
    }
    fn directional(&self, _t: f64, _x: &[f64], y: &[f64], out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(y) {
            *o = -self.kappa * v;
        }
    }
}

/// `b(x)_k = a tanh(x_k)`.
#[derive(Debug, Clone, Copy)]
struct TanhDrift {
    a: f64,
    dim: usize,
}

impl Drift for TanhDrift {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(x) {
            *o = self.a * v.tanh();
        }
    }
    fn directional(&self, _t: f64, x: &[f64], y: &[f64], out: &mut [f64]) {
        for ((o, v), w) in out.iter_mut().zip(x).zip(y) {
            let c = v.cosh();
            *o = self.a * w / (c * c);
        }
    }
}

/// `b(t, x) = -κ x / (1 + t)`.
#[derive(Debug, Clone, Copy)]
struct TimeDecay {
    kappa: f64,
    dim: usize,
}

impl Drift for TimeDecay {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(x) {
            *o = -self.kappa * v / (1.0 + t);
        }
    }
    fn directional(&self, t: f64, _x: &[f64], y: &[f64], out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(y) {
            *o = -self.kappa * v / (1.0 + t);
        }
    }
    fn time_dependent(&self) -> bool {
        true
    }
}

/// `σ(x) = 2 + tanh(x)`.
#[derive(Debug, Clone, Copy)]
struct TanhSigma;

impl Diffusion1d for TanhSigma {
    fn sigma(&self, x: f64) -> f64 {
        2.0 + x.tanh()
    }
    fn dsigma(&self, x: f64) -> f64 {
        let c = x.cosh();
        1.0 / (c * c)
    }
    fn d2sigma(&self, x: f64) -> f64 {
        let c = x.cosh();
        -2.0 * x.tanh() / (c * c)
    }
}

/// Name and parameters of a built-in model.
///
/// Textual forms: `zero`, `ou(κ)`, `tanh_drift(a)`, `time_decay(κ)`,
/// `mult_tanh` and `mult_tanh(a)`. The last is `σ(x) = 2 + tanh x` with drift
/// `a tanh x` (default `a = 0`); `time_decay` is `-κx/(1+t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelSpec {
    Zero,
    Ou(f64),
    TanhDrift(f64),
    TimeDecay(f64),
    MultTanh(f64),
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<ModelSpec> {
        let s = s.trim();
        let (name, arg) = match s.find('(') {
            Some(open) => {
                if !s.ends_with(')') {
                    return Err(Error::domain(format!("malformed model name '{s}'")));
                }
                let inner = s[open + 1..s.len() - 1].trim();
                let v: f64 = inner
                    .parse()
                    .map_err(|_| Error::domain(format!("bad model parameter '{inner}'")))?;
                if !v.is_finite() {
                    return Err(Error::domain(format!("bad model parameter '{inner}'")));
                }
                (s[..open].trim(), Some(v))
            }
            None => (s, None),
        };
        match (name, arg) {
            ("zero", None) => Ok(ModelSpec::Zero),
            ("ou", Some(k)) => Ok(ModelSpec::Ou(k)),
            ("tanh_drift", Some(a)) => Ok(ModelSpec::TanhDrift(a)),
            ("time_decay", Some(k)) => Ok(ModelSpec::TimeDecay(k)),
            ("mult_tanh", None) => Ok(ModelSpec::MultTanh(0.0)),
            ("mult_tanh", Some(a)) => Ok(ModelSpec::MultTanh(a)),
            _ => Err(Error::domain(format!("unknown model '{s}'"))),
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Zero => write!(f, "zero"),
            ModelSpec::Ou(k) => write!(f, "ou({k})"),
            ModelSpec::TanhDrift(a) => write!(f, "tanh_drift({a})"),
            ModelSpec::TimeDecay(k) => write!(f, "time_decay({k})"),
            ModelSpec::MultTanh(a) => write!(f, "mult_tanh({a})"),
        }
    }
}

/// Instantiate a built-in model in dimension `dim`.
pub fn build_model(spec: ModelSpec, hurst: Hurst, dim: usize) -> Result<SdeModel> {
    let name = spec.to_string();
    match spec {
        ModelSpec::Zero => SdeModel::additive(
            name,
            Arc::new(Zero(dim)),
            DriftConstants { k1: 0.0, k2: 0.0, k3: Some(0.0) },
            hurst,
        ),
        ModelSpec::Ou(kappa) => SdeModel::additive(
            name,
            Arc::new(Ou { kappa, dim }),
            DriftConstants { k1: kappa.abs(), k2: 0.0, k3: Some(-kappa) },
            hurst,
        ),
        ModelSpec::TanhDrift(a) => SdeModel::additive(
            name,
            Arc::new(TanhDrift { a, dim }),
            DriftConstants { k1: a.abs(), k2: a.abs() * SECH2_SLOPE, k3: Some(a.max(0.0)) },
            hurst,
        ),
        ModelSpec::TimeDecay(kappa) => SdeModel::additive(
            name,
            Arc::new(TimeDecay { kappa, dim }),
            DriftConstants { k1: kappa.abs(), k2: 0.0, k3: None },
            hurst,
        ),
        ModelSpec::MultTanh(a) => {
            if dim != 1 {
                return Err(Error::domain("mult_tanh is a scalar model"));
            }
            SdeModel::multiplicative(
                name,
                Arc::new(TanhDrift { a, dim: 1 }),
                DriftConstants { k1: a.abs(), k2: a.abs() * SECH2_SLOPE, k3: Some(a.max(0.0)) },
                Arc::new(TanhSigma),
                DiffusionBounds { d3: 1.0, d4: 3.0 },
                hurst,
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trip() {
        for s in ["zero", "ou(1.5)", "tanh_drift(-0.5)", "time_decay(1)", "mult_tanh(-0.5)"] {
            let spec: ModelSpec = s.parse().unwrap();
            assert_eq!(spec.to_string().parse::<ModelSpec>().unwrap(), spec);
        }
        assert_eq!("mult_tanh".parse::<ModelSpec>().unwrap(), ModelSpec::MultTanh(0.0));
        assert!("ou".parse::<ModelSpec>().is_err());
        assert!("ou(x)".parse::<ModelSpec>().is_err());
        assert!("nope(1)".parse::<ModelSpec>().is_err());
    }

    #[test]
    fn sech2_slope_constant() {
        // maximum of 2 sech² x tanh x sits at tanh x = 1/sqrt(3)
        let x = (1.0f64 / 3f64.sqrt()).atanh();
        let c = x.cosh();
        assert!((2.0 * x.tanh() / (c * c) - SECH2_SLOPE).abs() < 1e-15);
    }

    #[test]
    fn registry_enforces_regimes() {
        let h3 = Hurst::new(0.3).unwrap();
        let h7 = Hurst::new(0.7).unwrap();
        assert!(build_model(ModelSpec::TimeDecay(1.0), h3, 1).is_ok());
        assert!(build_model(ModelSpec::TimeDecay(1.0), h7, 1).is_err());
        assert!(build_model(ModelSpec::MultTanh(0.0), h7, 2).is_err());
        assert!(build_model(ModelSpec::TanhDrift(0.8), h7, 3).is_ok());
    }

    #[test]
    fn spot_check_rejects_wrong_constants() {
        let h = Hurst::new(0.7).unwrap();
        let bad = SdeModel::additive(
            "bad",
            Arc::new(Ou { kappa: 2.0, dim: 1 }),
            DriftConstants { k1: 1.0, k2: 0.0, k3: None },
            h,
        );
        assert!(bad.is_err());
        let bad = SdeModel::additive(
            "bad",
            Arc::new(TanhDrift { a: 1.0, dim: 1 }),
            DriftConstants { k1: 1.0, k2: 0.1, k3: None },
            h,
        );
        assert!(bad.is_err());
    }
}
