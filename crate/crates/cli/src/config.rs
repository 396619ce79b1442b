//! Experiment configuration: a TOML file with one table per concern.
//!
//! ```toml
//! experiment = "bismut_vs_fd"
//!
//! [model]
//! name = "ou(1.0)"
//! hurst = 0.7
//!
//! [grid]
//! horizon = 1.0
//! n_steps = 256
//!
//! [mc]
//! n_paths = 20000
//! seed = 7
//!
//! [bismut_vs_fd]
//! x = [0.5]
//! y = [1.0]
//! ```
//!
//! Unknown keys are rejected everywhere.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use fracsde::estimators::TestFunction;
use fracsde::fbm::{Hurst, Regime, TimeGrid, MAX_NORM_STEPS};
use fracsde::sde::{build_model, ModelSpec, SdeModel};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("{}{msg}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Invalid {
        /// Dotted key the message is about, such as `harnack.pairs[2].x`.
        key: Option<String>,
        line: Option<usize>,
        msg: String,
    },
}

/// Validation error; the key is taken from the leading dotted token of the
/// message when there is one.
fn invalid(msg: impl Into<String>) -> ConfigError {
    let msg = msg.into();
    let head = msg.split([' ', ':']).next().unwrap_or("");
    let is_key = head.contains('.')
        && head.chars().all(|c| c.is_ascii_alphanumeric() || "_.[]".contains(c));
    ConfigError::Invalid {
        key: is_key.then(|| head.to_string()),
        line: None,
        msg,
    }
}

fn invalid_at(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: Some(key.to_string()),
        line: None,
        msg: msg.into(),
    }
}

/// 1-based line of a dotted key in `src`, for keys written in the plain
/// `[section]` / `[[array]]` / `key = value` style.
fn locate(src: &str, key: &str) -> Option<usize> {
    let segs: Vec<&str> = key.split('.').collect();
    let (leaf, tables) = segs.split_last()?;
    let leaf = leaf.split('[').next()?;
    let mut header = String::new();
    let mut occurrence = 0;
    for (k, seg) in tables.iter().enumerate() {
        let name = seg.split('[').next()?;
        if k > 0 {
            header.push('.');
        }
        header.push_str(name);
        if let Some(idx) = seg.split('[').nth(1) {
            occurrence = idx.trim_end_matches(']').parse().ok()?;
        }
    }
    let lines: Vec<&str> = src.lines().collect();
    let is_header = |l: &str| l.trim_start().starts_with('[');
    let start = if tables.is_empty() {
        0
    } else {
        let mut seen = 0;
        let mut found = None;
        for (i, l) in lines.iter().enumerate() {
            let t = l.trim();
            let name = t.trim_start_matches('[').trim_end_matches(']').trim();
            if t.starts_with('[') && name == header {
                if seen == occurrence {
                    found = Some(i);
                    break;
                }
                seen += 1;
            }
        }
        found?
    };
    let body = if tables.is_empty() { 0 } else { start + 1 };
    for (i, l) in lines.iter().enumerate().skip(body) {
        if is_header(l) {
            break;
        }
        let t = l.trim_start();
        if t.strip_prefix(leaf).is_some_and(|r| r.trim_start().starts_with('=')) {
            return Some(i + 1);
        }
    }
    (!tables.is_empty()).then_some(start + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    CovarianceValidation,
    OperatorValidation,
    BismutVsFd,
    IbpCheck,
    Harnack,
    ShiftHarnack,
    InvariantMeasure,
    DensitySmoke,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::CovarianceValidation => "covariance_validation",
            ExperimentKind::OperatorValidation => "operator_validation",
            ExperimentKind::BismutVsFd => "bismut_vs_fd",
            ExperimentKind::IbpCheck => "ibp_check",
            ExperimentKind::Harnack => "harnack",
            ExperimentKind::ShiftHarnack => "shift_harnack",
            ExperimentKind::InvariantMeasure => "invariant_measure",
            ExperimentKind::DensitySmoke => "density_smoke",
        }
    }

    /// Name of the experiment-specific table.
    fn section(self) -> &'static str {
        match self {
            ExperimentKind::CovarianceValidation => "covariance",
            ExperimentKind::OperatorValidation => "operators",
            ExperimentKind::BismutVsFd => "bismut_vs_fd",
            ExperimentKind::IbpCheck => "ibp",
            ExperimentKind::Harnack => "harnack",
            ExperimentKind::ShiftHarnack => "shift_harnack",
            ExperimentKind::InvariantMeasure => "invariant",
            ExperimentKind::DensitySmoke => "density",
        }
    }

    fn uses_mc(self) -> bool {
        self != ExperimentKind::OperatorValidation
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// `zero`, `ou(κ)`, `tanh_drift(a)`, `time_decay(κ)`, `mult_tanh(a)`.
    pub name: String,
    pub hurst: Hurst,
    #[serde(default = "one")]
    pub dim: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub horizon: f64,
    pub n_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub n_paths: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovarianceSection {
    /// Subgrid size for the covariance matrix.
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_z")]
    pub z_tolerance: f64,
    /// Relative tolerance on `Var B_T`.
    #[serde(default = "default_var_tol")]
    pub variance_tolerance: f64,
}

impl Default for CovarianceSection {
    fn default() -> Self {
        CovarianceSection {
            points: default_points(),
            z_tolerance: default_z(),
            variance_tolerance: default_var_tol(),
        }
    }
}

fn default_points() -> usize {
    8
}
fn default_z() -> f64 {
    4.0
}
fn default_var_tol() -> f64 {
    0.03
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSection {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Power `β` of the test function `t^β` for the integral check.
    #[serde(default = "default_power")]
    pub power: f64,
    /// Relative error of `I^α t^β` at `t ≥ T/4`.
    #[serde(default = "default_int_tol")]
    pub integral_tolerance: f64,
    /// Sup error of `D^α I^α f - f` for `f = sin`.
    #[serde(default = "default_inv_tol")]
    pub inverse_tolerance: f64,
    /// Relative spread of `K^{-1}(t^{H+1/2})` and `K^{-1}(t^{H+3/2})/t`
    /// over `t ≥ T/4`; both are constant in exact arithmetic.
    #[serde(default = "default_kernel_tol")]
    pub kernel_tolerance: f64,
}

impl Default for OperatorSection {
    fn default() -> Self {
        OperatorSection {
            alpha: default_alpha(),
            power: default_power(),
            integral_tolerance: default_int_tol(),
            inverse_tolerance: default_inv_tol(),
            kernel_tolerance: default_kernel_tol(),
        }
    }
}

fn default_alpha() -> f64 {
    0.5
}
fn default_power() -> f64 {
    1.0
}
fn default_int_tol() -> f64 {
    1e-3
}
fn default_inv_tol() -> f64 {
    1e-2
}
fn default_kernel_tol() -> f64 {
    2e-2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradientSection {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Finite-difference step; defaults to `0.05/|y|`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fd_eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_function: Option<TestFunction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointPair {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnackSection {
    pub p: f64,
    pub pairs: Vec<PointPair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default = "default_fernique")]
    pub n_fernique_paths: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_function: Option<TestFunction>,
}

fn default_fernique() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftHarnackSection {
    pub p: f64,
    pub x: Vec<f64>,
    pub shifts: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default = "default_fernique")]
    pub n_fernique_paths: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_function: Option<TestFunction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvariantSection {
    pub x0: Vec<f64>,
    /// Blocks per chain; `grid` describes one block and `mc.n_paths` is the
    /// number of chains.
    pub n_blocks: usize,
    #[serde(default = "default_l")]
    pub l: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default = "default_fernique")]
    pub n_norm_paths: usize,
    /// Largest relative change of the Cesàro sequence over the last
    /// `window` blocks.
    #[serde(default = "default_stab")]
    pub stability_tolerance: f64,
    #[serde(default = "default_window")]
    pub window: usize,
}

fn default_l() -> f64 {
    1.0
}
fn default_stab() -> f64 {
    0.02
}
fn default_window() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySection {
    pub x: Vec<f64>,
    #[serde(default = "default_bins")]
    pub n_bins: usize,
}

fn default_bins() -> usize {
    40
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Number of driving paths written as CSV.
    #[serde(default)]
    pub export_paths: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub model: ModelSection,
    pub grid: GridSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariance: Option<CovarianceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operators: Option<OperatorSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bismut_vs_fd: Option<GradientSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ibp: Option<GradientSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub harnack: Option<HarnackSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift_harnack: Option<ShiftHarnackSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invariant: Option<InvariantSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensitySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
}

/// A configuration that passed validation, with the objects it describes.
pub struct Validated {
    pub config: ExperimentConfig,
    pub model: SdeModel,
    pub grid: TimeGrid,
}

impl ExperimentConfig {
    pub fn parse(src: &str) -> Result<ExperimentConfig, ConfigError> {
        toml::from_str(src).map_err(|e| ConfigError::Parse(e.to_string().trim_end().to_string()))
    }

    /// Read and parse a file, returning the source for [`Self::validate_in`].
    pub fn load(path: &str) -> Result<(ExperimentConfig, String), ConfigError> {
        let src = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_string(),
            source,
        })?;
        Ok((ExperimentConfig::parse(&src)?, src))
    }

    /// [`Self::validate`], with error messages pointing at lines of `src`.
    pub fn validate_in(self, src: &str) -> Result<Validated, ConfigError> {
        self.validate().map_err(|e| match e {
            ConfigError::Invalid { key: Some(key), line: None, msg } => ConfigError::Invalid {
                line: locate(src, &key),
                key: Some(key),
                msg,
            },
            e => e,
        })
    }

    #[cfg(test)]
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    /// Schema and domain checks; builds the model and grid but runs no
    /// simulation.
    pub fn validate(self) -> Result<Validated, ConfigError> {
        let kind = self.experiment;
        let spec = ModelSpec::from_str(&self.model.name).map_err(|e| invalid(format!("model.name: {e}")))?;
        let hurst = self.model.hurst;
        let regime = hurst.regime();
        let model = build_model(spec, hurst, self.model.dim).map_err(|e| invalid(format!("model: {e}")))?;
        let grid = TimeGrid::new(self.grid.horizon, self.grid.n_steps).map_err(|e| invalid(format!("grid: {e}")))?;
        let dim = model.dim();

        let sections = [
            ("covariance", self.covariance.is_some()),
            ("operators", self.operators.is_some()),
            ("bismut_vs_fd", self.bismut_vs_fd.is_some()),
            ("ibp", self.ibp.is_some()),
            ("harnack", self.harnack.is_some()),
            ("shift_harnack", self.shift_harnack.is_some()),
            ("invariant", self.invariant.is_some()),
            ("density", self.density.is_some()),
        ];
        for (name, present) in sections {
            if present && name != kind.section() {
                return Err(invalid(format!(
                    "section [{name}] does not apply to experiment {}",
                    kind.name()
                )));
            }
        }
        if let Some(mc) = &self.mc {
            if mc.seed > i64::MAX as u64 {
                return Err(invalid("mc.seed must fit in a signed 64-bit integer"));
            }
        }
        if self.output.as_ref().is_some_and(|o| o.export_paths > 0) {
            let n = self.mc.map_or(0, |m| m.n_paths);
            if self.output.as_ref().unwrap().export_paths > n {
                return Err(invalid("output.export_paths needs an [mc] section with at least that many paths"));
            }
        }
        if kind.uses_mc() {
            let mc = self
                .mc
                .ok_or_else(|| invalid(format!("experiment {} needs an [mc] section with n_paths and seed", kind.name())))?;
            if mc.n_paths == 0 {
                return Err(invalid("mc.n_paths must be positive"));
            }
        }
        let needs_section = |present: bool| {
            if present {
                Ok(())
            } else {
                Err(invalid(format!("experiment {} needs a [{}] section", kind.name(), kind.section())))
            }
        };
        let point = |v: &[f64], what: &str| {
            if v.len() != dim || v.iter().any(|a| !a.is_finite()) {
                Err(invalid(format!("{what} must be a finite vector of length {dim}")))
            } else {
                Ok(())
            }
        };
        let test_fn = |f: &Option<TestFunction>, positive: bool, what: &str| -> Result<(), ConfigError> {
            if let Some(f) = f {
                f.check_dim(dim).map_err(|e| invalid(format!("{what}.test_function: {e}")))?;
                if positive && !f.is_positive_bounded() {
                    return Err(invalid(format!("{what}.test_function must be positive and bounded")));
                }
            }
            Ok(())
        };
        let additive = || {
            if model.is_additive() {
                Ok(())
            } else {
                Err(invalid(format!("{} needs an additive-noise model", kind.name())))
            }
        };
        let norm_grid = || {
            if grid.n_steps() > MAX_NORM_STEPS {
                Err(invalid(format!("grid.n_steps must be at most {MAX_NORM_STEPS} for path norms")))
            } else {
                Ok(())
            }
        };

        match kind {
            ExperimentKind::CovarianceValidation => {
                if let Some(c) = &self.covariance {
                    if c.points == 0 || c.points > grid.n_steps() {
                        return Err(invalid("covariance.points must be in 1..=grid.n_steps"));
                    }
                }
            }
            ExperimentKind::OperatorValidation => {
                if let Some(o) = &self.operators {
                    if !(o.alpha > 0.0 && o.alpha < 1.0) {
                        return Err(invalid("operators.alpha must lie in (0, 1)"));
                    }
                    if !(o.power >= 0.0) {
                        return Err(invalid("operators.power must be nonnegative"));
                    }
                    if ![o.integral_tolerance, o.inverse_tolerance, o.kernel_tolerance].iter().all(|t| *t > 0.0) {
                        return Err(invalid("operators tolerances must be positive"));
                    }
                }
            }
            ExperimentKind::BismutVsFd => {
                if regime != Regime::High {
                    return Err(invalid_at("model.hurst", "bismut_vs_fd requires H>1/2"));
                }
                additive()?;
                needs_section(self.bismut_vs_fd.is_some())?;
                let s = self.bismut_vs_fd.as_ref().unwrap();
                point(&s.x, "bismut_vs_fd.x")?;
                point(&s.y, "bismut_vs_fd.y")?;
                test_fn(&s.test_function, false, "bismut_vs_fd")?;
                if let Some(e) = s.fd_eps {
                    if !(e > 0.0) {
                        return Err(invalid("bismut_vs_fd.fd_eps must be positive"));
                    }
                } else if s.y.iter().all(|v| *v == 0.0) {
                    return Err(invalid("bismut_vs_fd.y = 0 needs an explicit fd_eps"));
                }
            }
            ExperimentKind::IbpCheck => {
                if regime == Regime::Brownian {
                    return Err(invalid_at("model.hurst", "ibp_check requires H != 1/2"));
                }
                additive()?;
                needs_section(self.ibp.is_some())?;
                let s = self.ibp.as_ref().unwrap();
                point(&s.x, "ibp.x")?;
                point(&s.y, "ibp.y")?;
                test_fn(&s.test_function, false, "ibp")?;
                if s.fd_eps.is_some() {
                    return Err(invalid("ibp.fd_eps is not used by ibp_check"));
                }
            }
            ExperimentKind::Harnack => {
                if regime != Regime::High {
                    return Err(invalid_at("model.hurst", "harnack requires H>1/2"));
                }
                if model.time_dependent() {
                    return Err(invalid("harnack needs a time-homogeneous drift"));
                }
                norm_grid()?;
                needs_section(self.harnack.is_some())?;
                let s = self.harnack.as_ref().unwrap();
                if !(s.p > 1.0) {
                    return Err(invalid("harnack.p must exceed 1"));
                }
                if s.pairs.is_empty() {
                    return Err(invalid("harnack.pairs must not be empty"));
                }
                for (k, pair) in s.pairs.iter().enumerate() {
                    point(&pair.x, &format!("harnack.pairs[{k}].x"))?;
                    point(&pair.y, &format!("harnack.pairs[{k}].y"))?;
                }
                test_fn(&s.test_function, true, "harnack")?;
                check_delta(s.delta, hurst)?;
            }
            ExperimentKind::ShiftHarnack => {
                if regime == Regime::Brownian {
                    return Err(invalid_at("model.hurst", "shift_harnack requires H != 1/2"));
                }
                additive()?;
                norm_grid()?;
                needs_section(self.shift_harnack.is_some())?;
                let s = self.shift_harnack.as_ref().unwrap();
                if !(s.p > 1.0) {
                    return Err(invalid("shift_harnack.p must exceed 1"));
                }
                point(&s.x, "shift_harnack.x")?;
                if s.shifts.is_empty() {
                    return Err(invalid("shift_harnack.shifts must not be empty"));
                }
                for (k, y) in s.shifts.iter().enumerate() {
                    point(y, &format!("shift_harnack.shifts[{k}]"))?;
                }
                test_fn(&s.test_function, true, "shift_harnack")?;
                if regime == Regime::High {
                    if model.time_dependent() {
                        return Err(invalid("shift_harnack with H>1/2 needs a time-homogeneous drift"));
                    }
                    check_delta(s.delta, hurst)?;
                }
            }
            ExperimentKind::InvariantMeasure => {
                if regime != Regime::High {
                    return Err(invalid_at("model.hurst", "invariant_measure requires H>1/2"));
                }
                additive()?;
                norm_grid()?;
                if model.constants.k3.is_none() {
                    return Err(invalid("invariant_measure needs a model with a dissipativity constant K3"));
                }
                needs_section(self.invariant.is_some())?;
                let s = self.invariant.as_ref().unwrap();
                point(&s.x0, "invariant.x0")?;
                if s.n_blocks == 0 {
                    return Err(invalid("invariant.n_blocks must be positive"));
                }
                if s.window == 0 || s.window >= s.n_blocks {
                    return Err(invalid("invariant.window must be in 1..n_blocks"));
                }
                let h = hurst.value();
                let beta = s.beta.unwrap_or((0.5 + h) / 2.0);
                if !(beta > 0.5 && beta < h) {
                    return Err(invalid("invariant.beta must lie in (1/2, H)"));
                }
                if !(s.l > 0.0) || s.n_norm_paths == 0 {
                    return Err(invalid("invariant.l and invariant.n_norm_paths must be positive"));
                }
            }
            ExperimentKind::DensitySmoke => {
                if regime != Regime::Low {
                    return Err(invalid_at("model.hurst", "density_smoke requires H<1/2"));
                }
                if dim != 1 {
                    return Err(invalid("density_smoke needs a scalar model"));
                }
                additive()?;
                needs_section(self.density.is_some())?;
                let s = self.density.as_ref().unwrap();
                point(&s.x, "density.x")?;
                if s.n_bins == 0 {
                    return Err(invalid("density.n_bins must be positive"));
                }
            }
        }
        Ok(Validated {
            config: self,
            model,
            grid,
        })
    }
}

fn check_delta(delta: Option<f64>, hurst: Hurst) -> Result<(), ConfigError> {
    let h = hurst.value();
    let d = delta.unwrap_or((h - 0.5) / 2.0);
    if !(d > 0.0 && d < 0.5 && h - d > 0.5) {
        return Err(invalid(format!("delta = {d} must satisfy 0 < delta < 1/2 and H - delta > 1/2")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "experiment = \"harnack\"\n[model]\nname = \"ou(1.0)\"\nhurst = 0.7\n[grid]\nhorizon = 1.0\nn_steps = 32\n[mc]\nn_paths = 10\nseed = 1\n[harnack]\np = 2.0\n[[harnack.pairs]]\nx = [0.0]\ny = [0.1]\n";

    #[test]
    fn round_trip_is_stable() {
        let c = ExperimentConfig::parse(BASE).unwrap();
        let again = ExperimentConfig::parse(&c.to_toml()).unwrap();
        assert_eq!(c, again);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let src = BASE.replace("seed = 1", "seed = 1\nextra = 3");
        let e = ExperimentConfig::parse(&src).unwrap_err().to_string();
        assert!(e.contains("extra"), "{e}");
    }

    #[test]
    fn test_function_tables_parse() {
        let src = format!("{BASE}[harnack.test_function]\nkind = \"tanh_squared\"\na = [1.0]\noffset = 1.0\n");
        let c = ExperimentConfig::parse(&src).unwrap();
        assert_eq!(
            c.harnack.as_ref().unwrap().test_function,
            Some(TestFunction::TanhSquared { a: vec![1.0], offset: 1.0 })
        );
        let bad = src.replace("offset = 1.0\n", "offset = -0.5\n");
        let e = ExperimentConfig::parse(&bad).unwrap().validate().err().unwrap().to_string();
        assert!(e.contains("positive"), "{e}");
    }

    #[test]
    fn regime_gates() {
        let low = BASE.replace("hurst = 0.7", "hurst = 0.3");
        let e = ExperimentConfig::parse(&low).unwrap().validate_in(&low).err().unwrap().to_string();
        assert_eq!(e, "line 4: harnack requires H>1/2");
    }

    #[test]
    fn locate_finds_keys() {
        assert_eq!(locate(BASE, "experiment"), Some(1));
        assert_eq!(locate(BASE, "grid.n_steps"), Some(7));
        assert_eq!(locate(BASE, "harnack.pairs[0].y"), Some(15));
        assert_eq!(locate(BASE, "harnack.pairs[1].y"), None);
        let src = format!("{BASE}[[harnack.pairs]]\nx = [1.0]\ny = [nan]\n");
        let e = ExperimentConfig::parse(&src).unwrap().validate_in(&src).err().unwrap().to_string();
        assert!(e.starts_with("line 18: harnack.pairs[1].y"), "{e}");
    }
}
