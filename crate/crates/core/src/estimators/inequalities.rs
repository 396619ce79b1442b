use serde::Serialize;

use crate::error::{Error, Result};
use crate::fbm::{Regime, TimeGrid, VolterraPlan};
use crate::rng::sub_seed;
use crate::sde::SdeModel;
use crate::stats::mean_se;
use crate::weights::{
    fernique_estimate, harnack_constants, low_shift_constant, pair_point_bounds, FerniqueEstimate,
    HarnackConstants,
};

use super::{check_point, run_replicas, solve, McConfig, McEstimate, TestFunction};

/// Outcome of one Harnack-type comparison `lhs ≤ rhs · factor`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub x: Vec<f64>,
    /// Second point (Harnack) or shift (shift Harnack).
    pub y: Vec<f64>,
    /// `(P_T f(x))^p`, with a delta-method standard error.
    pub lhs: McEstimate,
    pub rhs: McEstimate,
    pub exponent_factor: f64,
    /// `rhs · factor - lhs`.
    pub margin: f64,
    /// Standard error of the margin; both sides use the same paths.
    pub margin_se: f64,
    pub distance: f64,
    pub radius: f64,
    pub admissible: bool,
    pub constants: Option<HarnackConstants>,
}

/// Fernique estimate and `δ` shared by all checks of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarnackSetup {
    pub delta: f64,
    pub fernique: FerniqueEstimate,
}

impl HarnackSetup {
    /// `δ` defaults to `(H - 1/2)/2`.
    pub fn new(model: &SdeModel, grid: TimeGrid, delta: Option<f64>, n_fernique_paths: usize, seed: u64) -> Result<HarnackSetup> {
        let h = model.hurst.value();
        if model.hurst.regime() != Regime::High {
            return Err(Error::domain("Harnack constants require H > 1/2"));
        }
        let delta = delta.unwrap_or((h - 0.5) / 2.0);
        if !(delta > 0.0 && delta < 0.5 && h - delta > 0.5) {
            return Err(Error::domain(format!("δ = {delta} must satisfy 0 < δ < 1/2 and H - δ > 1/2")));
        }
        let fernique = fernique_estimate(grid, model.hurst, model.dim(), delta, n_fernique_paths, sub_seed(seed, 1))?;
        Ok(HarnackSetup { delta, fernique })
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn check_p(p: f64, f: &TestFunction) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::domain("p must exceed 1"));
    }
    if !f.is_positive_bounded() {
        return Err(Error::domain("Harnack checks need a positive bounded test function"));
    }
    Ok(())
}

/// Assemble a report from per-path `f(X^x_T)` and `g` values, where the
/// right side is the mean of `g`.
fn report(
    lhs_vals: &[f64],
    rhs_vals: &[f64],
    p: f64,
    factor: f64,
    cfg: &McConfig,
    n_failed: usize,
) -> (McEstimate, McEstimate, f64, f64) {
    let (m, se) = mean_se(lhs_vals);
    let slope = p * m.powf(p - 1.0);
    let lhs = McEstimate {
        mean: m.powf(p),
        std_error: slope * se,
        n_paths: lhs_vals.len(),
        seed: cfg.seed,
        n_failed,
    };
    let (r, rse) = mean_se(rhs_vals);
    let rhs = McEstimate {
        mean: r,
        std_error: rse,
        n_paths: rhs_vals.len(),
        seed: cfg.seed,
        n_failed,
    };
    if !factor.is_finite() {
        return (lhs, rhs, f64::INFINITY, 0.0);
    }
    let influence: Vec<f64> = lhs_vals
        .iter()
        .zip(rhs_vals)
        .map(|(a, b)| factor * b - slope * a)
        .collect();
    let (_, margin_se) = mean_se(&influence);
    (lhs, rhs, factor * r - m.powf(p), margin_se)
}

/// Harnack check `(P_T f(x))^p ≤ P_T f^p(y) exp[p/(p-1) c |x-y|²]` for each
/// pair, all on the same paths.
///
/// Scalar multiplicative models go through the Lamperti transform: the
/// constants come from the transformed drift, the exponent is divided by
/// `d3²` and the radius multiplied by `d3`.
pub fn harnack_sweep(
    model: &SdeModel,
    setup: &HarnackSetup,
    pairs: &[(Vec<f64>, Vec<f64>)],
    p: f64,
    f: &TestFunction,
    cfg: &McConfig,
) -> Result<Vec<InequalityReport>> {
    check_p(p, f)?;
    f.check_dim(model.dim())?;
    if model.hurst.regime() != Regime::High {
        return Err(Error::domain("harnack requires H>1/2"));
    }
    if model.time_dependent() {
        return Err(Error::domain("harnack needs a time-homogeneous drift"));
    }
    let t = cfg.grid.horizon();
    let mut shells = Vec::with_capacity(pairs.len());
    for (x, y) in pairs {
        check_point(model, x, "x")?;
        check_point(model, y, "y")?;
        let dist = norm(&x.iter().zip(y).map(|(a, b)| a - b).collect::<Vec<_>>());
        let (c, factor, radius) = match model.lamperti() {
            None => {
                let (xn, bn) = pair_point_bounds(model, x, y);
                let c = harnack_constants(model, xn, bn, t, setup.delta, &setup.fernique)?;
                let factor = c.factor(p, dist);
                let radius = c.radius(p);
                (c, factor, radius)
            }
            Some(map) => {
                let tm = model.lamperti_model()?;
                let d3 = model.diffusion_bounds().map_or(1.0, |b| b.d3);
                let (zx, zy) = (map.forward(x[0])?, map.forward(y[0])?);
                let (xn, bn) = pair_point_bounds(tm, &[zx], &[zy]);
                let c = harnack_constants(tm, xn, bn, t, setup.delta, &setup.fernique)?;
                let factor = c.factor(p, dist / d3);
                let radius = d3 * c.radius(p);
                (c, factor, radius)
            }
        };
        shells.push((c, factor, radius, dist));
    }
    let plan = VolterraPlan::new(cfg.grid, model.hurst);
    let r = run_replicas(cfg.n_paths, |i| {
        let path = plan.sample(model.dim(), cfg.seed, i);
        let mut out = Vec::with_capacity(2 * pairs.len());
        for (x, y) in pairs {
            out.push(f.eval(solve(model, x, &path)?.terminal()));
            out.push(f.eval(solve(model, y, &path)?.terminal()).powf(p));
        }
        Ok(out)
    })?;
    let mut reports = Vec::with_capacity(pairs.len());
    for (k, ((x, y), (c, factor, radius, dist))) in pairs.iter().zip(shells).enumerate() {
        let a: Vec<f64> = r.values.iter().map(|v| v[2 * k]).collect();
        let b: Vec<f64> = r.values.iter().map(|v| v[2 * k + 1]).collect();
        let (lhs, rhs, margin, margin_se) = report(&a, &b, p, factor, cfg, r.n_failed);
        reports.push(InequalityReport {
            x: x.clone(),
            y: y.clone(),
            lhs,
            rhs,
            exponent_factor: factor,
            margin,
            margin_se,
            distance: dist,
            radius,
            admissible: dist <= radius,
            constants: Some(c),
        });
    }
    Ok(reports)
}

pub fn harnack_check(
    model: &SdeModel,
    setup: &HarnackSetup,
    x: &[f64],
    y: &[f64],
    p: f64,
    f: &TestFunction,
    cfg: &McConfig,
) -> Result<InequalityReport> {
    let mut v = harnack_sweep(model, setup, &[(x.to_vec(), y.to_vec())], p, f, cfg)?;
    Ok(v.remove(0))
}

/// Shift Harnack check `(P_T f(x))^p ≤ P_T{f(y + ·)}^p(x) exp[p/(p-1) c |y|²]`
/// for each shift `y`, on the same paths.
///
/// For `H < 1/2` the rate is explicit and every shift is admissible; for
/// `H > 1/2` it is the Harnack rate at `x` and `|y|` is limited by the same
/// radius, so `setup` is required.
pub fn shift_harnack_sweep(
    model: &SdeModel,
    setup: Option<&HarnackSetup>,
    x: &[f64],
    shifts: &[Vec<f64>],
    p: f64,
    f: &TestFunction,
    cfg: &McConfig,
) -> Result<Vec<InequalityReport>> {
    check_p(p, f)?;
    check_point(model, x, "x")?;
    f.check_dim(model.dim())?;
    if !model.is_additive() {
        return Err(Error::domain("shift Harnack is implemented for additive noise"));
    }
    for y in shifts {
        check_point(model, y, "shift")?;
    }
    let t = cfg.grid.horizon();
    let (rate_fn, constants): (Box<dyn Fn(f64) -> (f64, f64) + Sync>, Option<HarnackConstants>) =
        match model.hurst.regime() {
            Regime::Low => {
                let c = low_shift_constant(model.hurst, model.constants.k1, t)?;
                (Box::new(move |d: f64| ((p / (p - 1.0) * c * d * d).exp(), f64::INFINITY)), None)
            }
            Regime::High => {
                if model.time_dependent() {
                    return Err(Error::domain("shift Harnack for H > 1/2 needs a time-homogeneous drift"));
                }
                let setup = setup.ok_or_else(|| Error::domain("shift Harnack for H > 1/2 needs Fernique constants"))?;
                let c = harnack_constants(model, norm(x), norm(&model.b(0.0, x)), t, setup.delta, &setup.fernique)?;
                let cc = c.clone();
                (Box::new(move |d: f64| (cc.factor(p, d), cc.radius(p))), Some(c))
            }
            Regime::Brownian => return Err(Error::domain("shift Harnack needs H != 1/2")),
        };
    let plan = VolterraPlan::new(cfg.grid, model.hurst);
    let r = run_replicas(cfg.n_paths, |i| {
        let path = plan.sample(model.dim(), cfg.seed, i);
        let sol = solve(model, x, &path)?;
        let xt = sol.terminal();
        let mut out = Vec::with_capacity(1 + shifts.len());
        out.push(f.eval(xt));
        out.extend(shifts.iter().map(|y| f.eval_shifted(xt, y).powf(p)));
        Ok(out)
    })?;
    let a: Vec<f64> = r.values.iter().map(|v| v[0]).collect();
    let mut reports = Vec::with_capacity(shifts.len());
    for (k, y) in shifts.iter().enumerate() {
        let dist = norm(y);
        let (factor, radius) = rate_fn(dist);
        let b: Vec<f64> = r.values.iter().map(|v| v[k + 1]).collect();
        let (lhs, rhs, margin, margin_se) = report(&a, &b, p, factor, cfg, r.n_failed);
        reports.push(InequalityReport {
            x: x.to_vec(),
            y: y.clone(),
            lhs,
            rhs,
            exponent_factor: factor,
            margin,
            margin_se,
            distance: dist,
            radius,
            admissible: dist <= radius,
            constants: constants.clone(),
        });
    }
    Ok(reports)
}

pub fn shift_harnack_check(
    model: &SdeModel,
    setup: Option<&HarnackSetup>,
    x: &[f64],
    y: &[f64],
    p: f64,
    f: &TestFunction,
    cfg: &McConfig,
) -> Result<InequalityReport> {
    let mut v = shift_harnack_sweep(model, setup, x, &[y.to_vec()], p, f, cfg)?;
    Ok(v.remove(0))
}
