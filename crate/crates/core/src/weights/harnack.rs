use serde::Serialize;

use crate::error::{Error, Result};
use crate::fbm::{path_norms, Hurst, PathNorms, Regime, TimeGrid, VolterraPlan};
use crate::frac_calc::c0_constant;
use crate::sde::{AprioriBounds, SdeModel};
use crate::special::{beta, gamma, operator_variance};
use crate::stats::mean_se;

use super::{MalliavinWeight, WeightKind};

/// Ladder of trial exponents for the Fernique constant.
const LADDER: std::ops::RangeInclusive<i32> = -12..=6;
const MAX_REL_SE: f64 = 0.1;

/// Monte Carlo estimate of `B0 = E exp[λ0 |||B^H|||²_{H-δ}]`.
///
/// `λ0` is half the largest ladder value `2^k` whose estimate still has a
/// relative standard error below 10%.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FerniqueEstimate {
    pub lambda0: f64,
    pub b0: f64,
    pub b0_se: f64,
    pub exponent: f64,
    pub n_paths: usize,
}

pub fn fernique_estimate(
    grid: TimeGrid,
    hurst: Hurst,
    dim: usize,
    delta: f64,
    n_paths: usize,
    seed: u64,
) -> Result<FerniqueEstimate> {
    let exponent = hurst.value() - delta;
    if !(exponent > 0.0 && exponent < 1.0) {
        return Err(Error::domain(format!("Hölder exponent H - δ = {exponent} not in (0, 1)")));
    }
    if n_paths == 0 {
        return Ok(FerniqueEstimate {
            lambda0: 0.0,
            b0: 1.0,
            b0_se: 0.0,
            exponent,
            n_paths,
        });
    }
    let plan = VolterraPlan::new(grid, hurst);
    let sq = (0..n_paths)
        .map(|i| {
            let p = plan.sample(dim, seed, i as u64);
            path_norms(&p.fbm_values, dim, grid.dt(), exponent).map(|n| n.combined * n.combined)
        })
        .collect::<Result<Vec<f64>>>()?;
    let moment = |lambda: f64| {
        let vals: Vec<f64> = sq.iter().map(|c| (lambda * c).exp()).collect();
        mean_se(&vals)
    };
    let mut best = None;
    for k in LADDER {
        let lambda = 2f64.powi(k);
        let (m, se) = moment(lambda);
        if m.is_finite() && se / m < MAX_REL_SE {
            best = Some(lambda);
        } else {
            break;
        }
    }
    let lambda0 = best.unwrap_or(2f64.powi(*LADDER.start())) / 2.0;
    let (b0, b0_se) = moment(lambda0);
    Ok(FerniqueEstimate {
        lambda0,
        b0,
        b0_se,
        exponent,
        n_paths,
    })
}

/// Constants of the Harnack inequality at a given initial point.
///
/// `a1`, `a2` are the displayed closed forms; `a1_eff = v_h a1` and
/// `a2_eff = v_h a2` bound the bracket of the unit-variance weight and are
/// the ones used in every inequality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarnackConstants {
    pub a1: f64,
    pub a2: f64,
    pub v_h: f64,
    pub a1_eff: f64,
    pub a2_eff: f64,
    pub c0: f64,
    pub d1: f64,
    pub d2: f64,
    pub k1: f64,
    pub k2: f64,
    pub delta: f64,
    pub horizon: f64,
    pub lambda0: f64,
    pub b0: f64,
    pub b0_se: f64,
}

impl HarnackConstants {
    /// `A1 + (A2/λ0) log B0`, with the second part dropped when `A2 = 0`.
    pub fn rate(&self) -> f64 {
        if self.a2_eff == 0.0 {
            return self.a1_eff;
        }
        if self.lambda0 == 0.0 {
            return f64::INFINITY;
        }
        self.a1_eff + self.a2_eff / self.lambda0 * self.b0.ln()
    }

    /// Largest admissible `|x - y|`: `((p-1)/p) sqrt(λ0 / (2 A2))`.
    pub fn radius(&self, p: f64) -> f64 {
        if self.a2_eff == 0.0 {
            return f64::INFINITY;
        }
        (p - 1.0) / p * (self.lambda0 / (2.0 * self.a2_eff)).sqrt()
    }

    /// `exp[p/(p-1) · rate · dist²]`.
    pub fn factor(&self, p: f64, dist: f64) -> f64 {
        if dist == 0.0 {
            return 1.0;
        }
        (p / (p - 1.0) * self.rate() * dist * dist).exp()
    }
}

/// `(sup |z|, sup |b(z)|)` bounds over the segment `[x, y]`.
pub fn pair_point_bounds(model: &SdeModel, x: &[f64], y: &[f64]) -> (f64, f64) {
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let dist = norm(&x.iter().zip(y).map(|(a, b)| a - b).collect::<Vec<_>>());
    let bx = norm(&model.b(0.0, x));
    let by = norm(&model.b(0.0, y));
    (norm(x).max(norm(y)), 0.5 * (bx + by + model.constants.k1 * dist))
}

/// `A1`, `A2` and the Fernique pair for an additive model with `H > 1/2`,
/// started at a point with `|x| ≤ x_norm` and `|b(x)| ≤ bx_norm`.
pub fn harnack_constants(
    model: &SdeModel,
    x_norm: f64,
    bx_norm: f64,
    horizon: f64,
    delta: f64,
    fernique: &FerniqueEstimate,
) -> Result<HarnackConstants> {
    let hurst = model.hurst;
    let h = hurst.value();
    if hurst.regime() != Regime::High {
        return Err(Error::domain("Harnack constants require H > 1/2"));
    }
    if !(delta > 0.0 && delta < 0.5 && h - delta > 0.5) {
        return Err(Error::domain(format!("δ = {delta} must satisfy 0 < δ < 1/2 and H - δ > 1/2")));
    }
    if (fernique.exponent - (h - delta)).abs() > 1e-12 {
        return Err(Error::domain("Fernique estimate was computed for another exponent"));
    }
    if !model.is_additive() {
        return Err(Error::domain("use the Lamperti model for multiplicative noise"));
    }
    let (k1, k2) = (model.constants.k1, model.constants.k2);
    let t = horizon;
    let ap = AprioriBounds::new(&model.constants, x_norm, bx_norm, t, 0.0);
    let (d1, d2) = (ap.d1, ap.d2);
    let c0 = c0_constant(hurst)?;
    let a = h - 0.5;
    let g = gamma(1.5 - h);
    let lin = 1.0 + k1 * t;
    let third = 3f64.sqrt() * a * (d1 * k2 * t + k1) * t / ((4.0 - 2.0 * h).sqrt() * (1.5 - h));
    let a1 = 3.0 / (g * g * t.powf(2.0 * h))
        * (lin * lin / (2.0 - 2.0 * h) + (c0 * a * lin).powi(2) / (2.0 - 2.0 * h) + third * third);
    let first = (d2 * k2 / (1.5 - h)).powi(2) * t.powf(4.0 - 2.0 * h) / (4.0 - 2.0 * h);
    let second = (k2 / (0.5 - delta)).powi(2) * t.powf(2.0 - 2.0 * delta) / (2.0 - 2.0 * delta);
    let a2 = 9.0 * a * a / (g * g) * first.max(second);
    let v_h = operator_variance(h);
    Ok(HarnackConstants {
        a1,
        a2,
        v_h,
        a1_eff: v_h * a1,
        a2_eff: v_h * a2,
        c0,
        d1,
        d2,
        k1,
        k2,
        delta,
        horizon,
        lambda0: fernique.lambda0,
        b0: fernique.b0,
        b0_se: fernique.b0_se,
    })
}

/// Rate `c` in the shift Harnack factor `exp[p/(p-1) c |y|²]` for `H < 1/2`:
/// `V_H (B(3/2-H, 1/2-H)/Γ(1/2-H))² (1 + K1 T)² / (2(1-H) T^{2H})`.
pub fn low_shift_constant(hurst: Hurst, k1: f64, horizon: f64) -> Result<f64> {
    let h = hurst.value();
    if hurst.regime() != Regime::Low {
        return Err(Error::domain("this shift constant is for H < 1/2"));
    }
    let r = beta(1.5 - h, 0.5 - h) / gamma(0.5 - h);
    let lin = 1.0 + k1 * horizon;
    Ok(operator_variance(h) * r * r * lin * lin / (horizon.powf(2.0 * h) * 2.0 * (1.0 - h)))
}

/// `(A1 + A2 |||B^H|||²) |y|² - ⟨N⟩_T` for one path; nonnegative when the
/// bracket bound holds.
pub fn quad_variation_bound_check(
    weight: &MalliavinWeight,
    constants: &HarnackConstants,
    norms: &PathNorms,
    y: &[f64],
) -> Result<f64> {
    if weight.kind != WeightKind::Bismut {
        return Err(Error::domain("the bracket bound is stated for the Bismut weight"));
    }
    let y2: f64 = y.iter().map(|v| v * v).sum();
    let c = norms.combined;
    Ok((constants.a1_eff + constants.a2_eff * c * c) * y2 - weight.quad_variation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::{build_model, ModelSpec};

    #[test]
    fn linear_drift_has_no_a2() {
        let h = Hurst::new(0.7).unwrap();
        let model = build_model(ModelSpec::Ou(1.0), h, 1).unwrap();
        let fer = FerniqueEstimate {
            lambda0: 0.0,
            b0: 1.0,
            b0_se: 0.0,
            exponent: 0.6,
            n_paths: 0,
        };
        let c = harnack_constants(&model, 1.0, 1.0, 1.0, 0.1, &fer).unwrap();
        assert_eq!(c.a2, 0.0);
        assert!(c.a1 > 0.0);
        assert_eq!(c.rate(), c.a1_eff);
        assert!(c.radius(2.0).is_infinite());
    }

    #[test]
    fn delta_range_is_enforced() {
        let h = Hurst::new(0.7).unwrap();
        let model = build_model(ModelSpec::Ou(1.0), h, 1).unwrap();
        let grid = TimeGrid::new(1.0, 16).unwrap();
        let fer = fernique_estimate(grid, h, 1, 0.1, 0, 0).unwrap();
        assert_eq!((fer.lambda0, fer.b0), (0.0, 1.0));
        assert!(harnack_constants(&model, 0.0, 0.0, 1.0, 0.25, &fer).is_err());
        assert!(harnack_constants(&model, 0.0, 0.0, 1.0, 0.1, &fer).is_ok());
    }

    #[test]
    fn fernique_ladder_picks_a_moderate_exponent() {
        let h = Hurst::new(0.7).unwrap();
        let grid = TimeGrid::new(1.0, 64).unwrap();
        let fer = fernique_estimate(grid, h, 1, 0.1, 400, 9).unwrap();
        assert!(fer.lambda0 > 0.0 && fer.lambda0 < 64.0);
        assert!(fer.b0 >= 1.0);
    }
}
