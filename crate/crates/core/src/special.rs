//! Special functions and normalisation constants shared across modules.

pub use statrs::function::beta::beta;
pub use statrs::function::gamma::{gamma, ln_gamma};

/// Variance at `t = 1` of the process `∫ K(1,s) dW_s` when `K` is the
/// Volterra kernel in its fractional-operator normalisation,
/// `Γ(2−2H) cos(πH) / (πH(1−2H))`.
///
/// Operator formulas for `K_H^{-1}` are usually stated in that normalisation.
/// This crate generates unit-variance fBm, so every inverse has to be
/// multiplied by `sqrt(operator_variance(h))`. The value is 1 at `H = 1/2`.
pub fn operator_variance(h: f64) -> f64 {
    if (h - 0.5).abs() < 1e-12 {
        return 1.0;
    }
    gamma(2.0 - 2.0 * h) * (std::f64::consts::PI * h).cos()
        / (std::f64::consts::PI * h * (1.0 - 2.0 * h))
}

/// Scale factor `sqrt(operator_variance(h))` applied to `K_H^{-1}` outputs.
pub fn inverse_scale(h: f64) -> f64 {
    operator_variance(h).sqrt()
}

/// Prefactor `c_H` of the unit-variance Volterra kernel.
pub fn kernel_constant(h: f64) -> f64 {
    if h > 0.5 {
        (h * (2.0 * h - 1.0) / beta(2.0 - 2.0 * h, h - 0.5)).sqrt()
    } else if h < 0.5 {
        (2.0 * h / ((1.0 - 2.0 * h) * beta(1.0 - 2.0 * h, h + 0.5))).sqrt()
    } else {
        1.0
    }
}
