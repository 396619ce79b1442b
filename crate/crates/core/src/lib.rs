//! Simulation of SDEs driven by fractional Brownian motion, together with
//! Malliavin-type derivative weights, Harnack-type inequality checks and a
//! Krylov–Bogoliubov invariant-measure iteration.
//!
//! The noise is built W-first: standard Brownian increments are drawn and the
//! fBm is obtained through the Volterra representation `B^H_t = ∫ K_H(t,s) dW_s`.
//! All weights are Itô sums against the same increments.

pub mod error;
pub mod estimators;
pub mod fbm;
pub mod frac_calc;
pub mod quadrature;
pub mod rng;
pub mod sde;
pub mod special;
pub mod stats;
pub mod weights;

pub use error::{Error, Result};
pub use fbm::{Hurst, PathPair, Regime, TimeGrid};
