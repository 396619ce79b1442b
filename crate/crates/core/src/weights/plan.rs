use crate::error::{Error, Result};
use crate::fbm::{Hurst, Regime, TimeGrid};
use crate::frac_calc::c0_constant;
use crate::quadrature::Rule;
use crate::special::{gamma, inverse_scale};

/// Per-step integrand of a weight, split into its three contributions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Integrand {
    pub term1: Vec<f64>,
    pub term2: Vec<f64>,
    pub term3: Vec<f64>,
}

impl Integrand {
    pub fn total(&self, i: usize) -> f64 {
        self.term1[i] + self.term2[i] + self.term3[i]
    }
}

/// `u = K_H^{-1}(∫_0^· g)` on the grid, for a rate `g` given at the nodes.
///
/// For `H > 1/2`, with `α = H - 1/2`,
/// `u(s) = Γ(1-α)^{-1} [ s^{-α} g(s)
///        + α ∫_0^s (1 - (s/r)^α) (s-r)^{-1-α} g(r) dr
///        + α ∫_0^s (g(s) - g(r)) (s-r)^{-1-α} dr ]`;
/// for `H < 1/2`, with `β = 1/2 - H`,
/// `u(s) = Γ(β)^{-1} s^{-β} ∫_0^s (s-r)^{β-1} r^β g(r) dr`.
/// Both carry the unit-variance factor `sqrt(V_H)`.
///
/// `g` is linear between nodes. The value at `s_i` only uses `g_0..g_i`,
/// so the Itô sum `Σ u_i ΔW_i` is adapted. Step 0 uses the average of `u`
/// over the first cell with `g ≈ g_0`, which is available in closed form.
#[derive(Debug, Clone)]
pub struct WeightPlan {
    grid: TimeGrid,
    hurst: Hurst,
    /// Step-0 coefficients for (term1, term2).
    step0: (f64, f64),
    /// Scaled `s_i^{-α}` (high regime).
    spow: Vec<f64>,
    /// Scaled hat-function moments; row `i` has `i + 1` entries.
    rows: Vec<f64>,
    /// Scaled closed-form weights of the difference term (high regime).
    p: Vec<f64>,
    q: Vec<f64>,
}

impl WeightPlan {
    pub fn new(grid: TimeGrid, hurst: Hurst) -> Result<WeightPlan> {
        let n = grid.n_steps();
        let hv = hurst.value();
        let dt = grid.dt();
        let root_v = inverse_scale(hv);
        let mut plan = WeightPlan {
            grid,
            hurst,
            step0: (1.0, 0.0),
            spow: Vec::new(),
            rows: Vec::new(),
            p: Vec::new(),
            q: Vec::new(),
        };
        match hurst.regime() {
            Regime::Brownian => {}
            Regime::High => {
                let a = hv - 0.5;
                let c = root_v / gamma(1.0 - a);
                let avg = dt.powf(-a) / (1.0 - a);
                plan.step0 = (c * avg, -c * a * c0_constant(hurst)? * avg);
                plan.spow = (0..n).map(|i| c * grid.node(i).powf(-a)).collect();
                let k = c * a * dt.powf(-a);
                plan.rows = high_moments(n, a)?.into_iter().map(|w| k * w).collect();
                plan.p = (0..=n)
                    .map(|m| {
                        let m = m as f64;
                        if m < 2.0 {
                            0.0
                        } else {
                            k * ((m - 1.0).powf(-a) - m.powf(-a)) / a
                        }
                    })
                    .collect();
                plan.q = (0..=n)
                    .map(|m| {
                        let m = m as f64;
                        if m < 1.0 {
                            0.0
                        } else {
                            k * (m.powf(1.0 - a) - (m - 1.0).powf(1.0 - a)) / (1.0 - a)
                        }
                    })
                    .collect();
            }
            Regime::Low => {
                let b = 0.5 - hv;
                let c = root_v / gamma(b);
                let total = root_v * gamma(1.0 + b) / gamma(1.0 + 2.0 * b);
                plan.step0 = (total * dt.powf(b) / (1.0 + b), 0.0);
                let k = c * dt.powf(b);
                plan.rows = low_moments(n, b)?.into_iter().map(|w| k * w).collect();
            }
        }
        Ok(plan)
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn hurst(&self) -> Hurst {
        self.hurst
    }

    fn row(&self, i: usize) -> &[f64] {
        let start = (i - 1) * (i + 2) / 2;
        &self.rows[start..start + i + 1]
    }

    /// Integrand at steps `0..n` for a scalar rate `g` at nodes `0..=n`
    /// (node `n` is never read).
    pub fn integrand(&self, g: &[f64], out: &mut Integrand) {
        let n = self.grid.n_steps();
        assert!(g.len() >= n, "rate needs values at nodes 0..n");
        for v in [&mut out.term1, &mut out.term2, &mut out.term3] {
            v.clear();
            v.resize(n, 0.0);
        }
        out.term1[0] = self.step0.0 * g[0];
        out.term2[0] = self.step0.1 * g[0];
        match self.hurst.regime() {
            Regime::Brownian => out.term1.copy_from_slice(&g[..n]),
            Regime::High => {
                for i in 1..n {
                    let gi = g[i];
                    out.term1[i] = self.spow[i] * gi;
                    out.term2[i] = self.row(i).iter().zip(&g[..=i]).map(|(w, v)| w * v).sum();
                    let mut t3 = self.q[1] * (gi - g[i - 1]);
                    for j in 0..i - 1 {
                        let m = i - j;
                        let slope = g[j + 1] - g[j];
                        t3 += (gi - g[j] - m as f64 * slope) * self.p[m] + slope * self.q[m];
                    }
                    out.term3[i] = t3;
                }
            }
            Regime::Low => {
                for i in 1..n {
                    out.term1[i] = self.row(i).iter().zip(&g[..=i]).map(|(w, v)| w * v).sum();
                }
            }
        }
    }
}

/// `(1 - (i/x)^α) / (i - x)`, continuous at `x = i`.
fn ratio(i: f64, x: f64, a: f64) -> f64 {
    let d = i - x;
    if d <= 0.0 {
        return -a / i;
    }
    -(a * (d / x).ln_1p()).exp_m1() / d
}

/// Moments `∫_0^i κ(i,x) φ_j(x) dx` of the hat functions `φ_j` against
/// `κ(i,x) = (1 - (i/x)^α)(i - x)^{-1-α}`, rows `i = 1..n-1` packed (grid
/// units).
fn high_moments(n: usize, a: f64) -> Result<Vec<f64>> {
    let gl16 = Rule::legendre(16);
    let gl6 = Rule::legendre(6);
    let left = Rule::jacobi(16, 0.0, -a)?;
    let right = Rule::jacobi(16, -a, 0.0)?;
    let mut rows = Vec::with_capacity(n * (n + 1) / 2);
    for i in 1..n {
        let fi = i as f64;
        let mut row = vec![0.0; i + 1];
        let smooth = |x: f64| (fi - x).powf(-1.0 - a);
        let kernel = |x: f64| (1.0 - (fi / x).powf(a)) * (fi - x).powf(-1.0 - a);
        // cell 0 (split at 1/2 when it also touches the diagonal)
        let c0_hi = if i == 1 { 0.5 } else { 1.0 };
        for (j, phi) in [(0usize, 0), (1, 1)] {
            let hat = move |x: f64| if phi == 0 { 1.0 - x } else { x };
            let sm = gl16.integrate(0.0, c0_hi, |x| smooth(x) * hat(x));
            let sing = left.integrate(0.0, c0_hi, |x| fi.powf(a) * smooth(x) * hat(x));
            row[j] += sm - sing;
        }
        // cell touching the diagonal
        let (dlo, dcell) = if i == 1 { (0.5, 0.0) } else { (fi - 1.0, fi - 1.0) };
        for (j, phi) in [(i - 1, 0), (i, 1)] {
            let hat = move |x: f64| if phi == 0 { dcell + 1.0 - x } else { x - dcell };
            row[j] += right.integrate(dlo, fi, |x| ratio(fi, x, a) * hat(x));
        }
        for c in 1..i.saturating_sub(1) {
            let rule = if c <= 3 || c + 4 >= i { &gl16 } else { &gl6 };
            let lo = c as f64;
            row[c] += rule.integrate(lo, lo + 1.0, |x| kernel(x) * (lo + 1.0 - x));
            row[c + 1] += rule.integrate(lo, lo + 1.0, |x| kernel(x) * (x - lo));
        }
        rows.extend_from_slice(&row);
    }
    Ok(rows)
}

/// Moments of the hat functions against `κ(i,x) = i^{-β} x^β (i-x)^{β-1}`.
fn low_moments(n: usize, b: f64) -> Result<Vec<f64>> {
    let gl16 = Rule::legendre(16);
    let gl6 = Rule::legendre(6);
    let both = Rule::jacobi(16, b - 1.0, b)?;
    let left = Rule::jacobi(16, 0.0, b)?;
    let right = Rule::jacobi(16, b - 1.0, 0.0)?;
    let mut rows = Vec::with_capacity(n * (n + 1) / 2);
    for i in 1..n {
        let fi = i as f64;
        let pre = fi.powf(-b);
        let mut row = vec![0.0; i + 1];
        if i == 1 {
            row[0] = pre * both.integrate(0.0, 1.0, |x| 1.0 - x);
            row[1] = pre * both.integrate(0.0, 1.0, |x| x);
        } else {
            row[0] += pre * left.integrate(0.0, 1.0, |x| (fi - x).powf(b - 1.0) * (1.0 - x));
            row[1] += pre * left.integrate(0.0, 1.0, |x| (fi - x).powf(b - 1.0) * x);
            let lo = fi - 1.0;
            row[i - 1] += pre * right.integrate(lo, fi, |x| x.powf(b) * (fi - x));
            row[i] += pre * right.integrate(lo, fi, |x| x.powf(b) * (x - lo));
            let kernel = |x: f64| x.powf(b) * (fi - x).powf(b - 1.0);
            for c in 1..i - 1 {
                let rule = if c <= 3 || c + 4 >= i { &gl16 } else { &gl6 };
                let lo = c as f64;
                row[c] += pre * rule.integrate(lo, lo + 1.0, |x| kernel(x) * (lo + 1.0 - x));
                row[c + 1] += pre * rule.integrate(lo, lo + 1.0, |x| kernel(x) * (x - lo));
            }
        }
        rows.extend_from_slice(&row);
    }
    Ok(rows)
}

impl WeightPlan {
    /// Check that `g` is long enough and finite.
    pub(crate) fn check_rate(&self, g: &[f64]) -> Result<()> {
        if g.len() < self.grid.n_steps() || g.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("rate must be finite at nodes 0..n"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_power_rates(hv: f64, n: usize) {
        let grid = TimeGrid::new(1.3, n).unwrap();
        let h = Hurst::new(hv).unwrap();
        let plan = WeightPlan::new(grid, h).unwrap();
        let v = inverse_scale(hv);
        let mut out = Integrand::default();
        // g ≡ 1 maps to Γ(3/2-H)/Γ(2-2H) s^{1/2-H}; g = r to a multiple of s^{3/2-H}
        let (c1, c2) = if hv > 0.5 {
            let a = hv - 0.5;
            (gamma(1.0 - a) / gamma(1.0 - 2.0 * a), gamma(2.0 - a) / gamma(2.0 - 2.0 * a))
        } else {
            let b = 0.5 - hv;
            (gamma(1.0 + b) / gamma(1.0 + 2.0 * b), gamma(2.0 + b) / gamma(2.0 + 2.0 * b))
        };
        let ones = vec![1.0; n + 1];
        plan.integrand(&ones, &mut out);
        for i in 1..n {
            let s = grid.node(i);
            let exact = v * c1 * s.powf(0.5 - hv);
            assert!((out.total(i) - exact).abs() < 1e-9 * exact, "H={hv} i={i}");
        }
        let avg = v * c1 * grid.dt().powf(0.5 - hv) / (1.5 - hv);
        assert!((out.total(0) - avg).abs() < 1e-12 * avg);
        let lin = grid.nodes();
        plan.integrand(&lin, &mut out);
        for i in 1..n {
            let s = grid.node(i);
            let exact = v * c2 * s.powf(1.5 - hv);
            assert!((out.total(i) - exact).abs() < 1e-9 * exact, "H={hv} i={i}");
        }
    }

    #[test]
    fn exact_on_constant_and_linear_rates() {
        for hv in [0.2, 0.3, 0.45, 0.55, 0.7, 0.9] {
            check_power_rates(hv, 40);
        }
    }

    #[test]
    fn difference_term_vanishes_for_constant_rate() {
        let grid = TimeGrid::new(1.0, 30).unwrap();
        let plan = WeightPlan::new(grid, Hurst::new(0.7).unwrap()).unwrap();
        let mut out = Integrand::default();
        plan.integrand(&[2.0; 31], &mut out);
        assert!(out.term3.iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn brownian_plan_is_identity() {
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let plan = WeightPlan::new(grid, Hurst::new(0.5).unwrap()).unwrap();
        let g: Vec<f64> = (0..=10).map(|i| (i as f64).sin()).collect();
        let mut out = Integrand::default();
        plan.integrand(&g, &mut out);
        for i in 0..10 {
            assert_eq!(out.total(i), g[i]);
        }
    }
}
