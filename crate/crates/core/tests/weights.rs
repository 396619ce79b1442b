mod common;

use common::within_se;
use fracsde::fbm::{path_norms, Hurst, TimeGrid, VolterraPlan};
use fracsde::sde::{build_model, coupled_bismut_pair, solve_additive, ModelSpec};
use fracsde::stats::{mean_se, pairwise_sum};
use fracsde::weights::{
    bismut_coupling_eta, bismut_weight, fernique_estimate, girsanov_density, harnack_constants,
    ibp_weight_high, ibp_weight_low, quad_variation_bound_check, Integrand, WeightPlan,
};

fn h(v: f64) -> Hurst {
    Hurst::new(v).unwrap()
}

/// For linear OU both `X_T` and the weight are linear in the Brownian
/// increments, so `E[X_T N_T]` is a deterministic sum over the coefficient
/// vectors; this isolates the discretisation error of the weight.
fn linear_ou_pairing(hv: f64, n: usize, kappa: f64, bismut: bool) -> f64 {
    let grid = TimeGrid::new(1.0, n).unwrap();
    let vp = VolterraPlan::new(grid, h(hv));
    let wp = WeightPlan::new(grid, h(hv)).unwrap();
    let dt = grid.dt();
    let coeff: Vec<f64> = (0..n)
        .map(|i| {
            let mut dw = vec![0.0; n];
            dw[i] = 1.0;
            let p = vp.path_from_increments(1, dw);
            (0..n).fold(0.0, |x, j| x * (1.0 - kappa * dt) + p.fbm_values[j + 1] - p.fbm_values[j])
        })
        .collect();
    let g: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&r| if bismut { 1.0 - kappa * (1.0 - r) } else { 1.0 + kappa * r })
        .collect();
    let mut u = Integrand::default();
    wp.integrand(&g, &mut u);
    (0..n).map(|i| coeff[i] * u.total(i) * dt).sum()
}

#[test]
fn linear_ou_discretisation_error_is_small() {
    // Euler derivative of X_T in x is (1 - κΔt)^n; P_T(f') = 1 for f(x) = x
    let n = 256;
    let euler = (1.0 - 1.0 / n as f64).powi(n as i32);
    let e7 = linear_ou_pairing(0.7, n, 1.0, true) - euler;
    let e7i = linear_ou_pairing(0.7, n, 1.0, false) - 1.0;
    let e3 = linear_ou_pairing(0.3, n, 1.0, false) - 1.0;
    println!("bias: bismut {e7:.2e}, N^2 {e7i:.2e}, N^1 {e3:.2e}");
    assert!(e7.abs() < 2e-4);
    assert!(e7i.abs() < 2e-3);
    assert!(e3.abs() < 5e-3);
}

#[test]
fn weights_have_zero_mean() {
    let n_paths = 4000;
    for (spec, hv) in [(ModelSpec::TanhDrift(-1.0), 0.7), (ModelSpec::TimeDecay(1.0), 0.3)] {
        let grid = TimeGrid::new(1.0, 64).unwrap();
        let model = build_model(spec, h(hv), 1).unwrap();
        let vp = VolterraPlan::new(grid, h(hv));
        let wp = WeightPlan::new(grid, h(hv)).unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        for i in 0..n_paths {
            let path = vp.sample(1, 41, i);
            let x = solve_additive(&model, &[0.5], &path).unwrap();
            if hv > 0.5 {
                a.push(bismut_weight(&wp, &model, &x, &path, &[1.0]).unwrap().value);
                b.push(ibp_weight_high(&wp, &model, &x, &path, &[1.0]).unwrap().value);
            } else {
                a.push(ibp_weight_low(&wp, &model, &x, &path, &[1.0]).unwrap().value);
            }
        }
        for v in [&a, &b] {
            if v.is_empty() {
                continue;
            }
            let (m, se) = mean_se(v);
            assert!(within_se("weight mean", m, 0.0, se, 3.0));
        }
    }
}

#[test]
fn free_noise_ibp_matches_direct_gradient() {
    // b = 0: P_T(f') = E sech²(x + B_T), estimated directly on the same paths
    for hv in [0.3, 0.7] {
        let grid = TimeGrid::new(1.0, 64).unwrap();
        let model = build_model(ModelSpec::Zero, h(hv), 1).unwrap();
        let vp = VolterraPlan::new(grid, h(hv));
        let wp = WeightPlan::new(grid, h(hv)).unwrap();
        let mut diff = Vec::new();
        for i in 0..20_000 {
            let path = vp.sample(1, 77, i);
            let x = solve_additive(&model, &[0.3], &path).unwrap();
            let w = if hv < 0.5 {
                ibp_weight_low(&wp, &model, &x, &path, &[1.0]).unwrap()
            } else {
                ibp_weight_high(&wp, &model, &x, &path, &[1.0]).unwrap()
            };
            let xt = x.terminal()[0];
            diff.push(1.0 / xt.cosh().powi(2) - xt.tanh() * w.value);
        }
        let (m, se) = mean_se(&diff);
        assert!(within_se(&format!("H={hv} direct - weighted"), m, 0.0, se, 3.0));
    }
}

#[test]
fn girsanov_unit_mean_and_measure_change() {
    let hv = 0.7;
    let grid = TimeGrid::new(1.0, 64).unwrap();
    let model = build_model(ModelSpec::TanhDrift(-1.0), h(hv), 1).unwrap();
    let vp = VolterraPlan::new(grid, h(hv));
    let wp = WeightPlan::new(grid, h(hv)).unwrap();
    let (x0, y, eps) = (0.4, 1.0, 0.05);
    let n = 10_000;
    let mut r = Vec::new();
    let mut rf = Vec::new();
    let mut fresh = Vec::new();
    for i in 0..n {
        let path = vp.sample(1, 5, i);
        let (base, shifted) = coupled_bismut_pair(&model, &[x0], &[y], eps, &path).unwrap();
        let eta = bismut_coupling_eta(&model, &base, &shifted, &[y], eps).unwrap();
        let d = girsanov_density(&wp, &eta, &path).unwrap();
        r.push(d.density());
        rf.push(d.density() * shifted.terminal()[0].tanh());
        let other = vp.sample(1, 6, i);
        fresh.push(solve_additive(&model, &[x0 + eps * y], &other).unwrap().terminal()[0].tanh());
    }
    let (m, se) = mean_se(&r);
    assert!(within_se("E R", m, 1.0, se, 3.0));
    let (a, sa) = mean_se(&rf);
    let (b, sb) = mean_se(&fresh);
    assert!(within_se("E[R f(X^ε_T)] vs P_T f(x+εy)", a, b, (sa * sa + sb * sb).sqrt(), 3.0));
}

#[test]
fn bracket_is_dominated_pathwise() {
    let hv = 0.7;
    let delta = (hv - 0.5) / 2.0;
    let grid = TimeGrid::new(1.0, 128).unwrap();
    let wp = WeightPlan::new(grid, h(hv)).unwrap();
    let vp = VolterraPlan::new(grid, h(hv));
    let fer = fernique_estimate(grid, h(hv), 1, delta, 200, 3).unwrap();
    for spec in [ModelSpec::Ou(1.0), ModelSpec::TanhDrift(-1.5), ModelSpec::Zero] {
        let model = build_model(spec, h(hv), 1).unwrap();
        let x0 = [0.8];
        let bx = model.b(0.0, &x0)[0].abs();
        let c = harnack_constants(&model, 0.8, bx, 1.0, delta, &fer).unwrap();
        let mut worst = f64::INFINITY;
        for i in 0..200 {
            let path = vp.sample(1, 8, i);
            let x = solve_additive(&model, &x0, &path).unwrap();
            let norms = path_norms(&path.fbm_values, 1, grid.dt(), hv - delta).unwrap();
            let w = bismut_weight(&wp, &model, &x, &path, &[1.0]).unwrap();
            worst = worst.min(quad_variation_bound_check(&w, &c, &norms, &[1.0]).unwrap());
        }
        println!("{spec}: worst margin {worst:.4e}, A1 {:.4}, A2 {:.4}", c.a1_eff, c.a2_eff);
        assert!(worst >= -1e-9);
    }
}

#[test]
fn bracket_matches_sum_of_squares() {
    let grid = TimeGrid::new(2.0, 32).unwrap();
    let model = build_model(ModelSpec::Ou(0.5), h(0.7), 2).unwrap();
    let wp = WeightPlan::new(grid, h(0.7)).unwrap();
    let path = VolterraPlan::new(grid, h(0.7)).sample(2, 1, 0);
    let x = solve_additive(&model, &[0.0, 1.0], &path).unwrap();
    let y = [0.6, -0.8];
    let w = bismut_weight(&wp, &model, &x, &path, &y).unwrap();
    // for OU the rate is deterministic: g = (1 - κ(T - r)) y
    let mut u = Integrand::default();
    let g: Vec<f64> = grid.nodes().iter().map(|r| 1.0 - 0.5 * (2.0 - r)).collect();
    wp.integrand(&g, &mut u);
    let sq: Vec<f64> = (0..32).map(|i| u.total(i).powi(2)).collect();
    let expected = pairwise_sum(&sq) * grid.dt() / 4.0;
    assert!((w.quad_variation - expected).abs() < 1e-12 * expected);
}
