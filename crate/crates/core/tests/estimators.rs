mod common;

use common::within_se;
use fracsde::estimators::{
    density_smoke, estimate_pt, gradient_bismut, gradient_fd, harnack_check, ibp_check,
    invariant_measure_iterate, shift_harnack_check, shift_harnack_sweep, HarnackSetup,
    InvariantOptions, McConfig, TestFunction,
};
use fracsde::fbm::{Hurst, TimeGrid};
use fracsde::sde::{build_model, ModelSpec, SdeModel};
use fracsde::Error;

fn model(spec: ModelSpec, h: f64) -> SdeModel {
    build_model(spec, Hurst::new(h).unwrap(), 1).unwrap()
}

fn cfg(n: usize, paths: usize, seed: u64) -> McConfig {
    McConfig::new(TimeGrid::new(1.0, n).unwrap(), paths, seed).unwrap()
}

fn linear() -> TestFunction {
    TestFunction::Linear { a: vec![1.0] }
}

#[test]
fn constant_function_is_exact() {
    let m = model(ModelSpec::Ou(1.0), 0.7);
    let c = TestFunction::Constant { c: 0.37 };
    let e = estimate_pt(&m, &[0.2], &c, &cfg(32, 500, 1)).unwrap();
    assert_eq!((e.mean, e.std_error), (0.37, 0.0));
    let fd = gradient_fd(&m, &[0.2], &[1.0], &c, &cfg(32, 200, 1), 0.05).unwrap();
    assert_eq!(fd.estimate.mean, 0.0);
    let g = gradient_bismut(&m, &[0.2], &[1.0], &c, &cfg(32, 2000, 1)).unwrap();
    assert!(within_se("bismut of constant", g.mean, 0.0, g.std_error.max(1e-300), 3.0));
}

#[test]
fn means_of_linear_functional() {
    let x = 0.8;
    let free = estimate_pt(&model(ModelSpec::Zero, 0.3), &[x], &linear(), &cfg(64, 20_000, 2)).unwrap();
    assert!(within_se("E[x + B_T]", free.mean, x, free.std_error, 3.0));
    let ou = estimate_pt(&model(ModelSpec::Ou(1.0), 0.7), &[x], &linear(), &cfg(256, 20_000, 3)).unwrap();
    assert!(within_se("OU mean", ou.mean, x * (-1f64).exp(), ou.std_error, 3.0));
}

#[test]
fn zero_direction_gives_zero_gradient() {
    let m = model(ModelSpec::TanhDrift(-1.0), 0.7);
    let g = gradient_bismut(&m, &[0.3], &[0.0], &TestFunction::tanh(1), &cfg(32, 100, 4)).unwrap();
    assert_eq!((g.mean, g.std_error), (0.0, 0.0));
}

#[test]
fn gradient_is_linear_in_direction() {
    let m = model(ModelSpec::TanhDrift(-1.0), 0.7);
    let c = cfg(32, 300, 5);
    let a = gradient_bismut(&m, &[0.3], &[1.0], &TestFunction::tanh(1), &c).unwrap();
    let b = gradient_bismut(&m, &[0.3], &[-2.5], &TestFunction::tanh(1), &c).unwrap();
    assert!((b.mean + 2.5 * a.mean).abs() < 1e-12);
}

#[test]
fn finite_differences_on_free_noise_and_ou() {
    // b = 0: the derivative of E tanh(x + B_T) is E sech²(x + B_T)
    let x = 0.4;
    let c = cfg(64, 20_000, 6);
    let zero = model(ModelSpec::Zero, 0.7);
    let fd = gradient_fd(&zero, &[x], &[1.0], &TestFunction::tanh(1), &c, 0.05).unwrap();
    let sech2 = TestFunction::TanhSquared { a: vec![1.0], offset: -1.0 };
    let d = estimate_pt(&zero, &[x], &sech2, &c).unwrap();
    let se = (fd.estimate.std_error.powi(2) + d.std_error.powi(2)).sqrt();
    assert!(within_se("FD vs E sech²", fd.estimate.mean, -d.mean, se + fd.bias_bound, 3.0));
    // OU: the Euler map is linear, so the finite difference is exact per path
    let ou = model(ModelSpec::Ou(1.0), 0.7);
    let fd = gradient_fd(&ou, &[x], &[1.0], &linear(), &cfg(128, 200, 7), 0.05).unwrap();
    let euler = (1.0 - 1.0 / 128.0f64).powi(128);
    assert!((fd.estimate.mean - euler).abs() < 1e-12);
}

#[test]
fn ibp_linear_function_has_exact_left_side() {
    for (spec, h) in [(ModelSpec::TimeDecay(1.0), 0.3), (ModelSpec::Ou(1.0), 0.7)] {
        let r = ibp_check(&model(spec, h), &[0.1], &[1.0], &linear(), &cfg(128, 20_000, 8)).unwrap();
        assert_eq!((r.lhs.mean, r.lhs.std_error), (1.0, 0.0));
        assert!(within_se(&format!("{spec} E[X_T N]"), r.rhs.mean, 1.0, r.rhs.std_error, 3.0));
    }
}

#[test]
fn jensen_cases_and_constants() {
    let m = model(ModelSpec::TanhDrift(-1.0), 0.7);
    let grid = TimeGrid::new(1.0, 64).unwrap();
    let setup = HarnackSetup::new(&m, grid, None, 300, 9).unwrap();
    let f = TestFunction::TanhSquared { a: vec![1.0], offset: 1.0 };
    let r = harnack_check(&m, &setup, &[0.5], &[0.5], 2.0, &f, &cfg(64, 5000, 10)).unwrap();
    assert_eq!(r.exponent_factor, 1.0);
    assert!(r.margin >= -3.0 * r.margin_se);
    let c = TestFunction::Constant { c: 1.7 };
    let r = harnack_check(&m, &setup, &[0.5], &[0.52], 2.0, &c, &cfg(64, 100, 10)).unwrap();
    assert!(r.margin >= 0.0);
    let low = model(ModelSpec::Ou(1.0), 0.3);
    let r = shift_harnack_check(&low, None, &[0.5], &[0.0], 3.0, &f, &cfg(64, 5000, 11)).unwrap();
    assert!(r.margin >= -3.0 * r.margin_se);
    let r = shift_harnack_check(&low, None, &[0.5], &[0.4], 3.0, &c, &cfg(64, 100, 11)).unwrap();
    assert!(r.margin >= 0.0 && r.admissible);
}

#[test]
fn inequality_preconditions() {
    let low = model(ModelSpec::Ou(1.0), 0.3);
    let grid = TimeGrid::new(1.0, 16).unwrap();
    assert!(HarnackSetup::new(&low, grid, None, 10, 0).is_err());
    let f = TestFunction::tanh(1);
    assert!(shift_harnack_check(&low, None, &[0.0], &[0.1], 2.0, &f, &cfg(16, 10, 0)).is_err());
    let f = TestFunction::Tanh { a: vec![1.0], offset: 2.0 };
    assert!(shift_harnack_check(&low, None, &[0.0], &[0.1], 1.0, &f, &cfg(16, 10, 0)).is_err());
    let high = model(ModelSpec::Ou(1.0), 0.7);
    assert!(shift_harnack_check(&high, None, &[0.0], &[0.1], 2.0, &f, &cfg(16, 10, 0)).is_err());
    assert!(McConfig::new(grid, 0, 1).is_err());
}

#[test]
fn results_are_reproducible_and_thread_independent() {
    let m = model(ModelSpec::TanhDrift(-1.0), 0.7);
    let f = TestFunction::Tanh { a: vec![1.0], offset: 2.0 };
    let run = || gradient_bismut(&m, &[0.3], &[1.0], &f, &cfg(64, 997, 12)).unwrap();
    let a = run();
    let b = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap().install(run);
    let c = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(run);
    assert_eq!(a, b);
    assert_eq!(a, c);
    let shifts: Vec<Vec<f64>> = (0..4).map(|k| vec![0.1 * k as f64]).collect();
    let low = model(ModelSpec::Ou(1.0), 0.3);
    let s1 = shift_harnack_sweep(&low, None, &[0.0], &shifts, 2.0, &f, &cfg(32, 300, 13)).unwrap();
    let s2 = shift_harnack_sweep(&low, None, &[0.0], &shifts, 2.0, &f, &cfg(32, 300, 13)).unwrap();
    assert_eq!(s1, s2);
}

#[test]
fn free_chain_second_moment_grows() {
    let m = model(ModelSpec::Zero, 0.7);
    let grid = TimeGrid::new(1.0, 16).unwrap();
    let opts = InvariantOptions { n_norm_paths: 50, ..Default::default() };
    let tr = invariant_measure_iterate(&m, &[0.0], grid, 20, 400, 14, &opts).unwrap();
    // Cesàro average of k·Var B_1 is about (n+1)/2
    let last = *tr.second_moments.last().unwrap();
    assert!(last > 5.0 * tr.second_moments[0]);
    assert!(tr.second_moments.windows(2).all(|w| w[1] > w[0]));
    assert!(tr.bound.is_none());
}

#[test]
fn density_smoke_errors_and_atoms() {
    let m = model(ModelSpec::Ou(1.0), 0.3);
    let grid = TimeGrid::new(1.0, 64).unwrap();
    assert!(McConfig::new(grid, 0, 1).is_err());
    let r = density_smoke(&m, &[0.5], &cfg(64, 5000, 15), 40).unwrap();
    assert!(!r.atom_flag);
    assert_eq!(r.counts.iter().sum::<usize>() + r.below + r.above, 5000);
    // unimodal: counts rise to the peak and fall after it, up to noise
    let peak = r.counts.iter().enumerate().max_by_key(|c| c.1).unwrap().0;
    assert!(r.counts[..peak].windows(2).filter(|w| w[1] + 40 < w[0]).count() == 0);
    assert!(r.counts[peak..].windows(2).filter(|w| w[1] > w[0] + 40).count() == 0);
    let high = model(ModelSpec::Zero, 0.7);
    assert!(matches!(density_smoke(&high, &[0.0], &cfg(8, 10, 0), 4), Err(Error::Domain(_))));
}
