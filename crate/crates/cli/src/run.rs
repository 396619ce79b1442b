//! Experiment dispatch. Each experiment returns an [`Outcome`]: a results
//! table, the constants it used, verdicts against its declared tolerances and
//! CSV tables for plotting.

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use fracsde::estimators::{
    chi_square_against, density_smoke, gradient_bismut, gradient_fd, harnack_sweep, ibp_check,
    invariant_measure_iterate, shift_harnack_sweep, HarnackSetup, InequalityReport, InvariantOptions,
    McConfig, McEstimate, TestFunction,
};
use fracsde::fbm::{fbm_covariance, Regime, VolterraPlan};
use fracsde::frac_calc::{c0_constant, k_h_inverse, rl_derivative, rl_integral, SampledFunction};
use fracsde::special::{gamma, operator_variance};
use fracsde::stats::mean_se;
use fracsde::weights::low_shift_constant;

use crate::config::{ExperimentKind, Validated};

#[derive(Debug, thiserror::Error)]
#[error("numerical failure in stage '{stage}': {source}")]
pub struct RunError {
    pub stage: String,
    pub source: fracsde::Error,
}

type Result<T> = std::result::Result<T, RunError>;

fn stage<T>(name: &str, r: fracsde::Result<T>) -> Result<T> {
    r.map_err(|source| RunError {
        stage: name.to_string(),
        source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ClosedForm,
    McEstimated,
    /// A user choice such as `δ`, `L` or `β`.
    Input,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constant {
    pub name: String,
    pub value: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub results: toml::Table,
    pub constants: Vec<Constant>,
    pub verdicts: Vec<Verdict>,
    pub tables: Vec<CsvTable>,
    pub warnings: Vec<String>,
}

impl Outcome {
    fn new(results: &impl Serialize) -> Outcome {
        Outcome {
            results: toml::Table::try_from(results).expect("results serialise to a table"),
            constants: Vec::new(),
            verdicts: Vec::new(),
            tables: Vec::new(),
            warnings: Vec::new(),
        }
    }

    fn constant(&mut self, name: impl Into<String>, value: f64, provenance: Provenance) {
        self.constants.push(Constant {
            name: name.into(),
            value,
            provenance,
        });
    }

    fn verdict(&mut self, name: &str, passed: bool, value: f64, tolerance: f64, detail: String) {
        self.verdicts.push(Verdict {
            name: name.to_string(),
            passed,
            value,
            tolerance,
            detail,
        });
    }

    /// Recorded in the report and printed by the runner.
    fn warn(&mut self, msg: String) {
        self.warnings.push(msg);
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

/// Point for a CSV cell: the number itself in one dimension, components
/// joined by `;` otherwise.
fn point(v: &[f64]) -> String {
    v.iter().map(|a| num(*a)).collect::<Vec<_>>().join(";")
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|c| c.to_string()).collect()
}

fn mc_config(v: &Validated) -> Result<McConfig> {
    let mc = v.config.mc.expect("validated experiments with Monte Carlo have [mc]");
    stage("setup", McConfig::new(v.grid, mc.n_paths, mc.seed))
}

/// Closed-form constants that every weight-based experiment reports.
fn operator_constants(out: &mut Outcome, v: &Validated) -> Result<()> {
    let h = v.model.hurst;
    out.constant("V_H", operator_variance(h.value()), Provenance::ClosedForm);
    if h.regime() == Regime::High {
        out.constant("C0", stage("constants", c0_constant(h))?, Provenance::ClosedForm);
    }
    Ok(())
}

pub fn run(v: &Validated) -> Result<Outcome> {
    let mut out = match v.config.experiment {
        ExperimentKind::CovarianceValidation => covariance(v)?,
        ExperimentKind::OperatorValidation => operators(v)?,
        ExperimentKind::BismutVsFd => bismut_vs_fd(v)?,
        ExperimentKind::IbpCheck => ibp(v)?,
        ExperimentKind::Harnack => harnack(v)?,
        ExperimentKind::ShiftHarnack => shift_harnack(v)?,
        ExperimentKind::InvariantMeasure => invariant(v)?,
        ExperimentKind::DensitySmoke => density(v)?,
    };
    if let Some(k) = v.config.output.as_ref().map(|o| o.export_paths).filter(|k| *k > 0) {
        out.tables.push(export_paths(v, k));
    }
    Ok(out)
}

/// Driving paths `0..k` of the run, on the same streams as the experiment.
fn export_paths(v: &Validated, k: usize) -> CsvTable {
    let d = v.model.dim();
    let seed = v.config.mc.map_or(0, |m| m.seed);
    let plan = VolterraPlan::new(v.grid, v.model.hurst);
    let mut cols = vec!["path".to_string(), "t".to_string()];
    cols.extend((1..=d).map(|j| format!("W_{j}")));
    cols.extend((1..=d).map(|j| format!("BH_{j}")));
    let mut rows = Vec::new();
    for p in 0..k {
        let path = plan.sample(d, seed, p as u64);
        let mut w = vec![0.0; d];
        for i in 0..=v.grid.n_steps() {
            if i > 0 {
                for (j, wj) in w.iter_mut().enumerate() {
                    *wj += path.dw(i - 1)[j];
                }
            }
            let mut row = vec![p.to_string(), num(v.grid.node(i))];
            row.extend(w.iter().map(|a| num(*a)));
            row.extend(path.fbm(i).iter().map(|a| num(*a)));
            rows.push(row);
        }
    }
    CsvTable {
        file: "paths.csv".into(),
        header: cols,
        rows,
    }
}

#[derive(Serialize)]
struct CovarianceResults {
    points: Vec<f64>,
    terminal_variance: McEstimate,
    terminal_variance_exact: f64,
    terminal_variance_rel_error: f64,
    max_abs_z: f64,
}

fn covariance(v: &Validated) -> Result<Outcome> {
    let cfg = mc_config(v)?;
    let sec = v.config.covariance.clone().unwrap_or_default();
    let n = v.grid.n_steps();
    let m = sec.points;
    let d = v.model.dim();
    let idx: Vec<usize> = (1..=m).map(|k| k * n / m).collect();
    let times: Vec<f64> = idx.iter().map(|&i| v.grid.node(i)).collect();
    let plan = VolterraPlan::new(v.grid, v.model.hurst);
    // first component only; the components are independent copies
    let samples: Vec<Vec<f64>> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let p = plan.sample(d, cfg.seed, i);
            idx.iter().map(|&j| p.fbm(j)[0]).collect()
        })
        .collect();
    let h = v.model.hurst;
    let mut rows = Vec::new();
    let mut zmax = 0.0f64;
    for a in 0..m {
        for b in a..m {
            let prod: Vec<f64> = samples.iter().map(|s| s[a] * s[b]).collect();
            let (mean, se) = mean_se(&prod);
            let exact = stage("covariance", fbm_covariance(times[a], times[b], h))?;
            let z = if se > 0.0 { (mean - exact) / se } else { 0.0 };
            zmax = zmax.max(z.abs());
            rows.push(vec![num(times[a]), num(times[b]), num(mean), num(exact), num(se), num(z)]);
        }
    }
    let var: Vec<f64> = samples.iter().map(|s| s[m - 1] * s[m - 1]).collect();
    let (vm, vse) = mean_se(&var);
    let t_end = times[m - 1];
    let exact = t_end.powf(2.0 * h.value());
    let rel = (vm - exact).abs() / exact;
    let mut out = Outcome::new(&CovarianceResults {
        points: times,
        terminal_variance: McEstimate {
            mean: vm,
            std_error: vse,
            n_paths: cfg.n_paths,
            seed: cfg.seed,
            n_failed: 0,
        },
        terminal_variance_exact: exact,
        terminal_variance_rel_error: rel,
        max_abs_z: zmax,
    });
    out.verdict(
        "terminal_variance",
        rel <= sec.variance_tolerance,
        rel,
        sec.variance_tolerance,
        format!("Var B(t={t_end}) = {vm:.6} vs {exact:.6}"),
    );
    out.verdict(
        "covariance_z",
        zmax < sec.z_tolerance,
        zmax,
        sec.z_tolerance,
        format!("max |z| over the {m}x{m} subgrid covariance"),
    );
    out.tables.push(CsvTable {
        file: "covariance.csv".into(),
        header: header(&["t", "s", "empirical", "exact", "se", "z"]),
        rows,
    });
    Ok(out)
}

#[derive(Serialize)]
struct OperatorResults {
    alpha: f64,
    power: f64,
    integral_rel_error: f64,
    inverse_sup_error: f64,
    kernel_inverse_level: f64,
    kernel_inverse_level_spread: f64,
    kernel_inverse_slope: f64,
    kernel_inverse_slope_spread: f64,
}

/// Largest relative deviation of `vals` from their value at the end.
fn spread(vals: &[f64]) -> (f64, f64) {
    let r = *vals.last().unwrap();
    (r, vals.iter().map(|v| (v - r).abs() / r.abs()).fold(0.0, f64::max))
}

fn operators(v: &Validated) -> Result<Outcome> {
    let sec = v.config.operators.clone().unwrap_or_default();
    let g = v.grid;
    let n = g.n_steps();
    let t_max = g.horizon();
    let interior: Vec<usize> = (1..=n).filter(|&i| g.node(i) >= 0.25 * t_max).collect();
    let (alpha, beta) = (sec.alpha, sec.power);

    let f = SampledFunction::from_fn(g, |t| t.powf(beta));
    let ia = stage("rl_integral", rl_integral(&f, alpha))?;
    let c = gamma(beta + 1.0) / gamma(beta + 1.0 + alpha);
    let mut rows = Vec::new();
    let mut rel = 0.0f64;
    for &i in &interior {
        let exact = c * g.node(i).powf(beta + alpha);
        rel = rel.max((ia.values[i] - exact).abs() / exact);
        rows.push(vec![num(g.node(i)), num(ia.values[i]), num(exact)]);
    }

    let s = SampledFunction::from_fn(g, f64::sin);
    let di = stage("rl_derivative", rl_integral(&s, alpha).and_then(|u| rl_derivative(&u, alpha)))?;
    let inv = (1..=n).map(|i| (di.values[i] - s.values[i]).abs()).fold(0.0, f64::max);

    // K maps s^γ to a multiple of t^{γ+H+1/2}
    let h = v.model.hurst;
    let hv = h.value();
    let level = stage("k_h_inverse", k_h_inverse(&SampledFunction::from_fn(g, |t| t.powf(hv + 0.5)), h))?;
    let slope = stage("k_h_inverse", k_h_inverse(&SampledFunction::from_fn(g, |t| t.powf(hv + 1.5)), h))?;
    let lv: Vec<f64> = interior.iter().map(|&i| level.values[i]).collect();
    let sv: Vec<f64> = interior.iter().map(|&i| slope.values[i] / g.node(i)).collect();
    let (l0, lspread) = spread(&lv);
    let (s0, sspread) = spread(&sv);

    let mut out = Outcome::new(&OperatorResults {
        alpha,
        power: beta,
        integral_rel_error: rel,
        inverse_sup_error: inv,
        kernel_inverse_level: l0,
        kernel_inverse_level_spread: lspread,
        kernel_inverse_slope: s0,
        kernel_inverse_slope_spread: sspread,
    });
    operator_constants(&mut out, v)?;
    out.verdict(
        "integral_power",
        rel <= sec.integral_tolerance,
        rel,
        sec.integral_tolerance,
        format!("max relative error of I^{alpha} t^{beta} on t >= T/4"),
    );
    out.verdict(
        "derivative_inverts_integral",
        inv <= sec.inverse_tolerance,
        inv,
        sec.inverse_tolerance,
        format!("sup |D^{alpha} I^{alpha} sin - sin|"),
    );
    let kspread = lspread.max(sspread);
    out.verdict(
        "kernel_inverse_flat",
        kspread <= sec.kernel_tolerance,
        kspread,
        sec.kernel_tolerance,
        "relative spread of K^-1(t^(H+1/2)) and K^-1(t^(H+3/2))/t on t >= T/4".into(),
    );
    out.tables.push(CsvTable {
        file: "integral.csv".into(),
        header: header(&["t", "numeric", "exact"]),
        rows,
    });
    Ok(out)
}

#[derive(Serialize)]
struct GradientResults {
    x: Vec<f64>,
    y: Vec<f64>,
    test_function: TestFunction,
    bismut: McEstimate,
    fd: McEstimate,
    fd_half_step: McEstimate,
    fd_eps: f64,
    fd_bias_bound: f64,
    abs_diff: f64,
    tolerance: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn bismut_vs_fd(v: &Validated) -> Result<Outcome> {
    let cfg = mc_config(v)?;
    let sec = v.config.bismut_vs_fd.clone().unwrap();
    let f = sec.test_function.clone().unwrap_or_else(|| TestFunction::tanh(v.model.dim()));
    let fd_eps = sec.fd_eps.unwrap_or(0.05 / norm(&sec.y));
    let b = stage("gradient_bismut", gradient_bismut(&v.model, &sec.x, &sec.y, &f, &cfg))?;
    let fd_cfg = McConfig {
        // reports are TOML, whose integers are signed
        seed: fracsde::rng::sub_seed(cfg.seed, 3) & i64::MAX as u64,
        ..cfg
    };
    let fd = stage("gradient_fd", gradient_fd(&v.model, &sec.x, &sec.y, &f, &fd_cfg, fd_eps))?;
    let diff = (b.mean - fd.estimate.mean).abs();
    let tol = 2.0 * (b.std_error + fd.estimate.std_error + fd.bias_bound);
    let mut out = Outcome::new(&GradientResults {
        x: sec.x.clone(),
        y: sec.y.clone(),
        test_function: f,
        bismut: b,
        fd: fd.estimate,
        fd_half_step: fd.half_step,
        fd_eps,
        fd_bias_bound: fd.bias_bound,
        abs_diff: diff,
        tolerance: tol,
    });
    operator_constants(&mut out, v)?;
    out.verdict(
        "bismut_matches_fd",
        diff <= tol,
        diff,
        tol,
        format!(
            "bismut {:.6} ± {:.2e}, fd {:.6} ± {:.2e} (bias {:.2e}); tolerance 2(SE_b + SE_fd + bias)",
            b.mean, b.std_error, fd.estimate.mean, fd.estimate.std_error, fd.bias_bound
        ),
    );
    Ok(out)
}

#[derive(Serialize)]
struct IbpResults {
    x: Vec<f64>,
    y: Vec<f64>,
    test_function: TestFunction,
    weight: &'static str,
    lhs: McEstimate,
    rhs: McEstimate,
    diff: McEstimate,
    z: f64,
}

fn ibp(v: &Validated) -> Result<Outcome> {
    let cfg = mc_config(v)?;
    let sec = v.config.ibp.clone().unwrap();
    let f = sec.test_function.clone().unwrap_or_else(|| TestFunction::tanh(v.model.dim()));
    let r = stage("ibp_check", ibp_check(&v.model, &sec.x, &sec.y, &f, &cfg))?;
    let z = if r.diff.std_error > 0.0 {
        r.diff.mean / r.diff.std_error
    } else if r.diff.mean == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    let weight = if v.model.hurst.regime() == Regime::Low { "N1" } else { "N2" };
    let mut out = Outcome::new(&IbpResults {
        x: sec.x.clone(),
        y: sec.y.clone(),
        test_function: f,
        weight,
        lhs: r.lhs,
        rhs: r.rhs,
        diff: r.diff,
        z,
    });
    operator_constants(&mut out, v)?;
    out.verdict(
        "ibp_identity",
        z.abs() <= 3.0,
        z.abs(),
        3.0,
        format!("E[grad_y f(X_T)] = {:.6}, E[f(X_T) {weight}] = {:.6}; |z| of the paired difference", r.lhs.mean, r.rhs.mean),
    );
    Ok(out)
}

#[derive(Serialize)]
struct Comparison {
    x: Vec<f64>,
    y: Vec<f64>,
    lhs: f64,
    lhs_se: f64,
    rhs: f64,
    rhs_se: f64,
    factor: f64,
    margin: f64,
    margin_se: f64,
    distance: f64,
    radius: f64,
    admissible: bool,
}

#[derive(Serialize)]
struct InequalityResults {
    p: f64,
    test_function: TestFunction,
    n_paths: usize,
    seed: u64,
    comparisons: Vec<Comparison>,
}

/// Default positive test function for the inequality checks, `1 + tanh²`.
fn positive_default(dim: usize) -> TestFunction {
    TestFunction::TanhSquared {
        a: vec![1.0; dim],
        offset: 1.0,
    }
}

fn inequality_outcome(
    reps: &[InequalityReport],
    p: f64,
    f: TestFunction,
    cfg: &McConfig,
    label: &str,
) -> Outcome {
    let comparisons = reps
        .iter()
        .map(|r| Comparison {
            x: r.x.clone(),
            y: r.y.clone(),
            lhs: r.lhs.mean,
            lhs_se: r.lhs.std_error,
            rhs: r.rhs.mean,
            rhs_se: r.rhs.std_error,
            factor: r.exponent_factor,
            margin: r.margin,
            margin_se: r.margin_se,
            distance: r.distance,
            radius: r.radius,
            admissible: r.admissible,
        })
        .collect();
    let mut out = Outcome::new(&InequalityResults {
        p,
        test_function: f,
        n_paths: cfg.n_paths,
        seed: cfg.seed,
        comparisons,
    });
    let checked: Vec<&InequalityReport> = reps.iter().filter(|r| r.admissible).collect();
    let skipped = reps.len() - checked.len();
    if skipped > 0 {
        out.warn(format!("{skipped} of {} {label} comparisons lie outside the admissible radius and are not gated", reps.len()));
    }
    // worst margin in units of its standard error
    let worst = checked
        .iter()
        .map(|r| if r.margin >= 0.0 { 0.0 } else if r.margin_se > 0.0 { -r.margin / r.margin_se } else { f64::INFINITY })
        .fold(0.0, f64::max);
    let passed = !checked.is_empty() && worst <= 3.0;
    out.verdict(
        &format!("{label}_margins"),
        passed,
        worst,
        3.0,
        format!(
            "{} admissible comparisons; largest shortfall -margin/SE (0 when all margins are nonnegative)",
            checked.len()
        ),
    );
    out.tables.push(CsvTable {
        file: "margins.csv".into(),
        header: header(&["x", "y_or_shift", "lhs", "rhs", "factor", "margin", "se"]),
        rows: reps
            .iter()
            .map(|r| {
                vec![
                    point(&r.x),
                    point(&r.y),
                    num(r.lhs.mean),
                    num(r.rhs.mean),
                    num(r.exponent_factor),
                    num(r.margin),
                    num(r.margin_se),
                ]
            })
            .collect(),
    });
    out
}

fn setup_constants(out: &mut Outcome, setup: &HarnackSetup) {
    out.constant("delta", setup.delta, Provenance::Input);
    out.constant("lambda0", setup.fernique.lambda0, Provenance::McEstimated);
    out.constant("B0", setup.fernique.b0, Provenance::McEstimated);
    out.constant("B0_se", setup.fernique.b0_se, Provenance::McEstimated);
}

/// `A1`, `A2` depend on the point through `d1`; one pair per comparison.
fn point_constants(out: &mut Outcome, reps: &[InequalityReport]) {
    for (k, r) in reps.iter().enumerate() {
        if let Some(c) = &r.constants {
            out.constant(format!("A1[{k}]"), c.a1, Provenance::ClosedForm);
            out.constant(format!("A2[{k}]"), c.a2, Provenance::ClosedForm);
        }
    }
}

fn harnack(v: &Validated) -> Result<Outcome> {
    let cfg = mc_config(v)?;
    let sec = v.config.harnack.clone().unwrap();
    let f = sec.test_function.clone().unwrap_or_else(|| positive_default(v.model.dim()));
    let setup = stage(
        "fernique",
        HarnackSetup::new(&v.model, v.grid, sec.delta, sec.n_fernique_paths, cfg.seed),
    )?;
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = sec.pairs.iter().map(|q| (q.x.clone(), q.y.clone())).collect();
    let reps = stage("harnack", harnack_sweep(&v.model, &setup, &pairs, sec.p, &f, &cfg))?;
    let mut out = inequality_outcome(&reps, sec.p, f, &cfg, "harnack");
    operator_constants(&mut out, v)?;
    setup_constants(&mut out, &setup);
    point_constants(&mut out, &reps);
    Ok(out)
}

fn shift_harnack(v: &Validated) -> Result<Outcome> {
    let cfg = mc_config(v)?;
    let sec = v.config.shift_harnack.clone().unwrap();
    let f = sec.test_function.clone().unwrap_or_else(|| positive_default(v.model.dim()));
    let setup = match v.model.hurst.regime() {
        Regime::High => Some(stage(
            "fernique",
            HarnackSetup::new(&v.model, v.grid, sec.delta, sec.n_fernique_paths, cfg.seed),
        )?),
        _ => None,
    };
    let reps = stage(
        "shift_harnack",
        shift_harnack_sweep(&v.model, setup.as_ref(), &sec.x, &sec.shifts, sec.p, &f, &cfg),
    )?;
    let mut out = inequality_outcome(&reps, sec.p, f, &cfg, "shift_harnack");
    operator_constants(&mut out, v)?;
    match &setup {
        Some(s) => {
            setup_constants(&mut out, s);
            point_constants(&mut out, &reps);
        }
        None => {
            let c = stage(
                "constants",
                low_shift_constant(v.model.hurst, v.model.constants.k1, v.grid.horizon()),
            )?;
            out.constant("shift_rate", c, Provenance::ClosedForm);
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct InvariantResults {
    x0: Vec<f64>,
    block_t: f64,
    n_blocks: usize,
    n_chains: usize,
    final_second_moment: f64,
    final_second_moment_se: f64,
    relative_change: f64,
    window: usize,
    /// Absent when `C14 >= 1`.
    #[serde(skip_serializing_if = "Option::is_none")]
    bound: Option<f64>,
}

fn invariant(v: &Validated) -> Result<Outcome> {
    let mc = v.config.mc.unwrap();
    let sec = v.config.invariant.clone().unwrap();
    let opts = InvariantOptions {
        l: sec.l,
        beta: sec.beta,
        n_norm_paths: sec.n_norm_paths,
    };
    let tr = stage(
        "invariant_measure",
        invariant_measure_iterate(&v.model, &sec.x0, v.grid, sec.n_blocks, mc.n_paths, mc.seed, &opts),
    )?;
    let m = &tr.second_moments;
    let last = *m.last().unwrap();
    let change = m[m.len() - 1 - sec.window..]
        .iter()
        .map(|x| (x - last).abs() / last)
        .fold(0.0, f64::max);
    let mut out = Outcome::new(&InvariantResults {
        x0: sec.x0.clone(),
        block_t: tr.block_t,
        n_blocks: tr.n_blocks,
        n_chains: tr.n_chains,
        final_second_moment: last,
        final_second_moment_se: *tr.second_moment_se.last().unwrap(),
        relative_change: change,
        window: sec.window,
        bound: tr.bound,
    });
    out.constant("L", tr.l, Provenance::Input);
    out.constant("beta", tr.beta, Provenance::Input);
    out.constant("C11", tr.c11, Provenance::McEstimated);
    out.constant("C12", tr.c12, Provenance::McEstimated);
    out.constant("C13", tr.c13, Provenance::McEstimated);
    out.constant("C14", tr.c14, Provenance::McEstimated);
    out.verdict(
        "second_moment_stable",
        change < sec.stability_tolerance,
        change,
        sec.stability_tolerance,
        format!("largest relative deviation from the final Cesàro second moment over the last {} blocks", sec.window),
    );
    match tr.bound {
        Some(b) => {
            let worst = m
                .iter()
                .zip(&tr.second_moment_se)
                .map(|(x, se)| x - b - 3.0 * se)
                .fold(f64::NEG_INFINITY, f64::max);
            out.verdict(
                "moment_bound",
                worst <= 0.0,
                worst,
                0.0,
                format!("max over blocks of m_n - bound - 3 SE, bound = {b}"),
            );
        }
        None => out.warn(format!(
            "moment bound absent: C14 = {} >= 1 for L = {} and beta = {} (these constants are conditional)",
            tr.c14, tr.l, tr.beta
        )),
    }
    out.tables.push(CsvTable {
        file: "second_moments.csv".into(),
        header: header(&["block", "second_moment", "se"]),
        rows: m
            .iter()
            .zip(&tr.second_moment_se)
            .enumerate()
            .map(|(k, (x, se))| vec![(k + 1).to_string(), num(*x), num(*se)])
            .collect(),
    });
    Ok(out)
}

#[derive(Serialize)]
struct DensityResults {
    x: Vec<f64>,
    n_paths: usize,
    n_bins: usize,
    mean: f64,
    std_dev: f64,
    max_bin_mass: f64,
    max_tie_mass: f64,
    atom_flag: bool,
    below: usize,
    above: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    chi_square: Option<fracsde::estimators::ChiSquareFit>,
}

fn density(v: &Validated) -> Result<Outcome> {
    let cfg = mc_config(v)?;
    let sec = v.config.density.clone().unwrap();
    let r = stage("density_smoke", density_smoke(&v.model, &sec.x, &cfg, sec.n_bins))?;
    // with b = 0 the law of X_T is known exactly
    let fit = if v.model.name == "zero" {
        let sd = v.grid.horizon().powf(v.model.hurst.value());
        let law = Normal::new(sec.x[0], sd).expect("positive standard deviation");
        Some(stage("chi_square", chi_square_against(&r, |z| law.cdf(z)))?)
    } else {
        None
    };
    let mut out = Outcome::new(&DensityResults {
        x: sec.x.clone(),
        n_paths: r.n_paths,
        n_bins: sec.n_bins,
        mean: r.mean,
        std_dev: r.std_dev,
        max_bin_mass: r.max_bin_mass,
        max_tie_mass: r.max_tie_mass,
        atom_flag: r.atom_flag,
        below: r.below,
        above: r.above,
        chi_square: fit,
    });
    out.verdict(
        "no_atom",
        !r.atom_flag,
        r.max_tie_mass,
        0.01,
        "largest fraction of samples sharing one value".into(),
    );
    if let Some(fit) = fit {
        out.verdict(
            "chi_square",
            fit.p_value >= 0.01,
            fit.p_value,
            0.01,
            format!("chi-square {:.3} on {} dof against the exact normal law", fit.statistic, fit.dof),
        );
    }
    let mut rows = vec![vec!["-inf".into(), num(r.edges[0]), r.below.to_string()]];
    for (k, c) in r.counts.iter().enumerate() {
        rows.push(vec![num(r.edges[k]), num(r.edges[k + 1]), c.to_string()]);
    }
    rows.push(vec![num(*r.edges.last().unwrap()), "inf".into(), r.above.to_string()]);
    out.tables.push(CsvTable {
        file: "histogram.csv".into(),
        header: header(&["lower", "upper", "count"]),
        rows,
    });
    Ok(out)
}
