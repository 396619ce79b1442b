//! Oracles shared by the integration tests. They deliberately use methods
//! unrelated to the library's own quadrature.
#![allow(dead_code)]

/// Tanh-sinh (double exponential) quadrature of `f` on `(a, b)`.
///
/// `f` receives the point and its distances to `a` and `b`, computed without
/// cancellation, so integrands with endpoint singularities can be evaluated
/// accurately very close to the ends.
pub fn tanh_sinh(a: f64, b: f64, level: u32, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
    let h = 2f64.powi(-(level as i32));
    let half = 0.5 * (b - a);
    let mut total = 0.0;
    let kmax = (4.5 / h) as i64;
    for k in -kmax..=kmax {
        let t = k as f64 * h;
        let u = 0.5 * std::f64::consts::PI * t.sinh();
        let cu = u.cosh();
        let w = 0.5 * std::f64::consts::PI * t.cosh() / (cu * cu);
        // distances to the ends: half (1 + tanh u) and half (1 - tanh u)
        let e = (-2.0 * u.abs()).exp();
        let small = half * 2.0 * e / (1.0 + e);
        let large = 2.0 * half - small;
        let (da, db) = if u < 0.0 { (small, large) } else { (large, small) };
        if da <= 0.0 || db <= 0.0 {
            continue;
        }
        let x = if u < 0.0 { a + da } else { b - db };
        let v = f(x, da, db);
        if v.is_finite() {
            total += w * v;
        }
    }
    total * half * h
}

/// Naive Gauss–Legendre nodes on [-1, 1] by Newton iteration on Legendre
/// polynomials.
pub fn legendre_nodes(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Check `|a - b| <= k * se`, printing one line in the acceptance format.
pub fn within_se(label: &str, a: f64, b: f64, se: f64, k: f64) -> bool {
    let ok = (a - b).abs() <= k * se;
    println!("    {label}: {a:.6} vs {b:.6} (se {se:.2e}, z {:.2})", (a - b) / se.max(1e-300));
    ok
}
