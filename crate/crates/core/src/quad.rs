//! Gauss-Legendre quadrature: fixed rules, composite rules over a grid,
//! and an adaptive driver.

use std::sync::OnceLock;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn rule(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static R5: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    static R10: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    static R20: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    match n {
        5 => R5.get_or_init(|| gauss_legendre(5)),
        10 => R10.get_or_init(|| gauss_legendre(10)),
        20 => R20.get_or_init(|| gauss_legendre(20)),
        _ => panic!("unsupported cached rule {n}"),
    }
}

/// Fixed `n`-point rule (n in {5, 10, 20}) on `[a, b]`.
pub fn fixed<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
    let (x, w) = rule(n);
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    x.iter().zip(w).map(|(xi, wi)| wi * f(mid + half * xi)).sum::<f64>() * half
}

/// Composite rule with `n` points per panel over the panels of `grid`.
pub fn composite<F: Fn(f64) -> f64>(f: &F, grid: &[f64], n: usize) -> f64 {
    grid.windows(2).map(|w| fixed(f, w[0], w[1], n)).sum()
}

/// Most panels [`adaptive`] keeps before returning its best estimate.
pub const ADAPTIVE_MAX_PANELS: usize = 4000;

/// Globally adaptive bisection: the panel with the largest error estimate
/// (difference between its rule value and the sum over its halves) is split
/// until the total estimate is below `tol` or the panel budget is spent.
pub fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    struct Panel {
        a: f64,
        b: f64,
        value: f64,
        err: f64,
    }
    let panel = |a: f64, b: f64| {
        let m = 0.5 * (a + b);
        let (l, r) = (fixed(f, a, m, 10), fixed(f, m, b, 10));
        Panel { a, b, value: l + r, err: (l + r - fixed(f, a, b, 10)).abs() }
    };
    if a == b {
        return 0.0;
    }
    let mut panels = vec![panel(a, b)];
    loop {
        let total_err: f64 = panels.iter().map(|p| p.err).sum();
        let total: f64 = panels.iter().map(|p| p.value).sum();
        let floor = 8.0 * f64::EPSILON * panels.iter().map(|p| p.value.abs()).sum::<f64>();
        if total_err <= tol.max(floor) || panels.len() >= ADAPTIVE_MAX_PANELS || !total.is_finite() {
            return total;
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .expect("at least one panel");
        let worst = panels.swap_remove(idx);
        let m = 0.5 * (worst.a + worst.b);
        if !(m > worst.a && m < worst.b) {
            // Cannot split further; keep it with zero weight in the error.
            panels.push(Panel { err: 0.0, ..worst });
            continue;
        }
        panels.push(panel(worst.a, m));
        panels.push(panel(m, worst.b));
    }
}

/// Integral over `[a, b]` of an integrand that may carry inverse
/// square-root singularities at either endpoint. Each half of the interval
/// is mapped by `x = end + (mid - end) u^2`, which cancels the singularity.
pub fn endpoint_singular<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let mid = 0.5 * (a + b);
    let left = |u: f64| {
        let d = mid - a;
        f(a + d * u * u) * 2.0 * d * u
    };
    let right = |u: f64| {
        let d = mid - b;
        f(b + d * u * u) * 2.0 * d * u
    };
    adaptive(&left, 0.0, 1.0, 0.5 * tol) - adaptive(&right, 0.0, 1.0, 0.5 * tol)
}
