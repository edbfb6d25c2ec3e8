//! Brute-force reference computations, independent of the library's
//! integrators: classical fixed-step RK4 everywhere.

#![allow(dead_code)]

/// Prüfer angle at `x2` for `phi'' + lambda q phi = 0`, `theta(x1) = 0`,
/// with `n` RK4 steps.
pub fn prufer_rk4(q: &dyn Fn(f64) -> f64, x1: f64, x2: f64, lambda: f64, n: usize) -> f64 {
    let h = (x2 - x1) / n as f64;
    let f = |x: f64, th: f64| {
        let (s, c) = th.sin_cos();
        c * c + lambda * q(x) * s * s
    };
    let mut th = 0.0;
    for k in 0..n {
        let x = x1 + h * k as f64;
        let k1 = f(x, th);
        let k2 = f(x + 0.5 * h, th + 0.5 * h * k1);
        let k3 = f(x + 0.5 * h, th + 0.5 * h * k2);
        let k4 = f(x + h, th + h * k3);
        th += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    th
}

/// Root of `theta(x2; lambda) = pi` by bisection inside `[lo, hi]` at a
/// fixed step count.
pub fn eigen_at(q: &dyn Fn(f64) -> f64, x1: f64, x2: f64, n: usize, mut lo: f64, mut hi: f64) -> f64 {
    let pi = std::f64::consts::PI;
    assert!(prufer_rk4(q, x1, x2, lo, n) < pi, "bracket low end too high");
    assert!(prufer_rk4(q, x1, x2, hi, n) > pi, "bracket high end too low");
    while hi - lo > 1e-13 * hi {
        let mid = 0.5 * (lo + hi);
        if prufer_rk4(q, x1, x2, mid, n) < pi {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Richardson extrapolation of [`eigen_at`] from `n` and `2n` steps.
pub fn eigen_oracle(q: &dyn Fn(f64) -> f64, x1: f64, x2: f64, n: usize, lo: f64, hi: f64) -> f64 {
    let coarse = eigen_at(q, x1, x2, n, lo, hi);
    let fine = eigen_at(q, x1, x2, 2 * n, lo, hi);
    (16.0 * fine - coarse) / 15.0
}

/// RK4 for `u'' = -f(x, u)` from `(0, d)` on `[0, l]`; returns the state
/// at every node.
pub fn shoot_rk4(f: &dyn Fn(f64, f64) -> f64, d: f64, l: f64, n: usize) -> Vec<(f64, f64, f64)> {
    let h = l / n as f64;
    let rhs = |x: f64, u: f64, v: f64| (v, -f(x, u));
    let (mut u, mut v) = (0.0, d);
    let mut out = Vec::with_capacity(n + 1);
    out.push((0.0, u, v));
    for k in 0..n {
        let x = h * k as f64;
        let (a1, b1) = rhs(x, u, v);
        let (a2, b2) = rhs(x + 0.5 * h, u + 0.5 * h * a1, v + 0.5 * h * b1);
        let (a3, b3) = rhs(x + 0.5 * h, u + 0.5 * h * a2, v + 0.5 * h * b2);
        let (a4, b4) = rhs(x + h, u + h * a3, v + h * b3);
        u += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        v += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        out.push((if k + 1 == n { l } else { h * (k + 1) as f64 }, u, v));
    }
    out
}

/// RK4 for the radial equation `v'' + (N-1)/r v' + A(r) g(v) = 0` from
/// `v(r1) = 0`, `v'(r1) = slope` on `[r1, r2]` with `n` steps.
pub fn radial_rk4(
    dim: u32,
    a: &dyn Fn(f64) -> f64,
    g: &dyn Fn(f64) -> f64,
    r1: f64,
    r2: f64,
    slope: f64,
    n: usize,
) -> Vec<(f64, f64, f64)> {
    let k = dim as f64 - 1.0;
    let h = (r2 - r1) / n as f64;
    let rhs = |r: f64, v: f64, w: f64| (w, -k / r * w - a(r) * g(v.max(0.0)));
    let (mut v, mut w) = (0.0, slope);
    let mut out = Vec::with_capacity(n + 1);
    out.push((r1, v, w));
    for j in 0..n {
        let r = r1 + h * j as f64;
        let (a1, b1) = rhs(r, v, w);
        let (a2, b2) = rhs(r + 0.5 * h, v + 0.5 * h * a1, w + 0.5 * h * b1);
        let (a3, b3) = rhs(r + 0.5 * h, v + 0.5 * h * a2, w + 0.5 * h * b2);
        let (a4, b4) = rhs(r + h, v + h * a3, w + h * b3);
        v += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        w += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        out.push((if j + 1 == n { r2 } else { r1 + h * (j + 1) as f64 }, v, w));
    }
    out
}

/// Figure-1 forcing `a_mu(x) g(u)` written out by hand.
pub fn figure1_forcing(mu: f64) -> impl Fn(f64, f64) -> f64 {
    move |x: f64, u: f64| {
        let a = (3.0 * std::f64::consts::PI * x).sin();
        let a_mu = if a >= 0.0 { a } else { mu * a };
        let g = if u > 0.0 { 100.0 * u * u.atan() } else { 0.0 };
        a_mu * g
    }
}
