#![allow(dead_code)]

/// Crank–Nicolson solution of `u_t = ½u_xx` on `(-d, d)` with `u = 0` at the
/// ends and `u(0, ·) = 1`, evaluated at `k` and time `t`. The first steps are
/// backward Euler to damp the corner discontinuity.
pub fn crank_nicolson_survival(d: f64, t: f64, k: f64, cells: usize, steps: usize) -> f64 {
    let m = cells - 1;
    let dx = 2.0 * d / cells as f64;
    let dt = t / steps as f64;
    let mut u = vec![1.0; m];
    let startup = 4;
    for s in 0..steps {
        // Backward Euler uses theta = 1, Crank–Nicolson theta = 1/2.
        let theta = if s < startup { 1.0 } else { 0.5 };
        let lam = 0.5 * dt / (dx * dx);
        let mut rhs = vec![0.0; m];
        for i in 0..m {
            let left = if i > 0 { u[i - 1] } else { 0.0 };
            let right = if i + 1 < m { u[i + 1] } else { 0.0 };
            rhs[i] = u[i] + (1.0 - theta) * lam * (left - 2.0 * u[i] + right);
        }
        let a = -theta * lam;
        let b = 1.0 + 2.0 * theta * lam;
        u = thomas(a, b, &rhs);
    }
    let pos = (k + d) / dx - 1.0;
    let i = pos.floor() as usize;
    let w = pos - i as f64;
    u[i] * (1.0 - w) + u[(i + 1).min(m - 1)] * w
}

fn thomas(a: f64, b: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = a / b;
    d[0] = rhs[0] / b;
    for i in 1..n {
        let den = b - a * c[i - 1];
        c[i] = a / den;
        d[i] = (rhs[i] - a * d[i - 1]) / den;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Log- or linearly-spaced grid including both ends.
pub fn grid(start: f64, stop: f64, count: usize, log: bool) -> Vec<f64> {
    (0..count)
        .map(|i| {
            let s = i as f64 / (count - 1) as f64;
            if log {
                (start.ln() + s * (stop.ln() - start.ln())).exp()
            } else {
                start + s * (stop - start)
            }
        })
        .collect()
}
