//! Exact one-dimensional references on `[0, d]`: the Neumann heat kernel,
//! the half-interval mass `V(t, x)`, the exact TV distance to uniform, and
//! a bridge-corrected exit-time Monte Carlo for `(-d, d)`.

use crate::bounds::survival_f;
use crate::coupling::steps_to_cover;
use crate::error::{invalid, Error, Result};
use crate::quadrature::{integrate_pieces, sign_changes};
use crate::rng::replicate_stream;
use crate::stats::{survival_curve, SurvivalCurve, TimeSample};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::fmt::Write as _;

pub const DEFAULT_SPECTRAL_TERMS: usize = 100_000;
const IMAGE_TERMS: usize = 10_000;
const TV_QUAD_TOL: f64 = 1e-8;
const SIGN_SCAN: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Heat1D {
    d: f64,
    spectral_terms: usize,
    tol: f64,
}

impl Heat1D {
    pub fn new(d: f64) -> Result<Self> {
        Self::with_budget(d, DEFAULT_SPECTRAL_TERMS, 1e-13)
    }

    pub fn with_budget(d: f64, spectral_terms: usize, tol: f64) -> Result<Self> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(invalid("d", format!("must be positive (got {d})")));
        }
        if !(tol > 0.0) {
            return Err(invalid("tol", format!("must be positive (got {tol})")));
        }
        if spectral_terms == 0 {
            return Err(invalid("spectral_terms", "must be positive"));
        }
        Ok(Self {
            d,
            spectral_terms,
            tol,
        })
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    fn check_point(&self, name: &'static str, x: f64) -> Result<()> {
        if !(0.0..=self.d).contains(&x) {
            return Err(invalid(name, format!("must lie in [0, {}] (got {x})", self.d)));
        }
        Ok(())
    }

    /// Transition density of reflected BM on `[0, d]`. Symmetric in `(x, y)`
    /// bit for bit.
    pub fn neumann_kernel(&self, t: f64, x: f64, y: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(invalid("t", format!("must be positive (got {t})")));
        }
        self.check_point("x", x)?;
        self.check_point("y", y)?;
        let (x, y) = (x.min(y), x.max(y));
        if t >= self.d * self.d / 8.0 {
            self.kernel_spectral(t, x, y)
        } else {
            self.kernel_images(t, x, y)
        }
    }

    fn kernel_spectral(&self, t: f64, x: f64, y: f64) -> Result<f64> {
        let d = self.d;
        let beta = PI * PI * t / (2.0 * d * d);
        let mut sum = 0.0;
        for m in 1..=self.spectral_terms {
            let mf = m as f64;
            let decay = (-beta * mf * mf).exp();
            sum += decay * (mf * PI * x / d).cos() * (mf * PI * y / d).cos();
            // Remaining terms are bounded by a geometric series in e^{-β(2m+1)}.
            let ratio = (-beta * (2.0 * mf + 1.0)).exp();
            let tail = 2.0 / d * decay * ratio / (1.0 - ratio);
            if tail < self.tol {
                return Ok((1.0 + 2.0 * sum) / d);
            }
        }
        Err(Error::SeriesBudget {
            tol: self.tol,
            budget: self.spectral_terms,
        })
    }

    fn kernel_images(&self, t: f64, x: f64, y: f64) -> Result<f64> {
        let d = self.d;
        let norm = 1.0 / (2.0 * PI * t).sqrt();
        let phi = |z: f64| norm * (-z * z / (2.0 * t)).exp();
        let mut sum = 0.0;
        for j in 0..=IMAGE_TERMS as i64 {
            let shifts: &[i64] = if j == 0 { &[0] } else { &[j, -j] };
            for &s in shifts {
                let o = 2.0 * s as f64 * d;
                sum += phi(y - x + o) + phi(y + x + o);
            }
            // Each omitted term at level ≥ j+1 is at most φ(2j·d); consecutive
            // levels shrink by at least e^{-(2d)²/2t}.
            let ratio = (-(2.0 * d) * (2.0 * d) / (2.0 * t)).exp();
            let tail = 4.0 * phi(2.0 * j as f64 * d) / (1.0 - ratio);
            if j >= 1 && tail < self.tol {
                return Ok(sum);
            }
        }
        Err(Error::SeriesBudget {
            tol: self.tol,
            budget: IMAGE_TERMS,
        })
    }

    /// `V(t, x) = P_x(X_t ≤ d/2)`; the indicator `x ≤ d/2` at `t = 0`.
    pub fn cdf_v(&self, t: f64, x: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(invalid("t", format!("must be nonnegative (got {t})")));
        }
        self.check_point("x", x)?;
        if t == 0.0 {
            return Ok(if x <= self.d / 2.0 { 1.0 } else { 0.0 });
        }
        let f = survival_f(self.d, 4.0 * t, 2.0 * x, self.tol)?;
        Ok(0.5 + 0.5 * f.value)
    }

    /// `V(t, x)` by integrating the kernel over `[0, d/2]`.
    pub fn cdf_v_quadrature(&self, t: f64, x: f64) -> Result<f64> {
        let q = integrate_pieces(
            |y| self.neumann_kernel(t, x, y).unwrap_or(f64::NAN),
            &[0.0, x.min(self.d / 2.0), self.d / 2.0],
            1e-10,
        )?;
        Ok(q.value)
    }

    /// `|V(t, x) - 1/2|`, the TV lower-bound witness from the set `[0, d/2]`.
    pub fn half_interval_witness(&self, t: f64, x: f64) -> Result<f64> {
        Ok((self.cdf_v(t, x)? - 0.5).abs())
    }

    /// `½ ∫₀^d |p(t, x, y) - 1/d| dy`.
    pub fn exact_tv(&self, t: f64, x: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(invalid("t", format!("must be positive (got {t})")));
        }
        self.check_point("x", x)?;
        let level = 1.0 / self.d;
        let g = |y: f64| self.neumann_kernel(t, x, y).map(|p| p - level).unwrap_or(f64::NAN);
        let mut breaks = vec![0.0];
        breaks.extend(sign_changes(g, 0.0, self.d, SIGN_SCAN));
        if x > 0.0 && x < self.d {
            breaks.push(x);
        }
        breaks.push(self.d);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let q = integrate_pieces(|y| g(y).abs(), &breaks, TV_QUAD_TOL)?;
        if q.value.is_nan() {
            return Err(Error::Quadrature {
                error: f64::NAN,
                tol: TV_QUAD_TOL,
            });
        }
        Ok(0.5 * q.value)
    }

    /// Evaluates `½F ≤ exact_tv(t, x) ≤ F` with `F = F_d(4t, 2x)` at each time.
    pub fn tightness_sweep(&self, times: &[f64], x: f64) -> Result<Vec<TightnessRow>> {
        times
            .iter()
            .map(|&t| {
                let tv = self.exact_tv(t, x)?;
                let full = survival_f(self.d, 4.0 * t, 2.0 * x, self.tol)?.value.abs();
                let half = 0.5 * full;
                Ok(TightnessRow {
                    t,
                    x,
                    exact_tv: tv,
                    f_half: half,
                    f_full: full,
                    pass: half <= tv + TV_QUAD_TOL && tv <= full + TV_QUAD_TOL,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TightnessRow {
    pub t: f64,
    pub x: f64,
    pub exact_tv: f64,
    pub f_half: f64,
    pub f_full: f64,
    pub pass: bool,
}

pub const TIGHTNESS_CSV_HEADER: &str = "t,x,exact_tv,F_half,F_full,pass";

pub fn tightness_csv(rows: &[TightnessRow]) -> String {
    let mut out = format!("{TIGHTNESS_CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{:.12e},{:.12e},{:.12e},{}",
            r.t, r.x, r.exact_tv, r.f_half, r.f_full, r.pass
        );
    }
    out
}

/// Probability that a Brownian bridge from `a` to `b` over time `h` touches
/// either end of `(-d, d)`.
fn bridge_exit_probability(d: f64, a: f64, b: f64, h: f64) -> f64 {
    let up = 2.0 * (d - a) * (d - b) / h;
    let low = 2.0 * (a + d) * (b + d) / h;
    // e^{-50} is below the resolution of a uniform draw.
    let p_up = if up > 50.0 { 0.0 } else { (-up).exp() };
    let p_low = if low > 50.0 { 0.0 } else { (-low).exp() };
    1.0 - (1.0 - p_up) * (1.0 - p_low)
}

/// Exit times of unreflected BM from `(-d, d)` started at `k`, monitored
/// every `h` with a bridge correction, summarized as a survival curve.
pub fn exit_time_survival_mc(
    d: f64,
    k: f64,
    t_grid: &[f64],
    n_paths: usize,
    h: f64,
    alpha: f64,
    seed: u64,
) -> Result<SurvivalCurve> {
    if !(d > 0.0) {
        return Err(invalid("d", "must be positive"));
    }
    if !(k.abs() < d) {
        return Err(invalid("k", format!("must satisfy |k| < d (got {k})")));
    }
    if !(h > 0.0 && h <= 1e-3 * d * d) {
        return Err(invalid("h", format!("must lie in (0, 1e-3·d²] (got {h})")));
    }
    let horizon = t_grid.iter().copied().fold(0.0, f64::max);
    let max_steps = steps_to_cover(horizon, h);
    let sqrt_h = h.sqrt();
    let samples: Vec<TimeSample> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_stream(seed, i);
            let mut w = k;
            for step in 1..=max_steps {
                let z: f64 = rng.sample(StandardNormal);
                let next = w + sqrt_h * z;
                let t = step as f64 * h;
                if next.abs() >= d {
                    return TimeSample::event(t);
                }
                let p = bridge_exit_probability(d, w, next, h);
                if p > 0.0 && rng.random::<f64>() < p {
                    return TimeSample::event(t);
                }
                w = next;
            }
            TimeSample::censored((max_steps as f64 * h).max(horizon))
        })
        .collect();
    survival_curve(&samples, t_grid, alpha)
}
