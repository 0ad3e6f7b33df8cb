//! Closed-form mixing bounds.
//!
//! The central object is `F_d(t, k)`, the probability that a standard
//! Brownian motion started at `k` has not left `(-d, d)` by time `t`. It is
//! evaluated either by its cosine eigenseries (fast for large `t`) or by the
//! method-of-images Gaussian sum (fast for small `t`); both carry a rigorous
//! truncation bound.

use crate::error::{invalid, Error, Result};
use crate::geometry::ConvexBody;
use crate::linalg;
use rand::Rng;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt::Write as _;

pub const DEFAULT_TOL: f64 = 1e-10;
const SPECTRAL_TERM_BUDGET: usize = 1_000_000;
const IMAGE_TERM_BUDGET: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Spectral,
    Images,
}

/// A truncated series value with its truncation certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesEval {
    pub value: f64,
    pub terms_used: usize,
    pub truncation_error_bound: f64,
    pub representation: Representation,
}

/// Time at which [`survival_f`] switches from images to the eigenseries.
pub fn crossover_time(d: f64) -> f64 {
    0.5 * d * d
}

fn check_d(d: f64) -> Result<()> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(invalid("d", format!("must be positive and finite (got {d})")));
    }
    Ok(())
}

fn check_common(d: f64, t: f64, tol: f64) -> Result<()> {
    check_d(d)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(invalid("t", format!("must be nonnegative (got {t})")));
    }
    if !(tol > 0.0) {
        return Err(invalid("tol", format!("must be positive (got {tol})")));
    }
    Ok(())
}

/// Maps `k` into `[0, d]` using evenness, 4d-periodicity and the odd
/// symmetry `F(t, 2d - k) = -F(t, k)` of the eigenseries. Returns the sign
/// to apply and the reduced offset.
fn reduce_offset(d: f64, k: f64) -> (f64, f64) {
    let period = 4.0 * d;
    let mut k = k.abs() % period;
    if k > 2.0 * d {
        k = period - k;
    }
    if k > d {
        (-1.0, 2.0 * d - k)
    } else {
        (1.0, k)
    }
}

/// `F_d(t, k)`: spectral series for `t ≥ d²/2`, Gaussian images below.
///
/// `k` may be any real; the probabilistic meaning only holds for `|k| ≤ d`.
/// Values are never clamped.
pub fn survival_f(d: f64, t: f64, k: f64, tol: f64) -> Result<SeriesEval> {
    check_common(d, t, tol)?;
    if t == 0.0 {
        let (sign, kr) = reduce_offset(d, k);
        let value = if kr < d { sign } else { 0.0 };
        return Ok(SeriesEval {
            value,
            terms_used: 0,
            truncation_error_bound: 0.0,
            representation: Representation::Images,
        });
    }
    if t >= crossover_time(d) {
        survival_f_spectral(d, t, k, tol)
    } else {
        survival_f_images(d, t, k, tol)
    }
}

/// The alternating cosine eigenseries
/// `Σ_n e^{-π²(2n+1)²t/8d²} · 4(-1)^n/(π(2n+1)) · cos((2n+1)πk/2d)`.
pub fn survival_f_spectral(d: f64, t: f64, k: f64, tol: f64) -> Result<SeriesEval> {
    check_common(d, t, tol)?;
    let alpha = PI * PI / (8.0 * d * d);
    let phase = PI * k / (2.0 * d);
    let mut value = 0.0;
    for n in 0..SPECTRAL_TERM_BUDGET {
        let m = (2 * n + 1) as f64;
        let coeff = 4.0 / (PI * m);
        let decay = (-alpha * m * m * t).exp();
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let magnitude = coeff * decay;
        value += sign * magnitude * (m * phase).cos();
        // Remaining terms start at index n+1; successive exponent gaps grow,
        // so their magnitudes are dominated by a geometric series.
        let m_next = m + 2.0;
        let next = 4.0 / (PI * m_next) * (-alpha * m_next * m_next * t).exp();
        let ratio = (-8.0 * alpha * (n as f64 + 2.0) * t).exp();
        let tail = if ratio < 1.0 { next / (1.0 - ratio) } else { f64::INFINITY };
        if magnitude < 0.5 * tol && tail < 0.5 * tol {
            return Ok(SeriesEval {
                value,
                terms_used: n + 1,
                truncation_error_bound: tail,
                representation: Representation::Spectral,
            });
        }
    }
    Err(Error::SeriesBudget {
        tol,
        budget: SPECTRAL_TERM_BUDGET,
    })
}

/// Upper Gaussian tail `P(Z > z)`.
fn gauss_tail(z: f64) -> f64 {
    0.5 * libm::erfc(z * FRAC_1_SQRT_2)
}

/// `P(lo < Z < hi)` computed without cancellation in either tail.
fn gauss_mass(lo: f64, hi: f64) -> f64 {
    if lo >= 0.0 {
        gauss_tail(lo) - gauss_tail(hi)
    } else if hi <= 0.0 {
        gauss_tail(-hi) - gauss_tail(-lo)
    } else {
        1.0 - gauss_tail(-lo) - gauss_tail(hi)
    }
}

/// Method-of-images form of `F_d(t, k)`.
///
/// With `L = 2d` and `x = k + d ∈ [0, L]`, the killed heat kernel on
/// `(0, L)` is `Σ_j φ_t(y - x + 2jL) - φ_t(y + x + 2jL)`; integrating over
/// `y ∈ (0, L)` gives a sum of Gaussian interval masses. Terms with
/// `|j| ≥ 2` have every endpoint at distance `≥ (2|j|-2)L/√t` from zero.
pub fn survival_f_images(d: f64, t: f64, k: f64, tol: f64) -> Result<SeriesEval> {
    check_common(d, t, tol)?;
    let (sign, kr) = reduce_offset(d, k);
    if t == 0.0 {
        return survival_f(d, 0.0, k, tol);
    }
    let len = 2.0 * d;
    let x = kr + d;
    let s = t.sqrt();
    let level = |j: f64| -> f64 {
        let shift = 2.0 * j * len;
        gauss_mass((shift - x) / s, (shift + len - x) / s)
            - gauss_mass((shift + x) / s, (shift + len + x) / s)
    };
    let step = 2.0 * len / s;
    let ratio = (-0.5 * step * step).exp();
    let mut value = level(0.0);
    let mut terms = 1;
    for j in 1..IMAGE_TERM_BUDGET {
        let jf = j as f64;
        value += level(jf) + level(-jf);
        terms += 2;
        // Bound on Σ_{|i| > j} |level(i)|.
        let a_next = (2.0 * (jf + 1.0) - 2.0) * len / s;
        let tail = 4.0 * gauss_tail(a_next) / (1.0 - ratio);
        if tail < tol {
            return Ok(SeriesEval {
                value: sign * value,
                terms_used: terms,
                truncation_error_bound: tail,
                representation: Representation::Images,
            });
        }
    }
    Err(Error::SeriesBudget {
        tol,
        budget: IMAGE_TERM_BUDGET,
    })
}

/// Chernoff bound on `F_d(t, k)` from the exit-time moment generating
/// function `E e^{γτ} = cos(√(2γ)k) / cos(√(2γ)d)`, minimized over
/// `γ ∈ (0, π²/8d²)`.
pub fn chernoff_survival_bound(d: f64, t: f64, k: f64) -> Result<f64> {
    chernoff_optimum(d, t, k).map(|(v, _)| v)
}

/// Returns `(bound, argmin γ)`.
pub fn chernoff_optimum(d: f64, t: f64, k: f64) -> Result<(f64, f64)> {
    check_d(d)?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid("t", format!("must be positive (got {t})")));
    }
    if !(k.abs() < d) {
        return Err(invalid("k", format!("|k| must be below d (got {k})")));
    }
    let gamma_max = PI * PI / (8.0 * d * d);
    // ln MGF is a cumulant generating function, hence convex, so the
    // objective is unimodal on the open interval.
    let objective = |g: f64| {
        let w = (2.0 * g).sqrt();
        -g * t + (w * k).cos().ln() - (w * d).cos().ln()
    };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = 0.0;
    let mut b = gamma_max * (1.0 - 1e-12);
    let mut c = b - inv_phi * (b - a);
    let mut e = a + inv_phi * (b - a);
    let mut fc = objective(c);
    let mut fe = objective(e);
    while b - a > 1e-10 * gamma_max {
        if fc < fe {
            b = e;
            e = c;
            fe = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + inv_phi * (b - a);
            fe = objective(e);
        }
    }
    let gamma = 0.5 * (a + b);
    let best = objective(gamma).min(0.0);
    Ok((best.exp(), if best == 0.0 { 0.0 } else { gamma }))
}

/// `√(d² / 2πt)`, reported unclamped.
pub fn matthews_bound(d: f64, t: f64) -> Result<f64> {
    check_d(d)?;
    if !(t > 0.0) {
        return Err(invalid("t", format!("must be positive (got {t})")));
    }
    Ok((d * d / (2.0 * PI * t)).sqrt())
}

/// The Poincaré rate `λ = π/d` for a convex set of diameter `d`.
pub fn bebendorf_rate(d: f64) -> Result<f64> {
    check_d(d)?;
    Ok(PI / d)
}

/// `e^{-λ²t/2} · c` with `c = ‖g - 1/Vol‖·‖f‖` supplied by the caller.
pub fn bebendorf_envelope(d: f64, t: f64, c: f64) -> Result<f64> {
    let lambda = bebendorf_rate(d)?;
    if !(t >= 0.0) {
        return Err(invalid("t", format!("must be nonnegative (got {t})")));
    }
    Ok((-0.5 * lambda * lambda * t).exp() * c)
}

/// `‖p(t,x,·) - p(t,y,·)‖_TV ≤ F_d(4t, d - |x-y|)`, clamped to `[0, 1]`.
pub fn tv_bound_pair(d: f64, t: f64, dist_xy: f64, tol: f64) -> Result<f64> {
    check_d(d)?;
    if !(dist_xy >= 0.0) {
        return Err(invalid("dist_xy", "must be nonnegative"));
    }
    if dist_xy > d * (1.0 + 1e-12) {
        return Err(invalid(
            "dist_xy",
            format!("{dist_xy} exceeds the diameter {d}"),
        ));
    }
    if dist_xy == 0.0 {
        // F_d(·, d) vanishes by antisymmetry about d.
        return Ok(0.0);
    }
    let k = (d - dist_xy).max(0.0);
    Ok(survival_f(d, 4.0 * t, k, tol)?.value.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryBound {
    pub avg_bound: f64,
    pub worst_bound: f64,
    pub mc_stderr: f64,
}

/// Averages the pairwise bound over `y ~ σ`, and reports the worst case
/// `F_d(4t, 0)` alongside.
pub fn tv_bound_stationary<R: Rng + ?Sized>(
    body: &ConvexBody,
    t: f64,
    x: &[f64],
    n_samples: usize,
    rng: &mut R,
    tol: f64,
) -> Result<StationaryBound> {
    if n_samples < 100 {
        return Err(invalid("n_samples", "must be at least 100"));
    }
    if !body.contains(x)? {
        return Err(invalid("x", "must lie in the closed body"));
    }
    let ys = (0..n_samples)
        .map(|_| body.sample_uniform(rng).map(|s| s.point))
        .collect::<Result<Vec<_>>>()?;
    stationary_from_samples(body.diameter(), t, x, &ys, tol)
}

fn stationary_from_samples(
    d: f64,
    t: f64,
    x: &[f64],
    ys: &[Vec<f64>],
    tol: f64,
) -> Result<StationaryBound> {
    let vals = ys
        .iter()
        .map(|y| tv_bound_pair(d, t, linalg::dist(x, y).min(d), tol))
        .collect::<Result<Vec<_>>>()?;
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok(StationaryBound {
        avg_bound: mean,
        worst_bound: survival_f(d, 4.0 * t, 0.0, tol)?.value.clamp(0.0, 1.0),
        mc_stderr: (var / n).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    FPair,
    FStationaryAvg,
    FStationaryWorst,
    Chernoff,
    Matthews,
    BebendorfRate,
}

impl BoundKind {
    pub const ALL: [BoundKind; 6] = [
        BoundKind::FPair,
        BoundKind::FStationaryAvg,
        BoundKind::FStationaryWorst,
        BoundKind::Chernoff,
        BoundKind::Matthews,
        BoundKind::BebendorfRate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundKind::FPair => "F_pair",
            BoundKind::FStationaryAvg => "F_stationary_avg",
            BoundKind::FStationaryWorst => "F_stationary_worst",
            BoundKind::Chernoff => "chernoff",
            BoundKind::Matthews => "matthews",
            BoundKind::BebendorfRate => "bebendorf_rate",
        }
    }

    /// Survival-type kinds are non-increasing in t.
    pub fn is_survival_type(self) -> bool {
        matches!(
            self,
            BoundKind::FPair
                | BoundKind::FStationaryAvg
                | BoundKind::FStationaryWorst
                | BoundKind::Chernoff
        )
    }
}

impl std::str::FromStr for BoundKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BoundKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| invalid("bound_kind", format!("unknown kind `{s}`")))
    }
}

/// A bound evaluated on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCurve {
    pub kind: BoundKind,
    pub d: f64,
    /// `|x-y|` for F_pair, `k` for chernoff, `c` for bebendorf_rate, the
    /// sample count for F_stationary_avg.
    pub param: Option<f64>,
    pub t_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub terms_used: Vec<usize>,
    pub trunc_err: Vec<f64>,
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(invalid("t_grid", "must be nonempty"));
    }
    if t_grid.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(invalid("t_grid", "times must be finite and nonnegative"));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("t_grid", "must be strictly ascending"));
    }
    Ok(())
}

impl BoundCurve {
    fn from_series(
        kind: BoundKind,
        d: f64,
        param: Option<f64>,
        t_grid: &[f64],
        f: impl Fn(f64) -> Result<SeriesEval>,
    ) -> Result<Self> {
        check_grid(t_grid)?;
        let evals = t_grid.iter().map(|&t| f(t)).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            kind,
            d,
            param,
            t_grid: t_grid.to_vec(),
            values: evals.iter().map(|e| e.value.clamp(0.0, 1.0)).collect(),
            terms_used: evals.iter().map(|e| e.terms_used).collect(),
            trunc_err: evals.iter().map(|e| e.truncation_error_bound).collect(),
        })
    }

    fn from_values(
        kind: BoundKind,
        d: f64,
        param: Option<f64>,
        t_grid: &[f64],
        f: impl Fn(f64) -> Result<f64>,
    ) -> Result<Self> {
        check_grid(t_grid)?;
        let values = t_grid.iter().map(|&t| f(t)).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            kind,
            d,
            param,
            t_grid: t_grid.to_vec(),
            values,
            terms_used: vec![0; t_grid.len()],
            trunc_err: vec![0.0; t_grid.len()],
        })
    }

    pub fn f_pair(d: f64, dist_xy: f64, t_grid: &[f64], tol: f64) -> Result<Self> {
        tv_bound_pair(d, 0.0, dist_xy, tol)?;
        let k = (d - dist_xy).max(0.0);
        Self::from_series(BoundKind::FPair, d, Some(dist_xy), t_grid, |t| {
            survival_f(d, 4.0 * t, k, tol)
        })
    }

    pub fn f_stationary_worst(d: f64, t_grid: &[f64], tol: f64) -> Result<Self> {
        Self::from_series(BoundKind::FStationaryWorst, d, None, t_grid, |t| {
            survival_f(d, 4.0 * t, 0.0, tol)
        })
    }

    /// The σ-average of the pairwise bound. One sample set is shared across
    /// the grid so the curve is monotone in t.
    pub fn f_stationary_avg<R: Rng + ?Sized>(
        body: &ConvexBody,
        x: &[f64],
        t_grid: &[f64],
        n_samples: usize,
        rng: &mut R,
        tol: f64,
    ) -> Result<Self> {
        if n_samples < 100 {
            return Err(invalid("n_samples", "must be at least 100"));
        }
        if !body.contains(x)? {
            return Err(invalid("x", "must lie in the closed body"));
        }
        let ys = (0..n_samples)
            .map(|_| body.sample_uniform(rng).map(|s| s.point))
            .collect::<Result<Vec<_>>>()?;
        let d = body.diameter();
        Self::from_values(
            BoundKind::FStationaryAvg,
            d,
            Some(n_samples as f64),
            t_grid,
            |t| stationary_from_samples(d, t, x, &ys, tol).map(|s| s.avg_bound),
        )
    }

    pub fn chernoff(d: f64, k: f64, t_grid: &[f64]) -> Result<Self> {
        Self::from_values(BoundKind::Chernoff, d, Some(k), t_grid, |t| {
            if t == 0.0 {
                Ok(1.0)
            } else {
                chernoff_survival_bound(d, t, k)
            }
        })
    }

    pub fn matthews(d: f64, t_grid: &[f64]) -> Result<Self> {
        Self::from_values(BoundKind::Matthews, d, None, t_grid, |t| matthews_bound(d, t))
    }

    pub fn bebendorf(d: f64, c: f64, t_grid: &[f64]) -> Result<Self> {
        Self::from_values(BoundKind::BebendorfRate, d, Some(c), t_grid, |t| {
            bebendorf_envelope(d, t, c)
        })
    }

    pub const CSV_HEADER: &'static str = "t,value,bound_kind,d,param,terms_used,trunc_err";

    /// Appends one row per grid time (no header).
    pub fn write_csv_rows(&self, out: &mut String) {
        for i in 0..self.t_grid.len() {
            let param = self.param.map(|p| p.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{:e}",
                self.t_grid[i],
                self.values[i],
                self.kind.as_str(),
                self.d,
                param,
                self.terms_used[i],
                self.trunc_err[i]
            );
        }
    }

    pub fn to_csv(&self) -> String {
        write_curves_csv(std::slice::from_ref(self))
    }
}

/// Header plus the rows of every curve, in the order given.
pub fn write_curves_csv(curves: &[BoundCurve]) -> String {
    let mut out = String::new();
    out.push_str(BoundCurve::CSV_HEADER);
    out.push('\n');
    for c in curves {
        c.write_csv_rows(&mut out);
    }
    out
}

/// Series values frozen from an independent 50-digit evaluation.
#[cfg(test)]
pub(crate) mod tests_support {
    pub const F1_T1_K0: f64 = 0.370_777_429_799_523_9;
    pub const F1_T4_K0: f64 = 0.009_156_990_289_760_756;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replicate_stream;

    // High-precision evaluation of the eigenseries (mpmath, 30 digits).
    use super::tests_support::{F1_T1_K0, F1_T4_K0};

    #[test]
    fn small_time_from_center() {
        let e = survival_f(1.0, 1e-6, 0.0, 1e-12).unwrap();
        assert_eq!(e.representation, Representation::Images);
        assert!((e.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn started_on_the_boundary() {
        for t in [1e-4, 0.1, 0.5, 1.0, 3.0] {
            let e = survival_f(1.0, t, 1.0, 1e-10).unwrap();
            assert!(e.value.abs() <= 1e-10, "t={t}: {}", e.value);
        }
    }

    #[test]
    fn golden_values() {
        let a = survival_f(1.0, 1.0, 0.0, 1e-12).unwrap();
        assert_eq!(a.representation, Representation::Spectral);
        assert!((a.value - F1_T1_K0).abs() < 1e-11);
        let b = survival_f(1.0, 4.0, 0.0, 1e-12).unwrap();
        assert!((b.value - F1_T4_K0).abs() < 1e-12);
        // One dominant term: the second is below 1e-19.
        let second = 4.0 / (3.0 * PI) * (-9.0 * PI * PI / 2.0).exp();
        assert!(second < 1e-19);
        assert!((b.value - 4.0 / PI * (-PI * PI / 2.0).exp()).abs() < 1e-18);
    }

    #[test]
    fn spectral_fails_at_zero_time() {
        assert!(matches!(
            survival_f_spectral(1.0, 0.0, 0.0, 1e-8),
            Err(Error::SeriesBudget { .. })
        ));
        assert_eq!(survival_f(1.0, 0.0, 0.3, 1e-8).unwrap().value, 1.0);
    }

    #[test]
    fn offsets_beyond_d_follow_the_series() {
        // F(t, 2d - k) = -F(t, k) for the entire series.
        for t in [0.05, 0.4, 2.0] {
            let a = survival_f(1.0, t, 0.3, 1e-12).unwrap().value;
            let b = survival_f(1.0, t, 1.7, 1e-12).unwrap().value;
            let c = survival_f_spectral(1.0, t, 1.7, 1e-12).unwrap().value;
            assert!((a + b).abs() < 1e-11);
            assert!((b - c).abs() < 1e-10);
        }
    }

    #[test]
    fn chernoff_examples() {
        let f = survival_f(1.0, 10.0, 0.0, 1e-12).unwrap().value;
        assert!(chernoff_survival_bound(1.0, 10.0, 0.0).unwrap() >= f);
        let near_zero = chernoff_survival_bound(1.0, 1e-9, 0.0).unwrap();
        assert!((near_zero - 1.0).abs() < 1e-6);
        // At t = d² the log-objective has zero slope and positive curvature at
        // γ = 0, so the optimum is the trivial bound 1 (checked at 30 digits).
        let v = chernoff_survival_bound(1.0, 1.0, 0.0).unwrap();
        assert!((F1_T1_K0..=1.0).contains(&v));
        assert!((v - 1.0).abs() < 1e-12);
        // Interior optimum γ* = 0.755207238415495, frozen from a 30-digit root solve.
        let (v, g) = chernoff_optimum(1.0, 2.0, 0.5).unwrap();
        assert!((v - 0.538_270_486_339_035_6).abs() < 1e-12, "{v}");
        assert!((g - 0.755_207_238_415_495_4).abs() < 1e-6, "{g}");
        assert!(chernoff_survival_bound(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn matthews_examples() {
        assert!((matthews_bound(1.0, 1.0).unwrap() - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert!((matthews_bound(1.0, 1.0 / (2.0 * PI)).unwrap() - 1.0).abs() < 1e-15);
        let ratio = matthews_bound(2.0, 1.0).unwrap() / matthews_bound(1.0, 1.0).unwrap();
        assert!((ratio - 2.0).abs() < 1e-15);
        assert!(matthews_bound(1.0, 1e-3).unwrap() > 1.0);
    }

    #[test]
    fn bebendorf_examples() {
        assert_eq!(bebendorf_rate(1.0).unwrap(), PI);
        assert!((bebendorf_rate(PI).unwrap() - 1.0).abs() < 1e-15);
        let env = bebendorf_envelope(1.0, 1.0, 1.0).unwrap();
        assert!((env - 0.007_191_883_355_826_365).abs() < 1e-15);
    }

    #[test]
    fn pair_bound_examples() {
        assert_eq!(tv_bound_pair(1.0, 0.7, 0.0, 1e-12).unwrap(), 0.0);
        let v = tv_bound_pair(1.0, 1.0, 1.0, 1e-12).unwrap();
        assert!((v - F1_T4_K0).abs() < 1e-12);
        assert_eq!(tv_bound_pair(1.0, 0.0, 0.4, 1e-12).unwrap(), 1.0);
        assert!(tv_bound_pair(1.0, 1.0, 1.5, 1e-12).is_err());
    }

    #[test]
    fn stationary_at_time_zero_is_one() {
        let body = ConvexBody::ball(vec![0.0; 3], 0.5).unwrap();
        let mut rng = replicate_stream(1, 0);
        let s = tv_bound_stationary(&body, 0.0, &[0.0; 3], 500, &mut rng, 1e-10).unwrap();
        assert_eq!(s.avg_bound, 1.0);
        assert_eq!(s.worst_bound, 1.0);
    }

    #[test]
    fn stationary_interval_avg_below_worst() {
        let body = ConvexBody::interval(0.0, 1.0).unwrap();
        let mut rng = replicate_stream(2, 0);
        let s = tv_bound_stationary(&body, 2.0, &[0.0], 1000, &mut rng, 1e-10).unwrap();
        assert!(s.avg_bound <= s.worst_bound);
    }

    #[test]
    fn kind_names_round_trip() {
        for k in BoundKind::ALL {
            assert_eq!(k.as_str().parse::<BoundKind>().unwrap(), k);
        }
    }

    #[test]
    fn csv_layout() {
        let c = BoundCurve::f_pair(1.0, 1.0, &[0.5, 1.0], 1e-10).unwrap();
        let csv = c.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), BoundCurve::CSV_HEADER);
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 7);
        assert_eq!(row[0], "0.5");
        assert_eq!(row[2], "F_pair");
        assert_eq!(row[4], "1");
        let m = BoundCurve::matthews(1.0, &[1.0]).unwrap().to_csv();
        assert!(m.lines().nth(1).unwrap().ends_with(",matthews,1,,0,0e0"));
    }
}
