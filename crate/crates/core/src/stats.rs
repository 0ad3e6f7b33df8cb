//! Survival curves with distribution-free confidence bands, bound
//! verification, histogram TV estimates and the two observable-level
//! experiments (L² decay and hitting probabilities).

use crate::bounds::{tv_bound_stationary, BoundCurve, StationaryBound};
use crate::coupling::PathState;
use crate::error::{invalid, Error, Result};
use crate::geometry::ConvexBody;
use crate::rng::{auxiliary_stream, fill_gaussian, replicate_stream};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

pub const SCHEMA_VERSION: u32 = 1;

/// One observed time; `censored` means the event had not happened by `time`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeSample {
    pub time: f64,
    pub censored: bool,
}

impl TimeSample {
    pub fn event(time: f64) -> Self {
        Self {
            time,
            censored: false,
        }
    }

    pub fn censored(time: f64) -> Self {
        Self {
            time,
            censored: true,
        }
    }
}

/// Dvoretzky–Kiefer–Wolfowitz half-width `√(ln(2/α) / 2N)`.
pub fn dkw_halfwidth(alpha: f64, n: usize) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

/// Empirical `P(τ > t)` on a grid with a uniform DKW band.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalCurve {
    pub t_grid: Vec<f64>,
    pub survival: Vec<f64>,
    pub band_halfwidth: f64,
    pub n_samples: usize,
    pub n_censored: usize,
    pub alpha: f64,
}

impl SurvivalCurve {
    pub fn upper(&self) -> Vec<f64> {
        self.survival
            .iter()
            .map(|s| (s + self.band_halfwidth).min(1.0))
            .collect()
    }

    pub fn lower(&self) -> Vec<f64> {
        self.survival
            .iter()
            .map(|s| (s - self.band_halfwidth).max(0.0))
            .collect()
    }

    /// Does the band contain `truth(t)` at every grid time?
    pub fn covers(&self, truth: impl Fn(f64) -> f64) -> bool {
        self.t_grid
            .iter()
            .zip(&self.survival)
            .all(|(&t, &s)| (s - truth(t)).abs() <= self.band_halfwidth)
    }
}

/// Builds the survival curve. Censored samples count as surviving up to
/// and including their censoring time.
pub fn survival_curve(samples: &[TimeSample], t_grid: &[f64], alpha: f64) -> Result<SurvivalCurve> {
    if samples.len() < 100 {
        return Err(invalid("samples", format!("need at least 100 (got {})", samples.len())));
    }
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(invalid("alpha", format!("must lie in (0, 0.5) (got {alpha})")));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("t_grid", "must be strictly ascending"));
    }
    let horizon = samples
        .iter()
        .filter(|s| s.censored)
        .map(|s| s.time)
        .fold(f64::INFINITY, f64::min);
    if let Some(&t) = t_grid.iter().find(|&&t| t > horizon) {
        return Err(Error::BeyondCensoring { t, horizon });
    }
    let mut events: Vec<f64> = samples.iter().filter(|s| !s.censored).map(|s| s.time).collect();
    events.sort_by(f64::total_cmp);
    let n = samples.len();
    let n_censored = n - events.len();
    let survival = t_grid
        .iter()
        .map(|&t| {
            let done = events.partition_point(|&e| e <= t);
            (n - done) as f64 / n as f64
        })
        .collect();
    Ok(SurvivalCurve {
        t_grid: t_grid.to_vec(),
        survival,
        band_halfwidth: dkw_halfwidth(alpha, n),
        n_samples: n,
        n_censored,
        alpha,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
}

impl Verdict {
    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        }
    }
}

/// The executable form of an upper-bound claim on a survival curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub id: String,
    pub params: serde_json::Map<String, serde_json::Value>,
    pub bound_kind: String,
    pub t_grid: Vec<f64>,
    pub bound: Vec<f64>,
    pub empirical: Vec<f64>,
    pub band: f64,
    pub margin: Vec<f64>,
    pub verdict: Verdict,
    pub sensitivity_verdict: Option<Verdict>,
    pub seed: Option<u64>,
}

impl VerificationReport {
    pub fn with_sensitivity(mut self, verdict: Verdict) -> Self {
        self.sensitivity_verdict = Some(verdict);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_param(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    /// Pass on the primary run and, if one was recorded, the sensitivity run.
    pub fn passed(&self) -> bool {
        self.verdict.is_pass() && self.sensitivity_verdict.is_none_or(Verdict::is_pass)
    }

    pub fn min_margin(&self) -> f64 {
        self.margin.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn grids_match(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::GridMismatch(format!("lengths {} and {}", a.len(), b.len())));
    }
    if let Some((x, y)) = a
        .iter()
        .zip(b)
        .find(|(x, y)| (*x - *y).abs() > 1e-12 * x.abs().max(1.0))
    {
        return Err(Error::GridMismatch(format!("{x} vs {y}")));
    }
    Ok(())
}

fn report(
    id: &str,
    bound_kind: &str,
    t_grid: &[f64],
    bound: Vec<f64>,
    empirical: Vec<f64>,
    band: f64,
) -> VerificationReport {
    let margin: Vec<f64> = bound
        .iter()
        .zip(&empirical)
        .map(|(b, e)| b + band - e)
        .collect();
    let verdict = if margin.iter().all(|m| *m >= 0.0) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    VerificationReport {
        schema_version: SCHEMA_VERSION,
        id: id.to_string(),
        params: serde_json::Map::new(),
        bound_kind: bound_kind.to_string(),
        t_grid: t_grid.to_vec(),
        bound,
        empirical,
        band,
        margin,
        verdict,
        sensitivity_verdict: None,
        seed: None,
    }
}

/// PASS iff `empirical - band ≤ bound` at every grid time.
pub fn verify_bound(id: &str, empirical: &SurvivalCurve, bound: &BoundCurve) -> Result<VerificationReport> {
    grids_match(&empirical.t_grid, &bound.t_grid)?;
    Ok(report(
        id,
        bound.kind.as_str(),
        &empirical.t_grid,
        bound.values.clone(),
        empirical.survival.clone(),
        empirical.band_halfwidth,
    )
    .with_param("d", bound.d)
    .with_param("n_samples", empirical.n_samples)
    .with_param("n_censored", empirical.n_censored)
    .with_param("alpha", empirical.alpha))
}

/// Stochastic dominance check between two empirical curves: PASS iff
/// `smaller ≤ larger + band_smaller + band_larger` everywhere.
pub fn verify_dominance(
    id: &str,
    smaller: &SurvivalCurve,
    larger: &SurvivalCurve,
) -> Result<VerificationReport> {
    grids_match(&smaller.t_grid, &larger.t_grid)?;
    Ok(report(
        id,
        "empirical",
        &smaller.t_grid,
        larger.survival.clone(),
        smaller.survival.clone(),
        smaller.band_halfwidth + larger.band_halfwidth,
    )
    .with_param("n_samples_smaller", smaller.n_samples)
    .with_param("n_samples_larger", larger.n_samples)
    .with_param("alpha", smaller.alpha))
}

/// What [`empirical_tv_1d`] compares against.
#[derive(Debug, Clone, Copy)]
pub enum TvReference<'a> {
    Samples(&'a [f64]),
    Uniform { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TvEstimate {
    pub estimate: f64,
    pub n_bins: usize,
    /// Order of the sampling fluctuation, `√(n_bins / N)`.
    pub noise_floor: f64,
    pub bias_note: &'static str,
}

const TV_BIAS_NOTE: &str = "histogram TV is biased upward by sampling noise of order sqrt(n_bins/N) \
and downward by binning; treat it as an estimate, not a bound";

/// Half the L1 distance between equal-width histograms.
pub fn empirical_tv_1d(samples_a: &[f64], reference: TvReference<'_>, n_bins: Option<usize>) -> Result<TvEstimate> {
    let n = samples_a.len();
    if n < 1000 {
        return Err(invalid("samples_a", "need at least 1000 samples"));
    }
    if let TvReference::Samples(b) = reference {
        if b.len() < 1000 {
            return Err(invalid("samples_b", "need at least 1000 samples"));
        }
    }
    let bins = n_bins.unwrap_or_else(|| (n as f64).cbrt().ceil() as usize).max(1);
    let (lo, hi) = match reference {
        TvReference::Uniform { lo, hi } => (lo, hi),
        TvReference::Samples(b) => samples_a
            .iter()
            .chain(b)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v))),
    };
    let width = hi - lo;
    let bin_of = |v: f64| -> usize {
        if width <= 0.0 {
            0
        } else {
            (((v - lo) / width * bins as f64).floor().max(0.0) as usize).min(bins - 1)
        }
    };
    let histogram = |xs: &[f64]| {
        let mut h = vec![0.0; bins];
        for &v in xs {
            h[bin_of(v)] += 1.0 / xs.len() as f64;
        }
        h
    };
    let ha = histogram(samples_a);
    let (hb, n_eff) = match reference {
        TvReference::Uniform { .. } => (vec![1.0 / bins as f64; bins], n as f64),
        TvReference::Samples(b) => {
            let m = b.len() as f64;
            (histogram(b), n as f64 * m / (n as f64 + m))
        }
    };
    let estimate = 0.5 * ha.iter().zip(&hb).map(|(a, b)| (a - b).abs()).sum::<f64>();
    Ok(TvEstimate {
        estimate,
        n_bins: bins,
        noise_floor: (bins as f64 / n_eff).sqrt(),
        bias_note: TV_BIAS_NOTE,
    })
}

/// Observable used by [`l2_decay_experiment`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    /// `cos(πx/d)`, the first nonconstant Neumann eigenfunction of `[0, d]`.
    FirstEigenfunction,
    Constant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub expected_slope: f64,
    pub t_grid: Vec<f64>,
    pub means: Vec<f64>,
    pub stderrs: Vec<f64>,
    /// Grid points with `|mean| > 3·stderr`, the ones entering the fit.
    pub used: Vec<bool>,
}

/// Simulates reflected paths on `[0, d]` from the density `∝ 1 + cos(πx/d)`
/// and fits the decay rate of `E f(X_t)` by weighted least squares on
/// `log|E f(X_t)|`. For the eigenfunction observable the exact slope is
/// `-π²/2d²`.
pub fn l2_decay_experiment(
    d: f64,
    t_grid: &[f64],
    n_paths: usize,
    h: f64,
    seed: u64,
    observable: Observable,
) -> Result<DecayFit> {
    if !(d > 0.0) {
        return Err(invalid("d", "must be positive"));
    }
    if t_grid.len() < 2 || t_grid.windows(2).any(|w| w[1] <= w[0]) || t_grid[0] <= 0.0 {
        return Err(invalid("t_grid", "need at least two ascending positive times"));
    }
    if !(h > 0.0) || n_paths < 2 {
        return Err(invalid("h", "h must be positive and n_paths at least 2"));
    }
    let body = ConvexBody::interval(0.0, d)?;
    let checkpoints: Vec<u64> = t_grid.iter().map(|t| (t / h).round().max(1.0) as u64).collect();
    let f = move |x: f64| match observable {
        Observable::FirstEigenfunction => (PI * x / d).cos(),
        Observable::Constant => 1.0,
    };
    let per_path: Vec<Vec<f64>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let mut rng = replicate_stream(seed, i);
            let x0 = loop {
                let x = d * rng.random::<f64>();
                if rng.random::<f64>() < 0.5 * (1.0 + (PI * x / d).cos()) {
                    break x;
                }
            };
            let mut state = PathState::new(vec![x0]);
            let mut dw = [0.0];
            let mut out = Vec::with_capacity(checkpoints.len());
            let mut step = 0u64;
            for &target in &checkpoints {
                while step < target {
                    fill_gaussian(&mut rng, h.sqrt(), &mut dw);
                    state.advance(&body, None, h, &dw)?;
                    step += 1;
                }
                out.push(f(state.position[0]));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let n = n_paths as f64;
    let mut means = vec![0.0; t_grid.len()];
    let mut stderrs = vec![0.0; t_grid.len()];
    for j in 0..t_grid.len() {
        let m = per_path.iter().map(|p| p[j]).sum::<f64>() / n;
        let v = per_path.iter().map(|p| (p[j] - m) * (p[j] - m)).sum::<f64>() / (n - 1.0);
        means[j] = m;
        stderrs[j] = (v / n).sqrt();
    }
    let used: Vec<bool> = means
        .iter()
        .zip(&stderrs)
        .map(|(m, s)| m.abs() > 3.0 * s && *m != 0.0)
        .collect();
    if !(used[0] && used[1]) {
        return Err(Error::NoiseFloor);
    }
    // Delta method: Var(log|m|) ≈ (s/m)².
    let (mut sw, mut swt, mut swy, mut swtt, mut swty) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for j in (0..t_grid.len()).filter(|&j| used[j]) {
        let w = if stderrs[j] > 0.0 {
            (means[j] / stderrs[j]).powi(2)
        } else {
            1.0
        };
        let y = means[j].abs().ln();
        let t = t_grid[j];
        sw += w;
        swt += w * t;
        swy += w * y;
        swtt += w * t * t;
        swty += w * t * y;
    }
    let slope = (sw * swty - swt * swy) / (sw * swtt - swt * swt);
    let intercept = (swy - slope * swt) / sw;
    Ok(DecayFit {
        slope,
        intercept,
        expected_slope: match observable {
            Observable::FirstEigenfunction => -PI * PI / (2.0 * d * d),
            Observable::Constant => 0.0,
        },
        t_grid: t_grid.to_vec(),
        means,
        stderrs,
        used,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HitProbReport {
    pub schema_version: u32,
    pub u_estimate: f64,
    pub u_stderr: f64,
    pub stationary_average_estimate: f64,
    pub stationary_stderr: f64,
    /// Fraction of paths from `x` that reached A ∪ B before `t_free`.
    pub hit_before_t_free: f64,
    pub t_free: f64,
    pub bound_at_t_free: StationaryBoundJson,
    pub censored_mass_x: f64,
    pub censored_mass_stationary: f64,
    pub n_paths: usize,
    pub h: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationaryBoundJson {
    pub avg_bound: f64,
    pub worst_bound: f64,
    pub mc_stderr: f64,
}

impl From<StationaryBound> for StationaryBoundJson {
    fn from(s: StationaryBound) -> Self {
        Self {
            avg_bound: s.avg_bound,
            worst_bound: s.worst_bound,
            mc_stderr: s.mc_stderr,
        }
    }
}

impl HitProbReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Hit {
    A,
    B,
    Censored,
}

fn first_hit<R: Rng + ?Sized>(
    body: &ConvexBody,
    set_a: &ConvexBody,
    set_b: &ConvexBody,
    start: Vec<f64>,
    h: f64,
    max_steps: u64,
    rng: &mut R,
) -> Result<(Hit, f64)> {
    let mut state = PathState::new(start);
    let mut dw = vec![0.0; body.dimension()];
    for _ in 0..=max_steps {
        if set_a.contains(&state.position)? {
            return Ok((Hit::A, state.time));
        }
        if set_b.contains(&state.position)? {
            return Ok((Hit::B, state.time));
        }
        fill_gaussian(rng, h.sqrt(), &mut dw);
        state.advance(body, None, h, &dw)?;
    }
    Ok((Hit::Censored, state.time))
}

/// Estimates `u(x) = P(X_T ∈ A)` for the first entrance time `T` of `A ∪ B`,
/// its σ-average `∫u dσ`, and the mixing bound at `t_free` that certifies
/// when the two should agree.
#[allow(clippy::too_many_arguments)]
pub fn hitprob_experiment(
    body: &ConvexBody,
    set_a: &ConvexBody,
    set_b: &ConvexBody,
    x: &[f64],
    t_free: f64,
    n_paths: usize,
    h: f64,
    t_cap: f64,
    seed: u64,
) -> Result<HitProbReport> {
    let dim = body.dimension();
    if set_a.dimension() != dim || set_b.dimension() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: set_a.dimension().min(set_b.dimension()),
        });
    }
    if set_a.contains(x)? || set_b.contains(x)? {
        return Err(invalid("x", "must lie outside both target sets"));
    }
    if !body.contains(x)? {
        return Err(invalid("x", "must lie in the body"));
    }
    if n_paths < 2 || !(h > 0.0) || !(t_free >= 0.0) {
        return Err(invalid("n_paths", "need n_paths ≥ 2, h > 0, t_free ≥ 0"));
    }
    let max_steps = (t_cap / h).ceil() as u64;
    let from_x: Vec<(Hit, f64)> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_stream(seed, i);
            first_hit(body, set_a, set_b, x.to_vec(), h, max_steps, &mut rng)
        })
        .collect::<Result<_>>()?;
    let from_sigma: Vec<(Hit, f64)> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_stream(seed, n_paths as u64 + i);
            let start = body.sample_uniform(&mut rng)?.point;
            first_hit(body, set_a, set_b, start, h, max_steps, &mut rng)
        })
        .collect::<Result<_>>()?;
    let summarize = |hits: &[(Hit, f64)]| {
        let n = hits.len() as f64;
        let a = hits.iter().filter(|(k, _)| *k == Hit::A).count() as f64 / n;
        let c = hits.iter().filter(|(k, _)| *k == Hit::Censored).count() as f64 / n;
        (a, (a * (1.0 - a) / n).sqrt(), c)
    };
    let (u, u_se, cx) = summarize(&from_x);
    let (s, s_se, cs) = summarize(&from_sigma);
    let hit_before = from_x
        .iter()
        .filter(|(k, t)| *k != Hit::Censored && *t <= t_free)
        .count() as f64
        / n_paths as f64;
    let mut aux = auxiliary_stream(seed, 0);
    let bound = tv_bound_stationary(body, t_free, x, 10_000, &mut aux, 1e-10)?;
    Ok(HitProbReport {
        schema_version: SCHEMA_VERSION,
        u_estimate: u,
        u_stderr: u_se,
        stationary_average_estimate: s,
        stationary_stderr: s_se,
        hit_before_t_free: hit_before,
        t_free,
        bound_at_t_free: bound.into(),
        censored_mass_x: cx,
        censored_mass_stationary: cs,
        n_paths,
        h,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::BoundKind;

    fn events(ts: &[f64]) -> Vec<TimeSample> {
        ts.iter().map(|&t| TimeSample::event(t)).collect()
    }

    #[test]
    fn counting_example() {
        // Replicate {1,2,3,4} 25 times to satisfy N ≥ 100.
        let s: Vec<TimeSample> = (0..25).flat_map(|_| events(&[1.0, 2.0, 3.0, 4.0])).collect();
        let c = survival_curve(&s, &[2.5], 0.05).unwrap();
        assert_eq!(c.survival, vec![0.5]);
    }

    #[test]
    fn all_late_samples_survive() {
        let s = events(&vec![10.0; 200]);
        let c = survival_curve(&s, &[1.0, 2.0, 9.0], 0.05).unwrap();
        assert!(c.survival.iter().all(|v| *v == 1.0));
    }

    #[test]
    fn dkw_formula() {
        assert!((dkw_halfwidth(0.01, 10_000) - 0.016_276).abs() < 1e-6);
        let c = survival_curve(&events(&vec![1.0; 10_000]), &[0.5], 0.01).unwrap();
        assert_eq!(c.band_halfwidth, (200f64.ln() / 20_000.0).sqrt());
    }

    #[test]
    fn censoring_horizon_enforced() {
        let mut s = events(&vec![0.5; 150]);
        s.push(TimeSample::censored(2.0));
        let c = survival_curve(&s, &[1.0, 2.0], 0.05).unwrap();
        assert_eq!(c.n_censored, 1);
        assert!((c.survival[1] - 1.0 / 151.0).abs() < 1e-15);
        assert!(matches!(
            survival_curve(&s, &[1.0, 2.5], 0.05),
            Err(Error::BeyondCensoring { .. })
        ));
        assert!(survival_curve(&s[..50], &[1.0], 0.05).is_err());
        assert!(survival_curve(&s, &[1.0], 0.7).is_err());
    }

    fn curve(vals: &[f64], band: f64) -> SurvivalCurve {
        SurvivalCurve {
            t_grid: (1..=vals.len()).map(|i| i as f64).collect(),
            survival: vals.to_vec(),
            band_halfwidth: band,
            n_samples: 1000,
            n_censored: 0,
            alpha: 0.01,
        }
    }

    fn bound(vals: &[f64]) -> BoundCurve {
        BoundCurve {
            kind: BoundKind::FPair,
            d: 1.0,
            param: Some(1.0),
            t_grid: (1..=vals.len()).map(|i| i as f64).collect(),
            values: vals.to_vec(),
            terms_used: vec![0; vals.len()],
            trunc_err: vec![0.0; vals.len()],
        }
    }

    #[test]
    fn vacuous_bound_passes() {
        let r = verify_bound("x", &curve(&[1.0, 0.9, 0.2], 0.05), &bound(&[1.0; 3])).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn constructed_violation_fails() {
        let b = [0.5, 0.3, 0.1];
        let band = 0.05;
        let emp: Vec<f64> = b.iter().map(|v| v + 2.0 * band).collect();
        let r = verify_bound("x", &curve(&emp, band), &bound(&b)).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(r.margin.iter().all(|m| (m + band).abs() < 1e-12));
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        assert!(matches!(
            verify_bound("x", &curve(&[0.5, 0.4], 0.1), &bound(&[1.0; 3])),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn report_json_fields() {
        let r = verify_bound("exp", &curve(&[0.4], 0.1), &bound(&[0.5]))
            .unwrap()
            .with_seed(42)
            .with_sensitivity(Verdict::Pass);
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        for key in [
            "schema_version",
            "id",
            "params",
            "t_grid",
            "bound",
            "empirical",
            "band",
            "margin",
            "verdict",
            "sensitivity_verdict",
            "seed",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["verdict"], "PASS");
        assert_eq!(v["seed"], 42);
    }

    #[test]
    fn tv_identical_samples_is_zero() {
        let mut rng = replicate_stream(5, 0);
        let a: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        let e = empirical_tv_1d(&a, TvReference::Samples(&a), None).unwrap();
        assert_eq!(e.estimate, 0.0);
    }

    #[test]
    fn tv_independent_uniforms_small() {
        let mut ra = replicate_stream(6, 0);
        let mut rb = replicate_stream(6, 1);
        let a: Vec<f64> = (0..100_000).map(|_| ra.random::<f64>()).collect();
        let b: Vec<f64> = (0..100_000).map(|_| rb.random::<f64>()).collect();
        let e = empirical_tv_1d(&a, TvReference::Samples(&b), None).unwrap();
        assert_eq!(e.n_bins, 47);
        assert!(e.estimate < 0.02, "{}", e.estimate);
        let u = empirical_tv_1d(&a, TvReference::Uniform { lo: 0.0, hi: 1.0 }, None).unwrap();
        assert!(u.estimate < 0.02);
    }

    #[test]
    fn tv_point_mass_vs_uniform_near_one() {
        let a = vec![0.25; 1_000_000];
        let e = empirical_tv_1d(&a, TvReference::Uniform { lo: 0.0, hi: 1.0 }, None).unwrap();
        assert!((e.estimate - (1.0 - 1.0 / e.n_bins as f64)).abs() < 1e-9);
        assert!(e.estimate > 0.98);
    }
}
