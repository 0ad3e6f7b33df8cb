//! Projection-scheme reflected Brownian motion and the mirror coupling.
//!
//! `Y` is driven by the Householder reflection `(I - 2ηηᵀ)ΔW` of `X`'s
//! increment, with `η = (X - Y)/|X - Y|`. Without boundary pushes the
//! separation then moves by exactly `2⟨η, ΔW⟩`, a Brownian motion run at
//! clock `4t`.

use crate::error::{invalid, Error, Result};
use crate::geometry::ConvexBody;
use crate::linalg::{dist, dot};
use crate::rng::{auxiliary_stream, fill_gaussian, replicate_stream};
use crate::stats::TimeSample;
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt;
use std::fmt::Write as _;
use std::sync::Arc;

pub const K_CAP: f64 = 1e6;
pub const Z_FLOOR_REL: f64 = 1e-8;
pub const SIGN_TOL: f64 = 1e-9;
const AUDIT_PAIRS: usize = 10_000;
const AUDIT_TOL: f64 = 1e-9;
const AUDIT_PURPOSE: u64 = 0xA0D1;

/// One reflected path. `local_pushes` is the accumulated projection
/// displacement, a proxy for the boundary local time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathState {
    pub position: Vec<f64>,
    pub time: f64,
    pub local_pushes: f64,
    /// Number of increments consumed.
    pub rng_cursor: u64,
    #[serde(skip)]
    candidate: Vec<f64>,
    #[serde(skip)]
    last_push: f64,
}

impl PathState {
    pub fn new(position: Vec<f64>) -> Self {
        let n = position.len();
        Self {
            position,
            time: 0.0,
            local_pushes: 0.0,
            rng_cursor: 0,
            candidate: vec![0.0; n],
            last_push: 0.0,
        }
    }

    /// Euler step followed by one projection. Returns the push magnitude.
    pub fn advance(
        &mut self,
        body: &ConvexBody,
        drift: Option<&DriftModel>,
        h: f64,
        increment: &[f64],
    ) -> Result<f64> {
        let n = self.position.len();
        if increment.len() != n || body.dimension() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: increment.len().min(body.dimension()),
            });
        }
        match drift {
            Some(m) => {
                (m.mu)(&self.position, &mut self.candidate);
                for ((c, p), dw) in self.candidate.iter_mut().zip(&self.position).zip(increment) {
                    *c = p + h * *c + dw;
                }
            }
            None => {
                for ((c, p), dw) in self.candidate.iter_mut().zip(&self.position).zip(increment) {
                    *c = p + dw;
                }
            }
        }
        self.position.copy_from_slice(&self.candidate);
        body.project_in_place(&mut self.position)?;
        let push = dist(&self.candidate, &self.position);
        self.last_push = push;
        self.local_pushes += push;
        self.time += h;
        self.rng_cursor += 1;
        Ok(push)
    }

    /// Unit push direction of the last step (into the body), if it pushed.
    pub fn last_push_normal(&self) -> Option<Vec<f64>> {
        (self.last_push > 0.0).then(|| {
            self.position
                .iter()
                .zip(&self.candidate)
                .map(|(p, c)| (p - c) / self.last_push)
                .collect()
        })
    }

    pub fn last_push(&self) -> f64 {
        self.last_push
    }
}

/// Steps needed to cover `t_max`, tolerant of `t_max/h` landing just above
/// an integer by round-off.
pub fn steps_to_cover(t_max: f64, h: f64) -> u64 {
    let ratio = t_max / h;
    if (ratio - ratio.round()).abs() <= 1e-9 * ratio.max(1.0) {
        ratio.round() as u64
    } else {
        ratio.ceil() as u64
    }
}

/// Pure form of [`PathState::advance`].
pub fn step_reflected(
    body: &ConvexBody,
    state: &PathState,
    drift: Option<&DriftModel>,
    h: f64,
    gaussian: &[f64],
) -> Result<PathState> {
    if !(h > 0.0) {
        return Err(invalid("h", "must be positive"));
    }
    let mut next = state.clone();
    next.advance(body, drift, h, gaussian)?;
    Ok(next)
}

type VectorField = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
type Envelope = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Drift `μ` with a scalar envelope `Γ(r) ≥ ⟨x - y, μ(x) - μ(y)⟩` at `|x - y| = r`.
#[derive(Clone)]
pub struct DriftModel {
    pub label: String,
    mu: VectorField,
    pub mu_lipschitz: f64,
    gamma: Envelope,
    pub gamma_lipschitz: f64,
}

impl fmt::Debug for DriftModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DriftModel")
            .field("label", &self.label)
            .field("mu_lipschitz", &self.mu_lipschitz)
            .field("gamma_lipschitz", &self.gamma_lipschitz)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditReport {
    pub pairs: usize,
    /// Smallest `Γ(r) - ⟨x - y, μ(x) - μ(y)⟩` seen.
    pub min_slack: f64,
}

impl DriftModel {
    /// Builds the model and audits the envelope over uniform pairs from `body`.
    pub fn new(
        label: impl Into<String>,
        mu: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        mu_lipschitz: f64,
        gamma: impl Fn(f64) -> f64 + Send + Sync + 'static,
        gamma_lipschitz: f64,
        body: &ConvexBody,
    ) -> Result<Self> {
        let model = Self {
            label: label.into(),
            mu: Arc::new(mu),
            mu_lipschitz,
            gamma: Arc::new(gamma),
            gamma_lipschitz,
        };
        model.audit(body, AUDIT_PAIRS)?;
        Ok(model)
    }

    /// Ornstein–Uhlenbeck pull `μ(x) = -θ(x - c)` toward the body center,
    /// with `Γ(r) = -θr²`.
    pub fn ou(theta: f64, body: &ConvexBody) -> Result<Self> {
        if !(theta >= 0.0 && theta.is_finite()) {
            return Err(invalid("theta", "must be finite and nonnegative"));
        }
        let c = body.center();
        Self::new(
            format!("ou(theta={theta})"),
            move |x, out| {
                for i in 0..x.len() {
                    out[i] = -theta * (x[i] - c[i]);
                }
            },
            theta,
            move |r| -theta * r * r,
            2.0 * theta * body.diameter(),
            body,
        )
    }

    pub fn mu(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        (self.mu)(x, &mut out);
        out
    }

    pub fn gamma(&self, r: f64) -> f64 {
        (self.gamma)(r)
    }

    pub fn gamma_fn(&self) -> impl Fn(f64) -> f64 + '_ {
        move |r| (self.gamma)(r)
    }

    pub fn audit(&self, body: &ConvexBody, pairs: usize) -> Result<AuditReport> {
        let mut rng = auxiliary_stream(0, AUDIT_PURPOSE);
        let mut min_slack = f64::INFINITY;
        for _ in 0..pairs {
            let x = body.sample_uniform(&mut rng)?.point;
            let y = body.sample_uniform(&mut rng)?.point;
            let r = dist(&x, &y);
            let (mx, my) = (self.mu(&x), self.mu(&y));
            let pairing: f64 = (0..x.len()).map(|i| (x[i] - y[i]) * (mx[i] - my[i])).sum();
            let g = self.gamma(r);
            let slack = g - pairing;
            if !(slack >= -AUDIT_TOL) {
                return Err(Error::DriftEnvelope {
                    r,
                    gamma: g,
                    pairing,
                });
            }
            min_slack = min_slack.min(slack);
        }
        Ok(AuditReport { pairs, min_slack })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingParams {
    pub h: f64,
    pub epsilon: f64,
    pub t_max: f64,
    pub detection: Detection,
}

/// How a step is judged to have brought the separation down to `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Detection {
    /// Only the end-of-step separation is checked.
    Endpoint,
    /// Also counts an intra-step touch of `epsilon`, with the exact
    /// probability `exp(-2(r₀-ε)(r₁-ε)/4h)` for a speed-4 Brownian bridge.
    Bridge,
}

impl CouplingParams {
    /// Default threshold `0.5·√h`.
    pub fn new(h: f64, t_max: f64) -> Self {
        Self {
            h,
            epsilon: 0.5 * h.sqrt(),
            t_max,
            detection: Detection::Bridge,
        }
    }

    pub fn with_detection(mut self, detection: Detection) -> Self {
        self.detection = detection;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn validate(&self, d: f64) -> Result<()> {
        if !(self.h > 0.0 && self.h <= 1e-3 * d * d) {
            return Err(invalid("h", format!("must lie in (0, 1e-3·d²] = (0, {}] (got {})", 1e-3 * d * d, self.h)));
        }
        if !(self.epsilon >= self.h.sqrt() / 10.0) {
            return Err(invalid("epsilon", format!("must be at least √h/10 = {}", self.h.sqrt() / 10.0)));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(invalid("t_max", "must be positive and finite"));
        }
        Ok(())
    }
}

/// Per-step record for the optional trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub step: u64,
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub r: f64,
    pub phi: f64,
    pub qv_clock: f64,
    pub proj_x: f64,
    pub proj_y: f64,
}

pub fn trace_csv(rows: &[TraceRow]) -> String {
    let n = rows.first().map_or(0, |r| r.x.len());
    let mut out = String::from("step,t");
    for i in 0..n {
        let _ = write!(out, ",x{i}");
    }
    for i in 0..n {
        let _ = write!(out, ",y{i}");
    }
    out.push_str(",r,phi,qv_clock,proj_x,proj_y\n");
    for r in rows {
        let _ = write!(out, "{},{}", r.step, r.t);
        for v in r.x.iter().chain(&r.y) {
            let _ = write!(out, ",{v}");
        }
        let _ = writeln!(out, ",{},{},{},{},{}", r.r, r.phi, r.qv_clock, r.proj_x, r.proj_y);
    }
    out
}

/// Running diagnostics of one coupled run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    pub max_r: f64,
    pub min_phi_increment: f64,
    pub max_phi_increment: f64,
    pub boundary_events: u64,
    /// Largest violation of the boundary sign conditions.
    pub max_sign_violation: f64,
    /// Largest `|Δr - 2⟨η, ΔW⟩|` over push-free, drift-free steps.
    pub max_interior_mirror_error: f64,
}

impl Default for Diagnostics {
    fn default() -> Self {
        Self {
            max_r: 0.0,
            min_phi_increment: 0.0,
            max_phi_increment: 0.0,
            boundary_events: 0,
            max_sign_violation: 0.0,
            max_interior_mirror_error: 0.0,
        }
    }
}

/// `X`, `Y` and the decomposition `R = r₀ + Φ + B + ∫⟨η, μ(X) - μ(Y)⟩dt`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoupledState {
    pub x_path: PathState,
    pub y_path: PathState,
    pub eta: Option<Vec<f64>>,
    pub coupled_at: Option<f64>,
    pub r: f64,
    pub r0: f64,
    pub phi: f64,
    /// Realized quadratic variation of `B`; tracks `4t` until coupling.
    pub qv_clock: f64,
    pub b: f64,
    pub drift_accum: f64,
    pub diagnostics: Diagnostics,
    #[serde(skip)]
    y_increment: Vec<f64>,
    #[serde(skip)]
    mu_x: Vec<f64>,
    #[serde(skip)]
    mu_y: Vec<f64>,
}

impl CoupledState {
    /// `epsilon` decides whether the starting pair already counts as coupled.
    pub fn new(x: Vec<f64>, y: Vec<f64>, epsilon: f64) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        let n = x.len();
        let r = dist(&x, &y);
        let (eta, coupled_at, y) = if r <= epsilon {
            (None, Some(0.0), x.clone())
        } else {
            (Some(x.iter().zip(&y).map(|(a, b)| (a - b) / r).collect()), None, y)
        };
        Ok(Self {
            x_path: PathState::new(x),
            y_path: PathState::new(y),
            eta,
            coupled_at,
            r: if coupled_at.is_some() { 0.0 } else { r },
            r0: r,
            phi: 0.0,
            qv_clock: 0.0,
            b: 0.0,
            drift_accum: 0.0,
            diagnostics: Diagnostics {
                max_r: r,
                ..Diagnostics::default()
            },
            y_increment: vec![0.0; n],
            mu_x: vec![0.0; n],
            mu_y: vec![0.0; n],
        })
    }

    pub fn is_coupled(&self) -> bool {
        self.coupled_at.is_some()
    }

    /// Advances both paths by one mirror step driven by `dw ~ √h·N(0, I)`.
    /// With `bridge`, an intra-step touch of `epsilon` is also sampled.
    pub fn step(
        &mut self,
        body: &ConvexBody,
        drift: Option<&DriftModel>,
        h: f64,
        dw: &[f64],
        epsilon: f64,
        bridge: Option<&mut dyn RngCore>,
    ) -> Result<()> {
        let Some(eta) = self.eta.as_ref() else {
            self.x_path.advance(body, drift, h, dw)?;
            self.y_path.clone_from(&self.x_path);
            return Ok(());
        };
        let n = dw.len();
        let ip = dot(eta, dw);
        for i in 0..n {
            self.y_increment[i] = dw[i] - 2.0 * ip * eta[i];
        }
        let drift_term = match drift {
            Some(m) => {
                (m.mu)(&self.x_path.position, &mut self.mu_x);
                (m.mu)(&self.y_path.position, &mut self.mu_y);
                (0..n).map(|i| eta[i] * (self.mu_x[i] - self.mu_y[i])).sum::<f64>() * h
            }
            None => 0.0,
        };
        let r_old = self.r;
        let t_old = self.x_path.time;
        let push_x = self.x_path.advance(body, drift, h, dw)?;
        let y_increment = std::mem::take(&mut self.y_increment);
        let push_y = self.y_path.advance(body, drift, h, &y_increment);
        self.y_increment = y_increment;
        let push_y = push_y?;

        // Separation of the candidates along the old axis; negative when the
        // paths crossed during the step.
        let signed: f64 = (0..n)
            .map(|i| eta[i] * (self.x_path.candidate[i] - self.y_path.candidate[i]))
            .sum();
        let r_new = dist(&self.x_path.position, &self.y_path.position);
        let db = 2.0 * ip;
        self.b += db;
        self.qv_clock += db * db;
        self.drift_accum += drift_term;
        let phi_new = r_new - self.r0 - self.b - self.drift_accum;
        let dphi = phi_new - self.phi;
        self.phi = phi_new;
        self.r = r_new;

        let d = &mut self.diagnostics;
        d.max_r = d.max_r.max(r_new);
        d.min_phi_increment = d.min_phi_increment.min(dphi);
        if push_x > 0.0 || push_y > 0.0 {
            d.boundary_events += 1;
        }

        let r_end = r_new.min(signed);
        let touched = r_end <= epsilon || bridge.is_some_and(|rng| {
            let exponent = 2.0 * (r_old - epsilon) * (r_end - epsilon) / (4.0 * h);
            // e^{-50} is below the resolution of a uniform draw.
            exponent < 50.0 && rng.random::<f64>() < (-exponent).exp()
        });
        if touched {
            let frac = if r_end <= epsilon && r_old > r_end {
                ((r_old - epsilon) / (r_old - r_end)).clamp(0.0, 1.0)
            } else if r_end <= epsilon {
                1.0
            } else {
                0.5
            };
            self.coupled_at = Some(t_old + frac * h);
            self.eta = None;
            self.y_path.clone_from(&self.x_path);
            self.r = 0.0;
            return Ok(());
        }

        d.max_phi_increment = d.max_phi_increment.max(dphi);
        if push_x == 0.0 && push_y == 0.0 && drift.is_none() {
            d.max_interior_mirror_error = d.max_interior_mirror_error.max((r_new - r_old - db).abs());
        }
        let new_eta: Vec<f64> = (0..n)
            .map(|i| (self.x_path.position[i] - self.y_path.position[i]) / r_new)
            .collect();
        if let Some(nx) = self.x_path.last_push_normal() {
            d.max_sign_violation = d.max_sign_violation.max(dot(&new_eta, &nx));
        }
        if let Some(ny) = self.y_path.last_push_normal() {
            d.max_sign_violation = d.max_sign_violation.max(-dot(&new_eta, &ny));
        }
        self.eta = Some(new_eta);
        Ok(())
    }

    fn trace_row(&self) -> TraceRow {
        TraceRow {
            step: self.x_path.rng_cursor,
            t: self.x_path.time,
            x: self.x_path.position.clone(),
            y: self.y_path.position.clone(),
            r: self.r,
            phi: self.phi,
            qv_clock: self.qv_clock,
            proj_x: self.x_path.last_push,
            proj_y: self.y_path.last_push,
        }
    }
}

/// Pure form of [`CoupledState::step`].
pub fn mirror_step(
    body: &ConvexBody,
    cs: &CoupledState,
    drift: Option<&DriftModel>,
    h: f64,
    gaussian: &[f64],
    epsilon: f64,
) -> Result<CoupledState> {
    let mut next = cs.clone();
    next.step(body, drift, h, gaussian, epsilon, None)?;
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", content = "time", rename_all = "lowercase")]
pub enum Tau {
    Coupled(f64),
    Censored(f64),
}

impl Tau {
    pub fn time(self) -> f64 {
        match self {
            Tau::Coupled(t) | Tau::Censored(t) => t,
        }
    }

    pub fn is_censored(self) -> bool {
        matches!(self, Tau::Censored(_))
    }

    pub fn sample(self) -> TimeSample {
        match self {
            Tau::Coupled(t) => TimeSample::event(t),
            Tau::Censored(t) => TimeSample::censored(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingOutcome {
    pub tau: Tau,
    pub step_size: f64,
    pub epsilon_couple: f64,
    pub steps: u64,
    pub diagnostics: Diagnostics,
}

fn check_start(body: &ConvexBody, p: &[f64], name: &'static str) -> Result<()> {
    if p.len() != body.dimension() {
        return Err(Error::DimensionMismatch {
            expected: body.dimension(),
            got: p.len(),
        });
    }
    if !body.contains(p)? {
        return Err(invalid(name, "must lie in the body"));
    }
    Ok(())
}

/// Runs the mirror coupling from `(x, y)` until `r ≤ epsilon` or `t_max`.
pub fn simulate_coupling_time<R: Rng>(
    body: &ConvexBody,
    x: &[f64],
    y: &[f64],
    drift: Option<&DriftModel>,
    params: &CouplingParams,
    rng: &mut R,
) -> Result<CouplingOutcome> {
    simulate_inner(body, x, y, drift, params, rng, None)
}

/// As [`simulate_coupling_time`], also recording every step.
pub fn simulate_coupling_traced<R: Rng>(
    body: &ConvexBody,
    x: &[f64],
    y: &[f64],
    drift: Option<&DriftModel>,
    params: &CouplingParams,
    rng: &mut R,
) -> Result<(CouplingOutcome, Vec<TraceRow>)> {
    let mut rows = Vec::new();
    let out = simulate_inner(body, x, y, drift, params, rng, Some(&mut rows))?;
    Ok((out, rows))
}

fn simulate_inner<R: Rng>(
    body: &ConvexBody,
    x: &[f64],
    y: &[f64],
    drift: Option<&DriftModel>,
    params: &CouplingParams,
    rng: &mut R,
    mut trace: Option<&mut Vec<TraceRow>>,
) -> Result<CouplingOutcome> {
    params.validate(body.diameter())?;
    check_start(body, x, "x")?;
    check_start(body, y, "y")?;
    let mut cs = CoupledState::new(x.to_vec(), y.to_vec(), params.epsilon)?;
    if let Some(rows) = trace.as_deref_mut() {
        rows.push(cs.trace_row());
    }
    let max_steps = steps_to_cover(params.t_max, params.h);
    let mut dw = vec![0.0; x.len()];
    let sqrt_h = params.h.sqrt();
    while !cs.is_coupled() && cs.x_path.rng_cursor < max_steps {
        fill_gaussian(rng, sqrt_h, &mut dw);
        let bridge: Option<&mut dyn RngCore> = match params.detection {
            Detection::Bridge => Some(&mut *rng),
            Detection::Endpoint => None,
        };
        cs.step(body, drift, params.h, &dw, params.epsilon, bridge)?;
        if let Some(rows) = trace.as_deref_mut() {
            rows.push(cs.trace_row());
        }
    }
    let tau = match cs.coupled_at {
        Some(t) => Tau::Coupled(t),
        // The summed clock drifts by round-off; the run covered t_max.
        None => Tau::Censored((max_steps as f64 * params.h).max(params.t_max)),
    };
    Ok(CouplingOutcome {
        tau,
        step_size: params.h,
        epsilon_couple: params.epsilon,
        steps: cs.x_path.rng_cursor,
        diagnostics: cs.diagnostics,
    })
}

/// Independent replicates; replicate `i` uses stream `(seed, i)`, so results
/// do not depend on the thread count.
pub fn run_replicates(
    body: &ConvexBody,
    x: &[f64],
    y: &[f64],
    drift: Option<&DriftModel>,
    params: &CouplingParams,
    n: usize,
    seed: u64,
) -> Result<Vec<CouplingOutcome>> {
    params.validate(body.diameter())?;
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_stream(seed, i);
            simulate_coupling_time(body, x, y, drift, params, &mut rng)
        })
        .collect()
}

pub const OUTCOME_CSV_HEADER: &str = "replicate,tau,censored,steps,boundary_events";

pub fn outcomes_csv(outcomes: &[CouplingOutcome]) -> String {
    let mut out = format!("{OUTCOME_CSV_HEADER}\n");
    for (i, o) in outcomes.iter().enumerate() {
        let _ = writeln!(
            out,
            "{i},{},{},{},{}",
            o.tau.time(),
            o.tau.is_censored(),
            o.steps,
            o.diagnostics.boundary_events
        );
    }
    out
}

/// Result of one comparison-process run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZOutcome {
    pub hit: Option<f64>,
    pub t_end: f64,
    pub z_end: f64,
}

impl ZOutcome {
    pub fn sample(&self) -> TimeSample {
        match self.hit {
            Some(t) => TimeSample::event(t),
            None => TimeSample::censored(self.t_end),
        }
    }
}

/// Euler scheme for `dZ = Γ(Z)/Z dt + dB_{4t}`, absorbed at 0.
pub fn simulate_comparison_z<R: Rng + ?Sized>(
    gamma: impl Fn(f64) -> f64,
    r0: f64,
    h: f64,
    t_max: f64,
    rng: &mut R,
) -> Result<ZOutcome> {
    if !(r0 > 0.0) {
        return Err(invalid("r0", "must be positive"));
    }
    if !(h > 0.0) || !(t_max >= 0.0) {
        return Err(invalid("h", "h must be positive and t_max nonnegative"));
    }
    let z_floor = Z_FLOOR_REL * r0;
    let noise = 2.0 * h.sqrt();
    let max_steps = steps_to_cover(t_max, h);
    let mut z = r0;
    for step in 0..max_steps {
        let g = gamma(z);
        if !g.is_finite() {
            return Err(invalid("gamma", format!("non-finite value at z = {z}")));
        }
        let mut rate = g / z;
        if z < z_floor {
            rate = rate.clamp(-K_CAP, K_CAP);
        }
        let eps: f64 = rng.sample(StandardNormal);
        let next = z + rate * h + noise * eps;
        let t = step as f64 * h;
        if next <= 0.0 {
            let hit = t + h * z / (z - next);
            return Ok(ZOutcome {
                hit: Some(hit),
                t_end: hit,
                z_end: 0.0,
            });
        }
        z = next;
    }
    Ok(ZOutcome {
        hit: None,
        t_end: (max_steps as f64 * h).max(t_max),
        z_end: z,
    })
}

/// Comparison-process replicates on streams `(seed, i)`.
pub fn run_comparison_z(
    drift: &DriftModel,
    r0: f64,
    h: f64,
    t_max: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<ZOutcome>> {
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_stream(seed, i);
            simulate_comparison_z(drift.gamma_fn(), r0, h, t_max, &mut rng)
        })
        .collect()
}

/// Folds `w` into `[0, d]` by reflection at both ends.
pub fn fold_reflect_1d(d: f64, w: f64) -> f64 {
    let m = w.rem_euclid(2.0 * d);
    m.min(2.0 * d - m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> ConvexBody {
        ConvexBody::interval(0.0, 1.0).unwrap()
    }

    #[test]
    fn step_examples() {
        let b = ConvexBody::new_box(vec![0.0], vec![1.0]).unwrap();
        let s = step_reflected(&b, &PathState::new(vec![0.9]), None, 1e-3, &[0.3]).unwrap();
        assert_eq!(s.position, vec![1.0]);
        assert!((s.local_pushes - 0.2).abs() < 1e-15);
        let s = step_reflected(&b, &PathState::new(vec![0.5]), None, 1e-3, &[0.1]).unwrap();
        assert_eq!((s.position[0], s.local_pushes), (0.6, 0.0));
        let s0 = PathState::new(vec![0.4]);
        let s = step_reflected(&b, &s0, None, 0.01, &[0.0]).unwrap();
        assert_eq!(s.position, s0.position);
        assert_eq!(s.time, 0.01);
    }

    #[test]
    fn householder_examples() {
        let b = ConvexBody::new_box(vec![-10.0; 2], vec![10.0; 2]).unwrap();
        let cs = CoupledState::new(vec![1.0, 0.0], vec![0.0, 0.0], 1e-3).unwrap();
        let next = mirror_step(&b, &cs, None, 1e-4, &[0.01, 0.02], 1e-3).unwrap();
        assert!((next.y_path.position[0] + 0.01).abs() < 1e-15);
        assert!((next.y_path.position[1] - 0.02).abs() < 1e-15);
        let next = mirror_step(&b, &cs, None, 1e-4, &[0.0, 0.05], 1e-3).unwrap();
        assert_eq!(next.y_path.position, vec![0.0, 0.05]);
    }

    #[test]
    fn interior_mirror_doubling_1d() {
        let b = ConvexBody::interval(0.0, 1.0).unwrap();
        let cs = CoupledState::new(vec![0.3], vec![0.7], 1e-3).unwrap();
        let next = mirror_step(&b, &cs, None, 1e-4, &[0.01], 1e-3).unwrap();
        assert!((next.r - (0.4 - 0.02)).abs() < 1e-12);
        assert!((next.y_path.position[0] - 0.69).abs() < 1e-15);
    }

    #[test]
    fn identical_starts_couple_immediately() {
        let mut rng = replicate_stream(1, 0);
        let o = simulate_coupling_time(&unit(), &[0.4], &[0.4], None, &CouplingParams::new(1e-4, 1.0), &mut rng)
            .unwrap();
        assert_eq!(o.tau, Tau::Coupled(0.0));
        assert_eq!(o.steps, 0);
    }

    #[test]
    fn parameter_validation() {
        let mut rng = replicate_stream(1, 0);
        let p = CouplingParams::new(1e-2, 1.0);
        assert!(simulate_coupling_time(&unit(), &[0.0], &[1.0], None, &p, &mut rng).is_err());
        let p = CouplingParams::new(1e-4, 1.0).with_epsilon(1e-4);
        assert!(simulate_coupling_time(&unit(), &[0.0], &[1.0], None, &p, &mut rng).is_err());
        let p = CouplingParams::new(1e-4, 1.0);
        assert!(simulate_coupling_time(&unit(), &[0.0], &[1.5], None, &p, &mut rng).is_err());
    }

    #[test]
    fn invariants_along_a_ball_path() {
        let b = ConvexBody::ball(vec![0.0, 0.0], 0.5).unwrap();
        let (x, y) = b.antipodal_pair().unwrap();
        let h = 1e-4;
        for i in 0..20 {
            let mut rng = replicate_stream(9, i);
            let (o, rows) =
                simulate_coupling_traced(&b, &x, &y, None, &CouplingParams::new(h, 2.0), &mut rng).unwrap();
            let d = o.diagnostics;
            assert!(d.max_r <= 1.0 + 1e-9);
            assert!(d.max_sign_violation <= SIGN_TOL, "{d:?}");
            assert!(d.max_phi_increment <= 1e-12, "{d:?}");
            assert!(d.max_interior_mirror_error <= 1e-10);
            for row in &rows {
                assert!(b.contains(&row.x).unwrap() && b.contains(&row.y).unwrap());
                let r = dist(&row.x, &row.y);
                if r > 0.0 {
                    assert!((row.r - r).abs() < 1e-12);
                }
            }
            if let Tau::Coupled(t) = o.tau {
                assert!(t > 0.0 && t <= o.steps as f64 * h + 1e-12);
                let last = rows.last().unwrap();
                assert_eq!(last.x, last.y);
            }
        }
    }

    #[test]
    fn qv_clock_tracks_four_t() {
        let b = ConvexBody::cube_with_diameter(3, 1.0).unwrap();
        let (x, y) = b.antipodal_pair().unwrap();
        let mut rng = replicate_stream(4, 0);
        let mut cs = CoupledState::new(x, y, 1e-3).unwrap();
        let h: f64 = 1e-6;
        let mut dw = vec![0.0; 3];
        for _ in 0..20_000 {
            fill_gaussian(&mut rng, h.sqrt(), &mut dw);
            cs.step(&b, None, h, &dw, 1e-3, None).unwrap();
        }
        assert!(!cs.is_coupled());
        // Realized QV of 20000 increments of variance 4h: relative sd 1%.
        assert!((cs.qv_clock / (4.0 * cs.x_path.time) - 1.0).abs() < 0.05);
    }

    #[test]
    fn outcomes_are_deterministic() {
        let b = ConvexBody::ball(vec![0.0; 2], 0.5).unwrap();
        let (x, y) = b.antipodal_pair().unwrap();
        let p = CouplingParams::new(1e-4, 1.0);
        let a = run_replicates(&b, &x, &y, None, &p, 16, 77).unwrap();
        let c = run_replicates(&b, &x, &y, None, &p, 16, 77).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&c).unwrap());
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let e = pool.install(|| run_replicates(&b, &x, &y, None, &p, 16, 77).unwrap());
        assert_eq!(a, e);
    }

    #[test]
    fn ou_model_envelope_and_rejection() {
        let b = ConvexBody::interval(-1.0, 1.0).unwrap();
        let m = DriftModel::ou(1.5, &b).unwrap();
        let audit = m.audit(&b, 1000).unwrap();
        assert!(audit.min_slack.abs() < 1e-12);
        let bad = DriftModel::new("expanding", |x, o| o[0] = 2.0 * x[0], 2.0, |_| 0.0, 0.0, &b);
        assert!(matches!(bad, Err(Error::DriftEnvelope { .. })));
    }

    #[test]
    fn drift_enters_candidate() {
        let b = ConvexBody::interval(-1.0, 1.0).unwrap();
        let m = DriftModel::ou(2.0, &b).unwrap();
        let s = step_reflected(&b, &PathState::new(vec![0.5]), Some(&m), 0.01, &[0.0]).unwrap();
        assert!((s.position[0] - 0.49).abs() < 1e-15);
    }

    #[test]
    fn z_examples() {
        // From r0 → 0⁺ about half the paths are absorbed on the first step.
        let first_step = (0..400)
            .filter(|&i| {
                let mut rng = replicate_stream(2, i);
                let o = simulate_comparison_z(|_| 0.0, 1e-9, 1e-4, 1.0, &mut rng).unwrap();
                o.hit.is_some_and(|t| t <= 1e-4)
            })
            .count();
        assert!((150..=250).contains(&first_step), "{first_step}");
        let mut rng = replicate_stream(3, 1);
        let o = simulate_comparison_z(|_| f64::NAN, 1.0, 1e-4, 1.0, &mut rng);
        assert!(o.is_err());
    }

    #[test]
    fn fold_examples() {
        assert_eq!(fold_reflect_1d(1.0, 0.4), 0.4);
        assert!((fold_reflect_1d(1.0, 1.5) - 0.5).abs() < 1e-15);
        assert!((fold_reflect_1d(1.0, -0.3) - 0.3).abs() < 1e-15);
        assert!((fold_reflect_1d(1.0, 3.7) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn csv_layouts() {
        let mut rng = replicate_stream(3, 0);
        let b = ConvexBody::new_box(vec![0.0; 2], vec![1.0; 2]).unwrap();
        let (o, rows) = simulate_coupling_traced(
            &b,
            &[0.0, 0.0],
            &[1.0, 1.0],
            None,
            &CouplingParams::new(1e-4, 0.001),
            &mut rng,
        )
        .unwrap();
        let csv = trace_csv(&rows);
        assert!(csv.starts_with("step,t,x0,x1,y0,y1,r,phi,qv_clock,proj_x,proj_y\n"));
        assert_eq!(csv.lines().count(), rows.len() + 1);
        let oc = outcomes_csv(&[o]);
        assert!(oc.starts_with("replicate,tau,censored,steps,boundary_events\n0,"));
    }
}
