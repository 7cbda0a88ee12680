//! Clipped stochastic solvers and the single-run driver.
//!
//! All four methods share [`MethodState`]. The projection methods only move
//! `u`; the extragradient method carries the leader `h` between iterations
//! and computes the extrapolation point `u` inside each step; the Popov
//! method moves both and remembers the previous leader in `h_prev`.
//!
//! Each step adds one point to the `β`-weighted running average: the
//! current `u_k` for the projection and Popov methods, the leader `h_k`
//! for the extragradient method.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::{self, Point};
use crate::problems::Problem;
use crate::rng::CounterRng;
use crate::schedules::{clip_stepsize, StepSchedule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    ProjectionTwoSample,
    ProjectionSameSample,
    Korpelevich,
    Popov,
}

impl MethodKind {
    pub const ALL: [MethodKind; 4] = [
        MethodKind::ProjectionTwoSample,
        MethodKind::ProjectionSameSample,
        MethodKind::Korpelevich,
        MethodKind::Popov,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MethodKind::ProjectionTwoSample => "projection_two_sample",
            MethodKind::ProjectionSameSample => "projection_same_sample",
            MethodKind::Korpelevich => "korpelevich",
            MethodKind::Popov => "popov",
        }
    }

    pub fn oracle_calls_per_step(&self) -> u64 {
        match self {
            MethodKind::ProjectionSameSample => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Running `β`-weighted mean `ū = (Σ β_t)^{-1} Σ β_t u_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct AveragingState {
    pub avg: Point,
    pub weight_sum: f64,
}

impl AveragingState {
    pub fn new(dim: usize) -> Self {
        AveragingState {
            avg: Point::zeros(dim),
            weight_sum: 0.0,
        }
    }

    /// `ū ← ū + (β/W')(u − ū)` with `W' = W + β`.
    #[inline]
    pub fn update(&mut self, u: &[f64], beta: f64) {
        debug_assert!(beta > 0.0);
        self.weight_sum += beta;
        let t = beta / self.weight_sum;
        for (a, x) in self.avg.iter_mut().zip(u) {
            *a += t * (x - *a);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.weight_sum == 0.0
    }
}

/// Weighted mean computed in one pass, for cross-checking the running form.
pub fn batch_weighted_average(points: &[Point], weights: &[f64]) -> Point {
    let dim = points.first().map_or(0, |p| p.dim());
    let total: f64 = weights.iter().sum();
    let mut out = Point::zeros(dim);
    for (p, w) in points.iter().zip(weights) {
        for (o, x) in out.iter_mut().zip(p.iter()) {
            *o += w * x;
        }
    }
    for o in out.iter_mut() {
        *o /= total;
    }
    out
}

#[derive(Clone, Debug)]
pub struct MethodState {
    pub u: Point,
    pub h: Point,
    pub h_prev: Point,
    pub k: u64,
    pub oracle_calls: u64,
    pub last_gamma: f64,
    pub last_clip_norm: f64,
    pub avg: AveragingState,
    clip: Vec<f64>,
    dir: Vec<f64>,
}

impl MethodState {
    /// `u₀ = h₀ = h_{−1} = start`.
    pub fn new(start: Point) -> Self {
        let dim = start.dim();
        MethodState {
            h: start.clone(),
            h_prev: start.clone(),
            u: start,
            k: 0,
            oracle_calls: 0,
            last_gamma: 0.0,
            last_clip_norm: 0.0,
            avg: AveragingState::new(dim),
            clip: vec![0.0; dim],
            dir: vec![0.0; dim],
        }
    }

    /// The iterate whose distance to `U*` is tracked: `h` for the
    /// extragradient method, `u` otherwise.
    pub fn last_iterate(&self, kind: MethodKind) -> &Point {
        match kind {
            MethodKind::Korpelevich => &self.h,
            _ => &self.u,
        }
    }

    /// The averaged iterate, or the start point before the first step.
    pub fn averaged_iterate(&self) -> &Point {
        if self.avg.is_empty() {
            &self.u
        } else {
            &self.avg.avg
        }
    }
}

/// `u_{k+1} = P(u_k − γ_k Φ(u_k, ξ_k))` with `γ_k` clipped by an independent
/// draw `Φ(u_k, ξ_k²)` taken first.
pub fn step_projection_two_sample(
    s: &mut MethodState,
    problem: &Problem,
    beta: f64,
    rng: &mut CounterRng,
) {
    problem.sample_into(&s.u, rng, &mut s.clip);
    let clip_norm = point::norm(&s.clip);
    let gamma = clip_stepsize(beta, clip_norm);
    problem.sample_into(&s.u, rng, &mut s.dir);
    s.avg.update(&s.u, beta);
    move_and_project(&mut s.u, gamma, &s.dir, problem);
    finish(s, gamma, clip_norm, 2);
}

/// As [`step_projection_two_sample`] but one draw sets both the clip norm
/// and the direction.
pub fn step_projection_same_sample(
    s: &mut MethodState,
    problem: &Problem,
    beta: f64,
    rng: &mut CounterRng,
) {
    problem.sample_into(&s.u, rng, &mut s.dir);
    let clip_norm = point::norm(&s.dir);
    let gamma = clip_stepsize(beta, clip_norm);
    s.avg.update(&s.u, beta);
    move_and_project(&mut s.u, gamma, &s.dir, problem);
    finish(s, gamma, clip_norm, 1);
}

/// `u_k = P(h_k − γ_k Φ(h_k, ξ¹))`, `h_{k+1} = P(h_k − γ_k Φ(u_k, ξ²))`,
/// with `γ_k` clipped by `‖Φ(h_k, ξ¹)‖` and reused in both updates.
pub fn step_korpelevich(s: &mut MethodState, problem: &Problem, beta: f64, rng: &mut CounterRng) {
    problem.sample_into(&s.h, rng, &mut s.clip);
    let clip_norm = point::norm(&s.clip);
    let gamma = clip_stepsize(beta, clip_norm);
    s.avg.update(&s.h, beta);
    point::sub_scaled(&mut s.u, &s.h, gamma, &s.clip);
    problem.set().project_in_place(&mut s.u);
    problem.sample_into(&s.u, rng, &mut s.dir);
    move_and_project(&mut s.h, gamma, &s.dir, problem);
    finish(s, gamma, clip_norm, 2);
}

/// Clipped Popov step.
///
/// `γ_k = β_k·min{1, 1/‖Φ(h_k, ξᶜ)‖, (‖u_k − h_{k−1}‖ + 1)^{−α/(1−α)}}`, then
/// `u_{k+1} = P(u_k − γ_k Φ(h_k, ξ_k))` and `h_{k+1} = P(u_{k+1} − γ_k Φ(h_k, ξ_k))`.
/// The clip norm comes from a fresh draw `ξᶜ` independent of the direction
/// draw `ξ_k`, which is reused by both updates.
pub fn step_popov(
    s: &mut MethodState,
    problem: &Problem,
    beta: f64,
    alpha: f64,
    rng: &mut CounterRng,
) -> Result<()> {
    let exponent = popov_exponent(alpha)?;
    problem.sample_into(&s.h, rng, &mut s.clip);
    let clip_norm = point::norm(&s.clip);
    let drift = point::dist(&s.u, &s.h_prev) + 1.0;
    let gamma = clip_stepsize(beta, clip_norm).min(beta / drift.powf(exponent));
    problem.sample_into(&s.h, rng, &mut s.dir);
    s.avg.update(&s.u, beta);
    move_and_project(&mut s.u, gamma, &s.dir, problem);
    std::mem::swap(&mut s.h_prev, &mut s.h);
    point::sub_scaled(&mut s.h, &s.u, gamma, &s.dir);
    problem.set().project_in_place(&mut s.h);
    finish(s, gamma, clip_norm, 2);
    Ok(())
}

/// `α/(1−α)` for `α ∈ (0, 1)`.
pub fn popov_exponent(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!(
            "the Popov clip needs α strictly inside (0, 1), got {alpha}"
        )));
    }
    Ok(alpha / (1.0 - alpha))
}

#[inline]
fn move_and_project(x: &mut Point, gamma: f64, d: &[f64], problem: &Problem) {
    for (xi, di) in x.iter_mut().zip(d) {
        *xi -= gamma * di;
    }
    problem.set().project_in_place(x);
}

#[inline]
fn finish(s: &mut MethodState, gamma: f64, clip_norm: f64, calls: u64) {
    s.last_gamma = gamma;
    s.last_clip_norm = clip_norm;
    s.k += 1;
    s.oracle_calls += calls;
}

/// Drives one method over a problem and schedule, one step at a time.
#[derive(Debug)]
pub struct Runner<'a> {
    kind: MethodKind,
    problem: &'a Problem,
    schedule: StepSchedule,
    alpha: f64,
    rng: CounterRng,
    state: MethodState,
}

impl<'a> Runner<'a> {
    /// `alpha` is only read by the Popov method.
    pub fn new(
        kind: MethodKind,
        problem: &'a Problem,
        schedule: StepSchedule,
        start: &Point,
        alpha: Option<f64>,
        rng: CounterRng,
    ) -> Result<Self> {
        if start.dim() != problem.dim() {
            return Err(Error::Dimension(format!(
                "start point has dimension {}, problem {}",
                start.dim(),
                problem.dim()
            )));
        }
        if !start.is_finite() {
            return Err(Error::Domain("start point must be finite".into()));
        }
        let alpha = match (kind, alpha) {
            (MethodKind::Popov, None) => {
                return Err(Error::Domain("the Popov method needs α".into()));
            }
            (MethodKind::Popov, Some(a)) => {
                popov_exponent(a)?;
                a
            }
            (_, a) => a.unwrap_or(f64::NAN),
        };
        let start = problem.set().project(start)?;
        Ok(Runner {
            kind,
            problem,
            schedule,
            alpha,
            rng,
            state: MethodState::new(start),
        })
    }

    pub fn state(&self) -> &MethodState {
        &self.state
    }

    pub fn kind(&self) -> MethodKind {
        self.kind
    }

    pub fn step(&mut self) {
        let beta = self.schedule.beta(self.state.k);
        let (s, pb, rng) = (&mut self.state, self.problem, &mut self.rng);
        match self.kind {
            MethodKind::ProjectionTwoSample => step_projection_two_sample(s, pb, beta, rng),
            MethodKind::ProjectionSameSample => step_projection_same_sample(s, pb, beta, rng),
            MethodKind::Korpelevich => step_korpelevich(s, pb, beta, rng),
            MethodKind::Popov => {
                // α was validated in `new`
                step_popov(s, pb, beta, self.alpha, rng).expect("validated α")
            }
        }
    }

    pub fn row(&self) -> TraceRow {
        let s = &self.state;
        let sol = self.problem.solution();
        TraceRow {
            k: s.k,
            gamma: s.last_gamma,
            dist2_last: sol.dist_sq(s.last_iterate(self.kind)),
            dist2_avg: sol.dist_sq(s.averaged_iterate()),
            oracle_calls: s.oracle_calls,
        }
    }
}

/// One trace record, taken after `k` completed iterations.
///
/// `gamma` is the stepsize of the last iteration (0 before the first) and
/// `dist2_avg` measures the average of the iterates visited so far.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: u64,
    pub gamma: f64,
    pub dist2_last: f64,
    pub dist2_avg: f64,
    pub oracle_calls: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub method: MethodKind,
    pub schedule: StepSchedule,
    pub seed: u64,
    pub problem: String,
    pub rows: Vec<TraceRow>,
}

#[derive(Clone, Debug)]
pub struct RunSpec {
    pub kind: MethodKind,
    pub schedule: StepSchedule,
    pub iterations: u64,
    /// Key of the run's random stream.
    pub seed: u64,
    /// Iteration counts at which to record a row, strictly increasing, each
    /// in `1..=iterations`.
    pub checkpoints: Vec<u64>,
    pub start: Point,
    pub alpha: Option<f64>,
}

/// Runs one method and records the initial row plus one row per checkpoint.
pub fn run_method(problem: &Problem, spec: &RunSpec) -> Result<RunTrace> {
    if let Some(w) = spec.checkpoints.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::Run(format!(
            "checkpoints must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    if let Some(&c) = spec
        .checkpoints
        .iter()
        .find(|&&c| c == 0 || c > spec.iterations)
    {
        return Err(Error::Run(format!(
            "checkpoint {c} outside 1..={} iterations",
            spec.iterations
        )));
    }
    let mut runner = Runner::new(
        spec.kind,
        problem,
        spec.schedule,
        &spec.start,
        spec.alpha,
        CounterRng::new(spec.seed),
    )?;
    let mut rows = Vec::with_capacity(spec.checkpoints.len() + 1);
    rows.push(runner.row());
    for &c in &spec.checkpoints {
        while runner.state().k < c {
            runner.step();
        }
        rows.push(runner.row());
    }
    Ok(RunTrace {
        method: spec.kind,
        schedule: spec.schedule,
        seed: spec.seed,
        problem: problem.tag().to_string(),
        rows,
    })
}

/// About `count` distinct integers spaced logarithmically over
/// `1..=iterations`, always including both ends.
pub fn log_checkpoints(iterations: u64, count: usize) -> Vec<u64> {
    if iterations == 0 || count == 0 {
        return Vec::new();
    }
    if count == 1 {
        return vec![iterations];
    }
    let top = (iterations as f64).ln();
    let mut out: Vec<u64> = (0..count)
        .map(|i| (top * i as f64 / (count - 1) as f64).exp().round() as u64)
        .map(|k| k.clamp(1, iterations))
        .collect();
    out.dedup();
    if *out.last().unwrap() != iterations {
        out.push(iterations);
    }
    out
}
