//! Multi-seed execution and aggregation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ScheduleConfig};
use super::fit::fit_loglog_slope;
use crate::error::{Error, Result};
use crate::methods::{run_method, MethodKind, RunSpec, RunTrace, Runner};
use crate::point::Point;
use crate::problems::Problem;
use crate::rng::{derive_key, CounterRng};
use crate::schedules::{korpelevich_offset, theoretical_a, StepSchedule};
use crate::smoothness::{
    verify_assumptions, SymmetryConstants, VerificationReport, VerifySettings,
};

const PILOT_SALT: u64 = 0x5049_4C4F_545F_4346;
const VERIFY_STREAM: u64 = u64::MAX;

/// A configured method with its schedule made concrete.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedMethod {
    pub label: String,
    pub kind: MethodKind,
    pub schedule: StepSchedule,
    pub stream: u64,
    /// Pilot estimate of `C_F`, when the schedule needed one.
    pub c_f: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub k: u64,
    pub mean_dist2_last: f64,
    pub std_dist2_last: f64,
    pub mean_dist2_avg: f64,
    pub std_dist2_avg: f64,
    pub mean_gamma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodAggregate {
    pub method: ResolvedMethod,
    pub rows: Vec<AggregateRow>,
    pub slope_last: Option<f64>,
    pub slope_avg: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregateResult {
    pub config: ExperimentConfig,
    pub methods: Vec<MethodAggregate>,
    pub verification: Option<VerificationReport>,
    /// Per-method, per-seed traces; kept only when `raw_traces` is set.
    pub traces: Option<Vec<Vec<RunTrace>>>,
}

impl AggregateResult {
    pub fn method(&self, label: &str) -> Option<&MethodAggregate> {
        self.methods.iter().find(|m| m.method.label == label)
    }
}

/// Max over seeds and iterations of the running mean of the clip-sample
/// norms `‖Φ‖`, from short runs with `a = μ`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_c_f(
    problem: &Problem,
    kind: MethodKind,
    offset: Option<f64>,
    constants: Option<&SymmetryConstants>,
    alpha: Option<f64>,
    start: &Point,
    iterations: u64,
    seeds: usize,
    master_seed: u64,
    stream: u64,
) -> Result<f64> {
    let mu = problem.mu();
    let offset = match (offset, kind) {
        (Some(o), _) => o,
        (None, MethodKind::Korpelevich) => 2.0 * extragradient_d(mu, constants)? / mu,
        (None, _) => 2.0,
    };
    let schedule = StepSchedule::harmonic(mu, offset)?;
    let mut worst: f64 = 0.0;
    for r in 0..seeds {
        let rng = CounterRng::for_run(master_seed ^ PILOT_SALT, stream, r as u64);
        let mut runner = Runner::new(kind, problem, schedule, start, alpha, rng)?;
        let mut sum = 0.0;
        for t in 0..iterations {
            runner.step();
            sum += runner.state().last_clip_norm;
            worst = worst.max(sum / (t + 1) as f64);
        }
    }
    Ok(worst)
}

fn extragradient_d(mu: f64, constants: Option<&SymmetryConstants>) -> Result<f64> {
    let c = constants.ok_or_else(|| {
        Error::config(
            "problem.l0",
            "the extragradient offset needs symmetry constants",
        )
    })?;
    korpelevich_offset(mu, c)
}

/// Turns every configured schedule into a concrete [`StepSchedule`],
/// running the `C_F` pilot where a harmonic `a` is left to the defaults.
pub fn resolve_methods(
    config: &ExperimentConfig,
    problem: &Problem,
) -> Result<Vec<ResolvedMethod>> {
    let constants = config.problem.symmetry_constants()?;
    let alpha = Some(config.problem.alpha);
    let start = config.problem.start_point();
    let labels = config.method_labels();
    config
        .methods
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let stream = m.stream.unwrap_or(i as u64);
            let mut c_f = None;
            let schedule = match m.schedule {
                ScheduleConfig::Harmonic { a, offset } => {
                    let a = match a {
                        Some(a) => a,
                        None => {
                            let est = estimate_c_f(
                                problem,
                                m.kind,
                                offset,
                                constants.as_ref(),
                                alpha,
                                &start,
                                config.pilot.iterations,
                                config.pilot.seeds,
                                config.master_seed,
                                stream,
                            )?;
                            c_f = Some(est);
                            theoretical_a(problem.mu(), est, problem.sigma_total())?
                        }
                    };
                    let offset = match (offset, m.kind) {
                        (Some(o), _) => o,
                        (None, MethodKind::Korpelevich) => {
                            2.0 * extragradient_d(problem.mu(), constants.as_ref())? / a
                        }
                        (None, _) => 2.0,
                    };
                    StepSchedule::harmonic(a, offset)?
                }
                ScheduleConfig::PowerLaw { b, q } => StepSchedule::power_law(b, q)?,
                ScheduleConfig::Experiment { c0, q } => StepSchedule::experiment(c0, q)?,
                ScheduleConfig::Constant { beta } => StepSchedule::constant(beta)?,
            };
            Ok(ResolvedMethod {
                label: labels[i].clone(),
                kind: m.kind,
                schedule,
                stream,
                c_f,
            })
        })
        .collect()
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Mean and population standard deviation across runs at each checkpoint.
/// The initial `k = 0` row of each trace is not aggregated.
pub fn aggregate_traces(traces: &[RunTrace]) -> Vec<AggregateRow> {
    let Some(first) = traces.first() else {
        return Vec::new();
    };
    (1..first.rows.len())
        .map(|j| {
            let col = |f: fn(&crate::methods::TraceRow) -> f64| -> Vec<f64> {
                traces.iter().map(|t| f(&t.rows[j])).collect()
            };
            let (mean_dist2_last, std_dist2_last) = mean_std(&col(|r| r.dist2_last));
            let (mean_dist2_avg, std_dist2_avg) = mean_std(&col(|r| r.dist2_avg));
            let (mean_gamma, _) = mean_std(&col(|r| r.gamma));
            AggregateRow {
                k: first.rows[j].k,
                mean_dist2_last,
                std_dist2_last,
                mean_dist2_avg,
                std_dist2_avg,
                mean_gamma,
            }
        })
        .collect()
}

/// Slopes of mean `dist²` (last, averaged) against `k` over `window`.
pub fn fit_rows(rows: &[AggregateRow], window: (u64, u64)) -> (Option<f64>, Option<f64>) {
    let w = (window.0 as f64, window.1 as f64);
    let series = |f: fn(&AggregateRow) -> f64| -> Vec<(f64, f64)> {
        rows.iter().map(|r| (r.k as f64, f(r))).collect()
    };
    (
        fit_loglog_slope(&series(|r| r.mean_dist2_last), w).ok(),
        fit_loglog_slope(&series(|r| r.mean_dist2_avg), w).ok(),
    )
}

/// Runs `seeds` independent runs of every configured method and aggregates
/// them. Run `r` of a method with stream `s` uses the key
/// `derive_key(master_seed, s, r)`, so results depend only on the config.
pub fn run_experiment(config: &ExperimentConfig) -> Result<AggregateResult> {
    config.validate()?;
    let problem = config.problem.build()?;
    let resolved = resolve_methods(config, &problem)?;
    let checkpoints = config.checkpoint_list();
    let start = config.problem.start_point();
    let alpha = Some(config.problem.alpha);

    let jobs: Vec<(usize, usize)> = (0..resolved.len())
        .flat_map(|m| (0..config.seeds).map(move |r| (m, r)))
        .collect();
    let run_one = |&(m, r): &(usize, usize)| -> Result<RunTrace> {
        let method = &resolved[m];
        let spec = RunSpec {
            kind: method.kind,
            schedule: method.schedule,
            iterations: config.iterations,
            seed: derive_key(config.master_seed, method.stream, r as u64),
            checkpoints: checkpoints.clone(),
            start: start.clone(),
            alpha,
        };
        let trace = run_method(&problem, &spec).map_err(|e| Error::RunContext {
            method: method.label.clone(),
            seed: r,
            source: Box::new(e),
        })?;
        log::info!("{} run {}/{} done", method.label, r + 1, config.seeds);
        Ok(trace)
    };

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = config.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Run(format!("cannot start worker pool: {e}")))?;
    let traces: Vec<RunTrace> =
        pool.install(|| jobs.par_iter().map(run_one).collect::<Result<_>>())?;

    let mut per_method: Vec<Vec<RunTrace>> = vec![Vec::with_capacity(config.seeds); resolved.len()];
    for ((m, _), t) in jobs.iter().zip(traces) {
        per_method[*m].push(t);
    }

    let window = config.fit_window();
    let methods = resolved
        .into_iter()
        .zip(&per_method)
        .map(|(method, traces)| {
            let rows = aggregate_traces(traces);
            let (slope_last, slope_avg) = fit_rows(&rows, window);
            MethodAggregate {
                method,
                rows,
                slope_last,
                slope_avg,
            }
        })
        .collect();

    let verification = if config.verify_samples > 0 {
        let constants = config.problem.symmetry_constants()?;
        let mut rng = CounterRng::for_run(config.master_seed, VERIFY_STREAM, 0);
        let settings = VerifySettings {
            n_samples: config.verify_samples,
            ..Default::default()
        };
        Some(verify_assumptions(
            &problem,
            constants.as_ref(),
            settings,
            &mut rng,
        )?)
    } else {
        None
    };

    Ok(AggregateResult {
        config: config.clone(),
        methods,
        verification,
        traces: config.raw_traces.then_some(per_method),
    })
}
