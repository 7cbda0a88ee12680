//! Experiment configuration files.
//!
//! Configs are TOML. Every key is listed below; unknown keys are rejected.
//!
//! ```toml
//! iterations = 100000            # required
//! seeds = 20                     # runs per method (default 20)
//! master_seed = 0                # default 0
//! output = "results"             # output directory (default "results")
//! workers = 4                    # optional; default: all cores
//! raw_traces = false             # dump per-run CSVs (default false)
//! fit_window = [10000, 100000]   # optional; default [iterations/10, iterations]
//! verify_samples = 1000          # samples per check in the JSON report (0 = skip)
//!
//! [problem]
//! operator = { kind = "minmax" } # or { kind = "linear", matrix = [[..], ..] }
//! p = 2.0                        # required for minmax
//! dimension = 10                 # required, even for minmax
//! sigma_entry = 0.316            # or sigma_total (= √m·sigma_entry); default sigma_entry = 1
//! set = { kind = "whole_space" } # or ball {radius, center?} / box {lower, upper}
//! start_radius = 5.0             # u₀ = start_radius·(1,…,1)/√m
//! mu = 1.0                       # optional; minmax default min{1, 2^{1−p/2}}
//! alpha = 0.5                    # α-symmetry order, in (0,1]
//! l0 = 1.41                      # optional symmetry constants
//! l1 = 0.0
//! solution = [0.0, ...]          # optional; default the origin
//!
//! [checkpoints]
//! count = 200                    # log-spaced; or `list = [1, 10, 100]`
//!
//! [pilot]                        # C_F estimation for harmonic schedules
//! iterations = 1000
//! seeds = 5
//!
//! [[methods]]
//! kind = "projection_two_sample" # | projection_same_sample | korpelevich | popov
//! schedule = { type = "harmonic" }                     # a, offset optional
//! # schedule = { type = "power_law", b = 0.05, q = 0.6 }
//! # schedule = { type = "experiment", c0 = 100, q = 0.51 }
//! # schedule = { type = "constant", beta = 0.01 }
//! label = "proj"                 # optional; default the kind name
//! stream = 0                     # optional; default the method's position
//!
//! [sweep]                        # only read by the `sweep` command
//! cells = [{ p = 2.5, alpha = 0.33, q = 0.51 }]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::methods::{log_checkpoints, MethodKind};
use crate::point::Point;
use crate::problems::{
    FeasibleSet, LinearOperator, MinMaxOperator, NoiseSpec, Operator, Problem, SolutionSet,
};
use crate::smoothness::SymmetryConstants;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub methods: Vec<MethodConfig>,
    pub iterations: u64,
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default)]
    pub raw_traces: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_window: Option<[u64; 2]>,
    #[serde(default = "default_verify_samples")]
    pub verify_samples: usize,
    #[serde(default)]
    pub checkpoints: CheckpointConfig,
    #[serde(default)]
    pub pilot: PilotConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

fn default_seeds() -> usize {
    20
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

fn default_verify_samples() -> usize {
    1000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default)]
    pub operator: OperatorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_entry: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_total: Option<f64>,
    #[serde(default)]
    pub set: SetConfig,
    #[serde(default = "default_start_radius")]
    pub start_radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution: Option<Vec<f64>>,
}

fn default_start_radius() -> f64 {
    5.0
}

fn default_alpha() -> f64 {
    0.5
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorConfig {
    #[default]
    Minmax,
    Linear {
        matrix: Vec<Vec<f64>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Bound {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Bound {
    fn expand(&self, dim: usize, field: &str) -> Result<Point> {
        match self {
            Bound::Scalar(x) => Ok(Point::new(vec![*x; dim])),
            Bound::Vector(v) if v.len() == dim => Ok(Point::new(v.clone())),
            Bound::Vector(v) => Err(Error::config(
                field,
                format!("expected {dim} entries, got {}", v.len()),
            )),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetConfig {
    #[default]
    WholeSpace,
    Ball {
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    Box {
        lower: Bound,
        upper: Bound,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleConfig {
    /// `a` and `offset` default to the theorem constructions: `a` from a
    /// pilot estimate of `C_F`, `offset` 2 (or `2d/a` for the extragradient
    /// method).
    Harmonic {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        a: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        offset: Option<f64>,
    },
    PowerLaw {
        b: f64,
        q: f64,
    },
    Experiment {
        #[serde(default = "default_c0")]
        c0: f64,
        q: f64,
    },
    Constant {
        beta: f64,
    },
}

fn default_c0() -> f64 {
    100.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    pub kind: MethodKind,
    pub schedule: ScheduleConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stream: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointConfig {
    #[serde(default = "default_checkpoint_count")]
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub list: Option<Vec<u64>>,
}

fn default_checkpoint_count() -> usize {
    200
}

impl Default for CheckpointConfig {
    fn default() -> Self {
        CheckpointConfig {
            count: default_checkpoint_count(),
            list: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PilotConfig {
    #[serde(default = "default_pilot_iterations")]
    pub iterations: u64,
    #[serde(default = "default_pilot_seeds")]
    pub seeds: usize,
}

fn default_pilot_iterations() -> u64 {
    1000
}

fn default_pilot_seeds() -> usize {
    5
}

impl Default for PilotConfig {
    fn default() -> Self {
        PilotConfig {
            iterations: default_pilot_iterations(),
            seeds: default_pilot_seeds(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub cells: Vec<SweepCell>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepCell {
    pub p: f64,
    pub alpha: f64,
    pub q: f64,
}

impl SweepCell {
    /// File stem naming the cell, e.g. `p2.5_alpha0.33_q0.51`.
    pub fn stem(&self) -> String {
        format!("p{}_alpha{}_q{}", self.p, self.alpha, self.q)
    }
}

/// Reads, overrides and validates a config file.
pub fn load_config(path: &Path, overrides: &[(String, String)]) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, overrides)
}

/// Parses config text, applies `key=value` overrides (dotted keys, numeric
/// segments index arrays) and validates the result.
pub fn parse_config(text: &str, overrides: &[(String, String)]) -> Result<ExperimentConfig> {
    let mut table: toml::Table =
        toml::from_str(text).map_err(|e| Error::config("<file>", e.to_string()))?;
    for (key, value) in overrides {
        apply_override(&mut table, key, value)?;
    }
    let cfg: ExperimentConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| Error::config("<file>", e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Splits `KEY=VALUE`.
pub fn parse_override(s: &str) -> Result<(String, String)> {
    match s.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(Error::config(s, "override must have the form KEY=VALUE")),
    }
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn apply_override(root: &mut toml::Table, key: &str, raw: &str) -> Result<()> {
    let segments: Vec<&str> = key.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(Error::config(key, "empty key segment"));
    }
    let (first, rest) = segments.split_first().unwrap();
    let slot = root
        .entry(first.to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    set_path(slot, rest, parse_value(raw), key)
}

fn set_path(cur: &mut toml::Value, segs: &[&str], value: toml::Value, key: &str) -> Result<()> {
    let Some((seg, rest)) = segs.split_first() else {
        *cur = value;
        return Ok(());
    };
    let next = match cur {
        toml::Value::Table(t) => t
            .entry(seg.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new())),
        toml::Value::Array(a) => {
            let idx: usize = seg
                .parse()
                .map_err(|_| Error::config(key, format!("`{seg}` is not an array index")))?;
            let len = a.len();
            a.get_mut(idx).ok_or_else(|| {
                Error::config(key, format!("index {idx} out of range (length {len})"))
            })?
        }
        _ => return Err(Error::config(key, format!("`{seg}` is not inside a table"))),
    };
    set_path(next, rest, value, key)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds < 1 {
            return Err(Error::config("seeds", "seeds must be at least 1"));
        }
        if self.iterations < 1 {
            return Err(Error::config("iterations", "iterations must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::config("methods", "at least one method is required"));
        }
        if self.workers == Some(0) {
            return Err(Error::config("workers", "worker count must be at least 1"));
        }
        if self.pilot.seeds < 1 || self.pilot.iterations < 1 {
            return Err(Error::config(
                "pilot",
                "pilot needs at least one seed and one iteration",
            ));
        }
        if let Some([lo, hi]) = self.fit_window {
            if !(lo >= 1 && lo < hi) {
                return Err(Error::config(
                    "fit_window",
                    "expected [k_min, k_max] with 1 ≤ k_min < k_max",
                ));
            }
        }
        if let Some(list) = &self.checkpoints.list {
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::config(
                    "checkpoints.list",
                    "must be strictly increasing",
                ));
            }
            if list.iter().any(|&k| k == 0 || k > self.iterations) {
                return Err(Error::config(
                    "checkpoints.list",
                    format!("entries must lie in 1..={}", self.iterations),
                ));
            }
        }
        self.problem.validate()?;
        for (i, m) in self.methods.iter().enumerate() {
            m.validate(i, &self.problem)?;
        }
        if let Some(sw) = &self.sweep {
            if sw.cells.is_empty() {
                return Err(Error::config(
                    "sweep.cells",
                    "at least one cell is required",
                ));
            }
            for (i, c) in sw.cells.iter().enumerate() {
                let mut cfg = self.clone();
                cfg.sweep = None;
                cfg.apply_cell(c)
                    .validate()
                    .map_err(|e| Error::config(format!("sweep.cells.{i}"), e.to_string()))?;
            }
        }
        Ok(())
    }

    pub fn checkpoint_list(&self) -> Vec<u64> {
        match &self.checkpoints.list {
            Some(l) => l.clone(),
            None => log_checkpoints(self.iterations, self.checkpoints.count),
        }
    }

    /// `[iterations/10, iterations]` unless configured.
    pub fn fit_window(&self) -> (u64, u64) {
        match self.fit_window {
            Some([lo, hi]) => (lo, hi),
            None => ((self.iterations / 10).max(1), self.iterations),
        }
    }

    /// This config with one sweep cell's `(p, α, q)` substituted.
    pub fn apply_cell(&self, cell: &SweepCell) -> ExperimentConfig {
        let mut cfg = self.clone();
        cfg.sweep = None;
        cfg.problem.p = Some(cell.p);
        cfg.problem.alpha = cell.alpha;
        for m in &mut cfg.methods {
            match &mut m.schedule {
                ScheduleConfig::PowerLaw { q, .. } | ScheduleConfig::Experiment { q, .. } => {
                    *q = cell.q
                }
                _ => {}
            }
        }
        cfg
    }

    /// Display labels, made unique by suffixing `#i` on collisions.
    pub fn method_labels(&self) -> Vec<String> {
        let base: Vec<String> = self
            .methods
            .iter()
            .map(|m| m.label.clone().unwrap_or_else(|| m.kind.name().to_string()))
            .collect();
        base.iter()
            .enumerate()
            .map(|(i, l)| {
                if base.iter().filter(|b| *b == l).count() > 1 {
                    format!("{l}#{i}")
                } else {
                    l.clone()
                }
            })
            .collect()
    }
}

impl ProblemConfig {
    fn validate(&self) -> Result<()> {
        let m = self.dimension;
        if m == 0 {
            return Err(Error::config(
                "problem.dimension",
                "dimension must be positive",
            ));
        }
        match &self.operator {
            OperatorConfig::Minmax => {
                if !m.is_multiple_of(2) {
                    return Err(Error::config("problem.dimension", "dimension must be even"));
                }
                match self.p {
                    None => {
                        return Err(Error::config(
                            "problem.p",
                            "required for the minmax operator",
                        ))
                    }
                    Some(p) if !(p > 1.0) => {
                        return Err(Error::config(
                            "problem.p",
                            format!("must exceed 1, got {p}"),
                        ))
                    }
                    _ => {}
                }
            }
            OperatorConfig::Linear { matrix } => {
                if matrix.len() != m || matrix.iter().any(|r| r.len() != m) {
                    return Err(Error::config(
                        "problem.operator.matrix",
                        format!("must be {m}×{m}"),
                    ));
                }
            }
        }
        if self.sigma_entry.is_some() && self.sigma_total.is_some() {
            return Err(Error::config(
                "problem.sigma_total",
                "give sigma_entry or sigma_total, not both",
            ));
        }
        if let Some(s) = self.sigma_entry.or(self.sigma_total) {
            if !(s >= 0.0) {
                return Err(Error::config(
                    "problem.sigma_entry",
                    "noise level must be ≥ 0",
                ));
            }
        }
        if !(self.start_radius >= 0.0) {
            return Err(Error::config("problem.start_radius", "must be ≥ 0"));
        }
        if let Some(mu) = self.mu {
            if !(mu > 0.0) {
                return Err(Error::config("problem.mu", "must be positive"));
            }
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::config("problem.alpha", "must lie in (0, 1]"));
        }
        if let Some(s) = &self.solution {
            if s.len() != m {
                return Err(Error::config(
                    "problem.solution",
                    format!("expected {m} entries"),
                ));
            }
        }
        self.symmetry_constants()?;
        self.build()?;
        Ok(())
    }

    pub fn noise(&self) -> Result<NoiseSpec> {
        let n = match (self.sigma_entry, self.sigma_total) {
            (Some(s), _) => NoiseSpec::new(s),
            (None, Some(t)) => NoiseSpec::from_total(t, self.dimension),
            (None, None) => NoiseSpec::new(1.0),
        };
        n.map_err(|e| Error::config("problem.sigma_entry", e.to_string()))
    }

    /// `(α, L₀, L₁)` from the config; the `p = 2` min-max operator defaults
    /// to its exact Lipschitz constant `√2` with `L₁ = 0`.
    pub fn symmetry_constants(&self) -> Result<Option<SymmetryConstants>> {
        let (l0, l1) = match (self.l0, self.l1, &self.operator, self.p) {
            (Some(l0), l1, _, _) => (l0, l1.unwrap_or(0.0)),
            (None, Some(_), _, _) => {
                return Err(Error::config("problem.l0", "l1 given without l0"));
            }
            (None, None, OperatorConfig::Minmax, Some(2.0)) => (2f64.sqrt(), 0.0),
            _ => return Ok(None),
        };
        SymmetryConstants::new(self.alpha, l0, l1)
            .map(Some)
            .map_err(|e| Error::config("problem.l0", e.to_string()))
    }

    pub fn build(&self) -> Result<Problem> {
        let m = self.dimension;
        let noise = self.noise()?;
        let (op, default_mu, p, tag): (Box<dyn Operator>, f64, f64, String) = match &self.operator {
            OperatorConfig::Minmax => {
                let p = self.p.unwrap_or(f64::NAN);
                let op = MinMaxOperator::new(p, m)
                    .map_err(|e| Error::config("problem.p", e.to_string()))?;
                let mu = op.sharpness_constant();
                (Box::new(op), mu, p, format!("minmax_p{p}_m{m}"))
            }
            OperatorConfig::Linear { matrix } => {
                let op = LinearOperator::from_rows(matrix)
                    .map_err(|e| Error::config("problem.operator.matrix", e.to_string()))?;
                (
                    Box::new(op),
                    1.0,
                    self.p.unwrap_or(2.0),
                    format!("linear_m{m}"),
                )
            }
        };
        let set = match &self.set {
            SetConfig::WholeSpace => FeasibleSet::WholeSpace,
            SetConfig::Ball { radius, center } => {
                let c = Bound::Vector(center.clone().unwrap_or_else(|| vec![0.0; m]))
                    .expand(m, "problem.set.center")?;
                FeasibleSet::ball(c, *radius)
                    .map_err(|e| Error::config("problem.set.radius", e.to_string()))?
            }
            SetConfig::Box { lower, upper } => FeasibleSet::axis_box(
                lower.expand(m, "problem.set.lower")?,
                upper.expand(m, "problem.set.upper")?,
            )
            .map_err(|e| Error::config("problem.set", e.to_string()))?,
        };
        let solution = Point::new(self.solution.clone().unwrap_or_else(|| vec![0.0; m]));
        Problem::new(
            op,
            noise,
            set,
            SolutionSet::Singleton(solution),
            self.mu.unwrap_or(default_mu),
            p,
        )
        .map(|pb| pb.with_tag(tag))
        .map_err(|e| Error::config("problem", e.to_string()))
    }

    pub fn start_point(&self) -> Point {
        Point::diagonal(self.dimension, self.start_radius)
    }
}

impl MethodConfig {
    fn validate(&self, index: usize, problem: &ProblemConfig) -> Result<()> {
        let field = format!("methods.{index}.schedule");
        let check = |r: Result<crate::schedules::StepSchedule>| {
            r.map(|_| ())
                .map_err(|e| Error::config(&field, e.to_string()))
        };
        use crate::schedules::StepSchedule as S;
        match self.schedule {
            ScheduleConfig::Harmonic { a, offset } => {
                check(S::harmonic(a.unwrap_or(1.0), offset.unwrap_or(2.0)))?;
                if self.kind == MethodKind::Korpelevich
                    && offset.is_none()
                    && problem
                        .symmetry_constants()?
                        .and_then(|c| c.derived)
                        .is_none()
                {
                    return Err(Error::config(
                        &field,
                        "the default extragradient offset needs problem.l0 (and α < 1)",
                    ));
                }
            }
            ScheduleConfig::PowerLaw { b, q } => check(S::power_law(b, q))?,
            ScheduleConfig::Experiment { c0, q } => check(S::experiment(c0, q))?,
            ScheduleConfig::Constant { beta } => check(S::constant(beta))?,
        }
        if self.kind == MethodKind::Popov && !(problem.alpha < 1.0) {
            return Err(Error::config(
                "problem.alpha",
                "the Popov method needs α < 1",
            ));
        }
        Ok(())
    }
}
