//! α-symmetry constants and sampled checks of the structural assumptions.
//!
//! An operator is α-symmetric with constants `(L₀, L₁)` when, for every pair
//! `y, y'`,
//!
//! ```text
//! ‖F(y) − F(y')‖ ≤ ‖y − y'‖ (K₀ + K₁‖F(y')‖^α + K₂‖y − y'‖^{α/(1−α)})     (α < 1)
//! ‖F(y) − F(y')‖ ≤ ‖y − y'‖ (L₀ + L₁‖F(y')‖) exp(L₁‖y − y'‖)              (α = 1)
//! ```
//!
//! with `K₀, K₁, K₂` computed by [`derived_constants`]. The residual
//! functions here return "left side minus right side", so a pair satisfies
//! the inequality when its residual is `≤ 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::{self, Point};
use crate::problems::{Operator, Problem};
use crate::rng::CounterRng;

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_BOX_HALF_WIDTH: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub k0: f64,
    pub k1: f64,
    pub k2: f64,
}

impl DerivedConstants {
    pub fn sum(&self) -> f64 {
        self.k0 + self.k1 + self.k2
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryConstants {
    pub alpha: f64,
    pub l0: f64,
    pub l1: f64,
    /// `(K₀, K₁, K₂)`; present only for `α < 1`.
    pub derived: Option<DerivedConstants>,
}

impl SymmetryConstants {
    /// Constants for `α = 1`, where the exponential form applies.
    pub fn unit_alpha(l0: f64, l1: f64) -> Result<Self> {
        check_nonnegative(l0, l1)?;
        Ok(SymmetryConstants {
            alpha: 1.0,
            l0,
            l1,
            derived: None,
        })
    }

    pub fn new(alpha: f64, l0: f64, l1: f64) -> Result<Self> {
        if alpha == 1.0 {
            Self::unit_alpha(l0, l1)
        } else {
            derived_constants(l0, l1, alpha)
        }
    }
}

fn check_nonnegative(l0: f64, l1: f64) -> Result<()> {
    if !(l0 >= 0.0) || !(l1 >= 0.0) || !l0.is_finite() || !l1.is_finite() {
        return Err(Error::Domain(format!(
            "smoothness constants must be finite and ≥ 0, got L0={l0}, L1={l1}"
        )));
    }
    Ok(())
}

/// `K₀ = L₀(2^{α²/(1−α)} + 1)`, `K₁ = L₁ 2^{α²/(1−α)} 3^α`,
/// `K₂ = L₁^{1/(1−α)} 2^{α²/(1−α)} 3^α (1−α)^{α/(1−α)}` for `α ∈ (0, 1)`.
pub fn derived_constants(l0: f64, l1: f64, alpha: f64) -> Result<SymmetryConstants> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!(
            "derived constants need α strictly inside (0, 1), got {alpha}; use the α = 1 form"
        )));
    }
    check_nonnegative(l0, l1)?;
    let two_pow = 2f64.powf(alpha * alpha / (1.0 - alpha));
    let three_pow = 3f64.powf(alpha);
    let k0 = l0 * (two_pow + 1.0);
    let k1 = l1 * two_pow * three_pow;
    let k2 = if l1 == 0.0 {
        0.0
    } else {
        l1.powf(1.0 / (1.0 - alpha))
            * two_pow
            * three_pow
            * (1.0 - alpha).powf(alpha / (1.0 - alpha))
    };
    Ok(SymmetryConstants {
        alpha,
        l0,
        l1,
        derived: Some(DerivedConstants { k0, k1, k2 }),
    })
}

/// `‖F(y) − F(y2)‖ − bound(y, y2)`; `≤ 0` means the inequality holds for the
/// ordered pair `(y, y2)`.
pub fn alpha_symmetry_residual(
    op: &dyn Operator,
    constants: &SymmetryConstants,
    y: &[f64],
    y2: &[f64],
) -> f64 {
    let fy = op.eval(y);
    let fy2 = op.eval(y2);
    residual_from_values(constants, y, y2, &fy, &fy2)
}

fn residual_from_values(
    c: &SymmetryConstants,
    y: &[f64],
    y2: &[f64],
    fy: &[f64],
    fy2: &[f64],
) -> f64 {
    let lhs = point::dist(fy, fy2);
    let d = point::dist(y, y2);
    let f2 = point::norm(fy2);
    let rhs = match c.derived {
        Some(k) => {
            let tail = if k.k2 == 0.0 {
                0.0
            } else {
                k.k2 * d.powf(c.alpha / (1.0 - c.alpha))
            };
            d * (k.k0 + k.k1 * f2.powf(c.alpha) + tail)
        }
        None => d * (c.l0 + c.l1 * f2) * (c.l1 * d).exp(),
    };
    lhs - rhs
}

/// Smallest `L₁` (for fixed `α`, `L₀`) making every listed pair satisfy the
/// inequality in both orders, inflated by `1 + margin`.
///
/// Returns a domain error when some pair cannot be satisfied by any `L₁`
/// below `1e12`.
pub fn fit_l1(
    op: &dyn Operator,
    alpha: f64,
    l0: f64,
    pairs: &[(Point, Point)],
    margin: f64,
) -> Result<f64> {
    const CEILING: f64 = 1e12;
    let residual_at = |l1: f64, fy: &[f64], fy2: &[f64], y: &[f64], y2: &[f64]| -> Result<f64> {
        let c = SymmetryConstants::new(alpha, l0, l1)?;
        Ok(residual_from_values(&c, y, y2, fy, fy2).max(residual_from_values(&c, y2, y, fy2, fy)))
    };
    let mut worst: f64 = 0.0;
    for (y, y2) in pairs {
        let fy = op.eval(y);
        let fy2 = op.eval(y2);
        if residual_at(worst, &fy, &fy2, y, y2)? <= 0.0 {
            continue;
        }
        let mut lo = worst;
        let mut hi = worst.max(1e-3) * 2.0;
        while residual_at(hi, &fy, &fy2, y, y2)? > 0.0 {
            lo = hi;
            hi *= 2.0;
            if hi > CEILING {
                return Err(Error::Domain(format!(
                    "no L1 below {CEILING:e} satisfies the pair ({:?}, {:?}) with α={alpha}, L0={l0}",
                    y.as_slice(),
                    y2.as_slice()
                )));
            }
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if residual_at(mid, &fy, &fy2, y, y2)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        worst = hi;
    }
    Ok(worst * (1.0 + margin))
}

/// All points of the regular lattice with `per_axis` nodes on
/// `[−half_width, half_width]^dim`.
pub fn lattice(dim: usize, half_width: f64, per_axis: usize) -> Vec<Point> {
    assert!(per_axis >= 2);
    let step = 2.0 * half_width / (per_axis - 1) as f64;
    let total = per_axis.pow(dim as u32);
    (0..total)
        .map(|mut idx| {
            let coords = (0..dim)
                .map(|_| {
                    let i = idx % per_axis;
                    idx /= per_axis;
                    -half_width + step * i as f64
                })
                .collect();
            Point::new(coords)
        })
        .collect()
}

/// Every unordered pair of distinct lattice points.
pub fn lattice_pairs(dim: usize, half_width: f64, per_axis: usize) -> Vec<(Point, Point)> {
    let pts = lattice(dim, half_width, per_axis);
    let mut pairs = Vec::with_capacity(pts.len() * (pts.len() - 1) / 2);
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            pairs.push((pts[i].clone(), pts[j].clone()));
        }
    }
    pairs
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub samples: usize,
    pub worst_residual: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
    pub tolerance: f64,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn push(&mut self, name: &str, samples: usize, worst_residual: f64) {
        self.checks.push(CheckResult {
            name: name.to_string(),
            samples,
            worst_residual,
            passed: worst_residual <= self.tolerance,
        });
    }
}

impl std::fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "tolerance {:e}", self.tolerance)?;
        for c in &self.checks {
            writeln!(
                f,
                "{:<24} {:>8} samples  worst residual {:>13.6e}  {}",
                c.name,
                c.samples,
                c.worst_residual,
                if c.passed { "PASS" } else { "FAIL" }
            )?;
        }
        Ok(())
    }
}

pub const CHECK_QUASI_SHARP: &str = "quasi_sharpness";
pub const CHECK_ALPHA_SYMMETRY: &str = "alpha_symmetry";
pub const CHECK_UNBIASED: &str = "oracle_unbiased";
pub const CHECK_SECOND_MOMENT: &str = "oracle_second_moment";

#[derive(Clone, Copy, Debug)]
pub struct VerifySettings {
    pub n_samples: usize,
    pub box_half_width: f64,
    pub tolerance: f64,
}

impl Default for VerifySettings {
    fn default() -> Self {
        VerifySettings {
            n_samples: 10_000,
            box_half_width: DEFAULT_BOX_HALF_WIDTH,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

fn random_feasible(problem: &Problem, half_width: f64, rng: &mut CounterRng) -> Point {
    let mut u = Point::zeros(problem.dim());
    rng.fill_uniform(&mut u, -half_width, half_width);
    problem.set().project_in_place(&mut u);
    u
}

/// Samples the sharpness, α-symmetry (when constants are given) and oracle
/// assumptions and reports the worst residual of each.
///
/// Oracle residuals are `‖mean(Φ − F)‖ − 3σ_e√(m/N)` and
/// `mean‖Φ − F‖² − 1.05·m·σ_e²`, both at one random feasible point.
pub fn verify_assumptions(
    problem: &Problem,
    constants: Option<&SymmetryConstants>,
    settings: VerifySettings,
    rng: &mut CounterRng,
) -> Result<VerificationReport> {
    let n = settings.n_samples;
    if n == 0 {
        return Err(Error::Domain(
            "verification needs at least one sample".into(),
        ));
    }
    if !(settings.box_half_width > 0.0) {
        return Err(Error::Domain(
            "sampling box half width must be positive".into(),
        ));
    }
    let w = settings.box_half_width;
    let m = problem.dim();
    let mut report = VerificationReport {
        checks: Vec::new(),
        tolerance: settings.tolerance,
    };

    let worst_gap = (0..n)
        .map(|_| -problem.quasi_sharp_gap(&random_feasible(problem, w, rng)))
        .fold(f64::NEG_INFINITY, f64::max);
    report.push(CHECK_QUASI_SHARP, n, worst_gap);

    if let Some(c) = constants {
        let op = problem.operator();
        let worst = (0..n)
            .map(|_| {
                let y = random_feasible(problem, w, rng);
                let y2 = random_feasible(problem, w, rng);
                alpha_symmetry_residual(op, c, &y, &y2).max(alpha_symmetry_residual(op, c, &y2, &y))
            })
            .fold(f64::NEG_INFINITY, f64::max);
        report.push(CHECK_ALPHA_SYMMETRY, n, worst);
    }

    let u = random_feasible(problem, w, rng);
    let f = problem.operator().eval(&u);
    let mut mean_err = vec![0.0; m];
    let mut second = 0.0;
    let mut phi = vec![0.0; m];
    for _ in 0..n {
        problem.sample_into(&u, rng, &mut phi);
        let mut sq = 0.0;
        for i in 0..m {
            let e = phi[i] - f[i];
            mean_err[i] += e;
            sq += e * e;
        }
        second += sq;
    }
    let nf = n as f64;
    for e in mean_err.iter_mut() {
        *e /= nf;
    }
    let sigma = problem.noise().sigma_entry;
    report.push(
        CHECK_UNBIASED,
        n,
        point::norm(&mean_err) - 3.0 * sigma * (m as f64 / nf).sqrt(),
    );
    report.push(
        CHECK_SECOND_MOMENT,
        n,
        second / nf - 1.05 * m as f64 * sigma * sigma,
    );
    Ok(report)
}
