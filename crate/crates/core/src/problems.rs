//! Operators, stochastic oracles, feasible sets and solution metrics.

use std::fmt;

use crate::error::{Error, Result};
use crate::point::{self, Point};
use crate::rng::CounterRng;

/// A deterministic map `F: ℝ^m → ℝ^m`.
pub trait Operator: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    /// Writes `F(u)` into `out`. Both slices have length [`Operator::dim`].
    fn apply(&self, u: &[f64], out: &mut [f64]);

    fn eval(&self, u: &[f64]) -> Point {
        let mut out = Point::zeros(self.dim());
        self.apply(u, &mut out);
        out
    }
}

/// `F(u) = (‖u₁‖^{p−2}u₁ + u₂, ‖u₂‖^{p−2}u₂ − u₁)`, the operator of the game
/// `min_{u₁} max_{u₂} ‖u₁‖^p/p + ⟨u₁, u₂⟩ − ‖u₂‖^p/p`.
#[derive(Clone, Debug)]
pub struct MinMaxOperator {
    p: f64,
    dim: usize,
}

impl MinMaxOperator {
    pub fn new(p: f64, dim: usize) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::Domain(format!(
                "min-max exponent p must exceed 1, got {p}"
            )));
        }
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(Error::Dimension(format!(
                "min-max operator needs an even, nonzero dimension, got {dim}"
            )));
        }
        Ok(MinMaxOperator { p, dim })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// The largest `μ` with `⟨F(u), u⟩ ≥ μ‖u‖^p` everywhere: the power-mean
    /// constant `min{1, 2^{1−p/2}}`.
    pub fn sharpness_constant(&self) -> f64 {
        (2f64.powf(1.0 - self.p / 2.0)).min(1.0)
    }

    #[inline]
    fn power_scale(&self, n: f64) -> f64 {
        // ‖v‖^{p−2} v → 0 as v → 0 for every p > 1
        if n == 0.0 {
            0.0
        } else if self.p == 2.0 {
            1.0
        } else if self.p == 4.0 {
            n * n
        } else {
            n.powf(self.p - 2.0)
        }
    }
}

impl Operator for MinMaxOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, u: &[f64], out: &mut [f64]) {
        let half = self.dim / 2;
        let (u1, u2) = u.split_at(half);
        let s1 = self.power_scale(point::norm(u1));
        let s2 = self.power_scale(point::norm(u2));
        let (o1, o2) = out.split_at_mut(half);
        for i in 0..half {
            o1[i] = s1 * u1[i] + u2[i];
            o2[i] = s2 * u2[i] - u1[i];
        }
    }
}

/// Evaluates the min-max operator with exponent `p` at `point`.
pub fn eval_minmax_operator(p: f64, point: &Point) -> Result<Point> {
    let op = MinMaxOperator::new(p, point.dim())?;
    Ok(op.eval(point))
}

/// `F(u) = A u` for a dense row-major square matrix.
#[derive(Clone, Debug)]
pub struct LinearOperator {
    dim: usize,
    matrix: Vec<f64>,
}

impl LinearOperator {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::Dimension(
                "linear operator needs at least one row".into(),
            ));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::Dimension(format!(
                "linear operator must be square: row of length {} in a {dim}-row matrix",
                r.len()
            )));
        }
        let matrix = rows.concat();
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain(
                "linear operator has non-finite entries".into(),
            ));
        }
        Ok(LinearOperator { dim, matrix })
    }

    /// `F(u) = s·u`.
    pub fn scaled_identity(dim: usize, s: f64) -> Self {
        let mut matrix = vec![0.0; dim * dim];
        for i in 0..dim {
            matrix[i * dim + i] = s;
        }
        LinearOperator { dim, matrix }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.matrix[i * self.dim..(i + 1) * self.dim]
    }
}

impl Operator for LinearOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, u: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = point::dot(self.row(i), u);
        }
    }
}

/// Additive Gaussian noise `Φ(u, ξ) = F(u) + ξ` with i.i.d. entries of
/// standard deviation `sigma_entry`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    pub sigma_entry: f64,
}

impl NoiseSpec {
    pub fn new(sigma_entry: f64) -> Result<Self> {
        if !(sigma_entry >= 0.0) || !sigma_entry.is_finite() {
            return Err(Error::Domain(format!(
                "noise standard deviation must be finite and ≥ 0, got {sigma_entry}"
            )));
        }
        Ok(NoiseSpec { sigma_entry })
    }

    pub fn none() -> Self {
        NoiseSpec { sigma_entry: 0.0 }
    }

    /// Per-entry deviation giving `E‖ξ‖² = sigma_total²` in dimension `dim`.
    pub fn from_total(sigma_total: f64, dim: usize) -> Result<Self> {
        Self::new(sigma_total / (dim as f64).sqrt())
    }

    /// `σ` with `E‖Φ − F‖² = σ²`, i.e. `√m · sigma_entry`.
    pub fn sigma_total(&self, dim: usize) -> f64 {
        (dim as f64).sqrt() * self.sigma_entry
    }
}

/// Closed convex sets with cheap Euclidean projections.
#[derive(Clone, Debug, PartialEq)]
pub enum FeasibleSet {
    WholeSpace,
    Ball { center: Point, radius: f64 },
    Box { lower: Point, upper: Point },
}

impl FeasibleSet {
    pub fn ball(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidSet(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        if !center.is_finite() {
            return Err(Error::InvalidSet("ball center must be finite".into()));
        }
        Ok(FeasibleSet::Ball { center, radius })
    }

    pub fn axis_box(lower: Point, upper: Point) -> Result<Self> {
        if lower.dim() != upper.dim() {
            return Err(Error::InvalidSet(format!(
                "box bounds have dimensions {} and {}",
                lower.dim(),
                upper.dim()
            )));
        }
        if let Some(i) = (0..lower.dim()).find(|&i| !(lower[i] <= upper[i])) {
            return Err(Error::InvalidSet(format!(
                "box lower bound exceeds upper bound in coordinate {i} ({} > {})",
                lower[i], upper[i]
            )));
        }
        Ok(FeasibleSet::Box { lower, upper })
    }

    /// Dimension the set is tied to, if any.
    pub fn dim(&self) -> Option<usize> {
        match self {
            FeasibleSet::WholeSpace => None,
            FeasibleSet::Ball { center, .. } => Some(center.dim()),
            FeasibleSet::Box { lower, .. } => Some(lower.dim()),
        }
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        match self.dim() {
            Some(d) if d != n => Err(Error::Dimension(format!(
                "point of dimension {n} projected onto a set of dimension {d}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn project(&self, v: &[f64]) -> Result<Point> {
        self.check_dim(v.len())?;
        let mut out = Point::new(v.to_vec());
        self.project_in_place(&mut out);
        Ok(out)
    }

    /// Projects `v` onto the set, overwriting it. The caller guarantees
    /// matching dimensions.
    pub fn project_in_place(&self, v: &mut [f64]) {
        match self {
            FeasibleSet::WholeSpace => {}
            FeasibleSet::Ball { center, radius } => {
                let d = point::dist(v, center);
                // points within a few ulps of the sphere count as inside, so
                // projecting twice returns the first projection bit for bit
                if d > radius * (1.0 + 4.0 * f64::EPSILON) {
                    let s = radius / d;
                    for (x, c) in v.iter_mut().zip(center.iter()) {
                        *x = c + s * (*x - c);
                    }
                }
            }
            FeasibleSet::Box { lower, upper } => {
                for ((x, lo), hi) in v.iter_mut().zip(lower.iter()).zip(upper.iter()) {
                    *x = x.clamp(*lo, *hi);
                }
            }
        }
    }

    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        match self {
            FeasibleSet::WholeSpace => true,
            FeasibleSet::Ball { center, radius } => point::dist(v, center) <= radius + tol,
            FeasibleSet::Box { lower, upper } => v
                .iter()
                .zip(lower.iter().zip(upper.iter()))
                .all(|(x, (lo, hi))| *x >= lo - tol && *x <= hi + tol),
        }
    }
}

/// Descriptor of the solution set `U*`.
#[derive(Clone, Debug, PartialEq)]
pub enum SolutionSet {
    Singleton(Point),
}

impl SolutionSet {
    pub fn dim(&self) -> usize {
        match self {
            SolutionSet::Singleton(p) => p.dim(),
        }
    }

    /// Nearest point of `U*` to `u`.
    pub fn nearest(&self, _u: &[f64]) -> &[f64] {
        match self {
            SolutionSet::Singleton(p) => p,
        }
    }

    pub fn dist_sq(&self, u: &[f64]) -> f64 {
        point::dist_sq(u, self.nearest(u))
    }

    pub fn dist(&self, u: &[f64]) -> f64 {
        self.dist_sq(u).sqrt()
    }
}

/// An SVI instance `(U, F)` with oracle, solution set and sharpness `(μ, p)`.
#[derive(Debug)]
pub struct Problem {
    operator: Box<dyn Operator>,
    noise: NoiseSpec,
    set: FeasibleSet,
    solution: SolutionSet,
    mu: f64,
    p: f64,
    tag: String,
}

impl Problem {
    pub fn new(
        operator: Box<dyn Operator>,
        noise: NoiseSpec,
        set: FeasibleSet,
        solution: SolutionSet,
        mu: f64,
        p: f64,
    ) -> Result<Self> {
        let dim = operator.dim();
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::Domain(format!(
                "sharpness μ must be positive, got {mu}"
            )));
        }
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::Domain(format!(
                "sharpness exponent p must be positive, got {p}"
            )));
        }
        set.check_dim(dim)?;
        if solution.dim() != dim {
            return Err(Error::Dimension(format!(
                "solution set has dimension {}, operator {dim}",
                solution.dim()
            )));
        }
        Ok(Problem {
            operator,
            noise,
            set,
            solution,
            mu,
            p,
            tag: String::new(),
        })
    }

    /// The unconstrained min-max benchmark with `U* = {0}` and the
    /// power-mean sharpness constant.
    pub fn minmax(p: f64, dim: usize, noise: NoiseSpec) -> Result<Self> {
        let op = MinMaxOperator::new(p, dim)?;
        let mu = op.sharpness_constant();
        Problem::new(
            Box::new(op),
            noise,
            FeasibleSet::WholeSpace,
            SolutionSet::Singleton(Point::zeros(dim)),
            mu,
            p,
        )
        .map(|pb| pb.with_tag(format!("minmax_p{p}_m{dim}")))
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = tag.into();
        self
    }

    pub fn with_set(mut self, set: FeasibleSet) -> Result<Self> {
        set.check_dim(self.dim())?;
        self.set = set;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.operator.dim()
    }

    pub fn operator(&self) -> &dyn Operator {
        self.operator.as_ref()
    }

    pub fn noise(&self) -> NoiseSpec {
        self.noise
    }

    pub fn set(&self) -> &FeasibleSet {
        &self.set
    }

    pub fn solution(&self) -> &SolutionSet {
        &self.solution
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn sigma_total(&self) -> f64 {
        self.noise.sigma_total(self.dim())
    }

    fn check_point(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "point has dimension {}, problem {}",
                u.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn eval_into(&self, u: &[f64], out: &mut [f64]) {
        self.operator.apply(u, out);
    }

    /// Writes one oracle draw `Φ(u, ξ) = F(u) + ξ` into `out`.
    #[inline]
    pub fn sample_into(&self, u: &[f64], rng: &mut CounterRng, out: &mut [f64]) {
        self.operator.apply(u, out);
        let s = self.noise.sigma_entry;
        if s > 0.0 {
            for o in out.iter_mut() {
                *o += s * rng.standard_normal();
            }
        }
    }

    pub fn sample_oracle(&self, u: &Point, rng: &mut CounterRng) -> Result<Point> {
        self.check_point(u)?;
        let mut out = Point::zeros(self.dim());
        self.sample_into(u, rng, &mut out);
        Ok(out)
    }

    pub fn distance_to_solution(&self, u: &[f64]) -> f64 {
        self.solution.dist(u)
    }

    /// `⟨F(u), u − P_{U*}(u)⟩ − μ·dist^p(u, U*)`; nonnegative exactly where
    /// the sharpness inequality holds.
    pub fn quasi_sharp_gap(&self, u: &[f64]) -> f64 {
        let mut f = vec![0.0; self.dim()];
        self.operator.apply(u, &mut f);
        let star = self.solution.nearest(u);
        let inner: f64 = f
            .iter()
            .zip(u.iter().zip(star))
            .map(|(fi, (ui, si))| fi * (ui - si))
            .sum();
        inner - self.mu * self.solution.dist(u).powf(self.p)
    }
}
