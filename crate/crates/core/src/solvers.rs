//! Maximin (welfare) and minimax (malfare) optimization over a parameter set.
//!
//! The outer variable `θ` follows projected, normalized envelope subgradients
//! of `θ ↦ min_{w∈𝒲} M(S(θ); w)`; the inner minimizer comes from the exact
//! best-response oracles, or optionally from projected gradient steps on `w`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::aggregators::{power_mean_raw, Aggregator, Power, Sense, SentimentVector, WeightVector};
use crate::error::{Error, Result};
use crate::math;
use crate::matrix_game::solve_matrix_game;
use crate::projection::{project_capped_simplex, project_scaled_simplex, project_unit_simplex};
use crate::robust::RobustAggregator;

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Result<WeightVector> {
    if v.is_empty() {
        return Err(Error::Empty);
    }
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    WeightVector::new(project_unit_simplex(v))
}

/// Declared curvature of each coordinate of a sentiment map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Curvature {
    Affine,
    Concave,
    Convex,
}

/// A differentiable map `θ ↦ S(θ)` from parameters to per-group sentiment.
pub trait SentimentMap {
    fn param_dim(&self) -> usize;
    fn groups(&self) -> usize;
    fn sentiment(&self, theta: &[f64]) -> Result<Vec<f64>>;
    /// Row-major `groups × param_dim` Jacobian; a one-sided derivative at kinks.
    fn jacobian(&self, theta: &[f64]) -> Result<Vec<Vec<f64>>>;
    fn curvature(&self) -> Curvature;
}

/// `S(θ) = Aθ + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    matrix: Vec<Vec<f64>>,
    offset: Vec<f64>,
}

impl LinearMap {
    pub fn new(matrix: Vec<Vec<f64>>, offset: Vec<f64>) -> Result<Self> {
        if matrix.is_empty() || matrix[0].is_empty() {
            return Err(Error::Empty);
        }
        let d = matrix[0].len();
        if let Some(row) = matrix.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: row.len(),
            });
        }
        if offset.len() != matrix.len() {
            return Err(Error::DimensionMismatch {
                expected: matrix.len(),
                found: offset.len(),
            });
        }
        Ok(Self { matrix, offset })
    }

    pub fn identity(g: usize) -> Result<Self> {
        let matrix = (0..g)
            .map(|i| (0..g).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::new(matrix, alloc::vec![0.0; g])
    }
}

impl SentimentMap for LinearMap {
    fn param_dim(&self) -> usize {
        self.matrix[0].len()
    }

    fn groups(&self) -> usize {
        self.matrix.len()
    }

    fn sentiment(&self, theta: &[f64]) -> Result<Vec<f64>> {
        if theta.len() != self.param_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.param_dim(),
                found: theta.len(),
            });
        }
        Ok(self
            .matrix
            .iter()
            .zip(&self.offset)
            .map(|(row, b)| math::dot(row, theta) + b)
            .collect())
    }

    fn jacobian(&self, _theta: &[f64]) -> Result<Vec<Vec<f64>>> {
        Ok(self.matrix.clone())
    }

    fn curvature(&self) -> Curvature {
        Curvature::Affine
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    LessEq,
    Equal,
    GreaterEq,
}

/// `coefficients · θ (≤ | = | ≥) rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub coefficients: Vec<f64>,
    pub kind: ConstraintKind,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn violation(&self, theta: &[f64]) -> f64 {
        let lhs = math::dot(&self.coefficients, theta);
        match self.kind {
            ConstraintKind::LessEq => (lhs - self.rhs).max(0.0),
            ConstraintKind::GreaterEq => (self.rhs - lhs).max(0.0),
            ConstraintKind::Equal => (lhs - self.rhs).abs(),
        }
    }

    fn project(&self, v: &[f64]) -> Vec<f64> {
        let a = &self.coefficients;
        let norm2 = math::dot(a, a);
        if norm2 == 0.0 {
            return v.to_vec();
        }
        let excess = math::dot(a, v) - self.rhs;
        let shift = match self.kind {
            ConstraintKind::LessEq => excess.max(0.0),
            ConstraintKind::GreaterEq => excess.min(0.0),
            ConstraintKind::Equal => excess,
        };
        v.iter().zip(a).map(|(x, ai)| x - shift / norm2 * ai).collect()
    }
}

/// Feasibility tolerance for iterates.
pub const FEASIBILITY_TOL: f64 = 1e-7;
const DYKSTRA_CYCLES: usize = 20_000;

/// A parameter set with a Euclidean projection.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSet {
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    /// `{x ≥ 0, Σx = total}`.
    Simplex {
        dim: usize,
        total: f64,
    },
    /// Row-major `rows × cols` nonnegative matrices with column sums at most
    /// `capacities`, plus optional linear constraints on the flattened matrix.
    Capacity {
        rows: usize,
        cols: usize,
        capacities: Vec<f64>,
        constraints: Vec<LinearConstraint>,
    },
}

impl FeasibleSet {
    pub fn validate(&self) -> Result<()> {
        match self {
            FeasibleSet::Box { lower, upper } => {
                if lower.len() != upper.len() {
                    return Err(Error::DimensionMismatch {
                        expected: lower.len(),
                        found: upper.len(),
                    });
                }
                if lower.is_empty() {
                    return Err(Error::Empty);
                }
                if let Some(i) = lower
                    .iter()
                    .zip(upper)
                    .position(|(l, u)| !(l.is_finite() && u.is_finite() && l <= u))
                {
                    return Err(Error::OutOfRange(format!("box bounds at index {i}")));
                }
                Ok(())
            }
            FeasibleSet::Simplex { dim, total } => {
                if *dim == 0 {
                    return Err(Error::Empty);
                }
                if !(total.is_finite() && *total > 0.0) {
                    return Err(Error::OutOfRange(format!("simplex total {total}")));
                }
                Ok(())
            }
            FeasibleSet::Capacity {
                rows,
                cols,
                capacities,
                constraints,
            } => {
                if *rows == 0 || *cols == 0 {
                    return Err(Error::Empty);
                }
                if capacities.len() != *cols {
                    return Err(Error::DimensionMismatch {
                        expected: *cols,
                        found: capacities.len(),
                    });
                }
                if let Some(j) = capacities.iter().position(|c| !(c.is_finite() && *c > 0.0)) {
                    return Err(Error::OutOfRange(format!("capacity {j} must be positive")));
                }
                if let Some(c) = constraints.iter().find(|c| c.coefficients.len() != rows * cols) {
                    return Err(Error::DimensionMismatch {
                        expected: rows * cols,
                        found: c.coefficients.len(),
                    });
                }
                Ok(())
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            FeasibleSet::Box { lower, .. } => lower.len(),
            FeasibleSet::Simplex { dim, .. } => *dim,
            FeasibleSet::Capacity { rows, cols, .. } => rows * cols,
        }
    }

    pub fn contains(&self, theta: &[f64], tol: f64) -> bool {
        if theta.len() != self.dim() || theta.iter().any(|x| !x.is_finite()) {
            return false;
        }
        match self {
            FeasibleSet::Box { lower, upper } => theta
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(x, (l, u))| *x >= l - tol && *x <= u + tol),
            FeasibleSet::Simplex { total, .. } => {
                theta.iter().all(|x| *x >= -tol) && (theta.iter().sum::<f64>() - total).abs() <= tol
            }
            FeasibleSet::Capacity {
                rows,
                cols,
                capacities,
                constraints,
            } => {
                theta.iter().all(|x| *x >= -tol)
                    && (0..*cols).all(|j| (0..*rows).map(|i| theta[i * cols + j]).sum::<f64>() <= capacities[j] + tol)
                    && constraints.iter().all(|c| c.violation(theta) <= tol)
            }
        }
    }

    fn project_base(&self, v: &[f64]) -> Vec<f64> {
        match self {
            FeasibleSet::Box { lower, upper } => v
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(x, (l, u))| x.clamp(*l, *u))
                .collect(),
            FeasibleSet::Simplex { total, .. } => project_scaled_simplex(v, *total),
            FeasibleSet::Capacity {
                rows, cols, capacities, ..
            } => {
                let mut out = alloc::vec![0.0; v.len()];
                for j in 0..*cols {
                    let column: Vec<f64> = (0..*rows).map(|i| v[i * cols + j]).collect();
                    for (i, x) in project_capped_simplex(&column, capacities[j]).into_iter().enumerate() {
                        out[i * cols + j] = x;
                    }
                }
                out
            }
        }
    }

    /// Euclidean projection; Dykstra's method when extra constraints are present.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        if let Some(i) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let constraints = match self {
            FeasibleSet::Capacity { constraints, .. } if !constraints.is_empty() => constraints,
            _ => return Ok(self.project_base(v)),
        };
        let sets = constraints.len() + 1;
        let mut x = v.to_vec();
        let mut increments = alloc::vec![alloc::vec![0.0; v.len()]; sets];
        for _ in 0..DYKSTRA_CYCLES {
            let previous = x.clone();
            for (k, inc) in increments.iter_mut().enumerate() {
                let y: Vec<f64> = x.iter().zip(inc.iter()).map(|(a, b)| a + b).collect();
                let projected = if k == 0 {
                    self.project_base(&y)
                } else {
                    constraints[k - 1].project(&y)
                };
                *inc = y.iter().zip(&projected).map(|(a, b)| a - b).collect();
                x = projected;
            }
            if math::norm_linf(&math::sub(&x, &previous)) < 1e-14 {
                break;
            }
        }
        if self.contains(&x, FEASIBILITY_TOL) {
            Ok(x)
        } else {
            Err(Error::Infeasible(
                "cyclic projection did not reach the feasible set".into(),
            ))
        }
    }

    /// Euclidean diameter, or an upper bound on it.
    pub fn diameter(&self) -> f64 {
        match self {
            FeasibleSet::Box { lower, upper } => math::norm_l2(&math::sub(upper, lower)),
            FeasibleSet::Simplex { total, dim } => {
                if *dim > 1 {
                    total * math::sqrt(2.0)
                } else {
                    0.0
                }
            }
            FeasibleSet::Capacity { capacities, rows, .. } => {
                let factor = if *rows > 1 { math::sqrt(2.0) } else { 1.0 };
                factor * math::norm_l2(capacities)
            }
        }
    }

    /// A deterministic feasible starting point.
    pub fn initial_point(&self) -> Result<Vec<f64>> {
        let start = match self {
            FeasibleSet::Box { lower, upper } => lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)).collect(),
            FeasibleSet::Simplex { dim, total } => alloc::vec![total / *dim as f64; *dim],
            FeasibleSet::Capacity {
                rows, cols, capacities, ..
            } => {
                let mut v = alloc::vec![0.0; rows * cols];
                for i in 0..*rows {
                    for j in 0..*cols {
                        v[i * cols + j] = 0.5 * capacities[j] / *rows as f64;
                    }
                }
                v
            }
        };
        self.project(&start)
    }

    fn random_point(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let raw: Vec<f64> = match self {
            FeasibleSet::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| if u > l { rng.gen_range(*l..=*u) } else { *l })
                .collect(),
            FeasibleSet::Simplex { dim, total } => (0..*dim).map(|_| rng.gen_range(0.0..=*total)).collect(),
            FeasibleSet::Capacity {
                rows, cols, capacities, ..
            } => (0..rows * cols)
                .map(|idx| rng.gen_range(0.0..=capacities[idx % cols]) / *rows as f64)
                .collect(),
        };
        self.project(&raw)
    }
}

/// The aggregator being optimized; robust objectives carry their weight set.
#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    Plain(Aggregator),
    Robust(RobustAggregator),
}

impl Objective {
    pub fn dim(&self) -> usize {
        match self {
            Objective::Plain(a) => a.dim(),
            Objective::Robust(r) => r.dim(),
        }
    }

    /// Value at `s` and the weights attaining it.
    pub fn evaluate(&self, s: &SentimentVector) -> Result<(f64, WeightVector)> {
        match self {
            Objective::Plain(a) => Ok((a.aggregate(s)?, effective_weights(a, s)?)),
            Objective::Robust(r) => {
                let br = r.value(s)?;
                Ok((br.value, br.w))
            }
        }
    }

    /// Gradient in `S` with the weights fixed to `w`.
    pub fn gradient_at(&self, s: &SentimentVector, w: &WeightVector) -> Result<Vec<f64>> {
        match self {
            Objective::Plain(a) => a.gradient(s),
            Objective::Robust(r) => r.gradient_at(s, w),
        }
    }

    /// Value with the weights fixed to `w`; plain objectives ignore `w`.
    pub fn evaluate_at(&self, s: &SentimentVector, w: &WeightVector) -> Result<f64> {
        match self {
            Objective::Plain(a) => a.aggregate(s),
            Objective::Robust(r) => r.evaluate_at(s, w),
        }
    }

    /// Concave in `S` for welfare, convex for malfare.
    fn has_required_curvature(&self, sense: Sense) -> bool {
        let agg = match self {
            Objective::Plain(a) => a,
            Objective::Robust(r) => r.aggregator(),
        };
        match agg {
            Aggregator::PowerMean { p, .. } => p.is_valid_for(sense),
            Aggregator::Umswf { .. } => true,
            Aggregator::Gini { sense: own, .. } => *own == sense,
            Aggregator::GiniPowerMean { p, sense: own, .. } => *own == sense && p.is_valid_for(sense),
        }
    }
}

/// The weight vector a plain aggregator effectively applies at `s`.
fn effective_weights(a: &Aggregator, s: &SentimentVector) -> Result<WeightVector> {
    match a {
        Aggregator::PowerMean { weights, .. } => Ok(weights.clone()),
        Aggregator::Umswf { base_weights, .. } => Ok(base_weights.clone()),
        Aggregator::Gini { .. } => Ok(WeightVector::from_raw(a.gradient(s)?)),
        Aggregator::GiniPowerMean {
            sorted_weights, sense, ..
        } => {
            let order = math::ascending_order(s.values());
            let paired = match sense {
                Sense::Utility => sorted_weights.reversed(),
                Sense::Disutility => sorted_weights.clone(),
            };
            let mut w = alloc::vec![0.0; s.len()];
            for (k, &i) in order.iter().enumerate() {
                w[i] = paired.as_slice()[k];
            }
            Ok(WeightVector::from_raw(w))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveSense {
    MaximizeWelfare,
    MinimizeMalfare,
}

impl ObjectiveSense {
    pub fn sentiment_sense(self) -> Sense {
        match self {
            ObjectiveSense::MaximizeWelfare => Sense::Utility,
            ObjectiveSense::MinimizeMalfare => Sense::Disutility,
        }
    }

    fn sign(self) -> f64 {
        match self {
            ObjectiveSense::MaximizeWelfare => 1.0,
            ObjectiveSense::MinimizeMalfare => -1.0,
        }
    }
}

/// An aggregator composed with a sentiment map.
#[derive(Debug, Clone)]
pub struct ObjectiveSpec<M> {
    pub objective: Objective,
    pub map: M,
    pub sense: ObjectiveSense,
}

impl<M: SentimentMap> ObjectiveSpec<M> {
    pub fn new(objective: Objective, map: M, sense: ObjectiveSense) -> Result<Self> {
        if objective.dim() != map.groups() {
            return Err(Error::DimensionMismatch {
                expected: map.groups(),
                found: objective.dim(),
            });
        }
        Ok(Self { objective, map, sense })
    }

    /// Static check that the composition is concave (welfare) or convex (malfare).
    pub fn check_curvature(&self) -> Result<()> {
        let sense = self.sense.sentiment_sense();
        if !self.objective.has_required_curvature(sense) {
            return Err(Error::CurvatureContract(format!(
                "aggregator is not {} in the sentiment",
                if sense == Sense::Utility { "concave" } else { "convex" }
            )));
        }
        let map_ok = matches!(
            (self.map.curvature(), self.sense),
            (Curvature::Affine, _)
                | (Curvature::Concave, ObjectiveSense::MaximizeWelfare)
                | (Curvature::Convex, ObjectiveSense::MinimizeMalfare)
        );
        if !map_ok {
            return Err(Error::CurvatureContract(format!(
                "sentiment map curvature {:?} does not match {:?}",
                self.map.curvature(),
                self.sense
            )));
        }
        Ok(())
    }

    pub fn sentiment(&self, theta: &[f64]) -> Result<SentimentVector> {
        SentimentVector::new(self.map.sentiment(theta)?, self.sense.sentiment_sense())
    }

    /// Objective value at `θ` with the adversary's weights.
    pub fn value(&self, theta: &[f64]) -> Result<(f64, WeightVector)> {
        self.objective.evaluate(&self.sentiment(theta)?)
    }
}

/// `Jᵀ ∇_S M(S(θ); w*)` with `w*` the inner best response.
pub fn envelope_subgradient<M: SentimentMap>(obj: &ObjectiveSpec<M>, theta: &[f64]) -> Result<Vec<f64>> {
    let s = obj.sentiment(theta)?;
    let (_, w) = obj.objective.evaluate(&s)?;
    let grad_s = obj.objective.gradient_at(&s, &w)?;
    chain(&obj.map.jacobian(theta)?, &grad_s)
}

fn chain(jacobian: &[Vec<f64>], grad_s: &[f64]) -> Result<Vec<f64>> {
    let d = jacobian.first().map_or(0, |r| r.len());
    let mut out = alloc::vec![0.0; d];
    for (row, gs) in jacobian.iter().zip(grad_s) {
        if *gs != 0.0 {
            for (o, j) in out.iter_mut().zip(row) {
                *o += gs * j;
            }
        }
    }
    Ok(out)
}

/// Step length schedule for normalized subgradient steps, in parameter units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    Constant(f64),
    /// `η₀ / √(t+1)`; `None` uses the feasible-set diameter.
    InverseSqrt(Option<f64>),
    /// `η₀ ρᵗ`; `None` uses a quarter diameter and `ρ` reaching `1e-9·η₀` at the last iteration.
    Geometric {
        initial: Option<f64>,
        ratio: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerOracle {
    /// Exact or high-accuracy best response at every step.
    ClosedForm,
    /// Projected gradient steps on `w` between outer steps.
    GradientAscent { steps: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub max_iters: usize,
    pub step: StepSchedule,
    pub tolerance: f64,
    pub inner: InnerOracle,
    pub seed: u64,
    pub restarts: usize,
    pub record_trace: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            max_iters: 2_000,
            step: StepSchedule::Geometric {
                initial: None,
                ratio: None,
            },
            tolerance: 1e-6,
            inner: InnerOracle::ClosedForm,
            seed: 0,
            restarts: 1,
            record_trace: false,
        }
    }
}

impl SolveConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || self.restarts == 0 {
            return Err(Error::OutOfRange("max_iters and restarts must be positive".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::OutOfRange(format!(
                "tolerance {} must be positive",
                self.tolerance
            )));
        }
        let positive = |x: Option<f64>| x.is_none_or(|v| v.is_finite() && v > 0.0);
        let ok = match self.step {
            StepSchedule::Constant(eta) => eta.is_finite() && eta > 0.0,
            StepSchedule::InverseSqrt(eta) => positive(eta),
            StepSchedule::Geometric { initial, ratio } => positive(initial) && ratio.is_none_or(|r| r > 0.0 && r < 1.0),
        };
        if !ok {
            return Err(Error::OutOfRange("step sizes must be positive".into()));
        }
        Ok(())
    }

    fn step_at(&self, t: usize, diameter: f64) -> f64 {
        let scale = if diameter > 0.0 { diameter } else { 1.0 };
        match self.step {
            StepSchedule::Constant(eta) => eta,
            StepSchedule::InverseSqrt(eta) => eta.unwrap_or(scale) / math::sqrt(t as f64 + 1.0),
            StepSchedule::Geometric { initial, ratio } => {
                let eta0 = initial.unwrap_or(0.25 * scale);
                let rho = ratio.unwrap_or_else(|| math::exp(math::ln(1e-9) / self.max_iters as f64));
                eta0 * math::powf(rho, t as f64)
            }
        }
    }
}

/// One row of the optional iteration trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub value: f64,
    /// Most recent gap estimate; NaN before the first check.
    pub gap: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub theta: Vec<f64>,
    pub sentiment: Vec<f64>,
    pub adversary: WeightVector,
    pub value: f64,
    pub gap_estimate: f64,
    pub iterations: usize,
    /// True when the gap estimate reached the tolerance.
    pub converged: bool,
    /// Name of a closed-form refinement applied after the iterative phase.
    pub refinement: Option<String>,
    pub trace: Vec<TraceRow>,
}

/// Number of gap checks per run.
const GAP_CHECKS: usize = 10;
/// Iterations of the ascent that estimates the dual bound.
const DUAL_ITERS: usize = 400;
/// Distinct adversary responses kept between gap checks.
const MAX_RESPONSES: usize = 32;

/// Approximate saddle point of `max_θ min_w M(S(θ); w)` (or `min_θ max_w` for malfare).
pub fn solve_maximin<M: SentimentMap>(
    obj: &ObjectiveSpec<M>,
    feasible: &FeasibleSet,
    cfg: &SolveConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    feasible.validate()?;
    obj.check_curvature()?;
    if feasible.dim() != obj.map.param_dim() {
        return Err(Error::DimensionMismatch {
            expected: obj.map.param_dim(),
            found: feasible.dim(),
        });
    }
    if let (InnerOracle::GradientAscent { .. }, Objective::Robust(r)) = (cfg.inner, &obj.objective) {
        // Fail early when the set has no projection.
        r.set().project(&alloc::vec![1.0 / r.dim() as f64; r.dim()])?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<SolveReport> = None;
    let sign = obj.sense.sign();
    for restart in 0..cfg.restarts {
        let start = if restart == 0 {
            feasible.initial_point()?
        } else {
            feasible.random_point(&mut rng)?
        };
        let report = run(obj, feasible, cfg, start)?;
        let better = best.as_ref().is_none_or(|b| sign * report.value > sign * b.value);
        if better {
            best = Some(report);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn run<M: SentimentMap>(
    obj: &ObjectiveSpec<M>,
    feasible: &FeasibleSet,
    cfg: &SolveConfig,
    start: Vec<f64>,
) -> Result<SolveReport> {
    let sign = obj.sense.sign();
    let diameter = feasible.diameter();
    let mut theta = start;
    let mut inner_w: Option<WeightVector> = None;
    let (mut best_value, mut best_w) = obj.value(&theta)?;
    let mut best_theta = theta.clone();
    let suffix_start = cfg.max_iters / 2;
    let mut theta_sum = alloc::vec![0.0; theta.len()];
    let mut w_sum = alloc::vec![0.0; obj.objective.dim()];
    let mut suffix_count = 0usize;
    let mut alpha_sum = 0.0;
    let mut best_dual = sign * f64::INFINITY;
    let mut responses: Vec<WeightVector> = Vec::new();
    let mut gap = f64::NAN;
    let mut previous_check = f64::NAN;
    let mut converged = false;
    let mut trace = Vec::new();
    let check_every = (cfg.max_iters / GAP_CHECKS).max(1);
    let mut iterations = 0;

    for t in 0..cfg.max_iters {
        iterations = t + 1;
        let s = obj.sentiment(&theta)?;
        let (value, w) = match (cfg.inner, &obj.objective) {
            (InnerOracle::GradientAscent { steps }, Objective::Robust(r)) => {
                let current = match inner_w.take() {
                    Some(w) => w,
                    None => r.value(&s)?.w,
                };
                let w = inner_gradient_steps(r, &s, current, steps, t, cfg.max_iters)?;
                let v = r.evaluate_at(&s, &w)?;
                inner_w = Some(w.clone());
                (v, w)
            }
            _ => obj.objective.evaluate(&s)?,
        };
        if sign * value > sign * best_value {
            best_value = value;
            best_w = w.clone();
            best_theta = theta.clone();
        }
        if !responses
            .iter()
            .any(|r| math::norm_linf(&math::sub(r.as_slice(), w.as_slice())) <= 1e-12)
        {
            if responses.len() == MAX_RESPONSES {
                responses.remove(0);
            }
            responses.push(w.clone());
        }
        if t >= suffix_start {
            for (a, b) in theta_sum.iter_mut().zip(&theta) {
                *a += b;
            }
            suffix_count += 1;
        }
        let direction = ascent_direction(obj, &theta, &s, &w)?;
        let norm = math::norm_l2(&direction);
        let step = cfg.step_at(t, diameter);
        if norm > 0.0 {
            // Each response enters the dual average with the multiplier its gradient received.
            let alpha = step / norm;
            for (a, b) in w_sum.iter_mut().zip(w.as_slice()) {
                *a += alpha * b;
            }
            alpha_sum += alpha;
        }
        if cfg.record_trace {
            trace.push(TraceRow {
                iter: t,
                value,
                gap,
                step,
            });
        }
        if (t + 1) % check_every == 0 || norm == 0.0 {
            gap = match &obj.objective {
                Objective::Robust(_) => {
                    // Any member of the convex set 𝒲 yields a dual bound; keep the tightest seen.
                    let mut candidates = alloc::vec![best_w.clone()];
                    if alpha_sum > 0.0 {
                        candidates.push(WeightVector::from_raw(w_sum.iter().map(|x| x / alpha_sum).collect()));
                    }
                    if let Some(mixed) = mixed_response(obj, feasible, &best_theta, &responses, step)? {
                        candidates.push(mixed);
                    }
                    responses.clear();
                    for w_bar in &candidates {
                        let bound = dual_bound(obj, feasible, &best_theta, w_bar, diameter)?;
                        if sign * bound < sign * best_dual {
                            best_dual = bound;
                        }
                    }
                    w_sum.iter_mut().for_each(|x| *x = 0.0);
                    alpha_sum = 0.0;
                    (sign * (best_dual - best_value)).max(0.0)
                }
                Objective::Plain(_) => {
                    let g = if previous_check.is_nan() {
                        f64::INFINITY
                    } else {
                        (best_value - previous_check).abs()
                    };
                    previous_check = best_value;
                    g
                }
            };
            if gap <= cfg.tolerance {
                converged = true;
                break;
            }
        }
        if norm == 0.0 {
            break;
        }
        let moved: Vec<f64> = theta
            .iter()
            .zip(&direction)
            .map(|(x, d)| x + sign * step * d / norm)
            .collect();
        theta = feasible.project(&moved)?;
    }

    if suffix_count > 0 {
        let avg: Vec<f64> = theta_sum.iter().map(|x| x / suffix_count as f64).collect();
        let avg = feasible.project(&avg)?;
        let (v, w) = obj.value(&avg)?;
        if sign * v > sign * best_value {
            best_value = v;
            best_w = w;
            best_theta = avg;
        }
    }
    let sentiment = obj.map.sentiment(&best_theta)?;
    Ok(SolveReport {
        theta: best_theta,
        sentiment,
        adversary: best_w,
        value: best_value,
        gap_estimate: gap,
        iterations,
        converged,
        refinement: None,
        trace,
    })
}

/// `Jᵀ ∇_S M(S; w)`; at a zero coordinate with infinite slope, differentiates at a nudged point.
fn ascent_direction<M: SentimentMap>(
    obj: &ObjectiveSpec<M>,
    theta: &[f64],
    s: &SentimentVector,
    w: &WeightVector,
) -> Result<Vec<f64>> {
    let grad_s = match obj.objective.gradient_at(s, w) {
        Ok(g) => g,
        Err(Error::ZeroSentimentGradient(_)) => {
            let nudge = 1e-9 * (1.0 + s.max());
            let lifted = s.with_values(s.values().iter().map(|x| x.max(nudge)).collect())?;
            obj.objective.gradient_at(&lifted, w)?
        }
        Err(e) => return Err(e),
    };
    chain(&obj.map.jacobian(theta)?, &grad_s)
}

/// Best mixture of recent adversary responses against probes around `center`.
///
/// Rows are `center` and one probe per response, stepped by `delta` along
/// that response's ascent direction; the column player's optimal mixed
/// strategy weights the responses. `𝒲` is convex, so the mixture is a member.
fn mixed_response<M: SentimentMap>(
    obj: &ObjectiveSpec<M>,
    feasible: &FeasibleSet,
    center: &[f64],
    responses: &[WeightVector],
    delta: f64,
) -> Result<Option<WeightVector>> {
    if responses.len() < 2 || !(delta > 0.0) {
        return Ok(None);
    }
    let sign = obj.sense.sign();
    let s = obj.sentiment(center)?;
    let mut rows = alloc::vec![center.to_vec()];
    for w in responses {
        let d = ascent_direction(obj, center, &s, w)?;
        let norm = math::norm_l2(&d);
        if norm > 0.0 {
            let moved: Vec<f64> = center
                .iter()
                .zip(&d)
                .map(|(x, di)| x + sign * delta * di / norm)
                .collect();
            rows.push(feasible.project(&moved)?);
        }
    }
    let mut payoff = Vec::with_capacity(rows.len());
    for theta in &rows {
        let st = obj.sentiment(theta)?;
        let mut row = Vec::with_capacity(responses.len());
        for w in responses {
            row.push(sign * obj.objective.evaluate_at(&st, w)?);
        }
        payoff.push(row);
    }
    let solution = solve_matrix_game(&payoff)?;
    let mut mixed = alloc::vec![0.0; responses[0].len()];
    for (y, w) in solution.column_strategy.iter().zip(responses) {
        for (m, wi) in mixed.iter_mut().zip(w.as_slice()) {
            *m += y * wi;
        }
    }
    Ok(Some(WeightVector::from_raw(mixed)))
}

/// Estimate of `max_θ M(S(θ); w̄)` for welfare (`min_θ` for malfare) by projected ascent from `start`.
fn dual_bound<M: SentimentMap>(
    obj: &ObjectiveSpec<M>,
    feasible: &FeasibleSet,
    start: &[f64],
    w_bar: &WeightVector,
    diameter: f64,
) -> Result<f64> {
    let sign = obj.sense.sign();
    let mut theta = start.to_vec();
    let mut dual = obj.objective.evaluate_at(&obj.sentiment(&theta)?, w_bar)?;
    let scale = if diameter > 0.0 { diameter } else { 1.0 };
    let rho = math::exp(math::ln(1e-9) / DUAL_ITERS as f64);
    for t in 0..DUAL_ITERS {
        let s = obj.sentiment(&theta)?;
        let v = obj.objective.evaluate_at(&s, w_bar)?;
        if sign * v > sign * dual {
            dual = v;
        }
        let d = ascent_direction(obj, &theta, &s, w_bar)?;
        let norm = math::norm_l2(&d);
        if norm == 0.0 {
            break;
        }
        let step = 0.25 * scale * math::powf(rho, t as f64);
        let moved: Vec<f64> = theta
            .iter()
            .zip(&d)
            .map(|(x, di)| x + sign * step * di / norm)
            .collect();
        theta = feasible.project(&moved)?;
    }
    Ok(dual)
}

/// Projected gradient steps on `w` against the current sentiment.
fn inner_gradient_steps(
    r: &RobustAggregator,
    s: &SentimentVector,
    mut w: WeightVector,
    steps: usize,
    t: usize,
    horizon: usize,
) -> Result<WeightVector> {
    let adversary_sign = match s.sense() {
        Sense::Utility => -1.0,
        Sense::Disutility => 1.0,
    };
    let rho = math::exp(math::ln(1e-6) / horizon.max(1) as f64);
    let step = 0.5 * math::powf(rho, t as f64);
    for _ in 0..steps {
        let grad = weight_gradient(r.aggregator(), s, &w)?;
        let norm = math::norm_l2(&grad);
        if norm == 0.0 {
            break;
        }
        let moved: Vec<f64> = w
            .as_slice()
            .iter()
            .zip(&grad)
            .map(|(x, g)| x + adversary_sign * step * g / norm)
            .collect();
        w = r.set().project(&moved)?;
    }
    Ok(w)
}

/// `∇_w M(S; w)`.
fn weight_gradient(agg: &Aggregator, s: &SentimentVector, w: &WeightVector) -> Result<Vec<f64>> {
    match agg {
        Aggregator::PowerMean {
            p: Power::Finite(p), ..
        } => {
            let m = power_mean_raw(s.values(), w.as_slice(), Power::Finite(*p));
            if p.abs() < crate::aggregators::GEOMETRIC_THRESHOLD {
                Ok(s.values()
                    .iter()
                    .map(|x| m * math::ln(x.max(f64::MIN_POSITIVE)))
                    .collect())
            } else {
                let scale = math::powf(m, 1.0 - p) / p;
                Ok(s.values().iter().map(|x| scale * math::powf(*x, *p)).collect())
            }
        }
        Aggregator::Umswf { gamma, .. } => Ok(s.values().iter().map(|x| gamma * x).collect()),
        _ => Err(Error::Unsupported(
            "gradient ascent inner oracle needs a finite power".into(),
        )),
    }
}
