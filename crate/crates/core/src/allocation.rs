//! Fair division of divisible goods among `g` agents under capacity limits.
//!
//! Allocations are row-major `g × k` matrices: `θ[i][j]` is the amount of
//! good `j` held by agent `i`, and column `j` sums to at most `c_j`.

use alloc::format;
use alloc::vec::Vec;

use crate::aggregators::{Aggregator, Power, SentimentVector};
use crate::error::{Error, Result};
use crate::math;
use crate::solvers::{
    solve_maximin, Curvature, FeasibleSet, LinearConstraint, Objective, ObjectiveSense, ObjectiveSpec, SentimentMap,
    SolveConfig, SolveReport,
};
use crate::weightsets::WeightSet;

/// Tolerance for capacity and constraint checks on allocations.
pub const ALLOCATION_TOL: f64 = 1e-9;
/// Largest `g·k` for which utility-polytope vertices are enumerated.
pub const VERTEX_ENUMERATION_MAX: usize = 8;

/// Per-unit saturation cap of a log-saturating utility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cap {
    Finite(f64),
    Unbounded,
}

impl Cap {
    fn clip(self, x: f64) -> f64 {
        match self {
            Cap::Finite(c) => x.min(c),
            Cap::Unbounded => x,
        }
    }

    /// Left-limit slope indicator: 1 up to and including the cap.
    fn active(self, x: f64) -> bool {
        match self {
            Cap::Finite(c) => x <= c,
            Cap::Unbounded => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum UtilityModel {
    /// One good; `S_i = p_i θ_i`.
    LinearSingle { rates: Vec<f64> },
    /// One good; `S_i = p_i (√(1 + 2θ_i) - 1)`.
    SqrtSingle { rates: Vec<f64> },
    /// `S_i = Σ_j P_ij θ_ij`.
    LinearMulti { rates: Vec<Vec<f64>> },
    /// `S_i = ln(1 + Σ_j P_ij min(C_ij, θ_ij))`.
    LogSaturating {
        profits: Vec<Vec<f64>>,
        caps: Vec<Vec<Cap>>,
    },
}

impl UtilityModel {
    fn shape(&self) -> (usize, usize) {
        match self {
            UtilityModel::LinearSingle { rates } | UtilityModel::SqrtSingle { rates } => (rates.len(), 1),
            UtilityModel::LinearMulti { rates } => (rates.len(), rates.first().map_or(0, |r| r.len())),
            UtilityModel::LogSaturating { profits, .. } => (profits.len(), profits.first().map_or(0, |r| r.len())),
        }
    }
}

/// A `g × k` nonnegative matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    g: usize,
    k: usize,
    entries: Vec<f64>,
}

impl Allocation {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let g = rows.len();
        let k = rows.first().map_or(0, |r| r.len());
        if g == 0 || k == 0 {
            return Err(Error::Empty);
        }
        if let Some(r) = rows.iter().find(|r| r.len() != k) {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: r.len(),
            });
        }
        Self::from_flat(g, k, rows.into_iter().flatten().collect())
    }

    pub fn from_flat(g: usize, k: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != g * k {
            return Err(Error::DimensionMismatch {
                expected: g * k,
                found: entries.len(),
            });
        }
        if let Some(i) = entries.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { g, k, entries })
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.k + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.k).map(|r| r.to_vec()).collect()
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.entries
    }

    pub fn column_sum(&self, j: usize) -> f64 {
        (0..self.g).map(|i| self.entry(i, j)).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationInstance {
    capacities: Vec<f64>,
    model: UtilityModel,
    constraints: Vec<LinearConstraint>,
}

impl AllocationInstance {
    /// Validates rates, capacities, and that the zero allocation satisfies `constraints`.
    pub fn new(capacities: Vec<f64>, model: UtilityModel, constraints: Vec<LinearConstraint>) -> Result<Self> {
        Self::with_feasible_point(capacities, model, constraints, None)
    }

    /// As [`AllocationInstance::new`], with a declared feasible point replacing the zero-allocation check.
    pub fn with_feasible_point(
        capacities: Vec<f64>,
        model: UtilityModel,
        constraints: Vec<LinearConstraint>,
        feasible_point: Option<&Allocation>,
    ) -> Result<Self> {
        let (g, k) = model.shape();
        if g == 0 || k == 0 {
            return Err(Error::Empty);
        }
        if capacities.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: capacities.len(),
            });
        }
        if let Some(j) = capacities.iter().position(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::OutOfRange(format!("capacity {j} must be positive and finite")));
        }
        let check_rates = |rows: &[Vec<f64>], what: &str| -> Result<()> {
            for (i, row) in rows.iter().enumerate() {
                if row.len() != k {
                    return Err(Error::DimensionMismatch {
                        expected: k,
                        found: row.len(),
                    });
                }
                if let Some(j) = row.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
                    return Err(Error::OutOfRange(format!("{what}[{i}][{j}] must be nonnegative")));
                }
            }
            Ok(())
        };
        match &model {
            UtilityModel::LinearSingle { rates } | UtilityModel::SqrtSingle { rates } => {
                if let Some(i) = rates.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
                    return Err(Error::OutOfRange(format!("rate {i} must be nonnegative")));
                }
            }
            UtilityModel::LinearMulti { rates } => check_rates(rates, "rates")?,
            UtilityModel::LogSaturating { profits, caps } => {
                check_rates(profits, "profits")?;
                if caps.len() != g {
                    return Err(Error::DimensionMismatch {
                        expected: g,
                        found: caps.len(),
                    });
                }
                for row in caps {
                    if row.len() != k {
                        return Err(Error::DimensionMismatch {
                            expected: k,
                            found: row.len(),
                        });
                    }
                    if row
                        .iter()
                        .any(|c| matches!(c, Cap::Finite(x) if !(x.is_finite() && *x >= 0.0)))
                    {
                        return Err(Error::OutOfRange("caps must be nonnegative".into()));
                    }
                }
            }
        }
        if !constraints.is_empty() && !matches!(model, UtilityModel::LinearMulti { .. }) {
            return Err(Error::Unsupported(
                "extra constraints require the multi-good linear model".into(),
            ));
        }
        if let Some(c) = constraints.iter().find(|c| c.coefficients.len() != g * k) {
            return Err(Error::DimensionMismatch {
                expected: g * k,
                found: c.coefficients.len(),
            });
        }
        let inst = Self {
            capacities,
            model,
            constraints,
        };
        match feasible_point {
            Some(point) => {
                if !inst.is_feasible(point, ALLOCATION_TOL) {
                    return Err(Error::Infeasible(
                        "declared feasible point violates the constraints".into(),
                    ));
                }
            }
            None => {
                let zero = alloc::vec![0.0; g * k];
                if inst.constraints.iter().any(|c| c.violation(&zero) > ALLOCATION_TOL) {
                    return Err(Error::Infeasible(
                        "the zero allocation violates the constraints and no feasible point was given".into(),
                    ));
                }
            }
        }
        Ok(inst)
    }

    pub fn groups(&self) -> usize {
        self.model.shape().0
    }

    pub fn goods(&self) -> usize {
        self.model.shape().1
    }

    pub fn capacities(&self) -> &[f64] {
        &self.capacities
    }

    pub fn model(&self) -> &UtilityModel {
        &self.model
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    pub fn feasible_set(&self) -> FeasibleSet {
        FeasibleSet::Capacity {
            rows: self.groups(),
            cols: self.goods(),
            capacities: self.capacities.clone(),
            constraints: self.constraints.clone(),
        }
    }

    pub fn is_feasible(&self, theta: &Allocation, tol: f64) -> bool {
        theta.g == self.groups() && theta.k == self.goods() && self.feasible_set().contains(theta.as_flat(), tol)
    }

    /// Utilities of a flattened allocation; tiny negative entries from projections count as zero.
    fn utilities_flat(&self, theta: &[f64]) -> Vec<f64> {
        let k = self.goods();
        let at = |i: usize, j: usize| theta[i * k + j].max(0.0);
        match &self.model {
            UtilityModel::LinearSingle { rates } => rates.iter().enumerate().map(|(i, p)| p * at(i, 0)).collect(),
            UtilityModel::SqrtSingle { rates } => rates
                .iter()
                .enumerate()
                .map(|(i, p)| p * (math::sqrt(1.0 + 2.0 * at(i, 0)) - 1.0))
                .collect(),
            UtilityModel::LinearMulti { rates } => rates
                .iter()
                .enumerate()
                .map(|(i, row)| row.iter().enumerate().map(|(j, p)| p * at(i, j)).sum())
                .collect(),
            UtilityModel::LogSaturating { profits, caps } => profits
                .iter()
                .zip(caps)
                .enumerate()
                .map(|(i, (row, cap_row))| {
                    let inner: f64 = row
                        .iter()
                        .zip(cap_row)
                        .enumerate()
                        .map(|(j, (p, c))| p * c.clip(at(i, j)))
                        .sum();
                    math::ln(1.0 + inner)
                })
                .collect(),
        }
    }
}

impl SentimentMap for AllocationInstance {
    fn param_dim(&self) -> usize {
        self.groups() * self.goods()
    }

    fn groups(&self) -> usize {
        AllocationInstance::groups(self)
    }

    fn sentiment(&self, theta: &[f64]) -> Result<Vec<f64>> {
        if theta.len() != self.param_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.param_dim(),
                found: theta.len(),
            });
        }
        Ok(self.utilities_flat(theta))
    }

    fn jacobian(&self, theta: &[f64]) -> Result<Vec<Vec<f64>>> {
        let (g, k) = (AllocationInstance::groups(self), self.goods());
        let at = |i: usize, j: usize| theta[i * k + j].max(0.0);
        let mut jac = alloc::vec![alloc::vec![0.0; g * k]; g];
        match &self.model {
            UtilityModel::LinearSingle { rates } => {
                for (i, p) in rates.iter().enumerate() {
                    jac[i][i] = *p;
                }
            }
            UtilityModel::SqrtSingle { rates } => {
                for (i, p) in rates.iter().enumerate() {
                    jac[i][i] = p / math::sqrt(1.0 + 2.0 * at(i, 0));
                }
            }
            UtilityModel::LinearMulti { rates } => {
                for (i, row) in rates.iter().enumerate() {
                    jac[i][i * k..(i + 1) * k].copy_from_slice(row);
                }
            }
            UtilityModel::LogSaturating { profits, caps } => {
                for i in 0..g {
                    let inner: f64 = (0..k).map(|j| profits[i][j] * caps[i][j].clip(at(i, j))).sum();
                    for j in 0..k {
                        if caps[i][j].active(at(i, j)) {
                            jac[i][i * k + j] = profits[i][j] / (1.0 + inner);
                        }
                    }
                }
            }
        }
        Ok(jac)
    }

    fn curvature(&self) -> Curvature {
        match self.model {
            UtilityModel::LinearSingle { .. } | UtilityModel::LinearMulti { .. } => Curvature::Affine,
            UtilityModel::SqrtSingle { .. } | UtilityModel::LogSaturating { .. } => Curvature::Concave,
        }
    }
}

/// Per-agent utilities of a feasible allocation.
pub fn utilities(inst: &AllocationInstance, theta: &Allocation) -> Result<SentimentVector> {
    if theta.g != inst.groups() || theta.k != inst.goods() {
        return Err(Error::DimensionMismatch {
            expected: inst.groups() * inst.goods(),
            found: theta.entries.len(),
        });
    }
    if !inst.is_feasible(theta, ALLOCATION_TOL) {
        return Err(Error::Infeasible(
            "allocation violates nonnegativity, capacity, or constraints".into(),
        ));
    }
    SentimentVector::utility(inst.utilities_flat(theta.as_flat()))
}

fn single_rates(inst: &AllocationInstance, sqrt: bool) -> Result<&[f64]> {
    match (&inst.model, sqrt) {
        (UtilityModel::LinearSingle { rates }, false) | (UtilityModel::SqrtSingle { rates }, true) => Ok(rates),
        _ => Err(Error::Unsupported(format!(
            "inversion requires the single-good {} model",
            if sqrt { "square-root" } else { "linear" }
        ))),
    }
}

fn invert_with(inst: &AllocationInstance, s: &SentimentVector, sqrt: bool) -> Result<Allocation> {
    let rates = single_rates(inst, sqrt)?;
    if s.len() != rates.len() {
        return Err(Error::DimensionMismatch {
            expected: rates.len(),
            found: s.len(),
        });
    }
    s.require_nonnegative()?;
    let mut theta = Vec::with_capacity(rates.len());
    for (i, (&si, &p)) in s.values().iter().zip(rates).enumerate() {
        if si == 0.0 {
            theta.push(0.0);
        } else if p == 0.0 {
            return Err(Error::Domain(format!("agent {i} has rate 0 but target utility {si}")));
        } else if sqrt {
            let ratio = si / p;
            theta.push(ratio + 0.5 * ratio * ratio);
        } else {
            theta.push(si / p);
        }
    }
    let total: f64 = theta.iter().sum();
    if total > inst.capacities[0] + ALLOCATION_TOL {
        return Err(Error::Infeasible(format!(
            "required {total} exceeds capacity {}",
            inst.capacities[0]
        )));
    }
    Allocation::from_flat(rates.len(), 1, theta)
}

/// `θ_i = S_i / p_i`.
pub fn invert_single_linear(inst: &AllocationInstance, s: &SentimentVector) -> Result<Allocation> {
    invert_with(inst, s, false)
}

/// `θ_i = S_i/p_i + S_i²/(2p_i²)`.
pub fn invert_single_sqrt(inst: &AllocationInstance, s: &SentimentVector) -> Result<Allocation> {
    invert_with(inst, s, true)
}

/// The set of attainable utility vectors.
#[derive(Debug, Clone, PartialEq)]
pub enum UtilitySet {
    /// `{S ⪰ 0 : Σ S_i / p_i ≤ c}`; a zero rate pins `S_i` to 0.
    Halfspace { rates: Vec<f64>, capacity: f64 },
    /// `{S ⪰ 0 : Σ ((S_i/p_i + 1)² - 1)/2 ≤ c}`.
    Ellipsoid { rates: Vec<f64>, capacity: f64 },
    /// Images of the allocation polytope's vertices, duplicates removed, sorted;
    /// their convex hull is the utility set.
    Polytope { points: Vec<Vec<f64>> },
}

impl UtilitySet {
    /// Membership within `tol`; `None` for polytopes, which carry no facet description.
    pub fn contains(&self, s: &[f64], tol: f64) -> Option<bool> {
        let cost = |rates: &[f64], capacity: f64, f: &dyn Fn(f64) -> f64| {
            if s.len() != rates.len() || s.iter().any(|x| *x < -tol) {
                return false;
            }
            let mut total = 0.0;
            for (&x, &p) in s.iter().zip(rates) {
                if p == 0.0 {
                    if x > tol {
                        return false;
                    }
                } else {
                    total += f(x.max(0.0) / p);
                }
            }
            total <= capacity + tol
        };
        match self {
            UtilitySet::Halfspace { rates, capacity } => Some(cost(rates, *capacity, &|r| r)),
            UtilitySet::Ellipsoid { rates, capacity } => Some(cost(rates, *capacity, &|r| r + 0.5 * r * r)),
            UtilitySet::Polytope { .. } => None,
        }
    }
}

pub fn feasible_utility_set_bounds(inst: &AllocationInstance) -> Result<UtilitySet> {
    match &inst.model {
        UtilityModel::LinearSingle { rates } => Ok(UtilitySet::Halfspace {
            rates: rates.clone(),
            capacity: inst.capacities[0],
        }),
        UtilityModel::SqrtSingle { rates } => Ok(UtilitySet::Ellipsoid {
            rates: rates.clone(),
            capacity: inst.capacities[0],
        }),
        UtilityModel::LinearMulti { .. } => {
            let d = inst.groups() * inst.goods();
            if d > VERTEX_ENUMERATION_MAX {
                return Err(Error::Unsupported(format!(
                    "vertex enumeration needs g·k ≤ {VERTEX_ENUMERATION_MAX}, got {d}"
                )));
            }
            let mut points: Vec<Vec<f64>> = Vec::new();
            for v in allocation_vertices(inst) {
                let s = inst.utilities_flat(&v);
                if !points.iter().any(|q| math::norm_linf(&math::sub(q, &s)) <= 1e-12) {
                    points.push(s);
                }
            }
            points.sort_by(|a, b| {
                a.iter()
                    .zip(b)
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(core::cmp::Ordering::Equal)
            });
            Ok(UtilitySet::Polytope { points })
        }
        UtilityModel::LogSaturating { .. } => Err(Error::Unsupported(
            "no utility-set description for the log-saturating model".into(),
        )),
    }
}

/// Vertices of `{θ ≥ 0, column sums ≤ c, extra constraints}` by active-set enumeration.
fn allocation_vertices(inst: &AllocationInstance) -> Vec<Vec<f64>> {
    let (g, k) = (inst.groups(), inst.goods());
    let d = g * k;
    let mut equalities: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut inequalities: Vec<(Vec<f64>, f64)> = Vec::new();
    for idx in 0..d {
        let mut a = alloc::vec![0.0; d];
        a[idx] = 1.0;
        inequalities.push((a, 0.0));
    }
    for j in 0..k {
        let mut a = alloc::vec![0.0; d];
        for i in 0..g {
            a[i * k + j] = 1.0;
        }
        inequalities.push((a, inst.capacities[j]));
    }
    for c in &inst.constraints {
        match c.kind {
            crate::solvers::ConstraintKind::Equal => equalities.push((c.coefficients.clone(), c.rhs)),
            _ => inequalities.push((c.coefficients.clone(), c.rhs)),
        }
    }
    let feasible = inst.feasible_set();
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    let need = d.saturating_sub(equalities.len());
    let mut chosen: Vec<usize> = (0..need).collect();
    if need > inequalities.len() {
        return vertices;
    }
    loop {
        let mut rows: Vec<Vec<f64>> = equalities.iter().map(|e| e.0.clone()).collect();
        let mut rhs: Vec<f64> = equalities.iter().map(|e| e.1).collect();
        for &c in &chosen {
            rows.push(inequalities[c].0.clone());
            rhs.push(inequalities[c].1);
        }
        if let Some(x) = solve_square(rows, rhs) {
            let x: Vec<f64> = x.into_iter().map(|v| if v.abs() < 1e-12 { 0.0 } else { v }).collect();
            if feasible.contains(&x, 1e-9) && !vertices.iter().any(|v| math::norm_linf(&math::sub(v, &x)) <= 1e-12) {
                vertices.push(x);
            }
        }
        // Next combination in lexicographic order.
        let n = inequalities.len();
        let mut i = need;
        loop {
            if i == 0 {
                return vertices;
            }
            i -= 1;
            if chosen[i] < n - need + i {
                chosen[i] += 1;
                for t in i + 1..need {
                    chosen[t] = chosen[t - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Gaussian elimination with partial pivoting; `None` when (numerically) singular or non-square.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    if a.len() != n || a.iter().any(|r| r.len() != n) {
        return None;
    }
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                let (upper, lower) = a.split_at_mut(row);
                for (x, y) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                    *x -= f * y;
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = alloc::vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Some(x)
}

/// Utility-space objectives with a closed-form single-good optimum.
#[derive(Debug, Clone, PartialEq)]
enum ClosedForm {
    Egalitarian,
    Utilitarian(Vec<f64>),
    Umswf { gamma: f64, weights: Vec<f64> },
}

fn closed_form_target(objective: &Objective) -> Option<ClosedForm> {
    match objective {
        Objective::Plain(Aggregator::PowerMean { p: Power::NegInf, .. }) => Some(ClosedForm::Egalitarian),
        Objective::Plain(Aggregator::PowerMean {
            p: Power::Finite(p),
            weights,
        }) if *p == 1.0 => Some(ClosedForm::Utilitarian(weights.as_slice().to_vec())),
        Objective::Plain(Aggregator::Umswf { gamma, base_weights }) => Some(ClosedForm::Umswf {
            gamma: *gamma,
            weights: base_weights.as_slice().to_vec(),
        }),
        Objective::Robust(r) => match (r.aggregator(), r.set()) {
            (Aggregator::PowerMean { p: Power::NegInf, .. }, _) => Some(ClosedForm::Egalitarian),
            (
                Aggregator::PowerMean {
                    p: Power::Finite(p), ..
                },
                set,
            ) if *p == 1.0 => match set {
                WeightSet::FullSimplex { .. } => Some(ClosedForm::Egalitarian),
                WeightSet::Singleton { w_star } => Some(ClosedForm::Utilitarian(w_star.as_slice().to_vec())),
                WeightSet::LowerBounded { gamma, w_star } => Some(ClosedForm::Umswf {
                    gamma: *gamma,
                    weights: w_star.as_slice().to_vec(),
                }),
                _ => None,
            },
            (Aggregator::Umswf { gamma, .. }, WeightSet::Singleton { w_star }) => Some(ClosedForm::Umswf {
                gamma: *gamma,
                weights: w_star.as_slice().to_vec(),
            }),
            _ => None,
        },
        _ => None,
    }
}

/// Allocation cost `θ(S)` of one agent reaching utility `s` at rate `p > 0`.
fn cost(s: f64, p: f64, sqrt: bool) -> f64 {
    let r = s / p;
    if sqrt {
        r + 0.5 * r * r
    } else {
        r
    }
}

/// Largest common utility level reachable by every agent.
fn egalitarian_level(rates: &[f64], c: f64, sqrt: bool) -> f64 {
    if rates.contains(&0.0) {
        return 0.0;
    }
    let b: f64 = rates.iter().map(|p| 1.0 / p).sum();
    if !sqrt {
        return c / b;
    }
    let a: f64 = rates.iter().map(|p| 0.5 / (p * p)).sum();
    // Root of a t² + b t - c, written to avoid cancellation.
    2.0 * c / (b + math::sqrt(b * b + 4.0 * a * c))
}

/// Maximizes `Σ a_i √(1 + 2θ_i)` over `θ ≥ floor`, `Σθ = c` by bisection on the multiplier.
fn sqrt_water_fill(a: &[f64], floor: &[f64], c: f64) -> Vec<f64> {
    let base: f64 = floor.iter().sum();
    let spare = c - base;
    let fill = |lambda: f64| -> Vec<f64> {
        a.iter()
            .zip(floor)
            .map(|(ai, fi)| {
                let level = 0.5 * ((ai / lambda) * (ai / lambda) - 1.0);
                level.max(*fi)
            })
            .collect()
    };
    if spare <= 0.0 || a.iter().all(|x| *x == 0.0) {
        return floor.to_vec();
    }
    let total = |lambda: f64| fill(lambda).iter().sum::<f64>();
    let (mut lo, mut hi) = (1e-300_f64, a.iter().cloned().fold(0.0, f64::max) * 2.0);
    while total(lo) < c {
        lo *= 1e-3;
        if lo == 0.0 {
            break;
        }
    }
    for _ in 0..2000 {
        let mid = math::sqrt(lo * hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if total(mid) > c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut theta = fill(hi);
    // Hand the rounding residue to the agent with the largest marginal value.
    let residue = c - theta.iter().sum::<f64>();
    let best = math::argmax(
        &a.iter()
            .zip(&theta)
            .map(|(ai, t)| ai / math::sqrt(1.0 + 2.0 * t))
            .collect::<Vec<_>>(),
    );
    theta[best] = (theta[best] + residue).max(floor[best]);
    theta
}

/// Optimal single-good allocation for a closed-form target.
fn closed_form_allocation(rates: &[f64], c: f64, sqrt: bool, target: &ClosedForm) -> Vec<f64> {
    let g = rates.len();
    let equal = |level: f64| -> Vec<f64> {
        rates
            .iter()
            .map(|p| if *p > 0.0 { cost(level, *p, sqrt) } else { 0.0 })
            .collect()
    };
    match target {
        ClosedForm::Egalitarian => {
            let level = egalitarian_level(rates, c, sqrt);
            if level == 0.0 {
                // Some agent cannot gain; the egalitarian value is 0 for any allocation.
                return utilitarian_allocation(rates, &alloc::vec![1.0 / g as f64; g], c, sqrt);
            }
            equal(level)
        }
        ClosedForm::Utilitarian(w) => utilitarian_allocation(rates, w, c, sqrt),
        ClosedForm::Umswf { gamma, weights } => {
            let value = |theta: &[f64]| {
                let s: Vec<f64> = theta
                    .iter()
                    .zip(rates)
                    .map(|(t, p)| {
                        if sqrt {
                            p * (math::sqrt(1.0 + 2.0 * t) - 1.0)
                        } else {
                            p * t
                        }
                    })
                    .collect();
                gamma * math::dot(weights, &s) + (1.0 - gamma) * math::min_of(&s)
            };
            let top = egalitarian_level(rates, c, sqrt);
            if !sqrt {
                // The objective is linear along the segment between these two allocations.
                let eq = equal(top);
                let best = utilitarian_allocation(rates, weights, c, false);
                return if value(&best) > value(&eq) { best } else { eq };
            }
            let a: Vec<f64> = weights.iter().zip(rates).map(|(w, p)| w * p).collect();
            let at_level = |m: f64| sqrt_water_fill(&a, &equal(m), c);
            // The value as a function of the guaranteed level is concave.
            let (mut lo, mut hi) = (0.0, top);
            let phi = 0.5 * (math::sqrt(5.0) - 1.0);
            for _ in 0..200 {
                let m1 = hi - phi * (hi - lo);
                let m2 = lo + phi * (hi - lo);
                if value(&at_level(m1)) < value(&at_level(m2)) {
                    lo = m1;
                } else {
                    hi = m2;
                }
            }
            let candidates = [at_level(0.5 * (lo + hi)), at_level(0.0), at_level(top)];
            let mut best = candidates[0].clone();
            for cand in &candidates[1..] {
                if value(cand) > value(&best) {
                    best = cand.clone();
                }
            }
            best
        }
    }
}

fn utilitarian_allocation(rates: &[f64], w: &[f64], c: f64, sqrt: bool) -> Vec<f64> {
    let a: Vec<f64> = w.iter().zip(rates).map(|(wi, p)| wi * p).collect();
    if sqrt {
        sqrt_water_fill(&a, &alloc::vec![0.0; rates.len()], c)
    } else {
        let mut theta = alloc::vec![0.0; rates.len()];
        theta[math::argmax(&a)] = c;
        theta
    }
}

/// Maximizes the (robust) welfare objective over the instance's allocations.
///
/// Runs the subgradient solver, then applies deterministic refinements:
/// log-saturating allocations are clipped to their caps, unused capacity goes
/// to the agent with the largest marginal gain, and single-good linear or
/// square-root instances with an egalitarian, utilitarian, or
/// utilitarian-maximin objective are replaced by the exact optimum.
pub fn solve_allocation(inst: &AllocationInstance, objective: Objective, cfg: &SolveConfig) -> Result<SolveReport> {
    let target = closed_form_target(&objective);
    let spec = ObjectiveSpec::new(objective, inst.clone(), ObjectiveSense::MaximizeWelfare)?;
    let feasible = inst.feasible_set();
    let mut report = solve_maximin(&spec, &feasible, cfg)?;
    let mut applied: Vec<&str> = Vec::new();

    let mut adopt = |report: &mut SolveReport, theta: Vec<f64>, exact: bool, name: &'static str| -> Result<bool> {
        if !feasible.contains(&theta, ALLOCATION_TOL) {
            return Ok(false);
        }
        let (value, w) = spec.value(&theta)?;
        let accept = if exact {
            value >= report.value - 1e-9 * (1.0 + report.value.abs())
        } else {
            value >= report.value
        };
        if accept {
            report.sentiment = spec.map.sentiment(&theta)?;
            report.theta = theta;
            report.value = value;
            report.adversary = w;
            applied.push(name);
        }
        Ok(accept)
    };

    match inst.model() {
        UtilityModel::LogSaturating { caps, .. } => {
            let k = inst.goods();
            let clipped: Vec<f64> = report
                .theta
                .iter()
                .enumerate()
                .map(|(idx, x)| caps[idx / k][idx % k].clip(*x))
                .collect();
            if clipped != report.theta {
                adopt(&mut report, clipped, false, "clip-to-caps")?;
            }
        }
        _ => {
            let filled = fill_capacity(&spec, &report.theta)?;
            if filled != report.theta {
                adopt(&mut report, filled, false, "fill-capacity")?;
            }
        }
    }

    if let (Some(target), UtilityModel::LinearSingle { rates } | UtilityModel::SqrtSingle { rates }) =
        (target, inst.model())
    {
        let sqrt = matches!(inst.model(), UtilityModel::SqrtSingle { .. });
        let theta = closed_form_allocation(rates, inst.capacities[0], sqrt, &target);
        if adopt(&mut report, theta, true, "closed-form")? {
            report.gap_estimate = 0.0;
            report.converged = true;
        }
    }
    if !applied.is_empty() {
        report.refinement = Some(applied.join("+"));
    }
    Ok(report)
}

/// Adds each good's unused capacity to the agent with the largest envelope-gradient entry.
fn fill_capacity(spec: &ObjectiveSpec<AllocationInstance>, theta: &[f64]) -> Result<Vec<f64>> {
    let inst = &spec.map;
    let (g, k) = (inst.groups(), inst.goods());
    let grad = match crate::solvers::envelope_subgradient(spec, theta) {
        Ok(grad) => grad,
        Err(Error::ZeroSentimentGradient(_)) => {
            inst.jacobian(theta)?.iter().fold(alloc::vec![0.0; g * k], |acc, row| {
                acc.iter().zip(row).map(|(a, r)| a + r).collect()
            })
        }
        Err(e) => return Err(e),
    };
    let mut out = theta.to_vec();
    for j in 0..k {
        let slack = inst.capacities[j] - (0..g).map(|i| out[i * k + j]).sum::<f64>();
        if slack <= 0.0 {
            continue;
        }
        let column: Vec<f64> = (0..g).map(|i| grad[i * k + j]).collect();
        let i = math::argmax(&column);
        if column[i] > 0.0 {
            let mut candidate = out.clone();
            candidate[i * k + j] += slack;
            if inst
                .constraints()
                .iter()
                .all(|c| c.violation(&candidate) <= ALLOCATION_TOL)
            {
                out = candidate;
            }
        }
    }
    Ok(out)
}
