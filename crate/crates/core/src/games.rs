//! Rawlsian games between a Dæmon choosing sentiment and an Angel choosing weights.
//!
//! The Dæmon picks `S` from its action space; the Angel picks `w ∈ 𝒲`. Zero-sum
//! payoffs give the Dæmon `Payoff₁` and the Angel its negation. Mixed Dæmon
//! strategies are represented by their expected sentiment vector.

use alloc::format;
use alloc::vec::Vec;

use crate::aggregators::{power_mean_raw, Power, Sense, SentimentVector, WeightVector};
use crate::allocation::{feasible_utility_set_bounds, solve_allocation, AllocationInstance};
use crate::error::{Error, Result};
use crate::math;
use crate::matrix_game::solve_matrix_game;
use crate::robust::{power_mean_extreme, RobustAggregator};
use crate::solvers::{solve_maximin, FeasibleSet, LinearMap, Objective, ObjectiveSense, ObjectiveSpec, SolveConfig};
use crate::weightsets::{BestResponse, Direction, WeightSet};

/// Membership tolerance for Angel actions.
pub const ACTION_TOL: f64 = 1e-7;
/// Iteration cap of the double-oracle loop.
const DOUBLE_ORACLE_ROUNDS: usize = 1_000;

#[derive(Debug, Clone, PartialEq)]
pub enum DaemonSpace {
    /// Listed sentiment vectors; with `convex_hull`, every mixture is also playable.
    Finite { points: Vec<Vec<f64>>, convex_hull: bool },
    /// `{S : S ⪰ floor·1, Σ S ≤ total}`.
    Capacity { g: usize, total: f64, floor: f64 },
    /// Utility vectors attainable by an allocation instance.
    Allocation(AllocationInstance),
}

impl DaemonSpace {
    pub fn dim(&self) -> usize {
        match self {
            DaemonSpace::Finite { points, .. } => points.first().map_or(0, |p| p.len()),
            DaemonSpace::Capacity { g, .. } => *g,
            DaemonSpace::Allocation(inst) => inst.groups(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payoff {
    /// `(w·S, -w·S)`.
    Egocentric,
    /// `(M_p(S; w), -M_p(S; w))`.
    Aggregator { p: Power },
    /// `(w·T(S), -w·T(S))` with `T(u) = sgn(p) u^p`, or `ln u` at `p = 0`.
    UtilityTransform { p: f64, s_min: f64 },
    /// `(w·S, M_p(S; w*))`: a linear Dæmon and an Angel scoring with a fixed power mean.
    AltruisticAngel { p: f64, w_star: WeightVector, s_min: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    pub daemon: DaemonSpace,
    pub angel: WeightSet,
    pub payoff: Payoff,
    pub sense: Sense,
}

impl GameSpec {
    pub fn new(daemon: DaemonSpace, angel: WeightSet, payoff: Payoff, sense: Sense) -> Result<Self> {
        let game = Self {
            daemon,
            angel,
            payoff,
            sense,
        };
        game.validate()?;
        Ok(game)
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.angel.dim();
        match &self.daemon {
            DaemonSpace::Finite { points, .. } => {
                if points.is_empty() {
                    return Err(Error::Empty);
                }
                for p in points {
                    if p.len() != g {
                        return Err(Error::DimensionMismatch {
                            expected: g,
                            found: p.len(),
                        });
                    }
                    if let Some(i) = p.iter().position(|x| !x.is_finite()) {
                        return Err(Error::NonFinite(i));
                    }
                }
            }
            DaemonSpace::Capacity { g: dg, total, floor } => {
                if *dg != g {
                    return Err(Error::DimensionMismatch {
                        expected: g,
                        found: *dg,
                    });
                }
                if !(floor.is_finite() && *floor >= 0.0 && total.is_finite() && *total >= *floor * g as f64) {
                    return Err(Error::OutOfRange(format!(
                        "capacity set with total {total} and floor {floor}"
                    )));
                }
            }
            DaemonSpace::Allocation(inst) => {
                if inst.groups() != g {
                    return Err(Error::DimensionMismatch {
                        expected: g,
                        found: inst.groups(),
                    });
                }
            }
        }
        let (p, s_min) = match &self.payoff {
            Payoff::UtilityTransform { p, s_min } => (*p, *s_min),
            Payoff::AltruisticAngel { p, s_min, w_star } => {
                if w_star.len() != g {
                    return Err(Error::DimensionMismatch {
                        expected: g,
                        found: w_star.len(),
                    });
                }
                (*p, *s_min)
            }
            _ => return Ok(()),
        };
        if !p.is_finite() {
            return Err(Error::OutOfRange(
                "transform and altruistic payoffs need a finite p".into(),
            ));
        }
        if p <= 0.0 {
            if !(s_min.is_finite() && s_min > 0.0) {
                return Err(Error::Domain(format!("p = {p} needs a positive minimum sentiment")));
            }
            let below = match &self.daemon {
                DaemonSpace::Finite { points, .. } => points.iter().flatten().any(|x| *x < s_min),
                DaemonSpace::Capacity { floor, .. } => *floor < s_min,
                DaemonSpace::Allocation(_) => true,
            };
            if below {
                return Err(Error::Domain(format!(
                    "Dæmon actions must be at least {s_min} when p = {p}"
                )));
            }
        }
        Ok(())
    }

    fn sign(&self) -> f64 {
        match self.sense {
            Sense::Utility => 1.0,
            Sense::Disutility => -1.0,
        }
    }

    fn angel_direction(&self) -> Direction {
        RobustAggregator::adversary_direction(self.sense)
    }
}

/// `T(u) = sgn(p) u^p`, or `ln u` at `p = 0`.
pub fn utility_transform(u: f64, p: f64) -> f64 {
    if p == 0.0 {
        math::ln(u)
    } else {
        p.signum() * math::powf(u, p)
    }
}

/// `ℓ∞` distance from `s` to the convex hull of `points`, as a matrix game.
fn hull_distance(points: &[Vec<f64>], s: &[f64]) -> Result<f64> {
    // Rows: signed coordinate directions (maximizer); columns: points (minimizer).
    let mut payoff = Vec::with_capacity(2 * s.len());
    for k in 0..s.len() {
        for sign in [1.0, -1.0] {
            payoff.push(points.iter().map(|p| sign * (p[k] - s[k])).collect());
        }
    }
    Ok(solve_matrix_game(&payoff)?.value.max(0.0))
}

fn check_daemon_action(game: &GameSpec, s: &[f64]) -> Result<()> {
    if s.len() != game.angel.dim() {
        return Err(Error::DimensionMismatch {
            expected: game.angel.dim(),
            found: s.len(),
        });
    }
    let feasible = match &game.daemon {
        DaemonSpace::Finite {
            points,
            convex_hull: false,
        } => points.iter().any(|p| math::norm_linf(&math::sub(p, s)) <= ACTION_TOL),
        DaemonSpace::Finite {
            points,
            convex_hull: true,
        } => hull_distance(points, s)? <= ACTION_TOL,
        DaemonSpace::Capacity { total, floor, .. } => {
            s.iter().all(|x| *x >= floor - ACTION_TOL) && s.iter().sum::<f64>() <= total + ACTION_TOL
        }
        DaemonSpace::Allocation(inst) => match feasible_utility_set_bounds(inst) {
            Ok(set) => set.contains(s, ACTION_TOL).unwrap_or(true),
            Err(_) => true,
        },
    };
    if feasible {
        Ok(())
    } else {
        Err(Error::Infeasible(format!(
            "Dæmon action {s:?} is not in its action space"
        )))
    }
}

/// Both players' payoffs for one action pair.
pub fn payoff(game: &GameSpec, s: &SentimentVector, w: &WeightVector) -> Result<(f64, f64)> {
    check_daemon_action(game, s.values())?;
    if !game.angel.membership(w, ACTION_TOL)? {
        return Err(Error::Infeasible("Angel action is not in its weight set".into()));
    }
    raw_payoff(&game.payoff, s.values(), w.as_slice())
}

fn raw_payoff(payoff: &Payoff, s: &[f64], w: &[f64]) -> Result<(f64, f64)> {
    match payoff {
        Payoff::Egocentric => {
            let v = math::dot(w, s);
            Ok((v, -v))
        }
        Payoff::Aggregator { p } => {
            if let Some(index) = s.iter().position(|x| *x < 0.0) {
                return Err(Error::NegativeSentiment { index, value: s[index] });
            }
            let v = power_mean_raw(s, w, *p);
            Ok((v, -v))
        }
        Payoff::UtilityTransform { p, .. } => {
            let t = transformed(s, *p)?;
            let v = math::dot(w, &t);
            Ok((v, -v))
        }
        Payoff::AltruisticAngel { p, w_star, .. } => {
            if let Some(index) = s.iter().position(|x| *x < 0.0) {
                return Err(Error::NegativeSentiment { index, value: s[index] });
            }
            Ok((math::dot(w, s), power_mean_raw(s, w_star.as_slice(), Power::Finite(*p))))
        }
    }
}

fn transformed(s: &[f64], p: f64) -> Result<Vec<f64>> {
    if let Some(i) = s.iter().position(|x| *x < 0.0 || (p <= 0.0 && *x == 0.0)) {
        return Err(Error::Domain(format!(
            "T(u) undefined at S[{i}] = {} for p = {p}",
            s[i]
        )));
    }
    Ok(s.iter().map(|u| utility_transform(*u, p)).collect())
}

/// The Angel's best response to a fixed Dæmon action in a zero-sum game.
fn angel_response(game: &GameSpec, s: &[f64]) -> Result<BestResponse> {
    let dir = game.angel_direction();
    match &game.payoff {
        Payoff::Egocentric => game.angel.respond(s, dir),
        Payoff::Aggregator { p } => power_mean_extreme(&game.angel, s, *p, dir),
        Payoff::UtilityTransform { p, .. } => game.angel.respond(&transformed(s, *p)?, dir),
        Payoff::AltruisticAngel { .. } => Err(Error::Unsupported(
            "the altruistic-angel game is not zero-sum; use verify_equilibrium".into(),
        )),
    }
}

/// Result of strategic play with the Dæmon moving first.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategicValue {
    /// The Dæmon's (expected) sentiment vector.
    pub sentiment: Vec<f64>,
    /// Index of the chosen point for pure play on a finite space.
    pub index: Option<usize>,
    /// Mixture over the listed points for convex-hull play.
    pub mixture: Option<Vec<f64>>,
    pub response: BestResponse,
    pub value: f64,
}

/// `argmax_S min_w Payoff₁` for utility (`argmin max` for disutility).
///
/// Finite spaces are enumerated with lowest-index tie-breaking. Egocentric
/// convex-hull play is solved exactly by double oracle; other continuous
/// spaces use the maximin solver and need `cfg`.
pub fn daemon_strategic_value(game: &GameSpec, cfg: Option<&SolveConfig>) -> Result<StrategicValue> {
    game.validate()?;
    let sign = game.sign();
    match &game.daemon {
        DaemonSpace::Finite {
            points,
            convex_hull: false,
        } => {
            let mut best: Option<(f64, usize, BestResponse)> = None;
            for (i, s) in points.iter().enumerate() {
                let br = angel_response(game, s)?;
                if best.as_ref().is_none_or(|b| sign * br.value > sign * b.0) {
                    best = Some((br.value, i, br));
                }
            }
            let (value, index, response) = best.expect("nonempty");
            Ok(StrategicValue {
                sentiment: points[index].clone(),
                index: Some(index),
                mixture: None,
                response,
                value,
            })
        }
        DaemonSpace::Finite {
            points,
            convex_hull: true,
        } if game.payoff == Payoff::Egocentric => {
            let outcome = double_oracle(game, points)?;
            let response = game.angel.respond(&outcome.sentiment, game.angel_direction())?;
            Ok(StrategicValue {
                value: response.value,
                sentiment: outcome.sentiment,
                index: None,
                mixture: Some(outcome.mixture),
                response,
            })
        }
        _ => {
            let cfg =
                cfg.ok_or_else(|| Error::Unsupported("continuous Dæmon space needs a solver configuration".into()))?;
            continuous_value(game, cfg)
        }
    }
}

fn continuous_value(game: &GameSpec, cfg: &SolveConfig) -> Result<StrategicValue> {
    let p = match &game.payoff {
        Payoff::Egocentric => Power::Finite(1.0),
        Payoff::Aggregator { p } => *p,
        _ => {
            return Err(Error::Unsupported(
                "continuous Dæmon spaces support egocentric and aggregator payoffs".into(),
            ))
        }
    };
    let objective = Objective::Robust(RobustAggregator::power_mean(p, game.angel.clone())?);
    let sense = match game.sense {
        Sense::Utility => ObjectiveSense::MaximizeWelfare,
        Sense::Disutility => ObjectiveSense::MinimizeMalfare,
    };
    let g = game.angel.dim();
    let (sentiment, mixture) = match &game.daemon {
        DaemonSpace::Finite { points, .. } => {
            // θ is the mixture; S(θ) = Σ θ_i P_i.
            let matrix: Vec<Vec<f64>> = (0..g).map(|k| points.iter().map(|pt| pt[k]).collect()).collect();
            let spec = ObjectiveSpec::new(objective, LinearMap::new(matrix, alloc::vec![0.0; g])?, sense)?;
            let report = solve_maximin(
                &spec,
                &FeasibleSet::Simplex {
                    dim: points.len(),
                    total: 1.0,
                },
                cfg,
            )?;
            (report.sentiment, Some(report.theta))
        }
        DaemonSpace::Capacity { total, floor, .. } => {
            // θ is the allocation above the floor.
            let shifted = LinearMap::new(
                (0..g)
                    .map(|i| (0..g).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                    .collect(),
                alloc::vec![*floor; g],
            )?;
            let spec = ObjectiveSpec::new(objective, shifted, sense)?;
            let feasible = FeasibleSet::Capacity {
                rows: g,
                cols: 1,
                capacities: alloc::vec![(total - floor * g as f64).max(f64::MIN_POSITIVE)],
                constraints: Vec::new(),
            };
            (solve_maximin(&spec, &feasible, cfg)?.sentiment, None)
        }
        DaemonSpace::Allocation(inst) => {
            if game.sense != Sense::Utility {
                return Err(Error::InvalidSense("allocation Dæmon spaces carry utilities".into()));
            }
            (solve_allocation(inst, objective, cfg)?.sentiment, None)
        }
    };
    let response = angel_response(game, &sentiment)?;
    Ok(StrategicValue {
        value: response.value,
        sentiment,
        index: None,
        mixture,
        response,
    })
}

struct DoubleOracleOutcome {
    /// Lower bound on max-min (utility sense), attained by `sentiment`.
    lower: f64,
    /// Upper bound on min-max, attained by the mixed Angel weights.
    upper: f64,
    sentiment: Vec<f64>,
    mixture: Vec<f64>,
}

/// Egocentric play over the convex hull of `points` against `𝒲`, by double oracle.
fn double_oracle(game: &GameSpec, points: &[Vec<f64>]) -> Result<DoubleOracleOutcome> {
    let sign = game.sign();
    let g = game.angel.dim();
    let dir = game.angel_direction();
    let centroid: Vec<f64> = (0..g)
        .map(|k| points.iter().map(|p| p[k]).sum::<f64>() / points.len() as f64)
        .collect();
    let mut columns: Vec<WeightVector> = alloc::vec![game.angel.respond(&centroid, dir)?.w];
    let mut best = DoubleOracleOutcome {
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
        sentiment: centroid.clone(),
        mixture: alloc::vec![1.0 / points.len() as f64; points.len()],
    };
    for _ in 0..DOUBLE_ORACLE_ROUNDS {
        let payoff: Vec<Vec<f64>> = points
            .iter()
            .map(|p| columns.iter().map(|w| sign * w.dot(p)).collect())
            .collect();
        let sol = solve_matrix_game(&payoff)?;
        let s_bar: Vec<f64> = (0..g)
            .map(|k| points.iter().zip(&sol.row_strategy).map(|(p, x)| x * p[k]).sum())
            .collect();
        let response = game.angel.respond(&s_bar, dir)?;
        let lower = sign * response.value;
        let mut w_bar = alloc::vec![0.0; g];
        for (y, w) in sol.column_strategy.iter().zip(&columns) {
            for (a, b) in w_bar.iter_mut().zip(w.as_slice()) {
                *a += y * b;
            }
        }
        let upper = points
            .iter()
            .map(|p| sign * math::dot(&w_bar, p))
            .fold(f64::NEG_INFINITY, f64::max);
        if lower > best.lower {
            best.lower = lower;
            best.sentiment = s_bar;
            best.mixture = sol.row_strategy.clone();
        }
        best.upper = best.upper.min(upper);
        if best.upper - best.lower <= 1e-12 * (1.0 + best.lower.abs()) {
            break;
        }
        if columns
            .iter()
            .any(|c| math::norm_linf(&math::sub(c.as_slice(), response.w.as_slice())) <= 1e-15)
        {
            break;
        }
        columns.push(response.w);
    }
    best.lower *= sign;
    best.upper *= sign;
    Ok(best)
}

/// `max-min` and `min-max` values of an egocentric game and their gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interchange {
    pub max_min: f64,
    pub min_max: f64,
    pub gap: f64,
    pub within_tolerance: bool,
}

/// Compares Dæmon-first and Angel-first values.
///
/// The Angel-first value always lets the Dæmon answer with any listed point,
/// so it equals the convex-hull value; the Dæmon-first value uses mixtures
/// only when the hull flag is set.
pub fn check_interchange(game: &GameSpec, tol: f64) -> Result<Interchange> {
    game.validate()?;
    let DaemonSpace::Finite { points, convex_hull } = &game.daemon else {
        return Err(Error::Unsupported(
            "interchange checks need a finite Dæmon space".into(),
        ));
    };
    if game.payoff != Payoff::Egocentric {
        return Err(Error::Unsupported(
            "interchange checks need the egocentric payoff".into(),
        ));
    }
    let sign = game.sign();
    let outcome = double_oracle(game, points)?;
    let max_min = if *convex_hull {
        outcome.lower
    } else {
        let dir = game.angel_direction();
        let mut best = f64::NEG_INFINITY;
        for p in points {
            best = best.max(sign * game.angel.respond(p, dir)?.value);
        }
        sign * best
    };
    let gap = (sign * (outcome.upper - max_min)).max(0.0);
    Ok(Interchange {
        max_min,
        min_max: outcome.upper,
        gap,
        within_tolerance: gap <= tol,
    })
}

/// A closed-form Angel strategy `S ↦ w`.
#[derive(Debug, Clone, PartialEq)]
pub enum AngelStrategy {
    /// The strategy that makes a linear Dæmon pursue `M_p(·; w*)`.
    AltruisticPowerMean {
        p: f64,
        w_star: WeightVector,
        s_min: f64,
    },
    /// `w_i ∝ w*_i S_i^exponent`; a non-equilibrium control.
    PowerScore {
        exponent: f64,
        w_star: WeightVector,
    },
    Fixed(WeightVector),
}

impl AngelStrategy {
    pub fn apply(&self, s: &[f64]) -> Result<WeightVector> {
        match self {
            AngelStrategy::AltruisticPowerMean { p, w_star, s_min } => {
                altruistic_angel_strategy(*p, w_star, &SentimentVector::utility(s.to_vec())?, *s_min)
            }
            AngelStrategy::PowerScore { exponent, w_star } => {
                let scores: Vec<f64> = w_star
                    .as_slice()
                    .iter()
                    .zip(s)
                    .map(|(w, x)| w * math::powf(*x, *exponent))
                    .collect();
                normalize_scores(scores, w_star)
            }
            AngelStrategy::Fixed(w) => Ok(w.clone()),
        }
    }
}

fn normalize_scores(scores: Vec<f64>, fallback: &WeightVector) -> Result<WeightVector> {
    if scores.iter().any(|x| x.is_nan()) {
        return Err(Error::Domain("Angel scores are undefined".into()));
    }
    let infinite: Vec<bool> = scores.iter().map(|x| x.is_infinite()).collect();
    if infinite.iter().any(|b| *b) {
        // Limit as the diverging coordinates dominate: spread over them by w*.
        let mass: Vec<f64> = fallback
            .as_slice()
            .iter()
            .zip(&infinite)
            .map(|(w, inf)| if *inf { *w } else { 0.0 })
            .collect();
        let total: f64 = mass.iter().sum();
        if total > 0.0 {
            return WeightVector::new(mass.iter().map(|m| m / total).collect());
        }
        let count = infinite.iter().filter(|b| **b).count() as f64;
        return WeightVector::new(infinite.iter().map(|b| if *b { 1.0 / count } else { 0.0 }).collect());
    }
    let total: f64 = scores.iter().sum();
    if total <= 0.0 {
        return Ok(fallback.clone());
    }
    Ok(WeightVector::from_raw(scores.iter().map(|x| x / total).collect()))
}

/// The Angel strategy under which a linear Dæmon's best response maximizes `M_p(S; w*)`.
///
/// `p > 0`: `w_i ∝ w*_i S_i^{p-1}`. `p = 0`: `w_i ∝ w*_i ln(r_i)/r_i` with
/// `r_i = S_i/s_min`. `p < 0`: `w_i ∝ w*_i (1/r_i - r_i^{p-1})`. All-zero scores
/// fall back to `w*`; for `0 < p < 1`, zero coordinates take all the weight.
pub fn altruistic_angel_strategy(
    p: f64,
    w_star: &WeightVector,
    s: &SentimentVector,
    s_min: f64,
) -> Result<WeightVector> {
    if w_star.len() != s.len() {
        return Err(Error::DimensionMismatch {
            expected: w_star.len(),
            found: s.len(),
        });
    }
    if !p.is_finite() {
        return Err(Error::OutOfRange("altruistic strategy needs a finite p".into()));
    }
    s.require_nonnegative()?;
    let scores: Vec<f64> = if p > 0.0 {
        w_star
            .as_slice()
            .iter()
            .zip(s.values())
            .map(|(w, x)| w * math::powf(*x, p - 1.0))
            .collect()
    } else {
        if !(s_min > 0.0) {
            return Err(Error::Domain(format!("p = {p} needs a positive minimum sentiment")));
        }
        if let Some(i) = s.values().iter().position(|x| *x < s_min) {
            return Err(Error::Domain(format!(
                "S[{i}] = {} is below the minimum {s_min}",
                s.values()[i]
            )));
        }
        w_star
            .as_slice()
            .iter()
            .zip(s.values())
            .map(|(w, x)| {
                let inv = s_min / x;
                if p == 0.0 {
                    w * math::ln(x / s_min) * inv
                } else {
                    w * (inv - math::powf(inv, 1.0 - p))
                }
            })
            .collect()
    };
    // Zero sentiment with p < 1 gives an infinite score; 0 · ∞ is resolved in favor of the coordinate.
    let scores = scores
        .into_iter()
        .zip(s.values())
        .zip(w_star.as_slice())
        .map(|((sc, x), w)| {
            if *x == 0.0 && p < 1.0 && p > 0.0 && *w > 0.0 {
                f64::INFINITY
            } else if sc.is_nan() {
                0.0
            } else {
                sc
            }
        })
        .collect();
    normalize_scores(scores, w_star)
}

#[derive(Debug, Clone, PartialEq)]
pub enum DaemonChoice {
    Index(usize),
    Point(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyProfile {
    pub daemon: DaemonChoice,
    pub angel: AngelStrategy,
}

/// Outcome of a grid search for profitable deviations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumCheck {
    pub no_deviation: bool,
    /// Largest Dæmon payoff gain over the profile (nonnegative).
    pub max_improvement: f64,
    /// No searched action gives the Angel a better payoff than the profile's.
    pub angel_optimal: bool,
    pub angel_shortfall: f64,
}

/// Dæmon actions searched by equilibrium checks; `resolution` is a fraction of the capacity.
pub fn daemon_grid(space: &DaemonSpace, resolution: f64) -> Result<Vec<Vec<f64>>> {
    match space {
        DaemonSpace::Finite {
            points,
            convex_hull: false,
        } => Ok(points.clone()),
        DaemonSpace::Finite { convex_hull: true, .. } | DaemonSpace::Allocation(_) => Err(Error::Unsupported(
            "equilibrium grids need a finite or capacity Dæmon space".into(),
        )),
        DaemonSpace::Capacity { g, total, floor } => {
            if !(resolution > 0.0 && resolution <= 1.0) {
                return Err(Error::OutOfRange(format!("resolution = {resolution}")));
            }
            let n = libm::round(1.0 / resolution).max(1.0) as usize;
            let spare = total - floor * *g as f64;
            let mut points = Vec::new();
            // Compositions of n into g + 1 parts; the last part is unused capacity.
            let mut counts = alloc::vec![0usize; *g];
            loop {
                let used: usize = counts.iter().sum();
                if used <= n {
                    points.push(counts.iter().map(|c| floor + spare * *c as f64 / n as f64).collect());
                }
                let mut i = 0;
                loop {
                    if i == *g {
                        return Ok(points);
                    }
                    counts[i] += 1;
                    if counts.iter().sum::<usize>() <= n {
                        break;
                    }
                    counts[i] = 0;
                    i += 1;
                }
            }
        }
    }
}

/// The altruistic profile: the Dæmon plays a grid maximizer of `M_p(S; w*)` (lowest index on ties).
pub fn altruistic_profile(game: &GameSpec, resolution: f64) -> Result<StrategyProfile> {
    let Payoff::AltruisticAngel { p, w_star, s_min } = &game.payoff else {
        return Err(Error::Unsupported(
            "altruistic profiles need the altruistic-angel payoff".into(),
        ));
    };
    let sign = game.sign();
    let grid = daemon_grid(&game.daemon, resolution)?;
    let mut best: Option<(f64, usize)> = None;
    for (i, s) in grid.iter().enumerate() {
        let v = power_mean_raw(s, w_star.as_slice(), Power::Finite(*p));
        if best.is_none_or(|b| sign * v > sign * b.0) {
            best = Some((v, i));
        }
    }
    let (_, index) = best.ok_or(Error::EmptyGrid)?;
    let daemon = match &game.daemon {
        DaemonSpace::Finite { .. } => DaemonChoice::Index(index),
        _ => DaemonChoice::Point(grid[index].clone()),
    };
    Ok(StrategyProfile {
        daemon,
        angel: AngelStrategy::AltruisticPowerMean {
            p: *p,
            w_star: w_star.clone(),
            s_min: *s_min,
        },
    })
}

/// Searches the Dæmon grid for a profitable deviation from `profile` and
/// checks that no grid action improves the Angel's payoff.
pub fn verify_equilibrium(game: &GameSpec, profile: &StrategyProfile, resolution: f64) -> Result<EquilibriumCheck> {
    game.validate()?;
    let Payoff::AltruisticAngel { .. } = &game.payoff else {
        return Err(Error::Unsupported(
            "equilibrium checks need the altruistic-angel payoff".into(),
        ));
    };
    let sign = game.sign();
    let grid = daemon_grid(&game.daemon, resolution)?;
    let chosen = match &profile.daemon {
        DaemonChoice::Index(i) => match &game.daemon {
            DaemonSpace::Finite { points, .. } => points
                .get(*i)
                .cloned()
                .ok_or_else(|| Error::OutOfRange(format!("Dæmon index {i} of {}", points.len())))?,
            _ => return Err(Error::Unsupported("index choices need a finite Dæmon space".into())),
        },
        DaemonChoice::Point(s) => s.clone(),
    };
    check_daemon_action(game, &chosen)?;
    let outcome = |s: &[f64]| -> Result<(f64, f64)> {
        let w = profile.angel.apply(s)?;
        raw_payoff(&game.payoff, s, w.as_slice())
    };
    let (daemon_value, angel_value) = outcome(&chosen)?;
    let mut max_improvement: f64 = 0.0;
    let mut angel_shortfall: f64 = 0.0;
    for s in &grid {
        let (d, a) = outcome(s)?;
        max_improvement = max_improvement.max(sign * (d - daemon_value));
        angel_shortfall = angel_shortfall.max(sign * (a - angel_value));
    }
    let slack = |v: f64| 1e-9 * (1.0 + v.abs());
    Ok(EquilibriumCheck {
        no_deviation: max_improvement <= slack(daemon_value),
        max_improvement,
        angel_optimal: angel_shortfall <= slack(angel_value),
        angel_shortfall,
    })
}
