//! Worst-case aggregators `M(S; 𝒲)` over a weight set.
//!
//! A power mean is a strictly monotone transform of the linear form `w·T(S)`
//! with `T(S) = S^p` (`p ≠ 0`) or `ln S` (`p = 0`), so its extremes over `𝒲`
//! come from the linear best-response oracle on `T(S)`; for `p < 0` the
//! transform is decreasing and the oracle direction flips.

use alloc::format;
use alloc::vec::Vec;

use crate::aggregators::{
    power_mean_gradient_raw, power_mean_raw, Aggregator, Power, Sense, SentimentFunctional, SentimentVector,
    WeightVector,
};
use crate::error::{Error, Result};
use crate::math;
use crate::weightsets::{BestResponse, Direction, WeightSet};

/// Stand-in for `T(0) = ±∞` when `p ≤ 0`; large enough to dominate every
/// finite transformed entry while keeping `w·T` finite.
const INFINITE_SCORE: f64 = 1e150;

/// An aggregator whose weight vector is chosen adversarially from a set.
///
/// Welfare (utility sentiment) is minimized over the set; malfare
/// (disutility sentiment) is maximized. The set replaces the aggregator's
/// own weights: `weights` for power means, `base_weights` for UMSWF.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustAggregator {
    aggregator: Aggregator,
    set: WeightSet,
}

impl RobustAggregator {
    /// Gini families are already order-adversarial and are not supported here.
    pub fn new(aggregator: Aggregator, set: WeightSet) -> Result<Self> {
        set.validate()?;
        if aggregator.dim() != set.dim() {
            return Err(Error::DimensionMismatch {
                expected: set.dim(),
                found: aggregator.dim(),
            });
        }
        match aggregator {
            Aggregator::PowerMean { .. } | Aggregator::Umswf { .. } => Ok(Self { aggregator, set }),
            _ => Err(Error::Unsupported(
                "robust aggregation is defined for power means and utilitarian-maximin".into(),
            )),
        }
    }

    /// Robust power mean `M_p(S; 𝒲)`.
    pub fn power_mean(p: Power, set: WeightSet) -> Result<Self> {
        let g = set.dim();
        Self::new(Aggregator::power_mean(p, WeightVector::uniform(g)?), set)
    }

    pub fn aggregator(&self) -> &Aggregator {
        &self.aggregator
    }

    pub fn set(&self) -> &WeightSet {
        &self.set
    }

    pub fn dim(&self) -> usize {
        self.set.dim()
    }

    /// `min` or `max` of the aggregator over `w ∈ 𝒲`, with the extremal weights.
    pub fn extreme(&self, s: &SentimentVector, direction: Direction) -> Result<BestResponse> {
        if s.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: s.len(),
            });
        }
        match &self.aggregator {
            Aggregator::PowerMean { p, .. } => {
                s.require_nonnegative()?;
                power_mean_extreme(&self.set, s.values(), *p, direction)
            }
            Aggregator::Umswf { gamma, .. } => {
                let br = self.set.best_response(s, direction)?;
                let ext = match s.sense() {
                    Sense::Utility => s.min(),
                    Sense::Disutility => s.max(),
                };
                Ok(BestResponse {
                    value: gamma * br.value + (1.0 - gamma) * ext,
                    w: br.w,
                    exact: br.exact,
                })
            }
            _ => unreachable!("rejected by the constructor"),
        }
    }

    /// The adversary's direction: minimize welfare, maximize malfare.
    pub fn adversary_direction(sense: Sense) -> Direction {
        match sense {
            Sense::Utility => Direction::Minimize,
            Sense::Disutility => Direction::Maximize,
        }
    }

    /// Worst case for the sentiment's sense.
    pub fn value(&self, s: &SentimentVector) -> Result<BestResponse> {
        self.extreme(s, Self::adversary_direction(s.sense()))
    }

    /// Envelope gradient: the aggregator gradient at the adversary's weights.
    pub fn gradient(&self, s: &SentimentVector) -> Result<Vec<f64>> {
        let br = self.value(s)?;
        self.gradient_at(s, &br.w)
    }

    /// Gradient of the aggregator with its weights fixed to `w`.
    pub fn gradient_at(&self, s: &SentimentVector, w: &WeightVector) -> Result<Vec<f64>> {
        match &self.aggregator {
            Aggregator::PowerMean { p, .. } => power_mean_gradient_raw(s.values(), w.as_slice(), *p),
            Aggregator::Umswf { gamma, .. } => {
                let ext = match s.sense() {
                    Sense::Utility => math::argmin(s.values()),
                    Sense::Disutility => math::argmax(s.values()),
                };
                let mut grad: Vec<f64> = w.as_slice().iter().map(|x| gamma * x).collect();
                grad[ext] += 1.0 - gamma;
                Ok(grad)
            }
            _ => unreachable!("rejected by the constructor"),
        }
    }

    /// The aggregator with its weights fixed to `w`.
    pub fn evaluate_at(&self, s: &SentimentVector, w: &WeightVector) -> Result<f64> {
        match &self.aggregator {
            Aggregator::PowerMean { p, .. } => Aggregator::power_mean(*p, w.clone()).aggregate(s),
            Aggregator::Umswf { gamma, .. } => Aggregator::umswf(*gamma, w.clone())?.aggregate(s),
            _ => unreachable!("rejected by the constructor"),
        }
    }
}

impl SentimentFunctional for RobustAggregator {
    fn evaluate(&self, s: &SentimentVector) -> Result<f64> {
        Ok(self.value(s)?.value)
    }
}

/// `min/max_{w∈𝒲} M_p(S; w)` for nonnegative `S`.
pub fn power_mean_extreme(set: &WeightSet, s: &[f64], p: Power, direction: Direction) -> Result<BestResponse> {
    if s.len() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            found: s.len(),
        });
    }
    match p {
        Power::NegInf | Power::PosInf => egalitarian_extreme(set, s, p, direction),
        Power::Finite(q) => {
            let geometric = q.abs() < crate::aggregators::GEOMETRIC_THRESHOLD;
            let transformed: Vec<f64> = s
                .iter()
                .map(|&x| {
                    if geometric {
                        if x > 0.0 {
                            math::ln(x)
                        } else {
                            -INFINITE_SCORE
                        }
                    } else if q < 0.0 {
                        if x > 0.0 {
                            math::powf(x, q)
                        } else {
                            INFINITE_SCORE
                        }
                    } else {
                        math::powf(x, q)
                    }
                })
                .collect();
            let linear_direction = if q < 0.0 && !geometric {
                flip(direction)
            } else {
                direction
            };
            let br = set.respond(&transformed, linear_direction)?;
            let value = power_mean_raw(s, br.w.as_slice(), p);
            Ok(BestResponse {
                w: br.w,
                value,
                exact: br.exact,
            })
        }
    }
}

fn flip(d: Direction) -> Direction {
    match d {
        Direction::Minimize => Direction::Maximize,
        Direction::Maximize => Direction::Minimize,
    }
}

/// `p = ±∞`: the value is an entry of `S`, found by support tests.
fn egalitarian_extreme(set: &WeightSet, s: &[f64], p: Power, direction: Direction) -> Result<BestResponse> {
    let g = s.len();
    let min_branch = p == Power::NegInf;
    // Pushing the support toward the extreme of M's own min/max only needs one
    // reachable coordinate; pulling it away needs a member supported on a level set.
    let single = (direction == Direction::Minimize) == min_branch;
    if single {
        let order = if min_branch {
            math::ascending_order(s)
        } else {
            math::descending_order(s)
        };
        for i in order {
            let mut e = alloc::vec![0.0; g];
            e[i] = 1.0;
            let br = set.respond(&e, Direction::Maximize)?;
            if br.value > 0.0 {
                return Ok(BestResponse {
                    value: s[i],
                    w: br.w,
                    exact: br.exact,
                });
            }
        }
        return Err(Error::Infeasible(format!(
            "no coordinate of the {g}-dimensional set is reachable"
        )));
    }
    // Best threshold τ such that some member is supported on {S ≥ τ} (min branch)
    // or {S ≤ τ} (max branch).
    let mut levels: Vec<f64> = s.to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    if min_branch {
        levels.reverse();
    }
    for tau in levels {
        let outside: Vec<f64> = s
            .iter()
            .map(|&x| {
                if (min_branch && x < tau) || (!min_branch && x > tau) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        let br = set.respond(&outside, Direction::Minimize)?;
        if br.value <= 1e-12 {
            let cleaned: Vec<f64> =
                br.w.as_slice()
                    .iter()
                    .zip(&outside)
                    .map(|(w, o)| if *o > 0.0 { 0.0 } else { *w })
                    .collect();
            let total: f64 = cleaned.iter().sum();
            let w = WeightVector::new(cleaned.iter().map(|x| x / total).collect())?;
            return Ok(BestResponse {
                value: tau,
                w,
                exact: br.exact,
            });
        }
    }
    Err(Error::Infeasible("no member of the set has a feasible support".into()))
}
