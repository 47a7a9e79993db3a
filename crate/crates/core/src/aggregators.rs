//! Welfare and malfare aggregator families and their (sub)gradients.
//!
//! Four families are supported:
//!
//! * weighted power means `M_p(S; w)`, including the geometric (`p = 0`) and
//!   egalitarian (`p = ±∞`) limits,
//! * generalized Gini functions `w↑ · S↓` (welfare) and `w↓ · S↓` (malfare),
//! * utilitarian-maximin `γ (w*·S) + (1-γ) min S`,
//! * Gini power means, which sort sentiment ascending, pair it with a monotone
//!   weight sequence and take a weighted power mean.
//!
//! Gini-type weight sequences are always stored in ascending order; the
//! evaluators reverse them where the pairing calls for descending weights.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Absolute tolerance on `|Σw - 1|` for simplex membership.
pub const SIMPLEX_SUM_TOL: f64 = 1e-9;
/// Entries may be as small as `-SIMPLEX_ENTRY_TOL` and are clamped to zero.
pub const SIMPLEX_ENTRY_TOL: f64 = 1e-12;
/// `|p|` below this threshold is evaluated with the geometric-mean branch.
pub const GEOMETRIC_THRESHOLD: f64 = 1e-8;

/// Whether a sentiment vector holds utilities (maximized) or disutilities (minimized).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Utility,
    Disutility,
}

/// Per-group utility or disutility values.
#[derive(Debug, Clone, PartialEq)]
pub struct SentimentVector {
    values: Vec<f64>,
    sense: Sense,
}

impl SentimentVector {
    pub fn new(values: Vec<f64>, sense: Sense) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { values, sense })
    }

    pub fn utility(values: Vec<f64>) -> Result<Self> {
        Self::new(values, Sense::Utility)
    }

    pub fn disutility(values: Vec<f64>) -> Result<Self> {
        Self::new(values, Sense::Disutility)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        math::min_of(&self.values)
    }

    pub fn max(&self) -> f64 {
        math::max_of(&self.values)
    }

    /// `max S - min S`.
    pub fn range(&self) -> f64 {
        self.max() - self.min()
    }

    /// Same sense, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(values, self.sense)
    }

    pub fn require_nonnegative(&self) -> Result<()> {
        match self.values.iter().position(|&v| v < 0.0) {
            Some(index) => Err(Error::NegativeSentiment {
                index,
                value: self.values[index],
            }),
            None => Ok(()),
        }
    }
}

/// A point on the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    /// Validates simplex membership; entries in `[-1e-12, 0)` are clamped to zero.
    pub fn new(mut weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Empty);
        }
        if let Some(i) = weights.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        if let Some(i) = weights.iter().position(|&v| v < -SIMPLEX_ENTRY_TOL) {
            return Err(Error::OffSimplex(format!("entry {i} is negative ({})", weights[i])));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_SUM_TOL {
            return Err(Error::OffSimplex(format!("entries sum to {sum}")));
        }
        for w in &mut weights {
            if *w < 0.0 {
                *w = 0.0;
            }
        }
        Ok(Self(weights))
    }

    pub fn uniform(g: usize) -> Result<Self> {
        if g == 0 {
            return Err(Error::Empty);
        }
        Ok(Self(alloc::vec![1.0 / g as f64; g]))
    }

    /// The `i`-th simplex vertex.
    pub fn vertex(g: usize, i: usize) -> Result<Self> {
        if i >= g {
            return Err(Error::OutOfRange(format!("vertex {i} of a {g}-simplex")));
        }
        let mut w = alloc::vec![0.0; g];
        w[i] = 1.0;
        Ok(Self(w))
    }

    /// For values produced by exact projections or convex combinations of members.
    pub(crate) fn from_raw(weights: Vec<f64>) -> Self {
        Self(weights.into_iter().map(|w| w.max(0.0)).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dot(&self, s: &[f64]) -> f64 {
        math::dot(&self.0, s)
    }

    pub fn is_ascending(&self) -> bool {
        self.0.windows(2).all(|p| p[0] <= p[1] + SIMPLEX_ENTRY_TOL)
    }

    /// Copy sorted ascending.
    pub fn sorted_ascending(&self) -> Self {
        let mut v = self.0.clone();
        v.sort_by(f64::total_cmp);
        Self(v)
    }

    pub fn reversed(&self) -> Self {
        let mut v = self.0.clone();
        v.reverse();
        Self(v)
    }
}

/// Extended-real power parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Power {
    NegInf,
    Finite(f64),
    PosInf,
}

impl Power {
    /// Maps `±∞` floats onto the infinite variants. NaN is rejected.
    pub fn from_f64(p: f64) -> Result<Self> {
        if p.is_nan() {
            Err(Error::OutOfRange("power parameter is NaN".into()))
        } else if p == f64::INFINITY {
            Ok(Power::PosInf)
        } else if p == f64::NEG_INFINITY {
            Ok(Power::NegInf)
        } else {
            Ok(Power::Finite(p))
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Power::NegInf => f64::NEG_INFINITY,
            Power::Finite(p) => p,
            Power::PosInf => f64::INFINITY,
        }
    }

    /// Valid welfare power (`p ≤ 1`).
    pub fn is_welfare(self) -> bool {
        self.to_f64() <= 1.0
    }

    /// Valid malfare power (`p ≥ 1`).
    pub fn is_malfare(self) -> bool {
        self.to_f64() >= 1.0
    }

    pub fn is_valid_for(self, sense: Sense) -> bool {
        match sense {
            Sense::Utility => self.is_welfare(),
            Sense::Disutility => self.is_malfare(),
        }
    }

    pub(crate) fn is_geometric(self) -> bool {
        matches!(self, Power::Finite(p) if p.abs() < GEOMETRIC_THRESHOLD)
    }
}

/// A welfare or malfare specification.
#[derive(Debug, Clone, PartialEq)]
pub enum Aggregator {
    PowerMean {
        p: Power,
        weights: WeightVector,
    },
    /// `sorted_weights` is stored ascending.
    Gini {
        sorted_weights: WeightVector,
        sense: Sense,
    },
    Umswf {
        gamma: f64,
        base_weights: WeightVector,
    },
    /// `sorted_weights` is stored ascending.
    GiniPowerMean {
        p: Power,
        sorted_weights: WeightVector,
        sense: Sense,
    },
}

/// Anything that maps a sentiment vector to a scalar objective.
pub trait SentimentFunctional {
    fn evaluate(&self, s: &SentimentVector) -> Result<f64>;
}

impl Aggregator {
    pub fn power_mean(p: Power, weights: WeightVector) -> Self {
        Aggregator::PowerMean { p, weights }
    }

    /// Sorts the given weight sequence ascending.
    pub fn gini(weights: WeightVector, sense: Sense) -> Self {
        Aggregator::Gini {
            sorted_weights: weights.sorted_ascending(),
            sense,
        }
    }

    pub fn umswf(gamma: f64, base_weights: WeightVector) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(Aggregator::Umswf { gamma, base_weights })
    }

    /// Sorts the given weight sequence ascending and checks `p` against `sense`.
    pub fn gini_power_mean(p: Power, weights: WeightVector, sense: Sense) -> Result<Self> {
        if !p.is_valid_for(sense) {
            return Err(Error::InvalidSense(format!(
                "Gini power mean with p = {} and {sense:?}",
                p.to_f64()
            )));
        }
        Ok(Aggregator::GiniPowerMean {
            p,
            sorted_weights: weights.sorted_ascending(),
            sense,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Aggregator::PowerMean { weights, .. } => weights.len(),
            Aggregator::Gini { sorted_weights, .. } => sorted_weights.len(),
            Aggregator::Umswf { base_weights, .. } => base_weights.len(),
            Aggregator::GiniPowerMean { sorted_weights, .. } => sorted_weights.len(),
        }
    }

    /// Checks the welfare/malfare validity conditions against a sentiment sense.
    pub fn validate_for(&self, sense: Sense) -> Result<()> {
        let (ok, what) = match self {
            Aggregator::PowerMean { p, .. } => (p.is_valid_for(sense), "power mean"),
            Aggregator::Gini { sense: own, .. } => (*own == sense, "Gini"),
            Aggregator::Umswf { .. } => (true, "utilitarian-maximin"),
            Aggregator::GiniPowerMean { p, sense: own, .. } => {
                (*own == sense && p.is_valid_for(sense), "Gini power mean")
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSense(format!("{what} used with {sense:?}")))
        }
    }

    pub fn aggregate(&self, s: &SentimentVector) -> Result<f64> {
        match self {
            Aggregator::PowerMean { p, weights } => power_mean(s, weights, *p),
            Aggregator::Gini { sorted_weights, sense } => gini(s, sorted_weights, *sense),
            Aggregator::Umswf { gamma, base_weights } => umswf(s, *gamma, base_weights),
            Aggregator::GiniPowerMean {
                p,
                sorted_weights,
                sense,
            } => gini_power_mean(s, sorted_weights, *p, *sense),
        }
    }

    /// Gradient of the aggregator at `s`; a stable-sort subgradient at kinks.
    pub fn gradient(&self, s: &SentimentVector) -> Result<Vec<f64>> {
        check_dim(self.dim(), s.len())?;
        match self {
            Aggregator::PowerMean { p, weights } => {
                s.require_nonnegative()?;
                power_mean_gradient_raw(s.values(), weights.as_slice(), *p)
            }
            Aggregator::Gini { sorted_weights, sense } => {
                check_ascending(sorted_weights)?;
                let w = gini_pairing(sorted_weights, *sense);
                let order = math::descending_order(s.values());
                let mut grad = alloc::vec![0.0; s.len()];
                for (k, &i) in order.iter().enumerate() {
                    grad[i] = w[k];
                }
                Ok(grad)
            }
            Aggregator::Umswf { gamma, base_weights } => {
                check_gamma(*gamma)?;
                let ext = match s.sense() {
                    Sense::Utility => math::argmin(s.values()),
                    Sense::Disutility => math::argmax(s.values()),
                };
                let mut grad: Vec<f64> = base_weights.as_slice().iter().map(|w| gamma * w).collect();
                grad[ext] += 1.0 - gamma;
                Ok(grad)
            }
            Aggregator::GiniPowerMean {
                p,
                sorted_weights,
                sense,
            } => {
                s.require_nonnegative()?;
                check_ascending(sorted_weights)?;
                let (order, sorted, paired) = gini_power_mean_pairing(s, sorted_weights, *sense);
                let g_sorted = power_mean_gradient_raw(&sorted, &paired, *p).map_err(|e| match e {
                    Error::ZeroSentimentGradient(k) => Error::ZeroSentimentGradient(order[k]),
                    other => other,
                })?;
                let mut grad = alloc::vec![0.0; s.len()];
                for (k, &i) in order.iter().enumerate() {
                    grad[i] = g_sorted[k];
                }
                Ok(grad)
            }
        }
    }
}

impl SentimentFunctional for Aggregator {
    fn evaluate(&self, s: &SentimentVector) -> Result<f64> {
        self.aggregate(s)
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if (0.0..=1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::OutOfRange(format!("gamma = {gamma} is outside [0, 1]")))
    }
}

fn check_ascending(w: &WeightVector) -> Result<()> {
    if w.is_ascending() {
        Ok(())
    } else {
        Err(Error::NonMonotoneWeights)
    }
}

/// Weighted power mean `M_p(S; w)`.
///
/// Zero-weight coordinates are ignored, so `p = ±∞` takes the extremum over the
/// support of `w`, and for `p ≤ 0` a zero coordinate with positive weight yields 0.
pub fn power_mean(s: &SentimentVector, w: &WeightVector, p: Power) -> Result<f64> {
    check_dim(w.len(), s.len())?;
    s.require_nonnegative()?;
    Ok(power_mean_raw(s.values(), w.as_slice(), p))
}

/// Unchecked power mean over nonnegative `s`.
pub(crate) fn power_mean_raw(s: &[f64], w: &[f64], p: Power) -> f64 {
    let support = || s.iter().zip(w).filter(|(_, &wi)| wi > 0.0).map(|(&si, &wi)| (si, wi));
    match p {
        Power::NegInf => support().map(|(si, _)| si).fold(f64::INFINITY, f64::min),
        Power::PosInf => support().map(|(si, _)| si).fold(f64::NEG_INFINITY, f64::max),
        _ if p.is_geometric() => {
            if support().any(|(si, _)| si == 0.0) {
                return 0.0;
            }
            math::exp(support().map(|(si, wi)| wi * math::ln(si)).sum())
        }
        Power::Finite(p) if p < 0.0 => {
            let m = support().map(|(si, _)| si).fold(f64::INFINITY, f64::min);
            if m == 0.0 {
                return 0.0;
            }
            let inner: f64 = support().map(|(si, wi)| wi * math::powf(si / m, p)).sum();
            m * math::powf(inner, 1.0 / p)
        }
        Power::Finite(p) => {
            let m = support().map(|(si, _)| si).fold(0.0, f64::max);
            if m == 0.0 {
                return 0.0;
            }
            let inner: f64 = support().map(|(si, wi)| wi * math::powf(si / m, p)).sum();
            m * math::powf(inner, 1.0 / p)
        }
    }
}

pub(crate) fn power_mean_gradient_raw(s: &[f64], w: &[f64], p: Power) -> Result<Vec<f64>> {
    let g = s.len();
    let mut grad = alloc::vec![0.0; g];
    match p {
        Power::NegInf | Power::PosInf => {
            let mut best: Option<usize> = None;
            for i in (0..g).filter(|&i| w[i] > 0.0) {
                best = match best {
                    None => Some(i),
                    Some(b) => {
                        let better = if p == Power::NegInf { s[i] < s[b] } else { s[i] > s[b] };
                        Some(if better { i } else { b })
                    }
                };
            }
            if let Some(b) = best {
                grad[b] = 1.0;
            }
        }
        Power::Finite(1.0) => grad.copy_from_slice(w),
        _ if p.is_geometric() => {
            let m = power_mean_raw(s, w, p);
            for i in 0..g {
                if w[i] > 0.0 {
                    if s[i] == 0.0 {
                        return Err(Error::ZeroSentimentGradient(i));
                    }
                    grad[i] = m * w[i] / s[i];
                }
            }
        }
        Power::Finite(pv) => {
            if pv < 1.0 {
                if let Some(i) = (0..g).find(|&i| w[i] > 0.0 && s[i] == 0.0) {
                    return Err(Error::ZeroSentimentGradient(i));
                }
            }
            let m = power_mean_raw(s, w, p);
            if m == 0.0 {
                // p > 1 at the origin: w is a subgradient since M_p ≥ M_1.
                grad.copy_from_slice(w);
                return Ok(grad);
            }
            for i in 0..g {
                if w[i] > 0.0 {
                    grad[i] = w[i] * math::powf(s[i] / m, pv - 1.0);
                }
            }
        }
    }
    Ok(grad)
}

fn gini_pairing(sorted_weights: &WeightVector, sense: Sense) -> Vec<f64> {
    match sense {
        Sense::Utility => sorted_weights.as_slice().to_vec(),
        Sense::Disutility => sorted_weights.reversed().into_vec(),
    }
}

/// Generalized Gini: `w↑ · S↓` for welfare, `w↓ · S↓` for malfare.
pub fn gini(s: &SentimentVector, sorted_weights: &WeightVector, sense: Sense) -> Result<f64> {
    check_dim(sorted_weights.len(), s.len())?;
    check_ascending(sorted_weights)?;
    let w = gini_pairing(sorted_weights, sense);
    let order = math::descending_order(s.values());
    Ok(order.iter().zip(&w).map(|(&i, wk)| wk * s.values()[i]).sum())
}

/// Utilitarian-maximin: `γ (w*·S) + (1-γ) min S` (max S for disutility).
pub fn umswf(s: &SentimentVector, gamma: f64, w_star: &WeightVector) -> Result<f64> {
    check_dim(w_star.len(), s.len())?;
    check_gamma(gamma)?;
    let ext = match s.sense() {
        Sense::Utility => s.min(),
        Sense::Disutility => s.max(),
    };
    Ok(gamma * w_star.dot(s.values()) + (1.0 - gamma) * ext)
}

/// Returns the ascending sort order of `s`, the sorted values and the paired weights.
fn gini_power_mean_pairing(
    s: &SentimentVector,
    sorted_weights: &WeightVector,
    sense: Sense,
) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let order = math::ascending_order(s.values());
    let sorted: Vec<f64> = order.iter().map(|&i| s.values()[i]).collect();
    let paired = match sense {
        Sense::Utility => sorted_weights.reversed().into_vec(),
        Sense::Disutility => sorted_weights.as_slice().to_vec(),
    };
    (order, sorted, paired)
}

/// Gini power mean: ascending sentiment paired with descending weights
/// (welfare, `p ≤ 1`) or ascending weights (malfare, `p ≥ 1`).
pub fn gini_power_mean(s: &SentimentVector, sorted_weights: &WeightVector, p: Power, sense: Sense) -> Result<f64> {
    check_dim(sorted_weights.len(), s.len())?;
    check_ascending(sorted_weights)?;
    s.require_nonnegative()?;
    if !p.is_valid_for(sense) {
        return Err(Error::InvalidSense(format!(
            "Gini power mean with p = {} and {sense:?}",
            p.to_f64()
        )));
    }
    let (_, sorted, paired) = gini_power_mean_pairing(s, sorted_weights, sense);
    Ok(power_mean_raw(&sorted, &paired, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn u(v: Vec<f64>) -> SentimentVector {
        SentimentVector::utility(v).unwrap()
    }

    fn w(v: Vec<f64>) -> WeightVector {
        WeightVector::new(v).unwrap()
    }

    #[test]
    fn power_mean_examples() {
        let half = w(vec![0.5, 0.5]);
        assert_eq!(power_mean(&u(vec![1.0, 3.0]), &half, Power::Finite(1.0)).unwrap(), 2.0);
        let geo = power_mean(&u(vec![1.0, 4.0]), &half, Power::Finite(0.0)).unwrap();
        assert!((geo - 2.0).abs() < 1e-15);
        // 2 / (1/2 + 1/8)
        let harm = power_mean(&u(vec![2.0, 8.0]), &half, Power::Finite(-1.0)).unwrap();
        assert!((harm - 3.2).abs() < 1e-14);
        let third = w(vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
        assert_eq!(power_mean(&u(vec![1.0, 2.0, 3.0]), &third, Power::NegInf).unwrap(), 1.0);
    }

    #[test]
    fn power_mean_zero_with_nonpositive_power() {
        let half = w(vec![0.5, 0.5]);
        for p in [Power::Finite(-2.0), Power::Finite(0.0), Power::NegInf] {
            assert_eq!(power_mean(&u(vec![0.0, 3.0]), &half, p).unwrap(), 0.0);
        }
        // zero weight hides the zero coordinate
        let skew = w(vec![0.0, 1.0]);
        assert_eq!(power_mean(&u(vec![0.0, 3.0]), &skew, Power::Finite(-2.0)).unwrap(), 3.0);
        assert_eq!(power_mean(&u(vec![0.0, 3.0]), &skew, Power::NegInf).unwrap(), 3.0);
    }

    #[test]
    fn power_mean_errors() {
        let half = w(vec![0.5, 0.5]);
        assert!(matches!(
            power_mean(&u(vec![1.0, 2.0, 3.0]), &half, Power::Finite(1.0)),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            power_mean(&u(vec![-1.0, 2.0]), &half, Power::Finite(1.0)),
            Err(Error::NegativeSentiment { index: 0, .. })
        ));
        assert!(matches!(WeightVector::new(vec![0.5, 0.6]), Err(Error::OffSimplex(_))));
        assert!(matches!(WeightVector::new(vec![1.1, -0.1]), Err(Error::OffSimplex(_))));
        assert!(WeightVector::new(vec![1.0 + 5e-10, -1e-13]).is_ok());
    }

    #[test]
    fn gini_examples() {
        let wu = w(vec![1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0]);
        let v = gini(&u(vec![3.0, 1.0, 2.0]), &wu, Sense::Utility).unwrap();
        assert!((v - 10.0 / 6.0).abs() < 1e-15);
        let c = gini(&u(vec![4.0, 4.0, 4.0]), &wu, Sense::Utility).unwrap();
        assert!((c - 4.0).abs() < 1e-15);
        assert_eq!(
            gini(&u(vec![5.0, 0.0]), &w(vec![0.0, 1.0]), Sense::Utility).unwrap(),
            0.0
        );
        assert_eq!(
            gini(&u(vec![1.0, 2.0]), &w(vec![0.7, 0.3]), Sense::Utility),
            Err(Error::NonMonotoneWeights)
        );
    }

    #[test]
    fn gini_malfare_puts_largest_weight_on_largest_sentiment() {
        let wu = w(vec![0.2, 0.8]);
        let v = gini(
            &SentimentVector::disutility(vec![1.0, 5.0]).unwrap(),
            &wu,
            Sense::Disutility,
        )
        .unwrap();
        assert!((v - (0.8 * 5.0 + 0.2 * 1.0)).abs() < 1e-15);
    }

    #[test]
    fn umswf_examples() {
        let half = w(vec![0.5, 0.5]);
        let s = u(vec![1.0, 3.0]);
        assert_eq!(umswf(&s, 0.0, &half).unwrap(), 1.0);
        assert_eq!(umswf(&s, 1.0, &half).unwrap(), 2.0);
        assert_eq!(umswf(&s, 0.5, &half).unwrap(), 1.5);
        assert!(matches!(umswf(&s, 1.5, &half), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn gini_power_mean_examples() {
        let s = u(vec![3.0, 1.0]);
        let a = Aggregator::gini_power_mean(Power::Finite(0.5), w(vec![0.3, 0.7]), Sense::Utility).unwrap();
        let expected = (0.7 + 0.3 * libm::sqrt(3.0)) * (0.7 + 0.3 * libm::sqrt(3.0));
        assert!((a.aggregate(&s).unwrap() - expected).abs() < 1e-14);
        assert!((a.aggregate(&s).unwrap() - 1.487_461_339_178_928).abs() < 1e-12);

        let uni = w(vec![0.25; 4]);
        let s4 = u(vec![4.0, 1.0, 3.0, 2.0]);
        let gpm = gini_power_mean(&s4, &uni, Power::Finite(1.0), Sense::Utility).unwrap();
        assert!((gpm - power_mean(&s4, &uni, Power::Finite(1.0)).unwrap()).abs() < 1e-15);

        let gpm_min = gini_power_mean(&s4, &w(vec![0.1, 0.2, 0.3, 0.4]), Power::NegInf, Sense::Utility).unwrap();
        assert_eq!(gpm_min, 1.0);

        assert!(matches!(
            Aggregator::gini_power_mean(Power::Finite(2.0), uni, Sense::Utility),
            Err(Error::InvalidSense(_))
        ));
    }

    #[test]
    fn aggregate_dispatch() {
        let half = w(vec![0.5, 0.5]);
        let s = u(vec![1.0, 3.0]);
        assert_eq!(
            Aggregator::power_mean(Power::Finite(1.0), half.clone())
                .aggregate(&s)
                .unwrap(),
            2.0
        );
        assert_eq!(Aggregator::umswf(0.0, half).unwrap().aggregate(&s).unwrap(), 1.0);
        let g = Aggregator::gini(w(vec![3.0 / 6.0, 1.0 / 6.0, 2.0 / 6.0]), Sense::Utility);
        assert!((g.aggregate(&u(vec![3.0, 1.0, 2.0])).unwrap() - 10.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn gradient_examples() {
        let half = w(vec![0.5, 0.5]);
        let lin = Aggregator::power_mean(Power::Finite(1.0), half.clone());
        assert_eq!(lin.gradient(&u(vec![3.0, 4.0])).unwrap(), vec![0.5, 0.5]);

        let quad = Aggregator::power_mean(Power::Finite(2.0), half.clone());
        let g = quad
            .gradient(&SentimentVector::disutility(vec![3.0, 4.0]).unwrap())
            .unwrap();
        let m = libm::sqrt(12.5);
        assert!((g[0] - 1.5 / m).abs() < 1e-15 && (g[1] - 2.0 / m).abs() < 1e-15);
        assert!((g[0] - 0.4243).abs() < 1e-4 && (g[1] - 0.5657).abs() < 1e-4);

        let egal = Aggregator::power_mean(Power::NegInf, half.clone());
        assert_eq!(egal.gradient(&u(vec![1.0, 2.0])).unwrap(), vec![1.0, 0.0]);
        assert_eq!(egal.gradient(&u(vec![2.0, 2.0])).unwrap(), vec![1.0, 0.0]);

        let nash = Aggregator::power_mean(Power::Finite(0.0), half);
        assert_eq!(nash.gradient(&u(vec![0.0, 2.0])), Err(Error::ZeroSentimentGradient(0)));
    }
}
