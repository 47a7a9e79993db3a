//! Robustness gaps, Hölder certificates, generalization sandwiches and sample sizes.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::aggregators::{Aggregator, Power, SentimentFunctional, SentimentVector};
use crate::error::{Error, Result};
use crate::math;
use crate::robust::RobustAggregator;
use crate::weightsets::{Direction, WeightSet};

/// `(inf, sup)` of the aggregator over `w ∈ 𝒲`.
///
/// The aggregator's own weights are replaced by `w`; Gini families are unsupported.
pub fn sandwich(s: &SentimentVector, aggregator: &Aggregator, set: &WeightSet) -> Result<(f64, f64)> {
    if s.len() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            found: s.len(),
        });
    }
    let robust = RobustAggregator::new(aggregator.clone(), set.clone())?;
    let lo = robust.extreme(s, Direction::Minimize)?.value;
    let hi = robust.extreme(s, Direction::Maximize)?.value;
    Ok((lo, hi))
}

/// `Range(S) · Diam₁(𝒲)`, an upper bound on the proxy-versus-true gap of linear objectives.
pub fn robust_gap_bound(s_range: f64, set: &WeightSet) -> Result<f64> {
    if !(s_range >= 0.0 && s_range.is_finite()) {
        return Err(Error::OutOfRange(format!("sentiment range {s_range}")));
    }
    Ok(s_range * set.diameter_l1()?.value)
}

/// Norm in which a Hölder certificate measures `S - S'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HolderNorm {
    L1,
    L2,
    Linf,
    /// `M_p(|S - S'|; 𝒲)`; dominated by `Linf`, which sample sizes use in its place.
    SelfReferential,
}

/// Which continuity result a certificate comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HolderCase {
    /// `p ≥ 1`: 1-Lipschitz in the sup norm.
    AtLeastOne,
    /// `p = 1`: `w_max`-Lipschitz in the 1-norm.
    Linear,
    /// `p < 0` with `w_min > 0`.
    Negative,
    /// `0 < p < 1`: Hölder with exponent `p`.
    Fractional,
    /// `p ≤ 1` with `w_min > 0`: Hölder with exponent `w_min`.
    WeightFloor,
    /// `p = -∞`: the minimum is 1-Lipschitz in the sup norm.
    Egalitarian,
}

impl HolderCase {
    pub fn name(self) -> &'static str {
        match self {
            HolderCase::AtLeastOne => "at-least-one",
            HolderCase::Linear => "linear",
            HolderCase::Negative => "negative",
            HolderCase::Fractional => "fractional",
            HolderCase::WeightFloor => "weight-floor",
            HolderCase::Egalitarian => "egalitarian",
        }
    }
}

/// `|M(S; 𝒲) - M(S'; 𝒲)| ≤ λ ‖S - S'‖^α` on `[0, r]^g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderCertificate {
    pub lambda: f64,
    pub alpha: f64,
    pub norm: HolderNorm,
    pub case: HolderCase,
}

impl HolderCertificate {
    pub fn is_lipschitz(&self) -> bool {
        self.alpha == 1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderCertificates {
    /// Largest exponent first, then smallest constant.
    pub best: HolderCertificate,
    pub all: Vec<HolderCertificate>,
}

/// Every applicable continuity certificate for the robust power mean `M_p(·; 𝒲)` on `[0, r]^g`.
pub fn holder_certificate(p: Power, set: &WeightSet, r: f64) -> Result<HolderCertificates> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::OutOfRange(format!("sentiment range r = {r}")));
    }
    let (w_min, w_max) = set.coordinate_range()?;
    let cert = |lambda, alpha, norm, case| HolderCertificate {
        lambda,
        alpha,
        norm,
        case,
    };
    let mut all = Vec::new();
    match p {
        Power::NegInf => all.push(cert(1.0, 1.0, HolderNorm::Linf, HolderCase::Egalitarian)),
        Power::PosInf => all.push(cert(1.0, 1.0, HolderNorm::Linf, HolderCase::AtLeastOne)),
        Power::Finite(p) => {
            if p >= 1.0 {
                all.push(cert(1.0, 1.0, HolderNorm::Linf, HolderCase::AtLeastOne));
            }
            if p == 1.0 {
                all.push(cert(w_max, 1.0, HolderNorm::L1, HolderCase::Linear));
            }
            if p < 0.0 && w_min > 0.0 {
                all.push(cert(
                    math::powf(w_min, 1.0 / p),
                    1.0,
                    HolderNorm::Linf,
                    HolderCase::Negative,
                ));
            }
            if p > 0.0 && p < 1.0 {
                all.push(cert(
                    math::powf(r, 1.0 - p) / p,
                    p,
                    HolderNorm::Linf,
                    HolderCase::Fractional,
                ));
            }
        }
    }
    // For 0 < p < w_min a zero coordinate makes M_p grow like d^p, faster than d^w_min.
    let floor_applies = p.to_f64() <= 0.0 || (p.to_f64() >= w_min && p.to_f64() <= 1.0);
    if floor_applies && w_min > 0.0 {
        all.push(cert(
            math::powf(r, 1.0 - w_min),
            w_min,
            HolderNorm::Linf,
            HolderCase::WeightFloor,
        ));
    }
    let best = all
        .iter()
        .copied()
        .min_by(|a, b| b.alpha.total_cmp(&a.alpha).then(a.lambda.total_cmp(&b.lambda)))
        .ok_or_else(|| {
            Error::Unsupported(format!(
                "no continuity certificate for p = {} with w_min = 0",
                p.to_f64()
            ))
        })?;
    Ok(HolderCertificates { best, all })
}

/// Measures `S - S'` in the certificate's norm.
pub fn holder_distance(cert: &HolderCertificate, robust: &RobustAggregator, d: &[f64]) -> Result<f64> {
    let abs: Vec<f64> = d.iter().map(|x| x.abs()).collect();
    Ok(match cert.norm {
        HolderNorm::L1 => math::norm_l1(&abs),
        HolderNorm::L2 => math::norm_l2(&abs),
        HolderNorm::Linf => math::norm_linf(&abs),
        HolderNorm::SelfReferential => {
            robust
                .extreme(&SentimentVector::utility(abs)?, Direction::Maximize)?
                .value
        }
    })
}

const ROUNDING_ULPS: f64 = 64.0;

/// Malfare powers are evaluated as disutilities so the adversary maximizes.
fn as_sentiment(robust: &RobustAggregator, s: &[f64]) -> Result<SentimentVector> {
    match robust.aggregator() {
        Aggregator::PowerMean { p, .. } if p.to_f64() > 1.0 => SentimentVector::disutility(s.to_vec()),
        _ => SentimentVector::utility(s.to_vec()),
    }
}

/// `|M(S) - M(S')| / (λ ‖S - S'‖^α)`; 0 for coincident points.
///
/// The numerator discounts rounding in the two evaluations, so exactly tight
/// pairs at tiny distances do not report ratios above 1.
pub fn holder_ratio(robust: &RobustAggregator, cert: &HolderCertificate, s: &[f64], t: &[f64]) -> Result<f64> {
    let a = robust.evaluate(&as_sentiment(robust, s)?)?;
    let b = robust.evaluate(&as_sentiment(robust, t)?)?;
    let dist = holder_distance(cert, robust, &math::sub(s, t))?;
    if dist == 0.0 {
        return Ok(0.0);
    }
    let rounding = ROUNDING_ULPS * f64::EPSILON * (a.abs() + b.abs());
    Ok(((a - b).abs() - rounding).max(0.0) / (cert.lambda * math::powf(dist, cert.alpha)))
}

/// Randomized check of a certificate on pairs in `[0, r]^g`; returns `(all passed, max ratio)`.
///
/// Half the pairs are uniform; the rest perturb one point slightly, with some
/// coordinates pinned at 0, where non-Lipschitz behavior concentrates.
pub fn holder_empirical_check(
    robust: &RobustAggregator,
    cert: &HolderCertificate,
    trials: usize,
    r: f64,
    seed: u64,
) -> Result<(bool, f64)> {
    if trials == 0 {
        return Err(Error::OutOfRange("trials must be positive".into()));
    }
    let g = robust.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_ratio: f64 = 0.0;
    for k in 0..trials {
        let s: Vec<f64> = (0..g)
            .map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..=r) })
            .collect();
        let t: Vec<f64> = if k % 2 == 0 {
            (0..g).map(|_| rng.gen_range(0.0..=r)).collect()
        } else {
            let scale = r * math::powf(10.0, -rng.gen_range(0.0..8.0));
            s.iter()
                .map(|x| (x + rng.gen_range(-scale..=scale)).clamp(0.0, r))
                .collect()
        };
        max_ratio = max_ratio.max(holder_ratio(robust, cert, &s, &t)?);
    }
    Ok((max_ratio <= 1.0 + 1e-9, max_ratio))
}

/// `(M(max(Ŝ - ε, 0)), M(Ŝ + ε))`, valid for every monotone functional.
pub fn generalization_sandwich(
    s_hat: &SentimentVector,
    eps: &[f64],
    functional: &dyn SentimentFunctional,
) -> Result<(f64, f64)> {
    if eps.len() != s_hat.len() {
        return Err(Error::DimensionMismatch {
            expected: s_hat.len(),
            found: eps.len(),
        });
    }
    if let Some(i) = eps.iter().position(|e| !(*e >= 0.0 && e.is_finite())) {
        return Err(Error::OutOfRange(format!("eps[{i}] = {}", eps[i])));
    }
    let lower: Vec<f64> = s_hat.values().iter().zip(eps).map(|(s, e)| (s - e).max(0.0)).collect();
    let upper: Vec<f64> = s_hat.values().iter().zip(eps).map(|(s, e)| s + e).collect();
    Ok((
        functional.evaluate(&s_hat.with_values(lower)?)?,
        functional.evaluate(&s_hat.with_values(upper)?)?,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleComplexityQuery {
    pub lambda: f64,
    pub alpha: f64,
    pub norm: HolderNorm,
    /// Per-group variance proxies; `g = v.len()`.
    pub v: Vec<f64>,
    /// Tail count.
    pub t: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub m0: u64,
}

impl SampleComplexityQuery {
    pub fn from_certificate(cert: &HolderCertificate, v: Vec<f64>, t: f64, delta: f64, epsilon: f64, m0: u64) -> Self {
        Self {
            lambda: cert.lambda,
            alpha: cert.alpha,
            norm: cert.norm,
            v,
            t,
            delta,
            epsilon,
            m0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::OutOfRange(format!("delta = {} must lie in (0, 1)", self.delta)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::OutOfRange(format!(
                "epsilon = {} must be positive",
                self.epsilon
            )));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) || !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::OutOfRange(format!(
                "certificate ({}, {})",
                self.lambda, self.alpha
            )));
        }
        if self.v.is_empty() {
            return Err(Error::Empty);
        }
        if let Some(i) = self.v.iter().position(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(Error::OutOfRange(format!("v[{i}] = {}", self.v[i])));
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::OutOfRange(format!("t = {}", self.t)));
        }
        Ok(())
    }
}

/// `max(m₀, ⌈(λ/ε)^{2/α} ‖√v‖²_M ln(t g / δ)⌉)`.
pub fn sample_complexity(q: &SampleComplexityQuery) -> Result<u64> {
    q.validate()?;
    let roots: Vec<f64> = q.v.iter().map(|x| math::sqrt(*x)).collect();
    let norm = match q.norm {
        HolderNorm::L1 => math::norm_l1(&roots),
        HolderNorm::L2 => math::norm_l2(&roots),
        HolderNorm::Linf | HolderNorm::SelfReferential => math::norm_linf(&roots),
    };
    let g = q.v.len() as f64;
    let m = math::powf(q.lambda / q.epsilon, 2.0 / q.alpha) * norm * norm * math::ln(q.t * g / q.delta);
    let m = math::ceil(m.max(0.0));
    if m >= u64::MAX as f64 {
        return Err(Error::OutOfRange("sample size overflows".into()));
    }
    Ok((m as u64).max(q.m0))
}
