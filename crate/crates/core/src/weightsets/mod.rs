//! Angel action spaces `𝒲 ⊆ △_g` and their linear best responses.
//!
//! Every variant answers `min_{w∈𝒲} w·S` (or `max`) either in closed form,
//! by an exact greedy, or (L2 balls) by a certified-feasible iterative scheme.

mod ball;
mod grid;

use alloc::format;
use alloc::vec::Vec;

use crate::aggregators::{SentimentVector, WeightVector, SIMPLEX_SUM_TOL};
use crate::error::{Error, Result};
use crate::math;
use crate::projection::{project_l2_ball, project_unit_simplex};

pub use ball::{L2_FEASIBILITY_TOL, L2_ITERATION_CAP};
pub use grid::{brute_force_best_response, GridOracle, GRID_POINT_LIMIT};

/// Largest dimension for which orbit-based balls enumerate every permutation.
pub const ORBIT_ENUMERATION_MAX_DIM: usize = 8;
/// Largest dimension for which the L1 diameter is found by sign-vector enumeration.
pub const DIAMETER_ENUMERATION_MAX_DIM: usize = 16;
/// Largest dimension for which the diameter of an orbit-based ball is enumerated.
pub const ORBIT_DIAMETER_MAX_DIM: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Norm {
    L1,
    L2,
    Linf,
}

impl Norm {
    pub fn apply(self, v: &[f64]) -> f64 {
        match self {
            Norm::L1 => math::norm_l1(v),
            Norm::L2 => math::norm_l2(v),
            Norm::Linf => math::norm_linf(v),
        }
    }
}

/// The set a norm ball is centered on.
#[derive(Debug, Clone, PartialEq)]
pub enum BallBase {
    Singleton {
        w_star: WeightVector,
    },
    LowerBounded {
        gamma: f64,
        w_star: WeightVector,
    },
    /// Weights stored ascending.
    PermutationOrbit {
        sorted_weights: WeightVector,
    },
}

impl BallBase {
    pub fn dim(&self) -> usize {
        match self {
            BallBase::Singleton { w_star } | BallBase::LowerBounded { w_star, .. } => w_star.len(),
            BallBase::PermutationOrbit { sorted_weights } => sorted_weights.len(),
        }
    }

    /// The base as a standalone weight set.
    pub fn as_set(&self) -> WeightSet {
        match self.clone() {
            BallBase::Singleton { w_star } => WeightSet::Singleton { w_star },
            BallBase::LowerBounded { gamma, w_star } => WeightSet::LowerBounded { gamma, w_star },
            BallBase::PermutationOrbit { sorted_weights } => WeightSet::PermutationOrbit { sorted_weights },
        }
    }
}

/// An Angel action space.
///
/// `NormBall` denotes `(base + radius·ball) ∩ △_g`; it is never empty.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSet {
    Singleton {
        w_star: WeightVector,
    },
    FullSimplex {
        g: usize,
    },
    LowerBounded {
        gamma: f64,
        w_star: WeightVector,
    },
    /// Weights stored ascending.
    PermutationOrbit {
        sorted_weights: WeightVector,
    },
    NormBall {
        base: BallBase,
        norm: Norm,
        radius: f64,
    },
}

/// A maximizing or minimizing member and its linear value.
#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    pub w: WeightVector,
    pub value: f64,
    /// False when produced by an iterative or sampled method.
    pub exact: bool,
}

/// `sup_{u,v∈𝒲} ‖u - v‖₁`, or an upper bound on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diameter {
    pub value: f64,
    pub upper_bound: bool,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::OutOfRange(format!("gamma = {gamma} is outside [0, 1]")));
    }
    Ok(())
}

impl WeightSet {
    pub fn singleton(w_star: WeightVector) -> Self {
        WeightSet::Singleton { w_star }
    }

    pub fn full_simplex(g: usize) -> Result<Self> {
        if g == 0 {
            return Err(Error::Empty);
        }
        Ok(WeightSet::FullSimplex { g })
    }

    pub fn lower_bounded(gamma: f64, w_star: WeightVector) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(WeightSet::LowerBounded { gamma, w_star })
    }

    /// Sorts the weights ascending; any order is accepted.
    pub fn permutation_orbit(weights: WeightVector) -> Self {
        WeightSet::PermutationOrbit {
            sorted_weights: weights.sorted_ascending(),
        }
    }

    pub fn norm_ball(base: BallBase, norm: Norm, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius >= 0.0) {
            return Err(Error::OutOfRange(format!(
                "radius = {radius} must be finite and nonnegative"
            )));
        }
        let base = match base {
            BallBase::LowerBounded { gamma, w_star } => {
                check_gamma(gamma)?;
                BallBase::LowerBounded { gamma, w_star }
            }
            BallBase::PermutationOrbit { sorted_weights } => BallBase::PermutationOrbit {
                sorted_weights: sorted_weights.sorted_ascending(),
            },
            other => other,
        };
        Ok(WeightSet::NormBall { base, norm, radius })
    }

    pub fn dim(&self) -> usize {
        match self {
            WeightSet::Singleton { w_star } | WeightSet::LowerBounded { w_star, .. } => w_star.len(),
            WeightSet::FullSimplex { g } => *g,
            WeightSet::PermutationOrbit { sorted_weights } => sorted_weights.len(),
            WeightSet::NormBall { base, .. } => base.dim(),
        }
    }

    /// Checks the invariants that the constructors enforce, for values built directly.
    pub fn validate(&self) -> Result<()> {
        match self {
            WeightSet::FullSimplex { g } if *g == 0 => Err(Error::Empty),
            WeightSet::LowerBounded { gamma, .. } => check_gamma(*gamma),
            WeightSet::PermutationOrbit { sorted_weights } if !sorted_weights.is_ascending() => {
                Err(Error::NonMonotoneWeights)
            }
            WeightSet::NormBall { base, radius, .. } => {
                if !(radius.is_finite() && *radius >= 0.0) {
                    return Err(Error::OutOfRange(format!("radius = {radius}")));
                }
                match base {
                    BallBase::LowerBounded { gamma, .. } => check_gamma(*gamma),
                    BallBase::PermutationOrbit { sorted_weights } if !sorted_weights.is_ascending() => {
                        Err(Error::NonMonotoneWeights)
                    }
                    _ => Ok(()),
                }
            }
            _ => Ok(()),
        }
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        let expected = self.dim();
        if expected != found {
            return Err(Error::DimensionMismatch { expected, found });
        }
        Ok(())
    }

    /// `min/max_{w∈𝒲} w·S`.
    pub fn best_response(&self, s: &SentimentVector, direction: Direction) -> Result<BestResponse> {
        self.respond(s.values(), direction)
    }

    /// Best response against an arbitrary real vector (not necessarily a sentiment).
    pub fn respond(&self, s: &[f64], direction: Direction) -> Result<BestResponse> {
        self.check_dim(s.len())?;
        if let Some(i) = s.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        match direction {
            Direction::Minimize => self.minimize(s),
            Direction::Maximize => {
                let neg: Vec<f64> = s.iter().map(|x| -x).collect();
                let mut r = self.minimize(&neg)?;
                r.value = -r.value;
                Ok(r)
            }
        }
    }

    fn minimize(&self, c: &[f64]) -> Result<BestResponse> {
        let g = c.len();
        let exact = |w: Vec<f64>| {
            let value = math::dot(&w, c);
            BestResponse {
                w: WeightVector::from_raw(w),
                value,
                exact: true,
            }
        };
        match self {
            WeightSet::Singleton { w_star } => Ok(BestResponse {
                w: w_star.clone(),
                value: w_star.dot(c),
                exact: true,
            }),
            WeightSet::FullSimplex { .. } => {
                let k = math::argmin(c);
                let mut w = alloc::vec![0.0; g];
                w[k] = 1.0;
                Ok(BestResponse {
                    w: WeightVector::from_raw(w),
                    value: c[k],
                    exact: true,
                })
            }
            WeightSet::LowerBounded { gamma, w_star } => {
                let k = math::argmin(c);
                let mut w: Vec<f64> = w_star.as_slice().iter().map(|x| gamma * x).collect();
                w[k] += 1.0 - gamma;
                let value = gamma * w_star.dot(c) + (1.0 - gamma) * c[k];
                Ok(BestResponse {
                    w: WeightVector::from_raw(w),
                    value,
                    exact: true,
                })
            }
            WeightSet::PermutationOrbit { sorted_weights } => {
                let w = sort_pairing(sorted_weights.as_slice(), c);
                let asc = sorted_weights.as_slice();
                let value = math::descending_order(c)
                    .iter()
                    .zip(asc)
                    .map(|(&i, wi)| wi * c[i])
                    .sum();
                Ok(BestResponse {
                    w: WeightVector::from_raw(w),
                    value,
                    exact: true,
                })
            }
            WeightSet::NormBall { base, norm, radius } => {
                let r = *radius;
                match base {
                    BallBase::Singleton { w_star } => {
                        let center = w_star.as_slice();
                        match norm {
                            Norm::Linf => Ok(exact(ball::linf_greedy(center, r, c))),
                            Norm::L1 => Ok(exact(ball::l1_greedy(center, r, c))),
                            Norm::L2 => {
                                let w = ball::l2_bisection(center, r, c)?;
                                Ok(inexact(w, c))
                            }
                        }
                    }
                    BallBase::LowerBounded { gamma, w_star } => {
                        let floor: Vec<f64> = w_star.as_slice().iter().map(|x| gamma * x).collect();
                        let mut vertex = floor.clone();
                        vertex[math::argmin(c)] += 1.0 - gamma;
                        match norm {
                            Norm::Linf => Ok(exact(ball::linf_greedy(&vertex, r, c))),
                            Norm::L1 => Ok(exact(ball::l1_greedy(&vertex, r, c))),
                            Norm::L2 => {
                                let w = ball::l2_lower_bounded(&floor, *gamma, r, c)?;
                                Ok(inexact(w, c))
                            }
                        }
                    }
                    BallBase::PermutationOrbit { sorted_weights } => {
                        self.minimize_orbit_ball(sorted_weights.as_slice(), *norm, r, c)
                    }
                }
            }
        }
    }

    /// Minimum over the union of balls centered at every permutation of the base.
    /// Above [`ORBIT_ENUMERATION_MAX_DIM`] only the sort-pairing center is tried.
    fn minimize_orbit_ball(&self, asc: &[f64], norm: Norm, r: f64, c: &[f64]) -> Result<BestResponse> {
        let around = |center: &[f64]| -> Result<Vec<f64>> {
            Ok(match norm {
                Norm::Linf => ball::linf_greedy(center, r, c),
                Norm::L1 => ball::l1_greedy(center, r, c),
                Norm::L2 => ball::l2_bisection(center, r, c)?,
            })
        };
        let enumerate = asc.len() <= ORBIT_ENUMERATION_MAX_DIM;
        let mut best: Option<(f64, Vec<f64>)> = None;
        if enumerate {
            let mut perm = asc.to_vec();
            loop {
                let w = around(&perm)?;
                let v = math::dot(&w, c);
                if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                    best = Some((v, w));
                }
                if !next_permutation(&mut perm) {
                    break;
                }
            }
        } else {
            let w = around(&sort_pairing(asc, c))?;
            best = Some((math::dot(&w, c), w));
        }
        let (value, w) = best.expect("orbit is nonempty");
        Ok(BestResponse {
            w: WeightVector::from_raw(w),
            value,
            exact: enumerate && norm != Norm::L2,
        })
    }

    /// True iff `w` lies in the set within `tol`.
    pub fn membership(&self, w: &WeightVector, tol: f64) -> Result<bool> {
        self.check_dim(w.len())?;
        let w = w.as_slice();
        Ok(match self {
            WeightSet::Singleton { w_star } => math::norm_linf(&math::sub(w, w_star.as_slice())) <= tol,
            WeightSet::FullSimplex { .. } => true,
            WeightSet::LowerBounded { gamma, w_star } => {
                w.iter().zip(w_star.as_slice()).all(|(x, s)| *x >= gamma * s - tol)
            }
            WeightSet::PermutationOrbit { sorted_weights } => {
                math::norm_linf(&math::sub(&sorted(w), sorted_weights.as_slice())) <= tol
            }
            WeightSet::NormBall { base, norm, radius } => distance_to_base(base, *norm, w) <= radius + tol,
        })
    }

    /// `sup_{u,v∈𝒲} ‖u - v‖₁`; L2 balls and very large polytopes return a flagged upper bound.
    pub fn diameter_l1(&self) -> Result<Diameter> {
        let g = self.dim();
        let exact = |value: f64| Diameter {
            value,
            upper_bound: false,
        };
        if g == 1 {
            return Ok(exact(0.0));
        }
        Ok(match self {
            WeightSet::Singleton { .. } => exact(0.0),
            WeightSet::FullSimplex { .. } => exact(2.0),
            WeightSet::LowerBounded { gamma, .. } => exact(2.0 * (1.0 - gamma)),
            WeightSet::PermutationOrbit { sorted_weights } => {
                let asc = sorted_weights.as_slice();
                let desc: Vec<f64> = asc.iter().rev().copied().collect();
                exact(math::norm_l1(&math::sub(asc, &desc)))
            }
            WeightSet::NormBall { base, norm, radius } => {
                let base_diam = base.as_set().diameter_l1()?.value;
                let spread = match norm {
                    Norm::L1 => *radius,
                    Norm::Linf => 2.0 * (g / 2) as f64 * radius,
                    Norm::L2 => radius * math::sqrt(g as f64),
                };
                let bound = Diameter {
                    value: (base_diam + 2.0 * spread).min(2.0),
                    upper_bound: true,
                };
                let orbit_too_large = matches!(base, BallBase::PermutationOrbit { .. }) && g > ORBIT_DIAMETER_MAX_DIM;
                if *norm == Norm::L2 || g > DIAMETER_ENUMERATION_MAX_DIM || orbit_too_large {
                    bound
                } else {
                    exact(self.sign_vector_diameter()?)
                }
            }
        })
    }

    /// `max_σ [max_w σ·w - min_w σ·w]` over sign vectors with `σ_0 = +1`.
    fn sign_vector_diameter(&self) -> Result<f64> {
        let g = self.dim();
        let mut best: f64 = 0.0;
        for mask in 0u32..(1u32 << (g - 1)) {
            let sigma: Vec<f64> = (0..g)
                .map(|i| if i > 0 && mask & (1 << (i - 1)) != 0 { -1.0 } else { 1.0 })
                .collect();
            let hi = self.respond(&sigma, Direction::Maximize)?.value;
            let lo = self.respond(&sigma, Direction::Minimize)?.value;
            best = best.max(hi - lo);
        }
        Ok(best.min(2.0))
    }

    /// Per-coordinate extremes `(min_i min_w w_i, max_i max_w w_i)`; L2 balls err outward.
    pub fn coordinate_range(&self) -> Result<(f64, f64)> {
        let g = self.dim();
        if g == 1 {
            return Ok((1.0, 1.0));
        }
        match self {
            WeightSet::Singleton { w_star } => Ok((math::min_of(w_star.as_slice()), math::max_of(w_star.as_slice()))),
            WeightSet::FullSimplex { .. } => Ok((0.0, 1.0)),
            WeightSet::LowerBounded { gamma, w_star } => {
                let floor: Vec<f64> = w_star.as_slice().iter().map(|x| gamma * x).collect();
                Ok((math::min_of(&floor), math::max_of(&floor) + 1.0 - gamma))
            }
            WeightSet::PermutationOrbit { sorted_weights } => {
                Ok((sorted_weights.as_slice()[0], sorted_weights.as_slice()[g - 1]))
            }
            WeightSet::NormBall {
                base,
                norm: Norm::L2,
                radius,
            } => {
                let (lo, hi) = base.as_set().coordinate_range()?;
                Ok(((lo - radius).max(0.0), (hi + radius).min(1.0)))
            }
            WeightSet::NormBall { .. } => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for i in 0..g {
                    let mut e = alloc::vec![0.0; g];
                    e[i] = 1.0;
                    lo = lo.min(self.respond(&e, Direction::Minimize)?.value);
                    hi = hi.max(self.respond(&e, Direction::Maximize)?.value);
                }
                Ok((lo.max(0.0), hi.min(1.0)))
            }
        }
    }

    /// Whether some member puts positive weight on coordinate `i`.
    pub fn reaches(&self, i: usize) -> Result<bool> {
        let g = self.dim();
        if i >= g {
            return Err(Error::OutOfRange(format!("coordinate {i} of {g}")));
        }
        let mut e = alloc::vec![0.0; g];
        e[i] = 1.0;
        Ok(self.respond(&e, Direction::Maximize)?.value > 0.0)
    }

    /// Euclidean projection onto the set, where an exact or convergent routine exists.
    pub fn project(&self, v: &[f64]) -> Result<WeightVector> {
        self.check_dim(v.len())?;
        match self {
            WeightSet::Singleton { w_star } => Ok(w_star.clone()),
            WeightSet::FullSimplex { .. } => Ok(WeightVector::from_raw(project_unit_simplex(v))),
            WeightSet::LowerBounded { gamma, w_star } => {
                let floor: Vec<f64> = w_star.as_slice().iter().map(|x| gamma * x).collect();
                Ok(WeightVector::from_raw(ball::project_lower_bounded(v, &floor, *gamma)))
            }
            WeightSet::NormBall {
                base: BallBase::Singleton { w_star },
                norm: Norm::L2,
                radius,
            } => Ok(WeightVector::from_raw(dykstra_ball_simplex(
                v,
                w_star.as_slice(),
                *radius,
            ))),
            _ => Err(Error::Unsupported(
                "projection is available for singleton, simplex, lower-bounded and L2 balls around a point".into(),
            )),
        }
    }
}

/// Exact BR with value recomputed from the iterate; marked inexact.
fn inexact(w: Vec<f64>, c: &[f64]) -> BestResponse {
    let value = math::dot(&w, c);
    BestResponse {
        w: WeightVector::from_raw(w),
        value,
        exact: false,
    }
}

/// Largest weights on the smallest entries of `c`; ties keep index order.
fn sort_pairing(asc: &[f64], c: &[f64]) -> Vec<f64> {
    let mut w = alloc::vec![0.0; c.len()];
    for (k, i) in math::ascending_order(c).into_iter().enumerate() {
        w[i] = asc[asc.len() - 1 - k];
    }
    w
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(f64::total_cmp);
    u
}

/// Lexicographic successor; returns false after the last permutation.
fn next_permutation(v: &mut [f64]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

fn distance_to_base(base: &BallBase, norm: Norm, w: &[f64]) -> f64 {
    match base {
        BallBase::Singleton { w_star } => norm.apply(&math::sub(w, w_star.as_slice())),
        BallBase::PermutationOrbit { sorted_weights } => norm.apply(&math::sub(&sorted(w), sorted_weights.as_slice())),
        BallBase::LowerBounded { gamma, w_star } => {
            let floor: Vec<f64> = w_star.as_slice().iter().map(|x| gamma * x).collect();
            if *gamma >= 1.0 {
                return norm.apply(&math::sub(w, &floor));
            }
            match norm {
                Norm::L1 => 2.0 * w.iter().zip(&floor).map(|(x, b)| (b - x).max(0.0)).sum::<f64>(),
                Norm::L2 => math::norm_l2(&math::sub(w, &ball::project_lower_bounded(w, &floor, *gamma))),
                Norm::Linf => {
                    let scale = 1.0 - gamma;
                    let total: f64 = w.iter().sum();
                    let a: Vec<f64> = w.iter().zip(&floor).map(|(x, b)| (x / total - b) / scale).collect();
                    scale * ball::linf_distance_to_simplex(&a)
                }
            }
        }
    }
}

/// Dykstra's alternating projections onto `B₂(center, r) ∩ △`.
fn dykstra_ball_simplex(v: &[f64], center: &[f64], radius: f64) -> Vec<f64> {
    let g = v.len();
    let mut x = v.to_vec();
    let mut p = alloc::vec![0.0; g];
    let mut q = alloc::vec![0.0; g];
    for _ in 0..L2_ITERATION_CAP {
        let y_in: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + b).collect();
        let y = project_unit_simplex(&y_in);
        p = y_in.iter().zip(&y).map(|(a, b)| a - b).collect();
        let z_in: Vec<f64> = y.iter().zip(&q).map(|(a, b)| a + b).collect();
        let z = project_l2_ball(&z_in, center, radius);
        q = z_in.iter().zip(&z).map(|(a, b)| a - b).collect();
        let change = math::norm_linf(&math::sub(&z, &x));
        x = z;
        if change < 1e-14 {
            break;
        }
    }
    // Land on the simplex; the ball constraint then holds to the iterate's accuracy.
    let y = project_unit_simplex(&x);
    if (y.iter().sum::<f64>() - 1.0).abs() > SIMPLEX_SUM_TOL {
        return center.to_vec();
    }
    y
}
