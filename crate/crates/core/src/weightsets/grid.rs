//! Exhaustive search over a regular simplex grid; a test oracle.

use alloc::vec::Vec;

use super::{BestResponse, Direction, WeightSet};
use crate::aggregators::{SentimentVector, WeightVector};
use crate::error::{Error, Result};
use crate::math;

/// Largest number of grid points enumerated.
pub const GRID_POINT_LIMIT: u128 = 5_000_000;
/// Largest supported dimension.
pub const GRID_MAX_DIM: usize = 4;
/// Membership tolerance applied to grid points.
const GRID_MEMBERSHIP_TOL: f64 = 1e-9;

/// Number of points `C(n + g - 1, g - 1)` of the grid with `n` steps per unit.
fn grid_size(n: u64, g: usize) -> u128 {
    let mut count: u128 = 1;
    for k in 1..g as u128 {
        count = count * (n as u128 + k) / k;
    }
    count
}

fn steps(resolution: f64) -> Result<u64> {
    if !(resolution.is_finite() && resolution > 0.0 && resolution <= 1.0) {
        return Err(Error::OutOfRange(alloc::format!("resolution = {resolution}")));
    }
    Ok(libm::round(1.0 / resolution).max(1.0) as u64)
}

/// Calls `f` on every point `k/n` of the simplex grid.
fn for_each_point(g: usize, n: u64, mut f: impl FnMut(&[f64])) {
    let mut counts = alloc::vec![0u64; g];
    let mut point = alloc::vec![0.0; g];
    let inv = 1.0 / n as f64;
    // counts[0..g-1] enumerate in lexicographic order; the last coordinate takes the remainder.
    loop {
        let used: u64 = counts[..g - 1].iter().sum();
        if used <= n {
            counts[g - 1] = n - used;
            for (p, &c) in point.iter_mut().zip(&counts) {
                *p = c as f64 * inv;
            }
            f(&point);
        }
        let mut i = g - 1;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            counts[i] += 1;
            if counts[..=i].iter().sum::<u64>() <= n {
                break;
            }
            counts[i] = 0;
        }
    }
}

fn guard(set: &WeightSet, n: u64) -> Result<()> {
    let g = set.dim();
    let points = grid_size(n, g);
    if g > GRID_MAX_DIM || points > GRID_POINT_LIMIT {
        return Err(Error::GridTooLarge {
            points,
            limit: GRID_POINT_LIMIT,
        });
    }
    Ok(())
}

fn is_better(value: f64, best: Option<f64>, direction: Direction) -> bool {
    match (best, direction) {
        (None, _) => true,
        (Some(b), Direction::Minimize) => value < b,
        (Some(b), Direction::Maximize) => value > b,
    }
}

/// Best grid point of `𝒲` at the given resolution; `exact` is always false.
pub fn brute_force_best_response(
    set: &WeightSet,
    s: &SentimentVector,
    direction: Direction,
    resolution: f64,
) -> Result<BestResponse> {
    let n = steps(resolution)?;
    guard(set, n)?;
    if s.len() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            found: s.len(),
        });
    }
    let values = s.values();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut failure = None;
    for_each_point(set.dim(), n, |p| {
        let w = WeightVector::from_raw(p.to_vec());
        match set.membership(&w, GRID_MEMBERSHIP_TOL) {
            Ok(true) => {
                let v = math::dot(p, values);
                if is_better(v, best.as_ref().map(|b| b.0), direction) {
                    best = Some((v, p.to_vec()));
                }
            }
            Ok(false) => {}
            Err(e) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let (value, w) = best.ok_or(Error::EmptyGrid)?;
    Ok(BestResponse {
        w: WeightVector::from_raw(w),
        value,
        exact: false,
    })
}

/// A materialized finite point set, reusable across many sentiment vectors.
#[derive(Debug, Clone)]
pub struct GridOracle {
    points: Vec<WeightVector>,
}

impl GridOracle {
    /// Grid members of `𝒲` at the given resolution.
    pub fn new(set: &WeightSet, resolution: f64) -> Result<Self> {
        let n = steps(resolution)?;
        guard(set, n)?;
        let mut points = Vec::new();
        let mut failure = None;
        for_each_point(set.dim(), n, |p| {
            let w = WeightVector::from_raw(p.to_vec());
            match set.membership(&w, GRID_MEMBERSHIP_TOL) {
                Ok(true) => points.push(w),
                Ok(false) => {}
                Err(e) => failure = Some(e),
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        Self::from_points(points)
    }

    /// An arbitrary finite action space, e.g. the vertex set of a polytope.
    pub fn from_points(points: Vec<WeightVector>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyGrid);
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[WeightVector] {
        &self.points
    }

    pub fn best_response(&self, s: &[f64], direction: Direction) -> Result<BestResponse> {
        let g = self.points[0].len();
        if s.len() != g {
            return Err(Error::DimensionMismatch {
                expected: g,
                found: s.len(),
            });
        }
        let mut best: Option<(f64, usize)> = None;
        for (i, w) in self.points.iter().enumerate() {
            let v = w.dot(s);
            if is_better(v, best.map(|b| b.0), direction) {
                best = Some((v, i));
            }
        }
        let (value, i) = best.expect("nonempty");
        Ok(BestResponse {
            w: self.points[i].clone(),
            value,
            exact: false,
        })
    }
}
