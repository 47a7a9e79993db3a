//! Linear minimization over norm balls intersected with the simplex.
//!
//! Every routine here minimizes `c·w`; callers negate `c` to maximize.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::projection::{project_scaled_simplex, project_unit_simplex};

/// Hard cap on inner iterations of the iterative L2 routines.
pub const L2_ITERATION_CAP: usize = 10_000;
/// Feasibility tolerance on the ball constraint for iterative results.
pub const L2_FEASIBILITY_TOL: f64 = 1e-8;

/// Box ∩ simplex: bounds `max(0, c_i - r) ≤ w_i ≤ min(1, c_i + r)`.
/// Starts at the lower bounds and fills the residual mass in ascending `c` order.
pub fn linf_greedy(center: &[f64], radius: f64, c: &[f64]) -> Vec<f64> {
    let lower: Vec<f64> = center.iter().map(|&x| (x - radius).max(0.0)).collect();
    let upper: Vec<f64> = center.iter().map(|&x| (x + radius).min(1.0)).collect();
    let mut w = lower.clone();
    let mut residual = 1.0 - lower.iter().sum::<f64>();
    for i in math::ascending_order(c) {
        if residual <= 0.0 {
            break;
        }
        let add = (upper[i] - lower[i]).min(residual);
        w[i] += add;
        residual -= add;
    }
    w
}

/// L1 ball ∩ simplex: moves at most `r/2` mass from the largest-`c` coordinates
/// onto the smallest-`c` coordinate.
pub fn l1_greedy(center: &[f64], radius: f64, c: &[f64]) -> Vec<f64> {
    let mut w = center.to_vec();
    let target = math::argmin(c);
    let mut budget = radius / 2.0;
    for i in math::descending_order(c) {
        if budget <= 0.0 || c[i] <= c[target] {
            break;
        }
        let moved = w[i].min(budget);
        w[i] -= moved;
        w[target] += moved;
        budget -= moved;
    }
    w
}

/// Minimizer of `c·w + (μ/2)‖w - center‖²` over the simplex.
fn prox_point(center: &[f64], c: &[f64], mu: f64) -> Vec<f64> {
    let shifted: Vec<f64> = center.iter().zip(c).map(|(x, ci)| x - ci / mu).collect();
    project_unit_simplex(&shifted)
}

/// L2 ball ∩ simplex via bisection on the ball multiplier `μ`.
///
/// For each `μ` the minimizer is `proj_△(center - c/μ)`, whose distance to the
/// center is nonincreasing in `μ`; the smallest feasible `μ` is the optimum.
/// The returned point always satisfies the ball constraint.
pub fn l2_bisection(center: &[f64], radius: f64, c: &[f64]) -> Result<Vec<f64>> {
    let spread = math::max_of(c) - math::min_of(c);
    if radius <= 0.0 || spread == 0.0 {
        return Ok(center.to_vec());
    }
    let k = math::argmin(c);
    let mut vertex = alloc::vec![0.0; c.len()];
    vertex[k] = 1.0;
    if math::norm_l2(&math::sub(&vertex, center)) <= radius {
        return Ok(vertex);
    }
    let dist = |mu: f64| {
        let w = prox_point(center, c, mu);
        (math::norm_l2(&math::sub(&w, center)), w)
    };
    let mut hi = 1.0;
    let mut iterations = 0;
    while dist(hi).0 > radius {
        hi *= 2.0;
        iterations += 1;
        if iterations > 2_000 {
            return Err(Error::NonConvergence { iterations });
        }
    }
    let mut lo = hi;
    while lo > 0.0 && dist(lo).0 <= radius {
        lo /= 2.0;
        iterations += 1;
        if iterations > 4_000 {
            // The ball constraint never binds; the limit is an LP vertex.
            return Ok(dist(hi).1);
        }
    }
    for _ in 0..200 {
        let mid = math::sqrt(lo * hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        if dist(mid).0 <= radius {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(dist(hi).1)
}

/// Projection onto `L = b + (1-γ)△`, where `b = γ w*`.
pub fn project_lower_bounded(v: &[f64], floor: &[f64], gamma: f64) -> Vec<f64> {
    if gamma >= 1.0 {
        return floor.to_vec();
    }
    let shifted: Vec<f64> = v.iter().zip(floor).map(|(x, b)| x - b).collect();
    project_scaled_simplex(&shifted, 1.0 - gamma)
        .into_iter()
        .zip(floor)
        .map(|(x, b)| x + b)
        .collect()
}

/// L2-robustified lower-bounded set: `{w ∈ △ : dist₂(w, L) ≤ r}`.
///
/// Bisection on the multiplier `μ`; for fixed `μ` the penalized problem
/// `min c·w + (μ/2) dist²(w, L)` is solved by alternating exact projections
/// `w ← proj_△(P_L(w) - c/μ)`, warm-started across bisection steps.
pub fn l2_lower_bounded(floor: &[f64], gamma: f64, radius: f64, c: &[f64]) -> Result<Vec<f64>> {
    let g = c.len();
    let k = math::argmin(c);
    let mut vertex_base = floor.to_vec();
    vertex_base[k] += 1.0 - gamma;
    if gamma >= 1.0 || radius <= 0.0 {
        return Ok(vertex_base);
    }
    let mut vertex = alloc::vec![0.0; g];
    vertex[k] = 1.0;
    let dist_to_base = |w: &[f64]| math::norm_l2(&math::sub(w, &project_lower_bounded(w, floor, gamma)));
    if dist_to_base(&vertex) <= radius {
        return Ok(vertex);
    }

    let solve = |mu: f64, start: &[f64]| -> (Vec<f64>, f64) {
        let mut w = start.to_vec();
        for _ in 0..L2_ITERATION_CAP {
            let anchor = project_lower_bounded(&w, floor, gamma);
            let next = prox_point(&anchor, c, mu);
            let change = math::norm_linf(&math::sub(&next, &w));
            w = next;
            if change < 1e-15 {
                break;
            }
        }
        let d = dist_to_base(&w);
        (w, d)
    };

    let mut hi = 1.0;
    let mut best = solve(hi, &vertex_base);
    let mut iterations = 0;
    while best.1 > radius {
        hi *= 2.0;
        best = solve(hi, &best.0);
        iterations += 1;
        if iterations > 2_000 {
            return Err(Error::NonConvergence { iterations });
        }
    }
    let mut lo = hi / 2.0;
    let mut lo_state = solve(lo, &best.0);
    while lo_state.1 <= radius {
        hi = lo;
        best = lo_state.clone();
        lo /= 2.0;
        lo_state = solve(lo, &best.0);
        iterations += 1;
        if iterations > 4_000 {
            return Ok(best.0);
        }
    }
    for _ in 0..100 {
        let mid = math::sqrt(lo * hi);
        if !(mid > lo && mid < hi) || hi / lo - 1.0 < 1e-12 {
            break;
        }
        let state = solve(mid, &best.0);
        if state.1 <= radius {
            hi = mid;
            best = state;
        } else {
            lo = mid;
        }
    }
    // Pull the iterate back inside the ball if rounding left it just outside.
    let (w, d) = best;
    if d > radius {
        let anchor = project_lower_bounded(&w, floor, gamma);
        let t = radius / d;
        let pulled: Vec<f64> = anchor.iter().zip(&w).map(|(a, x)| a + t * (x - a)).collect();
        return Ok(pulled);
    }
    Ok(w)
}

/// `min_{λ ∈ △} ‖a - λ‖∞` for `a` summing to one.
pub fn linf_distance_to_simplex(a: &[f64]) -> f64 {
    let floor = a.iter().fold(0.0, |m: f64, &x| m.max(-x));
    let excess = |t: f64| a.iter().map(|&x| (x - t).max(0.0)).sum::<f64>();
    if excess(floor) <= 1.0 {
        return floor;
    }
    let mut lo = floor;
    let mut hi = math::norm_linf(a) + 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
