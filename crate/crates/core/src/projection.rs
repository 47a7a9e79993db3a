//! Euclidean projections onto simple convex sets.

use alloc::vec::Vec;

use crate::math;

/// Projection onto `{x ≥ 0, Σx = total}` by sort-then-threshold.
pub fn project_scaled_simplex(v: &[f64], total: f64) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cumulative += ui;
        let t = (cumulative - total) / (i as f64 + 1.0);
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Projection onto the probability simplex.
pub fn project_unit_simplex(v: &[f64]) -> Vec<f64> {
    project_scaled_simplex(v, 1.0)
}

/// Projection onto `{x ≥ 0, Σx ≤ cap}`.
pub fn project_capped_simplex(v: &[f64], cap: f64) -> Vec<f64> {
    let clipped: Vec<f64> = v.iter().map(|&x| x.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= cap {
        clipped
    } else {
        project_scaled_simplex(v, cap)
    }
}

/// Projection onto the L1 ball `{x : ‖x - center‖₁ ≤ radius}`.
pub fn project_l1_ball(v: &[f64], center: &[f64], radius: f64) -> Vec<f64> {
    let d = math::sub(v, center);
    if math::norm_l1(&d) <= radius {
        return v.to_vec();
    }
    let abs: Vec<f64> = d.iter().map(|x| x.abs()).collect();
    let shrunk = project_scaled_simplex(&abs, radius);
    center
        .iter()
        .zip(&d)
        .zip(&shrunk)
        .map(|((c, di), s)| c + di.signum() * s)
        .collect()
}

/// Projection onto the L2 ball by radial scaling.
pub fn project_l2_ball(v: &[f64], center: &[f64], radius: f64) -> Vec<f64> {
    let d = math::sub(v, center);
    let n = math::norm_l2(&d);
    if n <= radius {
        return v.to_vec();
    }
    let scale = radius / n;
    center.iter().zip(&d).map(|(c, di)| c + di * scale).collect()
}

/// Projection onto the box `center ± radius`.
pub fn project_linf_ball(v: &[f64], center: &[f64], radius: f64) -> Vec<f64> {
    v.iter()
        .zip(center)
        .map(|(&x, &c)| x.clamp(c - radius, c + radius))
        .collect()
}
