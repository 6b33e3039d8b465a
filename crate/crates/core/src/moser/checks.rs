//! Numerical checks of the Kepler regularization: the vector-field identity
//! `X_K = |q| X_H` on the energy surface and the geodesic trace of a
//! regularized Kepler orbit.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, normalized, sub};
use crate::ode::{self, Options};
use crate::sample;

use super::kepler::{kepler_hamiltonian, kepler_vector_field, regularized_kepler_vector_field, switch_map, KeplerField};
use super::sphere::{geodesic_flow, stereographic_lift, ChartPoint, Chart};

/// `|X_{K_c} - |q| X_H| / |X_H|` at one point. Vanishes when `H(q, p) = c`.
pub fn vf_identity_residual_at(q: &[f64], p: &[f64], c: f64) -> Result<f64> {
    let xk = regularized_kepler_vector_field(q, p, c)?;
    let xh = kepler_vector_field(q, p)?;
    let r = norm(q);
    let diff: Vec<f64> = xk.iter().zip(&xh).map(|(a, b)| a - r * b).collect();
    Ok(norm(&diff) / norm(&xh))
}

/// A point of `H^{-1}(c)` for the Kepler problem: `q` uniform in the ball
/// `|q| < 1/|c|` (by rejection), momentum of the right length in a uniform direction.
pub fn sample_kepler_surface<R: rand::Rng>(rng: &mut R, n: usize, c: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if c >= 0.0 {
        return Err(Error::InvalidInput(format!("sampling needs negative energy, got c = {c}")));
    }
    let rmax = 1.0 / c.abs();
    loop {
        let q = sample::in_box(rng, n, rmax);
        let r = norm(&q);
        if r == 0.0 || r >= rmax {
            continue;
        }
        let speed = (2.0 * (c + 1.0 / r)).sqrt();
        let p = sample::unit_vector(rng, n).into_iter().map(|a| a * speed).collect();
        return Ok((q, p));
    }
}

/// Largest relative residual of `X_K = |q| X_H` over `samples` seeded points of `H^{-1}(c)`.
pub fn vf_identity_residual(n: usize, c: f64, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = sample::rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let (q, p) = sample_kepler_surface(&mut rng, n, c)?;
        worst = worst.max(vf_identity_residual_at(&q, &p, c)?);
    }
    Ok(worst)
}

fn to_sphere(q: &[f64], p: &[f64]) -> Vec<f64> {
    let (u, v) = switch_map(q, p);
    let point = ChartPoint::new(u, v, Chart::North);
    let point = if dot(&point.u, &point.u) > 1.0 {
        point.transition().expect("|u| > 1")
    } else {
        point
    };
    stereographic_lift(&point).x
}

/// Distance from `x` to the shorter great-circle arc from `a` to `b` (all on the unit sphere).
fn arc_distance(x: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab = dot(a, b);
    let Some(e2) = normalized(&b.iter().zip(a).map(|(y, x)| y - ab * x).collect::<Vec<_>>()) else {
        return norm(&sub(x, a));
    };
    let span = (dot(b, &e2)).atan2(ab);
    let (s, t) = (dot(x, a), dot(x, &e2));
    let phi = t.atan2(s);
    let r = (s * s + t * t).sqrt();
    if (0.0..=span).contains(&phi) && r > 0.0 {
        let foot: Vec<f64> = a.iter().zip(&e2).map(|(c1, c2)| (s * c1 + t * c2) / r).collect();
        norm(&sub(x, &foot))
    } else {
        norm(&sub(x, a)).min(norm(&sub(x, b)))
    }
}

/// Hausdorff distance between the base trace of a regularized Kepler orbit
/// with `H = -1/2` (one period, `samples` points) and the great circle of the
/// geodesic through its first point.
pub fn kepler_geodesic_deviation(q: &[f64], p: &[f64], samples: usize) -> Result<f64> {
    let h = kepler_hamiltonian(q, p)?;
    if (h + 0.5).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!("Kepler energy {h} is not -1/2")));
    }
    if samples < 16 {
        return Err(Error::InvalidInput("need at least 16 samples".into()));
    }
    let n = q.len();
    let period = 2.0 * std::f64::consts::PI;
    let times: Vec<f64> = (0..=samples).map(|k| period * k as f64 / samples as f64).collect();
    let mut y0 = q.to_vec();
    y0.extend_from_slice(p);
    let field = KeplerField { n, floor: 1e-9 };
    let states = ode::integrate_grid(&field, &y0, &times, Options::with_tol(1e-13))?;
    let trace: Vec<Vec<f64>> = states.iter().map(|y| to_sphere(&y[..n], &y[n..])).collect();

    let (u, v) = switch_map(q, p);
    let start = stereographic_lift(&ChartPoint::new(u, v, Chart::North));
    let w = start.length();
    // trace -> circle: distance to the plane's unit circle
    let e1 = start.x.clone();
    let e2: Vec<f64> = start.y.iter().map(|a| a / w).collect();
    let mut worst: f64 = 0.0;
    let mut angles = Vec::with_capacity(trace.len());
    for x in &trace {
        let (a, b) = (dot(x, &e1), dot(x, &e2));
        let r = (a * a + b * b).sqrt();
        let foot: Vec<f64> = e1.iter().zip(&e2).map(|(c1, c2)| (a * c1 + b * c2) / r).collect();
        worst = worst.max(norm(&sub(x, &foot)));
        angles.push(b.atan2(a));
    }
    // unwrap; the trace runs once around the circle in the direction of y
    let tau = 2.0 * std::f64::consts::PI;
    for k in 1..angles.len() {
        while angles[k] < angles[k - 1] - std::f64::consts::PI {
            angles[k] += tau;
        }
        while angles[k] > angles[k - 1] + std::f64::consts::PI {
            angles[k] -= tau;
        }
    }
    let total = angles[angles.len() - 1] - angles[0];
    if (total - tau).abs() > 1e-3 || angles.windows(2).any(|s| s[1] < s[0]) {
        return Err(Error::InvalidInput(format!(
            "regularized orbit does not wind once around the geodesic (total angle {total})"
        )));
    }
    // circle -> trace, joining consecutive samples by great-circle arcs
    let m = 4 * samples;
    for k in 0..m {
        let theta = tau * k as f64 / m as f64;
        let g = geodesic_flow(&start, theta / w)?;
        let i = angles.partition_point(|&a| a <= angles[0] + theta).clamp(1, angles.len() - 1);
        let lo = i.saturating_sub(2).max(1);
        let hi = (i + 2).min(angles.len() - 1);
        let d = (lo..=hi)
            .map(|j| arc_distance(&g.x, &trace[j - 1], &trace[j]))
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(d);
    }
    Ok(worst)
}
