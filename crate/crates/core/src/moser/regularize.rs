//! The regularized energy surface of the restricted problem near the earth.
//!
//! A state `(q, p)` goes to the chart covector `(u, v) = (-p, q - E)` and then
//! onto `T*S^n`. Collisions with the earth (`|p| -> inf`) land on the fiber over
//! the north pole, which is reached through the south chart.

use crate::cr3bp::{PhaseState, SystemParams};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm};

use super::kepler::{cr3bp_shift_map, inverse_cr3bp_shift_map};
use super::sphere::{stereographic_lift, stereographic_projection, Chart, ChartPoint, SphereCotangent};

/// The chart point of a state, in the north chart when `|p| <= 1` and in the
/// south chart otherwise.
pub fn cr3bp_chart_point(params: &SystemParams, state: &PhaseState) -> ChartPoint {
    let (u, v) = cr3bp_shift_map(params, &state.q, &state.p);
    let north = ChartPoint::new(u, v, Chart::North);
    if dot(&north.u, &north.u) <= 1.0 {
        north
    } else {
        north.transition().expect("|u| > 1")
    }
}

/// `state -> T*S^n`, switching charts so the evaluation stays well conditioned.
pub fn regularize_cr3bp_point(params: &SystemParams, state: &PhaseState) -> SphereCotangent {
    stereographic_lift(&cr3bp_chart_point(params, state))
}

/// Back from the sphere; `None` on the collision fiber.
pub fn unregularize(params: &SystemParams, point: &SphereCotangent) -> Option<PhaseState> {
    let north = stereographic_projection(point, Chart::North).ok()?;
    let (q, p) = inverse_cr3bp_shift_map(params, &north.u, &north.v);
    Some(PhaseState::new(q, p))
}

/// Position `q = E + v` of a chart point, with `v` taken in the north chart.
pub fn chart_position(params: &SystemParams, point: &ChartPoint) -> Vec<f64> {
    let v = match point.chart {
        Chart::North => point.v.clone(),
        Chart::South => {
            let r2 = dot(&point.u, &point.u);
            let uv = dot(&point.u, &point.v);
            point.v.iter().zip(&point.u).map(|(b, a)| r2 * b - 2.0 * uv * a).collect()
        }
    };
    v.iter().zip(params.earth()).map(|(a, e)| a + e).collect()
}

/// Defining function `F = |q - E| (H - c)` of the regularized surface,
/// written in chart coordinates so it stays finite on the collision fiber.
/// Negative on the side containing the fiber origin.
pub fn defining_function(params: &SystemParams, c: f64, point: &ChartPoint) -> Result<f64> {
    let mu = params.mu();
    let q = chart_position(params, point);
    let (u, v) = (&point.u, &point.v);
    // rotation term L(q, p) with p = -u is -u1 q2 + u2 q1 in north coordinates;
    // in the south chart u is inverted, which is absorbed by |v| = |u'|^2 |v'|
    let rot = -u[0] * q[1] + u[1] * q[0];
    let moon = if mu > 0.0 {
        let rm = crate::linalg::dist(&q, params.moon());
        if rm == 0.0 {
            return Err(Error::Domain {
                position: q,
                distance: 0.0,
            });
        }
        mu / rm
    } else {
        0.0
    };
    let nv = norm(v);
    Ok(match point.chart {
        Chart::North => nv * (0.5 * dot(u, u) + rot - moon - c) - (1.0 - mu),
        Chart::South => {
            let r = dot(u, u) * nv;
            0.5 * nv + nv * rot - (1.0 - mu) - r * (moon + c)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cr3bp::{hamiltonian, sample_energy_surface};
    use crate::linalg::{dist, max_abs_diff};
    use crate::moser::kepler::switch_map;

    #[test]
    fn both_charts_agree() {
        let params = SystemParams::planar(0.2).unwrap();
        let state = sample_energy_surface(&params, -1.8, &[0.5, 0.1], &[0.6, 0.8]).unwrap();
        let (u, v) = cr3bp_shift_map(&params, &state.q, &state.p);
        let north = ChartPoint::new(u, v, Chart::North);
        let south = north.transition().unwrap();
        let (a, b) = (stereographic_lift(&north), stereographic_lift(&south));
        assert!(max_abs_diff(&a.x, &b.x) < 1e-10 && max_abs_diff(&a.y, &b.y) < 1e-10);
        let back = unregularize(&params, &a).unwrap();
        assert!(max_abs_diff(&back.q, &state.q) < 1e-10 && max_abs_diff(&back.p, &state.p) < 1e-10);
        let fa = defining_function(&params, -1.8, &north).unwrap();
        let fb = defining_function(&params, -1.8, &south).unwrap();
        assert!(fa.abs() < 1e-12 && fb.abs() < 1e-12, "{fa} {fb}");
    }

    #[test]
    fn zero_velocity_state() {
        let params = SystemParams::planar(0.2).unwrap();
        let q = vec![0.5, 0.2];
        let u = crate::cr3bp::effective_potential(&params, &q).unwrap();
        let s = sample_energy_surface(&params, u, &q, &[1.0, 0.0]).unwrap();
        let x = regularize_cr3bp_point(&params, &s);
        let (a, b) = x.invariant_defects();
        assert!(a < 1e-12 && b < 1e-12);
    }

    #[test]
    fn collision_limit_is_north_pole() {
        let params = SystemParams::planar(0.1).unwrap();
        let c = -1.9;
        let mut last = f64::INFINITY;
        for k in 1..8 {
            let r = 10f64.powi(-k);
            let q: Vec<f64> = params.earth().iter().zip([0.6, 0.8]).map(|(e, d)| e + r * d).collect();
            let s = sample_energy_surface(&params, c, &q, &[0.0, 1.0]).unwrap();
            let x = regularize_cr3bp_point(&params, &s);
            let gap = dist(&x.x, &[0.0, 0.0, 1.0]);
            assert!(gap < last);
            last = gap;
            let f = defining_function(&params, c, &cr3bp_chart_point(&params, &s)).unwrap();
            assert!(f.abs() < 1e-9, "{f}");
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn collision_fiber_circle() {
        let params = SystemParams::planar(0.3).unwrap();
        let p = ChartPoint::new(vec![0.0, 0.0], vec![1.4, 0.0], Chart::South);
        assert!(defining_function(&params, -2.0, &p).unwrap().abs() < 1e-15);
    }

    #[test]
    fn massless_moon_is_kepler_composition() {
        let params = SystemParams::planar(0.0).unwrap();
        let s = PhaseState::new(vec![0.3, -0.2], vec![0.4, 0.5]);
        let (u, v) = switch_map(&s.q, &s.p);
        let a = stereographic_lift(&ChartPoint::new(u, v, Chart::North));
        let b = regularize_cr3bp_point(&params, &s);
        assert!(max_abs_diff(&a.x, &b.x) < 1e-15 && max_abs_diff(&a.y, &b.y) < 1e-15);
        // F = |q|(H - c) term by term
        let c = -1.7;
        let f = defining_function(&params, c, &cr3bp_chart_point(&params, &s)).unwrap();
        let h = hamiltonian(&params, &s).unwrap();
        assert!((f - norm(&s.q) * (h - c)).abs() < 1e-14);
    }
}
