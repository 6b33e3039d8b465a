//! Lagrange points, critical values of the effective potential and their
//! lifts to rest points of the rotating-frame flow.

use serde::Serialize;

use crate::cr3bp::{effective_potential, potential_gradient, potential_hessian, PhaseState, SystemParams};
use crate::error::{Error, Result};
use crate::format::{ser_f64, ser_vec};
use crate::linalg::norm;

/// Offset from the primaries for the collinear brackets.
pub const BRACKET_OFFSET: f64 = 1e-9;
/// Newton stops once the gradient norm is below this.
pub const NEWTON_TOL: f64 = 1e-13;
pub const NEWTON_MAX_ITER: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum LagrangeLabel {
    L1,
    L2,
    L3,
    L4,
    L5,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LagrangePoint {
    pub label: LagrangeLabel,
    #[serde(serialize_with = "ser_vec")]
    pub position: Vec<f64>,
    #[serde(serialize_with = "ser_f64")]
    pub value: f64,
}

/// Critical set of `U`: five isolated points for `0 < mu < 1`, the unit
/// circle in the `(q1, q2)`-plane for the rotating Kepler problem.
#[derive(Debug, Clone, PartialEq)]
pub enum CriticalSet {
    Points(Vec<LagrangePoint>),
    Circle { radius: f64, value: f64 },
}

impl CriticalSet {
    pub fn points(&self) -> Option<&[LagrangePoint]> {
        match self {
            CriticalSet::Points(p) => Some(p),
            CriticalSet::Circle { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalCircle {
    #[serde(serialize_with = "ser_f64")]
    pub radius: f64,
    #[serde(serialize_with = "ser_f64")]
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalValueReport {
    #[serde(serialize_with = "ser_f64")]
    pub mu: f64,
    #[serde(serialize_with = "ser_f64")]
    pub kappa: f64,
    pub points: Vec<LagrangePoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub critical_circle: Option<CriticalCircle>,
}

impl CriticalValueReport {
    pub fn per_point_values(&self) -> Vec<(LagrangeLabel, f64)> {
        self.points.iter().map(|p| (p.label, p.value)).collect()
    }
}

/// `dU/dq1` along the `e1`-axis.
fn axis_slope(mu: f64, x: f64) -> f64 {
    let de = x - mu;
    let dm = x - mu + 1.0;
    (1.0 - mu) * de / de.abs().powi(3) + mu * dm / dm.abs().powi(3) - x
}

fn axis_curvature(mu: f64, x: f64) -> f64 {
    -2.0 * (1.0 - mu) / (x - mu).abs().powi(3) - 2.0 * mu / (x - mu + 1.0).abs().powi(3) - 1.0
}

/// Root of the axis slope on `[lo, hi]` by bisection, polished with Newton.
fn collinear_root(mu: f64, lo: f64, hi: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let fa = axis_slope(mu, a);
    let fb = axis_slope(mu, b);
    if fa * fb > 0.0 {
        return Err(Error::NoConvergence {
            iterations: 0,
            residual: fa.abs().min(fb.abs()),
        });
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = axis_slope(mu, m);
        if fm == 0.0 {
            a = m;
            b = m;
            break;
        }
        if fm * fa < 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    let mut x = 0.5 * (a + b);
    for _ in 0..NEWTON_MAX_ITER {
        let f = axis_slope(mu, x);
        if f.abs() <= NEWTON_TOL {
            break;
        }
        let next = x - f / axis_curvature(mu, x);
        if !(lo..=hi).contains(&next) || axis_slope(mu, next).abs() >= f.abs() {
            break;
        }
        x = next;
    }
    Ok(x)
}

/// Planar Newton iteration on `grad U = 0`.
fn newton_polish(params: &SystemParams, start: Vec<f64>) -> Result<Vec<f64>> {
    let mut q = start;
    for _ in 0..NEWTON_MAX_ITER {
        let g = potential_gradient(params, &q)?;
        if norm(&g) <= NEWTON_TOL {
            break;
        }
        let h = potential_hessian(params, &q)?;
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        if det == 0.0 {
            break;
        }
        let dx = (h[1][1] * g[0] - h[0][1] * g[1]) / det;
        let dy = (h[0][0] * g[1] - h[1][0] * g[0]) / det;
        let mut next = q.clone();
        next[0] -= dx;
        next[1] -= dy;
        if norm(&potential_gradient(params, &next)?) >= norm(&g) {
            break;
        }
        q = next;
    }
    Ok(q)
}

fn point(params: &SystemParams, label: LagrangeLabel, x: f64, y: f64) -> Result<LagrangePoint> {
    let mut position = vec![0.0; params.n()];
    position[0] = x;
    position[1] = y;
    let value = effective_potential(params, &position)?;
    Ok(LagrangePoint { label, position, value })
}

/// The critical points of the effective potential.
pub fn find_lagrange_points(params: &SystemParams) -> Result<CriticalSet> {
    let mu = params.mu();
    if mu == 0.0 {
        return Ok(CriticalSet::Circle {
            radius: 1.0,
            value: -1.5,
        });
    }
    let d = BRACKET_OFFSET;
    let x1 = collinear_root(mu, mu - 1.0 + d, mu - d)?;
    let x2 = collinear_root(mu, mu + d, mu + 2.0)?;
    let x3 = collinear_root(mu, mu - 3.0, mu - 1.0 - d)?;
    let h = 3f64.sqrt() / 2.0;
    let mut pts = vec![
        point(params, LagrangeLabel::L1, x1, 0.0)?,
        point(params, LagrangeLabel::L2, x2, 0.0)?,
        point(params, LagrangeLabel::L3, x3, 0.0)?,
    ];
    for (label, y) in [(LagrangeLabel::L4, h), (LagrangeLabel::L5, -h)] {
        let mut p = point(params, label, mu - 0.5, y)?;
        let polished = newton_polish(params, p.position.clone())?;
        if polished != p.position {
            p = point(params, label, polished[0], polished[1])?;
        }
        pts.push(p);
    }
    Ok(CriticalSet::Points(pts))
}

/// `kappa = U(L1)` for `0 < mu < 1`, `-3/2` for `mu = 0`.
pub fn first_critical_value(params: &SystemParams) -> Result<CriticalValueReport> {
    match find_lagrange_points(params)? {
        CriticalSet::Circle { radius, value } => Ok(CriticalValueReport {
            mu: params.mu(),
            kappa: value,
            points: Vec::new(),
            critical_circle: Some(CriticalCircle { radius, value }),
        }),
        CriticalSet::Points(points) => Ok(CriticalValueReport {
            mu: params.mu(),
            kappa: points[0].value,
            points,
            critical_circle: None,
        }),
    }
}

/// Shorthand for `first_critical_value(params)?.kappa`.
pub fn kappa(params: &SystemParams) -> Result<f64> {
    Ok(first_critical_value(params)?.kappa)
}

/// The rest point of the flow over a critical point: `p = (-q2, q1, 0, ...)`.
pub fn lift_to_phase(point: &LagrangePoint) -> PhaseState {
    let q = point.position.clone();
    let mut p = vec![0.0; q.len()];
    p[0] = -q[1];
    p[1] = q[0];
    PhaseState::new(q, p)
}
