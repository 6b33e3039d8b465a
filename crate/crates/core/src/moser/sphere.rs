//! The cotangent bundle of the round sphere, stereographic charts and the
//! geodesic flow.
//!
//! The north chart projects from `(0, ..., 0, 1)`:
//! `sigma(u) = (2u, |u|^2 - 1) / (1 + |u|^2)`; the south chart negates the last
//! coordinate. Covectors on the sphere are identified with tangent vectors by
//! the round metric, and fibers are lifted by `y = (d sigma)^{-T} v`, which in
//! coordinates is `y = ((D/2) v - (u.v) u, +-(u.v))` with `D = 1 + |u|^2`.
//! Then `|y| = (D/2)|v|`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::format::ser_vec;
use crate::linalg::{dot, norm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Chart {
    /// Excludes the north pole `(0, ..., 0, 1)`.
    North,
    /// Excludes the south pole `(0, ..., 0, -1)`.
    South,
}

impl Chart {
    fn sign(self) -> f64 {
        match self {
            Chart::North => 1.0,
            Chart::South => -1.0,
        }
    }

    pub fn other(self) -> Chart {
        match self {
            Chart::North => Chart::South,
            Chart::South => Chart::North,
        }
    }
}

/// A covector `(u, v)` in one of the two stereographic charts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChartPoint {
    #[serde(serialize_with = "ser_vec")]
    pub u: Vec<f64>,
    #[serde(serialize_with = "ser_vec")]
    pub v: Vec<f64>,
    pub chart: Chart,
}

/// A point `x` of the unit sphere with a covector `y`, `x . y = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SphereCotangent {
    #[serde(serialize_with = "ser_vec")]
    pub x: Vec<f64>,
    #[serde(serialize_with = "ser_vec")]
    pub y: Vec<f64>,
}

impl ChartPoint {
    pub fn new(u: Vec<f64>, v: Vec<f64>, chart: Chart) -> Self {
        ChartPoint { u, v, chart }
    }

    /// The same covector in the other chart: `u' = u/|u|^2`,
    /// `v' = |u|^2 v - 2(u.v) u`. Undefined at `u = 0`.
    pub fn transition(&self) -> Result<ChartPoint> {
        let r2 = dot(&self.u, &self.u);
        if r2 == 0.0 {
            return Err(Error::Domain {
                position: self.u.clone(),
                distance: 0.0,
            });
        }
        let uv = dot(&self.u, &self.v);
        Ok(ChartPoint {
            u: self.u.iter().map(|a| a / r2).collect(),
            v: self
                .v
                .iter()
                .zip(&self.u)
                .map(|(b, a)| r2 * b - 2.0 * uv * a)
                .collect(),
            chart: self.chart.other(),
        })
    }
}

/// `sigma(u)` in the given chart.
pub fn stereographic_point(u: &[f64], chart: Chart) -> Vec<f64> {
    let r2 = dot(u, u);
    let d = 1.0 + r2;
    let mut x: Vec<f64> = u.iter().map(|a| 2.0 * a / d).collect();
    x.push(chart.sign() * (r2 - 1.0) / d);
    x
}

/// Cotangent lift of the chart map.
pub fn stereographic_lift(point: &ChartPoint) -> SphereCotangent {
    let (u, v) = (&point.u, &point.v);
    let d = 1.0 + dot(u, u);
    let uv = dot(u, v);
    let mut y: Vec<f64> = v.iter().zip(u).map(|(b, a)| 0.5 * d * b - uv * a).collect();
    y.push(point.chart.sign() * uv);
    SphereCotangent {
        x: stereographic_point(u, point.chart),
        y,
    }
}

/// Inverse of [`stereographic_lift`]; fails at the excluded pole.
pub fn stereographic_projection(point: &SphereCotangent, chart: Chart) -> Result<ChartPoint> {
    let n = point.x.len() - 1;
    let s = chart.sign();
    let denom = 1.0 - s * point.x[n];
    if denom <= 0.0 {
        return Err(Error::Domain {
            position: point.x.clone(),
            distance: 0.0,
        });
    }
    let u: Vec<f64> = point.x[..n].iter().map(|a| a / denom).collect();
    let d = 1.0 + dot(&u, &u);
    let yb = &point.y[..n];
    let uy = dot(&u, yb);
    let tail = s * point.y[n];
    let v = yb
        .iter()
        .zip(&u)
        .map(|(b, a)| 2.0 * b / d - 4.0 * uy * a / (d * d) + 4.0 * tail * a / (d * d))
        .collect();
    Ok(ChartPoint {
        u,
        v,
        chart,
    })
}

/// The chart whose excluded pole is farther from `x`.
pub fn preferred_chart(x: &[f64]) -> Chart {
    if x[x.len() - 1] <= 0.0 {
        Chart::North
    } else {
        Chart::South
    }
}

impl SphereCotangent {
    pub fn dim(&self) -> usize {
        self.x.len() - 1
    }

    /// `(| |x| - 1 |, |x . y|)`.
    pub fn invariant_defects(&self) -> (f64, f64) {
        ((norm(&self.x) - 1.0).abs(), dot(&self.x, &self.y).abs())
    }

    /// Round-metric length `|y|`.
    pub fn length(&self) -> f64 {
        norm(&self.y)
    }
}

/// Geodesic flow of `|y|^2 / 2`: great-circle motion at speed `|y|`.
pub fn geodesic_flow(start: &SphereCotangent, t: f64) -> Result<SphereCotangent> {
    let w = norm(&start.y);
    if w == 0.0 {
        return Err(Error::InvalidInput("geodesic flow needs a nonzero covector".into()));
    }
    let (c, s) = ((w * t).cos(), (w * t).sin());
    Ok(SphereCotangent {
        x: start.x.iter().zip(&start.y).map(|(x, y)| c * x + s * y / w).collect(),
        y: start.x.iter().zip(&start.y).map(|(x, y)| -w * s * x + c * y).collect(),
    })
}
