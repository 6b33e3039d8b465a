//! The twisted `O(2)`-action on discretized loops in the sphere:
//! `(g_* v)(t) = rho^{iota(g)} v(g t)` with `iota(g) = (1 - det g) / 2`.
//!
//! As written the formula composes as a right action,
//! `(g h)_* = h_* o g_*`.

use crate::error::{Error, Result};
use crate::linalg::norm;

use super::involution::rho;

/// Default number of loop samples.
pub const LOOP_SAMPLES: usize = 1024;

/// An element of `O(2)` acting on the parameter circle `R/Z` (angle `2 pi t`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthogonalElement {
    pub matrix: [[f64; 2]; 2],
    pub det: i8,
}

impl OrthogonalElement {
    pub fn identity() -> Self {
        Self::rotation(0.0)
    }

    /// Rotation by `theta`.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        OrthogonalElement {
            matrix: [[c, -s], [s, c]],
            det: 1,
        }
    }

    /// Reflection in the line at angle `theta / 2`; `theta = 0` fixes `t = 0`.
    pub fn reflection(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        OrthogonalElement {
            matrix: [[c, s], [s, -c]],
            det: -1,
        }
    }

    /// Builds an element from a matrix, checking orthogonality to `1e-13`.
    pub fn from_matrix(m: [[f64; 2]; 2]) -> Result<Self> {
        let mmt = [
            [m[0][0] * m[0][0] + m[0][1] * m[0][1], m[0][0] * m[1][0] + m[0][1] * m[1][1]],
            [m[1][0] * m[0][0] + m[1][1] * m[0][1], m[1][0] * m[1][0] + m[1][1] * m[1][1]],
        ];
        let defect = (mmt[0][0] - 1.0).abs().max((mmt[1][1] - 1.0).abs()).max(mmt[0][1].abs());
        if defect > 1e-13 {
            return Err(Error::InvalidInput(format!("matrix is not orthogonal (defect {defect:e})")));
        }
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        Ok(OrthogonalElement {
            matrix: m,
            det: if det > 0.0 { 1 } else { -1 },
        })
    }

    /// `(1 - det) / 2`.
    pub fn iota(&self) -> u8 {
        if self.det < 0 {
            1
        } else {
            0
        }
    }

    /// Matrix product `self * other`.
    pub fn compose(&self, other: &Self) -> Self {
        let (a, b) = (&self.matrix, &other.matrix);
        let mut m = [[0.0; 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        OrthogonalElement {
            matrix: m,
            det: self.det * other.det,
        }
    }

    /// `g t` on `R/Z`, result in `[0, 1)`.
    pub fn act(&self, t: f64) -> f64 {
        let phi = 2.0 * std::f64::consts::PI * t;
        let (s, c) = phi.sin_cos();
        let m = &self.matrix;
        let (x, y) = (m[0][0] * c + m[0][1] * s, m[1][0] * c + m[1][1] * s);
        (y.atan2(x) / (2.0 * std::f64::consts::PI)).rem_euclid(1.0)
    }
}

/// A closed loop sampled at `t_k = k / N`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopOnSphere {
    pub samples: Vec<Vec<f64>>,
}

impl LoopOnSphere {
    /// Checks that every sample has unit norm to `1e-12`.
    pub fn new(samples: Vec<Vec<f64>>) -> Result<Self> {
        if samples.len() < 4 {
            return Err(Error::InvalidInput("a loop needs at least 4 samples".into()));
        }
        let dim = samples[0].len();
        for (k, s) in samples.iter().enumerate() {
            if s.len() != dim || (norm(s) - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidInput(format!("loop sample {k} is not a unit vector of length {dim}")));
            }
        }
        Ok(LoopOnSphere { samples })
    }

    /// Samples `f` at `k / n`, normalizing each value.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> Vec<f64>) -> Result<Self> {
        Self::new(
            (0..n)
                .map(|k| {
                    let v = f(k as f64 / n as f64);
                    let r = norm(&v);
                    v.into_iter().map(|a| a / r).collect()
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Periodic sample index.
    pub fn sample(&self, k: isize) -> &[f64] {
        &self.samples[k.rem_euclid(self.len() as isize) as usize]
    }

    /// Value at parameter `t`: the sample itself on the grid, otherwise cubic
    /// interpolation through the four nearest samples projected back to the sphere.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let n = self.len();
        let s = t.rem_euclid(1.0) * n as f64;
        let k = s.round();
        if (s - k).abs() <= 1e-9 {
            return self.sample(k as isize).to_vec();
        }
        let k = s.floor() as isize;
        let x = s - k as f64;
        // cubic Lagrange weights on nodes -1, 0, 1, 2
        let w = [
            -x * (x - 1.0) * (x - 2.0) / 6.0,
            (x + 1.0) * (x - 1.0) * (x - 2.0) / 2.0,
            -(x + 1.0) * x * (x - 2.0) / 2.0,
            (x + 1.0) * x * (x - 1.0) / 6.0,
        ];
        let dim = self.samples[0].len();
        let mut v = vec![0.0; dim];
        for (j, wj) in w.iter().enumerate() {
            let p = self.sample(k - 1 + j as isize);
            v.iter_mut().zip(p).for_each(|(a, b)| *a += wj * b);
        }
        let r = norm(&v);
        v.into_iter().map(|a| a / r).collect()
    }

    /// Largest pointwise distance to another loop on the same grid.
    pub fn distance(&self, other: &LoopOnSphere) -> f64 {
        self.samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| crate::linalg::dist(a, b))
            .fold(0.0, f64::max)
    }
}

/// `(g_* v)(t) = rho^{iota(g)} v(g t)` on the sample grid.
pub fn twisted_action(g: &OrthogonalElement, lp: &LoopOnSphere) -> LoopOnSphere {
    let n = lp.len();
    let samples = (0..n)
        .map(|k| {
            let v = lp.eval(g.act(k as f64 / n as f64));
            if g.iota() == 1 {
                rho(&v)
            } else {
                v
            }
        })
        .collect();
    LoopOnSphere { samples }
}

/// The untwisted action `v(g t)`, for comparison.
pub fn standard_action(g: &OrthogonalElement, lp: &LoopOnSphere) -> LoopOnSphere {
    let n = lp.len();
    LoopOnSphere {
        samples: (0..n).map(|k| lp.eval(g.act(k as f64 / n as f64))).collect(),
    }
}
