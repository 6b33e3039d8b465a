//! Fiberwise checks of the regularized earth component: every ray from the
//! fiber origin crosses it once (starshape), and for the rotating Kepler
//! problem the fiber slices are convex.

use serde::Serialize;

use crate::cr3bp::{effective_potential, SystemParams};
use crate::equilibria::kappa;
use crate::error::{Error, Result};
use crate::format::{ser_f64, ser_vec};
use crate::hill::{classify_components, GridSpec, HillGrid};
use crate::linalg::{dot, norm};
use crate::par::{self, Execution};
use crate::sample;

use super::regularize::{chart_position, defining_function};
use super::sphere::{preferred_chart, stereographic_lift, stereographic_projection, ChartPoint, SphereCotangent};

/// Points per ray in the geometric scan.
pub const SCAN_POINTS: usize = 4096;
/// Bisection stops below this bracket width.
pub const BISECTION_TOL: f64 = 1e-12;
/// Crossings closer than this are one (tangential) crossing.
pub const MERGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct StarshapeOptions {
    pub base_samples: usize,
    pub ray_samples: usize,
    pub seed: u64,
    pub scan_points: usize,
    /// Resolution of the Hill grid used to decide earth-component membership.
    pub grid_resolution: usize,
    /// Skip the `c < kappa` precondition (for negative controls).
    pub allow_above_kappa: bool,
    pub execution: Execution,
}

impl Default for StarshapeOptions {
    fn default() -> Self {
        StarshapeOptions {
            base_samples: 200,
            ray_samples: 64,
            seed: 0,
            scan_points: SCAN_POINTS,
            grid_resolution: 800,
            allow_above_kappa: false,
            execution: Execution::available(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RayFailure {
    #[serde(serialize_with = "ser_vec")]
    pub base: Vec<f64>,
    /// Unit covector along the ray.
    #[serde(serialize_with = "ser_vec")]
    pub ray: Vec<f64>,
    pub crossings: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct StarshapeReport {
    pub pass: bool,
    pub checked: usize,
    pub failures: Vec<RayFailure>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Base points: the two poles, then seeded uniform samples.
fn base_points(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = sample::rng(seed);
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let x = match k {
            0 | 1 => {
                let mut p = vec![0.0; n + 1];
                p[n] = if k == 0 { 1.0 } else { -1.0 };
                p
            }
            _ => sample::unit_vector(&mut rng, n + 1),
        };
        out.push(x);
    }
    out
}

/// Ray directions in chart fiber coordinates: evenly spaced (half-step offset)
/// in the plane, seeded uniform otherwise.
fn ray_directions(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    if n == 2 {
        return (0..count)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect();
    }
    let mut rng = sample::rng(seed ^ 0x9e37_79b9_7f4a_7c15);
    (0..count).map(|_| sample::unit_vector(&mut rng, n)).collect()
}

fn chart_base(x: &[f64]) -> ChartPoint {
    let chart = preferred_chart(x);
    let sc = SphereCotangent {
        x: x.to_vec(),
        y: vec![0.0; x.len()],
    };
    stereographic_projection(&sc, chart).expect("preferred chart excludes the far pole")
}

/// Scan range along a ray: large enough that every crossing whose position
/// stays within `reach` of the earth is included.
fn ray_range(base: &ChartPoint, reach: f64) -> (f64, f64) {
    let hi = match base.chart {
        super::sphere::Chart::North => reach,
        super::sphere::Chart::South => {
            let r2 = dot(&base.u, &base.u);
            if r2 > 0.0 {
                (reach / r2).min(1e4)
            } else {
                1e4
            }
        }
    };
    (hi * 1e-10, hi)
}

struct Ray<'a> {
    params: &'a SystemParams,
    c: f64,
    base: &'a ChartPoint,
    dir: &'a [f64],
}

impl Ray<'_> {
    fn point(&self, r: f64) -> ChartPoint {
        ChartPoint::new(self.base.u.clone(), self.dir.iter().map(|d| r * d).collect(), self.base.chart)
    }

    /// `F` along the ray; the moon singularity counts as inside (`F -> -inf`).
    fn f(&self, r: f64) -> f64 {
        defining_function(self.params, self.c, &self.point(r)).unwrap_or(f64::NEG_INFINITY)
    }

    fn bisect(&self, mut a: f64, mut b: f64) -> f64 {
        let fa = self.f(a);
        for _ in 0..200 {
            if b - a <= BISECTION_TOL {
                break;
            }
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if (self.f(m) < 0.0) == (fa < 0.0) {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    /// All sign changes of `F` on the geometric grid, bisected and merged.
    fn crossings(&self, lo: f64, hi: f64, points: usize) -> Vec<f64> {
        let ratio = (hi / lo).powf(1.0 / (points - 1) as f64);
        let mut out: Vec<f64> = Vec::new();
        let mut r0 = lo;
        let mut f0 = self.f(r0);
        for k in 1..points {
            let r1 = if k == points - 1 { hi } else { lo * ratio.powi(k as i32) };
            let f1 = self.f(r1);
            if (f0 < 0.0) != (f1 < 0.0) {
                let r = self.bisect(r0, r1);
                if out.last().is_none_or(|&last| r - last > MERGE_TOL) {
                    out.push(r);
                }
            }
            r0 = r1;
            f0 = f1;
        }
        out
    }
}

/// Decides whether a position lies in the earth component of the Hill region.
enum EarthTest {
    Grid(HillGrid),
    /// Segment from the earth stays in `{U <= c}` (used off the plane).
    Segment,
}

impl EarthTest {
    fn contains(&self, params: &SystemParams, c: f64, q: &[f64]) -> bool {
        match self {
            EarthTest::Grid(g) => g.earth_component.is_some() && g.component_near(q) == g.earth_component,
            EarthTest::Segment => {
                let e = params.earth();
                (1..=256).all(|k| {
                    let t = k as f64 / 256.0;
                    let p: Vec<f64> = e.iter().zip(q).map(|(a, b)| a + t * (b - a)).collect();
                    effective_potential(params, &p).map_or(true, |u| u <= c)
                })
            }
        }
    }
}

fn check_energy(params: &SystemParams, c: f64, allow_above: bool) -> Result<f64> {
    let k = kappa(params)?;
    if !allow_above && c >= k {
        return Err(Error::InvalidInput(format!("energy c = {c} must lie below the first critical value {k}")));
    }
    Ok(k)
}

/// Counts crossings of the regularized earth component along every sampled
/// fiber ray. Passes iff each ray crosses exactly once.
pub fn starshape_check(params: &SystemParams, c: f64, opts: &StarshapeOptions) -> Result<StarshapeReport> {
    check_energy(params, c, opts.allow_above_kappa)?;
    if opts.base_samples == 0 || opts.ray_samples == 0 || opts.scan_points < 2 {
        return Err(Error::InvalidInput("sample counts must be positive".into()));
    }
    let n = params.n();
    let mut warnings = Vec::new();
    let (test, reach) = if n == 2 {
        let spec = GridSpec::square(2.0, opts.grid_resolution);
        let grid = classify_components(params, c, spec)?;
        (EarthTest::Grid(grid), 4.0 * 2f64.sqrt())
    } else {
        warnings.push(format!(
            "n = {n}: earth-component membership uses segment visibility from the earth, not a grid"
        ));
        (EarthTest::Segment, 4.0)
    };
    let bases = base_points(n, opts.base_samples, opts.seed);
    let rays = ray_directions(n, opts.ray_samples, opts.seed);
    let per_base = par::map_slice(opts.execution, &bases, |x| {
        let base = chart_base(x);
        let (lo, hi) = ray_range(&base, reach);
        let mut fails = Vec::new();
        for d in &rays {
            let ray = Ray {
                params,
                c,
                base: &base,
                dir: d,
            };
            let count = ray
                .crossings(lo, hi, opts.scan_points)
                .into_iter()
                .filter(|&r| test.contains(params, c, &chart_position(params, &ray.point(r))))
                .count();
            if count != 1 {
                let lifted = stereographic_lift(&ChartPoint::new(base.u.clone(), d.clone(), base.chart));
                let w = norm(&lifted.y);
                fails.push(RayFailure {
                    base: x.clone(),
                    ray: lifted.y.iter().map(|a| a / w).collect(),
                    crossings: count,
                });
            }
        }
        fails
    });
    let failures: Vec<RayFailure> = per_base.into_iter().flatten().collect();
    Ok(StarshapeReport {
        pass: failures.is_empty(),
        checked: bases.len() * rays.len(),
        failures,
        warnings,
    })
}

#[derive(Debug, Clone)]
pub struct ConvexityOptions {
    pub base_samples: usize,
    pub ray_samples: usize,
    pub seed: u64,
    /// Finite-difference step relative to the fiber radius.
    pub relative_step: f64,
    pub execution: Execution,
}

impl Default for ConvexityOptions {
    fn default() -> Self {
        ConvexityOptions {
            base_samples: 100,
            ray_samples: 32,
            seed: 0,
            relative_step: 1e-4,
            execution: Execution::available(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityWitness {
    #[serde(serialize_with = "ser_vec")]
    pub base: Vec<f64>,
    #[serde(serialize_with = "ser_vec")]
    pub ray: Vec<f64>,
    #[serde(serialize_with = "ser_f64")]
    pub curvature: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvexityReport {
    pub pass: bool,
    pub checked: usize,
    /// Smallest normalized second fundamental form eigenvalue seen.
    #[serde(serialize_with = "ser_f64")]
    pub min_curvature: f64,
    /// Largest `|H_ij - H_ji| / max |H|` of the finite-difference Hessians.
    #[serde(serialize_with = "ser_f64")]
    pub max_symmetry_residual: f64,
    pub failures: Vec<ConvexityWitness>,
}

/// Smallest eigenvalue of a symmetric matrix (cyclic Jacobi).
fn min_eigenvalue(mut a: Vec<Vec<f64>>) -> f64 {
    let m = a.len();
    for _ in 0..100 {
        let off: f64 = (0..m).flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..m {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..m {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..m).map(|i| a[i][i]).fold(f64::INFINITY, f64::min)
}

/// Orthonormal basis of the complement of `g`.
fn tangent_basis(g: &[f64]) -> Vec<Vec<f64>> {
    let n = g.len();
    let g0: Vec<f64> = g.iter().map(|a| a / norm(g)).collect();
    let mut basis: Vec<Vec<f64>> = vec![g0];
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        for b in &basis {
            let d = dot(&e, b);
            e.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
        }
        let l = norm(&e);
        if l > 1e-8 {
            basis.push(e.into_iter().map(|x| x / l).collect());
        }
        if basis.len() == n {
            break;
        }
    }
    basis.remove(0);
    basis
}

struct FiberGeometry {
    curvature: f64,
    symmetry: f64,
}

/// Curvature of the fiber slice `{F(u, .) = 0}` at `w`, from finite
/// differences of `F` in the fiber.
fn fiber_geometry(f: &dyn Fn(&[f64]) -> f64, w: &[f64], h: f64) -> FiberGeometry {
    let n = w.len();
    let grad = |x: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|j| {
                let mut a = x.to_vec();
                let mut b = x.to_vec();
                a[j] += h;
                b[j] -= h;
                (f(&a) - f(&b)) / (2.0 * h)
            })
            .collect()
    };
    let g = grad(w);
    // outer step differs from the inner one so the symmetry check is not trivial
    let ho = 1.5 * h;
    let mut hess = vec![vec![0.0; n]; n];
    for i in 0..n {
        let mut a = w.to_vec();
        let mut b = w.to_vec();
        a[i] += ho;
        b[i] -= ho;
        let (ga, gb) = (grad(&a), grad(&b));
        for j in 0..n {
            hess[i][j] = (ga[j] - gb[j]) / (2.0 * ho);
        }
    }
    let scale = hess.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut symmetry: f64 = 0.0;
    for i in 0..n {
        for j in 0..i {
            symmetry = symmetry.max((hess[i][j] - hess[j][i]).abs() / scale);
        }
    }
    let basis = tangent_basis(&g);
    let gn = norm(&g);
    let proj: Vec<Vec<f64>> = basis
        .iter()
        .map(|bi| {
            basis
                .iter()
                .map(|bj| {
                    let mut s = 0.0;
                    for k in 0..n {
                        for l in 0..n {
                            s += bi[k] * 0.5 * (hess[k][l] + hess[l][k]) * bj[l];
                        }
                    }
                    s / gn
                })
                .collect()
        })
        .collect();
    FiberGeometry {
        curvature: min_eigenvalue(proj),
        symmetry,
    }
}

/// Fiberwise convexity of the regularized surface of the rotating Kepler
/// problem: at the crossing of each sampled ray, the fiber slice must curve
/// toward the origin with a positive eigenvalue floor.
pub fn fiber_convexity_check(params: &SystemParams, c: f64, opts: &ConvexityOptions) -> Result<ConvexityReport> {
    if params.mu() != 0.0 {
        return Err(Error::InvalidInput("fiber convexity is checked for the rotating Kepler problem (mu = 0) only".into()));
    }
    if c >= -1.5 {
        return Err(Error::InvalidInput(format!("energy c = {c} must lie below -3/2")));
    }
    if opts.base_samples == 0 || opts.ray_samples == 0 {
        return Err(Error::InvalidInput("sample counts must be positive".into()));
    }
    let n = params.n();
    let bases = base_points(n, opts.base_samples, opts.seed);
    let rays = ray_directions(n, opts.ray_samples, opts.seed);
    let results = par::map_slice(opts.execution, &bases, |x| -> Result<Vec<(FiberGeometry, Vec<f64>)>> {
        let base = chart_base(x);
        let (lo, hi) = ray_range(&base, 4.0);
        let mut out = Vec::new();
        for d in &rays {
            let ray = Ray {
                params,
                c,
                base: &base,
                dir: d,
            };
            let first = *ray.crossings(lo, hi, SCAN_POINTS).first().ok_or(Error::NoConvergence {
                iterations: SCAN_POINTS,
                residual: ray.f(hi),
            })?;
            let w: Vec<f64> = d.iter().map(|a| first * a).collect();
            let f = |v: &[f64]| {
                defining_function(params, c, &ChartPoint::new(base.u.clone(), v.to_vec(), base.chart))
                    .unwrap_or(f64::NAN)
            };
            out.push((fiber_geometry(&f, &w, opts.relative_step * first), d.clone()));
        }
        Ok(out)
    });
    let mut report = ConvexityReport {
        pass: true,
        checked: 0,
        min_curvature: f64::INFINITY,
        max_symmetry_residual: 0.0,
        failures: Vec::new(),
    };
    for (x, res) in bases.iter().zip(results) {
        let base = chart_base(x);
        for (geo, d) in res? {
            report.checked += 1;
            report.min_curvature = report.min_curvature.min(geo.curvature);
            report.max_symmetry_residual = report.max_symmetry_residual.max(geo.symmetry);
            if !(geo.curvature > 0.0) {
                let lifted = stereographic_lift(&ChartPoint::new(base.u.clone(), d, base.chart));
                let w = norm(&lifted.y);
                report.failures.push(ConvexityWitness {
                    base: x.clone(),
                    ray: lifted.y.iter().map(|a| a / w).collect(),
                    curvature: geo.curvature,
                });
            }
        }
    }
    report.pass = report.failures.is_empty();
    Ok(report)
}
