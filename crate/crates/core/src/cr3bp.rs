//! Rotating-frame mechanics of the circular restricted three-body problem.
//!
//! Units: total mass 1, primary separation 1, angular speed 1. The earth
//! (mass `1 - mu`) sits at `mu * e1`, the moon (mass `mu`) at `-(1 - mu) * e1`.
//! Vector fields use `X_H = (dH/dp, -dH/dq)` for `omega = sum dq_i ^ dp_i`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::format::{csv_row, ser_f64, ser_vec};
use crate::linalg::{dist, dot, norm};
use crate::ode::{self, Options, VectorField};

/// Default distance to a primary below which integration stops.
pub const DEFAULT_COLLISION_FLOOR: f64 = 1e-6;

/// Dimension and mass ratio of the problem, with the derived primary positions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemParams {
    n: usize,
    #[serde(serialize_with = "ser_f64")]
    mu: f64,
    #[serde(serialize_with = "ser_vec")]
    earth: Vec<f64>,
    #[serde(serialize_with = "ser_vec")]
    moon: Vec<f64>,
    #[serde(skip)]
    collision_floor: f64,
}

impl SystemParams {
    pub fn new(n: usize, mu: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!("dimension n = {n} must be at least 2")));
        }
        if !(0.0..1.0).contains(&mu) {
            return Err(Error::InvalidInput(format!("mass ratio mu = {mu} must lie in [0, 1)")));
        }
        let mut earth = vec![0.0; n];
        let mut moon = vec![0.0; n];
        earth[0] = mu;
        moon[0] = mu - 1.0;
        Ok(SystemParams {
            n,
            mu,
            earth,
            moon,
            collision_floor: DEFAULT_COLLISION_FLOOR,
        })
    }

    pub fn planar(mu: f64) -> Result<Self> {
        Self::new(2, mu)
    }

    pub fn with_collision_floor(mut self, floor: f64) -> Self {
        self.collision_floor = floor;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn earth(&self) -> &[f64] {
        &self.earth
    }

    pub fn moon(&self) -> &[f64] {
        &self.moon
    }

    pub fn collision_floor(&self) -> f64 {
        self.collision_floor
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.n {
            return Err(Error::InvalidInput(format!(
                "vector of length {} in dimension {}",
                v.len(),
                self.n
            )));
        }
        Ok(())
    }

    /// Distances to earth and moon; domain error at a massive primary.
    fn distances(&self, q: &[f64]) -> Result<(f64, f64)> {
        self.check_dim(q)?;
        let re = dist(q, &self.earth);
        let rm = dist(q, &self.moon);
        if re == 0.0 {
            return Err(Error::Domain {
                position: q.to_vec(),
                distance: re,
            });
        }
        if rm == 0.0 && self.mu > 0.0 {
            return Err(Error::Domain {
                position: q.to_vec(),
                distance: rm,
            });
        }
        Ok((re, rm))
    }

    /// Gravitational part `-(1-mu)/|q-E| - mu/|q-M|`.
    fn gravity(&self, re: f64, rm: f64) -> f64 {
        let moon = if self.mu > 0.0 { self.mu / rm } else { 0.0 };
        -(1.0 - self.mu) / re - moon
    }
}

/// A point `(q, p)` of phase space in rotating coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseState {
    #[serde(serialize_with = "ser_vec")]
    pub q: Vec<f64>,
    #[serde(serialize_with = "ser_vec")]
    pub p: Vec<f64>,
}

impl PhaseState {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Self {
        assert_eq!(q.len(), p.len(), "position and momentum dimensions differ");
        PhaseState { q, p }
    }

    /// Splits a flat `(q, p)` vector of even length.
    pub fn from_flat(y: &[f64]) -> Self {
        let n = y.len() / 2;
        PhaseState {
            q: y[..n].to_vec(),
            p: y[n..].to_vec(),
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut y = self.q.clone();
        y.extend_from_slice(&self.p);
        y
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }
}

/// `U(q) = -(1-mu)/|q-E| - mu/|q-M| - (q1^2 + q2^2)/2`.
pub fn effective_potential(params: &SystemParams, q: &[f64]) -> Result<f64> {
    let (re, rm) = params.distances(q)?;
    Ok(params.gravity(re, rm) - 0.5 * (q[0] * q[0] + q[1] * q[1]))
}

/// Gradient of the effective potential.
pub fn potential_gradient(params: &SystemParams, q: &[f64]) -> Result<Vec<f64>> {
    let (re, rm) = params.distances(q)?;
    let me = (1.0 - params.mu) / (re * re * re);
    let mm = if params.mu > 0.0 { params.mu / (rm * rm * rm) } else { 0.0 };
    let mut g: Vec<f64> = (0..params.n)
        .map(|i| me * (q[i] - params.earth[i]) + mm * (q[i] - params.moon[i]))
        .collect();
    g[0] -= q[0];
    g[1] -= q[1];
    Ok(g)
}

/// Hessian of the effective potential, row-major `n x n`.
pub fn potential_hessian(params: &SystemParams, q: &[f64]) -> Result<Vec<Vec<f64>>> {
    let (re, rm) = params.distances(q)?;
    let n = params.n;
    let mut h = vec![vec![0.0; n]; n];
    let mut add = |mass: f64, r: f64, center: &[f64]| {
        if mass == 0.0 {
            return;
        }
        let r3 = r * r * r;
        let r5 = r3 * r * r;
        for i in 0..n {
            for j in 0..n {
                let di = q[i] - center[i];
                let dj = q[j] - center[j];
                let delta = if i == j { 1.0 } else { 0.0 };
                h[i][j] += mass * (delta / r3 - 3.0 * di * dj / r5);
            }
        }
    };
    add(1.0 - params.mu, re, &params.earth);
    add(params.mu, rm, &params.moon);
    h[0][0] -= 1.0;
    h[1][1] -= 1.0;
    Ok(h)
}

/// `L = p1 q2 - p2 q1`.
pub fn angular_momentum(state: &PhaseState) -> f64 {
    state.p[0] * state.q[1] - state.p[1] * state.q[0]
}

/// Rotating-frame Hamiltonian `|p|^2/2 - (1-mu)/|q-E| - mu/|q-M| + L(q, p)`.
pub fn hamiltonian(params: &SystemParams, state: &PhaseState) -> Result<f64> {
    params.check_dim(&state.p)?;
    let (re, rm) = params.distances(&state.q)?;
    Ok(0.5 * dot(&state.p, &state.p) + params.gravity(re, rm) + angular_momentum(state))
}

/// The same Hamiltonian written as kinetic energy of `p + (q2, -q1, 0, ...)`
/// plus the effective potential.
pub fn hamiltonian_rewritten(params: &SystemParams, state: &PhaseState) -> Result<f64> {
    params.check_dim(&state.p)?;
    let (q, p) = (&state.q, &state.p);
    let a = p[0] + q[1];
    let b = p[1] - q[0];
    let rest: f64 = p[2..].iter().map(|x| x * x).sum();
    Ok(0.5 * (a * a + b * b + rest) + effective_potential(params, q)?)
}

/// `(dH/dq, dH/dp)` from the analytic partial derivatives.
pub fn hamiltonian_gradient(params: &SystemParams, state: &PhaseState) -> Result<(Vec<f64>, Vec<f64>)> {
    params.check_dim(&state.p)?;
    let (re, rm) = params.distances(&state.q)?;
    let (q, p) = (&state.q, &state.p);
    let me = (1.0 - params.mu) / (re * re * re);
    let mm = if params.mu > 0.0 { params.mu / (rm * rm * rm) } else { 0.0 };
    let mut dq: Vec<f64> = (0..params.n)
        .map(|i| me * (q[i] - params.earth[i]) + mm * (q[i] - params.moon[i]))
        .collect();
    dq[0] -= p[1];
    dq[1] += p[0];
    let mut dp = p.clone();
    dp[0] += q[1];
    dp[1] -= q[0];
    Ok((dq, dp))
}

/// `X_H = (dH/dp, -dH/dq)` as a flat `2n` vector.
pub fn hamiltonian_vector_field(params: &SystemParams, state: &PhaseState) -> Result<Vec<f64>> {
    let (dq, dp) = hamiltonian_gradient(params, state)?;
    let mut x = dp;
    x.extend(dq.iter().map(|v| -v));
    Ok(x)
}

/// The CR3BP flow as an ODE on flat `(q, p)` vectors.
pub struct Cr3bpField<'a> {
    params: &'a SystemParams,
}

impl<'a> Cr3bpField<'a> {
    pub fn new(params: &'a SystemParams) -> Self {
        Cr3bpField { params }
    }
}

impl VectorField for Cr3bpField<'_> {
    fn dim(&self) -> usize {
        2 * self.params.n
    }

    fn eval(&self, y: &[f64], dy: &mut [f64]) {
        let n = self.params.n;
        let (q, p) = y.split_at(n);
        let mu = self.params.mu;
        let mut re2 = 0.0;
        let mut rm2 = 0.0;
        for i in 0..n {
            re2 += (q[i] - self.params.earth[i]).powi(2);
            rm2 += (q[i] - self.params.moon[i]).powi(2);
        }
        let re3 = re2 * re2.sqrt();
        let rm3 = rm2 * rm2.sqrt();
        let me = (1.0 - mu) / re3;
        let mm = if mu > 0.0 { mu / rm3 } else { 0.0 };
        for i in 0..n {
            dy[i] = p[i];
            dy[n + i] = -(me * (q[i] - self.params.earth[i]) + mm * (q[i] - self.params.moon[i]));
        }
        dy[0] += q[1];
        dy[1] -= q[0];
        dy[n] += p[1];
        dy[n + 1] -= p[0];
    }

    fn guard(&self, y: &[f64]) -> Option<(f64, f64)> {
        let q = &y[..self.params.n];
        let floor = self.params.collision_floor;
        let re = dist(q, &self.params.earth);
        if re < floor {
            return Some((re, floor));
        }
        if self.params.mu > 0.0 {
            let rm = dist(q, &self.params.moon);
            if rm < floor {
                return Some((rm, floor));
            }
        }
        None
    }
}

/// Time-ordered samples of a solution with its integrator tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<(f64, PhaseState)>,
    pub tol: f64,
}

impl Trajectory {
    pub fn start(&self) -> &PhaseState {
        &self.samples[0].1
    }

    pub fn end(&self) -> &PhaseState {
        &self.samples.last().expect("non-empty trajectory").1
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|(t, _)| *t)
    }

    /// `max_i |H(state_i) - H(state_0)|`.
    pub fn jacobi_drift(&self, params: &SystemParams) -> Result<f64> {
        let h0 = hamiltonian(params, self.start())?;
        let mut worst: f64 = 0.0;
        for (_, s) in &self.samples {
            worst = worst.max((hamiltonian(params, s)? - h0).abs());
        }
        Ok(worst)
    }

    /// CSV with header `t,q1..qn,p1..pn,H`, 17 significant digits.
    pub fn to_csv(&self, params: &SystemParams) -> Result<String> {
        let n = params.n;
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("q{i}")));
        header.extend((1..=n).map(|i| format!("p{i}")));
        header.push("H".into());
        let mut out = header.join(",");
        out.push('\n');
        for (t, s) in &self.samples {
            let mut row = vec![*t];
            row.extend_from_slice(&s.q);
            row.extend_from_slice(&s.p);
            row.push(hamiltonian(params, s)?);
            out.push_str(&csv_row(&row));
            out.push('\n');
        }
        Ok(out)
    }
}

/// Adaptive DOP853 integration of `dw/dt = X_H(w)` from `t = 0` to `t_end`.
///
/// Fails with [`Error::CollisionApproach`] when the satellite comes closer
/// to a massive primary than `params.collision_floor()`; the regularized flow
/// should be used there instead.
pub fn integrate(params: &SystemParams, start: &PhaseState, t_end: f64, tol: f64) -> Result<Trajectory> {
    integrate_with(params, start, t_end, Options::with_tol(tol).per_unit_step())
}

pub fn integrate_with(params: &SystemParams, start: &PhaseState, t_end: f64, opts: Options) -> Result<Trajectory> {
    if !(opts.rtol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance {} must be positive", opts.rtol)));
    }
    params.check_dim(&start.q)?;
    params.check_dim(&start.p)?;
    params.distances(&start.q)?;
    let field = Cr3bpField::new(params);
    if let Some((distance, floor)) = field.guard(&start.to_flat()) {
        return Err(Error::CollisionApproach { t: 0.0, distance, floor });
    }
    let raw = ode::integrate(&field, &start.to_flat(), t_end, opts)?;
    let mut samples: Vec<(f64, PhaseState)> = raw
        .into_iter()
        .map(|(t, y)| (t, PhaseState::from_flat(&y)))
        .collect();
    if t_end < 0.0 {
        samples.reverse();
    }
    Ok(Trajectory { samples, tol: opts.rtol })
}

/// A point on `H = c` over `q`, moving along `direction` relative to the
/// zero-velocity momentum `(-q2, q1, 0, ...)`.
pub fn sample_energy_surface(params: &SystemParams, c: f64, q: &[f64], direction: &[f64]) -> Result<PhaseState> {
    params.check_dim(direction)?;
    let u = effective_potential(params, q)?;
    if u > c {
        return Err(Error::EmptyFiber { potential: u, energy: c });
    }
    let len = norm(direction);
    if len == 0.0 {
        return Err(Error::InvalidInput("direction must be non-zero".into()));
    }
    let speed = (2.0 * (c - u)).sqrt();
    let mut p: Vec<f64> = direction.iter().map(|d| speed * d / len).collect();
    p[0] -= q[1];
    p[1] += q[0];
    Ok(PhaseState::new(q.to_vec(), p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(q: &[f64], p: &[f64]) -> PhaseState {
        PhaseState::new(q.to_vec(), p.to_vec())
    }

    #[test]
    fn params_invariants() {
        let p = SystemParams::new(3, 0.3).unwrap();
        assert_eq!(p.earth(), &[0.3, 0.0, 0.0]);
        assert!((dist(p.earth(), p.moon()) - 1.0).abs() < 1e-15);
        assert!(SystemParams::new(1, 0.1).is_err());
        assert!(SystemParams::new(2, 1.0).is_err());
        assert!(SystemParams::new(2, -0.1).is_err());
    }

    #[test]
    fn potential_examples() {
        let p0 = SystemParams::planar(0.0).unwrap();
        assert!((effective_potential(&p0, &[1.0, 0.0]).unwrap() + 1.5).abs() < 1e-15);
        assert!((effective_potential(&p0, &[2.0, 0.0]).unwrap() + 2.5).abs() < 1e-15);
        let ph = SystemParams::planar(0.5).unwrap();
        assert!((effective_potential(&ph, &[0.0, 0.0]).unwrap() + 2.0).abs() < 1e-15);
        assert!(matches!(effective_potential(&ph, &[0.5, 0.0]), Err(Error::Domain { .. })));
        assert!(matches!(effective_potential(&ph, &[-0.5, 0.0]), Err(Error::Domain { .. })));
        // a massless moon is not a singularity
        assert!(effective_potential(&p0, &[-1.0, 0.0]).is_ok());
    }

    #[test]
    fn angular_momentum_examples() {
        assert_eq!(angular_momentum(&st(&[1.0, 0.0], &[0.0, 1.0])), -1.0);
        assert_eq!(angular_momentum(&st(&[0.0, 1.0], &[1.0, 0.0])), 1.0);
        assert_eq!(angular_momentum(&st(&[0.3, -2.0], &[0.0, 0.0])), 0.0);
    }

    #[test]
    fn hamiltonian_examples() {
        let p0 = SystemParams::planar(0.0).unwrap();
        assert!((hamiltonian(&p0, &st(&[1.0, 0.0], &[0.0, 1.0])).unwrap() + 1.5).abs() < 1e-15);
        assert!((hamiltonian(&p0, &st(&[0.16, 0.0], &[0.0, -2.5])).unwrap() + 2.725).abs() < 1e-14);
        let ph = SystemParams::planar(0.5).unwrap();
        // both distances are sqrt(1/2) and the rotation term vanishes at p = 0
        let h = hamiltonian(&ph, &st(&[0.0, 0.5], &[0.0, 0.0])).unwrap();
        assert!((h + 2f64.sqrt()).abs() < 1e-14);
        let u = effective_potential(&ph, &[0.0, 0.5]).unwrap();
        assert!((u + 2f64.sqrt() + 0.125).abs() < 1e-14);
    }

    #[test]
    fn vector_field_examples() {
        let p0 = SystemParams::planar(0.0).unwrap();
        let x = hamiltonian_vector_field(&p0, &st(&[1.0, 0.0], &[0.0, 1.0])).unwrap();
        assert!(x.iter().all(|v| v.abs() < 1e-15), "{x:?}");
        let x = hamiltonian_vector_field(&p0, &st(&[2.0, 0.0], &[0.0, 0.0])).unwrap();
        assert_eq!(&x[..2], &[0.0, -2.0]);
        assert!((x[2] + 0.25).abs() < 1e-15 && x[3].abs() < 1e-15);
    }

    #[test]
    fn field_matches_analytic_vector_field() {
        let params = SystemParams::new(3, 0.2).unwrap();
        let s = st(&[0.3, -0.4, 0.2], &[0.5, 0.1, -0.7]);
        let mut dy = vec![0.0; 6];
        Cr3bpField::new(&params).eval(&s.to_flat(), &mut dy);
        let x = hamiltonian_vector_field(&params, &s).unwrap();
        assert!(crate::linalg::max_abs_diff(&dy, &x) < 1e-15);
    }

    #[test]
    fn energy_surface_examples() {
        let p0 = SystemParams::planar(0.0).unwrap();
        // boundary: zero-velocity point
        let s = sample_energy_surface(&p0, -1.5, &[1.0, 0.0], &[0.6, 0.8]).unwrap();
        assert_eq!(s.p, vec![0.0, 1.0]);
        for k in 0..16 {
            let a = k as f64 * 0.4;
            let s = sample_energy_surface(&p0, -1.2, &[0.7, 0.3], &[a.cos(), a.sin()]).unwrap();
            assert!((hamiltonian(&p0, &s).unwrap() + 1.2).abs() < 1e-12);
        }
        assert!(matches!(
            sample_energy_surface(&p0, -2.0, &[1.0, 0.0], &[1.0, 0.0]),
            Err(Error::EmptyFiber { .. })
        ));
    }

    #[test]
    fn csv_header_and_rows() {
        let params = SystemParams::planar(0.0).unwrap();
        let traj = integrate(&params, &st(&[1.0, 0.0], &[0.0, 1.0]), 0.5, 1e-10).unwrap();
        let csv = traj.to_csv(&params).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,q1,q2,p1,p2,H"));
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first.len(), 6);
        assert_eq!(first[5], "-1.5000000000000000e0");
    }

    #[test]
    fn collision_floor_is_reported() {
        let params = SystemParams::planar(0.0).unwrap().with_collision_floor(1e-3);
        // radial infall from rest in the inertial sense
        let s = st(&[0.1, 0.0], &[0.0, 0.1]);
        let err = integrate(&params, &s, 5.0, 1e-10).unwrap_err();
        assert!(matches!(err, Error::CollisionApproach { .. }), "{err:?}");
    }

    #[test]
    fn zero_horizon() {
        let params = SystemParams::planar(0.3).unwrap();
        let traj = integrate(&params, &st(&[0.5, 0.1], &[0.0, 0.2]), 0.0, 1e-10).unwrap();
        assert_eq!(traj.samples.len(), 1);
    }
}
