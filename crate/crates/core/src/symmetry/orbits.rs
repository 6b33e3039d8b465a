//! Symmetric periodic orbits by perpendicular-crossing shooting, and the
//! numerical check that time reversal acts on their regularized base loops
//! as the twisted reflection.

use serde::Serialize;

use crate::cr3bp::{effective_potential, hamiltonian, integrate, Cr3bpField, PhaseState, SystemParams, Trajectory};
use crate::error::{Error, Result};
use crate::format::ser_f64;
use crate::linalg::dist;
use crate::moser::regularize_cr3bp_point;
use crate::ode::{self, Options};

use super::action::{LoopOnSphere, LOOP_SAMPLES};
use super::involution::rho;

/// Direction of motion around the earth relative to the rotating frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    Retrograde,
    Prograde,
}

#[derive(Debug, Clone)]
pub struct ShootingOptions {
    pub sense: Sense,
    /// Integrator tolerance.
    pub tol: f64,
    /// Largest accepted perpendicularity defect.
    pub residual_tol: f64,
    pub max_iter: usize,
    /// Give up on a return to the section after this time.
    pub t_max: f64,
    /// Samples of the defect across the bracket when looking for sign changes.
    pub scan_points: usize,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        ShootingOptions {
            sense: Sense::Retrograde,
            tol: 1e-12,
            residual_tol: 1e-8,
            max_iter: 50,
            t_max: 50.0,
            scan_points: 32,
        }
    }
}

/// A periodic orbit that starts and turns around perpendicularly on `{q2 = 0}`.
#[derive(Debug, Clone)]
pub struct SymmetricOrbit {
    pub mu: f64,
    pub c: f64,
    pub start: PhaseState,
    pub half_period: f64,
    pub residual: f64,
    /// One full period from `start`.
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrbitSummary {
    #[serde(serialize_with = "ser_f64")]
    pub mu: f64,
    #[serde(serialize_with = "ser_f64")]
    pub c: f64,
    #[serde(serialize_with = "ser_f64")]
    pub q1: f64,
    #[serde(serialize_with = "ser_f64")]
    pub p2: f64,
    #[serde(serialize_with = "ser_f64")]
    pub half_period: f64,
    #[serde(serialize_with = "ser_f64")]
    pub residual: f64,
}

impl SymmetricOrbit {
    pub fn period(&self) -> f64 {
        2.0 * self.half_period
    }

    pub fn summary(&self) -> OrbitSummary {
        OrbitSummary {
            mu: self.mu,
            c: self.c,
            q1: self.start.q[0],
            p2: self.start.p[1],
            half_period: self.half_period,
            residual: self.residual,
        }
    }
}

/// The state on `Fix(B)` over `(q1, 0)` with energy `c`:
/// `p = (0, q1 -+ sqrt(2(c - U)))`, sign by `sense`.
pub fn symmetric_start(params: &SystemParams, c: f64, q1: f64, sense: Sense) -> Result<PhaseState> {
    let mut q = vec![0.0; params.n()];
    q[0] = q1;
    let u = effective_potential(params, &q)?;
    if u > c {
        return Err(Error::EmptyFiber { potential: u, energy: c });
    }
    let w = (2.0 * (c - u)).sqrt();
    let side = if q1 >= params.mu() { 1.0 } else { -1.0 };
    let dir = match sense {
        Sense::Retrograde => -side,
        Sense::Prograde => side,
    };
    let mut p = vec![0.0; params.n()];
    p[1] = q1 + dir * w;
    Ok(PhaseState::new(q, p))
}

struct Crossing {
    t: f64,
    defect: f64,
    residual: f64,
}

fn first_return(params: &SystemParams, start: &PhaseState, opts: &ShootingOptions) -> Result<Crossing> {
    let n = params.n();
    let field = Cr3bpField::new(params);
    let ev = ode::integrate_until(
        &field,
        &start.to_flat(),
        opts.t_max,
        0.0,
        1e-12,
        Options::with_tol(opts.tol),
        |y| y[1],
    )?
    .ok_or(Error::NoConvergence {
        iterations: 0,
        residual: f64::INFINITY,
    })?;
    let q2dot = ev.y[n + 1] - ev.y[0];
    if q2dot.abs() < 1e-9 {
        return Err(Error::NonTransversal { t: ev.t, velocity: q2dot });
    }
    let off_plane = ev.y[1..n].iter().chain(&ev.y[n + 2..]).fold(0.0f64, |m, a| m.max(a.abs()));
    Ok(Crossing {
        t: ev.t,
        defect: ev.y[n],
        residual: ev.y[n].abs().max(ev.y[1].abs()).max(if n > 2 { off_plane } else { 0.0 }),
    })
}

fn defect(params: &SystemParams, c: f64, q1: f64, opts: &ShootingOptions) -> Result<Crossing> {
    first_return(params, &symmetric_start(params, c, q1, opts.sense)?, opts)
}

/// Illinois variant of regula falsi on a sign-changing bracket.
fn illinois(
    params: &SystemParams,
    c: f64,
    opts: &ShootingOptions,
    (mut a, mut fa): (f64, f64),
    (mut b, mut fb): (f64, f64),
) -> Option<(f64, Crossing)> {
    let mut side = 0;
    for _ in 0..opts.max_iter {
        let x = (a * fb - b * fa) / (fb - fa);
        let cr = defect(params, c, x, opts).ok()?;
        if cr.residual <= 0.01 * opts.residual_tol || (b - a).abs() < 1e-15 {
            return Some((x, cr));
        }
        if (cr.defect < 0.0) == (fb < 0.0) {
            b = x;
            fb = cr.defect;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = x;
            fa = cr.defect;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    let x = (a * fb - b * fa) / (fb - fa);
    defect(params, c, x, opts).ok().map(|cr| (x, cr))
}

fn secant(params: &SystemParams, c: f64, opts: &ShootingOptions, x0: f64, dx: f64) -> Option<(f64, Crossing)> {
    let (mut a, mut fa) = (x0, defect(params, c, x0, opts).ok()?.defect);
    let mut b = x0 + dx;
    let mut cb = defect(params, c, b, opts).ok()?;
    for _ in 0..opts.max_iter {
        if cb.residual <= 0.01 * opts.residual_tol || cb.defect == fa {
            break;
        }
        let x = b - cb.defect * (b - a) / (cb.defect - fa);
        a = b;
        fa = cb.defect;
        b = x;
        cb = defect(params, c, b, opts).ok()?;
    }
    Some((b, cb))
}

/// Shoots from `Fix(B)` at energy `c` and adjusts `q1` within `bracket` until
/// the first return to `{q2 = 0}` is perpendicular (`p1 = 0`).
pub fn shoot_symmetric_orbit(params: &SystemParams, c: f64, q1_guess: f64, bracket: (f64, f64)) -> Result<SymmetricOrbit> {
    shoot_symmetric_orbit_with(params, c, q1_guess, bracket, &ShootingOptions::default())
}

pub fn shoot_symmetric_orbit_with(
    params: &SystemParams,
    c: f64,
    q1_guess: f64,
    bracket: (f64, f64),
    opts: &ShootingOptions,
) -> Result<SymmetricOrbit> {
    if params.n() != 2 {
        return Err(Error::InvalidInput("symmetric-orbit shooting is planar".into()));
    }
    let (lo, hi) = (bracket.0.min(bracket.1), bracket.0.max(bracket.1));
    if !(lo..=hi).contains(&q1_guess) {
        return Err(Error::InvalidInput(format!("guess {q1_guess} lies outside [{lo}, {hi}]")));
    }
    let mut best: Option<(f64, Crossing)> = None;
    let mut consider = |cand: Option<(f64, Crossing)>| -> bool {
        if let Some((x, cr)) = cand {
            let better = best.as_ref().is_none_or(|(_, b)| cr.residual < b.residual);
            let done = cr.residual <= opts.residual_tol;
            if better {
                best = Some((x, cr));
            }
            return done;
        }
        false
    };
    let mut found = match defect(params, c, q1_guess, opts) {
        Ok(cr) => consider(Some((q1_guess, cr))),
        Err(e @ Error::EmptyFiber { .. }) => return Err(e),
        Err(_) => false,
    };
    if !found {
        // sign changes of the defect across the bracket, nearest the guess first
        let m = opts.scan_points.max(2);
        let mut xs: Vec<f64> = (0..m).map(|k| lo + (hi - lo) * k as f64 / (m - 1) as f64).collect();
        xs.push(q1_guess);
        xs.sort_by(f64::total_cmp);
        let vals: Vec<(f64, Option<f64>)> = xs
            .iter()
            .map(|&x| (x, defect(params, c, x, opts).ok().map(|cr| cr.defect)))
            .collect();
        let mut intervals: Vec<((f64, f64), (f64, f64))> = vals
            .windows(2)
            .filter_map(|w| match (w[0], w[1]) {
                ((a, Some(fa)), (b, Some(fb))) if fa * fb < 0.0 => Some(((a, fa), (b, fb))),
                _ => None,
            })
            .collect();
        intervals.sort_by(|x, y| {
            let dx = (0.5 * (x.0 .0 + x.1 .0) - q1_guess).abs();
            let dy = (0.5 * (y.0 .0 + y.1 .0) - q1_guess).abs();
            dx.total_cmp(&dy)
        });
        for (a, b) in intervals {
            if consider(illinois(params, c, opts, a, b)) {
                found = true;
                break;
            }
        }
    }
    if !found {
        found = consider(secant(params, c, opts, q1_guess, 1e-4 * (hi - lo)));
    }
    let Some((q1, cr)) = best else {
        return Err(Error::NoConvergence {
            iterations: opts.max_iter,
            residual: f64::INFINITY,
        });
    };
    if !found {
        return Err(Error::NoConvergence {
            iterations: opts.max_iter,
            residual: cr.residual,
        });
    }
    let start = symmetric_start(params, c, q1, opts.sense)?;
    let trajectory = integrate(params, &start, 2.0 * cr.t, opts.tol)?;
    Ok(SymmetricOrbit {
        mu: params.mu(),
        c,
        start,
        half_period: cr.t,
        residual: cr.residual,
        trajectory,
    })
}

/// Shoots along a list of energies, seeding each search with the previous orbit.
pub fn continue_family(
    params: &SystemParams,
    energies: &[f64],
    q1_guess: f64,
    bracket: (f64, f64),
    opts: &ShootingOptions,
) -> Result<Vec<SymmetricOrbit>> {
    let mut out: Vec<SymmetricOrbit> = Vec::with_capacity(energies.len());
    let mut guess = q1_guess;
    for &c in energies {
        let orbit = shoot_symmetric_orbit_with(params, c, guess, bracket, opts)?;
        guess = orbit.start.q[0];
        out.push(orbit);
    }
    Ok(out)
}

/// Base points on the sphere of `samples` equally spaced states over
/// `[0, period)` starting from `start`.
pub fn regularized_loop(params: &SystemParams, start: &PhaseState, period: f64, samples: usize, tol: f64) -> Result<LoopOnSphere> {
    let times: Vec<f64> = (0..samples).map(|k| period * k as f64 / samples as f64).collect();
    let field = Cr3bpField::new(params);
    let states = ode::integrate_grid(&field, &start.to_flat(), &times, Options::with_tol(tol))?;
    LoopOnSphere::new(
        states
            .iter()
            .map(|y| regularize_cr3bp_point(params, &PhaseState::from_flat(y)).x)
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObservationReport {
    /// `min_{t0} sup_t |rho v(t0 - t) - v(t0 + t)|` (without `rho` for the control).
    #[serde(serialize_with = "ser_f64")]
    pub residual: f64,
    /// Minimizing `t0` as a fraction of the period.
    #[serde(serialize_with = "ser_f64")]
    pub phase: f64,
}

/// `sup_i |T v(sigma/N - t_i) - v(t_i)|` for shift `sigma` (in samples), `T = rho` or the identity.
fn reflection_defect(lp: &LoopOnSphere, sigma: f64, twisted: bool) -> f64 {
    let n = lp.len();
    let whole = (sigma - sigma.round()).abs() < 1e-12;
    (0..n)
        .map(|i| {
            let mirrored = if whole {
                lp.sample(sigma.round() as isize - i as isize).to_vec()
            } else {
                lp.eval((sigma - i as f64) / n as f64)
            };
            let m = if twisted { rho(&mirrored) } else { mirrored };
            dist(&m, lp.sample(i as isize))
        })
        .fold(0.0, f64::max)
}

/// Best reflection phase for a loop: exact search over half-grid phases,
/// then golden-section refinement.
pub fn observation_residual(lp: &LoopOnSphere, twisted: bool) -> ObservationReport {
    let n = lp.len();
    let (mut best_s, mut best) = (0.0, f64::INFINITY);
    for s in 0..n {
        let d = reflection_defect(lp, s as f64, twisted);
        if d < best {
            best = d;
            best_s = s as f64;
        }
    }
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (best_s - 1.0, best_s + 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (reflection_defect(lp, x1, twisted), reflection_defect(lp, x2, twisted));
    for _ in 0..60 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = reflection_defect(lp, x1, twisted);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = reflection_defect(lp, x2, twisted);
        }
    }
    for (x, f) in [(x1, f1), (x2, f2)] {
        if f < best {
            best = f;
            best_s = x;
        }
    }
    // sigma counts samples of 2 t0
    ObservationReport {
        residual: best,
        phase: (0.5 * best_s / n as f64).rem_euclid(0.5),
    }
}

/// Regularizes a symmetric orbit and measures how far time reversal is from
/// the twisted reflection `v(t) -> rho v(-t)` on its base loop.
pub fn verify_observation(orbit: &SymmetricOrbit, params: &SystemParams, c: f64) -> Result<ObservationReport> {
    verify_observation_with(orbit, params, c, LOOP_SAMPLES, true)
}

/// As [`verify_observation`]; `twisted = false` drops `rho` (negative control).
pub fn verify_observation_with(
    orbit: &SymmetricOrbit,
    params: &SystemParams,
    c: f64,
    samples: usize,
    twisted: bool,
) -> Result<ObservationReport> {
    if !(orbit.residual <= 1e-8) {
        return Err(Error::InvalidInput(format!("orbit residual {:e} exceeds 1e-8", orbit.residual)));
    }
    let h = hamiltonian(params, &orbit.start)?;
    if (h - c).abs() > 1e-8 {
        return Err(Error::InvalidInput(format!("orbit energy {h} differs from c = {c}")));
    }
    let lp = regularized_loop(params, &orbit.start, orbit.period(), samples, orbit.trajectory.tol)?;
    Ok(observation_residual(&lp, twisted))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use std::f64::consts::PI;

    #[test]
    fn start_on_fixed_locus() {
        let p0 = SystemParams::planar(0.0).unwrap();
        let s = symmetric_start(&p0, -2.725, 0.16, Sense::Retrograde).unwrap();
        assert!(max_abs_diff(&s.p, &[0.0, -2.5]) < 1e-14);
        assert!(symmetric_start(&p0, -2.725, 0.9, Sense::Retrograde).is_err());
    }

    #[test]
    fn circular_retrograde_orbit() {
        let p0 = SystemParams::planar(0.0).unwrap();
        let orbit = shoot_symmetric_orbit(&p0, -2.725, 0.16, (0.1, 0.25)).unwrap();
        assert!((orbit.start.q[0] - 0.16).abs() < 1e-8);
        assert!(orbit.residual <= 1e-8);
        let period = 2.0 * PI / (0.16f64.powf(-1.5) + 1.0);
        assert!((orbit.period() - period).abs() / period < 1e-6);
        let rep = verify_observation(&orbit, &p0, -2.725).unwrap();
        assert!(rep.residual <= 1e-6, "{rep:?}");
        let ctrl = verify_observation_with(&orbit, &p0, -2.725, LOOP_SAMPLES, false).unwrap();
        assert!(ctrl.residual > 0.1, "{ctrl:?}");
    }
}
