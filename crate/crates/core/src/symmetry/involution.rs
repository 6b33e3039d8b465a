//! The Birkhoff involution, time reversal of trajectories, and the
//! involution of `T*S^n` that extends `B` through the regularization.

use crate::cr3bp::{PhaseState, SystemParams, Trajectory};
use crate::error::Result;
use crate::linalg::max_abs_diff;
use crate::moser::SphereCotangent;
use crate::ode::{self, Options};

/// `B(q, p) = (q1, -q2, ..., -qn, -p1, p2, ..., pn)`.
pub fn birkhoff_involution(state: &PhaseState) -> PhaseState {
    let mut q = state.q.clone();
    let mut p = state.p.clone();
    q.iter_mut().skip(1).for_each(|a| *a = -*a);
    p[0] = -p[0];
    PhaseState::new(q, p)
}

/// True iff `q2 = ... = qn = 0` and `p1 = 0` (within `tol`).
pub fn on_fixed_locus(state: &PhaseState, tol: f64) -> bool {
    state.q.iter().skip(1).all(|a| a.abs() <= tol) && state.p[0].abs() <= tol
}

/// `(R w)(t) = B(w(-t))`, with samples kept in increasing time.
pub fn time_reverse(traj: &Trajectory) -> Trajectory {
    Trajectory {
        samples: traj
            .samples
            .iter()
            .rev()
            .map(|(t, s)| (-t, birkhoff_involution(s)))
            .collect(),
        tol: traj.tol,
    }
}

/// Largest mismatch between consecutive samples and a fresh integration of
/// the flow between them at tolerance `tol`.
pub fn flow_residual(params: &SystemParams, traj: &Trajectory, tol: f64) -> Result<f64> {
    let field = crate::cr3bp::Cr3bpField::new(params);
    let mut worst: f64 = 0.0;
    for w in traj.samples.windows(2) {
        let (t0, a) = (&w[0].0, &w[0].1);
        let (t1, b) = (&w[1].0, &w[1].1);
        let end = ode::integrate_to(&field, &a.to_flat(), t1 - t0, Options::with_tol(tol))?;
        worst = worst.max(max_abs_diff(&end, &b.to_flat()));
    }
    Ok(worst)
}

/// `rho`: negate the first coordinate.
pub fn rho(x: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    y[0] = -y[0];
    y
}

/// `I o d*rho`: `(x, y) -> (rho x, -rho y)`.
pub fn extended_involution(point: &SphereCotangent) -> SphereCotangent {
    SphereCotangent {
        x: rho(&point.x),
        y: rho(&point.y).into_iter().map(|a| -a).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cr3bp::{hamiltonian, integrate};

    #[test]
    fn examples() {
        let s = PhaseState::new(vec![1.0, 2.0], vec![3.0, 4.0]);
        let b = birkhoff_involution(&s);
        assert_eq!((b.q.clone(), b.p.clone()), (vec![1.0, -2.0], vec![-3.0, 4.0]));
        assert_eq!(birkhoff_involution(&b), s);
        let f = PhaseState::new(vec![0.4, 0.0, 0.0], vec![0.0, 1.0, 2.0]);
        assert_eq!(birkhoff_involution(&f), f);
        assert!(on_fixed_locus(&f, 0.0));
        let s3 = PhaseState::new(vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]);
        let b3 = birkhoff_involution(&s3);
        assert_eq!((b3.q, b3.p), (vec![1.0, -2.0, -3.0], vec![-4.0, 5.0, 6.0]));
        let params = SystemParams::planar(0.3).unwrap();
        let h = hamiltonian(&params, &s).unwrap();
        assert!((hamiltonian(&params, &b).unwrap() - h).abs() < 1e-13);
    }

    #[test]
    fn reversed_trajectory_solves_the_flow() {
        let params = SystemParams::planar(0.2).unwrap();
        let s = PhaseState::new(vec![0.5, 0.1], vec![0.2, 0.6]);
        let traj = integrate(&params, &s, 2.0, 1e-12).unwrap();
        let rev = time_reverse(&traj);
        assert_eq!(time_reverse(&rev), traj);
        assert!(rev.samples.windows(2).all(|w| w[0].0 < w[1].0));
        let r0 = flow_residual(&params, &traj, 1e-13).unwrap();
        let r1 = flow_residual(&params, &rev, 1e-13).unwrap();
        assert!(r1 <= 10.0 * r0.max(1e-13), "{r0} {r1}");
    }

    #[test]
    fn equilibrium_on_fixed_locus() {
        let params = SystemParams::planar(0.5).unwrap();
        let l1 = PhaseState::new(vec![0.0, 0.0], vec![0.0, 0.0]);
        let traj = integrate(&params, &l1, 1.0, 1e-12).unwrap();
        let rev = time_reverse(&traj);
        for ((_, a), (_, b)) in traj.samples.iter().zip(&rev.samples) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn extended_involution_squares_to_one() {
        let p = SphereCotangent {
            x: vec![0.6, 0.0, 0.8],
            y: vec![0.8, 0.3, -0.6],
        };
        let e = extended_involution(&p);
        assert_eq!(e.x, vec![-0.6, 0.0, 0.8]);
        assert_eq!(extended_involution(&e), p);
    }
}
