//! The Kepler problem `H = |p|^2/2 - 1/|q|` and the maps used to regularize it.

use crate::error::{Error, Result};
use crate::linalg::{dist, norm};
use crate::ode::VectorField;
use crate::cr3bp::SystemParams;

fn radius(q: &[f64]) -> Result<f64> {
    let r = norm(q);
    if r == 0.0 {
        return Err(Error::Domain {
            position: q.to_vec(),
            distance: 0.0,
        });
    }
    Ok(r)
}

fn check_energy(c: f64) -> Result<()> {
    if c < 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("regularization needs negative energy, got c = {c}")))
    }
}

pub fn kepler_hamiltonian(q: &[f64], p: &[f64]) -> Result<f64> {
    let r = radius(q)?;
    Ok(0.5 * norm(p).powi(2) - 1.0 / r)
}

/// `X_H = (p, -q/|q|^3)`.
pub fn kepler_vector_field(q: &[f64], p: &[f64]) -> Result<Vec<f64>> {
    let r3 = radius(q)?.powi(3);
    let mut x = p.to_vec();
    x.extend(q.iter().map(|a| -a / r3));
    Ok(x)
}

/// `K_c = |q| (H - c) + 1`, evaluated as written.
pub fn regularized_kepler_hamiltonian(q: &[f64], p: &[f64], c: f64) -> Result<f64> {
    check_energy(c)?;
    let r = radius(q)?;
    Ok(r * (kepler_hamiltonian(q, p)? - c) + 1.0)
}

/// The same function simplified: `(|p|^2 + 2|c|) |q| / 2`.
pub fn regularized_kepler_closed_form(q: &[f64], p: &[f64], c: f64) -> Result<f64> {
    check_energy(c)?;
    Ok(0.5 * (norm(p).powi(2) + 2.0 * c.abs()) * norm(q))
}

/// `X_{K_c} = (|q| p, -(H - c) q/|q| - q/|q|^2)`.
pub fn regularized_kepler_vector_field(q: &[f64], p: &[f64], c: f64) -> Result<Vec<f64>> {
    check_energy(c)?;
    let r = radius(q)?;
    let h = kepler_hamiltonian(q, p)? - c;
    let mut x: Vec<f64> = p.iter().map(|a| r * a).collect();
    x.extend(q.iter().map(|a| -h * a / r - a / (r * r)));
    Ok(x)
}

/// `s = sqrt(2|c|)`: after [`scaling_map`], `K_c = s * (|P|^2 + 1)|Q| / 2`.
pub fn scaling_factor(c: f64) -> Result<f64> {
    check_energy(c)?;
    Ok((2.0 * c.abs()).sqrt())
}

/// `(q, p) -> (Q, P) = (s q, p / s)`. Symplectic, and turns `K_c` into a
/// constant multiple of the round length `(|P|^2 + 1)|Q| / 2`.
pub fn scaling_map(q: &[f64], p: &[f64], c: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let s = scaling_factor(c)?;
    Ok((q.iter().map(|a| a * s).collect(), p.iter().map(|a| a / s).collect()))
}

pub fn inverse_scaling_map(q: &[f64], p: &[f64], c: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let s = scaling_factor(c)?;
    Ok((q.iter().map(|a| a / s).collect(), p.iter().map(|a| a * s).collect()))
}

/// Base/fiber switch `(q, p) -> (u, v) = (-p, q)`.
pub fn switch_map(q: &[f64], p: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (p.iter().map(|a| -a).collect(), q.to_vec())
}

pub fn inverse_switch_map(u: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (v.to_vec(), u.iter().map(|a| -a).collect())
}

/// `(q, p) -> (u, v) = (-p, q - E)`: the earth collision goes to the fiber origin.
pub fn cr3bp_shift_map(params: &SystemParams, q: &[f64], p: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let v = q.iter().zip(params.earth()).map(|(a, e)| a - e).collect();
    (p.iter().map(|a| -a).collect(), v)
}

pub fn inverse_cr3bp_shift_map(params: &SystemParams, u: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let q = v.iter().zip(params.earth()).map(|(a, e)| a + e).collect();
    (q, u.iter().map(|a| -a).collect())
}

/// Kepler flow as an ODE on `(q, p)`, stopped near the collision.
pub struct KeplerField {
    pub n: usize,
    pub floor: f64,
}

impl VectorField for KeplerField {
    fn dim(&self) -> usize {
        2 * self.n
    }

    fn eval(&self, y: &[f64], dy: &mut [f64]) {
        let (q, p) = y.split_at(self.n);
        let r = norm(q);
        let r3 = r * r * r;
        dy[..self.n].copy_from_slice(p);
        for i in 0..self.n {
            dy[self.n + i] = -q[i] / r3;
        }
    }

    fn guard(&self, y: &[f64]) -> Option<(f64, f64)> {
        let r = dist(&y[..self.n], &vec![0.0; self.n]);
        (r < self.floor).then_some((r, self.floor))
    }
}
