//! Birkhoff's time-reversal symmetry and the twisted `O(2)`-action on loops.

pub mod action;
pub mod involution;
pub mod orbits;

pub use action::{standard_action, twisted_action, LoopOnSphere, OrthogonalElement, LOOP_SAMPLES};
pub use involution::{birkhoff_involution, extended_involution, flow_residual, on_fixed_locus, rho, time_reverse};
pub use orbits::{
    continue_family, observation_residual, regularized_loop, shoot_symmetric_orbit, shoot_symmetric_orbit_with,
    symmetric_start, verify_observation, verify_observation_with, ObservationReport, OrbitSummary, Sense,
    ShootingOptions, SymmetricOrbit,
};
