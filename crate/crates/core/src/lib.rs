//! Circular restricted three-body problem with Moser regularization, the
//! Birkhoff time-reversal symmetry as a twisted `O(2)`-action on loops in the
//! sphere, and integer group homology of cyclic and dihedral groups for the
//! equivariant loop-space homology tables.
//!
//! Modules:
//! - [`cr3bp`]: rotating-frame Hamiltonian, vector field, integration.
//! - [`equilibria`]: Lagrange points and the first critical value.
//! - [`hill`]: Hill's region grids and connected components.
//! - [`moser`]: Kepler regularization, stereographic cotangent lift, starshape
//!   and convexity checks on the regularized energy surface.
//! - [`symmetry`]: Birkhoff involution, twisted action, symmetric orbits.
//! - [`homology`]: Smith normal form, chain complexes, group homology, tables.

pub mod cr3bp;
pub mod equilibria;
pub mod error;
pub mod format;
pub mod hill;
pub mod homology;
pub mod linalg;
pub mod moser;
pub mod ode;
pub mod par;
pub mod sample;
pub mod symmetry;

pub use error::{Error, Result};
