//! Moser regularization: Kepler energy surfaces become unit cotangent
//! bundles of the round sphere, and the earth component of the restricted
//! problem becomes a compact hypersurface of `T*S^n`.

pub mod checks;
pub mod fiber;
pub mod kepler;
pub mod regularize;
pub mod sphere;

pub use checks::{kepler_geodesic_deviation, vf_identity_residual, vf_identity_residual_at};
pub use fiber::{
    fiber_convexity_check, starshape_check, ConvexityOptions, ConvexityReport, StarshapeOptions, StarshapeReport,
};
pub use kepler::{
    cr3bp_shift_map, inverse_cr3bp_shift_map, inverse_scaling_map, inverse_switch_map, kepler_hamiltonian,
    regularized_kepler_closed_form, regularized_kepler_hamiltonian, scaling_factor, scaling_map, switch_map,
};
pub use regularize::{cr3bp_chart_point, defining_function, regularize_cr3bp_point, unregularize};
pub use sphere::{geodesic_flow, stereographic_lift, stereographic_projection, Chart, ChartPoint, SphereCotangent};
