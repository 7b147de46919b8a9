//! Verification of trajectories: evolution variational inequalities,
//! stability and error estimates, the barycentric property and closed-form
//! reference solutions.

pub mod barycentric;
pub mod curve;
pub mod estimates;
pub mod evi;
pub mod reference;

pub use barycentric::{barycentric_residual, BarycentricReport, TestFunction};
pub use curve::{Curve, CurveSamples};
pub use estimates::{cauchy_gap_check, contraction_check, error_rate_study, EnvelopeReport, RateFit};
pub use evi::{evi_residual, EviReport};
pub use reference::{
    analytic_geodesic_flow, analytic_lift, analytic_splitting, analytic_splitting_uniform, analytic_translation,
    LiftFlow,
};
