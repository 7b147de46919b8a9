//! Every tolerance a run can depend on, recorded in the manifest.

use std::collections::BTreeMap;

use wasserflow::{analysis, euler, field, measure, pairing, transport};

/// Relative tolerance of the pairing-calculus identities and inequalities.
pub const CALCULUS_REL_TOL: f64 = 1e-9;
/// Absolute tolerance of the `lambda`-transform identity.
pub const LAMBDA_IDENTITY_TOL: f64 = 1e-8;

pub fn table() -> BTreeMap<&'static str, f64> {
    BTreeMap::from([
        ("barycentric_floor", analysis::barycentric::BARYCENTRIC_FLOOR),
        ("calculus_rel_tol", CALCULUS_REL_TOL),
        ("certificate_pass_tol", field::PASS_TOL),
        ("compat_tol", pairing::COMPAT_TOL),
        ("contraction_tol", analysis::estimates::CONTRACTION_TOL),
        ("dini_step", pairing::DINI_STEP),
        ("evi_floor", analysis::evi::EVI_FLOOR),
        ("face_tol", transport::FACE_TOL),
        ("ievi_tol", euler::IEVI_TOL),
        ("lambda_identity_tol", LAMBDA_IDENTITY_TOL),
        ("marginal_tol", transport::MARGINAL_TOL),
        ("mass_tol", measure::MASS_TOL),
        ("merge_tol", measure::MERGE_TOL),
    ])
}
