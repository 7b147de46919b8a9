//! Particle simulation and verification of dissipative evolutions in the
//! Wasserstein space of probability measures on `R^d`.
//!
//! Measures are finitely supported ([`DiscreteMeasure`], [`VelocityMeasure`]).
//! Distances and plans are exact ([`transport`]), pairings are solved as
//! lexicographic linear programs ([`pairing`]), vector fields come from a
//! library of named families ([`field`]), trajectories are produced by the
//! explicit Euler scheme ([`euler`]) and checked against analytic references
//! and quantitative estimates ([`analysis`]).

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod analysis;
pub mod error;
pub mod euler;
pub mod field;
pub mod io;
pub mod measure;
pub mod pairing;
pub mod par;
pub mod report;
pub mod transport;

pub use error::{Error, Result};
pub use field::{Mpvf, MpvfSpec};
pub use measure::{DiscreteMeasure, Point, ScalarMoment, VelocityMeasure};
pub use par::Execution;
