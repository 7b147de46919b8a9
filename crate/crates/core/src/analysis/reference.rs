//! Closed-form solutions used as references for the Euler scheme.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{splitting_coefficients, splitting_median, MapName};
use crate::measure::{norm_sq, quantile_discretize_1d, DiscreteMeasure};
use crate::transport::{geodesic_point, w2};

/// Splitting-particle flow from a discrete datum on the line: mass left of the
/// median `B` moves left at unit speed, mass right of it moves right, and the
/// atom at `B` splits into `1/2 - mu0(< B)` moving left and
/// `mu0(<= B) - 1/2` moving right.
pub fn analytic_splitting(mu0: &DiscreteMeasure, t: f64) -> Result<DiscreteMeasure> {
    let b = splitting_median(mu0)?;
    let xb = mu0.point(b)[0];
    let (left, right) = splitting_coefficients(mu0, b);
    let mut atoms = Vec::with_capacity(mu0.len() + 1);
    for (x, w) in mu0.atoms() {
        let x = x[0];
        if x < xb {
            atoms.push((w, x - t));
        } else if x > xb {
            atoms.push((w, x + t));
        } else {
            atoms.push((left, xb - t));
            atoms.push((right, xb + t));
        }
    }
    DiscreteMeasure::from_1d(&atoms)
}

/// `n`-atom quantile discretization of the splitting flow from the uniform law
/// on `[a, b]`: uniform on `[a - t, (a+b)/2 - t]` and `[(a+b)/2 + t, b + t]`,
/// each with mass one half.
pub fn analytic_splitting_uniform(a: f64, b: f64, t: f64, n: usize) -> Result<DiscreteMeasure> {
    if !(b > a) {
        return Err(Error::Precondition(format!("empty interval [{a}, {b}]")));
    }
    quantile_discretize_1d(|s| a + (b - a) * s + if s < 0.5 { -t } else { t }, n)
}

/// Flow of the field pointing to the barycentric projection onto `target`:
/// the point at parameter `e^{-t}` on the geodesic from `target` to `mu0`.
pub fn analytic_geodesic_flow(target: &DiscreteMeasure, mu0: &DiscreteMeasure, t: f64) -> Result<DiscreteMeasure> {
    if target.dim() != 1 {
        return Err(Error::UnsupportedDimension { expected: 1, got: target.dim() });
    }
    if mu0.dim() != 1 {
        return Err(Error::UnsupportedDimension { expected: 1, got: mu0.dim() });
    }
    let plan = w2(target, mu0)?.plan;
    geodesic_point(&plan, (-t).exp())
}

/// Translation of every atom by `t * b`.
pub fn analytic_translation(mu0: &DiscreteMeasure, b: &[f64], t: f64) -> Result<DiscreteMeasure> {
    if b.len() != mu0.dim() {
        return Err(Error::DimensionMismatch { left: mu0.dim(), right: b.len() });
    }
    mu0.push_forward(mu0.dim(), |x| x.iter().zip(b).map(|(xi, bi)| xi + t * bi).collect())
}

/// Per-particle maps with a registered exact flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiftFlow {
    /// Clockwise rotation by angle `t`.
    Rotation,
    /// `x -> e^{-t} x`.
    NegIdentity,
    /// `|x|` decreases at unit speed and stops at the origin.
    NegSign,
    /// `x -> e^{2t} x`.
    Expand,
}

impl TryFrom<MapName> for LiftFlow {
    type Error = Error;

    fn try_from(m: MapName) -> Result<Self> {
        match m {
            MapName::Rotation => Ok(LiftFlow::Rotation),
            MapName::NegIdentity => Ok(LiftFlow::NegIdentity),
            MapName::NegSign => Ok(LiftFlow::NegSign),
            MapName::Expand => Ok(LiftFlow::Expand),
            other => Err(Error::InvalidField(format!("no exact flow registered for {other:?}"))),
        }
    }
}

impl LiftFlow {
    pub fn apply(self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        Ok(match self {
            LiftFlow::Rotation => {
                if x.len() != 2 {
                    return Err(Error::UnsupportedDimension { expected: 2, got: x.len() });
                }
                let (c, s) = (t.cos(), t.sin());
                vec![c * x[0] + s * x[1], -s * x[0] + c * x[1]]
            }
            LiftFlow::NegIdentity => x.iter().map(|c| (-t).exp() * c).collect(),
            LiftFlow::NegSign => {
                let r = norm_sq(x).sqrt();
                let scale = if r == 0.0 { 0.0 } else { (r - t).max(0.0) / r };
                x.iter().map(|c| scale * c).collect()
            }
            LiftFlow::Expand => x.iter().map(|c| (2.0 * t).exp() * c).collect(),
        })
    }
}

/// Exact flow of a per-particle field applied atom by atom.
pub fn analytic_lift(flow: LiftFlow, mu0: &DiscreteMeasure, t: f64) -> Result<DiscreteMeasure> {
    let d = mu0.dim();
    let mut coords = Vec::with_capacity(mu0.len() * d);
    for (x, _) in mu0.atoms() {
        coords.extend(flow.apply(x, t)?);
    }
    DiscreteMeasure::from_flat(d, coords, mu0.weights().to_vec())
}
