//! Multivalued probability vector fields: maps from a measure `mu` to one or
//! more velocity measures whose position marginal is `mu`.

mod certify;

pub use certify::{
    dissipativity_certificate, weak_dissipativity_certificate, CertificateOptions, DissipativityReport, MeasureSampler,
    PairRecord, Sampler, PASS_TOL,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{norm_sq, DiscreteMeasure, ScalarMoment, VelocityMeasure};
use crate::transport::{self, barycentric_projection, marginal_index};

/// Cumulative-mass tolerance used to locate the median atom.
const MEDIAN_TOL: f64 = 1e-12;

/// Split coefficients below this are rounding noise and are set to zero.
const SPLIT_EPS: f64 = 1e-13;

/// Behaviour shared by every field: an ordered list of sections at `mu`.
pub trait Mpvf: Sync {
    /// Elements of `F[mu]` in preference order; the first is canonical.
    fn sections(&self, mu: &DiscreteMeasure) -> Result<Vec<VelocityMeasure>>;

    /// The canonical section.
    fn evaluate(&self, mu: &DiscreteMeasure) -> Result<VelocityMeasure> {
        self.sections(mu)?.into_iter().next().ok_or_else(|| Error::InvalidField("field has an empty section".into()))
    }

    /// A bound `M(R)` on `inf |Phi|_2` over `F[mu]` for all `mu` with
    /// `m_2(mu) <= R`, when one is available.
    fn growth_bound(&self, r: f64) -> Option<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialName {
    /// `|x|^2 / 2`
    Quadratic,
    /// `|x|^4 / 4`
    Quartic,
    /// `|x|^4 / 4 - |x|^2 / 2`
    DoubleWell,
}

impl PotentialName {
    fn gradient(self, x: &[f64]) -> Vec<f64> {
        let r2 = norm_sq(x);
        let factor = match self {
            PotentialName::Quadratic => 1.0,
            PotentialName::Quartic => r2,
            PotentialName::DoubleWell => r2 - 1.0,
        };
        x.iter().map(|c| factor * c).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelName {
    /// `W(z) = |z|^2 / 2`
    Quadratic,
    /// `W(z) = |z|^4 / 4`
    AttractiveQuartic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairwiseName {
    /// `A(z) = R z` with the clockwise quarter turn `R`.
    Rotation,
    /// `A(z) = -z`
    NegIdentity,
    /// `A(z) = -|z|^2 z`
    NegCubic,
}

impl PairwiseName {
    fn apply(self, z: &[f64]) -> Result<Vec<f64>> {
        Ok(match self {
            PairwiseName::Rotation => rotate(z)?,
            PairwiseName::NegIdentity => z.iter().map(|c| -c).collect(),
            PairwiseName::NegCubic => {
                let r2 = norm_sq(z);
                z.iter().map(|c| -r2 * c).collect()
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapName {
    /// `x -> R x`, the clockwise quarter turn (d = 2).
    Rotation,
    /// `x -> -x`
    NegIdentity,
    /// `x -> -x / |x|`, zero at the origin.
    NegSign,
    /// componentwise `sin`
    Sin,
    /// `x -> 2 x`
    Expand,
}

impl MapName {
    pub fn apply(self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(match self {
            MapName::Rotation => rotate(x)?,
            MapName::NegIdentity => x.iter().map(|c| -c).collect(),
            MapName::NegSign => {
                let r = norm_sq(x).sqrt();
                if r == 0.0 {
                    vec![0.0; x.len()]
                } else {
                    x.iter().map(|c| -c / r).collect()
                }
            }
            MapName::Sin => x.iter().map(|c| c.sin()).collect(),
            MapName::Expand => x.iter().map(|c| 2.0 * c).collect(),
        })
    }

    /// Global Lipschitz constant.
    pub fn lipschitz(self) -> Option<f64> {
        match self {
            MapName::Rotation | MapName::NegIdentity | MapName::Sin => Some(1.0),
            MapName::Expand => Some(2.0),
            MapName::NegSign => None,
        }
    }
}

/// `R(x1, x2) = (x2, -x1)`.
fn rotate(x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != 2 {
        return Err(Error::UnsupportedDimension { expected: 2, got: x.len() });
    }
    Ok(vec![x[1], -x[0]])
}

fn one() -> f64 {
    1.0
}

/// Declarative description of a field from the built-in families.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MpvfSpec {
    /// `v = -scale * grad P(x)`.
    Potential {
        name: PotentialName,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `v_i = -sum_j w_j grad W(x_i - x_j - shift)`. The kernel must be even,
    /// so any nonzero `shift` is rejected.
    Interaction {
        kernel: KernelName,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shift: Option<Vec<f64>>,
    },
    /// `mu (x) theta`: every particle carries the velocity law `theta`.
    Constant {
        #[serde(with = "crate::io::atom_rows")]
        theta: DiscreteMeasure,
    },
    /// `v = R x` in the plane.
    Rotation,
    /// Mass left of the median moves left and mass right of it moves right at
    /// unit speed; an atom at the median splits (d = 1).
    SplittingParticle,
    /// `v = sign * (b(x) - x)` with `b` the barycentric projection of an
    /// optimal plan to `target`.
    TowardMeasure {
        #[serde(with = "crate::io::atom_rows")]
        target: DiscreteMeasure,
        #[serde(default = "one")]
        sign: f64,
    },
    /// `v_i = sum_j w_j A(x_i - x_j)`.
    PairwiseMap { map: PairwiseName },
    /// `v = f(x)`.
    PerParticleMap { map: MapName },
    /// Sum of the children's velocities, coupled independently at each atom.
    CompositeSum { children: Vec<MpvfSpec> },
    /// A multivalued field whose sections are the canonical sections of the
    /// options, in order.
    SelectionList { options: Vec<MpvfSpec> },
}

impl MpvfSpec {
    /// Parameter checks that do not depend on the evaluation point.
    pub fn validate(&self) -> Result<()> {
        match self {
            MpvfSpec::Potential { scale, .. } if !scale.is_finite() => {
                Err(Error::InvalidField(format!("potential scale {scale}")))
            }
            MpvfSpec::Interaction { shift: Some(s), .. } if s.iter().any(|c| *c != 0.0) => {
                Err(Error::InvalidField("interaction kernel must be even (nonzero shift)".into()))
            }
            MpvfSpec::TowardMeasure { sign, .. } if !sign.is_finite() => {
                Err(Error::InvalidField(format!("toward_measure sign {sign}")))
            }
            MpvfSpec::CompositeSum { children } | MpvfSpec::SelectionList { options: children } => {
                if children.is_empty() {
                    return Err(Error::InvalidField("needs at least one child".into()));
                }
                let dims: Vec<usize> = children.iter().filter_map(MpvfSpec::fixed_dim).collect();
                if dims.windows(2).any(|w| w[0] != w[1]) {
                    return Err(Error::InvalidField(format!("children disagree on dimension: {dims:?}")));
                }
                children.iter().try_for_each(MpvfSpec::validate)
            }
            _ => Ok(()),
        }
    }

    /// The dimension the field is restricted to, if any.
    pub fn fixed_dim(&self) -> Option<usize> {
        match self {
            MpvfSpec::Rotation
            | MpvfSpec::PairwiseMap { map: PairwiseName::Rotation }
            | MpvfSpec::PerParticleMap { map: MapName::Rotation } => Some(2),
            MpvfSpec::SplittingParticle => Some(1),
            MpvfSpec::Constant { theta } => Some(theta.dim()),
            MpvfSpec::TowardMeasure { target, .. } => Some(target.dim()),
            MpvfSpec::Interaction { shift: Some(s), .. } => Some(s.len()),
            MpvfSpec::CompositeSum { children } | MpvfSpec::SelectionList { options: children } => {
                children.iter().find_map(MpvfSpec::fixed_dim)
            }
            _ => None,
        }
    }

    fn check_dim(&self, mu: &DiscreteMeasure) -> Result<()> {
        match self.fixed_dim() {
            Some(d) if d != mu.dim() => Err(Error::UnsupportedDimension { expected: d, got: mu.dim() }),
            _ => Ok(()),
        }
    }

    fn canonical(&self, mu: &DiscreteMeasure) -> Result<VelocityMeasure> {
        self.validate()?;
        self.check_dim(mu)?;
        match self {
            MpvfSpec::Potential { name, scale } => {
                VelocityMeasure::from_map(mu, |x| name.gradient(x).into_iter().map(|g| -scale * g).collect())
            }
            MpvfSpec::Interaction { kernel, .. } => {
                let d = mu.dim();
                VelocityMeasure::from_map(mu, |x| {
                    let mut v = vec![0.0; d];
                    for (y, w) in mu.atoms() {
                        let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
                        let factor = match kernel {
                            KernelName::Quadratic => 1.0,
                            KernelName::AttractiveQuartic => norm_sq(&z),
                        };
                        v.iter_mut().zip(&z).for_each(|(vi, zi)| *vi -= w * factor * zi);
                    }
                    v
                })
            }
            MpvfSpec::Constant { theta } => VelocityMeasure::product(mu, theta),
            MpvfSpec::Rotation => {
                let mut rows = Vec::with_capacity(mu.len() * 4);
                for (x, _) in mu.atoms() {
                    rows.extend_from_slice(x);
                    rows.extend(rotate(x)?);
                }
                VelocityMeasure::from_rows(2, rows, mu.weights().to_vec())
            }
            MpvfSpec::SplittingParticle => splitting_particle(mu),
            MpvfSpec::TowardMeasure { target, sign } => {
                let plan = transport::w2(mu, target)?.plan;
                let b = barycentric_projection(&plan);
                let mut rows = Vec::with_capacity(mu.len() * 2 * mu.dim());
                for (i, (x, _)) in mu.atoms().enumerate() {
                    rows.extend_from_slice(x);
                    rows.extend(x.iter().zip(&b[i]).map(|(xi, bi)| sign * (bi - xi)));
                }
                VelocityMeasure::from_rows(mu.dim(), rows, mu.weights().to_vec())
            }
            MpvfSpec::PairwiseMap { map } => {
                let d = mu.dim();
                let mut rows = Vec::with_capacity(mu.len() * 2 * d);
                for (x, _) in mu.atoms() {
                    let mut v = vec![0.0; d];
                    for (y, w) in mu.atoms() {
                        let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
                        let a = map.apply(&z)?;
                        v.iter_mut().zip(&a).for_each(|(vi, ai)| *vi += w * ai);
                    }
                    rows.extend_from_slice(x);
                    rows.extend(v);
                }
                VelocityMeasure::from_rows(d, rows, mu.weights().to_vec())
            }
            MpvfSpec::PerParticleMap { map } => {
                let mut rows = Vec::with_capacity(mu.len() * 2 * mu.dim());
                for (x, _) in mu.atoms() {
                    rows.extend_from_slice(x);
                    rows.extend(map.apply(x)?);
                }
                VelocityMeasure::from_rows(mu.dim(), rows, mu.weights().to_vec())
            }
            MpvfSpec::CompositeSum { children } => {
                let parts = children.iter().map(|c| c.canonical(mu)).collect::<Result<Vec<_>>>()?;
                convolve_at_atoms(mu, &parts)
            }
            MpvfSpec::SelectionList { options } => options[0].canonical(mu),
        }
    }
}

impl Mpvf for MpvfSpec {
    fn sections(&self, mu: &DiscreteMeasure) -> Result<Vec<VelocityMeasure>> {
        match self {
            MpvfSpec::SelectionList { options } => {
                self.validate()?;
                options.iter().map(|o| o.canonical(mu)).collect()
            }
            _ => Ok(vec![self.canonical(mu)?]),
        }
    }

    fn evaluate(&self, mu: &DiscreteMeasure) -> Result<VelocityMeasure> {
        self.canonical(mu)
    }

    fn growth_bound(&self, r: f64) -> Option<f64> {
        match self {
            MpvfSpec::Potential { name: PotentialName::Quadratic, scale } => Some(scale.abs() * r),
            MpvfSpec::Potential { .. } => None,
            MpvfSpec::Interaction { kernel: KernelName::Quadratic, .. } => Some(r),
            MpvfSpec::Interaction { .. } => None,
            MpvfSpec::Constant { theta } => Some(theta.second_moment().value().sqrt()),
            MpvfSpec::Rotation => Some(r),
            MpvfSpec::SplittingParticle => Some(1.0),
            MpvfSpec::TowardMeasure { target, sign } => Some(sign.abs() * (r + target.second_moment().value().sqrt())),
            MpvfSpec::PairwiseMap { map: PairwiseName::NegCubic } => None,
            MpvfSpec::PairwiseMap { .. } => Some(r),
            MpvfSpec::PerParticleMap { map } => match map {
                MapName::NegSign => Some(1.0),
                m => m.lipschitz().map(|l| l * r),
            },
            MpvfSpec::CompositeSum { children } => children.iter().map(|c| c.growth_bound(r)).sum(),
            MpvfSpec::SelectionList { options } => {
                options.iter().filter_map(|o| o.growth_bound(r)).min_by(f64::total_cmp)
            }
        }
    }
}

/// `|F|_2(mu)`: the smallest velocity norm among the sections.
pub fn field_norm<F: Mpvf + ?Sized>(field: &F, mu: &DiscreteMeasure) -> Result<ScalarMoment> {
    let best = field
        .sections(mu)?
        .iter()
        .map(|s| s.velocity_norm().value())
        .min_by(f64::total_cmp)
        .ok_or_else(|| Error::InvalidField("field has an empty section".into()))?;
    Ok(ScalarMoment::new(best))
}

/// Median location `B(nu)`: the first atom (in increasing order) at which the
/// cumulative mass exceeds one half.
pub fn splitting_median(nu: &DiscreteMeasure) -> Result<usize> {
    if nu.dim() != 1 {
        return Err(Error::UnsupportedDimension { expected: 1, got: nu.dim() });
    }
    let order = nu.sorted_indices();
    let mut cum = 0.0;
    for &i in &order {
        cum += nu.weight(i);
        if cum > 0.5 + MEDIAN_TOL {
            return Ok(i);
        }
    }
    Ok(*order.last().expect("non-empty measure"))
}

/// Masses `(moving left, moving right)` of the atom at the median.
pub fn splitting_coefficients(nu: &DiscreteMeasure, b: usize) -> (f64, f64) {
    let xb = nu.point(b)[0];
    let below: f64 = nu.atoms().filter(|(x, _)| x[0] < xb).map(|(_, w)| w).sum();
    let wb = nu.weight(b);
    let snap = |c: f64| if c.abs() < SPLIT_EPS { 0.0 } else { c.clamp(0.0, wb) };
    let right = snap(below + wb - 0.5);
    let left = snap(wb - right);
    (left, right)
}

fn splitting_particle(nu: &DiscreteMeasure) -> Result<VelocityMeasure> {
    let b = splitting_median(nu)?;
    let xb = nu.point(b)[0];
    let (left, right) = splitting_coefficients(nu, b);
    let mut rows = Vec::with_capacity(2 * (nu.len() + 1));
    let mut w = Vec::with_capacity(nu.len() + 1);
    for (x, wx) in nu.atoms() {
        if x[0] < xb {
            rows.extend([x[0], -1.0]);
            w.push(wx);
        } else if x[0] > xb {
            rows.extend([x[0], 1.0]);
            w.push(wx);
        } else {
            rows.extend([x[0], -1.0, x[0], 1.0]);
            w.extend([left, right]);
        }
    }
    VelocityMeasure::from_rows(1, rows, w)
}

/// At each atom of `mu`, the law of the sum of independent draws from the
/// children's conditional velocity laws.
fn convolve_at_atoms(mu: &DiscreteMeasure, parts: &[VelocityMeasure]) -> Result<VelocityMeasure> {
    let d = mu.dim();
    let index = parts.iter().map(|p| marginal_index(p, mu)).collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut weights = Vec::new();
    for (i, (x, wi)) in mu.atoms().enumerate() {
        // conditional laws (velocity, probability) per child
        let mut acc: Vec<(Vec<f64>, f64)> = vec![(vec![0.0; d], 1.0)];
        for (p, idx) in parts.iter().zip(&index) {
            let cond: Vec<(&[f64], f64)> =
                (0..p.len()).filter(|&k| idx[k] == i).map(|k| (p.v(k), p.weight(k) / wi)).collect();
            let mut next = Vec::with_capacity(acc.len() * cond.len());
            for (v, q) in &acc {
                for (u, r) in &cond {
                    next.push((v.iter().zip(*u).map(|(a, b)| a + b).collect(), q * r));
                }
            }
            acc = next;
        }
        for (v, q) in acc {
            rows.extend_from_slice(x);
            rows.extend(v);
            weights.push(wi * q);
        }
    }
    VelocityMeasure::from_rows(d, rows, weights)
}
