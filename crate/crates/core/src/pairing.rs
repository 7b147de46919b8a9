//! One-sided duality pairings between velocity measures.
//!
//! `[Phi0, Phi1]_r` is the minimum and `[Phi0, Phi1]_l` the maximum of
//! `int <x0 - x1, v0 - v1> dTheta` over couplings `Theta` of the two velocity
//! measures whose position plan is optimal. These are the right and left
//! derivatives at zero of `s -> W_2^2(exp^s Phi0, exp^s Phi1) / 2`.

use serde::Serialize;

use crate::analysis::curve::Curve;
use crate::error::{Error, Result};
use crate::measure::{dot, DiscreteMeasure, VelocityMeasure};
use crate::transport::simplex::solve_lexicographic;
use crate::transport::{self, lexi_transport_lp, Coupling, Objective, PlanEntry, FACE_TOL};

/// Tolerance for identifying interpolated positions with atoms.
pub const COMPAT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Right,
    Left,
}

impl Side {
    fn objective(self) -> Objective {
        match self {
            Side::Right => Objective::Min,
            Side::Left => Objective::Max,
        }
    }
}

/// A pairing value with an optimal witness.
///
/// When several optimal plans exist the witness is the first optimizer found
/// by the simplex and is not unique.
#[derive(Debug, Clone)]
pub struct PairingResult {
    pub value: f64,
    pub side: Side,
    /// Plan entries indexed by the atoms of the two arguments (for the
    /// directional pairing: plan entry index and velocity atom index).
    pub witness: Vec<PlanEntry>,
    /// The position plan of the witness.
    pub position_plan: Coupling,
}

pub fn pairing(phi0: &VelocityMeasure, phi1: &VelocityMeasure, side: Side) -> Result<PairingResult> {
    let plan = lexi_transport_lp(phi0, phi1, side.objective())?;
    let position_plan = plan.position_coupling(phi0, phi1)?;
    Ok(PairingResult { value: plan.value, side, witness: plan.entries, position_plan })
}

/// `[Phi0, Phi1]_r`.
pub fn pairing_r(phi0: &VelocityMeasure, phi1: &VelocityMeasure) -> Result<PairingResult> {
    pairing(phi0, phi1, Side::Right)
}

/// `[Phi0, Phi1]_l`.
pub fn pairing_l(phi0: &VelocityMeasure, phi1: &VelocityMeasure) -> Result<PairingResult> {
    pairing(phi0, phi1, Side::Left)
}

/// Pairing against the zero-velocity lift of `nu`.
pub fn pairing_nu(phi: &VelocityMeasure, nu: &DiscreteMeasure, side: Side) -> Result<PairingResult> {
    if phi.dim() != nu.dim() {
        return Err(Error::DimensionMismatch { left: phi.dim(), right: nu.dim() });
    }
    pairing(phi, &VelocityMeasure::zero_lift(nu), side)
}

/// `[Phi, nu]_r`.
pub fn pairing_r_nu(phi: &VelocityMeasure, nu: &DiscreteMeasure) -> Result<PairingResult> {
    pairing_nu(phi, nu, Side::Right)
}

/// `[Phi, nu]_l`.
pub fn pairing_l_nu(phi: &VelocityMeasure, nu: &DiscreteMeasure) -> Result<PairingResult> {
    pairing_nu(phi, nu, Side::Left)
}

/// Optimizes `int <x0 - x1, v0> dsigma` over measures `sigma` on
/// `(x0, x1, v0)` whose `(x0, x1)` marginal is `gamma` and whose image under
/// `((1 - t) x0 + t x1, v0)` is `phi`.
///
/// Plan entries are matched with velocity atoms at the same interpolated
/// position, and each position group is solved as a small transport problem.
pub fn directional_pairing(phi: &VelocityMeasure, gamma: &Coupling, t: f64, side: Side) -> Result<PairingResult> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::OutOfRange { value: t, lo: 0.0, hi: 1.0 });
    }
    if phi.dim() != gamma.rows().dim() {
        return Err(Error::DimensionMismatch { left: phi.dim(), right: gamma.rows().dim() });
    }
    if !transport::is_optimal(gamma, None)? {
        let optimum = transport::w2(gamma.rows(), gamma.cols())?.cost;
        return Err(Error::NotOptimal { cost: gamma.cost(), optimum });
    }

    let base = phi.x_marginal();
    let d = phi.dim();
    let phi_group = transport::marginal_index(phi, &base)?;

    // interpolated position of each plan entry, located in the base measure
    let entries = gamma.entries();
    let mut entry_group = Vec::with_capacity(entries.len());
    let mut group_mass = vec![0.0; base.len()];
    for e in entries {
        let (x0, x1) = (gamma.rows().point(e.i), gamma.cols().point(e.j));
        let xt: Vec<f64> = (0..d).map(|k| (1.0 - t) * x0[k] + t * x1[k]).collect();
        let g = (0..base.len())
            .find(|&g| base.point(g).iter().zip(&xt).all(|(a, b)| (a - b).abs() <= COMPAT_TOL))
            .ok_or_else(|| Error::MarginalMismatch(format!("interpolated position {xt:?} carries no velocity")))?;
        entry_group.push(g);
        group_mass[g] += e.mass;
    }
    for (g, (m, w)) in group_mass.iter().zip(base.weights()).enumerate() {
        if (m - w).abs() > COMPAT_TOL {
            return Err(Error::MarginalMismatch(format!("position {g}: plan mass {m} vs field mass {w}")));
        }
    }

    let sign = match side {
        Side::Right => 1.0,
        Side::Left => -1.0,
    };
    let mut value = 0.0;
    let mut witness = Vec::new();
    for g in 0..base.len() {
        let ks: Vec<usize> = (0..entries.len()).filter(|&k| entry_group[k] == g).collect();
        let ls: Vec<usize> = (0..phi.len()).filter(|&l| phi_group[l] == g).collect();
        let supply: Vec<f64> = ks.iter().map(|&k| entries[k].mass).collect();
        let demand: Vec<f64> = ls.iter().map(|&l| phi.weight(l)).collect();
        let mut cost = Vec::with_capacity(ks.len() * ls.len());
        for &k in &ks {
            let e = entries[k];
            let dx: Vec<f64> =
                gamma.rows().point(e.i).iter().zip(gamma.cols().point(e.j)).map(|(a, b)| a - b).collect();
            for &l in &ls {
                cost.push(dot(&dx, phi.v(l)));
            }
        }
        let signed: Vec<f64> = cost.iter().map(|c| sign * c).collect();
        let sol = solve_lexicographic(&supply, &demand, &signed, None, FACE_TOL)?;
        for (a, b, mass) in sol.entries {
            value += mass * cost[a * ls.len() + b];
            witness.push(PlanEntry { i: ks[a], j: ls[b], mass });
        }
    }
    Ok(PairingResult { value, side, witness, position_plan: gamma.clone() })
}

/// Default step for [`dini_w2`].
pub const DINI_STEP: f64 = 1e-3;

/// One-sided derivative of `s -> W_2^2(mu_s, nu) / 2` at `t`, from one-sided
/// difference quotients at steps `h` and `h / 2` combined by Richardson
/// extrapolation.
pub fn dini_w2<C: Curve + ?Sized>(curve: &C, nu: &DiscreteMeasure, t: f64, side: Side, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::OutOfRange { value: h, lo: 0.0, hi: f64::INFINITY });
    }
    let g = |s: f64| -> Result<f64> { Ok(0.5 * transport::w2(&curve.at(s)?, nu)?.cost) };
    let g0 = g(t)?;
    let quotient = |step: f64| -> Result<f64> {
        Ok(match side {
            Side::Right => (g(t + step)? - g0) / step,
            Side::Left => (g0 - g(t - step)?) / step,
        })
    };
    let full = quotient(h)?;
    let half = quotient(0.5 * h)?;
    Ok(2.0 * half - full)
}
