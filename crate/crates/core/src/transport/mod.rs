//! Exact optimal transport between discrete measures.

mod lexi;
mod one_d;
pub(crate) mod simplex;

pub(crate) use lexi::marginal_index;
pub use lexi::{lexi_transport_lp, Objective, VelocityPlan};
pub use one_d::w2_1d;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{sq_dist, DiscreteMeasure};

/// Absolute tolerance on plan marginals.
pub const MARGINAL_TOL: f64 = 1e-9;

/// Relative reduced-cost threshold defining the optimal face.
pub const FACE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanEntry {
    pub i: usize,
    pub j: usize,
    pub mass: f64,
}

/// A transport plan between two discrete measures, stored sparsely.
#[derive(Debug, Clone)]
pub struct Coupling {
    rows: DiscreteMeasure,
    cols: DiscreteMeasure,
    entries: Vec<PlanEntry>,
}

impl Coupling {
    /// Validates that row and column sums reproduce the marginals.
    pub fn new(rows: DiscreteMeasure, cols: DiscreteMeasure, entries: Vec<PlanEntry>) -> Result<Self> {
        rows.ensure_same_dim(&cols)?;
        let mut rs = vec![0.0; rows.len()];
        let mut cs = vec![0.0; cols.len()];
        for e in &entries {
            if e.i >= rows.len() || e.j >= cols.len() || !(e.mass >= 0.0) {
                return Err(Error::MarginalMismatch(format!("bad entry {e:?}")));
            }
            rs[e.i] += e.mass;
            cs[e.j] += e.mass;
        }
        for (k, (s, w)) in rs.iter().zip(rows.weights()).enumerate() {
            if (s - w).abs() > MARGINAL_TOL {
                return Err(Error::MarginalMismatch(format!("row {k}: {s} vs {w}")));
            }
        }
        for (k, (s, w)) in cs.iter().zip(cols.weights()).enumerate() {
            if (s - w).abs() > MARGINAL_TOL {
                return Err(Error::MarginalMismatch(format!("column {k}: {s} vs {w}")));
            }
        }
        let entries = entries.into_iter().filter(|e| e.mass > 0.0).collect();
        Ok(Coupling { rows, cols, entries })
    }

    pub fn rows(&self) -> &DiscreteMeasure {
        &self.rows
    }

    pub fn cols(&self) -> &DiscreteMeasure {
        &self.cols
    }

    pub fn entries(&self) -> &[PlanEntry] {
        &self.entries
    }

    /// `sum mass * |x_i - y_j|^2`.
    pub fn cost(&self) -> f64 {
        self.entries.iter().map(|e| e.mass * sq_dist(self.rows.point(e.i), self.cols.point(e.j))).sum()
    }

    /// The same plan read from column to row.
    pub fn transpose(&self) -> Coupling {
        let entries = self.entries.iter().map(|e| PlanEntry { i: e.j, j: e.i, mass: e.mass }).collect();
        Coupling { rows: self.cols.clone(), cols: self.rows.clone(), entries }
    }
}

#[derive(Debug, Clone)]
pub struct TransportResult {
    /// `W_2^2`.
    pub cost: f64,
    pub plan: Coupling,
    /// Potentials `(phi_i, psi_j)` with `phi_i + psi_j <= |x_i - y_j|^2`.
    pub duals: Option<(Vec<f64>, Vec<f64>)>,
}

impl TransportResult {
    pub fn distance(&self) -> f64 {
        self.cost.max(0.0).sqrt()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TransportSummary {
    pub cost: f64,
    pub n_entries: usize,
    pub runtime_ms: f64,
}

pub(crate) fn cost_matrix(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Vec<f64> {
    let mut c = Vec::with_capacity(mu.len() * nu.len());
    for (x, _) in mu.atoms() {
        for (y, _) in nu.atoms() {
            c.push(sq_dist(x, y));
        }
    }
    c
}

/// Exact squared Wasserstein distance and an optimal vertex plan.
pub fn w2(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<TransportResult> {
    mu.ensure_same_dim(nu)?;
    if mu.dim() == 1 {
        return w2_1d(mu, nu);
    }
    w2_simplex(mu, nu)
}

/// Network-simplex solve regardless of dimension.
pub fn w2_simplex(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<TransportResult> {
    mu.ensure_same_dim(nu)?;
    let cost = cost_matrix(mu, nu);
    let sol = simplex::solve_lexicographic(mu.weights(), nu.weights(), &cost, None, FACE_TOL)?;
    let entries = sol.entries.iter().map(|&(i, j, mass)| PlanEntry { i, j, mass }).collect();
    let plan = Coupling::new(mu.clone(), nu.clone(), entries)?;
    let m = mu.len();
    let duals = Some((sol.potentials[..m].to_vec(), sol.potentials[m..].to_vec()));
    Ok(TransportResult { cost: sol.primary.max(0.0), plan, duals })
}

/// Squared distance only.
pub fn w2_cost(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    Ok(w2(mu, nu)?.cost)
}

/// Whether `plan` is optimal for its marginals within `tol`
/// (default `1e-9 * (1 + cost)`).
pub fn is_optimal(plan: &Coupling, tol: Option<f64>) -> Result<bool> {
    let best = w2(plan.rows(), plan.cols())?.cost;
    let cost = plan.cost();
    let tol = tol.unwrap_or(1e-9 * (1.0 + cost));
    Ok(cost <= best + tol)
}

/// Displacement interpolation `(x^t)_# gamma` with `x^t = (1-t) x + t y`.
pub fn geodesic_point(plan: &Coupling, t: f64) -> Result<DiscreteMeasure> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::OutOfRange { value: t, lo: 0.0, hi: 1.0 });
    }
    if !is_optimal(plan, None)? {
        let optimum = w2(plan.rows(), plan.cols())?.cost;
        return Err(Error::NotOptimal { cost: plan.cost(), optimum });
    }
    Ok(interpolate_plan(plan, t))
}

/// `(x^t)_# gamma` without the optimality check.
pub(crate) fn interpolate_plan(plan: &Coupling, t: f64) -> DiscreteMeasure {
    let d = plan.rows().dim();
    let mut coords = Vec::with_capacity(plan.entries().len() * d);
    let mut w = Vec::with_capacity(plan.entries().len());
    for e in plan.entries() {
        let (x, y) = (plan.rows().point(e.i), plan.cols().point(e.j));
        coords.extend(x.iter().zip(y).map(|(a, b)| (1.0 - t) * a + t * b));
        w.push(e.mass);
    }
    DiscreteMeasure::from_flat(d, coords, w).expect("interpolation of a valid plan")
}

/// Barycentric projection of `plan`: for each row atom, the conditional mean
/// of its column partners.
pub fn barycentric_projection(plan: &Coupling) -> Vec<Vec<f64>> {
    let d = plan.rows().dim();
    let mut b = vec![vec![0.0; d]; plan.rows().len()];
    for e in plan.entries() {
        let y = plan.cols().point(e.j);
        b[e.i].iter_mut().zip(y).for_each(|(bi, yi)| *bi += e.mass * yi);
    }
    for (i, bi) in b.iter_mut().enumerate() {
        let w = plan.rows().weight(i);
        bi.iter_mut().for_each(|c| *c /= w);
    }
    b
}
