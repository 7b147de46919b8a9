use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{dot, sq_dist, DiscreteMeasure, VelocityMeasure};

use super::{simplex, Coupling, PlanEntry, FACE_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Min,
    Max,
}

/// An optimizer of the secondary objective among optimal plans, with entries
/// indexed by the atoms of the two velocity measures.
#[derive(Debug, Clone)]
pub struct VelocityPlan {
    /// Secondary objective `sum Theta_ij <x_i - y_j, v_i - w_j>`.
    pub value: f64,
    /// Quadratic cost of the position plan (equals `W_2^2` of the marginals).
    pub primary_cost: f64,
    pub entries: Vec<PlanEntry>,
}

impl VelocityPlan {
    /// Aggregates the plan onto the x-marginals of `row` and `col`.
    pub fn position_coupling(&self, row: &VelocityMeasure, col: &VelocityMeasure) -> Result<Coupling> {
        let mu = row.x_marginal();
        let nu = col.x_marginal();
        let ri = marginal_index(row, &mu)?;
        let ci = marginal_index(col, &nu)?;
        let mut acc: Vec<PlanEntry> = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            let (i, j) = (ri[e.i], ci[e.j]);
            match acc.iter_mut().find(|a| a.i == i && a.j == j) {
                Some(a) => a.mass += e.mass,
                None => acc.push(PlanEntry { i, j, mass: e.mass }),
            }
        }
        acc.sort_by_key(|e| (e.i, e.j));
        Coupling::new(mu, nu, acc)
    }
}

/// For every atom of `phi`, the index of its position in `mu`.
pub(crate) fn marginal_index(phi: &VelocityMeasure, mu: &DiscreteMeasure) -> Result<Vec<usize>> {
    (0..phi.len())
        .map(|k| {
            let x = phi.x(k);
            let (best, d2) = (0..mu.len())
                .map(|i| (i, sq_dist(x, mu.point(i))))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("non-empty measure");
            if d2.sqrt() > 1e-9 {
                return Err(Error::MarginalMismatch(format!("position {x:?} not in the base measure")));
            }
            Ok(best)
        })
        .collect()
}

/// Optimizes `sum Theta_ij <x_i - y_j, v_i - w_j>` over couplings of the two
/// velocity measures whose position plan is optimal for the quadratic cost.
///
/// Solved lexicographically: the quadratic cost is minimized first, then the
/// secondary objective is optimized over the cells with zero reduced cost.
pub fn lexi_transport_lp(row: &VelocityMeasure, col: &VelocityMeasure, objective: Objective) -> Result<VelocityPlan> {
    if row.dim() != col.dim() {
        return Err(Error::DimensionMismatch { left: row.dim(), right: col.dim() });
    }
    let (m, n) = (row.len(), col.len());
    let d = row.dim();
    let mut primary = Vec::with_capacity(m * n);
    let mut secondary = Vec::with_capacity(m * n);
    let mut dx = vec![0.0; d];
    let mut dv = vec![0.0; d];
    for (x, v, _) in row.atoms() {
        for (y, w, _) in col.atoms() {
            for k in 0..d {
                dx[k] = x[k] - y[k];
                dv[k] = v[k] - w[k];
            }
            primary.push(dot(&dx, &dx));
            secondary.push(dot(&dx, &dv));
        }
    }
    let sign = match objective {
        Objective::Min => 1.0,
        Objective::Max => -1.0,
    };
    let signed: Vec<f64> = secondary.iter().map(|s| sign * s).collect();
    let sol = simplex::solve_lexicographic(row.weights(), col.weights(), &primary, Some(&signed), FACE_TOL)?;
    if !sol.secondary.is_finite() {
        return Err(Error::Solver("non-finite objective".into()));
    }
    let entries: Vec<PlanEntry> = sol.entries.iter().map(|&(i, j, mass)| PlanEntry { i, j, mass }).collect();
    let value = entries.iter().map(|e| e.mass * secondary[e.i * n + e.j]).sum();
    Ok(VelocityPlan { value, primary_cost: sol.primary.max(0.0), entries })
}
