use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;

use super::{Coupling, PlanEntry, TransportResult};

/// Mass below which a sweep remainder is treated as exhausted.
const SWEEP_EPS: f64 = 1e-15;

/// Co-monotone (quantile) coupling on the real line, which is optimal for the
/// quadratic cost.
pub fn w2_1d(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<TransportResult> {
    if mu.dim() != 1 {
        return Err(Error::UnsupportedDimension { expected: 1, got: mu.dim() });
    }
    if nu.dim() != 1 {
        return Err(Error::UnsupportedDimension { expected: 1, got: nu.dim() });
    }
    let a = mu.sorted_indices();
    let b = nu.sorted_indices();
    let mut ra = mu.weight(a[0]);
    let mut rb = nu.weight(b[0]);
    let (mut p, mut q) = (0, 0);
    let mut entries = Vec::with_capacity(a.len() + b.len());
    let mut cost = 0.0;
    loop {
        let (i, j) = (a[p], b[q]);
        let last = p + 1 == a.len() && q + 1 == b.len();
        let mass = if last { ra.max(rb) } else { ra.min(rb) };
        if mass > SWEEP_EPS || (last && mass > 0.0) {
            let dx = mu.point(i)[0] - nu.point(j)[0];
            cost += mass * dx * dx;
            entries.push(PlanEntry { i, j, mass });
        }
        if last {
            break;
        }
        ra -= mass;
        rb -= mass;
        let advance_p = ra <= SWEEP_EPS && p + 1 < a.len();
        let advance_q = rb <= SWEEP_EPS && q + 1 < b.len();
        match (advance_p, advance_q) {
            (false, false) if p + 1 < a.len() => {
                p += 1;
                ra = mu.weight(a[p]);
            }
            (false, false) => {
                q += 1;
                rb = nu.weight(b[q]);
            }
            _ => {
                if advance_p {
                    p += 1;
                    ra = mu.weight(a[p]);
                }
                if advance_q {
                    q += 1;
                    rb = nu.weight(b[q]);
                }
            }
        }
    }
    entries.sort_by_key(|e| (e.i, e.j));
    let plan = Coupling::new(mu.clone(), nu.clone(), entries)?;
    Ok(TransportResult { cost, plan, duals: None })
}
