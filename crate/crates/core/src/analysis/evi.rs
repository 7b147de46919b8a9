//! Integrated evolution variational inequality
//! `e^{-2 lambda (t-s)} W_2^2(mu_t, nu) - W_2^2(mu_s, nu)
//!   <= -2 int_s^t e^{-2 lambda (r-s)} [Phi, mu_r]_r dr`
//! for every section `Phi` of `F[nu]`, checked on all grid pairs `s < t`.

use serde::Serialize;

use super::curve::CurveSamples;
use crate::error::Result;
use crate::field::Mpvf;
use crate::measure::DiscreteMeasure;
use crate::pairing::pairing_r_nu;
use crate::par::{self, Execution};
use crate::report::CheckRow;
use crate::transport::w2;

/// Floor added to every quadrature budget.
pub const EVI_FLOOR: f64 = 1e-7;

#[derive(Debug, Clone, Serialize)]
pub struct EviReport {
    pub lambda: f64,
    /// Largest `lhs - rhs` over grid pairs and sections.
    pub max_residual: f64,
    /// Largest `lhs - rhs - budget`; the curve passes when this is `<= 0`.
    pub max_excess: f64,
    pub passed: bool,
    /// `(s, t)` attaining `max_residual`.
    pub worst_pair: (f64, f64),
    /// Max residual per section of `F[nu]`, in selection order.
    pub per_section: Vec<f64>,
    #[serde(skip)]
    pub rows: Vec<CheckRow>,
}

/// Evaluates the integrated inequality with trapezoidal quadrature on the grid.
///
/// Each pair `(s, t)` gets the budget `(t - s) / 6 * max |second difference|`
/// of the integrand `2 e^{-2 lambda (r - s)} [Phi, mu_r]_r` plus
/// [`EVI_FLOOR`], twice the leading trapezoid error term.
pub fn evi_residual<F: Mpvf + ?Sized>(
    curve: &CurveSamples,
    field: &F,
    nu: &DiscreteMeasure,
    lambda: f64,
    exec: Execution,
) -> Result<EviReport> {
    curve.require(3)?;
    let times = curve.times();
    let n = times.len();
    let dist = par::collect_results(par::map_slice(exec, curve.measures(), |mu| w2(mu, nu).map(|r| r.cost)))?;
    let sections = field.sections(nu)?;

    let mut report = EviReport {
        lambda,
        max_residual: f64::NEG_INFINITY,
        max_excess: f64::NEG_INFINITY,
        passed: true,
        worst_pair: (times[0], times[1]),
        per_section: Vec::with_capacity(sections.len()),
        rows: Vec::new(),
    };
    for (idx, phi) in sections.iter().enumerate() {
        let p =
            par::collect_results(par::map_slice(exec, curve.measures(), |mu| pairing_r_nu(phi, mu).map(|r| r.value)))?;
        // integrand without the e^{2 lambda s} factor: g(r) = 2 e^{-2 lambda r} p(r)
        let g: Vec<f64> = (0..n).map(|k| 2.0 * (-2.0 * lambda * times[k]).exp() * p[k]).collect();
        let mut prefix = vec![0.0; n];
        for k in 1..n {
            prefix[k] = prefix[k - 1] + 0.5 * (times[k] - times[k - 1]) * (g[k] + g[k - 1]);
        }
        // second differences at interior nodes
        let mut sd = vec![0.0; n];
        for k in 1..n - 1 {
            sd[k] = (g[k + 1] - 2.0 * g[k] + g[k - 1]).abs();
        }
        let mut section_max = f64::NEG_INFINITY;
        for i in 0..n {
            let mut curv = sd[i.clamp(1, n - 2)];
            for j in i + 1..n {
                curv = curv.max(sd[j.min(n - 2)]);
                let (s, t) = (times[i], times[j]);
                let scale = (2.0 * lambda * s).exp();
                let lhs = (-2.0 * lambda * (t - s)).exp() * dist[j] - dist[i];
                let rhs = -scale * (prefix[j] - prefix[i]);
                let budget = scale * (t - s) / 6.0 * curv + EVI_FLOOR;
                let residual = lhs - rhs;
                if residual > report.max_residual {
                    report.max_residual = residual;
                    report.worst_pair = (s, t);
                }
                section_max = section_max.max(residual);
                report.max_excess = report.max_excess.max(residual - budget);
                report.rows.push(CheckRow::new("evi", format!("section={idx};s={s}"), t, lhs, rhs));
            }
        }
        report.per_section.push(section_max);
    }
    report.passed = report.max_excess <= 0.0;
    Ok(report)
}
