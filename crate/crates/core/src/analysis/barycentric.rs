//! Weak continuity equation `d/dt int phi dmu_t = int <grad phi(x), v> dPhi_t`
//! with `Phi_t` a section of `F[mu_t]`, checked by central differences.

use serde::{Deserialize, Serialize};

use super::curve::CurveSamples;
use crate::error::{Error, Result};
use crate::field::Mpvf;
use crate::measure::{dot, norm_sq};
use crate::par::{self, Execution};
use crate::report::CheckRow;

/// Floor added to every finite-difference budget.
pub const BARYCENTRIC_FLOOR: f64 = 1e-7;

/// Polynomial test functions of degree at most three.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    /// `psi(<a, x>)` with `psi(s) = c0 + c1 s + c2 s^2 + c3 s^3`.
    Cylindrical { direction: Vec<f64>, coeffs: [f64; 4] },
    /// `|x|^2`
    SquaredNorm,
}

impl TestFunction {
    /// `phi(x) = x_k`.
    pub fn coordinate(k: usize, dim: usize) -> Self {
        let mut direction = vec![0.0; dim];
        direction[k] = 1.0;
        TestFunction::Cylindrical { direction, coeffs: [0.0, 1.0, 0.0, 0.0] }
    }

    /// `phi(x) = x_k^3`.
    pub fn cubic(k: usize, dim: usize) -> Self {
        let mut direction = vec![0.0; dim];
        direction[k] = 1.0;
        TestFunction::Cylindrical { direction, coeffs: [0.0, 0.0, 0.0, 1.0] }
    }

    /// Coordinates, squared norm, cubes of coordinates and a mixed cubic.
    pub fn battery(dim: usize) -> Vec<TestFunction> {
        let mut out: Vec<TestFunction> = (0..dim).map(|k| Self::coordinate(k, dim)).collect();
        out.push(TestFunction::SquaredNorm);
        out.extend((0..dim).map(|k| Self::cubic(k, dim)));
        out.push(TestFunction::Cylindrical { direction: vec![1.0; dim], coeffs: [0.5, -1.0, 0.25, 1.0] });
        out
    }

    pub fn name(&self) -> String {
        match self {
            TestFunction::SquaredNorm => "|x|^2".into(),
            TestFunction::Cylindrical { direction, coeffs } => format!("psi{coeffs:?}(<{direction:?},x>)"),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            TestFunction::SquaredNorm => norm_sq(x),
            TestFunction::Cylindrical { direction, coeffs } => {
                let s = dot(direction, x);
                coeffs[0] + s * (coeffs[1] + s * (coeffs[2] + s * coeffs[3]))
            }
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            TestFunction::SquaredNorm => x.iter().map(|c| 2.0 * c).collect(),
            TestFunction::Cylindrical { direction, coeffs } => {
                let s = dot(direction, x);
                let d = coeffs[1] + s * (2.0 * coeffs[2] + s * 3.0 * coeffs[3]);
                direction.iter().map(|a| d * a).collect()
            }
        }
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        match self {
            TestFunction::Cylindrical { direction, .. } if direction.len() != dim => {
                Err(Error::DimensionMismatch { left: dim, right: direction.len() })
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BarycentricReport {
    /// Largest `|lhs - rhs|` over interior nodes and test functions.
    pub max_residual: f64,
    /// Largest `|lhs - rhs| - budget`; passes when `<= 0`.
    pub max_excess: f64,
    pub passed: bool,
    #[serde(skip)]
    pub rows: Vec<CheckRow>,
}

/// At every interior node, compares the central difference of
/// `t -> int phi dmu_t` with `int <grad phi, v> dPhi` for the section closest
/// to it. The budget is `max |third difference| / (3 dt) + BARYCENTRIC_FLOOR`,
/// twice the leading error of the central difference.
pub fn barycentric_residual<F: Mpvf + ?Sized>(
    curve: &CurveSamples,
    field: &F,
    tests: &[TestFunction],
    exec: Execution,
) -> Result<BarycentricReport> {
    curve.require(3)?;
    for f in tests {
        f.check_dim(curve.dim())?;
    }
    let times = curve.times();
    let n = times.len();
    let sections = par::collect_results(par::map_slice(exec, curve.measures(), |mu| field.sections(mu)))?;

    let mut report =
        BarycentricReport { max_residual: 0.0, max_excess: f64::NEG_INFINITY, passed: true, rows: Vec::new() };
    for f in tests {
        let g: Vec<f64> = curve.measures().iter().map(|mu| mu.integrate(|x| f.value(x))).collect();
        let d3 = (0..n.saturating_sub(3))
            .map(|k| (g[k + 3] - 3.0 * g[k + 2] + 3.0 * g[k + 1] - g[k]).abs())
            .fold(0.0f64, f64::max);
        for k in 1..n - 1 {
            let dt = times[k + 1] - times[k - 1];
            let lhs = (g[k + 1] - g[k - 1]) / dt;
            let rhs = sections[k]
                .iter()
                .map(|phi| phi.atoms().map(|(x, v, w)| w * dot(&f.gradient(x), v)).sum::<f64>())
                .min_by(|a, b| (a - lhs).abs().total_cmp(&(b - lhs).abs()))
                .expect("non-empty section list");
            let budget = d3 / (1.5 * dt) + BARYCENTRIC_FLOOR;
            let gap = (lhs - rhs).abs();
            report.max_residual = report.max_residual.max(gap);
            report.max_excess = report.max_excess.max(gap - budget);
            report.rows.push(CheckRow::new("barycentric", f.name(), times[k], lhs, rhs));
        }
    }
    report.passed = report.max_excess <= 0.0;
    Ok(report)
}
