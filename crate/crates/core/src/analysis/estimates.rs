//! Quantitative estimates for the Euler scheme: same-step stability, the
//! Cauchy bound between two step sizes, and error-rate studies against a
//! reference solution.

use serde::Serialize;

use super::curve::Curve;
use crate::error::{Error, Result};
use crate::euler::{euler_run, EulerTrajectory, Interpolation};
use crate::field::Mpvf;
use crate::measure::DiscreteMeasure;
use crate::par::{self, Execution};
use crate::report::CheckRow;
use crate::transport::w2;

/// Pass threshold for [`contraction_check`].
pub const CONTRACTION_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeReport {
    /// Largest `W_2 - bound` over grid times.
    pub max_excess: f64,
    pub passed: bool,
    /// `(t, W_2)` on the grid.
    pub distances: Vec<(f64, f64)>,
    #[serde(skip)]
    pub rows: Vec<CheckRow>,
}

impl EnvelopeReport {
    /// `W_2(t) / W_2(0)` at the grid time closest to `t`.
    pub fn ratio_at(&self, t: f64) -> Option<f64> {
        let (_, w0) = *self.distances.first()?;
        let (_, wt) = *self.distances.iter().min_by(|a, b| (a.0 - t).abs().total_cmp(&(b.0 - t).abs()))?;
        Some(wt / w0)
    }
}

/// Same-step stability allowance `8 L sqrt(t tau) (1 + |lambda| sqrt(t tau)) e^{lambda_+ t}`.
pub fn stability_allowance(l: f64, lambda: f64, tau: f64, t: f64) -> f64 {
    let r = (t * tau).sqrt();
    8.0 * l * r * (1.0 + lambda.abs() * r) * (lambda.max(0.0) * t).exp()
}

/// Runs the scheme from `mu0` and `mu1` with the same step and compares
/// `W_2(M_tau(t), M'_tau(t))` with `e^{lambda t} W_2(mu0, mu1)` plus the
/// stability allowance at every grid time. Requires `lambda_+ tau <= 2`.
#[allow(clippy::too_many_arguments)]
pub fn contraction_check<F: Mpvf + ?Sized>(
    field: &F,
    mu0: &DiscreteMeasure,
    mu1: &DiscreteMeasure,
    tau: f64,
    horizon: f64,
    lambda: f64,
    bound: f64,
    exec: Execution,
) -> Result<EnvelopeReport> {
    if lambda.max(0.0) * tau > 2.0 {
        return Err(Error::Precondition(format!("lambda_+ tau = {} exceeds 2", lambda.max(0.0) * tau)));
    }
    let starts = [mu0, mu1];
    let mut runs = par::collect_results(par::map_slice(exec, &starts, |m| euler_run(field, m, tau, horizon, bound)))?;
    let b = runs.pop().expect("two runs");
    let a = runs.pop().expect("two runs");
    let w0 = w2(mu0, mu1)?.distance();
    let n = a.n_steps();
    let dist =
        par::collect_results(par::map_range(exec, n + 1, |k| w2(a.measure(k), b.measure(k)).map(|r| r.distance())))?;
    let mut report =
        EnvelopeReport { max_excess: f64::NEG_INFINITY, passed: true, distances: Vec::new(), rows: Vec::new() };
    for (k, &d) in dist.iter().enumerate() {
        let t = a.time(k);
        let rhs = (lambda * t).exp() * w0 + stability_allowance(bound, lambda, tau, t);
        report.max_excess = report.max_excess.max(d - rhs);
        report.distances.push((t, d));
        report.rows.push(CheckRow::new("contraction", format!("tau={tau};lambda={lambda}"), t, d, rhs));
    }
    report.passed = report.max_excess <= CONTRACTION_TOL;
    Ok(report)
}

/// `C(theta) = sqrt(14 theta + 4 theta / (theta - 1)) + 10 theta`.
pub fn cauchy_constant(theta: f64) -> f64 {
    let conj = theta / (theta - 1.0);
    (14.0 * theta + 4.0 * conj).sqrt() + 10.0 * theta
}

/// Compares two affine Euler interpolants on the union of their grids with
/// `(sqrt(theta) W_2(M_tau(0), M_eta(0)) + C(theta) L sqrt((tau + eta)(t + tau + eta))) e^{lambda_+ t}`,
/// `L` the larger of the two stability bounds.
pub fn cauchy_gap_check(a: &EulerTrajectory, b: &EulerTrajectory, theta: f64, lambda: f64) -> Result<EnvelopeReport> {
    if !(theta > 1.0) {
        return Err(Error::Precondition(format!("theta must exceed 1, got {theta}")));
    }
    let (tau, eta) = (a.tau(), b.tau());
    let end = a.end_time().min(b.end_time());
    if lambda * (end * (tau + eta)).sqrt() > 1.0 {
        return Err(Error::Precondition(format!(
            "lambda sqrt(T (tau + eta)) = {} exceeds 1",
            lambda * (end * (tau + eta)).sqrt()
        )));
    }
    let mut grid: Vec<f64> = (0..=a.n_steps()).map(|k| a.time(k)).chain((0..=b.n_steps()).map(|k| b.time(k))).collect();
    grid.retain(|&t| t <= end * (1.0 + 1e-12));
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * (1.0 + end));

    let l = a.bound().max(b.bound());
    let w0 = w2(a.measure(0), b.measure(0))?.distance();
    let c = cauchy_constant(theta);
    let mut report =
        EnvelopeReport { max_excess: f64::NEG_INFINITY, passed: true, distances: Vec::new(), rows: Vec::new() };
    for &t in &grid {
        let d = w2(&a.interpolate(t, Interpolation::Affine)?, &b.interpolate(t, Interpolation::Affine)?)?.distance();
        let rhs = (theta.sqrt() * w0 + c * l * ((tau + eta) * (t + tau + eta)).sqrt()) * (lambda.max(0.0) * t).exp();
        report.max_excess = report.max_excess.max(d - rhs);
        report.distances.push((t, d));
        report.rows.push(CheckRow::new("cauchy", format!("tau={tau};eta={eta};theta={theta}"), t, d, rhs));
    }
    report.passed = report.max_excess <= 0.0;
    Ok(report)
}

/// Optimal error envelope `13 L sqrt(tau (t + tau))`.
pub fn error_envelope(l: f64, tau: f64, t: f64) -> f64 {
    13.0 * l * (tau * (t + tau)).sqrt()
}

/// Log-log least-squares fit of errors against step sizes.
#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    pub taus: Vec<f64>,
    pub errors: Vec<f64>,
    /// `None` when fewer than two errors remain after exclusion.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub r2: Option<f64>,
    /// Steps left out of the fit because their error is float noise.
    pub excluded: Vec<f64>,
    /// Largest `W_2(M_tau(t), reference(t)) - 13 L sqrt(tau (t + tau))` over
    /// all runs and grid times.
    pub envelope_excess: f64,
    #[serde(skip)]
    pub rows: Vec<CheckRow>,
}

/// Ordinary least squares `y = slope x + intercept`, with `r^2`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let n = x.len() as f64;
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::DegenerateFit(format!("need two or more points, got {}", x.len())));
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateFit("abscissae coincide".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok((slope, intercept, r2))
}

/// Runs the scheme for every step in `taus` (in parallel under
/// [`Execution::Parallel`]) and measures `e(tau) = W_2(M_tau(T), reference(T))`.
///
/// Errors below ten times the float resolution of the reference's scale are
/// excluded from the fit and listed in `excluded`.
#[allow(clippy::too_many_arguments)]
pub fn error_rate_study<F, C>(
    field: &F,
    mu0: &DiscreteMeasure,
    reference: &C,
    taus: &[f64],
    horizon: f64,
    bound: f64,
    exec: Execution,
) -> Result<RateFit>
where
    F: Mpvf + ?Sized,
    C: Curve + Sync + ?Sized,
{
    let mut distinct = taus.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::DegenerateFit(format!("need two or more distinct steps, got {}", distinct.len())));
    }
    let target = reference.at(horizon)?;
    let noise = 10.0 * f64::EPSILON * (1.0 + target.second_moment().value().sqrt());

    let per_tau = par::collect_results(par::map_slice(exec, taus, |&tau| -> Result<(f64, Vec<CheckRow>)> {
        let traj = euler_run(field, mu0, tau, horizon, bound)?;
        let err = w2(&traj.interpolate(horizon, Interpolation::Affine)?, &target)?.distance();
        let mut rows = Vec::with_capacity(traj.n_steps() + 1);
        for k in 0..=traj.n_steps() {
            let t = traj.time(k);
            let d = w2(traj.measure(k), &reference.at(t)?)?.distance();
            rows.push(CheckRow::new("envelope", format!("tau={tau}"), t, d, error_envelope(bound, tau, t)));
        }
        Ok((err, rows))
    }))?;

    let errors: Vec<f64> = per_tau.iter().map(|(e, _)| *e).collect();
    let rows: Vec<CheckRow> = per_tau.into_iter().flat_map(|(_, r)| r).collect();
    let envelope_excess = rows.iter().map(|r| r.excess).fold(f64::NEG_INFINITY, f64::max);
    let mut excluded = Vec::new();
    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    for (&tau, &e) in taus.iter().zip(&errors) {
        if e <= noise {
            excluded.push(tau);
        } else {
            lx.push(tau.ln());
            ly.push(e.ln());
        }
    }
    let fit = if lx.len() >= 2 { linear_fit(&lx, &ly).ok() } else { None };
    Ok(RateFit {
        taus: taus.to_vec(),
        errors,
        slope: fit.map(|f| f.0),
        intercept: fit.map(|f| f.1),
        r2: fit.map(|f| f.2),
        excluded,
        envelope_excess,
        rows,
    })
}
