//! The explicit Euler scheme `M^{n+1} = (exp^tau)_# Phi^n`, `Phi^n in F[M^n]`,
//! `|Phi^n|_2 <= L`.

use serde::{Deserialize, Serialize};

use crate::analysis::curve::CurveSamples;
use crate::error::{Error, Result};
use crate::field::Mpvf;
use crate::measure::{DiscreteMeasure, VelocityMeasure};
use crate::pairing::pairing_r_nu;
use crate::report::CheckRow;
use crate::transport::w2;

/// Default cap on the number of atoms of an iterate.
pub const DEFAULT_ATOM_BUDGET: usize = 200_000;

/// An IEVI step passes when its violation is at most `IEVI_TOL * (1 + max W^2)`.
pub const IEVI_TOL: f64 = 1e-7;

/// Relative slack on the stability bound absorbing rounding in `|Phi|_2`.
const BOUND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EulerOptions {
    pub tau: f64,
    pub horizon: f64,
    pub bound: f64,
    pub atom_budget: usize,
    /// Replace iterates above the budget by a stratified resample instead of
    /// failing. The affected steps are listed in the trajectory.
    pub thinning: bool,
}

impl EulerOptions {
    pub fn new(tau: f64, horizon: f64, bound: f64) -> Self {
        EulerOptions { tau, horizon, bound, atom_budget: DEFAULT_ATOM_BUDGET, thinning: false }
    }

    pub fn with_budget(mut self, atom_budget: usize, thinning: bool) -> Self {
        self.atom_budget = atom_budget;
        self.thinning = thinning;
        self
    }
}

/// `N(T, tau) = ceil(T / tau)`, robust to `T / tau` landing a hair above an
/// integer.
pub fn step_count(tau: f64, horizon: f64) -> usize {
    let r = horizon / tau;
    let n = r.round();
    if (r - n).abs() <= 1e-9 * n.max(1.0) {
        n as usize
    } else {
        r.ceil() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    /// `exp^{t - n tau}_# Phi^n` on `[n tau, (n + 1) tau]`.
    Affine,
    /// `M^n` on `[n tau, (n + 1) tau)`.
    Piecewise,
}

#[derive(Debug, Clone)]
pub struct EulerTrajectory {
    tau: f64,
    horizon: f64,
    bound: f64,
    measures: Vec<DiscreteMeasure>,
    velocities: Vec<VelocityMeasure>,
    thinned_steps: Vec<usize>,
}

impl EulerTrajectory {
    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Number of steps `N`.
    pub fn n_steps(&self) -> usize {
        self.velocities.len()
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.tau
    }

    /// `M^n` for `n = 0..=N`.
    pub fn measures(&self) -> &[DiscreteMeasure] {
        &self.measures
    }

    /// `Phi^n` for `n = 0..N`.
    pub fn velocities(&self) -> &[VelocityMeasure] {
        &self.velocities
    }

    pub fn measure(&self, n: usize) -> &DiscreteMeasure {
        &self.measures[n]
    }

    pub fn final_measure(&self) -> &DiscreteMeasure {
        self.measures.last().expect("trajectory holds M^0")
    }

    /// Steps whose iterate was thinned to respect the atom budget.
    pub fn thinned_steps(&self) -> &[usize] {
        &self.thinned_steps
    }

    /// End of the time grid, `N tau`.
    pub fn end_time(&self) -> f64 {
        self.time(self.n_steps())
    }

    pub fn interpolate(&self, t: f64, mode: Interpolation) -> Result<DiscreteMeasure> {
        let end = self.end_time();
        let slack = 1e-12 * (1.0 + end);
        if !(t >= -slack && t <= end + slack) {
            return Err(Error::OutOfRange { value: t, lo: 0.0, hi: end });
        }
        let t = t.clamp(0.0, end);
        let mut n = ((t / self.tau).floor() as usize).min(self.n_steps());
        // snap grid times that fall a rounding error below n tau
        if n < self.n_steps() && (self.time(n + 1) - t).abs() <= slack {
            n += 1;
        }
        let s = t - self.time(n);
        match mode {
            Interpolation::Piecewise => Ok(self.measures[n].clone()),
            Interpolation::Affine if n == self.n_steps() || s <= 0.0 => Ok(self.measures[n].clone()),
            Interpolation::Affine => Ok(self.velocities[n].push_exp(s)),
        }
    }

    /// The iterates as a sampled curve on the grid `n tau`.
    pub fn curve(&self) -> CurveSamples {
        let times = (0..=self.n_steps()).map(|n| self.time(n)).collect();
        CurveSamples::new(times, self.measures.clone()).expect("grid is increasing")
    }
}

/// Runs the scheme with default atom budget and no thinning.
pub fn euler_run<F: Mpvf + ?Sized>(
    field: &F,
    mu0: &DiscreteMeasure,
    tau: f64,
    horizon: f64,
    bound: f64,
) -> Result<EulerTrajectory> {
    euler_run_with(field, mu0, &EulerOptions::new(tau, horizon, bound))
}

pub fn euler_run_with<F: Mpvf + ?Sized>(
    field: &F,
    mu0: &DiscreteMeasure,
    opts: &EulerOptions,
) -> Result<EulerTrajectory> {
    for (name, v) in [("tau", opts.tau), ("horizon", opts.horizon), ("bound", opts.bound)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Precondition(format!("{name} must be positive and finite, got {v}")));
        }
    }
    let n = step_count(opts.tau, opts.horizon);
    let mut measures = Vec::with_capacity(n + 1);
    let mut velocities = Vec::with_capacity(n);
    let mut thinned_steps = Vec::new();
    measures.push(mu0.clone());
    for step in 0..n {
        let current = &measures[step];
        let sections = field.sections(current)?;
        let norms: Vec<f64> = sections.iter().map(|s| s.velocity_norm().value()).collect();
        let pick = norms
            .iter()
            .position(|&m| m <= opts.bound * (1.0 + BOUND_SLACK))
            .ok_or_else(|| Error::StabilityViolation { step, norms: norms.clone(), bound: opts.bound })?;
        let phi = sections.into_iter().nth(pick).expect("index from position");
        let mut next = phi.push_exp(opts.tau);
        if next.len() > opts.atom_budget {
            if !opts.thinning {
                return Err(Error::Precondition(format!(
                    "step {} has {} atoms, above the budget of {}",
                    step + 1,
                    next.len(),
                    opts.atom_budget
                )));
            }
            next = stratified_thin(&next, opts.atom_budget);
            thinned_steps.push(step + 1);
        }
        velocities.push(phi);
        measures.push(next);
    }
    Ok(EulerTrajectory { tau: opts.tau, horizon: opts.horizon, bound: opts.bound, measures, velocities, thinned_steps })
}

/// Systematic resampling to `k` equal-weight atoms along the lexicographic
/// order of positions.
pub fn stratified_thin(mu: &DiscreteMeasure, k: usize) -> DiscreteMeasure {
    let order = mu.sorted_indices();
    let mut coords = Vec::with_capacity(k * mu.dim());
    let mut cum = 0.0;
    let mut it = order.iter().peekable();
    let mut current = order[0];
    for s in 0..k {
        let u = (s as f64 + 0.5) / k as f64;
        while cum < u {
            match it.next() {
                Some(&i) => {
                    current = i;
                    cum += mu.weight(i);
                }
                None => break,
            }
        }
        coords.extend_from_slice(mu.point(current));
    }
    DiscreteMeasure::from_flat(mu.dim(), coords, vec![1.0 / k as f64; k]).expect("resample of a valid measure")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GlobalBounds {
    pub r: f64,
    pub l: f64,
    pub tau_max: f64,
}

/// Radius, stability bound and admissible step for a global Euler solution:
/// `R = m_2(mu0) + (|Psi0|_2 + 1) sqrt(2T) e^{(1 + 2 lambda_+) T}`,
/// `L = M(R)`, `tau_max = min(1 / L^2, tau_bar(R), T)`.
pub fn global_bounds(
    mu0: &DiscreteMeasure,
    psi0: &VelocityMeasure,
    horizon: f64,
    lambda: f64,
    growth: impl Fn(f64) -> f64,
    tau_bar: Option<f64>,
) -> GlobalBounds {
    let m0 = mu0.second_moment().value().sqrt();
    let lp = lambda.max(0.0);
    let r = m0 + (psi0.velocity_norm().value() + 1.0) * (2.0 * horizon).sqrt() * ((1.0 + 2.0 * lp) * horizon).exp();
    let l = growth(r);
    let tau_max = (1.0 / (l * l)).min(tau_bar.unwrap_or(f64::INFINITY)).min(horizon);
    GlobalBounds { r, l, tau_max }
}

#[derive(Debug, Clone, Serialize)]
pub struct IeviReport {
    /// Largest `lhs - rhs` over steps.
    pub max_violation: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip)]
    pub rows: Vec<CheckRow>,
}

/// Discrete inequality `1/2 W^2(M^{n+1}, nu) - 1/2 W^2(M^n, nu) <= tau [Phi^n, nu]_r
/// + tau^2 L^2 / 2` at every step. Passes when the largest violation is at most
/// `IEVI_TOL (1 + max_n W^2(M^n, nu))`.
pub fn ievi_check(traj: &EulerTrajectory, nu: &DiscreteMeasure) -> Result<IeviReport> {
    let tau = traj.tau();
    let l = traj.bound();
    let dist: Vec<f64> = traj.measures().iter().map(|m| Ok(w2(m, nu)?.cost)).collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(traj.n_steps());
    let mut max_violation = f64::NEG_INFINITY;
    for (n, phi) in traj.velocities().iter().enumerate() {
        let lhs = 0.5 * (dist[n + 1] - dist[n]);
        let rhs = tau * pairing_r_nu(phi, nu)?.value + 0.5 * tau * tau * l * l;
        max_violation = max_violation.max(lhs - rhs);
        rows.push(CheckRow::new("ievi", format!("n={n}"), traj.time(n), lhs, rhs));
    }
    let tolerance = IEVI_TOL * (1.0 + dist.iter().cloned().fold(0.0, f64::max));
    Ok(IeviReport { max_violation, tolerance, passed: max_violation <= tolerance, rows })
}
