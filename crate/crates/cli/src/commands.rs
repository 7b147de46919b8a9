//! One function per command. Each returns the files to write and a summary;
//! nothing touches the filesystem here.

use serde::Serialize;
use serde_json::{json, Value};
use wasserflow::analysis::{
    analytic_geodesic_flow, analytic_lift, analytic_splitting, analytic_translation, cauchy_gap_check,
    contraction_check, error_rate_study, evi_residual, CurveSamples,
};
use wasserflow::euler::euler_run;
use wasserflow::field::{dissipativity_certificate, weak_dissipativity_certificate, CertificateOptions, Sampler};
use wasserflow::io::{write_measure, write_velocity_measure};
use wasserflow::pairing::{pairing_l, pairing_l_nu, pairing_r, pairing_r_nu};
use wasserflow::report::{write_check_csv, write_rate_csv, CheckRow};
use wasserflow::transport::w2;
use wasserflow::{DiscreteMeasure, Execution, Mpvf, VelocityMeasure};

use crate::config::{resolve_bound, velocity_from_rows, Command, CurveSource, ExperimentConfig, ReferenceSpec};
use crate::error::CliError;
use crate::tolerances::{CALCULUS_REL_TOL, LAMBDA_IDENTITY_TOL};

type Reference = Box<dyn Fn(f64) -> wasserflow::Result<DiscreteMeasure> + Sync>;

/// Files to write (relative path, contents) and the run summary.
pub struct Artifacts {
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: Value,
    pub passed: bool,
}

impl Artifacts {
    fn new(summary: Value, passed: bool) -> Self {
        Artifacts { files: Vec::new(), summary, passed }
    }

    fn add(&mut self, path: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((path.into(), bytes));
    }

    fn add_json(&mut self, path: &str, value: &impl Serialize) {
        let mut bytes = serde_json::to_vec_pretty(value).expect("plain data serializes");
        bytes.push(b'\n');
        self.add(path, bytes);
    }
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> wasserflow::Result<()>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn reference_curve(cfg: &ExperimentConfig, mu0: &DiscreteMeasure) -> Result<Reference, CliError> {
    let mu0 = mu0.clone();
    Ok(match cfg.reference()? {
        ReferenceSpec::Splitting => Box::new(move |t| analytic_splitting(&mu0, t)),
        ReferenceSpec::Stationary => Box::new(move |_| Ok(mu0.clone())),
        ReferenceSpec::Translation { velocity } => {
            if velocity.len() != mu0.dim() {
                return Err(CliError::Config(format!(
                    "reference velocity has dimension {}, initial measure {}",
                    velocity.len(),
                    mu0.dim()
                )));
            }
            let b = velocity.clone();
            Box::new(move |t| analytic_translation(&mu0, &b, t))
        }
        ReferenceSpec::Lift { flow } => {
            let flow = *flow;
            Box::new(move |t| analytic_lift(flow, &mu0, t))
        }
        ReferenceSpec::Geodesic { target } => {
            let target = target.build()?;
            Box::new(move |t| analytic_geodesic_flow(&target, &mu0, t))
        }
    })
}

fn bound_json(l: f64, auto: Option<wasserflow::euler::GlobalBounds>) -> Value {
    json!({ "bound": l, "auto": auto })
}

pub fn run(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    match cfg.command {
        Command::Simulate => simulate(cfg),
        Command::Pairing => pairing(cfg),
        Command::Certify => certify(cfg),
        Command::EviCheck => evi_check(cfg),
        Command::RateStudy => rate_study(cfg),
        Command::Contraction => contraction(cfg),
        Command::Cauchy => cauchy(cfg),
        Command::Calculus => calculus(cfg),
    }
}

fn simulate(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let field = cfg.field()?;
    let mu0 = cfg.initial()?;
    let (tau, horizon) = (cfg.tau()?, cfg.horizon()?);
    let (l, auto) = resolve_bound(cfg, &mu0)?;
    let traj = euler_run(field, &mu0, tau, horizon, l)?;

    let mut rows = Vec::new();
    if cfg.reference.is_some() {
        let reference = reference_curve(cfg, &mu0)?;
        let tol = cfg.numeric.reference_tol.unwrap_or(f64::INFINITY);
        for n in 0..=traj.n_steps() {
            let t = traj.time(n);
            let d = w2(traj.measure(n), &reference(t)?)?.distance();
            rows.push(CheckRow::new("reference", "w2", t, d, tol));
        }
    }
    let max_error = rows.iter().map(|r| r.lhs).fold(None, |m: Option<f64>, d| Some(m.map_or(d, |m| m.max(d))));
    let passed = rows.iter().all(|r| r.excess <= 0.0);
    let last = traj.final_measure();
    let summary = json!({
        "stability": bound_json(l, auto),
        "n_steps": traj.n_steps(),
        "end_time": traj.end_time(),
        "final_atoms": last.len(),
        "final_barycenter": last.barycenter(),
        "final_second_moment": last.second_moment().value(),
        "max_reference_error": max_error,
        "reference_tol": cfg.numeric.reference_tol,
        "passed": passed,
    });
    let mut out = Artifacts::new(summary, passed);
    out.add_json(
        "trajectory/index.json",
        &json!({ "tau": tau, "T": horizon, "L": l, "N": traj.n_steps(), "field_spec": field }),
    );
    for (n, m) in traj.measures().iter().enumerate() {
        out.add(format!("trajectory/step_{n:05}.csv"), csv_bytes(|w| write_measure(w, m))?);
    }
    if !rows.is_empty() {
        out.add("reference.csv", csv_bytes(|w| write_check_csv(w, &rows))?);
    }
    Ok(out)
}

fn pairing(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let section = cfg.pairing.as_ref().expect("validated");
    let phi: VelocityMeasure = match &section.phi {
        Some(rows) => velocity_from_rows(rows)?,
        None => cfg.field()?.evaluate(&cfg.initial()?)?,
    };
    let nu = section.against.build()?;
    let right = pairing_r_nu(&phi, &nu)?.value;
    let left = pairing_l_nu(&phi, &nu)?.value;
    let cost = w2(&phi.x_marginal(), &nu)?.cost;
    let mut out = Artifacts::new(json!({ "right": right, "left": left, "w2_squared": cost, "passed": true }), true);
    out.add("phi.csv", csv_bytes(|w| write_velocity_measure(w, &phi))?);
    Ok(out)
}

fn certify(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let field = cfg.field()?;
    let lambda = cfg.lambda()?;
    let section = cfg.certify.as_ref().expect("validated");
    let sampler = section.sampler.sampler(cfg.numeric.seed);
    let opts = CertificateOptions::new(lambda, section.n_pairs).with_execution(Execution::Parallel);
    let strong = dissipativity_certificate(field, &sampler, opts)?;
    let weak = if section.weak { Some(weak_dissipativity_certificate(field, &sampler, opts)?) } else { None };
    let passed = strong.passed && weak.as_ref().is_none_or(|w| w.passed);
    let summary = json!({
        "lambda": lambda,
        "n_pairs": section.n_pairs,
        "strong": { "max_residual": strong.max_residual, "passed": strong.passed },
        "weak": weak.as_ref().map(|w| json!({ "max_residual": w.max_residual, "passed": w.passed })),
        "passed": passed,
    });
    let mut out = Artifacts::new(summary, passed);
    out.add_json("certificate.json", &strong);
    if let Some(w) = &weak {
        out.add_json("weak_certificate.json", w);
    }
    Ok(out)
}

fn evi_check(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let field = cfg.field()?;
    let mu0 = cfg.initial()?;
    let lambda = cfg.lambda()?;
    let horizon = cfg.horizon()?;
    let section = cfg.evi.as_ref().expect("validated");
    let mut stability = Value::Null;
    let curve = match section.curve {
        CurveSource::Euler => {
            let (l, auto) = resolve_bound(cfg, &mu0)?;
            stability = bound_json(l, auto);
            euler_run(field, &mu0, cfg.tau()?, horizon, l)?.curve()
        }
        CurveSource::Reference => {
            let reference = reference_curve(cfg, &mu0)?;
            let times = CurveSamples::uniform_grid(0.0, horizon, section.samples.expect("validated"));
            CurveSamples::from_fn(times, reference)?
        }
    };
    let mut rows = Vec::new();
    let mut per_target = Vec::new();
    for (k, spec) in section.targets.iter().enumerate() {
        let nu = spec.build()?;
        let r = evi_residual(&curve, field, &nu, lambda, Execution::Parallel)?;
        per_target.push(json!({
            "target": k,
            "max_residual": r.max_residual,
            "max_excess": r.max_excess,
            "worst_pair": r.worst_pair,
            "per_section": r.per_section,
            "passed": r.passed,
        }));
        rows.extend(r.rows.into_iter().map(|mut row| {
            row.param = format!("target={k};{}", row.param);
            row
        }));
    }
    let passed = per_target.iter().all(|t| t["passed"] == Value::Bool(true));
    let summary = json!({ "lambda": lambda, "stability": stability, "targets": per_target, "passed": passed });
    let mut out = Artifacts::new(summary, passed);
    out.add("evi.csv", csv_bytes(|w| write_check_csv(w, &rows))?);
    Ok(out)
}

fn rate_study(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let field = cfg.field()?;
    let mu0 = cfg.initial()?;
    let horizon = cfg.horizon()?;
    let taus = cfg.numeric.taus.as_ref().expect("validated");
    let (l, auto) = resolve_bound(cfg, &mu0)?;
    let reference = reference_curve(cfg, &mu0)?;
    let fit = error_rate_study(field, &mu0, &reference, taus, horizon, l, Execution::Parallel)?;
    let passed = fit.envelope_excess <= 0.0;
    let summary = json!({
        "stability": bound_json(l, auto),
        "slope": fit.slope,
        "intercept": fit.intercept,
        "r2": fit.r2,
        "excluded": fit.excluded,
        "envelope_excess": fit.envelope_excess,
        "passed": passed,
    });
    let mut out = Artifacts::new(summary, passed);
    out.add("rate.csv", csv_bytes(|w| write_rate_csv(w, &fit.taus, &fit.errors))?);
    out.add("envelope.csv", csv_bytes(|w| write_check_csv(w, &fit.rows))?);
    Ok(out)
}

fn contraction(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let field = cfg.field()?;
    let mu0 = cfg.initial()?;
    let mu1 = cfg.contraction.as_ref().expect("validated").other.build()?;
    let lambda = cfg.lambda()?;
    let (l, auto) = resolve_bound(cfg, &mu0)?;
    let r = contraction_check(field, &mu0, &mu1, cfg.tau()?, cfg.horizon()?, lambda, l, Execution::Parallel)?;
    let ratio = r.ratio_at(cfg.horizon()?);
    let summary = json!({
        "stability": bound_json(l, auto),
        "lambda": lambda,
        "max_excess": r.max_excess,
        "ratio_at_horizon": ratio,
        "passed": r.passed,
    });
    let mut out = Artifacts::new(summary, r.passed);
    out.add("contraction.csv", csv_bytes(|w| write_check_csv(w, &r.rows))?);
    Ok(out)
}

fn cauchy(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let field = cfg.field()?;
    let mu0 = cfg.initial()?;
    let section = cfg.cauchy.as_ref().expect("validated");
    let lambda = cfg.numeric.lambda.unwrap_or(0.0);
    let horizon = cfg.horizon()?;
    let (l, auto) = resolve_bound(cfg, &mu0)?;
    let a = euler_run(field, &mu0, cfg.tau()?, horizon, l)?;
    let b = euler_run(field, &mu0, section.eta, horizon, l)?;
    let r = cauchy_gap_check(&a, &b, section.theta, lambda)?;
    let summary = json!({
        "stability": bound_json(l, auto),
        "theta": section.theta,
        "lambda": lambda,
        "max_excess": r.max_excess,
        "passed": r.passed,
    });
    let mut out = Artifacts::new(summary, r.passed);
    out.add("cauchy.csv", csv_bytes(|w| write_check_csv(w, &r.rows))?);
    Ok(out)
}

/// Velocity measure drawn as a measure on `R^{2d}` read as rows `[x | v]`.
fn as_velocity(m: &DiscreteMeasure, d: usize) -> Result<VelocityMeasure, CliError> {
    Ok(VelocityMeasure::from_rows(d, m.coords().to_vec(), m.weights().to_vec())?)
}

fn calculus(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    use wasserflow::field::MeasureSampler;

    let section = cfg.calculus.as_ref().expect("validated");
    let d = section.dim;
    let sampler = Sampler::new(2 * d, cfg.numeric.seed).with_atoms(1, section.max_atoms).with_random_weights(true);
    let mut rows = Vec::new();
    for k in 0..section.instances {
        let (a, b) = sampler.pair(k as u64)?;
        let (phi0, phi1) = (as_velocity(&a, d)?, as_velocity(&b, d)?);
        let (mu0, mu1) = (phi0.x_marginal(), phi1.x_marginal());
        let wsq = w2(&mu0, &mu1)?.cost;
        let norm0 = phi0.velocity_norm().value().powi(2);
        let tol = CALCULUS_REL_TOL * (1.0 + wsq + norm0 + phi1.velocity_norm().value().powi(2));
        let param = format!("instance={k}");
        let r = pairing_r(&phi0, &phi1)?.value;
        let l = pairing_l(&phi0, &phi1)?.value;
        rows.push(CheckRow::new("right_le_left", param.as_str(), 0.0, r, l + tol));
        let cross = pairing_r_nu(&phi0, &mu1)?.value + pairing_r_nu(&phi1, &mu0)?.value;
        rows.push(CheckRow::new("cross_le_right", param.as_str(), 0.0, cross, r + tol));
        let neg = pairing_r(&phi0.negate(), &phi1.negate())?.value;
        rows.push(CheckRow::new("negation", param.as_str(), 0.0, (neg + l).abs(), tol));
        for lambda in [-1.5, 0.5, 2.0] {
            let lhs = pairing_r_nu(&phi0.lambda_transform(lambda), &mu1)?.value;
            let m0 = mu0.second_moment().value();
            let m1 = mu1.second_moment().value();
            let rhs = pairing_r_nu(&phi0, &mu1)?.value - 0.5 * lambda * (m0 - m1 + wsq);
            rows.push(CheckRow::new(
                "lambda_transform",
                format!("{param};lambda={lambda}"),
                0.0,
                (lhs - rhs).abs(),
                LAMBDA_IDENTITY_TOL,
            ));
        }
        let g = |s: f64| -> Result<f64, CliError> { Ok(0.5 * w2(&phi0.push_exp(s), &mu1)?.cost) };
        for (s0, s1) in [(0.0, 0.5), (-0.3, 0.7), (0.2, 1.4)] {
            let mid = g(0.5 * (s0 + s1))?;
            let floor = 0.5 * (g(s0)? + g(s1)?) - 0.125 * (s1 - s0) * (s1 - s0) * norm0;
            rows.push(CheckRow::new("semiconcavity", format!("{param};s0={s0};s1={s1}"), 0.0, floor, mid + tol));
        }
    }
    let failures = rows.iter().filter(|r| r.excess > 0.0).count();
    let passed = failures == 0;
    let summary = json!({
        "instances": section.instances,
        "checks": rows.len(),
        "failures": failures,
        "max_excess": wasserflow::report::max_excess(&rows),
        "passed": passed,
    });
    let mut out = Artifacts::new(summary, passed);
    out.add("calculus.csv", csv_bytes(|w| write_check_csv(w, &rows))?);
    Ok(out)
}
