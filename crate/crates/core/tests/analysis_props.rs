mod common;

use common::*;
use wasserflow::analysis::{
    analytic_geodesic_flow, analytic_lift, analytic_splitting, analytic_translation, barycentric_residual,
    contraction_check, error_rate_study, evi_residual, CurveSamples, LiftFlow, TestFunction,
};
use wasserflow::euler::euler_run;
use wasserflow::field::{KernelName, MapName, MpvfSpec, PairwiseName, PotentialName};
use wasserflow::{DiscreteMeasure, Execution, Mpvf, Result};

const EXEC: Execution = Execution::Parallel;

fn grid(t: f64, n: usize) -> Vec<f64> {
    CurveSamples::uniform_grid(0.0, t, n)
}

fn lebesgue(a: f64, b: f64, n: usize) -> DiscreteMeasure {
    m1(&(0..n).map(|k| (1.0 / n as f64, a + (b - a) * (k as f64 + 0.5) / n as f64)).collect::<Vec<_>>())
}

/// The particle system `x_i' = v_i(x)` integrated with classical RK4. For a
/// single-valued Lipschitz field this is the limit of the Euler scheme.
fn rk4(field: &MpvfSpec, mu0: &DiscreteMeasure, t: f64, steps: usize) -> Result<DiscreteMeasure> {
    let d = mu0.dim();
    let w = mu0.weights().to_vec();
    let vel = |x: &[f64]| -> Result<Vec<f64>> {
        let mu = DiscreteMeasure::from_flat(d, x.to_vec(), w.clone())?;
        let phi = field.evaluate(&mu)?;
        assert_eq!(phi.len(), w.len(), "particles collided");
        let mut out = Vec::with_capacity(x.len());
        for i in 0..w.len() {
            assert_eq!(phi.x(i), &x[i * d..(i + 1) * d]);
            out.extend_from_slice(phi.v(i));
        }
        Ok(out)
    };
    let axpy = |x: &[f64], h: f64, k: &[f64]| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + h * b).collect() };
    let h = t / steps as f64;
    let mut x = mu0.coords().to_vec();
    for _ in 0..steps {
        let k1 = vel(&x)?;
        let k2 = vel(&axpy(&x, 0.5 * h, &k1))?;
        let k3 = vel(&axpy(&x, 0.5 * h, &k2))?;
        let k4 = vel(&axpy(&x, h, &k3))?;
        for i in 0..x.len() {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    DiscreteMeasure::from_flat(d, x, w)
}

fn evi_battery() -> Vec<DiscreteMeasure> {
    vec![
        DiscreteMeasure::dirac(0.0),
        DiscreteMeasure::dirac(0.5),
        DiscreteMeasure::dirac(-1.3),
        m1(&[(0.5, -1.0), (0.5, 1.0)]),
        m1(&[(0.2, -0.4), (0.8, 0.7)]),
        m1(&[(0.3, -2.0), (0.3, 0.1), (0.4, 1.5)]),
        lebesgue(0.0, 1.0, 20),
        lebesgue(-1.0, 0.5, 15),
        m1(&[(0.25, -0.3), (0.25, -0.1), (0.25, 0.2), (0.25, 0.9)]),
        m1(&[(0.1, 3.0), (0.9, -0.2)]),
    ]
}

#[test]
fn splitting_flow_satisfies_evi_against_a_battery() {
    let starts = [DiscreteMeasure::dirac(0.0), m1(&[(0.3, -0.5), (0.4, 0.2), (0.3, 1.0)]), lebesgue(0.0, 1.0, 10)];
    for mu0 in &starts {
        let curve = CurveSamples::from_fn(grid(1.0, 41), |t| analytic_splitting(mu0, t)).unwrap();
        for (k, nu) in evi_battery().iter().enumerate() {
            let r = evi_residual(&curve, &MpvfSpec::SplittingParticle, nu, 0.5, EXEC).unwrap();
            assert!(r.passed, "start {mu0:?}, nu #{k}: excess {}", r.max_excess);
        }
    }
}

#[test]
fn translation_satisfies_evi_against_its_target() {
    let b = 0.7;
    let field = MpvfSpec::Constant { theta: DiscreteMeasure::dirac(b) };
    let mu0 = m1(&[(0.3, -0.5), (0.4, 0.2), (0.3, 1.0)]);
    let traj = euler_run(&field, &mu0, 0.05, 1.0, b).unwrap();
    let r = evi_residual(&traj.curve(), &field, &DiscreteMeasure::dirac(b), 0.0, EXEC).unwrap();
    assert!(r.passed, "{}", r.max_excess);
}

#[test]
fn evi_rejects_a_stationary_curve() {
    let curve = CurveSamples::from_fn(grid(1.0, 21), |_| Ok(DiscreteMeasure::dirac(0.0))).unwrap();
    let r = evi_residual(&curve, &MpvfSpec::SplittingParticle, &lebesgue(0.0, 1.0, 50), 0.5, EXEC).unwrap();
    assert!(!r.passed);
    assert!(r.max_excess > 1e-2);
}

#[test]
fn evi_rejects_the_wrong_direction() {
    // the rotation flow run backwards is a curve of -R, not of R
    let mu0 = DiscreteMeasure::from_flat(2, vec![0.9, -0.3, -0.6, 0.8, 0.2, 0.5], vec![0.2, 0.3, 0.5]).unwrap();
    let back = CurveSamples::from_fn(grid(1.0, 21), |t| analytic_lift(LiftFlow::Rotation, &mu0, -t)).unwrap();
    let fwd = CurveSamples::from_fn(grid(1.0, 21), |t| analytic_lift(LiftFlow::Rotation, &mu0, t)).unwrap();
    let nu = DiscreteMeasure::dirac(pt(&[1.0, 0.5]));
    assert!(evi_residual(&fwd, &MpvfSpec::Rotation, &nu, 0.0, EXEC).unwrap().passed);
    assert!(!evi_residual(&back, &MpvfSpec::Rotation, &nu, 0.0, EXEC).unwrap().passed);
}

/// Library fields with an independent reference for their limit curve.
fn limit_curves() -> Vec<(String, MpvfSpec, CurveSamples)> {
    let times = grid(0.4, 41);
    let plane =
        DiscreteMeasure::from_flat(2, vec![0.9, -0.3, -0.6, 0.8, 0.2, 0.5, -0.7, -0.9], vec![0.1, 0.2, 0.3, 0.4])
            .unwrap();
    let line = m1(&[(0.2, -1.1), (0.3, -0.2), (0.1, 0.4), (0.4, 1.3)]);
    let mut out = Vec::new();
    let mut push = |name: &str, field: MpvfSpec, f: &dyn Fn(f64) -> Result<DiscreteMeasure>| {
        out.push((name.to_string(), field, CurveSamples::from_fn(times.clone(), f).unwrap()));
    };
    push("rotation", MpvfSpec::Rotation, &|t| analytic_lift(LiftFlow::Rotation, &plane, t));
    push("neg identity", MpvfSpec::PerParticleMap { map: MapName::NegIdentity }, &|t| {
        analytic_lift(LiftFlow::NegIdentity, &plane, t)
    });
    // every atom is farther than 0.4 from the origin, so none stops
    push("neg sign", MpvfSpec::PerParticleMap { map: MapName::NegSign }, &|t| {
        analytic_lift(LiftFlow::NegSign, &plane, t)
    });
    push("splitting", MpvfSpec::SplittingParticle, &|t| analytic_splitting(&line, t));
    let theta = DiscreteMeasure::from_flat(2, vec![1.0, 0.0, -0.5, 2.0], vec![0.5, 0.5]).unwrap();
    push("constant", MpvfSpec::Constant { theta }, &|t| analytic_translation(&plane, &[0.25, 1.0], t));
    let target = m1(&[(0.25, -1.5), (0.25, -0.5), (0.25, 0.5), (0.25, 1.5)]);
    let start = m1(&[(0.25, -0.2), (0.25, 0.1), (0.25, 0.3), (0.25, 0.9)]);
    push("toward", MpvfSpec::TowardMeasure { target: target.clone(), sign: 1.0 }, &|t| {
        analytic_geodesic_flow(&target, &start, t)
    });
    let ode_fields = [
        ("quadratic", MpvfSpec::Potential { name: PotentialName::Quadratic, scale: 1.0 }, &plane),
        ("quartic", MpvfSpec::Potential { name: PotentialName::Quartic, scale: 1.0 }, &plane),
        ("double well", MpvfSpec::Potential { name: PotentialName::DoubleWell, scale: 1.0 }, &line),
        ("interaction", MpvfSpec::Interaction { kernel: KernelName::Quadratic, shift: None }, &plane),
        ("attractive quartic", MpvfSpec::Interaction { kernel: KernelName::AttractiveQuartic, shift: None }, &plane),
        ("pairwise rotation", MpvfSpec::PairwiseMap { map: PairwiseName::Rotation }, &plane),
        ("pairwise neg identity", MpvfSpec::PairwiseMap { map: PairwiseName::NegIdentity }, &plane),
        ("pairwise neg cubic", MpvfSpec::PairwiseMap { map: PairwiseName::NegCubic }, &plane),
    ];
    for (name, field, mu0) in ode_fields {
        let f = field.clone();
        push(name, field, &move |t| rk4(&f, mu0, t, (t / 1e-3).ceil().max(1.0) as usize));
    }
    out
}

#[test]
fn limit_curves_have_the_barycentric_property() {
    for (name, field, curve) in limit_curves() {
        let r = barycentric_residual(&curve, &field, &TestFunction::battery(curve.dim()), EXEC).unwrap();
        assert!(r.passed, "{name}: residual {}, excess {}", r.max_residual, r.max_excess);
    }
}

#[test]
fn euler_iterates_lack_the_barycentric_property() {
    // the walk's Euler iterates spread out, while its limit stays at rest
    let walk = MpvfSpec::Constant { theta: m1(&[(0.5, 1.0), (0.5, -1.0)]) };
    let traj = euler_run(&walk, &DiscreteMeasure::dirac(0.0), 0.05, 1.0, 1.0).unwrap();
    let r = barycentric_residual(&traj.curve(), &walk, &[TestFunction::SquaredNorm], EXEC).unwrap();
    assert!(!r.passed);
    assert!((r.max_residual - 0.05).abs() < 1e-12);
}

#[test]
fn euler_runs_stay_in_the_error_envelope() {
    let plane = DiscreteMeasure::from_flat(2, vec![0.9, -0.3, -0.6, 0.8, 0.2, 0.5], vec![0.2, 0.3, 0.5]).unwrap();
    let taus = [0.1, 0.05, 0.02, 0.01];
    let m = plane.second_moment().value().sqrt();
    let cases = [
        (MapName::Rotation, LiftFlow::Rotation, m * (1.01f64).powf(10.0)),
        (MapName::NegIdentity, LiftFlow::NegIdentity, m),
        (MapName::NegSign, LiftFlow::NegSign, 1.0),
    ];
    for (map, flow, l) in cases {
        let field = MpvfSpec::PerParticleMap { map };
        let reference = |t: f64| analytic_lift(flow, &plane, t);
        let fit = error_rate_study(&field, &plane, &reference, &taus, 1.0, l, EXEC).unwrap();
        assert!(fit.envelope_excess <= 0.0, "{map:?}: {}", fit.envelope_excess);
        assert!(fit.errors.windows(2).all(|e| e[1] < e[0]), "{map:?}: {:?}", fit.errors);
    }
}

#[test]
fn euler_converges_to_the_geodesic_flow() {
    let target = m1(&[(0.25, -1.5), (0.25, -0.5), (0.25, 0.5), (0.25, 1.5)]);
    let start = m1(&[(0.25, -0.2), (0.25, 0.1), (0.25, 0.3), (0.25, 0.9)]);
    let field = MpvfSpec::TowardMeasure { target: target.clone(), sign: 1.0 };
    let reference = |t: f64| analytic_geodesic_flow(&target, &start, t);
    let taus = [0.1, 0.05, 0.025, 0.0125];
    let fit = error_rate_study(&field, &start, &reference, &taus, 1.0, 2.0, EXEC).unwrap();
    assert!(fit.envelope_excess <= 0.0);
    // each particle follows x' = b - x, so the scheme is first order
    let slope = fit.slope.unwrap();
    assert!((slope - 1.0).abs() < 0.05, "{slope}");
}

#[test]
fn geodesic_flow_from_a_dirac() {
    let target = m1(&[(0.5, -1.0), (0.5, 1.0)]);
    let mu = analytic_geodesic_flow(&target, &DiscreteMeasure::dirac(0.0), 2f64.ln()).unwrap();
    assert!(mu.same_atoms(&m1(&[(0.5, -0.5), (0.5, 0.5)]), 1e-15));
    let far = analytic_geodesic_flow(&target, &DiscreteMeasure::dirac(0.0), 8.0).unwrap();
    let gap = wasserflow::transport::w2(&far, &target).unwrap().distance();
    assert!(gap <= (-8.0f64).exp() + 1e-15);
}

#[test]
fn certified_fields_contract() {
    let plane0 = ring(4, 0.8, 0.3);
    let plane1 = DiscreteMeasure::from_flat(2, vec![0.1, 0.2, -0.4, 0.6, 0.5, -0.5], vec![0.5, 0.25, 0.25]).unwrap();
    let line0 = m1(&[(0.5, -0.3), (0.5, 0.4)]);
    let line1 = m1(&[(0.2, -1.0), (0.3, 0.0), (0.5, 0.8)]);
    let cases: Vec<(MpvfSpec, &DiscreteMeasure, &DiscreteMeasure, f64, f64)> = vec![
        (MpvfSpec::Rotation, &plane0, &plane1, 0.0, 1.2),
        (MpvfSpec::Potential { name: PotentialName::Quadratic, scale: 1.0 }, &plane0, &plane1, -1.0, 1.0),
        (MpvfSpec::SplittingParticle, &line0, &line1, 0.5, 1.0),
        (MpvfSpec::Interaction { kernel: KernelName::Quadratic, shift: None }, &plane0, &plane1, 0.0, 1.0),
        (MpvfSpec::PairwiseMap { map: PairwiseName::Rotation }, &plane0, &plane1, 0.0, 1.5),
        (MpvfSpec::PerParticleMap { map: MapName::NegSign }, &plane0, &plane1, 0.0, 1.0),
        (MpvfSpec::Constant { theta: m1(&[(0.5, 1.0), (0.5, -1.0)]) }, &line0, &line1, 0.0, 1.0),
    ];
    for (field, mu0, mu1, lambda, l) in cases {
        for tau in [0.05, 0.01] {
            let r = contraction_check(&field, mu0, mu1, tau, 1.0, lambda, l, EXEC).unwrap();
            assert!(r.passed, "{field:?} at tau {tau}: {}", r.max_excess);
        }
    }
}

#[test]
fn rotation_contracts_with_equality_up_to_the_allowance() {
    let a = DiscreteMeasure::dirac(pt(&[1.0, 0.0]));
    let b = DiscreteMeasure::dirac(pt(&[0.0, 0.5]));
    let r = contraction_check(&MpvfSpec::Rotation, &a, &b, 0.01, 1.0, 0.0, 1.1, EXEC).unwrap();
    assert!(r.passed);
    // (1 + tau R) scales every distance by sqrt(1 + tau^2)
    let w0 = (1.25f64).sqrt();
    for &(t, d) in &r.distances {
        let n = (t / 0.01).round() as i32;
        assert!((d - w0 * (1.0001f64).powf(0.5 * n as f64)).abs() < 1e-12);
    }
}
