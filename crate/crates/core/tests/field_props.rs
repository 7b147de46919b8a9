mod common;

use common::strategies::*;
use common::*;
use proptest::prelude::*;
use wasserflow::field::{
    dissipativity_certificate, weak_dissipativity_certificate, CertificateOptions, KernelName, MapName, MpvfSpec,
    PairwiseName, PotentialName, Sampler,
};
use wasserflow::{DiscreteMeasure, Mpvf, Result, VelocityMeasure};

/// `mu -> L^lambda_# F[mu]`.
struct Transformed<'a> {
    inner: &'a MpvfSpec,
    lambda: f64,
}

impl Mpvf for Transformed<'_> {
    fn sections(&self, mu: &DiscreteMeasure) -> Result<Vec<VelocityMeasure>> {
        Ok(self.inner.sections(mu)?.into_iter().map(|s| s.lambda_transform(self.lambda)).collect())
    }

    fn growth_bound(&self, _r: f64) -> Option<f64> {
        None
    }
}

/// Built-in fields with the dimension they are sampled in and a dissipativity
/// constant they satisfy on random-weight samples.
fn library() -> Vec<(MpvfSpec, usize, f64)> {
    let target =
        DiscreteMeasure::from_flat(2, vec![-1.0, 0.0, 0.5, 1.0, 1.5, -0.5, 0.0, 0.0], vec![0.1, 0.2, 0.3, 0.4])
            .unwrap();
    vec![
        (MpvfSpec::Potential { name: PotentialName::Quadratic, scale: 1.0 }, 2, -1.0),
        (MpvfSpec::Potential { name: PotentialName::Quartic, scale: 1.0 }, 2, 0.0),
        (MpvfSpec::Potential { name: PotentialName::DoubleWell, scale: 1.0 }, 1, 1.0),
        (MpvfSpec::Interaction { kernel: KernelName::Quadratic, shift: None }, 2, 0.0),
        (MpvfSpec::Interaction { kernel: KernelName::AttractiveQuartic, shift: None }, 2, 0.0),
        (MpvfSpec::Constant { theta: m1(&[(0.5, 1.0), (0.5, -1.0)]) }, 1, 0.0),
        (MpvfSpec::Rotation, 2, 0.0),
        (MpvfSpec::TowardMeasure { target, sign: -1.0 }, 2, 1.0),
        (MpvfSpec::SplittingParticle, 1, 0.5),
        (MpvfSpec::PairwiseMap { map: PairwiseName::Rotation }, 2, 0.0),
        (MpvfSpec::PairwiseMap { map: PairwiseName::NegIdentity }, 2, 0.0),
        (MpvfSpec::PairwiseMap { map: PairwiseName::NegCubic }, 2, 0.0),
        (MpvfSpec::PerParticleMap { map: MapName::NegSign }, 2, 0.0),
        (MpvfSpec::PerParticleMap { map: MapName::NegIdentity }, 3, -1.0),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sections_have_the_base_measure_as_position_marginal(mu2 in measure_in(2, 6), mu1 in measure_in(1, 6), mu3 in measure_in(3, 6)) {
        for (field, d, _) in library() {
            let mu = match d { 1 => &mu1, 2 => &mu2, _ => &mu3 };
            for s in field.sections(mu).unwrap() {
                prop_assert!(s.x_marginal().same_atoms(mu, 0.0), "{:?}", field);
            }
        }
    }

    #[test]
    fn splitting_ignores_atom_order(atoms in prop::collection::vec((0.05f64..1.0, -3.0f64..3.0), 1..8), rot in 0usize..8) {
        let s: f64 = atoms.iter().map(|a| a.0).sum();
        let atoms: Vec<(f64, f64)> = atoms.iter().map(|(w, x)| (w / s, *x)).collect();
        let mut shuffled = atoms.clone();
        let k = rot % shuffled.len();
        shuffled.rotate_left(k);
        let a = MpvfSpec::SplittingParticle.evaluate(&m1(&atoms)).unwrap();
        let b = MpvfSpec::SplittingParticle.evaluate(&m1(&shuffled)).unwrap();
        prop_assert!(a.same_atoms(&b, 1e-15));
    }
}

#[test]
fn splitting_ignores_weight_preserving_atom_splits() {
    let whole = m1(&[(0.2, 0.0), (0.5, 1.0), (0.3, 2.0)]);
    let split = m1(&[(0.2, 0.0), (0.25, 1.0), (0.3, 2.0), (0.25, 1.0)]);
    let a = MpvfSpec::SplittingParticle.evaluate(&whole).unwrap();
    let b = MpvfSpec::SplittingParticle.evaluate(&split).unwrap();
    assert!(a.same_atoms(&b, 1e-15));
}

#[test]
fn library_fields_pass_their_certificates() {
    for (k, (field, d, lambda)) in library().into_iter().enumerate() {
        let sampler = Sampler::new(d, 100 + k as u64).with_random_weights(true).with_atoms(1, 6);
        let strong = dissipativity_certificate(&field, &sampler, CertificateOptions::new(lambda, 40)).unwrap();
        assert!(strong.passed, "{field:?} at {lambda}: {}", strong.max_residual);
        let weak = weak_dissipativity_certificate(&field, &sampler, CertificateOptions::new(lambda, 40)).unwrap();
        assert!(weak.passed, "{field:?} weak at {lambda}: {}", weak.max_residual);
    }
}

// On the line, equal weights and equal atom counts make every optimal vertex
// plan a permutation, so the barycentric projection is the monotone map.
#[test]
fn toward_measure_is_contractive_on_the_line() {
    let target = m1(&[(0.25, -1.0), (0.25, 0.0), (0.25, 0.5), (0.25, 2.0)]);
    let field = MpvfSpec::TowardMeasure { target, sign: 1.0 };
    let sampler = Sampler::new(1, 31).with_atoms(4, 4);
    let strong = dissipativity_certificate(&field, &sampler, CertificateOptions::new(-1.0, 40)).unwrap();
    assert!(strong.passed, "{}", strong.max_residual);
    let weak = weak_dissipativity_certificate(&field, &sampler, CertificateOptions::new(-1.0, 40)).unwrap();
    assert!(weak.passed, "{}", weak.max_residual);
}

// When the plan splits mass the barycentric selection loses the bound:
// a Dirac is pushed toward the target's mean, not along an optimal plan.
#[test]
fn toward_measure_selection_is_not_contractive_for_split_plans() {
    let target = m1(&[(0.5, -1.0), (0.5, 1.0)]);
    let field = MpvfSpec::TowardMeasure { target: target.clone(), sign: 1.0 };
    let mu0 = target;
    let mu1 = DiscreteMeasure::dirac(0.0);
    let phi0 = field.evaluate(&mu0).unwrap();
    let phi1 = field.evaluate(&mu1).unwrap();
    // both sections are at rest
    let p = wasserflow::pairing::pairing_r(&phi0, &phi1).unwrap().value;
    let w = wasserflow::transport::w2(&mu0, &mu1).unwrap().cost;
    assert_eq!(p, 0.0);
    assert!((w - 1.0).abs() < 1e-15);
    let sampler = Sampler::new(1, 5).with_random_weights(true);
    assert!(!dissipativity_certificate(&field, &sampler, CertificateOptions::new(-1.0, 40)).unwrap().passed);
}

// Half the squared distance to a fixed measure is not geodesically convex in
// the plane, so the toward field fails even on matching uniform measures.
#[test]
fn toward_measure_is_not_contractive_in_the_plane() {
    let target = DiscreteMeasure::from_flat(2, vec![-1.0, 0.0, 0.5, 1.0, 1.5, -0.5], vec![1.0 / 3.0; 3]).unwrap();
    let field = MpvfSpec::TowardMeasure { target, sign: 1.0 };
    let r = dissipativity_certificate(&field, &Sampler::new(2, 31).with_atoms(3, 3), CertificateOptions::new(-1.0, 40))
        .unwrap();
    assert!(!r.passed);
}

#[test]
fn lambda_transform_shifts_the_certificate() {
    for (k, (field, d, lambda)) in library().into_iter().enumerate() {
        let sampler = Sampler::new(d, 200 + k as u64).with_random_weights(true);
        let opts = CertificateOptions::new(lambda, 30);
        assert!(dissipativity_certificate(&field, &sampler, opts).unwrap().passed);
        let shifted = Transformed { inner: &field, lambda };
        let r = dissipativity_certificate(&shifted, &sampler, CertificateOptions::new(0.0, 30)).unwrap();
        assert!(r.passed, "{field:?}: {}", r.max_residual);
    }
}

#[test]
fn lipschitz_maps_are_dissipative() {
    let maps = [(MapName::Rotation, 2), (MapName::NegIdentity, 3), (MapName::Sin, 2), (MapName::Expand, 1)];
    for (map, d) in maps {
        let l = map.lipschitz().unwrap();
        let field = MpvfSpec::PerParticleMap { map };
        let r =
            dissipativity_certificate(&field, &Sampler::new(d, 7), CertificateOptions::new(0.5 * (1.0 + l * l), 50))
                .unwrap();
        assert!(r.passed, "{map:?}");
    }
}

#[test]
fn expanding_map_fails_below_its_constant() {
    let field = MpvfSpec::PerParticleMap { map: MapName::Expand };
    let r = dissipativity_certificate(&field, &Sampler::new(2, 3), CertificateOptions::new(1.0, 20)).unwrap();
    assert!(!r.passed);
    assert!(r.pairs.iter().all(|p| (p.residual - p.w2).abs() <= 1e-9 * (1.0 + p.w2)));
}

#[test]
fn dimension_restrictions() {
    let plane = DiscreteMeasure::dirac(pt(&[0.0, 0.0]));
    assert!(MpvfSpec::SplittingParticle.evaluate(&plane).is_err());
    assert!(MpvfSpec::Rotation.evaluate(&DiscreteMeasure::dirac(1.0)).is_err());
}

#[test]
fn specs_round_trip_through_json() {
    for (field, _, _) in library() {
        let text = serde_json::to_string(&field).unwrap();
        let back: MpvfSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }
}
