//! Sampled certificates of `lambda`-dissipativity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Mpvf;
use crate::error::{Error, Result};
use crate::io::atom_rows;
use crate::measure::DiscreteMeasure;
use crate::pairing::{pairing_r, pairing_r_nu};
use crate::par::{self, Execution};

/// A pair passes when its residual is at most `PASS_TOL * (1 + W_2^2)`.
pub const PASS_TOL: f64 = 1e-7;

/// Seeded generator of random pairs of measures.
pub trait MeasureSampler: Sync {
    /// The `k`-th pair; depends only on the seed and `k`.
    fn pair(&self, k: u64) -> Result<(DiscreteMeasure, DiscreteMeasure)>;
}

/// Atoms uniform in `[-half_width, half_width]^dim`, atom counts uniform in
/// `min_atoms..=max_atoms`, equal weights unless `random_weights`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sampler {
    pub dim: usize,
    pub seed: u64,
    #[serde(default = "default_min")]
    pub min_atoms: usize,
    #[serde(default = "default_max")]
    pub max_atoms: usize,
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    #[serde(default)]
    pub random_weights: bool,
}

fn default_min() -> usize {
    2
}

fn default_max() -> usize {
    8
}

fn default_half_width() -> f64 {
    1.0
}

impl Sampler {
    pub fn new(dim: usize, seed: u64) -> Self {
        Sampler { dim, seed, min_atoms: 2, max_atoms: 8, half_width: 1.0, random_weights: false }
    }

    pub fn with_atoms(mut self, min_atoms: usize, max_atoms: usize) -> Self {
        self.min_atoms = min_atoms;
        self.max_atoms = max_atoms;
        self
    }

    pub fn with_random_weights(mut self, on: bool) -> Self {
        self.random_weights = on;
        self
    }

    /// The generator for stream `k`.
    pub fn rng(&self, k: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(k);
        rng
    }

    pub fn measure(&self, rng: &mut impl Rng) -> Result<DiscreteMeasure> {
        if self.min_atoms == 0 || self.min_atoms > self.max_atoms {
            return Err(Error::InvalidMeasure(format!("atom range {}..={} is empty", self.min_atoms, self.max_atoms)));
        }
        let n = rng.random_range(self.min_atoms..=self.max_atoms);
        let h = self.half_width;
        let coords: Vec<f64> = (0..n * self.dim).map(|_| rng.random_range(-h..=h)).collect();
        let weights = if self.random_weights {
            let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|w| w / s).collect()
        } else {
            vec![1.0 / n as f64; n]
        };
        DiscreteMeasure::from_flat(self.dim, coords, weights)
    }
}

impl MeasureSampler for Sampler {
    fn pair(&self, k: u64) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
        let mut rng = self.rng(k);
        Ok((self.measure(&mut rng)?, self.measure(&mut rng)?))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PairRecord {
    pub index: usize,
    pub w2: f64,
    pub pairing: f64,
    pub residual: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DissipativityReport {
    pub lambda_tested: f64,
    pub n_pairs: usize,
    pub max_residual: f64,
    pub passed: bool,
    #[serde(serialize_with = "serialize_pair")]
    pub worst_pair: (DiscreteMeasure, DiscreteMeasure),
    pub pairs: Vec<PairRecord>,
}

fn serialize_pair<S: serde::Serializer>(pair: &(DiscreteMeasure, DiscreteMeasure), s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&atom_rows::Rows(&pair.0))?;
    t.serialize_element(&atom_rows::Rows(&pair.1))?;
    t.end()
}

#[derive(Debug, Clone, Copy)]
pub struct CertificateOptions {
    pub lambda: f64,
    pub n_pairs: usize,
    pub execution: Execution,
}

impl CertificateOptions {
    pub fn new(lambda: f64, n_pairs: usize) -> Self {
        CertificateOptions { lambda, n_pairs, execution: Execution::default() }
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }
}

/// Residual of `[Phi0, Phi1]_r <= lambda W_2^2(mu0, mu1)` over all section
/// pairs, for sampled `(mu0, mu1)`.
pub fn dissipativity_certificate<F, S>(field: &F, sampler: &S, opts: CertificateOptions) -> Result<DissipativityReport>
where
    F: Mpvf + ?Sized,
    S: MeasureSampler + ?Sized,
{
    certify(field, sampler, opts, |field, mu0, mu1| {
        let s0 = field.sections(mu0)?;
        let s1 = field.sections(mu1)?;
        let mut worst = f64::NEG_INFINITY;
        for a in &s0 {
            for b in &s1 {
                worst = worst.max(pairing_r(a, b)?.value);
            }
        }
        Ok(worst)
    })
}

/// Residual of `[Phi0, mu1]_r + [Phi1, mu0]_r <= lambda W_2^2(mu0, mu1)`.
pub fn weak_dissipativity_certificate<F, S>(
    field: &F,
    sampler: &S,
    opts: CertificateOptions,
) -> Result<DissipativityReport>
where
    F: Mpvf + ?Sized,
    S: MeasureSampler + ?Sized,
{
    certify(field, sampler, opts, |field, mu0, mu1| {
        let s0 = field.sections(mu0)?;
        let s1 = field.sections(mu1)?;
        let mut worst = f64::NEG_INFINITY;
        for a in &s0 {
            for b in &s1 {
                worst = worst.max(pairing_r_nu(a, mu1)?.value + pairing_r_nu(b, mu0)?.value);
            }
        }
        Ok(worst)
    })
}

fn certify<F, S, P>(field: &F, sampler: &S, opts: CertificateOptions, pairing: P) -> Result<DissipativityReport>
where
    F: Mpvf + ?Sized,
    S: MeasureSampler + ?Sized,
    P: Fn(&F, &DiscreteMeasure, &DiscreteMeasure) -> Result<f64> + Sync,
{
    if opts.n_pairs == 0 {
        return Err(Error::InsufficientSamples("need at least one pair".into()));
    }
    let results =
        par::map_range(opts.execution, opts.n_pairs, |k| -> Result<(PairRecord, DiscreteMeasure, DiscreteMeasure)> {
            let (mu0, mu1) = sampler.pair(k as u64)?;
            let w2 = crate::transport::w2(&mu0, &mu1)?.cost;
            let value = pairing(field, &mu0, &mu1)?;
            let residual = value - opts.lambda * w2;
            let passed = residual <= PASS_TOL * (1.0 + w2);
            Ok((PairRecord { index: k, w2, pairing: value, residual, passed }, mu0, mu1))
        });
    let results = par::collect_results(results)?;
    let (worst_k, _) = results
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .0.residual.total_cmp(&b.1 .0.residual))
        .expect("at least one pair");
    let worst_pair = (results[worst_k].1.clone(), results[worst_k].2.clone());
    let pairs: Vec<PairRecord> = results.into_iter().map(|r| r.0).collect();
    Ok(DissipativityReport {
        lambda_tested: opts.lambda,
        n_pairs: pairs.len(),
        max_residual: pairs[worst_k].residual,
        passed: pairs.iter().all(|p| p.passed),
        worst_pair,
        pairs,
    })
}
