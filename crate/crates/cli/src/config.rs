//! Experiment configuration: a TOML document validated before any computation.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use wasserflow::analysis::LiftFlow;
use wasserflow::field::Sampler;
use wasserflow::io::atom_rows;
use wasserflow::measure::{quantile_discretize_1d, uniform_quantile};
use wasserflow::{DiscreteMeasure, Mpvf, MpvfSpec, Point, VelocityMeasure};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    Pairing,
    Certify,
    EviCheck,
    RateStudy,
    Contraction,
    Cauchy,
    Calculus,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<MpvfSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<MeasureSpec>,
    #[serde(default)]
    pub numeric: Numeric,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairing: Option<PairingSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certify: Option<CertifySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evi: Option<EviSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contraction: Option<ContractionSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cauchy: Option<CauchySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calculus: Option<CalculusSection>,
}

/// Stability bound: a number or `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Bound {
    Value(f64),
    Auto(AutoTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numeric {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taus: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<Bound>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Largest accepted W2 distance to the reference in `simulate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_tol: Option<f64>,
}

/// A measure given inline or by a generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    /// Rows `[w, x1, ..., xd]`.
    Atoms {
        #[serde(with = "atom_rows")]
        rows: DiscreteMeasure,
    },
    Dirac {
        at: Vec<f64>,
    },
    /// Midpoint quantile discretization of the uniform law on `[a, b]`.
    Uniform {
        a: f64,
        b: f64,
        n: usize,
    },
    /// `n` equal atoms on the circle of radius `radius`.
    Ring {
        n: usize,
        radius: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl MeasureSpec {
    pub fn build(&self) -> Result<DiscreteMeasure, CliError> {
        Ok(match self {
            MeasureSpec::Atoms { rows } => rows.clone(),
            MeasureSpec::Dirac { at } => DiscreteMeasure::dirac(Point::new(at.clone())?),
            MeasureSpec::Uniform { a, b, n } => {
                if !(b > a) {
                    return Err(CliError::Config(format!("uniform law needs a < b, got [{a}, {b}]")));
                }
                quantile_discretize_1d(uniform_quantile(*a, *b), *n)?
            }
            MeasureSpec::Ring { n, radius, phase } => {
                if *n == 0 {
                    return Err(CliError::Config("ring needs at least one atom".into()));
                }
                let coords = (0..*n)
                    .flat_map(|k| {
                        let a = phase + std::f64::consts::TAU * k as f64 / *n as f64;
                        [radius * a.cos(), radius * a.sin()]
                    })
                    .collect();
                DiscreteMeasure::from_flat(2, coords, vec![1.0 / *n as f64; *n])?
            }
        })
    }
}

/// Closed-form curves started from `initial`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceSpec {
    Splitting,
    Stationary,
    Translation { velocity: Vec<f64> },
    Lift { flow: LiftFlow },
    Geodesic { target: MeasureSpec },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairingSection {
    /// Rows `[w, x1..xd, v1..vd]`; when absent the field is evaluated at `initial`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<Vec<Vec<f64>>>,
    pub against: MeasureSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifySection {
    pub sampler: SamplerSection,
    pub n_pairs: usize,
    /// Also run the weak (cross-term) certificate.
    #[serde(default)]
    pub weak: bool,
}

/// Random pairs for certificates; the seed is `numeric.seed`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSection {
    pub dim: usize,
    #[serde(default = "two_atoms")]
    pub min_atoms: usize,
    #[serde(default = "eight_atoms")]
    pub max_atoms: usize,
    #[serde(default = "unit")]
    pub half_width: f64,
    #[serde(default)]
    pub random_weights: bool,
}

fn two_atoms() -> usize {
    2
}

fn eight_atoms() -> usize {
    8
}

fn unit() -> f64 {
    1.0
}

impl SamplerSection {
    pub fn sampler(&self, seed: u64) -> Sampler {
        let mut s = Sampler::new(self.dim, seed)
            .with_atoms(self.min_atoms, self.max_atoms)
            .with_random_weights(self.random_weights);
        s.half_width = self.half_width;
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveSource {
    /// Euler iterates with `numeric.tau`.
    Euler,
    /// The closed-form `reference` sampled on `samples` uniform times.
    Reference,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EviSection {
    pub curve: CurveSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    pub targets: Vec<MeasureSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractionSection {
    pub other: MeasureSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CauchySection {
    pub eta: f64,
    #[serde(default = "two")]
    pub theta: f64,
}

fn two() -> f64 {
    2.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalculusSection {
    pub instances: usize,
    pub dim: usize,
    pub max_atoms: usize,
}

fn need<'a, T>(value: &'a Option<T>, what: &str) -> Result<&'a T, CliError> {
    value.as_ref().ok_or_else(|| CliError::Config(format!("missing {what}")))
}

fn positive(value: Option<f64>, what: &str) -> Result<f64, CliError> {
    match value {
        Some(v) if v > 0.0 && v.is_finite() => Ok(v),
        Some(v) => Err(CliError::Config(format!("{what} must be positive and finite, got {v}"))),
        None => Err(CliError::Config(format!("missing {what}"))),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn field(&self) -> Result<&MpvfSpec, CliError> {
        need(&self.field, "[field]")
    }

    pub fn initial(&self) -> Result<DiscreteMeasure, CliError> {
        need(&self.initial, "[initial]")?.build()
    }

    pub fn tau(&self) -> Result<f64, CliError> {
        positive(self.numeric.tau, "numeric.tau")
    }

    pub fn horizon(&self) -> Result<f64, CliError> {
        positive(self.numeric.horizon, "numeric.horizon")
    }

    pub fn lambda(&self) -> Result<f64, CliError> {
        match self.numeric.lambda {
            Some(l) if l.is_finite() => Ok(l),
            Some(l) => Err(CliError::Config(format!("numeric.lambda must be finite, got {l}"))),
            None => Err(CliError::Config("missing numeric.lambda".into())),
        }
    }

    pub fn reference(&self) -> Result<&ReferenceSpec, CliError> {
        need(&self.reference, "[reference]")
    }

    /// Schema checks: required sections per command and parameter ranges.
    /// Builds every measure once so malformed atoms fail here.
    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(f) = &self.field {
            f.validate()?;
        }
        if let Some(m) = &self.initial {
            m.build()?;
        }
        if let Some(taus) = &self.numeric.taus {
            if taus.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
                return Err(CliError::Config("numeric.taus must be positive and finite".into()));
            }
        }
        if let Some(Bound::Value(l)) = self.numeric.bound {
            positive(Some(l), "numeric.bound")?;
        }
        let needs_bound = || need(&self.numeric.bound, "numeric.bound").map(|_| ());
        match self.command {
            Command::Simulate => {
                self.field()?;
                self.initial()?;
                self.tau()?;
                self.horizon()?;
                needs_bound()?;
                if let Some(ReferenceSpec::Geodesic { target }) = &self.reference {
                    target.build()?;
                }
            }
            Command::Pairing => {
                let p = need(&self.pairing, "[pairing]")?;
                p.against.build()?;
                if p.phi.is_none() {
                    self.field()?;
                    self.initial()?;
                }
            }
            Command::Certify => {
                self.field()?;
                self.lambda()?;
                let c = need(&self.certify, "[certify]")?;
                if c.n_pairs == 0 {
                    return Err(CliError::Config("certify.n_pairs must be at least 1".into()));
                }
                let s = &c.sampler;
                if s.dim == 0 || s.min_atoms == 0 || s.min_atoms > s.max_atoms || !(s.half_width > 0.0) {
                    return Err(CliError::Config(
                        "certify.sampler needs dim >= 1 and 1 <= min_atoms <= max_atoms".into(),
                    ));
                }
            }
            Command::EviCheck => {
                self.field()?;
                self.initial()?;
                self.lambda()?;
                let e = need(&self.evi, "[evi]")?;
                if e.targets.is_empty() {
                    return Err(CliError::Config("evi.targets is empty".into()));
                }
                for t in &e.targets {
                    t.build()?;
                }
                self.horizon()?;
                match e.curve {
                    CurveSource::Euler => {
                        self.tau()?;
                        needs_bound()?;
                    }
                    CurveSource::Reference => {
                        self.reference()?;
                        if e.samples.unwrap_or(0) < 3 {
                            return Err(CliError::Config("evi.samples must be at least 3".into()));
                        }
                    }
                }
            }
            Command::RateStudy => {
                self.field()?;
                self.initial()?;
                self.horizon()?;
                self.reference()?;
                needs_bound()?;
                need(&self.numeric.taus, "numeric.taus")?;
            }
            Command::Contraction => {
                self.field()?;
                self.initial()?;
                self.tau()?;
                self.horizon()?;
                self.lambda()?;
                needs_bound()?;
                need(&self.contraction, "[contraction]")?.other.build()?;
            }
            Command::Cauchy => {
                self.field()?;
                self.initial()?;
                self.tau()?;
                self.horizon()?;
                needs_bound()?;
                let c = need(&self.cauchy, "[cauchy]")?;
                positive(Some(c.eta), "cauchy.eta")?;
                if !(c.theta > 1.0) {
                    return Err(CliError::Config(format!("cauchy.theta must exceed 1, got {}", c.theta)));
                }
            }
            Command::Calculus => {
                let c = need(&self.calculus, "[calculus]")?;
                if c.instances == 0 || c.dim == 0 || c.max_atoms == 0 {
                    return Err(CliError::Config("calculus sizes must be at least 1".into()));
                }
            }
        }
        Ok(())
    }
}

/// Velocity measure from rows `[w, x1..xd, v1..vd]`.
pub fn velocity_from_rows(rows: &[Vec<f64>]) -> Result<VelocityMeasure, CliError> {
    let width = rows.first().map(Vec::len).unwrap_or(0);
    if width < 3 || width.is_multiple_of(2) || rows.iter().any(|r| r.len() != width) {
        return Err(CliError::Config("pairing.phi rows must all be [w, x1..xd, v1..vd]".into()));
    }
    let d = (width - 1) / 2;
    let weights = rows.iter().map(|r| r[0]).collect();
    let flat = rows.iter().flat_map(|r| r[1..].iter().copied()).collect();
    Ok(VelocityMeasure::from_rows(d, flat, weights)?)
}

/// Resolves the stability bound, using the global-solvability constants for
/// `"auto"`. Returns the bound and, for `"auto"`, the constants used.
pub fn resolve_bound(
    cfg: &ExperimentConfig,
    mu0: &DiscreteMeasure,
) -> Result<(f64, Option<wasserflow::euler::GlobalBounds>), CliError> {
    match need(&cfg.numeric.bound, "numeric.bound")? {
        Bound::Value(l) => Ok((*l, None)),
        Bound::Auto(_) => {
            let field = cfg.field()?;
            let horizon = cfg.horizon()?;
            let lambda = cfg.numeric.lambda.unwrap_or(0.0);
            if field.growth_bound(1.0).is_none() {
                return Err(CliError::Config("bound = \"auto\" needs a field with a known growth bound".into()));
            }
            let psi0 = field.evaluate(mu0)?;
            let growth = |r: f64| field.growth_bound(r).unwrap_or(f64::INFINITY);
            let g = wasserflow::euler::global_bounds(mu0, &psi0, horizon, lambda, growth, None);
            Ok((g.l, Some(g)))
        }
    }
}
