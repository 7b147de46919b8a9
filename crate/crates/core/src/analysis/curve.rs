use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;

/// A curve of measures that can be evaluated at a time.
pub trait Curve {
    fn at(&self, t: f64) -> Result<DiscreteMeasure>;
}

impl<F> Curve for F
where
    F: Fn(f64) -> Result<DiscreteMeasure>,
{
    fn at(&self, t: f64) -> Result<DiscreteMeasure> {
        self(t)
    }
}

/// Relative tolerance for looking up a grid time.
const GRID_TOL: f64 = 1e-12;

/// A curve known only on a strictly increasing time grid.
#[derive(Debug, Clone)]
pub struct CurveSamples {
    times: Vec<f64>,
    measures: Vec<DiscreteMeasure>,
}

impl CurveSamples {
    pub fn new(times: Vec<f64>, measures: Vec<DiscreteMeasure>) -> Result<Self> {
        if times.len() != measures.len() {
            return Err(Error::InsufficientSamples("times and measures differ in length".into()));
        }
        if times.is_empty() {
            return Err(Error::InsufficientSamples("empty curve".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InsufficientSamples("grid must be strictly increasing".into()));
        }
        let d = measures[0].dim();
        if let Some(m) = measures.iter().find(|m| m.dim() != d) {
            return Err(Error::DimensionMismatch { left: d, right: m.dim() });
        }
        Ok(CurveSamples { times, measures })
    }

    /// Samples `f` on `times`.
    pub fn from_fn(times: Vec<f64>, f: impl Fn(f64) -> Result<DiscreteMeasure>) -> Result<Self> {
        let measures = times.iter().map(|&t| f(t)).collect::<Result<Vec<_>>>()?;
        Self::new(times, measures)
    }

    /// `n + 1` equispaced times on `[a, b]`.
    pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|k| a + (b - a) * k as f64 / n as f64).collect()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn measures(&self) -> &[DiscreteMeasure] {
        &self.measures
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.measures[0].dim()
    }

    pub(crate) fn require(&self, min: usize) -> Result<()> {
        if self.len() < min {
            return Err(Error::InsufficientSamples(format!("need at least {min} grid points, got {}", self.len())));
        }
        Ok(())
    }
}

impl Curve for CurveSamples {
    fn at(&self, t: f64) -> Result<DiscreteMeasure> {
        let k = self.times.partition_point(|&s| s < t - GRID_TOL * (1.0 + t.abs()));
        match self.times.get(k) {
            Some(&s) if (s - t).abs() <= GRID_TOL * (1.0 + t.abs()) => Ok(self.measures[k].clone()),
            _ => Err(Error::InsufficientSamples(format!("time {t} is not on the grid"))),
        }
    }
}
