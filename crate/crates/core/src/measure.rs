//! Finitely supported probability measures on `R^d` and on the tangent
//! bundle `TR^d = R^d x R^d`.
//!
//! Both types are immutable after construction and always in canonical form:
//! zero-weight atoms are dropped and atoms whose coordinates agree within
//! [`MERGE_TOL`] are merged (weights summed, first occurrence kept).

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Absolute per-coordinate tolerance under which two atoms are identified.
pub const MERGE_TOL: f64 = 1e-12;

/// Accepted deviation of the total mass from one at construction.
pub const MASS_TOL: f64 = 1e-9;

/// A point of `R^d` with finite coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidMeasure("points need dimension >= 1".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidMeasure(format!("non-finite coordinate in {coords:?}")));
        }
        Ok(Point(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl From<f64> for Point {
    fn from(x: f64) -> Self {
        Point::new(vec![x]).expect("finite scalar")
    }
}

/// A nonnegative scalar such as `m_2^2(mu)` or `|Phi|_2`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ScalarMoment(f64);

impl ScalarMoment {
    pub fn new(value: f64) -> Self {
        debug_assert!(value >= 0.0 || value.is_nan());
        ScalarMoment(value.max(0.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

/// Drops nonpositive weights and merges rows (of width `width`) that agree
/// within `MERGE_TOL`. Groups are detected by a lexicographic sweep; the output
/// keeps the order of first occurrence.
fn canonicalize(width: usize, rows: &[f64], weights: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = weights.len();
    let row = |i: usize| &rows[i * width..(i + 1) * width];
    let mut order: Vec<usize> = (0..n).filter(|&i| weights[i] > 0.0).collect();
    order.sort_by(|&a, &b| lex_cmp(row(a), row(b)).then(a.cmp(&b)));

    // representative (smallest original index) for each kept atom
    let mut rep = vec![usize::MAX; n];
    let mut k = 0;
    while k < order.len() {
        let head = order[k];
        let mut members = vec![head];
        let mut j = k + 1;
        while j < order.len() && close(row(head), row(order[j]), MERGE_TOL) {
            members.push(order[j]);
            j += 1;
        }
        let first = *members.iter().min().unwrap();
        for m in members {
            rep[m] = first;
        }
        k = j;
    }

    let mut out_rows = Vec::with_capacity(rows.len());
    let mut out_w = Vec::with_capacity(n);
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        if rep[i] == usize::MAX {
            continue;
        }
        let r = rep[i];
        if slot[r] == usize::MAX {
            slot[r] = out_w.len();
            out_rows.extend_from_slice(row(r));
            out_w.push(weights[i]);
        } else {
            out_w[slot[r]] += weights[i];
        }
    }
    (out_rows, out_w)
}

fn check_weights(weights: &[f64]) -> Result<f64> {
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::InvalidMeasure(format!("invalid weight {w}")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > MASS_TOL {
        return Err(Error::InvalidMeasure(format!("total mass {total} != 1")));
    }
    Ok(total)
}

/// Rescales to unit mass unless already within `NORM_TOL` of it, so that
/// stored weights survive a save/load round trip bit for bit.
fn renormalize(weights: &mut [f64], total: f64) {
    const NORM_TOL: f64 = 1e-12;
    if (total - 1.0).abs() > NORM_TOL {
        weights.iter_mut().for_each(|w| *w /= total);
    }
}

/// A finitely supported probability measure on `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(points: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!("{} points but {} weights", points.len(), weights.len())));
        }
        let dim = points.first().map(Point::dim).ok_or_else(|| Error::InvalidMeasure("empty measure".into()))?;
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in &points {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch { left: dim, right: p.dim() });
            }
            coords.extend_from_slice(p.coords());
        }
        Self::from_flat(dim, coords, weights)
    }

    /// Builds a measure from row-major coordinates (`n * dim` values).
    pub fn from_flat(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidMeasure("dimension must be >= 1".into()));
        }
        if coords.len() != dim * weights.len() {
            return Err(Error::InvalidMeasure("coordinate buffer has wrong length".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidMeasure("non-finite coordinate".into()));
        }
        let total = check_weights(&weights)?;
        let (coords, mut weights) = canonicalize(dim, &coords, &weights);
        if weights.is_empty() {
            return Err(Error::InvalidMeasure("no atom with positive weight".into()));
        }
        renormalize(&mut weights, total);
        Ok(DiscreteMeasure { dim, coords, weights })
    }

    pub fn dirac(point: impl Into<Point>) -> Self {
        let p = point.into();
        DiscreteMeasure { dim: p.dim(), coords: p.into_vec(), weights: vec![1.0] }
    }

    /// Equal weights on the given points.
    pub fn uniform(points: Vec<Point>) -> Result<Self> {
        let n = points.len();
        Self::new(points, vec![1.0 / n as f64; n])
    }

    /// Measure on the real line from `(weight, position)` pairs.
    pub fn from_1d(atoms: &[(f64, f64)]) -> Result<Self> {
        let (w, x): (Vec<f64>, Vec<f64>) = atoms.iter().copied().unzip();
        Self::from_flat(1, x, w)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.coords.chunks_exact(self.dim).zip(self.weights.iter().copied())
    }

    /// `m_2^2(mu) = sum_i w_i |x_i|^2`.
    pub fn second_moment(&self) -> ScalarMoment {
        ScalarMoment::new(self.atoms().map(|(x, w)| w * norm_sq(x)).sum())
    }

    pub fn barycenter(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.dim];
        for (x, w) in self.atoms() {
            b.iter_mut().zip(x).for_each(|(bi, xi)| *bi += w * xi);
        }
        b
    }

    /// Integral of a scalar test function.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.atoms().map(|(x, w)| w * f(x)).sum()
    }

    /// Push-forward through a map `R^d -> R^k`.
    pub fn push_forward(&self, out_dim: usize, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        let mut coords = Vec::with_capacity(self.len() * out_dim);
        for (x, _) in self.atoms() {
            let y = f(x);
            if y.len() != out_dim {
                return Err(Error::DimensionMismatch { left: out_dim, right: y.len() });
            }
            coords.extend(y);
        }
        Self::from_flat(out_dim, coords, self.weights.clone())
    }

    pub fn ensure_same_dim(&self, other: &DiscreteMeasure) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { left: self.dim, right: other.dim });
        }
        Ok(())
    }

    /// Atom indices sorted by position (lexicographic).
    pub fn sorted_indices(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| lex_cmp(self.point(a), self.point(b)));
        idx
    }

    /// Atom-wise equality up to reordering: same support (within `tol` per
    /// coordinate) and same weights (within `tol`).
    pub fn same_atoms(&self, other: &DiscreteMeasure, tol: f64) -> bool {
        if self.dim != other.dim || self.len() != other.len() {
            return false;
        }
        let a = self.sorted_indices();
        let b = other.sorted_indices();
        a.iter().zip(&b).all(|(&i, &j)| {
            close(self.point(i), other.point(j), tol) && (self.weight(i) - other.weight(j)).abs() <= tol
        })
    }
}

/// A finitely supported probability measure on position-velocity pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityMeasure {
    dim: usize,
    /// row-major `[x | v]`, `2 * dim` values per atom
    rows: Vec<f64>,
    weights: Vec<f64>,
}

impl VelocityMeasure {
    pub fn new(pairs: Vec<(Point, Point)>, weights: Vec<f64>) -> Result<Self> {
        if pairs.len() != weights.len() {
            return Err(Error::InvalidMeasure("pairs/weights length mismatch".into()));
        }
        let dim = pairs.first().map(|(x, _)| x.dim()).ok_or_else(|| Error::InvalidMeasure("empty measure".into()))?;
        let mut rows = Vec::with_capacity(pairs.len() * 2 * dim);
        for (x, v) in &pairs {
            if x.dim() != dim || v.dim() != dim {
                return Err(Error::DimensionMismatch { left: dim, right: x.dim().max(v.dim()) });
            }
            rows.extend_from_slice(x.coords());
            rows.extend_from_slice(v.coords());
        }
        Self::from_rows(dim, rows, weights)
    }

    /// Builds from row-major `[x | v]` rows (`2 * dim` values per atom).
    pub fn from_rows(dim: usize, rows: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 || rows.len() != 2 * dim * weights.len() {
            return Err(Error::InvalidMeasure("row buffer has wrong length".into()));
        }
        if rows.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidMeasure("non-finite coordinate".into()));
        }
        let total = check_weights(&weights)?;
        let (rows, mut weights) = canonicalize(2 * dim, &rows, &weights);
        if weights.is_empty() {
            return Err(Error::InvalidMeasure("no atom with positive weight".into()));
        }
        renormalize(&mut weights, total);
        Ok(VelocityMeasure { dim, rows, weights })
    }

    /// `(i, v)_# mu` for a velocity map `v`.
    pub fn from_map(mu: &DiscreteMeasure, v: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        let d = mu.dim();
        let mut rows = Vec::with_capacity(mu.len() * 2 * d);
        for (x, _) in mu.atoms() {
            let vx = v(x);
            if vx.len() != d {
                return Err(Error::DimensionMismatch { left: d, right: vx.len() });
            }
            rows.extend_from_slice(x);
            rows.extend(vx);
        }
        Self::from_rows(d, rows, mu.weights().to_vec())
    }

    /// The zero-velocity lift `(i, 0)_# mu`.
    pub fn zero_lift(mu: &DiscreteMeasure) -> Self {
        let d = mu.dim();
        Self::from_map(mu, |_| vec![0.0; d]).expect("zero lift of a valid measure")
    }

    /// `mu (x) theta`: every atom of `mu` carries the whole velocity law `theta`.
    pub fn product(mu: &DiscreteMeasure, theta: &DiscreteMeasure) -> Result<Self> {
        mu.ensure_same_dim(theta)?;
        let d = mu.dim();
        let mut rows = Vec::with_capacity(mu.len() * theta.len() * 2 * d);
        let mut w = Vec::with_capacity(mu.len() * theta.len());
        for (x, wx) in mu.atoms() {
            for (v, wv) in theta.atoms() {
                rows.extend_from_slice(x);
                rows.extend_from_slice(v);
                w.push(wx * wv);
            }
        }
        Self::from_rows(d, rows, w)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn x(&self, i: usize) -> &[f64] {
        let s = 2 * self.dim * i;
        &self.rows[s..s + self.dim]
    }

    pub fn v(&self, i: usize) -> &[f64] {
        let s = 2 * self.dim * i + self.dim;
        &self.rows[s..s + self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Iterates `(x, v, w)`.
    pub fn atoms(&self) -> impl Iterator<Item = (&[f64], &[f64], f64)> + '_ {
        self.rows
            .chunks_exact(2 * self.dim)
            .zip(self.weights.iter().copied())
            .map(move |(r, w)| (&r[..self.dim], &r[self.dim..], w))
    }

    /// `|Phi|_2 = (sum_i w_i |v_i|^2)^{1/2}`.
    pub fn velocity_norm(&self) -> ScalarMoment {
        ScalarMoment::new(self.atoms().map(|(_, v, w)| w * norm_sq(v)).sum::<f64>().sqrt())
    }

    /// `(exp^t)_# Phi`, atoms `x + t v`.
    pub fn push_exp(&self, t: f64) -> DiscreteMeasure {
        let d = self.dim;
        let mut coords = Vec::with_capacity(self.len() * d);
        for (x, v, _) in self.atoms() {
            coords.extend(x.iter().zip(v).map(|(xi, vi)| xi + t * vi));
        }
        DiscreteMeasure::from_flat(d, coords, self.weights.clone()).expect("push-forward of a valid measure")
    }

    pub fn x_marginal(&self) -> DiscreteMeasure {
        let mut coords = Vec::with_capacity(self.len() * self.dim);
        for (x, _, _) in self.atoms() {
            coords.extend_from_slice(x);
        }
        DiscreteMeasure::from_flat(self.dim, coords, self.weights.clone()).expect("marginal of a valid measure")
    }

    pub fn v_marginal(&self) -> DiscreteMeasure {
        let mut coords = Vec::with_capacity(self.len() * self.dim);
        for (_, v, _) in self.atoms() {
            coords.extend_from_slice(v);
        }
        DiscreteMeasure::from_flat(self.dim, coords, self.weights.clone()).expect("marginal of a valid measure")
    }

    fn map_rows(&self, f: impl Fn(&[f64], &[f64]) -> (Vec<f64>, Vec<f64>)) -> Self {
        let mut rows = Vec::with_capacity(self.rows.len());
        for (x, v, _) in self.atoms() {
            let (nx, nv) = f(x, v);
            rows.extend(nx);
            rows.extend(nv);
        }
        Self::from_rows(self.dim, rows, self.weights.clone()).expect("image of a valid measure")
    }

    /// `J_# Phi` with `J(x, v) = (x, -v)`.
    pub fn negate(&self) -> Self {
        self.map_rows(|x, v| (x.to_vec(), v.iter().map(|c| -c).collect()))
    }

    /// `L^lambda_# Phi` with `L^lambda(x, v) = (x, v - lambda x)`.
    pub fn lambda_transform(&self, lambda: f64) -> Self {
        self.map_rows(|x, v| (x.to_vec(), v.iter().zip(x).map(|(vi, xi)| vi - lambda * xi).collect()))
    }

    /// Free motion on the tangent bundle: `(x, v) -> (x + t v, v)`.
    pub fn shift(&self, t: f64) -> Self {
        self.map_rows(|x, v| (x.iter().zip(v).map(|(xi, vi)| xi + t * vi).collect(), v.to_vec()))
    }

    /// Atom-wise equality up to reordering.
    pub fn same_atoms(&self, other: &VelocityMeasure, tol: f64) -> bool {
        if self.dim != other.dim || self.len() != other.len() {
            return false;
        }
        let w = 2 * self.dim;
        let row = |m: &VelocityMeasure, i: usize| m.rows[i * w..(i + 1) * w].to_vec();
        let mut a: Vec<usize> = (0..self.len()).collect();
        let mut b: Vec<usize> = (0..other.len()).collect();
        a.sort_by(|&i, &j| lex_cmp(&row(self, i), &row(self, j)));
        b.sort_by(|&i, &j| lex_cmp(&row(other, i), &row(other, j)));
        a.iter().zip(&b).all(|(&i, &j)| {
            close(&row(self, i), &row(other, j), tol) && (self.weight(i) - other.weight(j)).abs() <= tol
        })
    }
}

/// Midpoint quantile discretization of a law on the real line: atoms at
/// `F^{-1}((k - 1/2) / n)`, `k = 1..n`, each with weight `1/n`.
pub fn quantile_discretize_1d(quantile: impl Fn(f64) -> f64, n: usize) -> Result<DiscreteMeasure> {
    if n == 0 {
        return Err(Error::InvalidMeasure("need at least one atom".into()));
    }
    let mut xs = Vec::with_capacity(n);
    for k in 1..=n {
        let x = quantile((k as f64 - 0.5) / n as f64);
        if !x.is_finite() {
            return Err(Error::InvalidMeasure(format!("quantile value {x} at level {k}/{n}")));
        }
        xs.push(x);
    }
    DiscreteMeasure::from_flat(1, xs, vec![1.0 / n as f64; n])
}

/// Quantile function of the normalized Lebesgue measure on `[a, b]`.
pub fn uniform_quantile(a: f64, b: f64) -> impl Fn(f64) -> f64 {
    move |s| a + (b - a) * s
}
