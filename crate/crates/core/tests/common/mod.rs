#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wasserflow::{DiscreteMeasure, Point, VelocityMeasure};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn pt(c: &[f64]) -> Point {
    Point::new(c.to_vec()).unwrap()
}

pub fn m1(atoms: &[(f64, f64)]) -> DiscreteMeasure {
    DiscreteMeasure::from_1d(atoms).unwrap()
}

/// Every vertex of the transport polytope with marginals `a` and `b`, found by
/// solving each square basis system of `m + n - 1` cells.
pub fn polytope_vertices(a: &[f64], b: &[f64]) -> Vec<Vec<f64>> {
    let (m, n) = (a.len(), b.len());
    let cells = m * n;
    let k = m + n - 1;
    // all marginal equations except the last column one, which is redundant
    let mut rhs = DVector::zeros(k);
    for i in 0..m {
        rhs[i] = a[i];
    }
    for j in 0..n - 1 {
        rhs[m + j] = b[j];
    }
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        let mut mat = DMatrix::zeros(k, k);
        for (col, &c) in subset.iter().enumerate() {
            let (i, j) = (c / n, c % n);
            mat[(i, col)] = 1.0;
            if j < n - 1 {
                mat[(m + j, col)] = 1.0;
            }
        }
        if let Some(x) = mat.lu().solve(&rhs) {
            if x.iter().all(|v| *v >= -1e-12 && v.is_finite()) {
                let mut full = vec![0.0; cells];
                for (col, &c) in subset.iter().enumerate() {
                    full[c] = x[col].max(0.0);
                }
                let col_ok = (0..n).all(|j| ((0..m).map(|i| full[i * n + j]).sum::<f64>() - b[j]).abs() < 1e-9);
                if col_ok && !out.iter().any(|v| v.iter().zip(&full).all(|(p, q)| (p - q).abs() < 1e-12)) {
                    out.push(full);
                }
            }
        }
        // next k-subset of 0..cells in lexicographic order
        let mut pos = k;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            if subset[pos] < cells - k + pos {
                break;
            }
        }
        subset[pos] += 1;
        for q in pos + 1..k {
            subset[q] = subset[q - 1] + 1;
        }
    }
}

/// Squared Wasserstein distance by vertex enumeration.
pub fn brute_w2(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
    let (m, n) = (mu.len(), nu.len());
    polytope_vertices(mu.weights(), nu.weights())
        .iter()
        .map(|p| (0..m * n).map(|c| p[c] * sq_dist(mu.point(c / n), nu.point(c % n))).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// Pairing by vertex enumeration: optimize `int <x0 - x1, v0 - v1>` over the
/// vertices whose quadratic cost is within `1e-9` of the optimum.
pub fn brute_pairing(phi0: &VelocityMeasure, phi1: &VelocityMeasure, maximize: bool) -> f64 {
    let (m, n) = (phi0.len(), phi1.len());
    let verts = polytope_vertices(phi0.weights(), phi1.weights());
    let primary: Vec<f64> =
        verts.iter().map(|p| (0..m * n).map(|c| p[c] * sq_dist(phi0.x(c / n), phi1.x(c % n))).sum()).collect();
    let best = primary.iter().cloned().fold(f64::INFINITY, f64::min);
    let secondary = |p: &Vec<f64>| -> f64 {
        (0..m * n)
            .map(|c| {
                let (i, j) = (c / n, c % n);
                let dx: Vec<f64> = phi0.x(i).iter().zip(phi1.x(j)).map(|(a, b)| a - b).collect();
                let dv: Vec<f64> = phi0.v(i).iter().zip(phi1.v(j)).map(|(a, b)| a - b).collect();
                p[c] * dot(&dx, &dv)
            })
            .sum()
    };
    let face = verts.iter().zip(&primary).filter(|(_, c)| **c <= best + 1e-9 * (1.0 + best)).map(|(p, _)| secondary(p));
    if maximize {
        face.fold(f64::NEG_INFINITY, f64::max)
    } else {
        face.fold(f64::INFINITY, f64::min)
    }
}

/// A random instance with `n` atoms in dimension `d`. Half of the instances
/// use coordinates on a coarse lattice so optimal plans are often non-unique.
pub fn random_velocity_measure(rng: &mut ChaCha8Rng, n: usize, d: usize, lattice: bool) -> VelocityMeasure {
    let coord = |rng: &mut ChaCha8Rng| {
        if lattice {
            rng.random_range(-2i32..=2) as f64 * 0.5
        } else {
            rng.random_range(-1.0..1.0)
        }
    };
    let rows: Vec<f64> = (0..n * 2 * d).map(|_| coord(rng)).collect();
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    let s: f64 = raw.iter().sum();
    let weights = if lattice { vec![1.0 / n as f64; n] } else { raw.into_iter().map(|w| w / s).collect() };
    VelocityMeasure::from_rows(d, rows, weights).unwrap()
}

/// A seeded pair of velocity measures with at most `max_atoms` atoms each.
pub fn random_instance(seed: u64, max_atoms: usize) -> (VelocityMeasure, VelocityMeasure) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.random_range(1..=3);
    let lattice = rng.random_bool(0.5);
    let n0 = rng.random_range(1..=max_atoms);
    let n1 = rng.random_range(1..=max_atoms);
    (random_velocity_measure(&mut rng, n0, d, lattice), random_velocity_measure(&mut rng, n1, d, lattice))
}

/// The rhombus configuration: `Phi = 1/2 delta_(u, w) + 1/2 delta_(-u, -w)`
/// and `nu0 = 1/2 delta_w + 1/2 delta_-w` with `u = (1, 0)`, `w = (0, 1)`.
pub fn rhombus() -> (VelocityMeasure, DiscreteMeasure) {
    let phi = VelocityMeasure::new(
        vec![(pt(&[1.0, 0.0]), pt(&[0.0, 1.0])), (pt(&[-1.0, 0.0]), pt(&[0.0, -1.0]))],
        vec![0.5, 0.5],
    )
    .unwrap();
    let nu = DiscreteMeasure::new(vec![pt(&[0.0, 1.0]), pt(&[0.0, -1.0])], vec![0.5, 0.5]).unwrap();
    (phi, nu)
}

/// `mu_s = 1/2 delta_{u_s} + 1/2 delta_{-u_s}`, `u_s = (cos s, sin s)`.
pub fn rhombus_curve(s: f64) -> wasserflow::Result<DiscreteMeasure> {
    DiscreteMeasure::new(vec![pt(&[s.cos(), s.sin()]), pt(&[-s.cos(), -s.sin()])], vec![0.5, 0.5])
}

/// Points on the circle of radius `r`, equal weights.
pub fn ring(n: usize, r: f64, phase: f64) -> DiscreteMeasure {
    let pts = (0..n)
        .map(|k| {
            let a = phase + std::f64::consts::TAU * k as f64 / n as f64;
            pt(&[r * a.cos(), r * a.sin()])
        })
        .collect();
    DiscreteMeasure::uniform(pts).unwrap()
}

pub mod strategies {
    use proptest::prelude::*;
    use wasserflow::{DiscreteMeasure, VelocityMeasure};

    fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.05f64..1.0, n).prop_map(|raw| {
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|w| w / s).collect()
        })
    }

    /// Coordinates either uniform in `[-2, 2]` or on the lattice `Z / 2`.
    fn coords(len: usize) -> impl Strategy<Value = Vec<f64>> {
        prop_oneof![
            prop::collection::vec(-2.0f64..2.0, len),
            prop::collection::vec((-4i32..=4).prop_map(|k| k as f64 * 0.5), len),
        ]
    }

    pub fn measure_in(d: usize, max_atoms: usize) -> impl Strategy<Value = DiscreteMeasure> {
        (1..=max_atoms)
            .prop_flat_map(move |n| (coords(n * d), weights(n)))
            .prop_map(move |(c, w)| DiscreteMeasure::from_flat(d, c, w).unwrap())
    }

    pub fn velocity_measure_in(d: usize, max_atoms: usize) -> impl Strategy<Value = VelocityMeasure> {
        (1..=max_atoms)
            .prop_flat_map(move |n| (coords(2 * n * d), weights(n)))
            .prop_map(move |(c, w)| VelocityMeasure::from_rows(d, c, w).unwrap())
    }

    pub fn measure_pair(max_atoms: usize) -> impl Strategy<Value = (DiscreteMeasure, DiscreteMeasure)> {
        (1usize..=3).prop_flat_map(move |d| (measure_in(d, max_atoms), measure_in(d, max_atoms)))
    }

    pub fn velocity_pair(max_atoms: usize) -> impl Strategy<Value = (VelocityMeasure, VelocityMeasure)> {
        (1usize..=3).prop_flat_map(move |d| (velocity_measure_in(d, max_atoms), velocity_measure_in(d, max_atoms)))
    }
}
