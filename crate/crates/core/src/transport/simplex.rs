//! Primal network simplex for the balanced transportation problem.
//!
//! A basis is a spanning tree of the bipartite graph rows + columns with
//! `m + n - 1` cells. Entering cells are chosen by the most negative reduced
//! cost; after a run of degenerate pivots the rule switches to Bland's
//! lowest-index rule until progress resumes, which rules out cycling.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Consecutive zero-step pivots tolerated before switching to Bland's rule.
const DEGENERATE_RUN: usize = 32;

#[derive(Debug, Clone)]
pub(crate) struct Basis {
    m: usize,
    n: usize,
    cells: Vec<(usize, usize)>,
    flow: Vec<f64>,
}

impl Basis {
    /// Northwest-corner start. Always produces exactly `m + n - 1` cells
    /// forming a staircase, hence a spanning tree even when degenerate.
    pub(crate) fn northwest(supply: &[f64], demand: &[f64]) -> Basis {
        let (m, n) = (supply.len(), demand.len());
        let mut ra = supply.to_vec();
        let mut rb = demand.to_vec();
        let mut cells = Vec::with_capacity(m + n - 1);
        let mut flow = Vec::with_capacity(m + n - 1);
        let (mut i, mut j) = (0, 0);
        loop {
            let x = if i == m - 1 && j == n - 1 { rb[j].min(ra[i]).max(0.0) } else { ra[i].min(rb[j]).max(0.0) };
            cells.push((i, j));
            flow.push(x);
            ra[i] -= x;
            rb[j] -= x;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if i == m - 1 {
                j += 1;
            } else if j == n - 1 || ra[i] <= rb[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
        Basis { m, n, cells, flow }
    }

    /// Positive-flow cells sorted by `(i, j)`.
    pub(crate) fn entries(&self) -> Vec<(usize, usize, f64)> {
        let mut out: Vec<_> =
            self.cells.iter().zip(&self.flow).filter(|(_, &f)| f > 0.0).map(|(&(i, j), &f)| (i, j, f)).collect();
        out.sort_by_key(|&(i, j, _)| (i, j));
        out
    }

    pub(crate) fn objective(&self, cost: &[f64]) -> f64 {
        self.cells.iter().zip(&self.flow).map(|(&(i, j), f)| f * cost[i * self.n + j]).sum()
    }
}

struct Tree {
    parent: Vec<usize>,
    parent_cell: Vec<usize>,
    depth: Vec<usize>,
    order: Vec<usize>,
}

fn build_tree(b: &Basis) -> Result<Tree> {
    let nodes = b.m + b.n;
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nodes];
    for (k, &(i, j)) in b.cells.iter().enumerate() {
        adj[i].push((b.m + j, k));
        adj[b.m + j].push((i, k));
    }
    let mut parent = vec![usize::MAX; nodes];
    let mut parent_cell = vec![usize::MAX; nodes];
    let mut depth = vec![0; nodes];
    let mut seen = vec![false; nodes];
    let mut order = Vec::with_capacity(nodes);
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(u) = queue.pop_front() {
        order.push(u);
        for &(w, k) in &adj[u] {
            if !seen[w] {
                seen[w] = true;
                parent[w] = u;
                parent_cell[w] = k;
                depth[w] = depth[u] + 1;
                queue.push_back(w);
            }
        }
    }
    if order.len() != nodes {
        return Err(Error::Solver("basis is not a spanning tree".into()));
    }
    Ok(Tree { parent, parent_cell, depth, order })
}

/// Node potentials with `pot[row 0] = 0` and `pot[i] + pot[m + j] = c_ij` on
/// every basic cell.
fn potentials(b: &Basis, t: &Tree, cost: &[f64]) -> Vec<f64> {
    let mut pot = vec![0.0; b.m + b.n];
    for &node in &t.order[1..] {
        let (i, j) = b.cells[t.parent_cell[node]];
        let c = cost[i * b.n + j];
        pot[node] = c - pot[t.parent[node]];
    }
    pot
}

/// Tree path from row `i` to column `j`; the first cell touches row `i`.
fn tree_path(b: &Basis, t: &Tree, i: usize, j: usize) -> Vec<usize> {
    let (mut a, mut c) = (i, b.m + j);
    let mut from_row = Vec::new();
    let mut from_col = Vec::new();
    while t.depth[a] > t.depth[c] {
        from_row.push(t.parent_cell[a]);
        a = t.parent[a];
    }
    while t.depth[c] > t.depth[a] {
        from_col.push(t.parent_cell[c]);
        c = t.parent[c];
    }
    while a != c {
        from_row.push(t.parent_cell[a]);
        a = t.parent[a];
        from_col.push(t.parent_cell[c]);
        c = t.parent[c];
    }
    from_row.extend(from_col.into_iter().rev());
    from_row
}

/// Outcome of [`optimize`]: final potentials (rows then columns).
pub(crate) struct Optimum {
    pub potentials: Vec<f64>,
}

/// Runs the simplex from `basis` on `cost` (row-major `m x n`). Only cells
/// with `allowed[k]` may enter; basic cells must already be allowed.
pub(crate) fn optimize(basis: &mut Basis, cost: &[f64], allowed: Option<&[bool]>) -> Result<Optimum> {
    let (m, n) = (basis.m, basis.n);
    let scale = 1.0 + cost.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
    let eps = 1e-13 * scale;
    let max_iter = 50 * (m * n + m + n) + 1000;
    let mut degenerate = 0usize;

    for _ in 0..max_iter {
        let tree = build_tree(basis)?;
        let pot = potentials(basis, &tree, cost);
        let bland = degenerate >= DEGENERATE_RUN;

        let mut entering = None;
        let mut best = -eps;
        'scan: for i in 0..m {
            for j in 0..n {
                let k = i * n + j;
                if allowed.is_some_and(|a| !a[k]) {
                    continue;
                }
                let r = cost[k] - pot[i] - pot[m + j];
                if r < best {
                    entering = Some((i, j));
                    if bland {
                        break 'scan;
                    }
                    best = r;
                }
            }
        }
        let Some((ei, ej)) = entering else {
            return Ok(Optimum { potentials: pot });
        };

        let path = tree_path(basis, &tree, ei, ej);
        let mut theta = f64::INFINITY;
        let mut leave = usize::MAX;
        for (pos, &k) in path.iter().enumerate() {
            if pos % 2 != 0 {
                continue;
            }
            let f = basis.flow[k];
            let better = f < theta || (f == theta && var_index(basis, k) < var_index(basis, leave));
            if better {
                theta = f;
                leave = k;
            }
        }
        if leave == usize::MAX || !theta.is_finite() {
            return Err(Error::Solver("pivot cycle without a leaving cell".into()));
        }
        for (pos, &k) in path.iter().enumerate() {
            if pos % 2 == 0 {
                basis.flow[k] = (basis.flow[k] - theta).max(0.0);
            } else {
                basis.flow[k] += theta;
            }
        }
        basis.cells[leave] = (ei, ej);
        basis.flow[leave] = theta;
        if theta > 0.0 {
            degenerate = 0;
        } else {
            degenerate += 1;
        }
    }
    Err(Error::Solver(format!("no convergence after {max_iter} pivots")))
}

fn var_index(b: &Basis, k: usize) -> usize {
    if k == usize::MAX {
        return usize::MAX;
    }
    let (i, j) = b.cells[k];
    i * b.n + j
}

/// Cells whose reduced cost under `potentials` is at most `tol`: the support
/// of every optimal plan lies in this set.
pub(crate) fn optimal_face(m: usize, n: usize, cost: &[f64], potentials: &[f64], tol: f64) -> Vec<bool> {
    let mut face = vec![false; m * n];
    for i in 0..m {
        for j in 0..n {
            face[i * n + j] = cost[i * n + j] - potentials[i] - potentials[m + j] <= tol;
        }
    }
    face
}

/// Result of a lexicographic solve: primary and secondary objective values of
/// the final plan, its positive entries, and the primary potentials.
pub(crate) struct LexiSolution {
    pub primary: f64,
    pub secondary: f64,
    pub entries: Vec<(usize, usize, f64)>,
    pub potentials: Vec<f64>,
}

/// Minimizes `primary`, then minimizes `secondary` over the optimal face of
/// the primary problem (face tolerance `face_rel * (1 + max |primary|)`).
pub(crate) fn solve_lexicographic(
    supply: &[f64],
    demand: &[f64],
    primary: &[f64],
    secondary: Option<&[f64]>,
    face_rel: f64,
) -> Result<LexiSolution> {
    let (m, n) = (supply.len(), demand.len());
    let mut basis = Basis::northwest(supply, demand);
    let opt = optimize(&mut basis, primary, None)?;
    if let Some(sec) = secondary {
        let scale = 1.0 + primary.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
        let face = optimal_face(m, n, primary, &opt.potentials, face_rel * scale);
        optimize(&mut basis, sec, Some(&face))?;
    }
    Ok(LexiSolution {
        primary: basis.objective(primary),
        secondary: secondary.map_or(0.0, |s| basis.objective(s)),
        entries: basis.entries(),
        potentials: opt.potentials,
    })
}
