//! The canonical weighted graph of a covering: one vertex per piece, edges
//! between touching pieces, `ν(i) = m2(U_i)` and `ν(i,j) = max(ν(i), ν(j))`.
//! Discrete Poincaré and Poincaré-Neumann constants and the isoperimetric
//! ratio live here.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::covering::{touching_pairs, GoodCovering};
use crate::error::{Error, Result};
use crate::par;
use crate::space::DiscreteSpace;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringGraph {
    pub vertex_weights: Vec<f64>,
    pub edges: Vec<(usize, usize)>,
    pub edge_weights: Vec<f64>,
    pub boundary: Vec<usize>,
    /// Level of each vertex (the piece level for canonical graphs).
    pub levels: Vec<usize>,
}

impl CoveringGraph {
    /// Graph with `ν(i,j) = max(ν(i), ν(j))`; edges are stored with `i < j`.
    pub fn new(vertex_weights: Vec<f64>, edges: &[(usize, usize)], boundary: Vec<usize>) -> Result<Self> {
        let n = vertex_weights.len();
        if let Some(i) = vertex_weights.iter().position(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::NonPositiveMeasure(i));
        }
        let mut list = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidVertex(a.max(b)));
            }
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            list.push((a.min(b), a.max(b)));
        }
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateEdge(w[0].0, w[0].1));
        }
        if let Some(&b) = boundary.iter().find(|&&b| b >= n) {
            return Err(Error::InvalidVertex(b));
        }
        let edge_weights = list
            .iter()
            .map(|&(a, b)| vertex_weights[a].max(vertex_weights[b]))
            .collect();
        let mut boundary = boundary;
        boundary.sort_unstable();
        boundary.dedup();
        Ok(Self { levels: (0..n).collect(), vertex_weights, edges: list, edge_weights, boundary })
    }

    pub fn len(&self) -> usize {
        self.vertex_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertex_weights.is_empty()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.len()];
        for &(a, b) in &self.edges {
            d[a] += 1;
            d[b] += 1;
        }
        d
    }

    pub fn free_vertices(&self) -> Vec<usize> {
        (0..self.len()).filter(|v| self.boundary.binary_search(v).is_err()).collect()
    }

    fn neighbors(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.len()];
        for (&(a, b), &w) in self.edges.iter().zip(&self.edge_weights) {
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        if self.is_empty() {
            return true;
        }
        let adj = self.neighbors();
        let mut seen = vec![false; self.len()];
        let mut q = VecDeque::from([0]);
        seen[0] = true;
        while let Some(v) = q.pop_front() {
            for &(w, _) in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    q.push_back(w);
                }
            }
        }
        seen.iter().all(|&s| s)
    }

    /// `(Σ|f|^q ν)^{1/q} / (Σ_E |f(i)-f(j)|^q ν(i,j))^{1/q}`.
    pub fn dirichlet_ratio(&self, f: &[f64], q: f64) -> f64 {
        let num: f64 = f.iter().zip(&self.vertex_weights).map(|(x, w)| x.abs().powf(q) * w).sum();
        (num / self.edge_energy(f, q)).powf(1.0 / q)
    }

    /// Same ratio with the ν-weighted mean subtracted on the left.
    pub fn neumann_ratio(&self, f: &[f64], q: f64) -> f64 {
        let mean = self.weighted_mean(f);
        let num: f64 = f
            .iter()
            .zip(&self.vertex_weights)
            .map(|(x, w)| (x - mean).abs().powf(q) * w)
            .sum();
        (num / self.edge_energy(f, q)).powf(1.0 / q)
    }

    pub fn weighted_mean(&self, f: &[f64]) -> f64 {
        let total: f64 = self.vertex_weights.iter().sum();
        f.iter().zip(&self.vertex_weights).map(|(x, w)| x * w).sum::<f64>() / total
    }

    pub fn edge_energy(&self, f: &[f64], q: f64) -> f64 {
        self.edges
            .iter()
            .zip(&self.edge_weights)
            .map(|(&(a, b), w)| (f[a] - f[b]).abs().powf(q) * w)
            .sum()
    }
}

/// Canonical graph of a covering with `ν(i) = m2(U_i)`; the boundary is the
/// outermost level.
pub fn canonical_graph(space: &DiscreteSpace, cov: &GoodCovering, m2: &[f64]) -> Result<CoveringGraph> {
    let us = cov.u_sets();
    let weights: Vec<f64> = us.iter().map(|u| u.measure(m2)).collect();
    let pairs = touching_pairs(space, &us);
    let mut g = CoveringGraph::new(weights, &pairs, cov.boundary_pieces())?;
    g.levels = cov.pieces.iter().map(|p| p.level).collect();
    Ok(g)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoincareMethod {
    Eigen,
    RatioMaximization,
    BruteForce,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoincareResult {
    #[serde(rename = "S_d")]
    pub s_d: f64,
    pub q: f64,
    pub method: PoincareMethod,
    /// Full-length vertex function achieving `s_d`.
    pub witness: Vec<f64>,
    /// True when `s_d` is only a lower bound on the best constant.
    pub lower_bound: bool,
}

/// Energy matrix `K` restricted to `free` (edges to fixed vertices
/// contribute to the diagonal) and the diagonal `ν` over `free`.
fn reduced_matrices(g: &CoveringGraph, free: &[usize]) -> (DMatrix<f64>, Vec<f64>) {
    let mut pos = vec![usize::MAX; g.len()];
    for (k, &v) in free.iter().enumerate() {
        pos[v] = k;
    }
    let n = free.len();
    let mut k = DMatrix::zeros(n, n);
    for (&(a, b), &w) in g.edges.iter().zip(&g.edge_weights) {
        let (pa, pb) = (pos[a], pos[b]);
        if pa != usize::MAX {
            k[(pa, pa)] += w;
        }
        if pb != usize::MAX {
            k[(pb, pb)] += w;
        }
        if pa != usize::MAX && pb != usize::MAX {
            k[(pa, pb)] -= w;
            k[(pb, pa)] -= w;
        }
    }
    let d = free.iter().map(|&v| g.vertex_weights[v]).collect();
    (k, d)
}

/// Sorted eigenpairs of `D^{-1/2} K D^{-1/2}` mapped back to `K x = λ D x`.
fn generalized_eigen(k: &DMatrix<f64>, d: &[f64]) -> Vec<(f64, DVector<f64>)> {
    let n = d.len();
    let s: Vec<f64> = d.iter().map(|x| 1.0 / x.sqrt()).collect();
    let m = DMatrix::from_fn(n, n, |i, j| k[(i, j)] * s[i] * s[j]);
    let eig = SymmetricEigen::new(m);
    let mut pairs: Vec<(f64, DVector<f64>)> = (0..n)
        .map(|c| {
            let v = eig.eigenvectors.column(c);
            let x = DVector::from_fn(n, |i, _| v[i] * s[i]);
            (eig.eigenvalues[c], x)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

/// Normalizes the sign so the entry of largest magnitude is positive.
fn fix_sign(f: &mut [f64]) {
    let k = (0..f.len())
        .max_by(|&a, &b| f[a].abs().total_cmp(&f[b].abs()).then(b.cmp(&a)))
        .unwrap_or(0);
    if f.get(k).is_some_and(|&x| x < 0.0) {
        f.iter_mut().for_each(|x| *x = -*x);
    }
}

const DENSE_LIMIT: usize = 1500;

/// Best constant of `(Σ|f|^q ν)^{1/q} <= S_d (Σ_E |Δf|^q ν)^{1/q}` over `f`
/// vanishing on the boundary. Exact for `q = 2` (eigen) and for `q = 1`
/// with at most 12 free vertices (subset enumeration); otherwise a lower
/// bound from ratio maximization.
pub fn poincare_constant(g: &CoveringGraph, q: f64) -> Result<PoincareResult> {
    poincare_constant_seeded(g, q, 0)
}

pub fn poincare_constant_seeded(g: &CoveringGraph, q: f64, seed: u64) -> Result<PoincareResult> {
    if g.boundary.is_empty() {
        return Err(Error::NoBoundary);
    }
    if !(q >= 1.0) {
        return Err(Error::InvalidParameter(format!("q must be at least 1, got {q}")));
    }
    let free = g.free_vertices();
    if let Some(v) = unlinked_vertex(g) {
        return Err(Error::UnboundedPoincare(v));
    }
    if free.is_empty() {
        return Ok(PoincareResult { s_d: 0.0, q, method: PoincareMethod::Eigen, witness: vec![0.0; g.len()], lower_bound: false });
    }
    let embed = |x: &[f64]| {
        let mut f = vec![0.0; g.len()];
        for (k, &v) in free.iter().enumerate() {
            f[v] = x[k];
        }
        fix_sign(&mut f);
        f
    };
    if q == 2.0 {
        let (k, d) = reduced_matrices(g, &free);
        let (lambda, x) = if free.len() <= DENSE_LIMIT {
            generalized_eigen(&k, &d).swap_remove(0)
        } else {
            inverse_iteration(&k, &d)?
        };
        let witness = embed(x.as_slice());
        return Ok(PoincareResult { s_d: lambda.powf(-0.5), q, method: PoincareMethod::Eigen, witness, lower_bound: false });
    }
    if q == 1.0 && free.len() <= 12 {
        let mut best = (0.0, Vec::new());
        for mask in 1u32..(1 << free.len()) {
            let x: Vec<f64> = (0..free.len()).map(|k| f64::from((mask >> k) & 1)).collect();
            let f = embed(&x);
            let r = g.dirichlet_ratio(&f, 1.0);
            if r > best.0 {
                best = (r, f);
            }
        }
        return Ok(PoincareResult { s_d: best.0, q, method: PoincareMethod::BruteForce, witness: best.1, lower_bound: false });
    }
    let starts = ascent_starts(g, &free, seed);
    let exhaustive = free.len() <= 12;
    let (ratio, f) = maximize_ratio(g, &free, q, starts, |f| g.dirichlet_ratio(f, q));
    Ok(PoincareResult {
        s_d: ratio,
        q,
        method: if exhaustive { PoincareMethod::BruteForce } else { PoincareMethod::RatioMaximization },
        witness: f,
        lower_bound: true,
    })
}

/// A free vertex whose component contains no boundary vertex.
fn unlinked_vertex(g: &CoveringGraph) -> Option<usize> {
    let adj = g.neighbors();
    let mut seen = vec![false; g.len()];
    let mut q: VecDeque<usize> = g.boundary.iter().copied().collect();
    for &b in &g.boundary {
        seen[b] = true;
    }
    while let Some(v) = q.pop_front() {
        for &(w, _) in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                q.push_back(w);
            }
        }
    }
    seen.iter().position(|&s| !s)
}

/// Smallest generalized eigenpair by inverse iteration; each solve uses
/// conjugate gradients on the positive definite reduced energy matrix.
fn inverse_iteration(k: &DMatrix<f64>, d: &[f64]) -> Result<(f64, DVector<f64>)> {
    let n = d.len();
    let mut x = DVector::from_element(n, 1.0);
    let dnorm = |x: &DVector<f64>| (x.iter().zip(d).map(|(a, w)| a * a * w).sum::<f64>()).sqrt();
    let nx = dnorm(&x);
    x /= nx;
    let mut lambda = f64::INFINITY;
    for _ in 0..500 {
        let rhs = DVector::from_fn(n, |i, _| x[i] * d[i]);
        let y = dense_cg(k, &rhs)?;
        let ny = dnorm(&y);
        let next = y / ny;
        let kx = k * &next;
        let rq = next.dot(&kx);
        let done = (lambda - rq).abs() <= 1e-14 * rq;
        lambda = rq;
        x = next;
        if done {
            break;
        }
    }
    Ok((lambda, x))
}

fn dense_cg(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let n = b.len();
    let mut x = DVector::zeros(n);
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = r.dot(&r);
    let target = 1e-28 * rr;
    for _ in 0..10 * n.max(10) {
        if rr <= target {
            return Ok(x);
        }
        let ap = a * &p;
        let alpha = rr / p.dot(&ap);
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        let rr_new = r.dot(&r);
        p = &r + (rr_new / rr) * &p;
        rr = rr_new;
    }
    Err(Error::NonConvergedSolve { iterations: 10 * n.max(10), residual: rr.sqrt() })
}

/// Starting vectors over the free vertices: all sign patterns when there are
/// at most 12, otherwise seeded random vectors plus level-set indicators of
/// the `q = 2` witness.
fn ascent_starts(g: &CoveringGraph, free: &[usize], seed: u64) -> Vec<Vec<f64>> {
    let n = free.len();
    let mut starts = Vec::new();
    if n <= 12 {
        for mask in 1u32..(1 << n) {
            starts.push((0..n).map(|k| if (mask >> k) & 1 == 1 { 1.0 } else { 0.5 }).collect());
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..32 {
            starts.push((0..n).map(|_| rng.random_range(0.0..1.0)).collect());
        }
        let (k, d) = reduced_matrices(g, free);
        if let Ok((_, x)) = if n <= DENSE_LIMIT { Ok(generalized_eigen(&k, &d).swap_remove(0)) } else { inverse_iteration(&k, &d) } {
            let mut sorted: Vec<f64> = x.iter().map(|v| v.abs()).collect();
            sorted.sort_by(|a, b| a.total_cmp(b));
            starts.push(x.iter().map(|v| v.abs()).collect());
            for t in sorted.iter().step_by((n / 16).max(1)) {
                starts.push(x.iter().map(|v| f64::from(v.abs() >= *t)).collect());
            }
        }
    }
    starts
}

/// Projected gradient ascent of `log(num) - log(den)` from each start with a
/// backtracking step. Returns the best ratio and its full-length witness.
fn maximize_ratio(
    g: &CoveringGraph,
    free: &[usize],
    q: f64,
    starts: Vec<Vec<f64>>,
    ratio: impl Fn(&[f64]) -> f64 + Sync,
) -> (f64, Vec<f64>) {
    let adj = g.neighbors();
    let embed = |x: &[f64]| {
        let mut f = vec![0.0; g.len()];
        for (k, &v) in free.iter().enumerate() {
            f[v] = x[k];
        }
        f
    };
    let sgnpow = |x: f64| x.signum() * x.abs().powf(q - 1.0);
    let results = par::map(&starts, |x0| {
        let mut f = embed(x0);
        let mut val = ratio(&f);
        let mut step = 0.1;
        for _ in 0..400 {
            let num: f64 = (0..g.len()).map(|v| f[v].abs().powf(q) * g.vertex_weights[v]).sum();
            let den = g.edge_energy(&f, q);
            let mut grad = vec![0.0; g.len()];
            for &v in free {
                let dn = g.vertex_weights[v] * sgnpow(f[v]) / num;
                let dd: f64 = adj[v].iter().map(|&(w, ew)| ew * sgnpow(f[v] - f[w])).sum::<f64>() / den;
                grad[v] = dn - dd;
            }
            let scale = f.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-300);
            let gmax = grad.iter().map(|x| x.abs()).fold(0.0, f64::max);
            if gmax == 0.0 {
                break;
            }
            let mut improved = false;
            while step > 1e-12 {
                let trial: Vec<f64> = f.iter().zip(&grad).map(|(x, d)| x + step * scale * d / gmax).collect();
                let tv = ratio(&trial);
                if tv > val {
                    f = trial;
                    val = tv;
                    step *= 1.5;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        fix_sign(&mut f);
        (val, f)
    });
    results
        .into_iter()
        .filter(|r| r.0.is_finite())
        .fold((0.0, vec![0.0; g.len()]), |best, r| {
            let better = r.0 > best.0
                || (r.0 == best.0 && r.1.iter().zip(&best.1).find(|(a, b)| a != b).is_some_and(|(a, b)| a < b));
            if better {
                r
            } else {
                best
            }
        })
}

/// Best constant of the Poincaré-Neumann inequality, where the ν-weighted
/// mean is subtracted on the left and there is no boundary condition.
pub fn poincare_neumann_gap(g: &CoveringGraph, q: f64) -> Result<PoincareResult> {
    if !(q >= 1.0) {
        return Err(Error::InvalidParameter(format!("q must be at least 1, got {q}")));
    }
    if !g.is_connected() {
        return Err(Error::GraphDisconnected);
    }
    let all: Vec<usize> = (0..g.len()).collect();
    if g.len() < 2 {
        return Ok(PoincareResult { s_d: 0.0, q, method: PoincareMethod::Eigen, witness: vec![0.0; g.len()], lower_bound: false });
    }
    let (k, d) = reduced_matrices(g, &all);
    let pairs = generalized_eigen(&k, &d);
    if q == 2.0 {
        let (lambda, x) = &pairs[1];
        let mut f: Vec<f64> = x.iter().copied().collect();
        fix_sign(&mut f);
        return Ok(PoincareResult { s_d: lambda.powf(-0.5), q, method: PoincareMethod::Eigen, witness: f, lower_bound: false });
    }
    let n = g.len();
    let mut starts = Vec::new();
    if n <= 12 {
        for mask in 1u32..(1 << n) - 1 {
            starts.push((0..n).map(|k| f64::from((mask >> k) & 1)).collect());
        }
    }
    starts.push(pairs[1].1.iter().copied().collect());
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..16 {
        starts.push((0..n).map(|_| rng.random_range(-1.0..1.0)).collect());
    }
    let (ratio, f) = maximize_ratio(g, &all, q, starts, |f| g.neumann_ratio(f, q));
    Ok(PoincareResult {
        s_d: ratio,
        q,
        method: if n <= 12 { PoincareMethod::BruteForce } else { PoincareMethod::RatioMaximization },
        witness: f,
        lower_bound: true,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SetFamily {
    LevelPrefixes,
    AllSubsets,
    RandomSample { count: usize, seed: u64 },
    Explicit(Vec<Vec<usize>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsoperimetricResult {
    #[serde(rename = "I")]
    pub constant: f64,
    pub argmax: Vec<usize>,
    pub sets_tested: usize,
}

/// `max ν(Ω)/ν(∂Ω)` over the family, `∂Ω` the edges leaving `Ω`.
pub fn isoperimetric_constant(g: &CoveringGraph, family: &SetFamily) -> Result<IsoperimetricResult> {
    let n = g.len();
    let sets: Vec<Vec<usize>> = match family {
        SetFamily::LevelPrefixes => {
            let top = g.levels.iter().copied().max().unwrap_or(0);
            (0..top)
                .map(|k| (0..n).filter(|&v| g.levels[v] <= k).collect())
                .collect()
        }
        SetFamily::AllSubsets => {
            if n > 20 {
                return Err(Error::InvalidParameter(format!("all_subsets needs at most 20 vertices, got {n}")));
            }
            (1u32..(1 << n) - 1)
                .map(|mask| (0..n).filter(|&k| (mask >> k) & 1 == 1).collect())
                .collect()
        }
        SetFamily::RandomSample { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            (0..*count)
                .map(|_| (0..n).filter(|_| rng.random_bool(0.5)).collect::<Vec<usize>>())
                .filter(|s| !s.is_empty() && s.len() < n)
                .collect()
        }
        SetFamily::Explicit(s) => s.clone(),
    };
    if sets.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for s in &sets {
        let r = isoperimetric_ratio(g, s);
        if r > best.0 {
            best = (r, s.clone());
        }
    }
    Ok(IsoperimetricResult { constant: best.0, argmax: best.1, sets_tested: sets.len() })
}

pub fn isoperimetric_ratio(g: &CoveringGraph, omega: &[usize]) -> f64 {
    let mut inside = vec![false; g.len()];
    for &v in omega {
        inside[v] = true;
    }
    let vol: f64 = omega.iter().map(|&v| g.vertex_weights[v]).sum();
    let cut: f64 = g
        .edges
        .iter()
        .zip(&g.edge_weights)
        .filter(|(&(a, b), _)| inside[a] != inside[b])
        .map(|(_, w)| w)
        .sum();
    vol / cut
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub h: f64,
    pub degree_bound: f64,
    pub max_degree: usize,
    pub weight_ratio_bound: f64,
    pub max_adjacent_ratio: f64,
    pub degree_ok: bool,
    pub ratio_ok: bool,
}

/// Degree bound `2h`, `h = (8κ/(κ-1))^N`, and the adjacent weight ratio bound
/// `C_D (8κ²/(κ-1))^{log₂ C_D}`.
pub fn structure_checks(g: &CoveringGraph, kappa: f64, n: f64, c_d: f64) -> StructureReport {
    let h = GoodCovering::component_bound(kappa, n);
    let max_degree = g.degrees().into_iter().max().unwrap_or(0);
    let c = c_d * (8.0 * kappa * kappa / (kappa - 1.0)).powf(c_d.log2());
    let max_adjacent_ratio = g
        .edges
        .iter()
        .map(|&(a, b)| {
            let r = g.vertex_weights[a] / g.vertex_weights[b];
            r.max(1.0 / r)
        })
        .fold(1.0, f64::max);
    StructureReport {
        h,
        degree_bound: 2.0 * h,
        max_degree,
        weight_ratio_bound: c,
        max_adjacent_ratio,
        degree_ok: max_degree as f64 <= 2.0 * h,
        ratio_ok: max_adjacent_ratio <= c,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(weights: Vec<f64>, boundary: Vec<usize>) -> CoveringGraph {
        let n = weights.len();
        let edges: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
        CoveringGraph::new(weights, &edges, boundary).unwrap()
    }

    #[test]
    fn edge_weight_is_max() {
        let g = path(vec![3.0, 5.0], vec![]);
        assert_eq!(g.edge_weights, vec![5.0]);
        let g = CoveringGraph::new(vec![1.0, 1.0], &[], vec![]).unwrap();
        assert!(g.edges.is_empty());
    }

    #[test]
    fn three_vertex_dirichlet_path() {
        let g = path(vec![1.0; 3], vec![2]);
        let r = poincare_constant(&g, 2.0).unwrap();
        let golden = ((3.0 - 5f64.sqrt()) / 2.0).powf(-0.5);
        assert!((r.s_d - golden).abs() < 1e-12);
        assert!((g.dirichlet_ratio(&r.witness, 2.0) - r.s_d).abs() < 1e-9);
    }

    #[test]
    fn missing_boundary() {
        let g = path(vec![1.0; 3], vec![]);
        assert!(matches!(poincare_constant(&g, 2.0), Err(Error::NoBoundary)));
        let g = CoveringGraph::new(vec![1.0; 3], &[(0, 1)], vec![0]).unwrap();
        assert!(matches!(poincare_constant(&g, 2.0), Err(Error::UnboundedPoincare(2))));
    }

    #[test]
    fn two_vertex_neumann() {
        let g = path(vec![1.0, 1.0], vec![]);
        let r = poincare_neumann_gap(&g, 2.0).unwrap();
        assert!((r.s_d - 0.5f64.sqrt()).abs() < 1e-14);
        let d = CoveringGraph::new(vec![1.0; 3], &[(0, 1)], vec![]).unwrap();
        assert!(matches!(poincare_neumann_gap(&d, 2.0), Err(Error::GraphDisconnected)));
    }

    #[test]
    fn q_one_brute_force_is_the_isoperimetric_constant() {
        let g = path(vec![1.0, 2.0, 4.0, 8.0], vec![3]);
        let r = poincare_constant(&g, 1.0).unwrap();
        assert_eq!(r.method, PoincareMethod::BruteForce);
        let iso = isoperimetric_constant(&g, &SetFamily::Explicit(vec![vec![0], vec![1], vec![0, 1], vec![0, 1, 2], vec![2]])).unwrap();
        assert!(iso.constant <= r.s_d + 1e-15);
        assert!((g.dirichlet_ratio(&r.witness, 1.0) - r.s_d).abs() < 1e-12);
    }

    #[test]
    fn ascent_is_a_lower_bound_that_matches_q2() {
        let g = path(vec![1.0, 3.0, 2.0, 5.0, 1.0], vec![4]);
        let exact = poincare_constant(&g, 2.0).unwrap().s_d;
        // the ascent routine run at q = 2 recovers the eigenvalue answer
        let free = g.free_vertices();
        let starts = ascent_starts(&g, &free, 0);
        let (r, _) = maximize_ratio(&g, &free, 2.0, starts, |f| g.dirichlet_ratio(f, 2.0));
        assert!(r <= exact * (1.0 + 1e-12));
        assert!(r >= exact * (1.0 - 1e-6));
    }

    #[test]
    fn isoperimetric_examples() {
        let g = path(vec![1.0, 1.0], vec![]);
        assert_eq!(isoperimetric_ratio(&g, &[0]), 1.0);
        let w: Vec<f64> = (0..8).map(|i| 2f64.powi(i)).collect();
        let g = path(w, vec![7]);
        let iso = isoperimetric_constant(&g, &SetFamily::LevelPrefixes).unwrap();
        assert!(iso.constant < 1.0);
        assert_eq!(iso.constant, 127.0 / 128.0);
        assert!(matches!(isoperimetric_constant(&g, &SetFamily::Explicit(vec![])), Err(Error::EmptyFamily)));
    }

    #[test]
    fn structure_bounds() {
        let g = path(vec![1.0, 4.0, 16.0], vec![2]);
        let s = structure_checks(&g, 2.0, 4.0, 16.0);
        assert_eq!(s.h, 65536.0);
        assert_eq!(s.degree_bound, 131072.0);
        assert_eq!(s.max_degree, 2);
        assert_eq!(s.max_adjacent_ratio, 4.0);
    }
}
