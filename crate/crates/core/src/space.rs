//! Discrete surrogate of a proper geodesic metric measure space.
//!
//! Vertices carry positive masses, edges carry positive lengths and the
//! metric is the exact shortest-path distance. Balls are open: `B_r(x) =
//! {y : d(x, y) < r}`.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::ops::Deref;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod io;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexRecord {
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<f64>>,
    pub measure: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub a: usize,
    pub b: usize,
    pub length: f64,
}

/// Plain-data description of a space, the shape used by both file formats.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceData {
    pub vertices: Vec<VertexRecord>,
    pub edges: Vec<EdgeRecord>,
    pub base_point: usize,
    pub dimension_bound: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub length: f64,
}

#[derive(Clone, Copy, Debug)]
struct Arc {
    to: usize,
    length: f64,
    edge: usize,
}

/// Sorted distances from the base point with cumulative masses.
#[derive(Debug)]
pub struct RadialProfile {
    dist: Vec<f64>,
    cum: Vec<f64>,
}

impl RadialProfile {
    /// `V(o, r)` for the open ball.
    pub fn volume_open(&self, r: f64) -> f64 {
        let k = self.dist.partition_point(|&d| d < r);
        self.cum[k]
    }

    /// Mass of the closed ball `{d <= r}`, the right limit of `volume_open`.
    pub fn volume_closed(&self, r: f64) -> f64 {
        let k = self.dist.partition_point(|&d| d <= r);
        self.cum[k]
    }

    pub fn total(&self) -> f64 {
        *self.cum.last().unwrap()
    }
}

#[derive(Debug)]
pub struct DiscreteSpace {
    coords: Option<Vec<Vec<f64>>>,
    measure: Vec<f64>,
    edges: Vec<Edge>,
    offsets: Vec<usize>,
    arcs: Vec<Arc>,
    base_point: usize,
    dimension_bound: f64,
    base_dist: OnceLock<Vec<f64>>,
    profile: OnceLock<RadialProfile>,
}

impl Clone for DiscreteSpace {
    fn clone(&self) -> Self {
        Self {
            coords: self.coords.clone(),
            measure: self.measure.clone(),
            edges: self.edges.clone(),
            offsets: self.offsets.clone(),
            arcs: self.arcs.clone(),
            base_point: self.base_point,
            dimension_bound: self.dimension_bound,
            base_dist: OnceLock::new(),
            profile: OnceLock::new(),
        }
    }
}

#[derive(PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

impl DiscreteSpace {
    /// Validates and builds a space. Errors name the first offending element.
    pub fn new(data: SpaceData) -> Result<Self> {
        let n = data.vertices.len();
        if n == 0 {
            return Err(Error::EmptySpace);
        }
        let mut measure = Vec::with_capacity(n);
        let mut coords = Vec::with_capacity(n);
        let mut all_coords = true;
        for (i, v) in data.vertices.iter().enumerate() {
            if v.id != i {
                return Err(Error::InvalidVertex(v.id));
            }
            if !(v.measure > 0.0) || !v.measure.is_finite() {
                return Err(Error::NonPositiveMeasure(i));
            }
            measure.push(v.measure);
            match &v.coords {
                Some(c) => coords.push(c.clone()),
                None => all_coords = false,
            }
        }
        let edges: Vec<Edge> = data
            .edges
            .iter()
            .map(|e| Edge { a: e.a, b: e.b, length: e.length })
            .collect();
        Self::from_parts(
            all_coords.then_some(coords),
            measure,
            edges,
            data.base_point,
            data.dimension_bound,
        )
    }

    pub fn from_parts(
        coords: Option<Vec<Vec<f64>>>,
        measure: Vec<f64>,
        edges: Vec<Edge>,
        base_point: usize,
        dimension_bound: f64,
    ) -> Result<Self> {
        let n = measure.len();
        if n == 0 {
            return Err(Error::EmptySpace);
        }
        if let Some(i) = measure.iter().position(|&m| !(m > 0.0) || !m.is_finite()) {
            return Err(Error::NonPositiveMeasure(i));
        }
        if base_point >= n {
            return Err(Error::InvalidVertex(base_point));
        }
        if !(dimension_bound > 1.0) {
            return Err(Error::BadDimensionBound(dimension_bound));
        }
        let mut degree = vec![0usize; n];
        for e in &edges {
            if e.a >= n {
                return Err(Error::InvalidVertex(e.a));
            }
            if e.b >= n {
                return Err(Error::InvalidVertex(e.b));
            }
            if e.a == e.b {
                return Err(Error::SelfLoop(e.a));
            }
            if !(e.length > 0.0) || !e.length.is_finite() {
                return Err(Error::NonPositiveLength(e.a, e.b));
            }
            degree[e.a] += 1;
            degree[e.b] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for v in 0..n {
            offsets[v + 1] = offsets[v] + degree[v];
        }
        let mut fill = offsets.clone();
        let mut arcs = vec![Arc { to: 0, length: 0.0, edge: 0 }; offsets[n]];
        for (k, e) in edges.iter().enumerate() {
            arcs[fill[e.a]] = Arc { to: e.b, length: e.length, edge: k };
            fill[e.a] += 1;
            arcs[fill[e.b]] = Arc { to: e.a, length: e.length, edge: k };
            fill[e.b] += 1;
        }
        for v in 0..n {
            let slice = &mut arcs[offsets[v]..offsets[v + 1]];
            slice.sort_by_key(|a| a.to);
            if let Some(w) = slice.windows(2).find(|w| w[0].to == w[1].to) {
                let (a, b) = (v.min(w[0].to), v.max(w[0].to));
                return Err(Error::DuplicateEdge(a, b));
            }
        }
        let space = Self {
            coords,
            measure,
            edges,
            offsets,
            arcs,
            base_point,
            dimension_bound,
            base_dist: OnceLock::new(),
            profile: OnceLock::new(),
        };
        let reach = space.reachable_from(0);
        if let Some(v) = reach.iter().position(|&r| !r) {
            return Err(Error::Disconnected(v));
        }
        Ok(space)
    }

    fn reachable_from(&self, src: usize) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        let mut queue = VecDeque::from([src]);
        seen[src] = true;
        while let Some(v) = queue.pop_front() {
            for (w, _) in self.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen
    }

    pub fn to_data(&self) -> SpaceData {
        SpaceData {
            vertices: (0..self.len())
                .map(|i| VertexRecord {
                    id: i,
                    coords: self.coords.as_ref().map(|c| c[i].clone()),
                    measure: self.measure[i],
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeRecord { a: e.a, b: e.b, length: e.length })
                .collect(),
            base_point: self.base_point,
            dimension_bound: self.dimension_bound,
        }
    }

    pub fn len(&self) -> usize {
        self.measure.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measure.is_empty()
    }

    pub fn measure(&self) -> &[f64] {
        &self.measure
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn base_point(&self) -> usize {
        self.base_point
    }

    pub fn dimension_bound(&self) -> f64 {
        self.dimension_bound
    }

    pub fn coords(&self, v: usize) -> Option<&[f64]> {
        self.coords.as_ref().map(|c| c[v].as_slice())
    }

    pub fn has_coords(&self) -> bool {
        self.coords.is_some()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// `(neighbor, edge length)` pairs, sorted by neighbor index.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.arcs[self.offsets[v]..self.offsets[v + 1]]
            .iter()
            .map(|a| (a.to, a.length))
    }

    /// Like [`neighbors`](Self::neighbors) with the index into [`edges`](Self::edges).
    pub fn incident(&self, v: usize) -> impl Iterator<Item = (usize, f64, usize)> + '_ {
        self.arcs[self.offsets[v]..self.offsets[v + 1]]
            .iter()
            .map(|a| (a.to, a.length, a.edge))
    }

    pub fn max_incident_length(&self, v: usize) -> f64 {
        self.neighbors(v).map(|(_, l)| l).fold(0.0, f64::max)
    }

    pub fn min_edge_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).fold(f64::INFINITY, f64::min)
    }

    pub fn max_edge_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).fold(0.0, f64::max)
    }

    pub fn total_measure(&self) -> f64 {
        self.measure.iter().sum()
    }

    /// Single-source shortest-path distances.
    pub fn distances_from(&self, src: usize) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.len()];
        dist[src] = 0.0;
        let mut heap = BinaryHeap::from([HeapItem(0.0, src)]);
        while let Some(HeapItem(d, v)) = heap.pop() {
            if d > dist[v] {
                continue;
            }
            for (w, l) in self.neighbors(v) {
                let nd = d + l;
                if nd < dist[w] {
                    dist[w] = nd;
                    heap.push(HeapItem(nd, w));
                }
            }
        }
        dist
    }

    /// Vertices with `d(src, y) < r`, with their distances, in settling order.
    pub fn distances_within(&self, src: usize, r: f64) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        if r <= 0.0 {
            return out;
        }
        let mut best: std::collections::HashMap<usize, f64> = std::collections::HashMap::new();
        best.insert(src, 0.0);
        let mut heap = BinaryHeap::from([HeapItem(0.0, src)]);
        while let Some(HeapItem(d, v)) = heap.pop() {
            if d > best[&v] {
                continue;
            }
            out.push((v, d));
            for (w, l) in self.neighbors(v) {
                let nd = d + l;
                if nd < r && best.get(&w).map_or(true, |&b| nd < b) {
                    best.insert(w, nd);
                    heap.push(HeapItem(nd, w));
                }
            }
        }
        out
    }

    /// Cached distances from the base point.
    pub fn base_distances(&self) -> &[f64] {
        self.base_dist
            .get_or_init(|| self.distances_from(self.base_point))
    }

    pub fn radial_profile(&self) -> &RadialProfile {
        self.profile.get_or_init(|| {
            let d = self.base_distances();
            let mut order: Vec<usize> = (0..self.len()).collect();
            order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
            let mut cum = Vec::with_capacity(order.len() + 1);
            cum.push(0.0);
            let mut acc = 0.0;
            for &v in &order {
                acc += self.measure[v];
                cum.push(acc);
            }
            RadialProfile { dist: order.iter().map(|&v| d[v]).collect(), cum }
        })
    }

    /// Largest distance from the base point.
    pub fn eccentricity(&self) -> f64 {
        self.base_distances().iter().copied().fold(0.0, f64::max)
    }

    /// Open ball and its measure `V(center, r)`.
    pub fn ball(&self, center: usize, r: f64) -> Result<(VertexSubset, f64)> {
        if r < 0.0 || r.is_nan() {
            return Err(Error::NegativeRadius(r));
        }
        if center >= self.len() {
            return Err(Error::InvalidVertex(center));
        }
        if r == 0.0 {
            return Ok((VertexSubset::default(), 0.0));
        }
        let set = VertexSubset::from_unsorted(
            self.distances_within(center, r).into_iter().map(|(v, _)| v).collect(),
        );
        let mass = set.measure(&self.measure);
        Ok((set, mass))
    }

    /// Ball about the base point, answered from the cached distance table.
    pub fn base_ball(&self, r: f64) -> VertexSubset {
        let d = self.base_distances();
        VertexSubset((0..self.len()).filter(|&v| d[v] < r).collect())
    }

    /// `{r <= d(o, v) < r_out}` about the base point.
    pub fn base_annulus(&self, r_in: f64, r_out: f64) -> VertexSubset {
        let d = self.base_distances();
        VertexSubset(
            (0..self.len())
                .filter(|&v| d[v] >= r_in && d[v] < r_out)
                .collect(),
        )
    }

    /// Discrete sphere `S_r(o)`: vertices with `r <= d(o, v) < r + l_max(v)`,
    /// `l_max(v)` the longest edge at `v`.
    pub fn sphere_shell(&self, r: f64) -> VertexSubset {
        let d = self.base_distances();
        VertexSubset(
            (0..self.len())
                .filter(|&v| d[v] >= r && d[v] < r + self.max_incident_length(v))
                .collect(),
        )
    }

    /// Maximal edge-connected classes of the induced subgraph, ordered by
    /// their smallest vertex.
    pub fn connected_components(&self, subset: &VertexSubset) -> Vec<VertexSubset> {
        let mut label = vec![usize::MAX; self.len()];
        const MEMBER: usize = usize::MAX - 1;
        for &v in subset.iter() {
            label[v] = MEMBER;
        }
        let mut out = Vec::new();
        for &start in subset.iter() {
            if label[start] != MEMBER {
                continue;
            }
            let id = out.len();
            let mut comp = vec![start];
            label[start] = id;
            let mut k = 0;
            while k < comp.len() {
                let v = comp[k];
                k += 1;
                for (w, _) in self.neighbors(v) {
                    if label[w] == MEMBER {
                        label[w] = id;
                        comp.push(w);
                    }
                }
            }
            out.push(VertexSubset::from_unsorted(comp));
        }
        out
    }

    pub fn is_connected_subset(&self, subset: &VertexSubset) -> bool {
        self.connected_components(subset).len() <= 1
    }

    /// Max-neighbor difference quotient `g(x) = max_y |u(x) - u(y)| / l_xy`,
    /// the discrete upper-gradient surrogate.
    pub fn local_slope(&self, u: &[f64]) -> ScalarField {
        assert_eq!(u.len(), self.len(), "field length must match vertex count");
        let mut g = vec![0.0; self.len()];
        crate::par::fill(&mut g, |x| {
            self.neighbors(x)
                .map(|(y, l)| (u[x] - u[y]).abs() / l)
                .fold(0.0, f64::max)
        });
        ScalarField(g)
    }

    /// Greedy maximal s-separated subset, scanning vertices in index order.
    pub fn s_lattice(&self, subset: &VertexSubset, s: f64) -> VertexSubset {
        let mut covered = vec![false; self.len()];
        let mut points = Vec::new();
        for &v in subset.iter() {
            if covered[v] {
                continue;
            }
            points.push(v);
            for (w, _) in self.distances_within(v, s) {
                covered[w] = true;
            }
        }
        VertexSubset(points)
    }

    /// Closure-touching test: the sets share a vertex or an edge joins them.
    pub fn touches(&self, a: &VertexSubset, b: &VertexSubset) -> bool {
        if a.is_empty() || b.is_empty() {
            return false;
        }
        let mut mark = vec![false; self.len()];
        for &v in b.iter() {
            mark[v] = true;
        }
        a.iter()
            .any(|&v| mark[v] || self.neighbors(v).any(|(w, _)| mark[w]))
    }

    /// Vertices at the extreme of some coordinate (the frame of a grid).
    /// Falls back to minimum-degree vertices when there are no coordinates.
    pub fn frame_vertices(&self) -> VertexSubset {
        match &self.coords {
            Some(c) => {
                let dim = c[0].len();
                let mut lo = vec![f64::INFINITY; dim];
                let mut hi = vec![f64::NEG_INFINITY; dim];
                for x in c {
                    for k in 0..dim {
                        lo[k] = lo[k].min(x[k]);
                        hi[k] = hi[k].max(x[k]);
                    }
                }
                let tol = 1e-9 * (1.0 + hi.iter().chain(lo.iter()).fold(0.0f64, |a, b| a.max(b.abs())));
                VertexSubset(
                    (0..self.len())
                        .filter(|&v| {
                            (0..dim).any(|k| {
                                (c[v][k] - lo[k]).abs() <= tol || (c[v][k] - hi[k]).abs() <= tol
                            })
                        })
                        .collect(),
                )
            }
            None => {
                let min_deg = (0..self.len()).map(|v| self.degree(v)).min().unwrap_or(0);
                VertexSubset(
                    (0..self.len())
                        .filter(|&v| self.degree(v) == min_deg)
                        .collect(),
                )
            }
        }
    }

    /// Distance from the base point to the frame: the radius up to which
    /// balls about `o` are not cut by the truncation.
    pub fn inner_radius(&self) -> f64 {
        let d = self.base_distances();
        let frame = self.frame_vertices();
        let r = frame.iter().map(|&v| d[v]).fold(f64::INFINITY, f64::min);
        if r.is_finite() && r > 0.0 {
            r
        } else {
            0.5 * self.eccentricity()
        }
    }
}

/// Per-vertex real values (test functions, gradients, heat states).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScalarField(pub Vec<f64>);

impl ScalarField {
    pub fn for_space(space: &DiscreteSpace, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::InvalidParameter(format!(
                "field has {} values, space has {} vertices",
                values.len(),
                space.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("field value at vertex {i} is not finite")));
        }
        Ok(Self(values))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ScalarField {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Sorted set of distinct vertex indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexSubset(Vec<usize>);

impl VertexSubset {
    pub fn from_unsorted(mut v: Vec<usize>) -> Self {
        v.sort_unstable();
        v.dedup();
        Self(v)
    }

    pub fn all(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, usize> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn measure(&self, m: &[f64]) -> f64 {
        self.0.iter().map(|&v| m[v]).sum()
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                Ordering::Less => {
                    out.push(self.0[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.0[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push(self.0[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Self(out)
    }

    pub fn union_all<'a>(sets: impl IntoIterator<Item = &'a VertexSubset>) -> Self {
        let mut v: Vec<usize> = sets.into_iter().flat_map(|s| s.0.iter().copied()).collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        let mut j = 0;
        for &v in &self.0 {
            while j < other.0.len() && other.0[j] < v {
                j += 1;
            }
            if j == other.0.len() || other.0[j] != v {
                return false;
            }
        }
        true
    }

    pub fn intersects(&self, other: &Self) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => return true,
            }
        }
        false
    }

    pub fn difference(&self, other: &Self) -> Self {
        Self(self.0.iter().copied().filter(|&v| !other.contains(v)).collect())
    }
}

impl FromIterator<usize> for VertexSubset {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Self::from_unsorted(iter.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn line(n: usize) -> DiscreteSpace {
        let edges = (0..n - 1).map(|i| Edge { a: i, b: i + 1, length: 1.0 }).collect();
        let coords = (0..n).map(|i| vec![i as f64 - (n / 2) as f64]).collect();
        DiscreteSpace::from_parts(Some(coords), vec![1.0; n], edges, n / 2, 2.0).unwrap()
    }

    fn unit_grid(m: usize) -> DiscreteSpace {
        let idx = |i: usize, j: usize| i * m + j;
        let mut edges = Vec::new();
        let mut coords = Vec::new();
        for i in 0..m {
            for j in 0..m {
                coords.push(vec![i as f64, j as f64]);
                if i + 1 < m {
                    edges.push(Edge { a: idx(i, j), b: idx(i + 1, j), length: 1.0 });
                }
                if j + 1 < m {
                    edges.push(Edge { a: idx(i, j), b: idx(i, j + 1), length: 1.0 });
                }
            }
        }
        DiscreteSpace::from_parts(Some(coords), vec![1.0; m * m], edges, idx(m / 2, m / 2), 2.0)
            .unwrap()
    }

    #[test]
    fn single_vertex_space_is_valid() {
        let s = DiscreteSpace::from_parts(None, vec![2.0], vec![], 0, 2.0).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.edges().len(), 0);
    }

    #[test]
    fn invariant_violations_name_the_offender() {
        let e = DiscreteSpace::from_parts(None, vec![1.0, 1.0, 1.0, 0.0], vec![], 0, 2.0);
        assert!(matches!(e, Err(Error::NonPositiveMeasure(3))));
        let e = DiscreteSpace::from_parts(
            None,
            vec![1.0; 2],
            vec![Edge { a: 0, b: 1, length: 0.0 }],
            0,
            2.0,
        );
        assert!(matches!(e, Err(Error::NonPositiveLength(0, 1))));
        let e = DiscreteSpace::from_parts(
            None,
            vec![1.0; 3],
            vec![Edge { a: 0, b: 1, length: 1.0 }],
            0,
            2.0,
        );
        assert!(matches!(e, Err(Error::Disconnected(2))));
        let e = DiscreteSpace::from_parts(
            None,
            vec![1.0; 2],
            vec![Edge { a: 0, b: 1, length: 1.0 }, Edge { a: 1, b: 0, length: 2.0 }],
            0,
            2.0,
        );
        assert!(matches!(e, Err(Error::DuplicateEdge(0, 1))));
    }

    #[test]
    fn small_ball_is_the_center() {
        let g = unit_grid(5);
        let c = g.base_point();
        let (b, v) = g.ball(c, 1e-9).unwrap();
        assert_eq!(b.as_slice(), &[c]);
        assert_eq!(v, 1.0);
        assert!(matches!(g.ball(c, -1.0), Err(Error::NegativeRadius(_))));
    }

    #[test]
    fn annulus_components() {
        let g = unit_grid(9);
        let ann = g.base_annulus(1.0, 3.0);
        assert_eq!(g.connected_components(&ann).len(), 1);
        let l = line(11);
        let ann = l.base_annulus(1.0, 3.0);
        let comps = l.connected_components(&ann);
        assert_eq!(comps.len(), 2);
        assert!(g.connected_components(&VertexSubset::default()).is_empty());
    }

    #[test]
    fn slope_of_coordinate_is_one_inside() {
        let g = unit_grid(6);
        let u: Vec<f64> = (0..g.len()).map(|v| g.coords(v).unwrap()[0]).collect();
        let s = g.local_slope(&u);
        for v in 0..g.len() {
            assert!((s[v] - 1.0).abs() < 1e-15);
        }
        let s = g.local_slope(&vec![3.0; g.len()]);
        assert!(s.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn slope_dominates_random_path_increments() {
        let g = unit_grid(8);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s = g.local_slope(&u);
        for _ in 0..100 {
            let mut v = rng.random_range(0..g.len());
            let start = v;
            let mut bound = 0.0;
            for _ in 0..rng.random_range(1..20) {
                let nb: Vec<(usize, f64)> = g.neighbors(v).collect();
                let (w, l) = nb[rng.random_range(0..nb.len())];
                bound += 0.5 * (s[v] + s[w]) * l;
                v = w;
            }
            assert!((u[v] - u[start]).abs() <= bound + 1e-12);
        }
    }

    #[test]
    fn lattice_on_line_is_separated_and_maximal() {
        let l = line(5);
        let all = VertexSubset::all(5);
        let lat = l.s_lattice(&all, 1.0);
        // every vertex is its own point for s = 1
        assert_eq!(lat.len(), 5);
        let lat = l.s_lattice(&all, 10.0);
        assert_eq!(lat.len(), 1);
        assert!(l.s_lattice(&VertexSubset::default(), 1.0).is_empty());
    }

    #[test]
    fn lattice_matches_exhaustive_check() {
        let l = line(5);
        let all = VertexSubset::all(5);
        for s in [1.0, 1.5, 2.0, 2.5, 3.0] {
            let lat = l.s_lattice(&all, s);
            let dist: Vec<Vec<f64>> = (0..5).map(|v| l.distances_from(v)).collect();
            let separated = |set: &[usize]| {
                set.iter()
                    .all(|&a| set.iter().all(|&b| a == b || dist[a][b] >= s))
            };
            assert!(separated(lat.as_slice()));
            // maximal: no vertex can be added while staying separated
            for v in 0..5 {
                if lat.contains(v) {
                    continue;
                }
                let mut ext = lat.as_slice().to_vec();
                ext.push(v);
                assert!(!separated(&ext), "s = {s}: vertex {v} could be added");
            }
        }
    }

    #[test]
    fn profile_matches_ball_measure() {
        let g = unit_grid(9);
        for r in [0.5, 1.0, 1.5, 2.5, 4.0] {
            let (_, v) = g.ball(g.base_point(), r).unwrap();
            assert_eq!(g.radial_profile().volume_open(r), v);
        }
    }

    #[test]
    fn subset_ops() {
        let a = VertexSubset::from_unsorted(vec![5, 1, 3, 3]);
        let b = VertexSubset::from_unsorted(vec![2, 3]);
        assert_eq!(a.as_slice(), &[1, 3, 5]);
        assert_eq!(a.union(&b).as_slice(), &[1, 2, 3, 5]);
        assert!(a.intersects(&b));
        assert!(VertexSubset::from_unsorted(vec![1, 5]).is_subset_of(&a));
        assert!(!b.is_subset_of(&a));
    }
}
