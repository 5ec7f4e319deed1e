//! Annular good coverings about the base point, their validation, and
//! ball coverings built from an s-lattice.
//!
//! Two vertex sets touch when they share a vertex or an edge joins them;
//! this plays the role of closures meeting.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::space::{DiscreteSpace, VertexSubset};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringPiece {
    pub level: usize,
    pub index: usize,
    pub u: VertexSubset,
    pub u_star: VertexSubset,
    pub u_sharp: VertexSubset,
    /// Raw outer components `(level, index)` merged into this piece.
    pub glued_from: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlueEvent {
    pub from: (usize, usize),
    pub into: (usize, usize),
    /// Number of touching lower components; more than one is ambiguous.
    pub candidates: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoodCovering {
    pub pieces: Vec<CoveringPiece>,
    pub kappa: Option<f64>,
    pub kappa0: Option<f64>,
    #[serde(rename = "Q1")]
    pub q1: usize,
    #[serde(rename = "Q2")]
    pub q2: f64,
    /// `[m1(E), m2(E)]` for the uncovered part `E` of the target.
    pub exceptional_set_measure: [f64; 2],
    /// Outer radii `R_0 < ... < R_L` of the annuli.
    pub radii: Vec<f64>,
    pub target: VertexSubset,
    pub gluing: Vec<GlueEvent>,
    pub max_components_per_annulus: usize,
    /// Pieces at this level form the Dirichlet boundary of the canonical graph.
    pub boundary_level: Option<usize>,
}

impl GoodCovering {
    pub fn u_sets(&self) -> Vec<VertexSubset> {
        self.pieces.iter().map(|p| p.u.clone()).collect()
    }

    pub fn boundary_pieces(&self) -> Vec<usize> {
        match self.boundary_level {
            Some(l) => (0..self.pieces.len()).filter(|&k| self.pieces[k].level == l).collect(),
            None => Vec::new(),
        }
    }

    /// Component-count bound `h = (8κ/(κ-1))^N`.
    pub fn component_bound(kappa: f64, n: f64) -> f64 {
        (8.0 * kappa / (kappa - 1.0)).powf(n)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringOptions {
    /// Outer radius of the covered ball; defaults to the distance from `o`
    /// to the frame of the truncated space.
    pub cover_radius: Option<f64>,
    /// Innermost radius scale; defaults to ten times the shortest edge.
    pub threshold_a: Option<f64>,
    pub min_levels: usize,
}

impl Default for CoveringOptions {
    fn default() -> Self {
        Self { cover_radius: None, threshold_a: None, min_levels: 4 }
    }
}

/// Radii `R_i = r0 κ^i`, `i = 0..=L`, with `R_L = cover_radius` and `r0 <= A`.
pub fn level_radii(cover_radius: f64, threshold_a: f64, kappa: f64) -> Vec<f64> {
    let l = ((cover_radius / threshold_a).ln() / kappa.ln()).ceil().max(0.0) as i32;
    let r0 = cover_radius / kappa.powi(l);
    (0..=l).map(|i| if i == l { cover_radius } else { r0 * kappa.powi(i) }).collect()
}

fn resolve_radii(space: &DiscreteSpace, kappa: f64, opts: &CoveringOptions) -> Result<Vec<f64>> {
    if !(kappa > 1.0) || !kappa.is_finite() {
        return Err(Error::InvalidParameter(format!("kappa must exceed 1, got {kappa}")));
    }
    let cover = opts.cover_radius.unwrap_or_else(|| space.inner_radius());
    let a = opts.threshold_a.unwrap_or(10.0 * space.min_edge_length());
    if !(cover > 0.0) || !(a > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "cover radius {cover} and threshold {a} must be positive"
        )));
    }
    let radii = level_radii(cover, a, kappa);
    if radii.len() < opts.min_levels {
        return Err(Error::TooFewLevels { needed: opts.min_levels, got: radii.len() });
    }
    Ok(radii)
}

/// Raw annulus components per level: `A_0 = B_{R_0}`, `A_i = B_{R_i} \ B_{R_{i-1}}`.
fn annulus_components(space: &DiscreteSpace, radii: &[f64]) -> Vec<Vec<VertexSubset>> {
    par::map_range(radii.len(), |i| {
        let inner = if i == 0 { f64::NEG_INFINITY } else { radii[i - 1] };
        space.connected_components(&space.base_annulus(inner, radii[i]))
    })
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }
}

pub fn build_good_covering(
    space: &DiscreteSpace,
    kappa: f64,
    weighted: &crate::growth::WeightedMeasure,
) -> Result<GoodCovering> {
    build_good_covering_with(space, kappa, &weighted.mu, &CoveringOptions::default())
}

/// Builds the annular covering. `m2` is the measure of the left-hand side
/// (the weighted measure `μ`); `m1 = m` is taken from the space.
pub fn build_good_covering_with(
    space: &DiscreteSpace,
    kappa: f64,
    m2: &[f64],
    opts: &CoveringOptions,
) -> Result<GoodCovering> {
    let m = space.measure();
    let radii = resolve_radii(space, kappa, opts)?;
    let levels = radii.len();
    let comps = annulus_components(space, &radii);
    let max_components_per_annulus = comps.iter().map(|c| c.len()).max().unwrap_or(0);

    // flat ids and a vertex -> component map
    let mut offset = vec![0usize; levels + 1];
    for i in 0..levels {
        offset[i + 1] = offset[i] + comps[i].len();
    }
    let mut owner = vec![usize::MAX; space.len()];
    for i in 0..levels {
        for (a, c) in comps[i].iter().enumerate() {
            for &v in c.iter() {
                owner[v] = offset[i] + a;
            }
        }
    }
    let d = space.base_distances();
    let mut uf = UnionFind((0..offset[levels]).collect());
    let mut gluing = Vec::new();
    for i in 1..levels {
        for (a, c) in comps[i].iter().enumerate() {
            // the closure meets the shell S_{R_i} iff some neighbor lies at d >= R_i
            let reaches_out = c
                .iter()
                .any(|&v| space.neighbors(v).any(|(w, _)| d[w] >= radii[i]));
            let outer_shell_empty = i + 1 == levels && space.sphere_shell(radii[i]).is_empty();
            if reaches_out || outer_shell_empty {
                continue;
            }
            let mut lower: Vec<usize> = c
                .iter()
                .flat_map(|&v| space.neighbors(v).map(|(w, _)| owner[w]))
                .filter(|&k| k != usize::MAX && k >= offset[i - 1] && k < offset[i])
                .collect();
            lower.sort_unstable();
            lower.dedup();
            if lower.is_empty() {
                return Err(Error::KappaTooSmall { level: i, index: a });
            }
            let target = *lower
                .iter()
                .max_by(|&&x, &&y| {
                    let (cx, cy) = (&comps[i - 1][x - offset[i - 1]], &comps[i - 1][y - offset[i - 1]]);
                    cx.measure(m).total_cmp(&cy.measure(m)).then(y.cmp(&x))
                })
                .unwrap();
            let rt = uf.find(target);
            let rs = uf.find(offset[i] + a);
            uf.0[rs] = rt;
            gluing.push(GlueEvent {
                from: (i, a),
                into: (i - 1, target - offset[i - 1]),
                candidates: lower.len(),
            });
        }
    }

    // assemble pieces: a group takes the level of its lowest raw component
    let level_of = |flat: usize| offset.partition_point(|&o| o <= flat) - 1;
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut group_of = vec![usize::MAX; offset[levels]];
    for flat in 0..offset[levels] {
        let r = uf.find(flat);
        if group_of[r] == usize::MAX {
            group_of[r] = groups.len();
            groups.push((level_of(r), Vec::new()));
        }
        groups[group_of[r]].1.push(flat);
    }
    let mut raw_pieces: Vec<(usize, VertexSubset, Vec<(usize, usize)>)> = groups
        .into_iter()
        .map(|(level, members)| {
            let u = VertexSubset::union_all(
                members.iter().map(|&f| &comps[level_of(f)][f - offset[level_of(f)]]),
            );
            let glued = members
                .iter()
                .filter(|&&f| level_of(f) != level)
                .map(|&f| (level_of(f), f - offset[level_of(f)]))
                .collect();
            (level, u, glued)
        })
        .collect();
    raw_pieces.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.as_slice()[0].cmp(&b.1.as_slice()[0])));
    let mut pieces = Vec::with_capacity(raw_pieces.len());
    let mut counter = vec![0usize; levels];
    for (level, u, glued_from) in raw_pieces {
        let index = counter[level];
        counter[level] += 1;
        pieces.push(CoveringPiece {
            level,
            index,
            u_star: VertexSubset::default(),
            u_sharp: VertexSubset::default(),
            u,
            glued_from,
        });
    }
    // renumber glue targets to final piece indices at their level
    for g in &mut gluing {
        let flat = offset[g.into.0] + g.into.1;
        let root = uf.find(flat);
        let v0 = comps[level_of(root)][root - offset[level_of(root)]].as_slice()[0];
        if let Some(p) = pieces.iter().find(|p| p.u.contains(v0)) {
            g.into = (p.level, p.index);
        }
    }
    expand(space, &mut pieces);

    let target = space.base_ball(radii[levels - 1]);
    let mut cov = GoodCovering {
        pieces,
        kappa: Some(kappa),
        kappa0: Some(kappa * kappa),
        q1: 0,
        q2: 0.0,
        exceptional_set_measure: [0.0; 2],
        radii,
        target,
        gluing,
        max_components_per_annulus,
        boundary_level: Some(levels - 1),
    };
    let report = validate_good_covering(space, &cov, m, m2);
    cov.q1 = report.q1;
    cov.q2 = report.q2;
    cov.exceptional_set_measure = report.exceptional_set_measure;
    Ok(cov)
}

/// Fills `U*` (union of touching pieces) and `U#` (union of starred pieces
/// touching `U*`).
fn expand(space: &DiscreteSpace, pieces: &mut [CoveringPiece]) {
    let us: Vec<VertexSubset> = pieces.iter().map(|p| p.u.clone()).collect();
    let adj = adjacency(us.len(), &touching_pairs(space, &us));
    let stars: Vec<VertexSubset> = (0..us.len())
        .map(|i| VertexSubset::union_all(adj[i].iter().map(|&j| &us[j]).chain([&us[i]])))
        .collect();
    let adj_star = adjacency(us.len(), &touching_pairs(space, &stars));
    for (i, p) in pieces.iter_mut().enumerate() {
        p.u_sharp = VertexSubset::union_all(adj_star[i].iter().map(|&j| &stars[j]).chain([&stars[i]]));
        p.u_star = stars[i].clone();
    }
}

fn adjacency(n: usize, pairs: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in pairs {
        adj[i].push(j);
        adj[j].push(i);
    }
    adj
}

fn owners(n: usize, sets: &[VertexSubset]) -> Vec<Vec<u32>> {
    let mut own = vec![Vec::new(); n];
    for (k, s) in sets.iter().enumerate() {
        for &v in s.iter() {
            own[v].push(k as u32);
        }
    }
    own
}

struct PairSet {
    n: usize,
    dense: Option<Vec<bool>>,
    sparse: HashSet<(usize, usize)>,
}

impl PairSet {
    fn new(n: usize) -> Self {
        let dense = (n * n <= 1 << 24).then(|| vec![false; n * n]);
        Self { n, dense, sparse: HashSet::new() }
    }
    fn insert(&mut self, a: usize, b: usize) {
        let (a, b) = (a.min(b), a.max(b));
        match &mut self.dense {
            Some(m) => m[a * self.n + b] = true,
            None => {
                self.sparse.insert((a, b));
            }
        }
    }
    fn into_sorted(self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = match self.dense {
            Some(m) => (0..self.n * self.n)
                .filter(|&k| m[k])
                .map(|k| (k / self.n, k % self.n))
                .collect(),
            None => self.sparse.into_iter().collect(),
        };
        out.sort_unstable();
        out
    }
}

/// Unordered pairs `i < j` of sets that touch.
pub fn touching_pairs(space: &DiscreteSpace, sets: &[VertexSubset]) -> Vec<(usize, usize)> {
    let own = owners(space.len(), sets);
    let mut pairs = PairSet::new(sets.len());
    for v in 0..space.len() {
        let ov = &own[v];
        for (x, &a) in ov.iter().enumerate() {
            for &b in &ov[x + 1..] {
                pairs.insert(a as usize, b as usize);
            }
        }
        if ov.is_empty() {
            continue;
        }
        for (w, _) in space.neighbors(v) {
            if w < v {
                continue;
            }
            for &a in ov {
                for &b in &own[w] {
                    if a != b {
                        pairs.insert(a as usize, b as usize);
                    }
                }
            }
        }
    }
    pairs.into_sorted()
}

/// Unordered pairs `i < j` of sets sharing a vertex.
pub fn intersecting_pairs(n_vertices: usize, sets: &[VertexSubset]) -> Vec<(usize, usize)> {
    let own = owners(n_vertices, sets);
    let mut pairs = PairSet::new(sets.len());
    for ov in &own {
        for (x, &a) in ov.iter().enumerate() {
            for &b in &ov[x + 1..] {
                pairs.insert(a as usize, b as usize);
            }
        }
    }
    pairs.into_sorted()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbraceRow {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringValidation {
    pub nesting_violations: Vec<usize>,
    pub exceptional_set_measure: [f64; 2],
    pub outside_target_sharp: bool,
    #[serde(rename = "Q1")]
    pub q1: usize,
    pub embracing: Vec<EmbraceRow>,
    pub embracing_violations: Vec<(usize, usize)>,
    #[serde(rename = "Q2")]
    pub q2: f64,
    pub bad_measure_pieces: Vec<usize>,
    /// Nesting, covering, overlap, embracing, measure control.
    pub conditions: [bool; 5],
    pub pass: bool,
}

pub fn validate_good_covering(
    space: &DiscreteSpace,
    cov: &GoodCovering,
    m1: &[f64],
    m2: &[f64],
) -> CoveringValidation {
    let pieces = &cov.pieces;
    let nesting_violations: Vec<usize> = (0..pieces.len())
        .filter(|&k| {
            let p = &pieces[k];
            p.u.is_empty() || !p.u.is_subset_of(&p.u_star) || !p.u_star.is_subset_of(&p.u_sharp)
        })
        .collect();

    let mut covered = vec![false; space.len()];
    for p in pieces {
        for &v in p.u.iter() {
            covered[v] = true;
        }
    }
    let uncovered: VertexSubset = cov.target.iter().copied().filter(|&v| !covered[v]).collect();
    let exceptional = [uncovered.measure(m1), uncovered.measure(m2)];

    let sharps: Vec<VertexSubset> = pieces.iter().map(|p| p.u_sharp.clone()).collect();
    let mut overlap = vec![1usize; pieces.len()];
    for (i, j) in intersecting_pairs(space.len(), &sharps) {
        overlap[i] += 1;
        overlap[j] += 1;
    }
    let q1 = overlap.iter().copied().max().unwrap_or(0);

    let us: Vec<VertexSubset> = pieces.iter().map(|p| p.u.clone()).collect();
    let stars: Vec<VertexSubset> = pieces.iter().map(|p| p.u_star.clone()).collect();
    let star_owner = owners(space.len(), &stars);
    let star_mass: Vec<f64> = stars.iter().map(|s| s.measure(m2)).collect();
    let u_mass: Vec<f64> = us.iter().map(|s| s.measure(m2)).collect();
    let pairs = touching_pairs(space, &us);
    let rows: Vec<Option<EmbraceRow>> = par::map(&pairs, |&(i, j)| {
        let v0 = us[i].as_slice()[0];
        let mut best: Option<usize> = None;
        for &k in &star_owner[v0] {
            let k = k as usize;
            if us[i].is_subset_of(&stars[k]) && us[j].is_subset_of(&stars[k]) {
                let better = match best {
                    None => true,
                    Some(b) => star_mass[k] < star_mass[b] || (star_mass[k] == star_mass[b] && k < b),
                };
                if better {
                    best = Some(k);
                }
            }
        }
        best.map(|k| EmbraceRow { i, j, k, ratio: star_mass[k] / u_mass[i].min(u_mass[j]) })
    });
    let mut embracing = Vec::new();
    let mut embracing_violations = Vec::new();
    for (row, &(i, j)) in rows.into_iter().zip(&pairs) {
        match row {
            Some(r) => embracing.push(r),
            None => embracing_violations.push((i, j)),
        }
    }
    let q2 = embracing.iter().map(|r| r.ratio).fold(1.0, f64::max);

    let bad_measure_pieces: Vec<usize> = (0..pieces.len())
        .filter(|&k| {
            let p = &pieces[k];
            [&p.u, &p.u_star, &p.u_sharp].iter().any(|s| {
                [m1, m2].iter().any(|m| {
                    let x = s.measure(m);
                    !(x > 0.0) || !x.is_finite()
                })
            })
        })
        .collect();

    let conditions = [
        nesting_violations.is_empty() && bad_measure_pieces.is_empty(),
        exceptional == [0.0, 0.0],
        q1 >= 1,
        embracing_violations.is_empty(),
        q2.is_finite() && q2 >= 1.0,
    ];
    CoveringValidation {
        nesting_violations,
        exceptional_set_measure: exceptional,
        outside_target_sharp: false,
        q1,
        embracing,
        embracing_violations,
        q2,
        bad_measure_pieces,
        pass: conditions.iter().all(|&c| c),
        conditions,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaSearch {
    pub kappa: f64,
    pub kappa0: f64,
    pub candidates: Vec<f64>,
    /// First failing radius for each rejected candidate.
    pub rejected: Vec<(f64, f64)>,
}

/// Geometric candidate grid `2^{k/4}`, `k = 1, 2, ...`, up to `cap`.
pub fn kappa_candidates(cap: f64) -> Vec<f64> {
    (1..)
        .map(|k| 2f64.powf(k as f64 / 4.0))
        .take_while(|&k| k <= cap * (1.0 + 1e-12))
        .collect()
}

/// Smallest candidate `κ` such that, at each tested radius `R`, two
/// components of `B_{κR} \ B_R` lying in one component of `X \ B_{R/κ}` also
/// lie in one component of `B_{κR} \ B_{R/κ}`. Tested radii are
/// `R_in κ^{-1-i}`, `i < levels`.
pub fn kappa_search(space: &DiscreteSpace, levels: usize, cap: f64, cover_radius: Option<f64>) -> Result<KappaSearch> {
    if levels < 3 {
        return Err(Error::InvalidParameter(format!("kappa search needs at least 3 levels, got {levels}")));
    }
    let r_in = cover_radius.unwrap_or_else(|| space.inner_radius());
    let candidates = kappa_candidates(cap);
    let mut rejected = Vec::new();
    for &kappa in &candidates {
        match (0..levels).map(|i| r_in * kappa.powi(-1 - i as i32)).find(|&r| !annulus_rule_holds(space, r, kappa)) {
            None => {
                return Ok(KappaSearch { kappa, kappa0: kappa * kappa, candidates, rejected });
            }
            Some(r) => rejected.push((kappa, r)),
        }
    }
    Err(Error::NoValidKappa(cap))
}

fn annulus_rule_holds(space: &DiscreteSpace, r: f64, kappa: f64) -> bool {
    let n = space.len();
    let label = |sets: &[VertexSubset]| {
        let mut l = vec![usize::MAX; n];
        for (k, s) in sets.iter().enumerate() {
            for &v in s.iter() {
                l[v] = k;
            }
        }
        l
    };
    let narrow = space.connected_components(&space.base_annulus(r, kappa * r));
    let wide = label(&space.connected_components(&space.base_annulus(r / kappa, kappa * r)));
    let outside = label(&space.connected_components(&space.base_annulus(r / kappa, f64::INFINITY)));
    for a in 0..narrow.len() {
        for b in a + 1..narrow.len() {
            let (va, vb) = (narrow[a].as_slice()[0], narrow[b].as_slice()[0]);
            if outside[va] == outside[vb] && wide[va] != wide[vb] {
                return false;
            }
        }
    }
    true
}

/// Balls `B(x_i, s)` around an s-lattice of `subset`, with `U* = U# = B(x_i, 3s)`
/// and `s = δR`.
pub fn lattice_covering(space: &DiscreteSpace, subset: &VertexSubset, delta: f64, r: f64) -> Result<GoodCovering> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("R must be positive, got {r}")));
    }
    if subset.is_empty() || !space.is_connected_subset(subset) {
        return Err(Error::InvalidParameter("lattice covering needs a nonempty connected subset".into()));
    }
    let s = delta * r;
    let lattice = space.s_lattice(subset, s);
    let pieces: Vec<CoveringPiece> = par::try_map(lattice.as_slice(), |&x| {
        let (u, _) = space.ball(x, s)?;
        let (big, _) = space.ball(x, 3.0 * s)?;
        Ok::<_, Error>(CoveringPiece {
            level: 0,
            index: 0,
            u,
            u_star: big.clone(),
            u_sharp: big,
            glued_from: Vec::new(),
        })
    })?
    .into_iter()
    .enumerate()
    .map(|(k, mut p)| {
        p.index = k;
        p
    })
    .collect();
    let mut cov = GoodCovering {
        pieces,
        kappa: None,
        kappa0: None,
        q1: 0,
        q2: 0.0,
        exceptional_set_measure: [0.0; 2],
        radii: vec![s],
        target: subset.clone(),
        gluing: Vec::new(),
        max_components_per_annulus: 1,
        boundary_level: None,
    };
    let m = space.measure();
    let rep = validate_good_covering(space, &cov, m, m);
    cov.q1 = rep.q1;
    cov.q2 = rep.q2;
    cov.exceptional_set_measure = rep.exceptional_set_measure;
    Ok(cov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_grid, GridSpec, Stencil};
    use crate::space::Edge;

    fn plane(extent: f64, h: f64) -> DiscreteSpace {
        build_grid(&GridSpec {
            n: 2,
            extent,
            h,
            eta: 2.0,
            stencil: Stencil::Extended(2),
            dimension_bound: 2.0,
        })
        .unwrap()
    }

    fn small_a() -> CoveringOptions {
        CoveringOptions { threshold_a: Some(2.0), ..Default::default() }
    }

    /// Two unit-spaced rays of lengths `left` and `right` joined at `o`
    /// through a short bridge of two parallel unit edges.
    fn dumbbell(left: usize, right: usize) -> DiscreteSpace {
        let n = left + right + 2;
        let o = left;
        let mut edges = Vec::new();
        for i in 0..left {
            edges.push(Edge { a: i, b: i + 1, length: 1.0 });
        }
        for i in o..o + right {
            edges.push(Edge { a: i, b: i + 1, length: 1.0 });
        }
        // bridge vertex next to o
        let bridge = n - 1;
        edges.push(Edge { a: o, b: bridge, length: 0.5 });
        edges.push(Edge { a: bridge, b: o + 1, length: 0.75 });
        DiscreteSpace::from_parts(None, vec![1.0; n], edges, o, 2.0).unwrap()
    }

    #[test]
    fn radii_reach_the_cover_radius() {
        let r = level_radii(32.0, 2.5, 2.0);
        assert_eq!(*r.last().unwrap(), 32.0);
        assert!(r[0] <= 2.5);
        for w in r.windows(2) {
            assert!((w[1] / w[0] - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn plane_has_one_piece_per_level() {
        let g = plane(32.0, 1.0);
        let m = g.measure().to_vec();
        let cov = build_good_covering_with(&g, 2.0, &m, &small_a()).unwrap();
        assert!(cov.gluing.is_empty());
        assert_eq!(cov.pieces.len(), cov.radii.len());
        assert_eq!(cov.max_components_per_annulus, 1);
        let v = validate_good_covering(&g, &cov, &m, &m);
        assert!(v.pass, "{:?}", v.conditions);
        assert!(v.q1 >= 1 && v.q2 >= 1.0);
    }

    #[test]
    fn dumbbell_glues_the_short_ray() {
        let s = dumbbell(40, 12);
        let m = s.measure().to_vec();
        let opts = CoveringOptions { cover_radius: Some(32.0), threshold_a: Some(2.0), min_levels: 4 };
        let cov = build_good_covering_with(&s, 2.0, &m, &opts).unwrap();
        assert!(!cov.gluing.is_empty());
        let g = &cov.gluing[0];
        assert_eq!(g.from.0, g.into.0 + 1);
        assert!(validate_good_covering(&s, &cov, &m, &m).pass);
    }

    #[test]
    fn kappa_one_and_few_levels() {
        let g = plane(8.0, 1.0);
        let m = g.measure().to_vec();
        assert!(matches!(
            build_good_covering_with(&g, 1.0, &m, &CoveringOptions::default()),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            build_good_covering_with(&g, 4.0, &m, &CoveringOptions::default()),
            Err(Error::TooFewLevels { .. })
        ));
    }

    #[test]
    fn shrunk_star_breaks_embracing() {
        let g = plane(32.0, 1.0);
        let m = g.measure().to_vec();
        let mut cov = build_good_covering_with(&g, 2.0, &m, &small_a()).unwrap();
        for p in &mut cov.pieces {
            p.u_star = p.u.clone();
        }
        let v = validate_good_covering(&g, &cov, &m, &m);
        assert!(!v.embracing_violations.is_empty());
        assert!(!v.conditions[3]);
    }

    #[test]
    fn toy_q2() {
        let s = DiscreteSpace::from_parts(
            None,
            vec![1.0, 3.0, 1.0],
            vec![Edge { a: 0, b: 1, length: 1.0 }, Edge { a: 1, b: 2, length: 1.0 }],
            0,
            2.0,
        )
        .unwrap();
        let piece = |u: Vec<usize>, st: Vec<usize>| CoveringPiece {
            level: 0,
            index: 0,
            u: VertexSubset::from_unsorted(u),
            u_star: VertexSubset::from_unsorted(st.clone()),
            u_sharp: VertexSubset::from_unsorted(st),
            glued_from: vec![],
        };
        let cov = GoodCovering {
            pieces: vec![piece(vec![0], vec![0]), piece(vec![1, 2], vec![0, 1, 2])],
            kappa: None,
            kappa0: None,
            q1: 0,
            q2: 0.0,
            exceptional_set_measure: [0.0; 2],
            radii: vec![],
            target: VertexSubset::all(3),
            gluing: vec![],
            max_components_per_annulus: 1,
            boundary_level: None,
        };
        let m = s.measure().to_vec();
        // m2 masses (1, 3), embracing piece U*_1 of mass 4
        let m2 = vec![1.0, 2.0, 1.0];
        let v = validate_good_covering(&s, &cov, &m, &m2);
        assert_eq!(v.q2, 4.0);
    }

    #[test]
    fn line_kappa_is_vacuous_and_plane_takes_smallest() {
        let line = DiscreteSpace::from_parts(
            None,
            vec![1.0; 129],
            (0..128).map(|i| Edge { a: i, b: i + 1, length: 1.0 }).collect(),
            64,
            2.0,
        )
        .unwrap();
        let k = kappa_search(&line, 3, 8.0, Some(60.0)).unwrap();
        assert_eq!(k.kappa, kappa_candidates(8.0)[0]);
        let g = plane(24.0, 1.0);
        let k = kappa_search(&g, 3, 8.0, None).unwrap();
        assert_eq!(k.kappa, kappa_candidates(8.0)[0]);
        assert!(kappa_search(&g, 1, 8.0, None).is_err());
    }

    #[test]
    fn lattice_cover_of_a_ball() {
        let g = plane(8.0, 1.0);
        let (ball, _) = g.ball(g.base_point(), 2.5).unwrap();
        let cov = lattice_covering(&g, &ball, 0.9, 10.0).unwrap();
        assert_eq!(cov.pieces.len(), 1);
        assert_eq!(cov.q1, 1);
        assert!(lattice_covering(&g, &ball, 1.5, 10.0).is_err());
        let ann = g.base_annulus(3.0, 6.0);
        let cov = lattice_covering(&g, &ann, 0.25, 4.0).unwrap();
        let m = g.measure();
        assert!(validate_good_covering(&g, &cov, m, m).pass);
    }
}
