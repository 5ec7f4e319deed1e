//! Test-space generators: Euclidean and radial-density grids, and the
//! conformal space `(R^3 \ ray, f g_e)` with
//! `f(x) = ∫_0^∞ dt / |x - (t^α, 0, 0)|`.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::quadrature;
use crate::space::{io, DiscreteSpace, Edge};

/// Neighbor pattern of a grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stencil {
    /// The `2n` coordinate neighbors.
    Axis,
    /// Every primitive integer offset with max-norm at most `k`.
    Extended(usize),
}

impl Stencil {
    /// Offsets with positive leading nonzero entry; the other half is implied.
    pub fn half_offsets(&self, n: usize) -> Vec<Vec<i64>> {
        let k = match *self {
            Stencil::Axis => {
                return (0..n)
                    .map(|d| (0..n).map(|j| i64::from(j == d)).collect())
                    .collect()
            }
            Stencil::Extended(k) => k.max(1) as i64,
        };
        let mut out = Vec::new();
        let side = 2 * k + 1;
        for code in 0..side.pow(n as u32) {
            let mut c = code;
            let mut off = vec![0i64; n];
            for o in off.iter_mut() {
                *o = c % side - k;
                c /= side;
            }
            off.reverse();
            let lead = off.iter().find(|&&x| x != 0);
            if lead.is_some_and(|&x| x > 0) && off.iter().fold(0, |g, &x| gcd(g, x.abs())) == 1 {
                out.push(off);
            }
        }
        out
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub extent: f64,
    pub h: f64,
    /// Growth exponent of the density `(1+|x|)^(eta-n)`.
    pub eta: f64,
    pub stencil: Stencil,
    pub dimension_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HattoriSpec {
    pub alpha: f64,
    pub extent: f64,
    pub h: f64,
    pub quad_tol: f64,
    pub dimension_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum SpaceSpec {
    EuclideanGrid(GridSpec),
    RadialDensity(GridSpec),
    Hattori(HattoriSpec),
    File { path: PathBuf },
}

/// Default stencil: near-isotropic balls for growth measurements.
pub fn default_stencil(n: usize) -> Stencil {
    if n == 3 {
        Stencil::Extended(1)
    } else {
        Stencil::Extended(2)
    }
}

fn check_grid(n: usize, extent: f64, h: f64) -> Result<()> {
    if !(1..=3).contains(&n) {
        return Err(Error::BadDimension(n));
    }
    if !(h > 0.0) || !(extent > 0.0) || !h.is_finite() || !extent.is_finite() {
        return Err(Error::DegenerateGrid(format!("extent {extent} and spacing {h} must be positive")));
    }
    if h >= extent {
        return Err(Error::DegenerateGrid(format!("spacing {h} must be below extent {extent}")));
    }
    Ok(())
}

/// Grid on `[-extent, extent]^n` with vertex mass `h^n (1+|x|)^(eta-n)`.
pub fn euclidean_grid(n: usize, extent: f64, h: f64, density_exponent: f64) -> Result<SpaceSpec> {
    check_grid(n, extent, h)?;
    Ok(SpaceSpec::EuclideanGrid(GridSpec {
        n,
        extent,
        h,
        eta: density_exponent,
        stencil: default_stencil(n),
        dimension_bound: (n as f64).max(2.0),
    }))
}

pub fn radial_density(n: usize, extent: f64, h: f64, eta: f64) -> Result<SpaceSpec> {
    check_grid(n, extent, h)?;
    if !(eta > 1.0) {
        return Err(Error::InvalidParameter(format!("radial density needs eta > 1, got {eta}")));
    }
    Ok(SpaceSpec::RadialDensity(GridSpec {
        n,
        extent,
        h,
        eta,
        stencil: default_stencil(n),
        dimension_bound: (n as f64).max(2.0),
    }))
}

pub fn hattori_space(alpha: f64, extent: f64, h: f64) -> Result<SpaceSpec> {
    if !(alpha > 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must exceed 1, got {alpha}")));
    }
    check_grid(3, extent, h)?;
    Ok(SpaceSpec::Hattori(HattoriSpec {
        alpha,
        extent,
        h,
        quad_tol: 1e-10,
        dimension_bound: 4.0,
    }))
}

pub fn build_space(spec: &SpaceSpec) -> Result<DiscreteSpace> {
    match spec {
        SpaceSpec::EuclideanGrid(g) | SpaceSpec::RadialDensity(g) => build_grid(g),
        SpaceSpec::Hattori(s) => build_hattori(s),
        SpaceSpec::File { path } => io::load(path),
    }
}

struct Lattice {
    n: usize,
    k: i64,
}

impl Lattice {
    fn side(&self) -> i64 {
        2 * self.k + 1
    }
    fn len(&self) -> usize {
        (self.side() as usize).pow(self.n as u32)
    }
    fn point(&self, mut idx: usize) -> Vec<i64> {
        let side = self.side() as usize;
        let mut p = vec![0i64; self.n];
        for d in (0..self.n).rev() {
            p[d] = (idx % side) as i64 - self.k;
            idx /= side;
        }
        p
    }
    fn index(&self, p: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for &x in p {
            if x.abs() > self.k {
                return None;
            }
            idx = idx * self.side() as usize + (x + self.k) as usize;
        }
        Some(idx)
    }
}

fn norm(p: &[i64]) -> f64 {
    (p.iter().map(|&x| (x * x) as f64).sum::<f64>()).sqrt()
}

pub fn build_grid(g: &GridSpec) -> Result<DiscreteSpace> {
    check_grid(g.n, g.extent, g.h)?;
    let lat = Lattice { n: g.n, k: (g.extent / g.h + 1e-9).floor() as i64 };
    let offsets = g.stencil.half_offsets(g.n);
    let hn = g.h.powi(g.n as i32);
    let mut coords = Vec::with_capacity(lat.len());
    let mut measure = Vec::with_capacity(lat.len());
    let mut edges = Vec::new();
    for v in 0..lat.len() {
        let p = lat.point(v);
        let r = g.h * norm(&p);
        coords.push(p.iter().map(|&x| x as f64 * g.h).collect());
        measure.push(hn * (1.0 + r).powf(g.eta - g.n as f64));
        for o in &offsets {
            let q: Vec<i64> = p.iter().zip(o).map(|(a, b)| a + b).collect();
            if let Some(w) = lat.index(&q) {
                edges.push(Edge { a: v, b: w, length: g.h * norm(o) });
            }
        }
    }
    let base = lat.index(&vec![0; g.n]).unwrap();
    DiscreteSpace::from_parts(Some(coords), measure, edges, base, g.dimension_bound)
}

/// Relative pole-detection tolerance for points near the ray `{(s,0,0), s >= 0}`.
pub const POLE_TOL: f64 = 1e-9;

/// The conformal factor `f(x) = ∫_0^∞ dt / sqrt((x1 - t^α)^2 + x2^2 + x3^2)`.
pub fn hattori_conformal_factor(x: [f64; 3], alpha: f64, tol: f64) -> Result<f64> {
    if !(alpha > 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must exceed 1, got {alpha}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("quadrature tolerance must be positive, got {tol}")));
    }
    let rho = x[1].hypot(x[2]);
    let r = x[0].hypot(rho);
    if r == 0.0 || (x[0] > 0.0 && rho <= POLE_TOL * r.max(1.0)) {
        return Err(Error::SingularPoint(x));
    }
    conformal_factor_axial(x[0], rho, alpha, tol)
}

fn conformal_factor_axial(x1: f64, rho: f64, alpha: f64, tol: f64) -> Result<f64> {
    let b = |t: f64| 1.0 / (x1 - t.powf(alpha)).hypot(rho);
    let t0 = if x1 > 0.0 { x1.powf(1.0 / alpha) } else { 0.0 };
    let big_t = (2.0 * t0).max(1.0).max((4.0 * rho).powf(1.0 / alpha));
    let mut breaks = vec![0.0];
    if t0 > 0.0 {
        // resolve the near-pole peak of width ~ rho around t0
        let w = rho / (alpha * t0.powf(alpha - 1.0));
        for c in [t0 - 4.0 * w, t0, t0 + 4.0 * w] {
            if c > *breaks.last().unwrap() && c < big_t {
                breaks.push(c);
            }
        }
    }
    breaks.push(big_t);
    let head = quadrature::integrate(b, &breaks, 0.0, 0.25 * tol, 4000)?;
    // t = T s^(-1/(α-1)) maps [T, ∞) to (0, 1] with a bounded integrand
    let scale = big_t.powf(1.0 - alpha) / (alpha - 1.0);
    let tail = quadrature::integrate(
        |s: f64| {
            let u = big_t.powf(alpha) * s.powf(-alpha / (alpha - 1.0));
            scale / (1.0 - x1 / u).hypot(rho / u)
        },
        &[0.0, 1.0],
        0.0,
        0.25 * tol,
        4000,
    )?;
    Ok(head.value + tail.value)
}

/// Distance from `x` to the ray `{(s,0,0) : s >= 0}`.
pub fn distance_to_ray(x: [f64; 3]) -> f64 {
    let rho = x[1].hypot(x[2]);
    if x[0] >= 0.0 {
        rho
    } else {
        x[0].hypot(rho)
    }
}

/// Grid in half-spacing units: `(2 x1 / h, (2 x2 / h)^2 + (2 x3 / h)^2)`.
/// `f` depends on `x` only through this pair.
type AxialKey = (i64, i64);

fn axial_key(doubled: [i64; 3]) -> AxialKey {
    (doubled[0], doubled[1] * doubled[1] + doubled[2] * doubled[2])
}

pub fn build_hattori(s: &HattoriSpec) -> Result<DiscreteSpace> {
    if !(s.alpha > 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must exceed 1, got {}", s.alpha)));
    }
    check_grid(3, s.extent, s.h)?;
    let lat = Lattice { n: 3, k: (s.extent / s.h + 1e-9).floor() as i64 };
    let tube = 2.0 * s.h;
    let mut keep = vec![usize::MAX; lat.len()];
    let mut kept = Vec::new();
    for v in 0..lat.len() {
        let p = lat.point(v);
        let x = [p[0] as f64 * s.h, p[1] as f64 * s.h, p[2] as f64 * s.h];
        if distance_to_ray(x) >= tube * (1.0 - 1e-12) {
            keep[v] = kept.len();
            kept.push(v);
        }
    }
    if kept.is_empty() {
        return Err(Error::DegenerateGrid("every vertex lies inside the excluded tube".into()));
    }
    let offsets = Stencil::Extended(1).half_offsets(3);
    let mut pairs = Vec::new();
    let mut keys: Vec<AxialKey> = Vec::new();
    for (i, &v) in kept.iter().enumerate() {
        let p = lat.point(v);
        keys.push(axial_key([2 * p[0], 2 * p[1], 2 * p[2]]));
        for o in &offsets {
            let q = [p[0] + o[0], p[1] + o[1], p[2] + o[2]];
            if let Some(w) = lat.index(&q) {
                if keep[w] != usize::MAX {
                    let j = keep[w];
                    pairs.push((i, j, norm(o) * s.h));
                    keys.push(axial_key([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                }
            }
        }
    }
    keys.sort_unstable();
    keys.dedup();
    let half = 0.5 * s.h;
    let values = par::try_map(&keys, |&(k1, r2)| {
        let x = [k1 as f64 * half, (r2 as f64).sqrt() * half, 0.0];
        hattori_conformal_factor(x, s.alpha, s.quad_tol)
    })?;
    let f_at = |doubled: [i64; 3]| values[keys.binary_search(&axial_key(doubled)).unwrap()];

    let h3 = s.h.powi(3);
    let mut coords = Vec::with_capacity(kept.len());
    let mut measure = Vec::with_capacity(kept.len());
    let mut base = 0;
    let mut base_key = (i64::MAX, vec![0i64; 3]);
    for (i, &v) in kept.iter().enumerate() {
        let p = lat.point(v);
        coords.push(p.iter().map(|&x| x as f64 * s.h).collect::<Vec<f64>>());
        measure.push(f_at([2 * p[0], 2 * p[1], 2 * p[2]]).powf(1.5) * h3);
        let key = (p.iter().map(|x| x * x).sum::<i64>(), p.clone());
        if key < base_key {
            base_key = key;
            base = i;
        }
    }
    let mut edges = Vec::with_capacity(pairs.len());
    for &(i, j, dx) in &pairs {
        let (p, q) = (lat.point(kept[i]), lat.point(kept[j]));
        let f = f_at([p[0] + q[0], p[1] + q[1], p[2] + q[2]]);
        edges.push(Edge { a: i, b: j, length: f.sqrt() * dx });
    }
    DiscreteSpace::from_parts(Some(coords), measure, edges, base, s.dimension_bound)
}
