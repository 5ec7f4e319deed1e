//! Volume growth about the base point, doubling and reverse doubling,
//! local Ahlfors regularity, and the weight `w_o`.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::space::DiscreteSpace;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub r_min: f64,
    pub r_max: f64,
}

impl Window {
    pub fn new(r_min: f64, r_max: f64) -> Self {
        Self { r_min, r_max }
    }

    /// `samples` geometrically spaced radii from `r_min` to `r_max`.
    pub fn radii(&self, samples: usize) -> Vec<f64> {
        let ratio = self.r_max / self.r_min;
        (0..samples)
            .map(|k| {
                if k + 1 == samples {
                    self.r_max
                } else {
                    self.r_min * ratio.powf(k as f64 / (samples - 1) as f64)
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthOptions {
    pub window: Window,
    pub samples: usize,
    /// Number of sampled centers for the doubling and Ahlfors estimates.
    pub centers: usize,
    pub seed: u64,
    /// Defaults to ten times the shortest edge.
    pub threshold_a: Option<f64>,
}

impl GrowthOptions {
    pub fn new(window: Window, samples: usize) -> Self {
        Self { window, samples, centers: 12, seed: 0, threshold_a: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub eta: f64,
    pub theta_inf: f64,
    pub theta_sup: f64,
    #[serde(rename = "C_RD")]
    pub c_rd: f64,
    #[serde(rename = "threshold_A")]
    pub threshold_a: f64,
    pub window: Window,
    #[serde(rename = "C_D_hat")]
    pub c_d_hat: f64,
    /// `(C_o, r_o)` with `C_o^{-1} r^N <= V(x, r) <= C_o r^N` for sampled
    /// `x` and closed balls of radius `r <= r_o`.
    pub ahlfors: Option<(f64, f64)>,
    #[serde(skip)]
    pub curve: Vec<(f64, f64)>,
}

impl GrowthReport {
    /// Assembles a report from measured extremes; `C_RD` is always derived.
    pub fn from_thetas(eta: f64, theta_inf: f64, theta_sup: f64, threshold_a: f64, window: Window) -> Self {
        Self {
            eta,
            theta_inf,
            theta_sup,
            c_rd: reverse_doubling_constant(theta_inf, theta_sup),
            threshold_a,
            window,
            c_d_hat: f64::NAN,
            ahlfors: None,
            curve: Vec::new(),
        }
    }

    pub fn curve_csv(&self) -> String {
        let mut s = String::from("r,V\n");
        for (r, v) in &self.curve {
            s.push_str(&format!("{r:?},{v:?}\n"));
        }
        s
    }
}

pub fn reverse_doubling_constant(theta_inf: f64, theta_sup: f64) -> f64 {
    theta_inf / (4.0 * theta_sup)
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

pub fn volume_growth(space: &DiscreteSpace, window: Window, samples: usize) -> Result<GrowthReport> {
    volume_growth_with(space, &GrowthOptions::new(window, samples))
}

pub fn volume_growth_with(space: &DiscreteSpace, opts: &GrowthOptions) -> Result<GrowthReport> {
    let Window { r_min, r_max } = opts.window;
    if opts.samples < 8 {
        return Err(Error::WindowTooSmall(format!("{} radii requested, at least 8 needed", opts.samples)));
    }
    let lo = 10.0 * space.min_edge_length();
    let hi = space.eccentricity();
    if !(r_min < r_max) || r_min < lo * (1.0 - 1e-12) || r_max > hi * (1.0 + 1e-12) {
        return Err(Error::WindowTooSmall(format!(
            "window [{r_min}, {r_max}] must be a nonempty subset of [{lo}, {hi}]"
        )));
    }
    let radii = opts.window.radii(opts.samples);
    let profile = space.radial_profile();
    let vols: Vec<f64> = radii.iter().map(|&r| profile.volume_open(r)).collect();
    let lx: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ly: Vec<f64> = vols.iter().map(|v| v.ln()).collect();
    let (eta, _) = fit_line(&lx, &ly);
    let thetas: Vec<f64> = radii.iter().zip(&vols).map(|(r, v)| v / r.powf(eta)).collect();
    let theta_inf = thetas.iter().copied().fold(f64::INFINITY, f64::min);
    let theta_sup = thetas.iter().copied().fold(0.0, f64::max);
    let threshold_a = opts.threshold_a.unwrap_or(lo);
    let mut report = GrowthReport::from_thetas(eta, theta_inf, theta_sup, threshold_a, opts.window);
    let (c_d, ahlfors) = local_estimates(space, opts);
    report.c_d_hat = c_d;
    report.ahlfors = ahlfors;
    report.curve = radii.into_iter().zip(vols).collect();
    log::info!(
        "growth: eta = {eta:.4}, theta in [{theta_inf:.4}, {theta_sup:.4}], C_D_hat = {c_d:.3}"
    );
    Ok(report)
}

/// Seeded sample of vertices within half the eccentricity of `o`; `o` first.
pub fn sample_centers(space: &DiscreteSpace, count: usize, seed: u64) -> Vec<usize> {
    let d = space.base_distances();
    let half = 0.5 * space.eccentricity();
    let pool: Vec<usize> = (0..space.len())
        .filter(|&v| v != space.base_point() && d[v] <= half)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let take = count.saturating_sub(1).min(pool.len());
    let mut picks: Vec<usize> = sample(&mut rng, pool.len(), take).into_iter().map(|i| pool[i]).collect();
    picks.sort_unstable();
    let mut out = vec![space.base_point()];
    out.extend(picks);
    out
}

/// Doubling ratio `max V(x,2r)/V(x,r)` over sampled centers and window radii,
/// and local Ahlfors constants over radii in `[shortest edge, r_max]`.
fn local_estimates(space: &DiscreteSpace, opts: &GrowthOptions) -> (f64, Option<(f64, f64)>) {
    let centers = sample_centers(space, opts.centers, opts.seed);
    let radii = opts.window.radii(opts.samples);
    let n = space.dimension_bound();
    let r_lo = space.min_edge_length();
    let r_o = opts.window.r_max;
    let ahl_radii = Window::new(r_lo, r_o).radii(16);
    let rows = par::map(&centers, |&x| {
        let mut pairs: Vec<(f64, f64)> = {
            let d = space.distances_from(x);
            d.into_iter().zip(space.measure().iter().copied()).collect()
        };
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut cum = Vec::with_capacity(pairs.len() + 1);
        cum.push(0.0);
        for (_, m) in &pairs {
            cum.push(cum.last().unwrap() + m);
        }
        let open = |r: f64| cum[pairs.partition_point(|p| p.0 < r)];
        let closed = |r: f64| cum[pairs.partition_point(|p| p.0 <= r)];
        let dbl = radii.iter().map(|&r| open(2.0 * r) / open(r)).fold(0.0, f64::max);
        let ahl = ahl_radii
            .iter()
            .map(|&r| {
                let q = closed(r) / r.powf(n);
                q.max(1.0 / q)
            })
            .fold(0.0, f64::max);
        (dbl, ahl)
    });
    let c_d = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let c_o = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    (c_d, c_o.is_finite().then_some((c_o, r_o)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReverseDoublingRow {
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub ratio: f64,
    pub bound: f64,
    /// `ratio / bound - 1`; negative on a violation.
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReverseDoublingCheck {
    #[serde(rename = "C_RD")]
    pub c_rd: f64,
    pub eta: f64,
    pub pairs_tested: usize,
    pub invalid_rows: Vec<(f64, f64)>,
    pub violations: Vec<ReverseDoublingRow>,
    pub min_margin: f64,
    pub pass: bool,
}

/// Checks `V(o,R)/V(o,r) >= C_RD (R/r)^eta` on `pairs` seeded radius pairs
/// with `max(A, r_min) <= r <= R <= r_max`.
pub fn check_reverse_doubling(
    space: &DiscreteSpace,
    report: &GrowthReport,
    pairs: usize,
    seed: u64,
) -> ReverseDoublingCheck {
    use rand::Rng;
    let lo = report.threshold_a.max(report.window.r_min).ln();
    let hi = report.window.r_max.ln();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let list: Vec<(f64, f64)> = (0..pairs)
        .map(|_| {
            let a = rng.random_range(lo..=hi).exp();
            let b = rng.random_range(lo..=hi).exp();
            (a.min(b), a.max(b))
        })
        .collect();
    check_reverse_doubling_pairs(space, report, &list)
}

pub fn check_reverse_doubling_pairs(
    space: &DiscreteSpace,
    report: &GrowthReport,
    pairs: &[(f64, f64)],
) -> ReverseDoublingCheck {
    let profile = space.radial_profile();
    let mut invalid_rows = Vec::new();
    let mut violations = Vec::new();
    let mut min_margin = f64::INFINITY;
    let mut tested = 0;
    for &(r, big_r) in pairs {
        if !(r > report.threshold_a) || big_r < r {
            invalid_rows.push((r, big_r));
            continue;
        }
        tested += 1;
        let ratio = profile.volume_open(big_r) / profile.volume_open(r);
        let bound = report.c_rd * (big_r / r).powf(report.eta);
        let margin = ratio / bound - 1.0;
        min_margin = min_margin.min(margin);
        if ratio < bound {
            violations.push(ReverseDoublingRow { r, big_r, ratio, bound, margin });
        }
    }
    ReverseDoublingCheck {
        c_rd: report.c_rd,
        eta: report.eta,
        pairs_tested: tested,
        pass: violations.is_empty(),
        invalid_rows,
        violations,
        min_margin,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedMeasure {
    pub mu: Vec<f64>,
    pub weight: Vec<f64>,
    pub p: f64,
    pub p_star: f64,
    /// How `w_o(o)` was set (the formula is 0/0 there).
    pub base_rule: String,
}

impl WeightedMeasure {
    /// `mu = m`, the unweighted case.
    pub fn constant(space: &DiscreteSpace, p: f64) -> Self {
        let n = space.dimension_bound();
        Self {
            mu: space.measure().to_vec(),
            weight: vec![1.0; space.len()],
            p,
            p_star: sobolev_conjugate(p, n),
            base_rule: "constant weight".into(),
        }
    }
}

/// `p* = Np/(N-p)`, infinite for `p = N`.
pub fn sobolev_conjugate(p: f64, n: f64) -> f64 {
    n * p / (n - p)
}

/// Radial profile `w̄_o(r) = V(o,r)^{p/(N-p)} r^{-Np/(N-p)}`, with the mass
/// of the closed ball so that every vertex at distance `r` is counted.
pub fn radial_weight(space: &DiscreteSpace, p: f64, r: f64) -> f64 {
    let n = space.dimension_bound();
    let v = space.radial_profile().volume_closed(r);
    (v / r.powf(n)).powf(p / (n - p))
}

pub fn weight_field(space: &DiscreteSpace, p: f64) -> Result<WeightedMeasure> {
    let n = space.dimension_bound();
    if !(p >= 1.0) || p >= n {
        return Err(Error::BadExponent { p, n });
    }
    let d = space.base_distances();
    let o = space.base_point();
    let mut weight: Vec<f64> = (0..space.len())
        .map(|v| if v == o { f64::NAN } else { radial_weight(space, p, d[v]) })
        .collect();
    let rule = match space.neighbors(o).min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0))) {
        Some((w, _)) => {
            weight[o] = weight[w];
            format!("nearest-neighbor extension from vertex {w}")
        }
        None => {
            weight[o] = 1.0;
            "isolated base point, weight 1".into()
        }
    };
    let mu: Vec<f64> = weight.iter().zip(space.measure()).map(|(w, m)| w * m).collect();
    if let Some(i) = mu.iter().position(|x| !(*x > 0.0) || !x.is_finite()) {
        return Err(Error::NonPositiveMeasure(i));
    }
    Ok(WeightedMeasure { mu, weight, p, p_star: sobolev_conjugate(p, n), base_rule: rule })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_grid, GridSpec, Stencil};

    fn grid(n: usize, extent: f64, h: f64, eta: f64) -> DiscreteSpace {
        build_grid(&GridSpec {
            n,
            extent,
            h,
            eta,
            stencil: if n == 3 { Stencil::Extended(1) } else { Stencil::Extended(2) },
            dimension_bound: (n as f64).max(2.0),
        })
        .unwrap()
    }

    #[test]
    fn c_rd_from_thetas() {
        let r = GrowthReport::from_thetas(2.0, 1.0, 2.0, 1.0, Window::new(1.0, 2.0));
        assert_eq!(r.c_rd, 0.125);
    }

    #[test]
    fn conjugate_exponent_relation() {
        for &(p, n) in &[(1.0, 2.0), (2.0, 3.0), (1.5, 4.0), (2.0, 4.0)] {
            let s = sobolev_conjugate(p, n);
            assert!((1.0 / s - (1.0 / p - 1.0 / n)).abs() < 1e-15);
        }
    }

    #[test]
    fn window_preconditions() {
        let g = grid(2, 8.0, 0.5, 2.0);
        assert!(matches!(volume_growth(&g, Window::new(5.0, 8.0), 7), Err(Error::WindowTooSmall(_))));
        assert!(matches!(volume_growth(&g, Window::new(1.0, 8.0), 8), Err(Error::WindowTooSmall(_))));
        assert!(volume_growth(&g, Window::new(5.0, 8.0), 8).is_ok());
    }

    #[test]
    fn line_fit_recovers_slope() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let (s, c) = fit_line(&x, &y);
        assert!((s - 2.0).abs() < 1e-15 && (c - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bad_exponent() {
        let g = grid(2, 4.0, 1.0, 2.0);
        assert!(matches!(weight_field(&g, 2.0), Err(Error::BadExponent { .. })));
        assert!(matches!(weight_field(&g, 0.5), Err(Error::BadExponent { .. })));
    }

    #[test]
    fn invalid_pairs_are_rows_not_errors() {
        let g = grid(2, 8.0, 0.5, 2.0);
        let rep = volume_growth(&g, Window::new(5.0, 8.0), 8).unwrap();
        let chk = check_reverse_doubling_pairs(&g, &rep, &[(7.0, 6.0), (6.0, 7.0)]);
        assert_eq!(chk.invalid_rows, vec![(7.0, 6.0)]);
        assert_eq!(chk.pairs_tested, 1);
    }

    #[test]
    fn weight_is_pi_on_the_plane() {
        let g = grid(2, 24.0, 0.25, 2.0);
        let w = weight_field(&g, 1.0).unwrap();
        let d = g.base_distances();
        for v in 0..g.len() {
            if d[v] >= 2.0 && d[v] <= 20.0 {
                let rel = w.weight[v] / std::f64::consts::PI - 1.0;
                assert!(rel.abs() < 0.10, "w = {} at d = {}", w.weight[v], d[v]);
            }
        }
    }

    #[test]
    fn ahlfors_bounds_the_p2_weight() {
        let g = grid(3, 6.0, 0.5, 3.0);
        let rep = volume_growth_with(&g, &GrowthOptions::new(Window::new(5.0, 6.0), 8)).unwrap();
        let (c_o, r_o) = rep.ahlfors.unwrap();
        let w = weight_field(&g, 2.0).unwrap();
        let d = g.base_distances();
        let cap = c_o.powf(2.0 / (3.0 - 2.0));
        for v in 0..g.len() {
            if d[v] <= r_o {
                assert!(w.weight[v] <= cap);
            }
        }
    }
}
