//! Local Sobolev-Neumann constants, the patching constant, and the checks of
//! the patched, weighted Sobolev and weighted Nash inequalities on a family
//! of test functions.

use serde::{Deserialize, Serialize};

use crate::covering::GoodCovering;
use crate::error::{Error, Result};
use crate::fsum::FSum;
use crate::family::TestFunction;
use crate::graph::CoveringGraph;
use crate::growth::{radial_weight, sobolev_conjugate, GrowthReport, WeightedMeasure};
use crate::heat::DirichletFormAssembly;
use crate::par;
use crate::space::{DiscreteSpace, VertexSubset};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityKind {
    Patching,
    PatchingNeumann,
    WeightedSobolev,
    Nash,
    LocalSobolev,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

impl Row {
    pub fn new(label: &str, lhs: f64, rhs: f64) -> Self {
        let ratio = if lhs == 0.0 {
            0.0
        } else if rhs == 0.0 {
            f64::INFINITY
        } else {
            lhs / rhs
        };
        Self { label: label.to_string(), lhs, rhs, ratio }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub inequality: InequalityKind,
    pub rows: Vec<Row>,
    pub constant_used: f64,
    pub max_ratio: f64,
    /// Named constants that went into `constant_used`.
    pub constants: Vec<(String, f64)>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub pass: bool,
}

impl VerificationReport {
    fn assemble(inequality: InequalityKind, rows: Vec<Row>, constant_used: f64) -> Self {
        let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
        let mut r = Self {
            inequality,
            rows,
            constant_used,
            max_ratio,
            constants: Vec::new(),
            checks: Vec::new(),
            notes: Vec::new(),
            pass: false,
        };
        r.refresh();
        r
    }

    fn refresh(&mut self) {
        let c = self.constant_used;
        self.pass = self.rows.iter().all(|r| r.lhs <= c * r.rhs) && self.checks.iter().all(|k| k.pass);
    }

    fn check(&mut self, name: &str, value: f64, bound: f64, pass: bool) {
        self.checks.push(Check { name: name.into(), value, bound, pass });
        self.refresh();
    }

    pub fn rows_csv(&self) -> String {
        let mut s = String::from("label,lhs,rhs,ratio\n");
        for r in &self.rows {
            s.push_str(&format!("{},{:?},{:?},{:?}\n", r.label, r.lhs, r.rhs, r.ratio));
        }
        s
    }
}

/// `C = [2^{q-1} S_c^q Q1^{q/p} + 2^{q-1} 2^q S_d^q Q2 S_c^q Q1^{3q/p}]^{1/q}`.
pub fn patch_constant(p: f64, q: f64, q1: f64, q2: f64, s_c: f64, s_d: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("p must be at least 1, got {p}")));
    }
    if q < p {
        return Err(Error::BadOrder { p, q });
    }
    for (name, v) in [("Q1", q1), ("Q2", q2), ("S_c", s_c), ("S_d", s_d)] {
        if !(v > 0.0) {
            return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
        }
    }
    let split = 2f64.powf(q - 1.0);
    let local = split * s_c.powf(q) * q1.powf(q / p);
    let discrete = split * 2f64.powf(q) * s_d.powf(q) * q2 * s_c.powf(q) * q1.powf(3.0 * q / p);
    Ok((local + discrete).powf(1.0 / q))
}

fn integral_pow(set: &VertexSubset, f: &[f64], m: &[f64], q: f64) -> f64 {
    set.iter().map(|&v| f[v].abs().powf(q) * m[v]).fsum()
}

fn mean(set: &VertexSubset, f: &[f64], m: &[f64]) -> f64 {
    let mass = set.iter().map(|&v| m[v]).fsum();
    set.iter().map(|&v| f[v] * m[v]).fsum() / mass
}

fn centered_norm(set: &VertexSubset, f: &[f64], m: &[f64], q: f64) -> f64 {
    let c = mean(set, f, m);
    set.iter().map(|&v| (f[v] - c).abs().powf(q) * m[v]).fsum().powf(1.0 / q)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PieceRatios {
    pub piece: usize,
    pub level: usize,
    pub index: usize,
    /// `U` against `U*`.
    pub inner: f64,
    /// `U*` against `U#`.
    pub outer: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalNeumannConstants {
    #[serde(rename = "S_c")]
    pub s_c: f64,
    pub per_piece: Vec<PieceRatios>,
    /// Pieces where every gradient side vanished.
    pub skipped: Vec<usize>,
    pub p: f64,
    pub q: f64,
}

/// Largest measured ratio of `(∫_U |u - {u}_U|^q dm2)^{1/q}` to
/// `(∫_{U*} g^p dm1)^{1/p}` over pieces and family, and the same one level up.
pub fn local_neumann_constants(
    cov: &GoodCovering,
    m1: &[f64],
    m2: &[f64],
    p: f64,
    q: f64,
    family: &[TestFunction],
) -> Result<LocalNeumannConstants> {
    if q < p {
        return Err(Error::BadOrder { p, q });
    }
    let per_member: Vec<Vec<(f64, f64, bool)>> = par::map(family, |f| {
        cov.pieces
            .iter()
            .map(|pc| {
                let a_rhs = integral_pow(&pc.u_star, &f.g, m1, p).powf(1.0 / p);
                let b_rhs = integral_pow(&pc.u_sharp, &f.g, m1, p).powf(1.0 / p);
                let a = Row::new("", centered_norm(&pc.u, &f.u, m2, q), a_rhs).ratio;
                let b = Row::new("", centered_norm(&pc.u_star, &f.u, m2, q), b_rhs).ratio;
                (a, b, a_rhs > 0.0 || b_rhs > 0.0)
            })
            .collect()
    });
    let mut per_piece = Vec::new();
    let mut skipped = Vec::new();
    for (k, pc) in cov.pieces.iter().enumerate() {
        let live = per_member.iter().any(|r| r[k].2);
        if !live {
            skipped.push(k);
            continue;
        }
        let inner = per_member.iter().map(|r| r[k].0).fold(0.0, f64::max);
        let outer = per_member.iter().map(|r| r[k].1).fold(0.0, f64::max);
        per_piece.push(PieceRatios { piece: k, level: pc.level, index: pc.index, inner, outer });
    }
    if per_piece.is_empty() {
        return Err(Error::DegenerateFamily);
    }
    let s_c = per_piece.iter().map(|r| r.inner.max(r.outer)).fold(0.0, f64::max);
    if !(s_c > 0.0) {
        return Err(Error::DegenerateFamily);
    }
    Ok(LocalNeumannConstants { s_c, per_piece, skipped, p, q })
}

/// Measured inputs of the patching chain.
#[derive(Clone, Debug)]
pub struct PatchInputs<'a> {
    pub cov: &'a GoodCovering,
    pub graph: &'a CoveringGraph,
    pub m1: &'a [f64],
    pub m2: &'a [f64],
    pub p: f64,
    pub q: f64,
    pub s_c: f64,
    pub s_d: f64,
}

/// `m2`-means of `u` on every `U_i`.
pub fn block_means(cov: &GoodCovering, u: &[f64], m2: &[f64]) -> Vec<f64> {
    cov.pieces.iter().map(|pc| mean(&pc.u, u, m2)).collect()
}

/// Evaluates both sides of the patched inequality for each member. In the
/// Dirichlet form every member must vanish on the boundary pieces; in the
/// Neumann form the `m2`-mean over `A` is subtracted and the constant
/// doubles. `S_d` is raised to the largest discrete ratio seen on the block
/// means when that exceeds the measured value.
pub fn verify_patching(inputs: &PatchInputs, family: &[TestFunction], neumann: bool) -> Result<VerificationReport> {
    let PatchInputs { cov, graph, m1, m2, p, q, s_c, s_d } = *inputs;
    if q < p {
        return Err(Error::BadOrder { p, q });
    }
    let sharp = VertexSubset::union_all(cov.pieces.iter().map(|pc| &pc.u_sharp));
    let a = VertexSubset::union_all(cov.pieces.iter().map(|pc| &pc.u));
    let n = m2.len();
    let mut in_sharp = vec![false; n];
    for &v in sharp.iter() {
        in_sharp[v] = true;
    }
    let mut observed: f64 = 0.0;
    for f in family {
        if let Some(v) = (0..n).find(|&v| !in_sharp[v] && f.u[v] != 0.0) {
            return Err(Error::OutsideCover { label: f.label.clone(), vertex: v });
        }
        let means = block_means(cov, &f.u, m2);
        if !neumann {
            if let Some(&b) = graph.boundary.iter().find(|&&b| cov.pieces[b].u.iter().any(|&v| f.u[v] != 0.0)) {
                return Err(Error::SupportViolation { label: f.label.clone(), piece: b });
            }
        }
        let r = if neumann { graph.neumann_ratio(&means, q) } else { graph.dirichlet_ratio(&means, q) };
        if r.is_finite() {
            observed = observed.max(r);
        } else if r.is_infinite() {
            observed = f64::INFINITY;
        }
    }
    let s_d_used = s_d.max(observed);
    let base = patch_constant(p, q, cov.q1 as f64, cov.q2, s_c, s_d_used)?;
    let constant = if neumann { 2.0 * base } else { base };
    let rows = par::map(family, |f| {
        let lhs = if neumann {
            centered_norm(&a, &f.u, m2, q)
        } else {
            integral_pow(&a, &f.u, m2, q).powf(1.0 / q)
        };
        let rhs = integral_pow(&sharp, &f.g, m1, p).powf(1.0 / p);
        Row::new(&f.label, lhs, rhs)
    });
    let kind = if neumann { InequalityKind::PatchingNeumann } else { InequalityKind::Patching };
    let mut report = VerificationReport::assemble(kind, rows, constant);
    report.constants = vec![
        ("Q1".into(), cov.q1 as f64),
        ("Q2".into(), cov.q2),
        ("S_c".into(), s_c),
        ("S_d".into(), s_d_used),
        ("S_d_measured".into(), s_d),
        ("S_d_observed".into(), observed),
        ("C".into(), constant),
    ];
    if s_d_used > s_d {
        report.notes.push(format!("S_d raised from {s_d} to the observed block-mean ratio {observed}"));
    }
    Ok(report)
}

fn scale_stability(report: &mut VerificationReport, prefix: &str) {
    let ratios: Vec<f64> = report
        .rows
        .iter()
        .filter(|r| r.label.starts_with(prefix))
        .map(|r| r.ratio)
        .collect();
    if ratios.len() >= 2 {
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().copied().fold(0.0, f64::max);
        let spread = hi / lo;
        report.check("scale_stability", spread, 2.0, lo > 0.0 && spread <= 2.0);
    }
}

/// Rows of `(∫|u|^{p*} dμ)^{1/p*}` against `(∫ g^p dm)^{1/p}`. The constant
/// is the largest ratio; the check is that radial bumps of different radii
/// give ratios within a factor 2.
pub fn verify_weighted_sobolev(
    space: &DiscreteSpace,
    growth: &GrowthReport,
    mu: &WeightedMeasure,
    family: &[TestFunction],
) -> Result<VerificationReport> {
    let p = mu.p;
    if p >= growth.eta {
        return Err(Error::ExponentOutOfRange { p, eta: growth.eta });
    }
    let q = mu.p_star;
    let m = space.measure();
    let rows = par::map(family, |f| {
        let lhs = f.u.iter().zip(&mu.mu).map(|(x, w)| x.abs().powf(q) * w).fsum().powf(1.0 / q);
        let rhs = f.g.iter().zip(m).map(|(x, w)| x.powf(p) * w).fsum().powf(1.0 / p);
        Row::new(&f.label, lhs, rhs)
    });
    let mut report = VerificationReport::assemble(InequalityKind::WeightedSobolev, rows, 0.0);
    report.constant_used = report.max_ratio;
    report.constants = vec![("p".into(), p), ("p_star".into(), q), ("eta".into(), growth.eta), ("C_hat".into(), report.max_ratio)];
    report.check("finite_constant", report.max_ratio, f64::INFINITY, report.max_ratio.is_finite() && report.max_ratio > 0.0);
    scale_stability(&mut report, "bump:");
    Ok(report)
}

/// `θ = 2/(N+2)`.
pub fn nash_theta(n: f64) -> f64 {
    2.0 / (n + 2.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderRow {
    pub label: String,
    pub l2: f64,
    pub bound: f64,
    pub defect: f64,
}

/// Nash rows `‖u‖₂^{2+4/N}` against `‖u‖₁^{4/N} Q(u)` in `L^r(μ)`, and the
/// interpolation rows `‖u‖₂ <= ‖u‖₁^θ ‖u‖_{2*}^{1-θ}`.
pub fn nash_rows(form: &DirichletFormAssembly, n: f64, family: &[TestFunction]) -> (Vec<Row>, Vec<HolderRow>) {
    let theta = nash_theta(n);
    let two_star = if n > 2.0 { 2.0 * n / (n - 2.0) } else { f64::INFINITY };
    let out = par::map(family, |f| {
        let u = &f.u;
        let l1 = form.l1_norm(u);
        let l2 = form.l2_norm_sq(u).sqrt();
        let top = if two_star.is_finite() {
            u.iter().zip(&form.mu).map(|(x, m)| x.abs().powf(two_star) * m).fsum().powf(1.0 / two_star)
        } else {
            u.iter().map(|x| x.abs()).fold(0.0, f64::max)
        };
        let lhs = l2.powf(2.0 + 4.0 / n);
        let rhs = l1.powf(4.0 / n) * form.energy(u);
        let bound = l1.powf(theta) * top.powf(1.0 - theta);
        (
            Row::new(&f.label, lhs, rhs),
            HolderRow { label: f.label.clone(), l2, bound, defect: bound - l2 },
        )
    });
    out.into_iter().unzip()
}

/// Weighted Nash check. `sobolev_constant` is `Ĉ` of the `p = 2` weighted
/// Sobolev inequality on the same family; Hölder and that inequality give
/// `C_Na <= 2Ĉ²` (the factor 2 compares `∫g²` with `Q`), checked against `4Ĉ²`.
pub fn verify_nash(
    growth: &GrowthReport,
    form: &DirichletFormAssembly,
    n: f64,
    family: &[TestFunction],
    sobolev_constant: Option<f64>,
) -> Result<VerificationReport> {
    if !(growth.eta > 2.0) || !(n > 2.0) {
        return Err(Error::EtaTooSmall { eta: growth.eta, n });
    }
    let (rows, holder) = nash_rows(form, n, family);
    let mut report = VerificationReport::assemble(InequalityKind::Nash, rows, 0.0);
    report.constant_used = report.max_ratio;
    let theta = nash_theta(n);
    report.constants = vec![("N".into(), n), ("theta".into(), theta), ("C_Na".into(), report.max_ratio)];
    let worst = holder.iter().map(|h| h.defect).fold(f64::INFINITY, f64::min);
    report.check("holder_interpolation", worst, 0.0, holder.iter().all(|h| h.l2 <= h.bound));
    report.check("theta_exponent", theta * (2.0 + 4.0 / n), 4.0 / n, theta * (2.0 + 4.0 / n) == 4.0 / n);
    if let Some(c) = sobolev_constant {
        let derived = c * c;
        report.constants.push(("C_sobolev".into(), c));
        report.check("derived_route", report.max_ratio, 4.0 * derived, report.max_ratio <= 4.0 * derived);
    }
    report.refresh();
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step3Row {
    pub r: f64,
    /// `w̄_o(r) r^{p*} V(o,r)^{-p*/N}`.
    pub cancelled: f64,
    /// `w̄_o(r) (r^p V(o,r)^{-p/N})^{p*}`.
    pub as_printed: f64,
}

/// Weight cancellation across the covering radii: with the `r V^{-1/N}`
/// scaling the product is identically one, with `r^p V^{-p/N}` it drifts
/// as soon as `p > 1`.
pub fn step3_diagnostic(space: &DiscreteSpace, radii: &[f64], p: f64) -> Vec<Step3Row> {
    let n = space.dimension_bound();
    let ps = sobolev_conjugate(p, n);
    radii
        .iter()
        .map(|&r| {
            let w = radial_weight(space, p, r);
            let v = space.radial_profile().volume_closed(r);
            Step3Row {
                r,
                cancelled: w * r.powf(ps) * v.powf(-ps / n),
                as_printed: w * (r.powf(p) * v.powf(-p / n)).powf(ps),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covering::{build_good_covering_with, CoveringOptions};
    use crate::family::{build_family, FamilySpec};
    use crate::graph::{canonical_graph, poincare_constant, poincare_neumann_gap};
    use crate::growth::{volume_growth, weight_field, Window};
    use crate::models::{build_space, euclidean_grid};

    #[test]
    fn unit_patch_constant_is_three() {
        assert_eq!(patch_constant(1.0, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap(), 3.0);
        assert!(matches!(patch_constant(2.0, 1.0, 1.0, 1.0, 1.0, 1.0), Err(Error::BadOrder { .. })));
    }

    #[test]
    fn patch_constant_is_monotone() {
        let base = [1.5, 1.7, 3.0, 2.0, 0.8, 1.3];
        let c0 = patch_constant(base[0], base[1], base[2], base[3], base[4], base[5]).unwrap();
        for k in 2..6 {
            let mut b = base;
            b[k] *= 1.5;
            assert!(patch_constant(b[0], b[1], b[2], b[3], b[4], b[5]).unwrap() >= c0);
        }
    }

    #[test]
    fn theta_for_two() {
        assert_eq!(nash_theta(2.0), 0.5);
        assert_eq!(nash_theta(3.0), 0.4);
    }

    fn plane() -> DiscreteSpace {
        build_space(&euclidean_grid(2, 16.0, 0.5, 2.0).unwrap()).unwrap()
    }

    #[test]
    fn patching_holds_on_a_small_plane() {
        let s = plane();
        let g = volume_growth(&s, Window::new(5.0, 14.0), 8).unwrap();
        let mu = weight_field(&s, 1.0).unwrap();
        let opts = CoveringOptions { threshold_a: Some(1.0), ..Default::default() };
        let cov = build_good_covering_with(&s, 2.0, &mu.mu, &opts).unwrap();
        let graph = canonical_graph(&s, &cov, &mu.mu).unwrap();
        let reach = cov.radii[cov.radii.len() - 2];
        let fam = build_family(&s, &[FamilySpec::RandomSmooth { count: 20 }, FamilySpec::IndicatorSmoothings { count: 5 }], 3, Some(reach));
        let q = mu.p_star;
        let local = local_neumann_constants(&cov, s.measure(), &mu.mu, 1.0, q, &fam).unwrap();
        let sd = poincare_constant(&graph, q).unwrap().s_d;
        let inputs = PatchInputs { cov: &cov, graph: &graph, m1: s.measure(), m2: &mu.mu, p: 1.0, q, s_c: local.s_c, s_d: sd };
        let rep = verify_patching(&inputs, &fam, false).unwrap();
        assert!(rep.pass, "{:?}", rep.max_ratio);
        let sdn = poincare_neumann_gap(&graph, q).unwrap().s_d;
        let rep = verify_patching(&PatchInputs { s_d: sdn, ..inputs.clone() }, &fam, true).unwrap();
        assert!(rep.pass);
        let sob = verify_weighted_sobolev(&s, &g, &mu, &fam).unwrap();
        assert!(sob.max_ratio.is_finite());
    }

    #[test]
    fn homogeneous_ratios_and_trivial_rows() {
        let s = plane();
        let g = volume_growth(&s, Window::new(5.0, 14.0), 8).unwrap();
        let mu = weight_field(&s, 1.0).unwrap();
        let fam = build_family(&s, &[FamilySpec::RandomSmooth { count: 5 }], 1, None);
        let scaled: Vec<TestFunction> = fam.iter().map(|f| f.scaled(-3.7)).collect();
        let a = verify_weighted_sobolev(&s, &g, &mu, &fam).unwrap();
        let b = verify_weighted_sobolev(&s, &g, &mu, &scaled).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert!((x.ratio - y.ratio).abs() <= 1e-12 * x.ratio);
        }
        let zero = TestFunction::new(&s, "zero".into(), vec![0.0; s.len()]);
        let z = verify_weighted_sobolev(&s, &g, &mu, &[zero]).unwrap();
        assert_eq!(z.rows[0].ratio, 0.0);
        assert!(matches!(
            verify_weighted_sobolev(&s, &GrowthReport { eta: 1.0, ..g }, &mu, &fam),
            Err(Error::ExponentOutOfRange { .. })
        ));
    }

    #[test]
    fn constant_piece_has_zero_local_ratio() {
        let s = plane();
        let mu = weight_field(&s, 1.0).unwrap();
        let opts = CoveringOptions { threshold_a: Some(1.0), ..Default::default() };
        let cov = build_good_covering_with(&s, 2.0, &mu.mu, &opts).unwrap();
        let piece = &cov.pieces[1];
        let mut u = vec![0.0; s.len()];
        for &v in piece.u_sharp.iter() {
            u[v] = 2.0;
        }
        let f = TestFunction::new(&s, "flat".into(), u);
        assert_eq!(centered_norm(&piece.u, &f.u, &mu.mu, 2.0), 0.0);
        assert!(matches!(
            local_neumann_constants(&cov, s.measure(), &mu.mu, 1.0, 2.0, std::slice::from_ref(&f)),
            Err(Error::DegenerateFamily)
        ));
        let ramp: Vec<f64> = s.base_distances().iter().map(|d| (6.0 - d).max(0.0)).collect();
        let fam = [f, TestFunction::new(&s, "ramp".into(), ramp)];
        let r = local_neumann_constants(&cov, s.measure(), &mu.mu, 1.0, 2.0, &fam).unwrap();
        assert!(r.s_c > 0.0);
    }

    #[test]
    fn step3_cancels() {
        let s = plane();
        for row in step3_diagnostic(&s, &[2.0, 4.0, 8.0], 1.5) {
            assert!((row.cancelled - 1.0).abs() < 1e-12);
        }
    }
}
