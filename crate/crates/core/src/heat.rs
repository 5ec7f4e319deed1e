//! The weighted Dirichlet form `Q(f) = Σ c_uv (f_u - f_v)²` paired with the
//! mass `μ`, the heat flow `μ ∂_t u = -L u` it generates, kernel columns and
//! the on-diagonal decay check.

use log::debug;
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsum::FSum;
use crate::growth::{fit_line, WeightedMeasure};
use crate::par;
use crate::space::{DiscreteSpace, ScalarField};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirichletFormAssembly {
    /// Per edge, in the order of `space.edges()`.
    pub conductances: Vec<f64>,
    pub mu: Vec<f64>,
    pub edges: Vec<(usize, usize)>,
    pub max_edge: f64,
    pub diameter: f64,
    #[serde(skip)]
    offsets: Vec<usize>,
    #[serde(skip)]
    arcs: Vec<(usize, f64)>,
    #[serde(skip)]
    diag: Vec<f64>,
}

/// `c_uv = (m_u + m_v)/(2ℓ²)` from the unweighted measure; `μ` only enters
/// through the mass pairing.
pub fn assemble_form(space: &DiscreteSpace, mu: &WeightedMeasure) -> DirichletFormAssembly {
    let m = space.measure();
    let conductances: Vec<f64> = space
        .edges()
        .iter()
        .map(|e| (m[e.a] + m[e.b]) / (2.0 * e.length * e.length))
        .collect();
    let edges = space.edges().iter().map(|e| (e.a, e.b)).collect();
    let mut offsets = Vec::with_capacity(space.len() + 1);
    let mut arcs = Vec::new();
    let mut diag = Vec::with_capacity(space.len());
    offsets.push(0);
    for v in 0..space.len() {
        let mut s = 0.0;
        for (w, _, k) in space.incident(v) {
            arcs.push((w, conductances[k]));
            s += conductances[k];
        }
        diag.push(s);
        offsets.push(arcs.len());
    }
    let far = farthest(&space.distances_from(space.base_point()));
    let diameter = space.distances_from(far).iter().copied().fold(0.0, f64::max);
    DirichletFormAssembly {
        conductances,
        mu: mu.mu.clone(),
        edges,
        max_edge: space.max_edge_length(),
        diameter,
        offsets,
        arcs,
        diag,
    }
}

fn farthest(d: &[f64]) -> usize {
    (0..d.len()).max_by(|&a, &b| d[a].total_cmp(&d[b]).then(b.cmp(&a))).unwrap_or(0)
}

impl DirichletFormAssembly {
    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn energy(&self, f: &[f64]) -> f64 {
        self.edges
            .iter()
            .zip(&self.conductances)
            .map(|(&(a, b), c)| c * (f[a] - f[b]).powi(2))
            .fsum()
    }

    /// `(L f)_v = Σ_w c_vw (f_v - f_w)`.
    pub fn apply(&self, f: &[f64], out: &mut [f64]) {
        par::fill(out, |v| {
            let arcs = &self.arcs[self.offsets[v]..self.offsets[v + 1]];
            arcs.iter().map(|&(w, c)| c * (f[v] - f[w])).sum()
        });
    }

    pub fn mass(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.mu).map(|(x, m)| x * m).fsum()
    }

    pub fn l1_norm(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.mu).map(|(x, m)| x.abs() * m).fsum()
    }

    pub fn l2_norm_sq(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.mu).map(|(x, m)| x * x * m).fsum()
    }

    /// Gershgorin bound on the spectrum of `μ^{-1} L`.
    pub fn spectral_bound(&self) -> f64 {
        self.diag.iter().zip(&self.mu).map(|(d, m)| 2.0 * d / m).fold(0.0, f64::max)
    }

    /// Reliable window `[10 h², (diam/4)²]`.
    pub fn reliable_window(&self) -> (f64, f64) {
        (10.0 * self.max_edge * self.max_edge, (self.diameter / 4.0).powi(2))
    }
}

/// Relative truncation level of the Chebyshev series.
const HEAT_TOL: f64 = 1e-15;

/// `e^{-z} I_k(z)` for `k = 0..`, cut where the tail of the series
/// `Σ_{j>K} 2 e^{-z} I_j(z)` falls below `tol`. Miller's backward recurrence,
/// normalized by `e^{-z}(I_0 + 2 Σ I_k) = 1`.
fn scaled_bessel_i(z: f64, tol: f64) -> Vec<f64> {
    let top = (z + 12.0 * z.sqrt() + 40.0).ceil() as usize;
    let mut vals = vec![0.0; top + 2];
    vals[top] = 1e-300;
    for k in (1..=top).rev() {
        vals[k - 1] = vals[k + 1] + (2.0 * k as f64 / z) * vals[k];
        if vals[k - 1] > 1e250 {
            vals.iter_mut().skip(k - 1).for_each(|v| *v *= 1e-250);
        }
    }
    let norm = vals[0] + 2.0 * vals[1..].iter().sum::<f64>();
    vals.iter_mut().for_each(|v| *v /= norm);
    let mut tail = 0.0;
    let mut cut = vals.len();
    for k in (1..vals.len()).rev() {
        tail += 2.0 * vals[k];
        if tail > tol {
            cut = k + 1;
            break;
        }
    }
    vals.truncate(cut.max(2));
    vals
}

/// `h_t f0 = e^{-t μ^{-1} L} f0` by its Chebyshev expansion on the Gershgorin
/// interval `[0, λ_max]`. With `z = t λ_max / 2` the coefficients are
/// `e^{-z} I_k(z)` up to sign; the operator is self-adjoint in `L²(μ)`, so the
/// truncation error is at most `HEAT_TOL ‖f0‖` in that norm.
pub fn heat_evolve(form: &DirichletFormAssembly, f0: &[f64], t: f64) -> Result<ScalarField> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("negative time {t}")));
    }
    let n = f0.len();
    if n != form.len() {
        return Err(Error::InvalidParameter(format!("field has {n} values, form has {}", form.len())));
    }
    if t == 0.0 || f0.iter().all(|&x| x == 0.0) {
        return Ok(ScalarField(f0.to_vec()));
    }
    let lambda = form.spectral_bound();
    let z = 0.5 * t * lambda;
    let coef = scaled_bessel_i(z, HEAT_TOL);
    // Y = (2/λ) μ^{-1} L - I has spectrum in [-1, 1] and
    // e^{-ts} = e^{-z} e^{-z y} = Σ c_k T_k(y), c_k = (2 - δ_k0)(-1)^k e^{-z} I_k(z)
    let scale: Vec<f64> = form.mu.iter().map(|m| 2.0 / (lambda * m)).collect();
    let mut lf = vec![0.0; n];
    let apply_y = |f: &[f64], lf: &mut Vec<f64>, out: &mut Vec<f64>| {
        form.apply(f, lf);
        for v in 0..n {
            out[v] = scale[v] * lf[v] - f[v];
        }
    };
    let mut prev = f0.to_vec();
    let mut cur = vec![0.0; n];
    apply_y(&prev, &mut lf, &mut cur);
    let mut acc: Vec<f64> = prev.iter().zip(&cur).map(|(a, b)| coef[0] * a - 2.0 * coef[1] * b).collect();
    let mut next = vec![0.0; n];
    for (k, c) in coef.iter().enumerate().skip(2) {
        apply_y(&cur, &mut lf, &mut next);
        let w = if k % 2 == 0 { 2.0 * c } else { -2.0 * c };
        for v in 0..n {
            next[v] = 2.0 * next[v] - prev[v];
            acc[v] += w * next[v];
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    debug!("heat flow over {t}: {} Chebyshev terms", coef.len());
    Ok(ScalarField(acc))
}

/// `p_t(x, ·) = h_t δ_x / μ_x`.
pub fn heat_kernel_column(form: &DirichletFormAssembly, x: usize, t: f64) -> Result<ScalarField> {
    if x >= form.len() {
        return Err(Error::InvalidVertex(x));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("kernel needs t > 0, got {t}")));
    }
    let mut delta = vec![0.0; form.len()];
    delta[x] = 1.0;
    let mut col = heat_evolve(form, &delta, t)?.into_inner();
    let mx = form.mu[x];
    col.iter_mut().for_each(|v| *v /= mx);
    Ok(ScalarField(col))
}

/// Exact `h_t` through the eigendecomposition of `μ^{-1/2} L μ^{-1/2}`; for
/// small spaces only.
pub struct DenseHeat {
    sqrt_mu: Vec<f64>,
    eig: SymmetricEigen<f64, nalgebra::Dyn>,
}

impl DenseHeat {
    pub fn new(form: &DirichletFormAssembly) -> Result<Self> {
        let n = form.len();
        if n > 2000 {
            return Err(Error::InvalidParameter(format!("dense heat oracle limited to 2000 vertices, got {n}")));
        }
        let s: Vec<f64> = form.mu.iter().map(|m| m.sqrt()).collect();
        let mut a = DMatrix::<f64>::zeros(n, n);
        for (&(u, v), &c) in form.edges.iter().zip(&form.conductances) {
            a[(u, u)] += c;
            a[(v, v)] += c;
            a[(u, v)] -= c;
            a[(v, u)] -= c;
        }
        let a = DMatrix::from_fn(n, n, |i, j| a[(i, j)] / (s[i] * s[j]));
        Ok(Self { sqrt_mu: s, eig: SymmetricEigen::new(a) })
    }

    pub fn evolve(&self, f: &[f64], t: f64) -> Vec<f64> {
        let n = f.len();
        let g = nalgebra::DVector::from_fn(n, |i, _| f[i] * self.sqrt_mu[i]);
        let q = &self.eig.eigenvectors;
        let mut coef = q.transpose() * g;
        for (c, l) in coef.iter_mut().zip(self.eig.eigenvalues.iter()) {
            *c *= (-t * l.max(0.0)).exp();
        }
        let y = q * coef;
        (0..n).map(|i| y[i] / self.sqrt_mu[i]).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiDiagnostic {
    /// Largest Nash ratio over the supplied family.
    #[serde(rename = "C_Na_family")]
    pub c_na_family: f64,
    /// Largest Nash ratio along the flow itself.
    #[serde(rename = "C_Na_flow")]
    pub c_na_flow: f64,
    /// The constant in the bound: the larger of the two.
    #[serde(rename = "C_Na")]
    pub c_na: f64,
    pub times: Vec<f64>,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    /// `ψ(t) - ψ(0) - 2t/C_Na`, required non-negative.
    pub margin: Vec<f64>,
    pub non_decreasing: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatDecayCurve {
    pub times: Vec<f64>,
    pub sup_diag: Vec<f64>,
    #[serde(rename = "fitted_C")]
    pub fitted_c: f64,
    pub fitted_exponent: f64,
    pub dimension_bound: f64,
    pub centers: Vec<usize>,
    pub window: (f64, f64),
    pub non_increasing: bool,
    pub psi: Option<PsiDiagnostic>,
}

impl HeatDecayCurve {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,sup_diag,fitted\n");
        for (t, p) in self.times.iter().zip(&self.sup_diag) {
            s.push_str(&format!("{t:?},{p:?},{:?}\n", self.fitted_c * t.powf(-self.dimension_bound / 2.0)));
        }
        s
    }
}

fn check_times(times: &[f64], window: (f64, f64)) -> Result<()> {
    if times.is_empty() {
        return Err(Error::WindowUnreliable("no sample times".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::WindowUnreliable("times must be strictly increasing".into()));
    }
    if times[0] < window.0 * (1.0 - 1e-12) || times[times.len() - 1] > window.1 * (1.0 + 1e-12) {
        return Err(Error::WindowUnreliable(format!(
            "times [{}, {}] leave the reliable window [{}, {}]",
            times[0],
            times[times.len() - 1],
            window.0,
            window.1
        )));
    }
    Ok(())
}

/// `sup_x p_t(x,x)` over `centers` at each time, with the log-log slope and
/// `max sup_diag·t^{N/2}`.
pub fn verify_kernel_bound(
    form: &DirichletFormAssembly,
    times: &[f64],
    centers: &[usize],
    dimension_bound: f64,
) -> Result<HeatDecayCurve> {
    verify_kernel_bound_within(form, times, centers, dimension_bound, form.reliable_window())
}

/// As [`verify_kernel_bound`] with an explicit time window in place of the
/// default `[10 h², (diam/4)²]`.
pub fn verify_kernel_bound_within(
    form: &DirichletFormAssembly,
    times: &[f64],
    centers: &[usize],
    dimension_bound: f64,
    window: (f64, f64),
) -> Result<HeatDecayCurve> {
    if !(window.0 > 0.0 && window.0 < window.1) {
        return Err(Error::WindowUnreliable(format!("time window [{}, {}] is empty", window.0, window.1)));
    }
    check_times(times, window)?;
    if let Some(&c) = centers.iter().find(|&&c| c >= form.len()) {
        return Err(Error::InvalidVertex(c));
    }
    let diag_rows = par::try_map(centers, |&x| {
        let mut u = vec![0.0; form.len()];
        u[x] = 1.0 / form.mu[x];
        let mut now = 0.0;
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            u = heat_evolve(form, &u, t - now)?.into_inner();
            now = t;
            out.push(u[x]);
        }
        Ok::<_, Error>(out)
    })?;
    let sup_diag: Vec<f64> = (0..times.len())
        .map(|k| diag_rows.iter().map(|r| r[k]).fold(0.0, f64::max))
        .collect();
    let lx: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = sup_diag.iter().map(|p| p.ln()).collect();
    let (slope, _) = if times.len() > 1 { fit_line(&lx, &ly) } else { (f64::NAN, 0.0) };
    let fitted_c = times
        .iter()
        .zip(&sup_diag)
        .map(|(t, p)| p * t.powf(dimension_bound / 2.0))
        .fold(0.0, f64::max);
    let non_increasing = sup_diag.windows(2).all(|w| w[1] <= w[0]);
    Ok(HeatDecayCurve {
        times: times.to_vec(),
        sup_diag,
        fitted_c,
        fitted_exponent: slope,
        dimension_bound,
        centers: centers.to_vec(),
        window,
        non_increasing,
        psi: None,
    })
}

/// `‖v‖₂^{2+4/N} / (‖v‖₁^{4/N} Q(v))`.
pub fn nash_ratio(form: &DirichletFormAssembly, v: &[f64], n: f64) -> f64 {
    let lhs = form.l2_norm_sq(v).powf(1.0 + 2.0 / n);
    let rhs = form.l1_norm(v).powf(4.0 / n) * form.energy(v);
    if lhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

/// Along `h_t u` with `u` normalized to unit `L¹(μ)` mass: `φ = ‖h_t u‖²`,
/// `ψ = (N/2) φ^{-2/N}`, and the lower bound `ψ(t) - ψ(0) >= 2t/C_Na`.
///
/// Since `ψ' = 2/R(h_t u)` with `R` the Nash ratio, the bound needs `C_Na`
/// to dominate `R` along the flow as well as on the family; the flow is
/// sampled four times between consecutive times for that.
pub fn psi_diagnostic(
    form: &DirichletFormAssembly,
    u: &[f64],
    times: &[f64],
    dimension_bound: f64,
    c_na_family: f64,
) -> Result<PsiDiagnostic> {
    let l1 = form.l1_norm(u);
    if !(l1 > 0.0) {
        return Err(Error::DegenerateFamily);
    }
    if times.is_empty() || times[0] <= 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("psi times must be positive and increasing".into()));
    }
    let n = dimension_bound;
    let mut state: Vec<f64> = u.iter().map(|x| x / l1).collect();
    let psi_of = |phi: f64| 0.5 * n * phi.powf(-2.0 / n);
    let psi0 = psi_of(form.l2_norm_sq(&state));
    let mut c_na_flow = nash_ratio(form, &state, n);
    let mut now = 0.0;
    let (mut phi, mut psi) = (vec![], vec![]);
    for &t in times {
        let start = if now == 0.0 { t / 16.0 } else { now };
        for k in 1..=4 {
            let target = if now == 0.0 && k == 1 { start } else { start * (t / start).powf(k as f64 / 4.0) };
            state = heat_evolve(form, &state, target - now)?.into_inner();
            now = target;
            c_na_flow = c_na_flow.max(nash_ratio(form, &state, n));
        }
        let ph = form.l2_norm_sq(&state);
        phi.push(ph);
        psi.push(psi_of(ph));
    }
    let c_na = c_na_family.max(c_na_flow);
    let margin: Vec<f64> = psi.iter().zip(times).map(|(p, t)| p - psi0 - 2.0 * t / c_na).collect();
    // equal up to round-off once the flow has settled
    let slack = |a: f64| 1e-12 * a.abs();
    let non_decreasing = psi.windows(2).all(|w| w[1] >= w[0] - slack(w[0])) && psi[0] >= psi0 - slack(psi0);
    let pass = non_decreasing && margin.iter().all(|&m| m >= 0.0);
    Ok(PsiDiagnostic { c_na_family, c_na_flow, c_na, times: times.to_vec(), phi, psi, margin, non_decreasing, pass })
}
