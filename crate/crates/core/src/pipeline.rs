//! Stage orchestration and report assembly for the command-line front end.
//! Reports are built in memory as deterministic JSON and CSV text.

use std::collections::BTreeMap;
use std::path::Path;

use log::info;
use serde::Serialize;

use crate::config::{KappaChoice, RunConfig};
use crate::covering::{build_good_covering_with, kappa_search, validate_good_covering, CoveringOptions, CoveringValidation, GoodCovering, KappaSearch};
use crate::error::{Error, Result};
use crate::family::{build_family, FamilySpec, TestFunction};
use crate::graph::{
    canonical_graph, isoperimetric_constant, poincare_constant, poincare_neumann_gap, structure_checks, CoveringGraph,
    IsoperimetricResult, PoincareResult, SetFamily, StructureReport,
};
use crate::growth::{check_reverse_doubling, volume_growth_with, weight_field, GrowthOptions, GrowthReport, ReverseDoublingCheck, WeightedMeasure, Window};
use crate::heat::{assemble_form, psi_diagnostic, verify_kernel_bound_within, DirichletFormAssembly, HeatDecayCurve};
use crate::inequality::{
    local_neumann_constants, nash_rows, step3_diagnostic, verify_nash, verify_patching, verify_weighted_sobolev, Check,
    LocalNeumannConstants, PatchInputs, Step3Row, VerificationReport,
};
use crate::models::build_space;
use crate::space::{io, DiscreteSpace};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    BuildSpace,
    Growth,
    Covering,
    Poincare,
    VerifySobolev,
    VerifyNash,
    HeatBound,
    FullPipeline,
}

/// Report files (name, contents) and the pass flags they carry.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub files: Vec<(String, String)>,
    pub flags: Vec<(String, bool)>,
}

impl Outcome {
    pub fn all_pass(&self) -> bool {
        self.flags.iter().all(|f| f.1)
    }

    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|f| f.0 == name).map(|f| f.1.as_str())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, body) in &self.files {
            std::fs::write(dir.join(name), body)?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    config_hash: &'a str,
    seed: u64,
    stage: &'a str,
    theorem: &'a str,
    constants: &'a BTreeMap<String, f64>,
    pass: bool,
    report: &'a T,
}

#[derive(Serialize)]
pub struct SpaceSummary {
    pub vertices: usize,
    pub edges: usize,
    pub base_point: usize,
    pub dimension_bound: f64,
    pub total_measure: f64,
    pub min_edge: f64,
    pub max_edge: f64,
    pub eccentricity: f64,
    pub inner_radius: f64,
}

#[derive(Serialize)]
pub struct GrowthStage {
    pub growth: GrowthReport,
    pub reverse_doubling: ReverseDoublingCheck,
}

#[derive(Serialize)]
pub struct PieceSummary {
    pub level: usize,
    pub index: usize,
    pub size: [usize; 3],
    pub m2: [f64; 3],
}

#[derive(Serialize)]
pub struct CoveringStage {
    pub kappa: f64,
    pub kappa_search: Option<KappaSearch>,
    pub radii: Vec<f64>,
    pub pieces: Vec<PieceSummary>,
    pub gluing: usize,
    pub validation: CoveringValidation,
    pub max_components_per_annulus: usize,
    pub component_bound: f64,
    pub structure: StructureReport,
}

#[derive(Serialize)]
pub struct PoincareStage {
    pub q: f64,
    pub dirichlet: PoincareResult,
    pub neumann: PoincareResult,
    pub isoperimetric: IsoperimetricResult,
    pub graph: CoveringGraph,
}

#[derive(Serialize)]
pub struct PatchingStage {
    pub local: LocalNeumannConstants,
    pub dirichlet: VerificationReport,
    pub neumann: VerificationReport,
}

#[derive(Serialize)]
pub struct SobolevStage {
    pub weight_base_rule: String,
    pub sobolev: VerificationReport,
    pub step3: Vec<Step3Row>,
    pub step3_note: &'static str,
}

#[derive(Serialize)]
pub struct NashStage {
    pub skipped: Option<String>,
    pub sobolev_p2: Option<VerificationReport>,
    pub nash: Option<VerificationReport>,
}

#[derive(Serialize)]
pub struct HeatStage {
    pub weight: &'static str,
    pub curve: HeatDecayCurve,
    pub checks: Vec<Check>,
}

const STEP3_NOTE: &str = "local Sobolev scaling taken as r V(o,r)^{-1/N}; the r^p V(o,r)^{-p/N} form does not cancel the weight for p > 1";

/// Lazily computed stage results shared across one run.
pub struct Pipeline {
    pub cfg: RunConfig,
    hash: String,
    constants: BTreeMap<String, f64>,
    space: Option<DiscreteSpace>,
    growth: Option<GrowthReport>,
    mu: Option<WeightedMeasure>,
    covering: Option<(GoodCovering, CoveringGraph)>,
    s_d: Option<(f64, f64)>,
    family: Option<Vec<TestFunction>>,
    sobolev_family: Option<Vec<TestFunction>>,
    out: Outcome,
}

impl Pipeline {
    pub fn new(cfg: RunConfig) -> Self {
        let hash = cfg.hash();
        Self {
            cfg,
            hash,
            constants: BTreeMap::new(),
            space: None,
            growth: None,
            mu: None,
            covering: None,
            s_d: None,
            family: None,
            sobolev_family: None,
            out: Outcome::default(),
        }
    }

    pub fn run(self, stage: Stage) -> Result<Outcome> {
        self.run_stages(&[stage])
    }

    /// Runs several stages against one cached space, covering and family.
    pub fn run_stages(mut self, stages: &[Stage]) -> Result<Outcome> {
        for &stage in stages {
            self.stage(stage)?;
        }
        Ok(self.out)
    }

    fn stage(&mut self, stage: Stage) -> Result<()> {
        match stage {
            Stage::BuildSpace => self.stage_space(),
            Stage::Growth => self.stage_growth(),
            Stage::Covering => self.stage_covering(),
            Stage::Poincare => self.stage_poincare(),
            Stage::VerifySobolev => self.stage_sobolev(),
            Stage::VerifyNash => self.stage_nash(false),
            Stage::HeatBound => self.stage_heat(),
            Stage::FullPipeline => {
                self.stage_space()?;
                self.stage_growth()?;
                self.stage_covering()?;
                self.stage_poincare()?;
                self.stage_sobolev()?;
                self.stage_nash(true)?;
                self.stage_heat()?;
                let flags: BTreeMap<String, bool> = self.out.flags.iter().cloned().collect();
                let all = self.out.all_pass();
                self.emit("summary.json", "summary", "all stages", all, &flags)
            }
        }
    }

    fn emit<T: Serialize>(&mut self, file: &str, stage: &str, theorem: &str, pass: bool, report: &T) -> Result<()> {
        let env = Envelope {
            tool: "sobolab",
            version: env!("CARGO_PKG_VERSION"),
            config_hash: &self.hash,
            seed: self.cfg.seed,
            stage,
            theorem,
            constants: &self.constants,
            pass,
            report,
        };
        let mut body = serde_json::to_string_pretty(&env)?;
        body.push('\n');
        self.out.files.push((file.to_string(), body));
        if stage != "summary" {
            self.out.flags.push((stage.to_string(), pass));
        }
        Ok(())
    }

    fn space(&mut self) -> Result<&DiscreteSpace> {
        if self.space.is_none() {
            let s = build_space(&self.cfg.space)?;
            info!("space: {} vertices, {} edges", s.len(), s.edges().len());
            self.space = Some(s);
        }
        Ok(self.space.as_ref().unwrap())
    }

    fn growth(&mut self) -> Result<GrowthReport> {
        if self.growth.is_none() {
            let (window, samples, centers, seed, a) =
                (self.cfg.window, self.cfg.window_samples, self.cfg.growth_centers, self.cfg.seed, self.cfg.threshold_a);
            let space = self.space()?;
            let window = match window {
                Some((lo, hi)) => Window::new(lo, hi),
                None => Window::new(10.0 * space.min_edge_length(), 0.5 * space.inner_radius()),
            };
            let opts = GrowthOptions { window, samples, centers, seed, threshold_a: a };
            let g = volume_growth_with(space, &opts)?;
            self.constants.insert("eta".into(), g.eta);
            self.constants.insert("C_RD".into(), g.c_rd);
            self.constants.insert("C_D_hat".into(), g.c_d_hat);
            self.growth = Some(g);
        }
        Ok(self.growth.clone().unwrap())
    }

    fn mu(&mut self) -> Result<WeightedMeasure> {
        if self.mu.is_none() {
            let p = self.cfg.p;
            let mu = weight_field(self.space()?, p)?;
            self.mu = Some(mu);
        }
        Ok(self.mu.clone().unwrap())
    }

    fn q(&mut self) -> Result<f64> {
        let p_star = self.mu()?.p_star;
        Ok(self.cfg.q.unwrap_or(p_star))
    }

    fn stage_space(&mut self) -> Result<()> {
        let s = self.space()?;
        let summary = SpaceSummary {
            vertices: s.len(),
            edges: s.edges().len(),
            base_point: s.base_point(),
            dimension_bound: s.dimension_bound(),
            total_measure: s.total_measure(),
            min_edge: s.min_edge_length(),
            max_edge: s.max_edge_length(),
            eccentricity: s.eccentricity(),
            inner_radius: s.inner_radius(),
        };
        let text = io::to_text(&s.to_data());
        self.out.files.push(("space.txt".into(), text));
        self.emit("space.json", "build_space", "space invariants", true, &summary)
    }

    fn stage_growth(&mut self) -> Result<()> {
        let g = self.growth()?;
        let (pairs, seed) = (self.cfg.pairs, self.cfg.seed);
        let rd = check_reverse_doubling(self.space()?, &g, pairs, seed);
        info!(
            "reverse doubling lemma: C_RD = {:.4}, {} pairs, {} violations",
            rd.c_rd,
            rd.pairs_tested,
            rd.violations.len()
        );
        self.out.files.push(("growth.csv".into(), g.curve_csv()));
        let pass = rd.pass;
        self.emit("growth.json", "growth", "reverse doubling lemma", pass, &GrowthStage { growth: g, reverse_doubling: rd })
    }

    fn covering(&mut self) -> Result<(GoodCovering, CoveringGraph, Option<KappaSearch>)> {
        let growth = self.growth()?;
        let mu = self.mu()?;
        let (kappa_choice, cap, cover_radius, threshold_a) =
            (self.cfg.kappa, self.cfg.kappa_cap, self.cfg.cover_radius, self.cfg.threshold_a);
        let space = self.space()?;
        let (kappa, search) = match kappa_choice {
            KappaChoice::Fixed(k) => (k, None),
            KappaChoice::Auto => {
                let ks = kappa_search(space, 3, cap, cover_radius)?;
                (ks.kappa, Some(ks))
            }
        };
        let opts = CoveringOptions { cover_radius, threshold_a: threshold_a.or(Some(growth.threshold_a)), min_levels: 4 };
        let cov = build_good_covering_with(space, kappa, &mu.mu, &opts)?;
        let graph = canonical_graph(space, &cov, &mu.mu)?;
        self.constants.insert("kappa".into(), kappa);
        self.constants.insert("Q1".into(), cov.q1 as f64);
        self.constants.insert("Q2".into(), cov.q2);
        self.covering = Some((cov.clone(), graph.clone()));
        Ok((cov, graph, search))
    }

    fn cover(&mut self) -> Result<(GoodCovering, CoveringGraph)> {
        if self.covering.is_none() {
            self.covering()?;
        }
        Ok(self.covering.clone().unwrap())
    }

    fn stage_covering(&mut self) -> Result<()> {
        let (cov, graph, search) = self.covering()?;
        let growth = self.growth()?;
        let mu = self.mu()?;
        let space = self.space()?;
        let kappa = cov.kappa.unwrap_or(f64::NAN);
        let n = space.dimension_bound();
        let validation = validate_good_covering(space, &cov, space.measure(), &mu.mu);
        let structure = structure_checks(&graph, kappa, n, growth.c_d_hat);
        let component_bound = GoodCovering::component_bound(kappa, n);
        let m = space.measure();
        let pieces = cov
            .pieces
            .iter()
            .map(|p| PieceSummary {
                level: p.level,
                index: p.index,
                size: [p.u.len(), p.u_star.len(), p.u_sharp.len()],
                m2: [p.u.measure(&mu.mu), p.u_star.measure(&mu.mu), p.u_sharp.measure(&mu.mu)],
            })
            .collect();
        let _ = m;
        let components_ok = cov.max_components_per_annulus as f64 <= component_bound;
        info!(
            "good covering: conditions {:?}, Q1 = {}, Q2 = {:.3}, degree {} <= {}",
            validation.conditions, validation.q1, validation.q2, structure.max_degree, structure.degree_bound
        );
        let pass = validation.pass && components_ok && structure.degree_ok && structure.ratio_ok;
        let stage = CoveringStage {
            kappa,
            kappa_search: search,
            radii: cov.radii.clone(),
            pieces,
            gluing: cov.gluing.len(),
            validation,
            max_components_per_annulus: cov.max_components_per_annulus,
            component_bound,
            structure,
        };
        self.emit("covering.json", "covering", "good covering conditions", pass, &stage)
    }

    fn s_d(&mut self) -> Result<(f64, f64, Option<PoincareStage>)> {
        let (_, graph) = self.cover()?;
        let q = self.q()?;
        let d = poincare_constant(&graph, q)?;
        let nm = poincare_neumann_gap(&graph, q)?;
        let iso = isoperimetric_constant(&graph, &SetFamily::LevelPrefixes)?;
        self.constants.insert("S_d".into(), d.s_d);
        self.constants.insert("S_d_neumann".into(), nm.s_d);
        self.s_d = Some((d.s_d, nm.s_d));
        Ok((d.s_d, nm.s_d, Some(PoincareStage { q, dirichlet: d, neumann: nm, isoperimetric: iso, graph })))
    }

    fn stage_poincare(&mut self) -> Result<()> {
        let (_, _, stage) = self.s_d()?;
        let stage = stage.unwrap();
        info!(
            "discrete Poincare inequality: S_d = {:.6} ({:?}), Neumann S_d = {:.6}",
            stage.dirichlet.s_d, stage.dirichlet.method, stage.neumann.s_d
        );
        let pass = stage.dirichlet.s_d.is_finite() && stage.neumann.s_d.is_finite();
        self.emit("poincare.json", "poincare", "discrete Poincare inequality", pass, &stage)
    }

    fn family(&mut self) -> Result<Vec<TestFunction>> {
        if self.family.is_none() {
            let (cov, _) = self.cover()?;
            let reach = cov.radii[cov.radii.len().saturating_sub(2)];
            let (specs, seed) = (self.cfg.family.clone(), self.cfg.seed);
            let fam = build_family(self.space()?, &specs, seed, Some(reach));
            self.family = Some(fam);
        }
        Ok(self.family.clone().unwrap())
    }

    fn sobolev_radii(&mut self) -> Result<Vec<f64>> {
        let given = self.cfg.sobolev_radii.clone();
        let space = self.space()?;
        Ok(given.unwrap_or_else(|| {
            let top = 0.5 * space.inner_radius();
            (1..=8).map(|k| top * k as f64 / 8.0).collect()
        }))
    }

    fn sobolev_family(&mut self) -> Result<Vec<TestFunction>> {
        if self.sobolev_family.is_none() {
            let radii = self.sobolev_radii()?;
            let seed = self.cfg.seed;
            let mut fam = build_family(self.space()?, &[FamilySpec::RadialBumps { radii }], seed, None);
            fam.extend(self.family()?);
            self.sobolev_family = Some(fam);
        }
        Ok(self.sobolev_family.clone().unwrap())
    }

    fn stage_sobolev(&mut self) -> Result<()> {
        let growth = self.growth()?;
        let mu = self.mu()?;
        let (cov, graph) = self.cover()?;
        let (s_d, s_dn) = match self.s_d {
            Some(v) => v,
            None => {
                let (a, b, _) = self.s_d()?;
                (a, b)
            }
        };
        let family = self.family()?;
        let q = self.q()?;
        let p = self.cfg.p;
        let space = self.space()?;
        let m = space.measure().to_vec();
        let local = local_neumann_constants(&cov, &m, &mu.mu, p, q, &family)?;
        let inputs = PatchInputs { cov: &cov, graph: &graph, m1: &m, m2: &mu.mu, p, q, s_c: local.s_c, s_d };
        let dirichlet = verify_patching(&inputs, &family, false)?;
        let neumann = verify_patching(&PatchInputs { s_d: s_dn, ..inputs.clone() }, &family, true)?;
        info!(
            "patching theorem: S_c = {:.4}, C = {:.4}, max ratio {:.4}; Neumann C = {:.4}, max ratio {:.4}",
            local.s_c, dirichlet.constant_used, dirichlet.max_ratio, neumann.constant_used, neumann.max_ratio
        );
        self.constants.insert("S_c".into(), local.s_c);
        self.constants.insert("C".into(), dirichlet.constant_used);
        self.constants.insert("C_neumann".into(), neumann.constant_used);
        let pass = dirichlet.pass && neumann.pass;
        let mut csv = dirichlet.rows_csv();
        csv.insert_str(0, "# patching, dirichlet\n");
        self.out.files.push(("patching.csv".into(), csv));
        self.emit("patching.json", "patching", "patching theorem", pass, &PatchingStage { local, dirichlet, neumann })?;

        let sob_family = self.sobolev_family()?;
        let space = self.space()?;
        let sobolev = verify_weighted_sobolev(space, &growth, &mu, &sob_family)?;
        let step3 = step3_diagnostic(space, &cov.radii, p);
        info!("weighted Sobolev inequality: C_hat = {:.4}, checks {:?}", sobolev.max_ratio, sobolev.checks);
        self.constants.insert("C_sobolev".into(), sobolev.max_ratio);
        self.out.files.push(("sobolev.csv".into(), sobolev.rows_csv()));
        let pass = sobolev.pass;
        let stage = SobolevStage { weight_base_rule: mu.base_rule.clone(), sobolev, step3, step3_note: STEP3_NOTE };
        self.emit("sobolev.json", "weighted_sobolev", "weighted Sobolev inequality", pass, &stage)
    }

    fn stage_nash(&mut self, skip_if_inapplicable: bool) -> Result<()> {
        let growth = self.growth()?;
        let n = self.space()?.dimension_bound();
        if !(growth.eta > 2.0) || !(n > 2.0) {
            if !skip_if_inapplicable {
                return Err(Error::EtaTooSmall { eta: growth.eta, n });
            }
            let why = format!("weighted Nash inequality needs eta > 2 and N > 2; eta = {}, N = {n}", growth.eta);
            info!("{why}");
            let stage = NashStage { skipped: Some(why), sobolev_p2: None, nash: None };
            return self.emit("nash.json", "nash", "weighted Nash inequality", true, &stage);
        }
        let family = self.sobolev_family()?;
        let space = self.space()?;
        let mu2 = weight_field(space, 2.0)?;
        let form = assemble_form(space, &mu2);
        let sob2 = verify_weighted_sobolev(space, &growth, &mu2, &family)?;
        let nash = verify_nash(&growth, &form, n, &family, Some(sob2.max_ratio))?;
        info!("weighted Nash inequality: C_Na = {:.4}, checks {:?}", nash.max_ratio, nash.checks);
        self.constants.insert("C_Na".into(), nash.max_ratio);
        let pass = nash.pass;
        let stage = NashStage { skipped: None, sobolev_p2: Some(sob2), nash: Some(nash) };
        self.emit("nash.json", "nash", "weighted Nash inequality", pass, &stage)
    }

    fn heat_form(&mut self) -> Result<(DirichletFormAssembly, &'static str)> {
        let growth = self.growth()?;
        let space = self.space()?;
        let n = space.dimension_bound();
        if growth.eta > 2.0 && n > 2.0 {
            Ok((assemble_form(space, &weight_field(space, 2.0)?), "p = 2 weight"))
        } else {
            Ok((assemble_form(space, &WeightedMeasure::constant(space, 2.0)), "constant weight"))
        }
    }

    fn stage_heat(&mut self) -> Result<()> {
        let (form, weight) = self.heat_form()?;
        let family = self.sobolev_family()?;
        let radii = self.sobolev_radii()?;
        let (times_cfg, count, expected, tol) =
            (self.cfg.heat_times.clone(), self.cfg.heat_centers, self.cfg.heat_exponent, self.cfg.heat_exponent_tol);
        let window = self.cfg.heat_window.unwrap_or_else(|| form.reliable_window());
        let space = self.space()?;
        let n = space.dimension_bound();
        let (t0, t1) = window;
        let (lo, hi, k) = match times_cfg {
            Some(h) => (h.t_min, h.t_max, h.count),
            None => (t0, t1.min(25.0 * t0), 6),
        };
        let times: Vec<f64> = if k == 1 {
            vec![lo]
        } else {
            (0..k).map(|i| lo * (hi / lo).powf(i as f64 / (k - 1) as f64)).collect()
        };
        let d = space.base_distances();
        let mut order: Vec<usize> = (0..space.len()).collect();
        order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
        let centers: Vec<usize> = order.into_iter().take(count.max(1)).collect();
        let mut curve = verify_kernel_bound_within(&form, &times, &centers, n, window)?;
        let (rows, _) = nash_rows(&form, n, &family);
        let c_na_family = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
        let bump = family
            .iter()
            .find(|f| f.label == format!("bump:r={}", radii[radii.len() / 2]))
            .unwrap_or(&family[0]);
        let psi = psi_diagnostic(&form, &bump.u, &times, n, c_na_family)?;
        let mut checks = vec![
            Check { name: "sup_diag_non_increasing".into(), value: 0.0, bound: 0.0, pass: curve.non_increasing },
            Check {
                name: "psi_lower_bound".into(),
                value: psi.margin.iter().copied().fold(f64::INFINITY, f64::min),
                bound: 0.0,
                pass: psi.pass,
            },
        ];
        if let Some(e) = expected {
            let pass = (curve.fitted_exponent - e).abs() <= tol;
            checks.push(Check { name: "fitted_exponent".into(), value: curve.fitted_exponent, bound: tol, pass });
        }
        info!(
            "heat kernel bound: exponent {:.4} over t in [{lo}, {hi}], fitted C = {:.4}, psi C_Na = {:.4}",
            curve.fitted_exponent, curve.fitted_c, psi.c_na
        );
        curve.psi = Some(psi);
        self.out.files.push(("heat.csv".into(), curve.to_csv()));
        let pass = checks.iter().all(|c| c.pass);
        self.emit("heat.json", "heat", "heat kernel bound", pass, &HeatStage { weight, curve, checks })
    }
}

pub fn run(stage: Stage, cfg: RunConfig) -> Result<Outcome> {
    Pipeline::new(cfg).run(stage)
}
