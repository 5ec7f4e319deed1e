//! Line-oriented `key = value` run configuration.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::family::FamilySpec;
use crate::models::{default_stencil, GridSpec, HattoriSpec, SpaceSpec, Stencil};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaChoice {
    Fixed(f64),
    Auto,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatTimes {
    pub t_min: f64,
    pub t_max: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub space: SpaceSpec,
    pub p: f64,
    /// Defaults to `p* = Np/(N-p)`.
    pub q: Option<f64>,
    pub kappa: KappaChoice,
    pub kappa_cap: f64,
    /// Defaults to `[10 h_min, inner radius / 2]`.
    pub window: Option<(f64, f64)>,
    pub window_samples: usize,
    pub growth_centers: usize,
    pub threshold_a: Option<f64>,
    pub cover_radius: Option<f64>,
    pub pairs: usize,
    pub family: Vec<FamilySpec>,
    /// Defaults to eight radii evenly spaced up to half the inner radius.
    pub sobolev_radii: Option<Vec<f64>>,
    /// Defaults to six times spread geometrically over the reliable window,
    /// capped at 25 times its lower end.
    pub heat_times: Option<HeatTimes>,
    /// Replaces the default reliable window `[10 h², (diam/4)²]`.
    pub heat_window: Option<(f64, f64)>,
    pub heat_centers: usize,
    pub heat_exponent: Option<f64>,
    pub heat_exponent_tol: f64,
    pub seed: u64,
    pub output: PathBuf,
}

impl RunConfig {
    pub fn new(space: SpaceSpec) -> Self {
        Self {
            space,
            p: 1.0,
            q: None,
            kappa: KappaChoice::Fixed(2.0),
            kappa_cap: 16.0,
            window: None,
            window_samples: 16,
            growth_centers: 12,
            threshold_a: None,
            cover_radius: None,
            pairs: 200,
            family: vec![FamilySpec::RandomSmooth { count: 80 }, FamilySpec::IndicatorSmoothings { count: 20 }],
            sobolev_radii: None,
            heat_times: None,
            heat_window: None,
            heat_centers: 2,
            heat_exponent: None,
            heat_exponent_tol: 0.15,
            seed: 0,
            output: PathBuf::from("reports"),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::parse(&text)?;
        // relative space files resolve against the config's directory
        if let SpaceSpec::File { path: p } = &mut cfg.space {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(usize, String, String)> = Vec::new();
        let mut seen = BTreeSet::new();
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(cfg_err(line_no, format!("expected `key = value`, got `{line}`")));
            };
            let key = key.trim().to_string();
            if !KEYS.contains(&key.as_str()) {
                return Err(cfg_err(line_no, format!("unknown key `{key}`")));
            }
            if !seen.insert(key.clone()) {
                return Err(cfg_err(line_no, format!("duplicate key `{key}`")));
            }
            entries.push((line_no, key, value.trim().to_string()));
        }
        let get = |key: &str| entries.iter().find(|e| e.1 == key).map(|e| (e.0, e.2.as_str()));
        let space = parse_space(&get)?;
        let mut cfg = Self::new(space);
        for (line, key, value) in &entries {
            let (line, v) = (*line, value.as_str());
            match key.as_str() {
                "p" => cfg.p = num(line, key, v)?,
                "q" => cfg.q = if v == "auto" { None } else { Some(num(line, key, v)?) },
                "kappa" => cfg.kappa = if v == "auto" { KappaChoice::Auto } else { KappaChoice::Fixed(num(line, key, v)?) },
                "kappa_cap" => cfg.kappa_cap = num(line, key, v)?,
                "window" => {
                    let w = list(line, key, v)?;
                    if w.len() != 2 {
                        return Err(cfg_err(line, "window takes two radii".into()));
                    }
                    cfg.window = Some((w[0], w[1]));
                }
                "window_samples" => cfg.window_samples = int(line, key, v)?,
                "growth_centers" => cfg.growth_centers = int(line, key, v)?,
                "threshold_a" => cfg.threshold_a = Some(num(line, key, v)?),
                "cover_radius" => cfg.cover_radius = Some(num(line, key, v)?),
                "pairs" => cfg.pairs = int(line, key, v)?,
                "family" => cfg.family = parse_family(line, v)?,
                "sobolev_radii" => cfg.sobolev_radii = Some(list(line, key, v)?),
                "heat_times" => {
                    let w = list(line, key, v)?;
                    if w.len() != 3 || w[2].fract() != 0.0 || w[2] < 1.0 {
                        return Err(cfg_err(line, "heat_times takes `t_min, t_max, count`".into()));
                    }
                    cfg.heat_times = Some(HeatTimes { t_min: w[0], t_max: w[1], count: w[2] as usize });
                }
                "heat_window" => {
                    let w = list(line, key, v)?;
                    if w.len() != 2 {
                        return Err(cfg_err(line, "heat_window takes two times".into()));
                    }
                    cfg.heat_window = Some((w[0], w[1]));
                }
                "heat_centers" => cfg.heat_centers = int(line, key, v)?,
                "heat_exponent" => cfg.heat_exponent = Some(num(line, key, v)?),
                "heat_exponent_tol" => cfg.heat_exponent_tol = num(line, key, v)?,
                "seed" => cfg.seed = int(line, key, v)? as u64,
                "output" => cfg.output = PathBuf::from(v),
                _ => {}
            }
        }
        Ok(cfg)
    }

    /// Hex SHA-256 of the resolved configuration, output directory excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = PathBuf::new();
        let text = serde_json::to_string(&c).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

const SPACE_KEYS: [&str; 9] = ["generator", "n", "extent", "h", "eta", "alpha", "quad_tol", "stencil", "dimension_bound"];

const KEYS: [&str; 29] = [
    "generator", "n", "extent", "h", "eta", "alpha", "quad_tol", "stencil", "dimension_bound", "path",
    "p", "q", "kappa", "kappa_cap", "window", "window_samples", "growth_centers", "threshold_a",
    "cover_radius", "pairs", "family", "sobolev_radii", "heat_times", "heat_window", "heat_centers", "heat_exponent",
    "heat_exponent_tol", "seed", "output",
];

fn cfg_err(line: usize, message: String) -> Error {
    Error::Config { line, message }
}

fn num(line: usize, key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>().map_err(|_| cfg_err(line, format!("`{key}` expects a number, got `{v}`")))
}

fn int(line: usize, key: &str, v: &str) -> Result<usize> {
    v.parse::<usize>().map_err(|_| cfg_err(line, format!("`{key}` expects a non-negative integer, got `{v}`")))
}

fn list(line: usize, key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|x| num(line, key, x.trim())).collect()
}

fn parse_family(line: usize, v: &str) -> Result<Vec<FamilySpec>> {
    v.split(',')
        .map(|item| {
            let item = item.trim();
            let (kind, count) = item
                .split_once(':')
                .ok_or_else(|| cfg_err(line, format!("family entries look like `random_smooth:80`, got `{item}`")))?;
            let count = int(line, "family", count.trim())?;
            match kind.trim() {
                "random_smooth" => Ok(FamilySpec::RandomSmooth { count }),
                "indicator_smoothings" => Ok(FamilySpec::IndicatorSmoothings { count }),
                other => Err(cfg_err(line, format!("unknown family `{other}`"))),
            }
        })
        .collect()
}

fn parse_stencil(line: usize, v: &str) -> Result<Stencil> {
    if v == "axis" {
        return Ok(Stencil::Axis);
    }
    if let Some(k) = v.strip_prefix("extended:") {
        return Ok(Stencil::Extended(int(line, "stencil", k)?));
    }
    Err(cfg_err(line, format!("stencil is `axis` or `extended:k`, got `{v}`")))
}

fn parse_space<'a>(get: &impl Fn(&str) -> Option<(usize, &'a str)>) -> Result<SpaceSpec> {
    let (gline, generator) = get("generator").ok_or_else(|| cfg_err(0, "missing key `generator`".into()))?;
    let need = |key: &str| -> Result<f64> {
        let (line, v) = get(key).ok_or_else(|| cfg_err(gline, format!("generator `{generator}` needs `{key}`")))?;
        num(line, key, v)
    };
    let opt = |key: &str| -> Result<Option<f64>> { get(key).map(|(l, v)| num(l, key, v)).transpose() };
    match generator {
        "euclidean_grid" | "radial_density" => {
            let (nline, nv) = get("n").ok_or_else(|| cfg_err(gline, "grid generators need `n`".into()))?;
            let n = int(nline, "n", nv)?;
            let eta = match (generator, opt("eta")?) {
                (_, Some(e)) => e,
                ("euclidean_grid", None) => n as f64,
                _ => return Err(cfg_err(gline, "radial_density needs `eta`".into())),
            };
            let stencil = match get("stencil") {
                Some((l, v)) => parse_stencil(l, v)?,
                None => default_stencil(n),
            };
            let g = GridSpec {
                n,
                extent: need("extent")?,
                h: need("h")?,
                eta,
                stencil,
                dimension_bound: opt("dimension_bound")?.unwrap_or((n as f64).max(2.0)),
            };
            Ok(if generator == "euclidean_grid" { SpaceSpec::EuclideanGrid(g) } else { SpaceSpec::RadialDensity(g) })
        }
        "hattori" => Ok(SpaceSpec::Hattori(HattoriSpec {
            alpha: need("alpha")?,
            extent: need("extent")?,
            h: need("h")?,
            quad_tol: opt("quad_tol")?.unwrap_or(1e-10),
            dimension_bound: opt("dimension_bound")?.unwrap_or(4.0),
        })),
        "file" => {
            if let Some(k) = SPACE_KEYS.iter().skip(1).find(|k| get(k).is_some()) {
                let (l, _) = get(k).unwrap();
                return Err(cfg_err(l, format!("`{k}` does not apply to generator `file`")));
            }
            let (_, path) = get("path").ok_or_else(|| cfg_err(gline, "generator `file` needs `path`".into()))?;
            Ok(SpaceSpec::File { path: PathBuf::from(path) })
        }
        other => Err(cfg_err(gline, format!("unknown generator `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PLANE: &str = "generator = euclidean_grid\nn = 2\nextent = 32\nh = 0.25\nwindow = 2.5, 16\nseed = 7 # trailing comment\n";

    #[test]
    fn parses_with_defaults() {
        let c = RunConfig::parse(PLANE).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.window, Some((2.5, 16.0)));
        assert_eq!(c.kappa, KappaChoice::Fixed(2.0));
        match &c.space {
            SpaceSpec::EuclideanGrid(g) => assert_eq!((g.n, g.eta, g.dimension_bound), (2, 2.0, 2.0)),
            other => panic!("{other:?}"),
        }
        assert_eq!(c.hash(), RunConfig::parse(PLANE).unwrap().hash());
        assert_ne!(c.hash(), RunConfig::parse(&PLANE.replace("seed = 7", "seed = 8")).unwrap().hash());
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        let e = RunConfig::parse(&format!("{PLANE}kapa = 2\n")).unwrap_err();
        match e {
            Error::Config { line, message } => {
                assert_eq!(line, 7);
                assert!(message.contains("kapa"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(RunConfig::parse(&format!("{PLANE}p = one\n")), Err(Error::Config { line: 7, .. })));
        assert!(matches!(RunConfig::parse(&format!("{PLANE}seed = 1\n")), Err(Error::Config { .. })));
        assert!(matches!(RunConfig::parse("n = 2\n"), Err(Error::Config { .. })));
        assert!(matches!(RunConfig::parse("generator = file\npath = x.txt\nh = 1\n"), Err(Error::Config { line: 3, .. })));
    }

    #[test]
    fn families_and_kappa() {
        let c = RunConfig::parse(&format!("{PLANE}family = random_smooth:5, indicator_smoothings:2\nkappa = auto\nheat_times = 10, 250, 8\n")).unwrap();
        assert_eq!(c.family.len(), 2);
        assert_eq!(c.kappa, KappaChoice::Auto);
        assert_eq!(c.heat_times.unwrap().count, 8);
    }
}
