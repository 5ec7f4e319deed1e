//! Seeded families of compactly supported test functions with their
//! discrete upper gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::par;
use crate::space::{DiscreteSpace, ScalarField};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilySpec {
    /// `(1 - (d/R)²)²` about the base point, one member per radius.
    RadialBumps { radii: Vec<f64> },
    /// Signed sums of one to three bumps and tents at random centres.
    RandomSmooth { count: usize },
    /// Ball indicators with a linear fade over a random fraction of the radius.
    IndicatorSmoothings { count: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestFunction {
    pub label: String,
    pub u: ScalarField,
    /// `local_slope(u)`.
    pub g: ScalarField,
}

impl TestFunction {
    pub fn new(space: &DiscreteSpace, label: String, u: Vec<f64>) -> Self {
        let g = space.local_slope(&u);
        Self { label, u: ScalarField(u), g }
    }

    /// `λu` with gradient `|λ|g`.
    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            label: format!("{}*{lambda}", self.label),
            u: ScalarField(self.u.iter().map(|x| lambda * x).collect()),
            g: ScalarField(self.g.iter().map(|x| lambda.abs() * x).collect()),
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Profile {
    Bump,
    Tent,
    Plateau(f64),
}

impl Profile {
    fn eval(self, d: f64, r: f64) -> f64 {
        if d >= r {
            return 0.0;
        }
        match self {
            Profile::Bump => {
                let s = 1.0 - (d / r).powi(2);
                s * s
            }
            Profile::Tent => 1.0 - d / r,
            Profile::Plateau(w) => ((r - d) / (w * r)).min(1.0),
        }
    }
}

struct Atom {
    center: usize,
    radius: f64,
    amplitude: f64,
    profile: Profile,
}

fn render(space: &DiscreteSpace, atoms: &[Atom]) -> Vec<f64> {
    let mut u = vec![0.0; space.len()];
    for a in atoms {
        if a.center == space.base_point() {
            for (v, &d) in space.base_distances().iter().enumerate() {
                u[v] += a.amplitude * a.profile.eval(d, a.radius);
            }
        } else {
            for (v, d) in space.distances_within(a.center, a.radius) {
                u[v] += a.amplitude * a.profile.eval(d, a.radius);
            }
        }
    }
    u
}

/// Supports stay inside the open ball of radius `space.inner_radius()` about
/// the base point, away from the truncation frame.
pub fn test_function_family(space: &DiscreteSpace, spec: &FamilySpec, seed: u64) -> Vec<TestFunction> {
    test_function_family_within(space, spec, seed, space.inner_radius())
}

/// As [`test_function_family`] with every support inside `B(o, reach)`.
pub fn test_function_family_within(space: &DiscreteSpace, spec: &FamilySpec, seed: u64, reach: f64) -> Vec<TestFunction> {
    let o = space.base_point();
    let d = space.base_distances();
    let min_r = (4.0 * space.max_edge_length()).min(0.5 * reach);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let near: Vec<usize> = (0..space.len()).filter(|&v| d[v] <= 0.5 * reach).collect();
    let pick = |rng: &mut ChaCha8Rng| -> (usize, f64) {
        let c = near[rng.random_range(0..near.len())];
        let room = reach - d[c];
        if room <= min_r {
            return (o, min_r.max(f64::MIN_POSITIVE));
        }
        let r = (min_r.ln() + rng.random_range(0.0..1.0) * (room / min_r).ln()).exp();
        (c, r.min(room))
    };
    let plans: Vec<(String, Vec<Atom>)> = match spec {
        FamilySpec::RadialBumps { radii } => radii
            .iter()
            .map(|&r| (format!("bump:r={r}"), vec![Atom { center: o, radius: r, amplitude: 1.0, profile: Profile::Bump }]))
            .collect(),
        FamilySpec::RandomSmooth { count } => (0..*count)
            .map(|k| {
                let n = rng.random_range(1..=3);
                let atoms = (0..n)
                    .map(|_| {
                        let (center, radius) = pick(&mut rng);
                        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                        let amplitude = sign * rng.random_range(0.2..1.0);
                        let profile = if rng.random_bool(0.5) { Profile::Bump } else { Profile::Tent };
                        Atom { center, radius, amplitude, profile }
                    })
                    .collect();
                (format!("random:{k}"), atoms)
            })
            .collect(),
        FamilySpec::IndicatorSmoothings { count } => (0..*count)
            .map(|k| {
                let (center, radius) = pick(&mut rng);
                let w = rng.random_range(0.3..0.7);
                (format!("plateau:{k}"), vec![Atom { center, radius, amplitude: 1.0, profile: Profile::Plateau(w) }])
            })
            .collect(),
    };
    par::map(&plans, |(label, atoms)| TestFunction::new(space, label.clone(), render(space, atoms)))
}

/// Concatenates several families; member `k` of the list uses `seed + k`.
pub fn build_family(space: &DiscreteSpace, specs: &[FamilySpec], seed: u64, reach: Option<f64>) -> Vec<TestFunction> {
    let reach = reach.unwrap_or_else(|| space.inner_radius());
    specs
        .iter()
        .enumerate()
        .flat_map(|(k, s)| test_function_family_within(space, s, seed.wrapping_add(k as u64), reach))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_space, euclidean_grid};

    fn plane() -> DiscreteSpace {
        build_space(&euclidean_grid(2, 12.0, 0.5, 2.0).unwrap()).unwrap()
    }

    #[test]
    fn bump_support() {
        let s = plane();
        let fam = test_function_family(&s, &FamilySpec::RadialBumps { radii: vec![4.0] }, 0);
        let d = s.base_distances();
        for (v, &x) in fam[0].u.iter().enumerate() {
            assert_eq!(x != 0.0, d[v] < 4.0);
        }
        assert_eq!(fam[0].u[s.base_point()], 1.0);
    }

    #[test]
    fn deterministic_and_inside_reach() {
        let s = plane();
        let spec = FamilySpec::RandomSmooth { count: 30 };
        let a = test_function_family(&s, &spec, 7);
        let b = test_function_family(&s, &spec, 7);
        assert_eq!(a, b);
        let reach = s.inner_radius();
        let d = s.base_distances();
        for f in a.iter().chain(&test_function_family(&s, &FamilySpec::IndicatorSmoothings { count: 10 }, 1)) {
            assert!(f.u.iter().any(|&x| x != 0.0), "{}", f.label);
            for (v, &x) in f.u.iter().enumerate() {
                assert!(x == 0.0 || d[v] < reach);
            }
        }
    }

    #[test]
    fn scaling_scales_the_gradient() {
        let s = plane();
        let f = &test_function_family(&s, &FamilySpec::RandomSmooth { count: 1 }, 3)[0];
        let g = f.scaled(-2.5);
        let direct = s.local_slope(&g.u);
        for (a, b) in g.g.iter().zip(direct.iter()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }
}
