use proptest::prelude::*;
use sobolab_core::graph::{poincare_constant, poincare_neumann_gap, CoveringGraph};
use sobolab_core::growth::WeightedMeasure;
use sobolab_core::heat::{assemble_form, heat_evolve};
use sobolab_core::inequality::patch_constant;
use sobolab_core::models::{build_grid, GridSpec, Stencil};
use sobolab_core::space::io;
use sobolab_core::DiscreteSpace;

fn grid(extent: f64, eta: f64) -> DiscreteSpace {
    build_grid(&GridSpec { n: 2, extent, h: 1.0, eta, stencil: Stencil::Axis, dimension_bound: 2.0 }).unwrap()
}

fn path_graph(weights: &[f64], chords: &[(usize, usize)], boundary: Vec<usize>) -> CoveringGraph {
    let n = weights.len();
    let mut edges: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
    for &(a, b) in chords {
        let (a, b) = (a % n, b % n);
        let e = (a.min(b), a.max(b));
        if a != b && !edges.contains(&e) {
            edges.push(e);
        }
    }
    CoveringGraph::new(weights.to_vec(), &edges, boundary).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn heat_flow_is_markov(
        f0 in proptest::collection::vec(-1.0f64..1.0, 81),
        eta in 1.2f64..3.0,
        t in 0.05f64..40.0,
    ) {
        let s = grid(4.0, eta);
        let form = assemble_form(&s, &WeightedMeasure::constant(&s, 1.0));
        let u = heat_evolve(&form, &f0, t).unwrap();
        prop_assert!((form.mass(&u) - form.mass(&f0)).abs() <= 1e-10);
        prop_assert!(form.l1_norm(&u) <= form.l1_norm(&f0) + 1e-10);
        let (lo, hi) = f0.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        prop_assert!(u.iter().all(|&x| x >= lo - 1e-10 && x <= hi + 1e-10));
        prop_assert!(form.energy(&u) <= form.energy(&f0) + 1e-10);
    }

    #[test]
    fn poincare_constant_dominates_every_ratio(
        weights in proptest::collection::vec(0.2f64..5.0, 6),
        chords in proptest::collection::vec((0usize..6, 0usize..6), 0..5),
        f in proptest::collection::vec(-1.0f64..1.0, 6),
    ) {
        let g = path_graph(&weights, &chords, vec![5]);
        let r = poincare_constant(&g, 2.0).unwrap();
        let mut h = f.clone();
        h[5] = 0.0;
        prop_assume!(h.iter().any(|&x| x != 0.0));
        prop_assert!(g.dirichlet_ratio(&h, 2.0) <= r.s_d * (1.0 + 1e-9));
        prop_assert!((g.dirichlet_ratio(&r.witness, 2.0) - r.s_d).abs() <= 1e-9 * r.s_d);
        let n = poincare_neumann_gap(&g, 2.0).unwrap();
        prop_assume!(f.iter().any(|&x| (x - f[0]).abs() > 1e-6));
        prop_assert!(g.neumann_ratio(&f, 2.0) <= n.s_d * (1.0 + 1e-9));
    }

    #[test]
    fn patch_constant_is_monotone(
        base in proptest::collection::vec(1.0f64..4.0, 4),
        which in 0usize..4,
        bump in 0.0f64..2.0,
        p in 1.0f64..2.0,
        dq in 0.0f64..2.0,
    ) {
        let q = p + dq;
        let c0 = patch_constant(p, q, base[0], base[1], base[2], base[3]).unwrap();
        let mut b = base.clone();
        b[which] += bump;
        let c1 = patch_constant(p, q, b[0], b[1], b[2], b[3]).unwrap();
        prop_assert!(c1 >= c0 * (1.0 - 1e-14));
    }

    #[test]
    fn text_serialization_round_trips(extent in 1.5f64..4.0, eta in 1.1f64..3.0) {
        let s = grid(extent, eta);
        let data = s.to_data();
        let back = io::from_text(&io::to_text(&data)).unwrap();
        prop_assert_eq!(&back, &data);
        let json = io::from_json(&io::to_json(&data).unwrap()).unwrap();
        prop_assert_eq!(json, data);
    }
}
