use proptest::prelude::*;
use regularity::cutalg::{cut_norm_exact, cut_norm_heuristic, IndexSet};
use regularity::engine::{
    strong_decompose_cut, weak_decompose_cut, weak_decompose_rank, GrowthFunction, SearchMode,
};
use regularity::graphreg::{block_constants, common_refinement, discrepancy_exact, DensityMode};
use regularity::matcore::frobenius_norm;
use regularity::{Graph, Matrix};

fn matrix(max_side: usize) -> impl Strategy<Value = Matrix> {
    (1..=max_side, 1..=max_side).prop_flat_map(|(m, n)| {
        prop::collection::vec(-3i32..=3, m * n)
            .prop_map(move |v| Matrix::new(m, n, v.into_iter().map(f64::from).collect()).unwrap())
    })
}

fn graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n).prop_flat_map(|n| {
        prop::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| {
            let mut edges = Vec::new();
            let mut it = bits.into_iter();
            for u in 0..n {
                for v in u + 1..n {
                    if it.next().unwrap() {
                        edges.push((u, v));
                    }
                }
            }
            Graph::from_edges(n, &edges).unwrap()
        })
    })
}

fn mask_sets(n: usize, a: u64, b: u64) -> (IndexSet, IndexSet) {
    let s: Vec<usize> = (0..n).filter(|&i| a >> i & 1 == 1).collect();
    let t: Vec<usize> = (0..n)
        .filter(|&i| b >> i & 1 == 1 && a >> i & 1 == 0)
        .collect();
    (IndexSet::new(s), IndexSet::new(t))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn potential_drops_every_round(a in matrix(7), eps in 0.25f64..0.9) {
        let fro2 = frobenius_norm(&a).powi(2);
        for r in [
            weak_decompose_rank(&a, eps, 1).unwrap(),
            weak_decompose_cut(&a, eps, SearchMode::Exact, 1).unwrap(),
        ] {
            prop_assert!((r.rounds() as f64) < eps.powi(-2));
            let mut last = fro2;
            for rec in &r.trace.rounds {
                prop_assert!((rec.potential_before - last).abs() <= 1e-9 * fro2.max(1.0));
                prop_assert!(rec.potential_before - rec.potential_after > eps * eps * fro2 * (1.0 - 1e-9));
                last = rec.potential_after;
            }
            let res = frobenius_norm(&r.residual(&a)).powi(2);
            prop_assert!((res - last).abs() <= 1e-9 * fro2.max(1.0));
        }
    }

    #[test]
    fn weak_cut_leaves_small_cut_norm(a in matrix(6), eps in 0.25f64..0.9) {
        let r = weak_decompose_cut(&a, eps, SearchMode::Exact, 0).unwrap();
        let left = cut_norm_exact(&r.residual(&a)).unwrap().value;
        prop_assert!(left <= eps * frobenius_norm(&a) + 1e-9);
        prop_assert_eq!(r.k_witness, r.cut_decomposition().unwrap().cutrank_witness());
    }

    #[test]
    fn heuristic_never_beats_exact(a in matrix(7), seed in any::<u64>()) {
        let exact = cut_norm_exact(&a).unwrap().value;
        let heur = cut_norm_heuristic(&a, 4, seed).unwrap().value;
        prop_assert!(heur <= exact + 1e-9);
    }

    #[test]
    fn refinement_makes_blocks_constant(g in graph(9), eps in 0.3f64..0.9) {
        let r = strong_decompose_cut(g.adjacency(), eps, GrowthFunction::constant(2), SearchMode::Exact, 0).unwrap();
        let p = common_refinement(r.cut_decomposition().unwrap(), g.n()).unwrap();
        prop_assert!((p.num_parts() as f64) <= 4f64.powi(r.k_witness as i32));
        prop_assert!(block_constants(&r.a_hat, &p).is_ok());
    }

    #[test]
    fn free_discrepancy_at_most_fixed(g in graph(10), a in any::<u64>(), b in any::<u64>()) {
        let (s, t) = mask_sets(g.n(), a, b);
        prop_assume!(!s.is_empty() && !t.is_empty());
        let free = discrepancy_exact(&g, &s, &t, DensityMode::Free).unwrap();
        let fixed = discrepancy_exact(&g, &s, &t, DensityMode::Fixed).unwrap();
        prop_assert!(free <= fixed + 1e-9);
        prop_assert!(free >= 0.0);
        let swapped = discrepancy_exact(&g, &t, &s, DensityMode::Free).unwrap();
        prop_assert!((free - swapped).abs() <= 1e-9);
    }

    #[test]
    fn graph_text_round_trips(g in graph(12)) {
        let back: Graph = g.to_string().parse().unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn matrix_text_round_trips(a in matrix(6), scale in -1e6f64..1e6) {
        let a = a.scaled(scale / 7.0);
        let back: Matrix = a.to_string().parse().unwrap();
        prop_assert_eq!(back, a);
    }
}
