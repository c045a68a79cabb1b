use lpgnet::dp::Epsilon;
use lpgnet::graph::{generate_erdos_renyi, Graph};
use lpgnet::models::dpgcn_perturb;
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn eps(v: f64) -> Epsilon {
    Epsilon::new(v).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn release_is_a_simple_graph_with_the_selected_count(
        n in 2usize..30,
        raw in proptest::collection::vec((0usize..30, 0usize..30), 0..80),
        e in 0.2f64..20.0,
        seed in any::<u64>(),
    ) {
        let g = Graph::from_edges(n, raw.into_iter().map(|(u, v)| (u % n, v % n)).filter(|(u, v)| u != v)).unwrap();
        let p = dpgcn_perturb(&g, eps(e), e / 10.0, seed).unwrap();
        prop_assert_eq!(p.graph.num_nodes(), n);
        prop_assert_eq!(p.graph.num_edges(), p.selected_edges);
        prop_assert!(p.selected_edges <= n * (n - 1) / 2);
        for v in 0..n {
            prop_assert!(!p.graph.has_edge(v, v));
            for &u in p.graph.neighbors(v) {
                prop_assert!(p.graph.has_edge(u, v));
            }
        }
        let noisy = p.graph.edges().filter(|&(u, v)| !g.has_edge(u, v)).count();
        prop_assert_eq!(p.noisy_fraction, noisy as f64 / p.selected_edges.max(1) as f64);
    }

    #[test]
    fn input_edge_order_does_not_matter(seed in any::<u64>(), shuffle_seed in any::<u64>()) {
        let g = generate_erdos_renyi(40, 90, 2, 2, 3).unwrap().graph;
        let mut edges: Vec<(usize, usize)> = g.edges().map(|(u, v)| if shuffle_seed % 2 == 0 { (u, v) } else { (v, u) }).collect();
        edges.shuffle(&mut lpgnet::rng::stream_rng(shuffle_seed));
        let reordered = Graph::from_edges(40, edges).unwrap();
        prop_assert_eq!(
            dpgcn_perturb(&g, eps(3.0), 0.3, seed).unwrap(),
            dpgcn_perturb(&reordered, eps(3.0), 0.3, seed).unwrap()
        );
    }
}

#[test]
fn negligible_noise_keeps_only_real_edges() {
    let path = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
    for seed in 0..50 {
        let p = dpgcn_perturb(&path, eps(1e6), 1e5, seed).unwrap();
        assert_eq!(p.noisy_fraction, 0.0);
        assert!(p.graph.edges().all(|(u, v)| path.has_edge(u, v)));
    }
}

#[test]
fn noise_share_falls_as_budget_grows() {
    let g = generate_erdos_renyi(400, 600, 2, 2, 1).unwrap().graph;
    let mean_noisy = |e: f64| (0..5).map(|s| dpgcn_perturb(&g, eps(e), 0.01, s).unwrap().noisy_fraction).sum::<f64>() / 5.0;
    let fractions: Vec<f64> = [1.0, 3.0, 5.0, 7.0, 9.0, 11.0].into_iter().map(mean_noisy).collect();
    assert!(fractions.windows(2).all(|w| w[0] >= w[1]), "{fractions:?}");
    assert!(fractions[0] > 0.9 && fractions[5] < 0.1, "{fractions:?}");
}

#[test]
fn rejects_bad_budgets() {
    let g = Graph::from_edges(3, [(0, 1)]).unwrap();
    assert!(dpgcn_perturb(&g, Epsilon::INFINITE, 0.01, 0).is_err());
    assert!(dpgcn_perturb(&g, eps(1.0), 1.0, 0).is_err());
    assert!(dpgcn_perturb(&g, eps(1.0), 0.0, 0).is_err());
}
