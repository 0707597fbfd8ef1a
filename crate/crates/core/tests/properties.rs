mod common;

use ggcn::eval::{auc, average_precision, Metrics};
use ggcn::graph::{
    apply_ordering, build_candidate, normalize_adjacency, with_self_loops, Graph, NodeOrdering, SelfLoops,
};
use ggcn::loss::kl_diag_gaussians;
use ggcn::model::{decode_edge_probs, encode, GaussianLatent, ModelDims, ModelParams, ModelVariant};
use ggcn::numeric::Matrix;
use proptest::prelude::*;
use rand::seq::SliceRandom;

use common::{brute_ap, brute_auc, naive_normalize, random_graph, rng};

fn graph_strategy() -> impl Strategy<Value = Graph> {
    (2usize..12, 0.0f64..1.0, 1usize..5, any::<u64>()).prop_map(|(n, p, d, seed)| random_graph(n, p, d, seed))
}

fn permutation(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

fn feature_rows(g: &Graph) -> Vec<Vec<u64>> {
    let mut rows: Vec<Vec<u64>> = (0..g.n())
        .map(|i| g.features().row(i).iter().map(|x| x.to_bits()).collect())
        .collect();
    rows.sort();
    rows
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn candidate_is_symmetric_binary_and_keeps_observed_block(
        g in graph_strategy(), n_new in 1usize..6, p in 0.0f64..=1.0, seed in any::<u64>()
    ) {
        let c = build_candidate(g.adjacency(), n_new, p, &mut rng(seed)).unwrap();
        let m = c.matrix();
        let n_old = g.n();
        prop_assert_eq!(m.shape(), (n_old + n_new, n_old + n_new));
        prop_assert!(m.is_symmetric());
        prop_assert!(m.as_slice().iter().all(|&v| v == 0.0 || v == 1.0));
        for i in 0..n_old {
            for j in 0..n_old {
                prop_assert_eq!(m[(i, j)], g.adjacency()[(i, j)]);
            }
        }
        for i in n_old..n_old + n_new {
            prop_assert_eq!(m[(i, i)], 1.0);
        }
    }

    #[test]
    fn ordering_round_trips(g in graph_strategy(), seed in any::<u64>()) {
        let mut pi: Vec<usize> = (0..g.n()).collect();
        pi.shuffle(&mut rng(seed));
        let pi = NodeOrdering::new(pi).unwrap();
        let there = apply_ordering(&g, &pi).unwrap();
        let back = apply_ordering(&there, &pi.inverse()).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn ordering_preserves_degrees_and_features(g in graph_strategy(), seed in any::<u64>()) {
        let mut pi: Vec<usize> = (0..g.n()).collect();
        pi.shuffle(&mut rng(seed));
        let h = apply_ordering(&g, &NodeOrdering::new(pi.clone()).unwrap()).unwrap();
        prop_assert_eq!(sorted(h.degrees()), sorted(g.degrees()));
        prop_assert_eq!(feature_rows(&h), feature_rows(&g));
        prop_assert_eq!(h.edge_count(), g.edge_count());
        for (u, v) in g.edges() {
            prop_assert!(h.has_edge(pi[u], pi[v]));
        }
    }

    #[test]
    fn normalisation_matches_loops_and_commutes_with_relabelling(
        (g, perm) in graph_strategy().prop_flat_map(|g| { let n = g.n(); (Just(g), permutation(n)) })
    ) {
        let base = with_self_loops(g.adjacency());
        let a = normalize_adjacency(&base).unwrap();
        prop_assert!(a.matrix().max_abs_diff(&naive_normalize(&base)) < 1e-15);
        prop_assert!(a.matrix().is_symmetric());

        let pi = NodeOrdering::new(perm.clone()).unwrap();
        let h = apply_ordering(&g, &pi).unwrap();
        let b = normalize_adjacency(&with_self_loops(h.adjacency())).unwrap();
        for i in 0..g.n() {
            for j in 0..g.n() {
                prop_assert!((b.matrix()[(perm[i], perm[j])] - a.matrix()[(i, j)]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn mlp_encoder_ignores_structure(g in graph_strategy(), other_p in 0.0f64..1.0, seed in any::<u64>()) {
        let params = ModelParams::init(ModelDims { input: g.feature_dim(), hidden: 5, latent: 3 }, &mut rng(seed));
        let other = common::random_graph(g.n(), other_p, 1, seed ^ 1);
        let a1 = normalize_adjacency(&with_self_loops(g.adjacency())).unwrap();
        let a2 = normalize_adjacency(&with_self_loops(other.adjacency())).unwrap();
        let q1 = encode(&a1, g.features(), &params, ModelVariant::MlpVae).unwrap();
        let q2 = encode(&a2, g.features(), &params, ModelVariant::MlpVae).unwrap();
        prop_assert_eq!(q1, q2);
    }

    #[test]
    fn decoder_is_a_symmetric_probability_matrix(n in 1usize..10, d in 1usize..6, scale in 0.0f64..50.0, seed in any::<u64>()) {
        let z = Matrix::random_normal(n, d, &mut rng(seed)).map(|v| v * scale);
        let p = decode_edge_probs(&z).unwrap();
        prop_assert!(p.as_slice().iter().all(|&v| (0.0..=1.0).contains(&v)));
        prop_assert!(p.is_symmetric());
    }

    #[test]
    fn kl_is_nonnegative_and_vanishes_on_equal_arguments(n in 1usize..6, d in 1usize..5, seed in any::<u64>()) {
        let mut r = rng(seed);
        let q = GaussianLatent::new(Matrix::random_normal(n, d, &mut r), Matrix::random_normal(n, d, &mut r)).unwrap();
        let p = GaussianLatent::new(Matrix::random_normal(n, d, &mut r), Matrix::random_normal(n, d, &mut r)).unwrap();
        prop_assert!(kl_diag_gaussians(&q, &p).unwrap() >= 0.0);
        prop_assert!(kl_diag_gaussians(&q, &q).unwrap().abs() < 1e-10);
    }

    #[test]
    fn kl_is_positive_when_any_parameter_differs(
        n in 1usize..5, d in 1usize..4, seed in any::<u64>(), k in any::<prop::sample::Index>(), delta in 1e-3f64..2.0, which in any::<bool>()
    ) {
        let mut r = rng(seed);
        let q = GaussianLatent::new(Matrix::random_normal(n, d, &mut r), Matrix::random_normal(n, d, &mut r)).unwrap();
        let mut p = q.clone();
        let idx = k.index(n * d);
        if which {
            p.mean.as_mut_slice()[idx] += delta;
        } else {
            p.log_std.as_mut_slice()[idx] += delta;
        }
        prop_assert!(kl_diag_gaussians(&q, &p).unwrap() > 1e-10);
    }

    #[test]
    fn auc_and_ap_match_definitions(
        pos in prop::collection::vec(-3i32..3, 1..15), neg in prop::collection::vec(-3i32..3, 1..15)
    ) {
        let pos: Vec<f64> = pos.into_iter().map(f64::from).collect();
        let neg: Vec<f64> = neg.into_iter().map(f64::from).collect();
        let scores: Vec<f64> = pos.iter().chain(&neg).copied().collect();
        let labels: Vec<bool> = (0..scores.len()).map(|i| i < pos.len()).collect();
        prop_assert!((auc(&scores, &labels).unwrap() - brute_auc(&pos, &neg)).abs() < 1e-12);
        prop_assert!((average_precision(&scores, &labels).unwrap() - brute_ap(&scores, &labels)).abs() < 1e-12);
    }

    #[test]
    fn auc_is_rank_based(
        pos in prop::collection::vec(-5.0f64..5.0, 1..20), neg in prop::collection::vec(-5.0f64..5.0, 1..20)
    ) {
        let base = Metrics::from_scores(&pos, &neg).unwrap().auc;
        let squash = |v: &Vec<f64>| v.iter().map(|&x| x * x * x + 3.0 * x + 1.0).collect::<Vec<_>>();
        let moved = Metrics::from_scores(&squash(&pos), &squash(&neg)).unwrap().auc;
        prop_assert!((base - moved).abs() < 1e-12);
        let negate = |v: &Vec<f64>| v.iter().map(|&x| -x).collect::<Vec<_>>();
        let flipped = Metrics::from_scores(&negate(&pos), &negate(&neg)).unwrap().auc;
        prop_assert!((base + flipped - 1.0).abs() < 1e-12);
    }
}

#[test]
fn six_node_ordering_maps_every_edge() {
    let g = Graph::from_edges(
        6,
        &[(0, 1), (1, 2), (2, 5), (3, 4), (0, 5)],
        Matrix::from_fn(6, 1, |i, _| i as f64),
    )
    .unwrap();
    let pi = vec![3, 0, 5, 1, 4, 2];
    let h = apply_ordering(&g, &NodeOrdering::new(pi.clone()).unwrap()).unwrap();
    for u in 0..6 {
        assert_eq!(h.features()[(pi[u], 0)], u as f64);
        for v in 0..6 {
            assert_eq!(g.has_edge(u, v), h.has_edge(pi[u], pi[v]), "pair ({u},{v})");
        }
    }
}

#[test]
fn new_only_self_loops_leave_old_diagonal_empty() {
    let g = common::random_graph(5, 0.5, 1, 3);
    let c = build_candidate(g.adjacency(), 2, 0.3, &mut rng(1)).unwrap();
    let m = c.with_self_loops(SelfLoops::NewOnly);
    assert!((0..5).all(|i| m[(i, i)] == 0.0));
    assert!((5..7).all(|i| m[(i, i)] == 1.0));
    let all = c.with_self_loops(SelfLoops::All);
    assert!((0..7).all(|i| all[(i, i)] == 1.0));
}
