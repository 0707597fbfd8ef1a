mod common;

use std::collections::HashSet;

use ggcn::checkpoint::Checkpoint;
use ggcn::data::{load_dataset, write_dataset, DatasetBundle, SbmConfig};
use ggcn::eval::{embed_full_graph, evaluate, make_newnode_split, make_observed_split, predict_links, EvalSplit, Pair};
use ggcn::graph::{Graph, SelfLoops};
use ggcn::model::{ModelParams, ModelVariant};
use ggcn::numeric::Matrix;
use ggcn::train::{train, TrainConfig};

use common::{rng, sbm};

fn sbm100(seed: u64) -> Graph {
    SbmConfig {
        n: 100,
        p_in: 0.2,
        p_out: 0.02,
        ..SbmConfig::default()
    }
    .generate(&mut rng(seed))
    .unwrap()
    .graph
}

#[test]
fn new_node_split_invariants() {
    let g = sbm100(1);
    let split = make_newnode_split(&g, 0.7, &mut rng(2)).unwrap();
    assert_eq!(split.observed_nodes.len(), 70);
    let hidden: HashSet<usize> = split.hidden_nodes().into_iter().collect();
    assert_eq!(hidden.len(), 30);

    let pos: HashSet<Pair> = split.query_pos().into_iter().collect();
    let expected: HashSet<Pair> = g
        .edges()
        .into_iter()
        .filter(|(u, v)| hidden.contains(u) || hidden.contains(v))
        .collect();
    assert_eq!(pos, expected);

    let neg = split.query_neg();
    assert_eq!(neg.len(), pos.len());
    let neg_set: HashSet<Pair> = neg.iter().copied().collect();
    assert_eq!(neg_set.len(), neg.len());
    for &(u, v) in &neg {
        assert!(u < v && !g.has_edge(u, v));
        assert!(hidden.contains(&u) || hidden.contains(&v));
    }
    assert_eq!(split.val_pos.len(), pos.len() / 2);
    assert_eq!(split.val_neg.len(), neg.len() / 2);

    for (a, b) in split.observed.edges() {
        let (u, v) = (split.observed_nodes[a], split.observed_nodes[b]);
        assert!(g.has_edge(u, v));
        assert!(!hidden.contains(&u) && !hidden.contains(&v));
    }
    for k in 0..70 {
        assert_eq!(
            split.observed.features().row(k),
            g.features().row(split.observed_nodes[k])
        );
    }
}

#[test]
fn observed_split_counts_on_a_hundred_edges() {
    let edges: Vec<Pair> = (0..100).map(|k| (k, k + 1)).collect();
    let g = Graph::from_edges(101, &edges, Matrix::zeros(101, 2)).unwrap();
    let split = make_observed_split(&g, 0.1, 0.05, &mut rng(0)).unwrap();
    assert_eq!(split.val_pos.len(), 10);
    assert_eq!(split.test_pos.len(), 5);
    assert_eq!(split.observed.edge_count(), 85);
    assert_eq!(split.val_neg.len(), 10);
    assert_eq!(split.test_neg.len(), 5);

    let held: HashSet<Pair> = split.query_pos().into_iter().collect();
    assert_eq!(held.len(), 15);
    for &(u, v) in &held {
        assert!(g.has_edge(u, v) && !split.observed.has_edge(u, v));
    }
    for &(u, v) in &split.query_neg() {
        assert!(!g.has_edge(u, v));
    }
}

#[test]
fn manifest_round_trip() {
    let g = sbm100(3);
    for split in [
        make_newnode_split(&g, 0.7, &mut rng(4)).unwrap(),
        make_observed_split(&g, 0.1, 0.05, &mut rng(4)).unwrap(),
    ] {
        let m = split.to_manifest();
        let json = serde_json::to_string(&m).unwrap();
        let back = EvalSplit::from_manifest(&serde_json::from_str(&json).unwrap(), g.features().clone()).unwrap();
        assert_eq!(back, split);
    }
}

#[test]
fn mlp_scores_depend_only_on_features() {
    // Hidden node 9 copies the features of hidden node 8; both face node 0.
    let mut g = sbm(30, 6);
    let mut x = g.features().clone();
    let row8 = x.row(8).to_vec();
    x.row_mut(9).copy_from_slice(&row8);
    g = Graph::new(g.adjacency().clone(), x).unwrap();
    let mut split = make_newnode_split(&g, 0.7, &mut rng(8)).unwrap();
    split.observed_nodes.retain(|&v| v != 8 && v != 9);
    let kept = split.observed_nodes.clone();
    split.observed = g.induced_subgraph(&kept);
    split.test_pos = vec![(0, 8), (0, 9)];
    split.test_neg = vec![(1, 8)];

    let params = ModelParams::init(
        TrainConfig {
            hidden_dim: 8,
            latent_dim: 4,
            ..TrainConfig::default()
        }
        .dims(g.feature_dim()),
        &mut rng(0),
    );
    let s = predict_links(&params, ModelVariant::MlpVae, &split, SelfLoops::All).unwrap();
    assert_eq!(s.test_pos[0], s.test_pos[1]);
    let z = embed_full_graph(&params, ModelVariant::MlpVae, &split, SelfLoops::All).unwrap();
    assert_eq!(z.row(8), z.row(9));
}

#[test]
fn evaluation_is_deterministic_and_in_range() {
    let g = sbm(60, 2);
    let split = make_newnode_split(&g, 0.7, &mut rng(1)).unwrap();
    let cfg = TrainConfig {
        hidden_dim: 16,
        latent_dim: 8,
        iterations: 20,
        ..TrainConfig::default()
    };
    for variant in ModelVariant::ALL {
        let t = train(&split.observed, variant, &cfg).unwrap();
        let a = evaluate(&t.params, variant, &split, cfg.self_loops).unwrap();
        let b = evaluate(&t.params, variant, &split, cfg.self_loops).unwrap();
        assert_eq!(a, b);
        assert!((0.0..=1.0).contains(&a.test.auc) && (0.0..=1.0).contains(&a.test.ap));
        assert_eq!(a.test.n_pos, split.test_pos.len());
    }
}

#[test]
fn dataset_files_round_trip() {
    let bundle = SbmConfig {
        n: 40,
        ..SbmConfig::default()
    }
    .generate(&mut rng(9))
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_dataset(&bundle, dir.path()).unwrap();
    let back = load_dataset(dir.path()).unwrap();
    assert_eq!(back.graph, bundle.graph);
    assert_eq!(back.node_ids, bundle.node_ids);
    assert_eq!(back.feature_kind, bundle.feature_kind);

    let binary = DatasetBundle::from_graph("tiny", Graph::from_edges(3, &[(0, 2)], Matrix::identity(3)).unwrap());
    write_dataset(&binary, dir.path()).unwrap();
    let back = load_dataset(dir.path()).unwrap();
    assert_eq!(back.graph, binary.graph);
}

#[test]
fn checkpoint_restores_evaluation() {
    let g = sbm(45, 5);
    let split = make_newnode_split(&g, 0.7, &mut rng(5)).unwrap();
    let cfg = TrainConfig {
        hidden_dim: 8,
        latent_dim: 4,
        iterations: 5,
        ..TrainConfig::default()
    };
    let t = train(&split.observed, ModelVariant::GGcn, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    Checkpoint::new(t.variant, &cfg, &t.params).save(&path).unwrap();
    let back = Checkpoint::load(&path).unwrap();
    let before = evaluate(&t.params, t.variant, &split, cfg.self_loops).unwrap();
    let after = evaluate(&back.params().unwrap(), back.variant, &split, back.config.self_loops).unwrap();
    assert_eq!(before, after);
}
