//! Streaming homophily metrics against dense direct-definition oracles, plus
//! the invariance properties they must satisfy.

mod common;

use common::{random_graph, DenseOracle};
use homoscope_core::graph::{AggregationKind, FeatureMatrix, Graph, LoadOptions, NodeId};
use homoscope_core::homophily;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

#[test]
fn metrics_match_dense_oracle_on_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    for trial in 0..200 {
        let g = random_graph(&mut rng, 50);
        let oracle = DenseOracle::from_graph(&g);

        let checks = [
            ("h_edge", homophily::h_edge(&g).unwrap(), oracle.h_edge()),
            ("h_node", homophily::h_node(&g).unwrap().0, oracle.h_node()),
            ("h_class", homophily::h_class(&g).unwrap(), oracle.h_class()),
            (
                "h_agg",
                homophily::h_agg(&g, AggregationKind::random_walk(), true).unwrap(),
                oracle.h_agg(),
            ),
            ("h_adj", homophily::h_adj(&g).unwrap(), oracle.h_adj()),
            (
                "li",
                homophily::label_informativeness(&g).unwrap(),
                oracle.li(),
            ),
        ];
        for (name, got, expect) in checks {
            assert!(
                (got - expect).abs() <= 1e-12,
                "trial {trial}: {name} = {got}, oracle = {expect}"
            );
        }

        let f = rng.gen_range(1..4);
        let data: Vec<f64> = (0..g.n_nodes() * f)
            .map(|_| rng.gen_range(-2.0..2.0))
            .collect();
        let x = FeatureMatrix::from_rows(g.n_nodes(), f, data.clone()).unwrap();
        let rows: Vec<Vec<f64>> = (0..g.n_nodes()).map(|i| x.row(i).to_vec()).collect();
        let got = homophily::h_ge(&g, &x).unwrap();
        let expect = oracle.h_ge(&rows);
        assert!(
            (got - expect).abs() <= 1e-12,
            "trial {trial}: h_ge = {got}, oracle = {expect}"
        );
    }
}

#[test]
fn metrics_invariant_under_node_relabeling() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..40 {
        let g = random_graph(&mut rng, 30);
        let n = g.n_nodes();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);

        let mut edges = Vec::new();
        for u in 0..n as NodeId {
            for &v in g.neighbors(u) {
                if u <= v {
                    edges.push((perm[u as usize] as NodeId, perm[v as usize] as NodeId));
                }
            }
        }
        let mut labels = vec![0u32; n];
        for v in 0..n {
            labels[perm[v]] = g.label(v as NodeId);
        }
        let h = Graph::from_edges(&edges, labels, LoadOptions::default()).unwrap();

        assert!((homophily::h_edge(&g).unwrap() - homophily::h_edge(&h).unwrap()).abs() < 1e-12);
        assert!(
            (homophily::h_node(&g).unwrap().0 - homophily::h_node(&h).unwrap().0).abs() < 1e-12
        );
        assert!((homophily::h_class(&g).unwrap() - homophily::h_class(&h).unwrap()).abs() < 1e-12);
        assert!((homophily::h_adj(&g).unwrap() - homophily::h_adj(&h).unwrap()).abs() < 1e-12);
        assert!(
            (homophily::label_informativeness(&g).unwrap()
                - homophily::label_informativeness(&h).unwrap())
            .abs()
                < 1e-12
        );
        let kind = AggregationKind::random_walk();
        assert!(
            (homophily::h_agg(&g, kind, true).unwrap() - homophily::h_agg(&h, kind, true).unwrap())
                .abs()
                < 1e-12
        );
    }
}

#[test]
fn metrics_invariant_under_class_permutation() {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    for _ in 0..40 {
        let g = random_graph(&mut rng, 30);
        let c = g.n_classes();
        let mut class_perm: Vec<u32> = (0..c as u32).collect();
        class_perm.shuffle(&mut rng);

        let mut edges = Vec::new();
        for u in 0..g.n_nodes() as NodeId {
            for &v in g.neighbors(u) {
                if u <= v {
                    edges.push((u, v));
                }
            }
        }
        let labels: Vec<u32> = g.labels().iter().map(|&l| class_perm[l as usize]).collect();
        let h = Graph::from_edges(&edges, labels, LoadOptions::default()).unwrap();

        assert!((homophily::h_edge(&g).unwrap() - homophily::h_edge(&h).unwrap()).abs() < 1e-12);
        assert!((homophily::h_class(&g).unwrap() - homophily::h_class(&h).unwrap()).abs() < 1e-12);
        assert!((homophily::h_adj(&g).unwrap() - homophily::h_adj(&h).unwrap()).abs() < 1e-12);
        assert!(
            (homophily::label_informativeness(&g).unwrap()
                - homophily::label_informativeness(&h).unwrap())
            .abs()
                < 1e-12
        );
    }
}

#[test]
fn unit_interval_metrics_stay_in_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..100 {
        let g = random_graph(&mut rng, 40);
        for v in [
            homophily::h_edge(&g).unwrap(),
            homophily::h_node(&g).unwrap().0,
            homophily::h_class(&g).unwrap(),
            homophily::h_agg(&g, AggregationKind::random_walk(), true).unwrap(),
        ] {
            assert!((0.0..=1.0).contains(&v), "metric {v} outside [0,1]");
        }
        let adj = homophily::h_adj(&g).unwrap();
        assert!(adj <= 1.0 && adj.is_finite());
        let li = homophily::label_informativeness(&g).unwrap();
        assert!(li.is_finite());
    }
}

#[test]
fn fully_homophilous_graphs_peg_adjusted_and_informativeness() {
    let mut rng = ChaCha8Rng::seed_from_u64(111);
    for _ in 0..30 {
        // random sizes, each class its own random connected clump
        let c = rng.gen_range(2..4usize);
        let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
        let mut labels = Vec::new();
        let mut base = 0usize;
        for k in 0..c {
            let size = rng.gen_range(3..8usize);
            for i in 1..size {
                let j = rng.gen_range(0..i);
                edges.push(((base + i) as NodeId, (base + j) as NodeId));
            }
            labels.extend(std::iter::repeat_n(k as u32, size));
            base += size;
        }
        let g = Graph::from_edges(&edges, labels, LoadOptions::default()).unwrap();
        assert_eq!(homophily::h_edge(&g).unwrap(), 1.0);
        assert!((homophily::h_adj(&g).unwrap() - 1.0).abs() < 1e-12);
        assert!((homophily::label_informativeness(&g).unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn h_agg_matches_dense_oracle_on_ten_node_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(321);
    for _ in 0..50 {
        let g = random_graph(&mut rng, 10);
        let got = homophily::h_agg(&g, AggregationKind::random_walk(), true).unwrap();
        let expect = DenseOracle::from_graph(&g).h_agg();
        assert_eq!(got, expect);
    }
}

#[test]
fn li_matches_direct_formula_on_twenty_node_graph() {
    let mut rng = ChaCha8Rng::seed_from_u64(555);
    let g = random_graph(&mut rng, 20);
    let got = homophily::label_informativeness(&g).unwrap();
    let expect = DenseOracle::from_graph(&g).li();
    assert!((got - expect).abs() <= 1e-12);
}
