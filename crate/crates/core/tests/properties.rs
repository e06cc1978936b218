mod common;

use proptest::prelude::*;
use rand::Rng;

use common::{oracle_best_loss, random_dataset, random_strategy, random_task, rng, Task};
use tritree::data::{stratified_kfold, Dataset, FeatureColumn, Response};
use tritree::split::{enumerate_candidates, node_loss, score_binary, score_trinary};
use tritree::tree::{train, train_all, Node};
use tritree::loss::{fit_leaf, WeightedSample};
use tritree::{best_split, LeafValue, MissingRoute, SplitConfig, Strategy, TrainConfig};

fn unit_cfg(min_child: usize) -> SplitConfig {
    SplitConfig {
        min_child,
        min_child_weight: min_child as f64,
        ..SplitConfig::default()
    }
}

#[test]
fn oracle_on_node_subsets() {
    let mut r = rng(21);
    for case in 0..300 {
        let n = r.random_range(4..=12);
        let n_features = r.random_range(1..=3);
        let task = random_task(&mut r);
        let ds = random_dataset(&mut r, n, n_features, 0.3, task);
        let rows: Vec<usize> = (0..n).filter(|_| r.random_bool(0.8)).collect();
        if rows.is_empty() {
            continue;
        }
        let features: Vec<usize> = (0..n_features).collect();
        for strategy in Strategy::ALL {
            let got = best_split(&ds, &rows, None, &features, strategy, &unit_cfg(1)).map(|s| s.total_loss);
            let want = oracle_best_loss(&ds, &rows, strategy, 1, 1.0);
            match (got, want) {
                (Some(g), Some(w)) => assert!((g - w).abs() <= 1e-9, "case {case} {strategy}: {g} vs {w}"),
                (g, w) => assert_eq!(g.is_some(), w.is_some(), "case {case} {strategy}"),
            }
        }
    }
}

fn numeric_dataset(r: &mut rand_chacha::ChaCha8Rng, n: usize, n_features: usize) -> Dataset {
    let columns = (0..n_features)
        .map(|j| {
            let v = (0..n)
                .map(|_| (!r.random_bool(0.25)).then(|| r.random_range(0..8) as f64))
                .collect();
            FeatureColumn::numeric(format!("x{j}"), v)
        })
        .collect();
    let y = (0..n).map(|_| r.random_range(0..20) as f64 / 2.0).collect();
    Dataset::new(columns, "y", Response::Real(y)).unwrap()
}

#[test]
fn oracle_with_child_size_limits() {
    let mut r = rng(22);
    for case in 0..200 {
        let n = r.random_range(4..=12);
        let ds = numeric_dataset(&mut r, n, 2);
        let rows: Vec<usize> = (0..n).collect();
        for min_child in [2, 3] {
            for strategy in Strategy::ALL {
                let cfg = unit_cfg(min_child);
                let got = best_split(&ds, &rows, None, &[0, 1], strategy, &cfg).map(|s| s.total_loss);
                let want = oracle_best_loss(&ds, &rows, strategy, min_child, min_child as f64);
                match (got, want) {
                    (Some(g), Some(w)) => assert!((g - w).abs() <= 1e-9, "case {case} {strategy}: {g} vs {w}"),
                    (g, w) => assert_eq!(g.is_some(), w.is_some(), "case {case} {strategy} min_child {min_child}"),
                }
            }
        }
    }
}

#[test]
fn chosen_split_never_worse_than_parent() {
    let mut r = rng(23);
    for _ in 0..200 {
        let task = random_task(&mut r);
        let ds = random_dataset(&mut r, 30, 3, 0.3, task);
        let rows: Vec<usize> = (0..30).collect();
        let parent = node_loss(&ds, &rows, None);
        for strategy in Strategy::ALL {
            if let Some(s) = best_split(&ds, &rows, None, &[0, 1, 2], strategy, &unit_cfg(2)) {
                assert!(s.total_loss <= parent + 1e-9, "{strategy}: {} > {parent}", s.total_loss);
                assert!(s.total_loss >= 0.0);
            }
        }
    }
}

#[test]
fn trinary_without_missing_matches_binary_exactly() {
    let mut r = rng(24);
    for _ in 0..100 {
        let task = random_task(&mut r);
        let ds = random_dataset(&mut r, 25, 2, 0.0, task);
        let rows: Vec<usize> = (0..25).collect();
        let mother = tritree::split::fit_node(&ds, &rows, None);
        for j in 0..2 {
            for p in enumerate_candidates(&ds, j, &rows, None) {
                let b = score_binary(&ds, &rows, &p, MissingRoute::Right, 1).map(|s| s.total_loss.to_bits());
                let t = score_trinary(&ds, &rows, &p, &mother, 1).map(|s| s.total_loss.to_bits());
                assert_eq!(b, t);
            }
        }
    }
}

fn check_tree(node: &Node, strategy: Strategy) {
    match node {
        Node::Leaf(_) => {}
        Node::Binary(b) => {
            if strategy == Strategy::FractionalCase {
                let child_weight = |n: &Node| match n {
                    Node::Leaf(l) => l.weight,
                    Node::Binary(b) => b.weight,
                    Node::Trinary(_) => panic!("trinary node in FC tree"),
                };
                let sum = child_weight(&b.left) + child_weight(&b.right);
                assert!((sum - b.weight).abs() <= 1e-9, "weights {sum} vs {}", b.weight);
            }
            check_tree(&b.left, strategy);
            check_tree(&b.right, strategy);
        }
        Node::Trinary(t) => {
            assert!(strategy.is_trinary());
            check_tree(&t.left, strategy);
            check_tree(&t.right, strategy);
            check_tree(&t.middle, strategy);
        }
    }
}

/// Longest run of middle edges.
fn middle_chain(node: &Node) -> usize {
    match node {
        Node::Leaf(_) => 0,
        Node::Binary(b) => middle_chain(&b.left).max(middle_chain(&b.right)),
        Node::Trinary(t) => middle_chain(&t.left).max(middle_chain(&t.right)).max(1 + middle_chain(&t.middle)),
    }
}

#[test]
fn tree_structure_invariants() {
    let mut r = rng(25);
    for _ in 0..120 {
        let task = random_task(&mut r);
        let n_features = r.random_range(1..=4);
        let ds = random_dataset(&mut r, 60, n_features, 0.25, task);
        let strategy = random_strategy(&mut r);
        let depth = r.random_range(0..=4);
        let tree = train_all(&ds, &TrainConfig::new(strategy, depth, 2)).unwrap();
        assert!(tree.depth() <= depth);
        assert!(middle_chain(&tree.root) <= n_features);
        check_tree(&tree.root, strategy);
    }
}

#[test]
fn trinary_leaves_ignore_missing_rows() {
    // Left rows: y = 0, 2; right rows: y = 10, 12; missing rows carry huge y.
    let x = vec![Some(1.0), Some(2.0), Some(8.0), Some(9.0), None, None];
    let y = vec![0.0, 2.0, 10.0, 12.0, 1000.0, -500.0];
    let ds = Dataset::new(vec![FeatureColumn::numeric("x", x)], "y", Response::Real(y)).unwrap();
    let tree = train(&ds, &[0, 1, 2, 3, 4, 5], &TrainConfig::new(Strategy::Trinary, 1, 1)).unwrap();
    let Node::Trinary(t) = &tree.root else { panic!("expected a trinary root") };
    let value = |n: &Node| match n {
        Node::Leaf(l) => l.value.clone(),
        _ => panic!("expected a leaf"),
    };
    assert_eq!(value(&t.left), LeafValue::Real(1.0));
    assert_eq!(value(&t.right), LeafValue::Real(11.0));
    let all: Vec<WeightedSample> = [0.0, 2.0, 10.0, 12.0, 1000.0, -500.0].map(WeightedSample::unit).to_vec();
    assert_eq!(value(&t.middle), fit_leaf(&all, tree.loss).unwrap());
}

#[test]
fn ordering_trick_matches_exhaustive_on_complete_data() {
    let mut r = rng(26);
    for case in 0..200 {
        let task = if case % 2 == 0 { Task::Regression } else { Task::Binary };
        let ds = random_dataset(&mut r, 12, 1, 0.0, task);
        let rows: Vec<usize> = (0..12).collect();
        let got = best_split(&ds, &rows, None, &[0], Strategy::Majority, &unit_cfg(1)).map(|s| s.total_loss);
        let want = oracle_best_loss(&ds, &rows, Strategy::Majority, 1, 1.0);
        match (got, want) {
            (Some(g), Some(w)) => assert!((g - w).abs() <= 1e-9, "case {case}: {g} vs {w}"),
            (g, w) => assert_eq!(g.is_some(), w.is_some()),
        }
    }
}

proptest! {
    #[test]
    fn folds_are_stratified(labels in prop::collection::vec(0u32..3, 10..80), k in 2usize..6, seed: u64) {
        prop_assume!(k <= labels.len());
        let n = labels.len();
        let ds = Dataset::new(
            vec![FeatureColumn::numeric("x", (0..n).map(|i| Some(i as f64)).collect())],
            "y",
            Response::Class { labels: labels.clone(), classes: vec!["a".into(), "b".into(), "c".into()] },
        ).unwrap();
        let folds = stratified_kfold(&ds, k, seed).unwrap();
        let mut covered = vec![false; n];
        for f in 0..k {
            for r in folds.test_rows(f) {
                prop_assert!(!covered[r]);
                covered[r] = true;
            }
        }
        prop_assert!(covered.iter().all(|c| *c));
        for class in 0..3 {
            let counts: Vec<usize> = (0..k)
                .map(|f| folds.test_rows(f).iter().filter(|&&r| labels[r] == class).count())
                .collect();
            prop_assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1, "{counts:?}");
        }
        prop_assert_eq!(folds, stratified_kfold(&ds, k, seed).unwrap());
    }

    #[test]
    fn censor_counts_are_exact(n in 5usize..150, q in 0.0f64..=0.9, seed: u64) {
        let mut r = rng(seed);
        let ds = random_dataset(&mut r, n, 3, 0.0, Task::Regression);
        let want = (q * n as f64).round() as usize;
        let out = tritree::censor_mcar(&ds, q, seed).unwrap();
        for col in out.columns() {
            prop_assert_eq!(col.n_missing(), want);
        }
        let out = tritree::censor_im(&ds, q).unwrap();
        for col in out.columns() {
            prop_assert_eq!(col.n_missing(), want);
        }
    }
}
