use std::collections::BTreeSet;

use enrollnet::cart::{
    cross_validate, fit_tree, prune_sequence, prune_to_size, variable_importance, AnalysisDataset, Node,
    RegressionTree, Split, TreeControl,
};
use proptest::prelude::*;

const LOOSE: TreeControl = TreeControl {
    min_node_rows: 2,
    min_leaf_rows: 1,
    min_improvement_fraction: 0.0,
};

/// Two predictors with at most eight levels each, so a node never has more
/// than fourteen candidate splits.
fn arb_dataset() -> impl Strategy<Value = AnalysisDataset> {
    (4usize..40)
        .prop_flat_map(|n| {
            (
                prop::collection::vec((0u8..8, 0u8..8), n),
                prop::collection::vec(-50i32..50, n),
            )
        })
        .prop_map(|(x, y)| {
            let rows: Vec<Vec<f64>> = x.iter().map(|&(a, b)| vec![a as f64, b as f64 * 0.5]).collect();
            let y = y.iter().map(|&v| v as f64 / 4.0).collect();
            AnalysisDataset::new(vec!["a".into(), "b".into()], &rows, y, None).unwrap()
        })
}

fn sse(y: &[f64]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    let m = y.iter().sum::<f64>() / y.len() as f64;
    y.iter().map(|v| (v - m).powi(2)).sum()
}

/// Largest SSE reduction over every threshold between adjacent levels.
fn brute_force_best(data: &AnalysisDataset, rows: &[usize]) -> f64 {
    let ys: Vec<f64> = rows.iter().map(|&r| data.y()[r]).collect();
    let parent = sse(&ys);
    let mut best = 0.0f64;
    for var in 0..data.n_predictors() {
        let levels: BTreeSet<u64> = rows.iter().map(|&r| data.value(r, var).to_bits()).collect();
        let levels: Vec<f64> = {
            let mut v: Vec<f64> = levels.into_iter().map(f64::from_bits).collect();
            v.sort_by(f64::total_cmp);
            v
        };
        for w in levels.windows(2) {
            let cut = 0.5 * (w[0] + w[1]);
            let (l, r): (Vec<f64>, Vec<f64>) = {
                let l = rows
                    .iter()
                    .filter(|&&i| data.value(i, var) <= cut)
                    .map(|&i| data.y()[i])
                    .collect();
                let r = rows
                    .iter()
                    .filter(|&&i| data.value(i, var) > cut)
                    .map(|&i| data.y()[i])
                    .collect();
                (l, r)
            };
            best = best.max(parent - sse(&l) - sse(&r));
        }
    }
    best
}

fn node_rows(tree: &RegressionTree, data: &AnalysisDataset) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); tree.nodes().len()];
    out[0] = (0..data.len()).collect();
    for i in tree.preorder() {
        if let Some(s) = tree.nodes()[i].split {
            let rows = out[i].clone();
            let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&row| data.value(row, s.var) <= s.value);
            out[s.left] = l;
            out[s.right] = r;
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn every_split_is_the_brute_force_best(data in arb_dataset()) {
        let tree = fit_tree(&data, &LOOSE).unwrap();
        let rows = node_rows(&tree, &data);
        let scale = sse(data.y()).max(1.0);
        for i in tree.preorder() {
            let node = tree.nodes()[i];
            prop_assert_eq!(node.n, rows[i].len());
            let best = brute_force_best(&data, &rows[i]);
            match node.split {
                Some(s) => {
                    let l: Vec<f64> = rows[s.left].iter().map(|&r| data.y()[r]).collect();
                    let r: Vec<f64> = rows[s.right].iter().map(|&r| data.y()[r]).collect();
                    let ys: Vec<f64> = rows[i].iter().map(|&r| data.y()[r]).collect();
                    let gain = sse(&ys) - sse(&l) - sse(&r);
                    prop_assert!((gain - best).abs() <= 1e-9 * scale, "node {} gain {} best {}", i, gain, best);
                    prop_assert!((s.improvement - gain).abs() <= 1e-9 * scale);
                }
                None => prop_assert!(best <= 1e-9 * scale, "leaf {} could gain {}", i, best),
            }
        }
    }

    #[test]
    fn pruning_is_nested_with_rising_alphas(data in arb_dataset()) {
        let tree = fit_tree(&data, &LOOSE).unwrap();
        let seq = prune_sequence(&tree);
        let alphas = seq.alphas();
        prop_assert_eq!(alphas[0], 0.0);
        prop_assert!(alphas.windows(2).all(|w| w[1] > w[0]), "{:?}", alphas);
        let sizes: Vec<usize> = seq.steps().iter().map(|s| s.n_splits).collect();
        prop_assert!(sizes.windows(2).all(|w| w[1] < w[0]));
        prop_assert_eq!(*sizes.last().unwrap(), 0);
        let mut prev: Option<BTreeSet<usize>> = None;
        for k in 0..seq.len() {
            let sub = seq.subtree(k);
            prop_assert_eq!(sub.n_splits(), sizes[k]);
            let internal: BTreeSet<usize> = sub.internal_nodes().into_iter().collect();
            if let Some(p) = &prev {
                prop_assert!(internal.is_subset(p));
            }
            prev = Some(internal);
        }
        for target in 0..=tree.n_splits() + 2 {
            let t = prune_to_size(&seq, target).n_splits();
            prop_assert!(t <= target);
            prop_assert!(sizes.iter().all(|&s| s > target || s <= t));
        }
    }

    #[test]
    fn importance_is_normalized(data in arb_dataset()) {
        let tree = fit_tree(&data, &LOOSE).unwrap();
        let imp = variable_importance(&tree);
        if tree.n_splits() == 0 {
            prop_assert!(imp.is_empty());
        } else {
            let total: f64 = imp.values().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            prop_assert!(imp.values().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn cross_validation_is_seeded(data in arb_dataset(), seed in any::<u64>()) {
        let folds = data.len().min(5);
        let a = cross_validate(&data, &LOOSE, folds, seed).unwrap();
        let b = cross_validate(&data, &LOOSE, folds, seed).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.n_splits[a.cv_1se] <= a.n_splits[a.cv_min]);
        let min = a.mean[a.cv_min];
        prop_assert!(a.mean.iter().all(|&m| m >= min - 1e-12 * min.abs().max(1.0)));
        prop_assert!(a.mean[a.cv_1se] <= min + a.sd[a.cv_min] + 1e-12);
    }
}

enum Shape {
    Leaf,
    Split(f64, Box<Shape>, Box<Shape>),
}

fn split(improvement: f64, left: Shape, right: Shape) -> Shape {
    Shape::Split(improvement, Box::new(left), Box::new(right))
}

/// Push `shape` in preorder; leaves hold ten rows with zero SSE.
fn push(shape: &Shape, nodes: &mut Vec<Node>) -> usize {
    let id = nodes.len();
    nodes.push(Node {
        n: 0,
        mean: 0.0,
        sse: 0.0,
        split: None,
    });
    if let Shape::Split(improvement, l, r) = shape {
        let left = push(l, nodes);
        let right = push(r, nodes);
        nodes[id].n = nodes[left].n + nodes[right].n;
        nodes[id].sse = improvement + nodes[left].sse + nodes[right].sse;
        nodes[id].split = Some(Split {
            var: 0,
            value: 0.5,
            left,
            right,
            improvement: *improvement,
        });
    } else {
        nodes[id].n = 10;
    }
    id
}

#[test]
fn missing_size_falls_back_to_next_smaller_subtree() {
    let three = || {
        split(
            10.0,
            split(10.0, Shape::Leaf, Shape::Leaf),
            split(10.0, Shape::Leaf, Shape::Leaf),
        )
    };
    let twig = split(
        1.0,
        split(1.0, Shape::Leaf, Shape::Leaf),
        split(1.0, Shape::Leaf, Shape::Leaf),
    );
    let shape = split(1000.0, split(100.0, Shape::Leaf, three()), split(100.0, three(), twig));
    let mut nodes = Vec::new();
    push(&shape, &mut nodes);
    let tree = RegressionTree::from_nodes(vec!["x".into()], nodes).unwrap();
    assert_eq!(tree.n_splits(), 12);

    let seq = prune_sequence(&tree);
    let sizes: Vec<usize> = seq.steps().iter().map(|s| s.n_splits).collect();
    assert_eq!(sizes, [12, 9, 3, 1, 0]);
    let alphas = seq.alphas();
    for (got, want) in alphas.iter().zip([0.0, 1.0, 10.0, 100.0, 1000.0]) {
        assert!((got - want).abs() < 1e-9, "{alphas:?}");
    }
    assert_eq!(prune_to_size(&seq, 10).n_splits(), 9);
    assert_eq!(prune_to_size(&seq, 9).n_splits(), 9);
    assert_eq!(prune_to_size(&seq, 8).n_splits(), 3);
    assert_eq!(prune_to_size(&seq, 100).n_splits(), 12);
}

#[test]
fn noiseless_step_is_recovered() {
    let rows: Vec<Vec<f64>> = (0..60).map(|i| vec![(i % 6) as f64, (i % 5) as f64]).collect();
    let y: Vec<f64> = rows.iter().map(|r| if r[1] <= 2.0 { 1.0 } else { 3.0 }).collect();
    let data = AnalysisDataset::new(vec!["p".into(), "q".into()], &rows, y, None).unwrap();
    let tree = fit_tree(&data, &TreeControl::default()).unwrap();
    let s = tree.root().split.unwrap();
    assert_eq!((s.var, s.value), (1, 2.5));
    assert_eq!(tree.n_splits(), 1);
    assert_eq!(variable_importance(&tree)["q"], 1.0);
}
