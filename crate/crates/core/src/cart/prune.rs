use rayon::prelude::*;
use serde::Serialize;

use super::{fit_tree, AnalysisDataset, RegressionTree, TreeControl};
use crate::error::{Error, Result};
use crate::rng::{partial_shuffle, rng_from_seed};
use crate::stats::{mean, sd};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PruneStep {
    pub alpha: f64,
    pub n_splits: usize,
}

/// Nested subtrees from the full tree (`alpha = 0`) down to the root.
/// Subtree `k` keeps exactly the internal nodes whose collapse alpha exceeds
/// `steps[k].alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct PruneSequence {
    tree: RegressionTree,
    /// Per arena node; zero for leaves of the full tree.
    collapse_alpha: Vec<f64>,
    steps: Vec<PruneStep>,
}

impl PruneSequence {
    pub fn tree(&self) -> &RegressionTree {
        &self.tree
    }

    pub fn steps(&self) -> &[PruneStep] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.alpha).collect()
    }

    pub fn collapse_alpha(&self, node: usize) -> f64 {
        self.collapse_alpha[node]
    }

    pub fn subtree(&self, k: usize) -> RegressionTree {
        let alpha = self.steps[k].alpha;
        self.tree.collapsed(|i| self.collapse_alpha[i] <= alpha)
    }

    /// Index of the subtree with the most splits not exceeding `target`.
    pub fn index_for_size(&self, target: usize) -> usize {
        self.steps
            .iter()
            .position(|s| s.n_splits <= target)
            .expect("the root-only subtree has zero splits")
    }

    /// Prediction for `x` of the subtree in force at each of `alphas`
    /// (ascending), without materializing the subtrees.
    fn predictions_along(&self, x: &[f64], alphas: &[f64], out: &mut Vec<f64>) {
        let nodes = self.tree.nodes();
        let mut path = vec![0usize];
        while let Some(s) = nodes[*path.last().unwrap()].split {
            path.push(if x[s.var] <= s.value { s.left } else { s.right });
        }
        // Collapse alphas do not increase going down a path.
        let mut p = path.len() - 1;
        out.clear();
        for &a in alphas {
            while p > 0 && self.collapse_alpha[path[p - 1]] <= a {
                p -= 1;
            }
            out.push(nodes[path[p]].mean);
        }
    }
}

/// Weakest-link pruning: repeatedly collapse the internal node(s) with the
/// smallest `(sse(t) - R(T_t)) / (leaves(T_t) - 1)`.
pub fn prune_sequence(tree: &RegressionTree) -> PruneSequence {
    let nodes = tree.nodes();
    let m = nodes.len();
    let mut parent = vec![usize::MAX; m];
    let mut active = vec![false; m];
    for i in tree.internal_nodes() {
        let s = nodes[i].split.unwrap();
        parent[s.left] = i;
        parent[s.right] = i;
        active[i] = true;
    }
    // Leaf SSE total and leaf count of each active subtree, from the bottom up.
    let mut r = vec![0.0; m];
    let mut leaves = vec![1usize; m];
    for &i in tree.preorder().iter().rev() {
        match nodes[i].split {
            Some(s) => {
                r[i] = r[s.left] + r[s.right];
                leaves[i] = leaves[s.left] + leaves[s.right];
            }
            None => r[i] = nodes[i].sse,
        }
    }

    let mut collapse_alpha = vec![0.0; m];
    let mut n_active = active.iter().filter(|&&a| a).count();
    let mut steps = vec![PruneStep {
        alpha: 0.0,
        n_splits: n_active,
    }];
    let g = |i: usize, r: &[f64], leaves: &[usize]| ((nodes[i].sse - r[i]) / (leaves[i] - 1) as f64).max(0.0);

    while n_active > 0 {
        let gmin = (0..m)
            .filter(|&i| active[i])
            .map(|i| g(i, &r, &leaves))
            .fold(f64::INFINITY, f64::min);
        let tie = gmin * (1.0 + 1e-9) + f64::MIN_POSITIVE;
        let weakest: Vec<usize> = (0..m).filter(|&i| active[i] && g(i, &r, &leaves) <= tie).collect();
        let prev = steps.last().unwrap().alpha;
        let merge = gmin <= prev * (1.0 + 1e-12);
        let alpha = if merge { prev } else { gmin };
        for t in weakest {
            if !active[t] {
                continue;
            }
            // Deactivate t and its active descendants.
            let mut stack = vec![t];
            while let Some(i) = stack.pop() {
                if active[i] {
                    active[i] = false;
                    collapse_alpha[i] = alpha;
                    n_active -= 1;
                    let s = nodes[i].split.unwrap();
                    stack.push(s.left);
                    stack.push(s.right);
                }
            }
            let (dr, dl) = (r[t] - nodes[t].sse, leaves[t] - 1);
            r[t] = nodes[t].sse;
            leaves[t] = 1;
            let mut a = parent[t];
            while a != usize::MAX {
                r[a] -= dr;
                leaves[a] -= dl;
                a = parent[a];
            }
        }
        if merge {
            steps.last_mut().unwrap().n_splits = n_active;
        } else {
            steps.push(PruneStep {
                alpha,
                n_splits: n_active,
            });
        }
    }
    PruneSequence {
        tree: tree.clone(),
        collapse_alpha,
        steps,
    }
}

/// The subtree with the largest number of splits not exceeding `target`.
pub fn prune_to_size(seq: &PruneSequence, target: usize) -> RegressionTree {
    seq.subtree(seq.index_for_size(target))
}

/// Cross-validation error along a prune sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvResult {
    pub folds: usize,
    pub seed: u64,
    /// Complexity value each subtree was evaluated at: geometric midpoints
    /// of consecutive alphas, infinity for the root.
    pub betas: Vec<f64>,
    pub n_splits: Vec<usize>,
    /// Mean over folds of the held-out mean squared error.
    pub mean: Vec<f64>,
    /// Standard deviation of the fold errors.
    pub sd: Vec<f64>,
    /// `sd / sqrt(folds)`.
    pub se: Vec<f64>,
    /// Index of the subtree with the smallest mean error (fewer splits on ties).
    pub cv_min: usize,
    /// Index of the smallest subtree whose mean error is within one fold
    /// standard deviation of the minimum.
    pub cv_1se: usize,
}

impl CvResult {
    pub fn rmse(&self, k: usize) -> f64 {
        self.mean[k].sqrt()
    }
}

/// Fit on all rows, prune, and cross-validate the sequence.
pub fn cross_validate(data: &AnalysisDataset, control: &TreeControl, folds: usize, seed: u64) -> Result<CvResult> {
    let seq = prune_sequence(&fit_tree(data, control)?);
    cross_validate_sequence(data, &seq, control, folds, seed)
}

/// K-fold cross-validation of `seq`, which must have been grown on `data`.
pub fn cross_validate_sequence(
    data: &AnalysisDataset,
    seq: &PruneSequence,
    control: &TreeControl,
    folds: usize,
    seed: u64,
) -> Result<CvResult> {
    if folds < 2 {
        return Err(Error::arg("cross-validation needs at least two folds"));
    }
    if data.len() < folds {
        return Err(Error::arg(format!("{} rows cannot fill {folds} folds", data.len())));
    }
    let alphas = seq.alphas();
    let betas: Vec<f64> = (0..alphas.len())
        .map(|k| match alphas.get(k + 1) {
            Some(next) => (alphas[k] * next).sqrt(),
            None => f64::INFINITY,
        })
        .collect();

    let mut order: Vec<usize> = (0..data.len()).collect();
    let n = order.len();
    partial_shuffle(&mut order, n, &mut rng_from_seed(seed));
    let mut fold_rows = vec![Vec::new(); folds];
    for (pos, &row) in order.iter().enumerate() {
        fold_rows[pos % folds].push(row);
    }
    for rows in &mut fold_rows {
        rows.sort_unstable();
    }

    let fold_errors: Vec<Vec<f64>> = fold_rows
        .par_iter()
        .map(|held_out| -> Result<Vec<f64>> {
            let mut is_held = vec![false; data.len()];
            for &r in held_out {
                is_held[r] = true;
            }
            let train: Vec<usize> = (0..data.len()).filter(|&r| !is_held[r]).collect();
            let fold_seq = prune_sequence(&fit_tree(&data.subset(&train), control)?);
            let mut sse = vec![0.0; betas.len()];
            let mut preds = Vec::with_capacity(betas.len());
            for &r in held_out {
                fold_seq.predictions_along(&data.row(r), &betas, &mut preds);
                let y = data.y()[r];
                for (acc, p) in sse.iter_mut().zip(&preds) {
                    *acc += (y - p) * (y - p);
                }
            }
            Ok(sse.into_iter().map(|s| s / held_out.len() as f64).collect())
        })
        .collect::<Result<_>>()?;

    let k_count = betas.len();
    let per_k = |k: usize| -> Vec<f64> { fold_errors.iter().map(|f| f[k]).collect() };
    let mean_err: Vec<f64> = (0..k_count).map(|k| mean(&per_k(k))).collect();
    let sd_err: Vec<f64> = (0..k_count).map(|k| sd(&per_k(k))).collect();
    let se_err: Vec<f64> = sd_err.iter().map(|s| s / (folds as f64).sqrt()).collect();

    let min = mean_err.iter().copied().fold(f64::INFINITY, f64::min);
    let near = |v: f64, bound: f64| v <= bound + 1e-12 * bound.abs().max(1e-300);
    // Later indices are smaller trees.
    let cv_min = (0..k_count).rev().find(|&k| near(mean_err[k], min)).unwrap();
    let bound = min + sd_err[cv_min];
    let cv_1se = (0..k_count).rev().find(|&k| near(mean_err[k], bound)).unwrap();

    Ok(CvResult {
        folds,
        seed,
        betas,
        n_splits: seq.steps().iter().map(|s| s.n_splits).collect(),
        mean: mean_err,
        sd: sd_err,
        se: se_err,
        cv_min,
        cv_1se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset(n: usize, f: impl Fn(&[f64]) -> f64) -> AnalysisDataset {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| vec![(i % 3) as f64, ((i / 3) % 3) as f64, ((i / 9) % 3) as f64])
            .collect();
        let y = rows.iter().map(|r| f(r)).collect();
        AnalysisDataset::new(vec!["a".into(), "b".into(), "c".into()], &rows, y, None).unwrap()
    }

    #[test]
    fn root_only_sequence() {
        let tree = fit_tree(&dataset(60, |_| 1.0), &TreeControl::default()).unwrap();
        let seq = prune_sequence(&tree);
        assert_eq!(
            seq.steps(),
            [PruneStep {
                alpha: 0.0,
                n_splits: 0
            }]
        );
    }

    #[test]
    fn single_split_sequence() {
        let tree = fit_tree(&dataset(90, |r| r[1].min(1.0)), &TreeControl::default()).unwrap();
        assert_eq!(tree.n_splits(), 1);
        let seq = prune_sequence(&tree);
        assert_eq!(seq.len(), 2);
        assert!((seq.steps()[1].alpha - tree.root().split.unwrap().improvement).abs() < 1e-9);
        assert_eq!(prune_to_size(&seq, 0).n_splits(), 0);
        assert_eq!(prune_to_size(&seq, 5).n_splits(), 1);
    }

    #[test]
    fn noiseless_single_split_cv() {
        let data = dataset(2700, |r| if r[2] > 1.5 { 3.0 } else { -1.0 });
        let cv = cross_validate(&data, &TreeControl::default(), 10, 4).unwrap();
        assert_eq!(cv.n_splits[cv.cv_min], 1);
        assert_eq!(cv.n_splits[cv.cv_1se], 1);
        assert!(cv.rmse(cv.cv_min) < 1e-9);
    }

    #[test]
    fn constant_response_cv() {
        let cv = cross_validate(&dataset(100, |_| 2.0), &TreeControl::default(), 10, 0).unwrap();
        assert_eq!((cv.cv_min, cv.cv_1se), (0, 0));
        assert_eq!(cv.rmse(0), 0.0);
        assert!(cross_validate(&dataset(5, |_| 2.0), &TreeControl::default(), 10, 0).is_err());
    }
}
