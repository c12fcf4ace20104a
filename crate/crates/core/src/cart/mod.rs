//! Least-squares regression trees (CART) with weakest-link pruning and
//! cross-validated subtree selection.
//!
//! Splits are of the form `x[var] <= value` with `value` the midpoint between
//! two adjacent levels of `x[var]` observed in the node; rows satisfying the
//! test go left. Equal improvements are resolved towards the lowest variable
//! index, then the lowest split value.

mod analysis;
mod prune;
mod report;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use analysis::{
    analyze, write_analysis, Analysis, AnalysisOptions, PhiModel, Response, FIXED_SIZES, IMPORTANCE_ORDER,
};
pub use prune::{
    cross_validate, cross_validate_sequence, prune_sequence, prune_to_size, CvResult, PruneSequence, PruneStep,
};
pub use report::{outlier_report, remove_rows, split_listing, variable_importance, Outlier};

/// Predictor matrix (column-major) and response.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisDataset {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    y: Vec<f64>,
    /// Replicate group of each row (e.g. the parameter combination).
    groups: Vec<usize>,
}

impl AnalysisDataset {
    /// `rows[i]` holds the predictors of row `i` in `names` order.
    pub fn new(names: Vec<String>, rows: &[Vec<f64>], y: Vec<f64>, groups: Option<Vec<usize>>) -> Result<Self> {
        if rows.len() != y.len() {
            return Err(Error::Data(format!(
                "{} predictor rows but {} responses",
                rows.len(),
                y.len()
            )));
        }
        if y.len() < 2 {
            return Err(Error::Data("a dataset needs at least two rows".into()));
        }
        if names.is_empty() {
            return Err(Error::Data("a dataset needs at least one predictor".into()));
        }
        let mut columns = vec![Vec::with_capacity(rows.len()); names.len()];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != names.len() {
                return Err(Error::Data(format!(
                    "row {i} has {} predictors, expected {}",
                    row.len(),
                    names.len()
                )));
            }
            for (col, &v) in columns.iter_mut().zip(row) {
                col.push(v);
            }
        }
        let groups = groups.unwrap_or_else(|| (0..y.len()).collect());
        if groups.len() != y.len() {
            return Err(Error::Data("group labels do not match the rows".into()));
        }
        let data = AnalysisDataset {
            names,
            columns,
            y,
            groups,
        };
        if let Some(i) =
            (0..data.len()).find(|&i| !data.y[i].is_finite() || data.columns.iter().any(|c| !c[i].is_finite()))
        {
            return Err(Error::Data(format!("row {i} has a missing or non-finite value")));
        }
        Ok(data)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_predictors(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn groups(&self) -> &[usize] {
        &self.groups
    }

    pub fn value(&self, row: usize, var: usize) -> f64 {
        self.columns[var][row]
    }

    pub fn row(&self, row: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[row]).collect()
    }

    /// The rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> AnalysisDataset {
        AnalysisDataset {
            names: self.names.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| indices.iter().map(|&i| c[i]).collect())
                .collect(),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            groups: indices.iter().map(|&i| self.groups[i]).collect(),
        }
    }
}

/// Growth limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeControl {
    /// Nodes with fewer rows are not split.
    pub min_node_rows: usize,
    /// Each child of a split has at least this many rows.
    pub min_leaf_rows: usize,
    /// A split must reduce SSE by at least this fraction of the root SSE.
    pub min_improvement_fraction: f64,
}

impl Default for TreeControl {
    fn default() -> Self {
        TreeControl {
            min_node_rows: 20,
            min_leaf_rows: 7,
            min_improvement_fraction: 1e-6,
        }
    }
}

impl TreeControl {
    pub fn validate(&self) -> Result<()> {
        if self.min_leaf_rows == 0 || self.min_node_rows < 2 {
            return Err(Error::arg("min_leaf_rows must be >= 1 and min_node_rows >= 2"));
        }
        if !(self.min_improvement_fraction >= 0.0) {
            return Err(Error::arg("min_improvement_fraction must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub var: usize,
    pub value: f64,
    pub left: usize,
    pub right: usize,
    /// SSE of the node minus the SSE of its two children.
    pub improvement: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub n: usize,
    pub mean: f64,
    pub sse: f64,
    pub split: Option<Split>,
}

/// A fitted tree; node 0 is the root. Nodes no longer reachable from the
/// root (after pruning) stay in the arena and are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    names: Vec<String>,
    nodes: Vec<Node>,
}

impl RegressionTree {
    /// Assemble a tree from an arena. Children must have larger indices
    /// than their parent and row counts must add up.
    pub fn from_nodes(names: Vec<String>, nodes: Vec<Node>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::arg("a tree needs a root"));
        }
        for (i, node) in nodes.iter().enumerate() {
            if let Some(s) = node.split {
                if s.left <= i || s.right <= i || s.left >= nodes.len() || s.right >= nodes.len() || s.left == s.right {
                    return Err(Error::arg(format!("node {i} has invalid children")));
                }
                if s.var >= names.len() {
                    return Err(Error::arg(format!("node {i} splits on unknown variable {}", s.var)));
                }
                if nodes[s.left].n + nodes[s.right].n != node.n || s.improvement < 0.0 {
                    return Err(Error::arg(format!("node {i} is inconsistent with its children")));
                }
            }
        }
        Ok(RegressionTree { names, nodes })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    /// Reachable node indices in depth-first (left before right) order.
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            out.push(i);
            if let Some(s) = self.nodes[i].split {
                stack.push(s.right);
                stack.push(s.left);
            }
        }
        out
    }

    /// Reachable internal nodes.
    pub fn internal_nodes(&self) -> Vec<usize> {
        self.preorder()
            .into_iter()
            .filter(|&i| self.nodes[i].split.is_some())
            .collect()
    }

    pub fn n_splits(&self) -> usize {
        self.internal_nodes().len()
    }

    pub fn n_leaves(&self) -> usize {
        self.n_splits() + 1
    }

    /// Sum of leaf SSEs.
    pub fn resubstitution_sse(&self) -> f64 {
        self.preorder()
            .into_iter()
            .filter(|&i| self.nodes[i].split.is_none())
            .map(|i| self.nodes[i].sse)
            .sum()
    }

    /// Index of the leaf `x` falls into.
    pub fn leaf_of(&self, x: &[f64]) -> usize {
        let mut i = 0;
        while let Some(s) = self.nodes[i].split {
            i = if x[s.var] <= s.value { s.left } else { s.right };
        }
        i
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.nodes[self.leaf_of(x)].mean
    }

    /// Copy with the splits of `collapse` nodes removed.
    pub(crate) fn collapsed(&self, collapse: impl Fn(usize) -> bool) -> RegressionTree {
        let mut out = self.clone();
        for (i, node) in out.nodes.iter_mut().enumerate() {
            if node.split.is_some() && collapse(i) {
                node.split = None;
            }
        }
        out
    }
}

fn mean_sse(y: &[f64], rows: &[usize]) -> (f64, f64) {
    let n = rows.len() as f64;
    let mean = rows.iter().map(|&r| y[r]).sum::<f64>() / n;
    let sse = rows.iter().map(|&r| (y[r] - mean) * (y[r] - mean)).sum();
    (mean, sse)
}

/// Best admissible split of `rows`, or `None`.
pub(crate) fn best_split(
    data: &AnalysisDataset,
    rows: &[usize],
    control: &TreeControl,
    min_gain: f64,
) -> Option<(usize, f64, f64)> {
    let n = rows.len();
    if n < control.min_node_rows || n < 2 * control.min_leaf_rows {
        return None;
    }
    let mut best: Option<(usize, f64, f64)> = None;
    let mut levels: Vec<(f64, f64)> = Vec::with_capacity(n);
    let total: f64 = rows.iter().map(|&r| data.y[r]).sum();
    for var in 0..data.n_predictors() {
        let col = &data.columns[var];
        levels.clear();
        levels.extend(rows.iter().map(|&r| (col[r], data.y[r])));
        levels.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (mut n_left, mut sum_left) = (0usize, 0.0);
        let mut i = 0;
        while i < n {
            let x = levels[i].0;
            while i < n && levels[i].0 == x {
                n_left += 1;
                sum_left += levels[i].1;
                i += 1;
            }
            if i == n {
                break;
            }
            let n_right = n - n_left;
            if n_left < control.min_leaf_rows || n_right < control.min_leaf_rows {
                continue;
            }
            let diff = sum_left / n_left as f64 - (total - sum_left) / n_right as f64;
            let gain = n_left as f64 * n_right as f64 / n as f64 * diff * diff;
            let value = 0.5 * (x + levels[i].0);
            let better = match best {
                None => true,
                Some((_, _, g)) => gain > g * (1.0 + 1e-12) + 1e-300,
            };
            if better {
                best = Some((var, value, gain));
            }
        }
    }
    best.filter(|&(_, _, gain)| gain > 0.0 && gain >= min_gain)
}

/// Grow a tree by recursive partitioning.
pub fn fit_tree(data: &AnalysisDataset, control: &TreeControl) -> Result<RegressionTree> {
    control.validate()?;
    let all: Vec<usize> = (0..data.len()).collect();
    let (mean, sse) = mean_sse(&data.y, &all);
    let min_gain = control.min_improvement_fraction * sse;
    let mut nodes = vec![Node {
        n: all.len(),
        mean,
        sse,
        split: None,
    }];
    let mut stack = vec![(0usize, all)];
    while let Some((id, rows)) = stack.pop() {
        let Some((var, value, _)) = best_split(data, &rows, control, min_gain) else {
            continue;
        };
        let col = &data.columns[var];
        let (left, right): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| col[r] <= value);
        let (lm, ls) = mean_sse(&data.y, &left);
        let (rm, rs) = mean_sse(&data.y, &right);
        let l_id = nodes.len();
        let r_id = l_id + 1;
        nodes.push(Node {
            n: left.len(),
            mean: lm,
            sse: ls,
            split: None,
        });
        nodes.push(Node {
            n: right.len(),
            mean: rm,
            sse: rs,
            split: None,
        });
        nodes[id].split = Some(Split {
            var,
            value,
            left: l_id,
            right: r_id,
            improvement: (nodes[id].sse - ls - rs).max(0.0),
        });
        stack.push((r_id, right));
        stack.push((l_id, left));
    }
    Ok(RegressionTree {
        names: data.names.clone(),
        nodes,
    })
}
