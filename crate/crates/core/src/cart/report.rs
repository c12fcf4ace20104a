use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::Serialize;

use super::{AnalysisDataset, RegressionTree};

/// Split improvements summed per variable and scaled to sum to one.
/// Variables the tree never splits on are absent.
pub fn variable_importance(tree: &RegressionTree) -> BTreeMap<String, f64> {
    let mut raw: BTreeMap<String, f64> = BTreeMap::new();
    for i in tree.internal_nodes() {
        let s = tree.nodes()[i].split.unwrap();
        *raw.entry(tree.names()[s.var].clone()).or_insert(0.0) += s.improvement;
    }
    let total: f64 = raw.values().sum();
    if total > 0.0 {
        raw.values_mut().for_each(|v| *v /= total);
    } else {
        // Only zero-improvement splits: share equally among split variables.
        let k = raw.len() as f64;
        raw.values_mut().for_each(|v| *v = 1.0 / k);
    }
    raw
}

/// A row whose response sits far from its group mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Outlier {
    pub row: usize,
    pub group: usize,
    pub y: f64,
    pub group_mean: f64,
    /// Deviation from the group mean in pooled standard deviations.
    pub z: f64,
}

/// Rows deviating from their group mean by more than `threshold_sd`
/// pooled within-group standard deviations. Flags only; see [`remove_rows`].
pub fn outlier_report(data: &AnalysisDataset, threshold_sd: f64) -> Vec<Outlier> {
    let mut sums: HashMap<usize, (f64, usize)> = HashMap::new();
    for (&g, &y) in data.groups().iter().zip(data.y()) {
        let e = sums.entry(g).or_insert((0.0, 0));
        e.0 += y;
        e.1 += 1;
    }
    let dof = data.len().saturating_sub(sums.len());
    if dof == 0 {
        return Vec::new();
    }
    let group_mean = |g: usize| sums[&g].0 / sums[&g].1 as f64;
    let ss: f64 = data
        .groups()
        .iter()
        .zip(data.y())
        .map(|(&g, &y)| (y - group_mean(g)).powi(2))
        .sum();
    let pooled = (ss / dof as f64).sqrt();
    if pooled == 0.0 {
        return Vec::new();
    }
    data.groups()
        .iter()
        .zip(data.y())
        .enumerate()
        .filter_map(|(row, (&group, &y))| {
            let m = group_mean(group);
            let z = (y - m) / pooled;
            (z.abs() > threshold_sd).then_some(Outlier {
                row,
                group,
                y,
                group_mean: m,
                z,
            })
        })
        .collect()
}

/// `data` without the flagged rows.
pub fn remove_rows(data: &AnalysisDataset, flagged: &[Outlier]) -> AnalysisDataset {
    let drop: std::collections::HashSet<usize> = flagged.iter().map(|o| o.row).collect();
    let keep: Vec<usize> = (0..data.len()).filter(|r| !drop.contains(r)).collect();
    data.subset(&keep)
}

/// Indented listing, one line per node. Child lines start with the
/// condition that leads to them; leaves end in `*`.
pub fn split_listing(tree: &RegressionTree) -> String {
    let mut out = String::new();
    line(&mut out, 0, "root", tree, 0);
    fn line(out: &mut String, depth: usize, cond: &str, tree: &RegressionTree, i: usize) {
        let node = tree.nodes()[i];
        let indent = "  ".repeat(depth);
        match node.split {
            Some(s) => {
                let _ = writeln!(
                    out,
                    "{indent}{cond} | n={} mean={:.6} improvement={:.6}",
                    node.n, node.mean, s.improvement
                );
                let var = &tree.names()[s.var];
                line(out, depth + 1, &format!("{var} <= {}", s.value), tree, s.left);
                line(out, depth + 1, &format!("{var} > {}", s.value), tree, s.right);
            }
            None => {
                let _ = writeln!(out, "{indent}{cond} | n={} mean={:.6} *", node.n, node.mean);
            }
        }
    }
    out
}
