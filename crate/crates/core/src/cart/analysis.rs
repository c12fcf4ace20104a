//! Per-threshold tree models over a sweep and their tables.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use super::{
    cross_validate_sequence, fit_tree, outlier_report, prune_sequence, remove_rows, split_listing, variable_importance,
    AnalysisDataset, CvResult, Outlier, PruneSequence, RegressionTree, TreeControl,
};
use crate::epidemic::PARAM_NAMES;
use crate::error::{Error, Result};
use crate::network::Threshold;
use crate::rng::{derive_seed, label};
use crate::sweep::{logit_all, ReductionMode, SweepRecord};

/// Tree sizes reported alongside the cross-validated choices.
pub const FIXED_SIZES: [usize; 5] = [10, 25, 50, 100, 200];

/// Column order of the importance table.
pub const IMPORTANCE_ORDER: [&str; 8] = ["rho_A", "rho_I1", "theta_I2", "q_E", "q_A", "q_I1", "q_I2", "q_EA"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Response {
    Cii,
    Peak,
}

impl Response {
    pub fn of(self, r: &SweepRecord) -> f64 {
        match self {
            Response::Cii => r.cii,
            Response::Peak => r.peak,
        }
    }
}

impl fmt::Display for Response {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Response::Cii => "cii",
            Response::Peak => "peak",
        })
    }
}

impl FromStr for Response {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "cii" => Ok(Response::Cii),
            "peak" => Ok(Response::Peak),
            _ => Err(format!("unknown response `{s}` (expected `cii` or `peak`)")),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisOptions {
    pub response: Response,
    pub folds: usize,
    pub seed: u64,
    pub control: TreeControl,
    /// Rows further than this many pooled standard deviations from their
    /// combination mean are reported.
    pub outlier_sd: f64,
    /// Drop reported outliers before fitting.
    pub remove_outliers: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            response: Response::Cii,
            folds: 10,
            seed: 0,
            control: TreeControl::default(),
            outlier_sd: 5.0,
            remove_outliers: false,
        }
    }
}

/// Models for one threshold.
#[derive(Debug, Clone)]
pub struct PhiModel {
    pub phi: Threshold,
    /// Rows fitted (after any outlier removal).
    pub rows: usize,
    pub sequence: PruneSequence,
    pub cv: CvResult,
    pub outliers: Vec<Outlier>,
    pub removed: usize,
}

impl PhiModel {
    /// `(selector, index into the sequence)` for every reported tree.
    pub fn selections(&self) -> Vec<(String, usize)> {
        let mut out: Vec<(String, usize)> = FIXED_SIZES
            .iter()
            .map(|&s| (s.to_string(), self.sequence.index_for_size(s)))
            .collect();
        out.push(("cv_1se".into(), self.cv.cv_1se));
        out.push(("cv_min".into(), self.cv.cv_min));
        out
    }

    pub fn tree(&self, selector: &str) -> Option<RegressionTree> {
        self.selections()
            .into_iter()
            .find(|(s, _)| s == selector)
            .map(|(_, k)| self.sequence.subtree(k))
    }

    /// Importance scores of the selected tree in [`IMPORTANCE_ORDER`].
    pub fn importance(&self, selector: &str) -> Option<Vec<Option<f64>>> {
        let imp = variable_importance(&self.tree(selector)?);
        Some(IMPORTANCE_ORDER.iter().map(|v| imp.get(*v).copied()).collect())
    }
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub mode: ReductionMode,
    pub response: Response,
    /// Largest population in the input; fixes the logit clamp.
    pub n_max: usize,
    pub logit_clamps: usize,
    pub models: Vec<PhiModel>,
}

fn phi_label(phi: Threshold) -> u64 {
    match phi {
        Threshold::Finite(p) => u64::from(p),
        Threshold::Infinite => u64::MAX,
    }
}

/// Fit, prune and cross-validate one tree family per threshold.
pub fn analyze(records: &[SweepRecord], opts: &AnalysisOptions) -> Result<Analysis> {
    let first = records
        .first()
        .ok_or_else(|| Error::Data("no sweep records to analyze".into()))?;
    if let Some(r) = records.iter().find(|r| r.mode != first.mode) {
        return Err(Error::Data(format!(
            "records mix reduction modes `{}` and `{}`; analyze them separately",
            first.mode, r.mode
        )));
    }
    opts.control.validate()?;
    let n_max = records.iter().map(|r| r.n).max().unwrap_or(1);
    let raw: Vec<f64> = records.iter().map(|r| opts.response.of(r)).collect();
    let (y, logit_clamps) = logit_all(&raw, n_max);

    let mut groups: BTreeMap<Threshold, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        groups.entry(r.phi).or_default().push(i);
    }
    let names: Vec<String> = PARAM_NAMES.iter().map(|s| s.to_string()).collect();
    let models = groups
        .into_par_iter()
        .map(|(phi, idx)| -> Result<PhiModel> {
            let rows: Vec<Vec<f64>> = idx.iter().map(|&i| records[i].params.to_array().to_vec()).collect();
            let ys = idx.iter().map(|&i| y[i]).collect();
            let combos = idx.iter().map(|&i| records[i].combo_index).collect();
            let data = AnalysisDataset::new(names.clone(), &rows, ys, Some(combos))
                .map_err(|e| Error::Data(format!("phi = {phi}: {e}")))?;
            let outliers = outlier_report(&data, opts.outlier_sd);
            let data = if opts.remove_outliers {
                remove_rows(&data, &outliers)
            } else {
                data
            };
            let removed = if opts.remove_outliers { outliers.len() } else { 0 };
            let sequence = prune_sequence(&fit_tree(&data, &opts.control)?);
            let folds = opts.folds.min(data.len());
            let seed = derive_seed(opts.seed, &[label("cv"), phi_label(phi)]);
            let cv = cross_validate_sequence(&data, &sequence, &opts.control, folds, seed)?;
            Ok(PhiModel {
                phi,
                rows: data.len(),
                sequence,
                cv,
                outliers,
                removed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Analysis {
        mode: first.mode,
        response: opts.response,
        n_max,
        logit_clamps,
        models,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn csv_bytes(header: &[&str], rows: Vec<Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| Error::Data(e.to_string()))
}

/// Write the CV table, CV path, importance table, outlier list and split
/// listings into `dir`. Returns the files written.
pub fn write_analysis(analysis: &Analysis, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut emit = |name: String, bytes: Vec<u8>| -> Result<()> {
        let path = dir.join(name);
        write_file(&path, &bytes)?;
        written.push(path);
        Ok(())
    };

    let mut cv_rows = Vec::new();
    let mut path_rows = Vec::new();
    let mut imp_rows = Vec::new();
    let mut out_rows = Vec::new();
    for m in &analysis.models {
        for (selector, k) in m.selections() {
            cv_rows.push(vec![
                m.phi.to_string(),
                selector.clone(),
                m.cv.n_splits[k].to_string(),
                m.cv.rmse(k).to_string(),
            ]);
            let mut row = vec![m.phi.to_string(), selector.clone()];
            row.extend(
                m.importance(&selector)
                    .unwrap()
                    .into_iter()
                    .map(|v| v.map(|x| x.to_string()).unwrap_or_default()),
            );
            imp_rows.push(row);
        }
        for (k, step) in m.sequence.steps().iter().enumerate() {
            path_rows.push(vec![
                m.phi.to_string(),
                step.n_splits.to_string(),
                step.alpha.to_string(),
                m.cv.mean[k].to_string(),
                m.cv.sd[k].to_string(),
                m.cv.rmse(k).to_string(),
            ]);
        }
        for o in &m.outliers {
            out_rows.push(vec![
                m.phi.to_string(),
                o.row.to_string(),
                o.group.to_string(),
                o.y.to_string(),
                o.group_mean.to_string(),
                o.z.to_string(),
                m.removed.min(1).to_string(),
            ]);
        }
    }
    emit(
        "cv_table.csv".into(),
        csv_bytes(&["phi", "selector", "splits", "cv_rmse"], cv_rows)?,
    )?;
    let mut imp_header = vec!["phi", "tree"];
    imp_header.extend(IMPORTANCE_ORDER);
    emit("importance.csv".into(), csv_bytes(&imp_header, imp_rows)?)?;
    emit(
        "cv_path.csv".into(),
        csv_bytes(&["phi", "splits", "alpha", "cv_mse", "cv_sd", "cv_rmse"], path_rows)?,
    )?;
    emit(
        "outliers.csv".into(),
        csv_bytes(
            &["phi", "row", "combo_index", "y", "combo_mean", "z", "removed"],
            out_rows,
        )?,
    )?;
    for m in &analysis.models {
        for (selector, k) in m.selections() {
            let text = split_listing(&m.sequence.subtree(k));
            emit(format!("splits_phi{}_{}.txt", m.phi, selector), text.into_bytes())?;
        }
    }
    Ok(written)
}
