//! Replicated simulations over a parameter grid, reduced to cumulative
//! incidence (CII) and peak outbreak size.

mod grid;
mod record;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::Serialize;

use crate::epidemic::{initialize, SimConfig, Simulator, Trajectory};
use crate::error::{Error, Result};
use crate::network::{
    apply_threshold, largest_component, network_stats, thin_uniform, thinning_target, EnrollmentNetwork, NetworkStats,
    Threshold,
};
use crate::rng::{derive_seed, label, partial_shuffle, rng_from_seed};
use crate::stats::mean;

pub use grid::{build_grid, Combination, ParameterGrid};
pub use record::{read_sweep_csv, write_sweep_csv, ReductionMode, SweepRecord, SWEEP_HEADER};

/// Outbreak summaries of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    /// Fraction of the population that left S by the last day.
    pub cii: f64,
    /// Largest daily fraction in E, A, I1 or I2.
    pub peak: f64,
    pub final_day_active: u32,
}

pub fn summarize(traj: &Trajectory, population: usize) -> Result<Summary> {
    if population == 0 || traj.rows.is_empty() {
        return Err(Error::arg("cannot summarize an empty trajectory"));
    }
    if let Some((day, _)) = traj
        .rows
        .iter()
        .enumerate()
        .find(|(_, r)| r.iter().map(|&x| x as usize).sum::<usize>() != population)
    {
        return Err(Error::Data(format!(
            "trajectory row {day} does not sum to {population}"
        )));
    }
    let n = population as f64;
    let last = traj.final_row();
    Ok(Summary {
        cii: (n - f64::from(last[0])) / n,
        peak: f64::from(traj.active().max().unwrap_or(0)) / n,
        final_day_active: last[1] + last[2] + last[3] + last[4],
    })
}

/// `log(p / (1 - p))` after clamping `p` into `[eps, 1 - eps]`.
pub fn logit(p: f64, eps: f64) -> f64 {
    let p = p.clamp(eps, 1.0 - eps);
    (p / (1.0 - p)).ln()
}

/// Logit of every value with `eps = 1 / (2 n_max)`; also returns how many
/// values were clamped.
pub fn logit_all(values: &[f64], n_max: usize) -> (Vec<f64>, usize) {
    let eps = 1.0 / (2.0 * n_max.max(1) as f64);
    let clamped = values.iter().filter(|&&p| p < eps || p > 1.0 - eps).count();
    (values.iter().map(|&p| logit(p, eps)).collect(), clamped)
}

/// Settings for [`run_sweep`].
#[derive(Debug, Clone, Serialize)]
pub struct SweepOptions {
    pub reps: usize,
    pub master_seed: u64,
    pub mode: ReductionMode,
    pub n_days: u32,
    pub n_initial: usize,
    /// Worker threads; 0 uses every available core.
    pub jobs: usize,
    /// Run only this many combinations, chosen uniformly by the master seed.
    pub subsample: Option<usize>,
    pub keep_trajectories: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            reps: 50,
            master_seed: 0,
            mode: ReductionMode::Threshold,
            n_days: 90,
            n_initial: 10,
            jobs: 0,
            subsample: None,
            keep_trajectories: false,
        }
    }
}

/// A reduced network and the statistics of the reduction.
#[derive(Debug, Clone)]
pub struct ReducedNetwork {
    pub phi: Threshold,
    /// Largest component of the reduced network; the simulation population.
    pub network: EnrollmentNetwork,
    /// Statistics of the reduced network before component extraction.
    pub stats: NetworkStats,
}

/// Seed of the thinned network for `phi`.
pub fn thinning_seed(master_seed: u64, phi: Threshold) -> u64 {
    let phi = match phi {
        Threshold::Finite(p) => u64::from(p),
        Threshold::Infinite => u64::MAX,
    };
    derive_seed(master_seed, &[label("thin"), phi])
}

/// Seed of one simulation run.
pub fn run_seed(master_seed: u64, mode: ReductionMode, combo_index: usize, replicate: usize) -> u64 {
    derive_seed(
        master_seed,
        &[label("run"), label(mode.as_str()), combo_index as u64, replicate as u64],
    )
}

/// Reduce `base` for `phi`: threshold or thin, then keep the largest
/// component.
pub fn reduce_network(
    base: &EnrollmentNetwork,
    phi: Threshold,
    mode: ReductionMode,
    master_seed: u64,
) -> Result<ReducedNetwork> {
    let reduced = match mode {
        ReductionMode::Threshold => apply_threshold(base, phi)?,
        ReductionMode::Thin => {
            if phi.is_infinite() {
                return Err(Error::arg("thinning needs a finite threshold to match"));
            }
            // Validates phi the same way thresholding does.
            apply_threshold(&EnrollmentNetwork::default(), phi)?;
            let target = thinning_target(base, phi);
            thin_uniform(base, target, &mut rng_from_seed(thinning_seed(master_seed, phi)))?
        }
    };
    let stats = network_stats(&reduced);
    Ok(ReducedNetwork {
        phi,
        network: largest_component(&reduced),
        stats,
    })
}

/// The combinations a sweep runs: the whole grid, or a seeded uniform
/// subsample kept in index order.
pub fn select_combinations(
    grid: &ParameterGrid,
    subsample: Option<usize>,
    master_seed: u64,
) -> Result<Vec<Combination>> {
    let all = build_grid(grid)?;
    match subsample {
        None => Ok(all),
        Some(0) => Err(Error::arg("grid subsample must be positive")),
        Some(k) if k >= all.len() => Ok(all),
        Some(k) => {
            let mut order: Vec<usize> = (0..all.len()).collect();
            partial_shuffle(
                &mut order,
                k,
                &mut rng_from_seed(derive_seed(master_seed, &[label("subsample")])),
            );
            let mut chosen = order[..k].to_vec();
            chosen.sort_unstable();
            Ok(chosen.into_iter().map(|i| all[i]).collect())
        }
    }
}

/// Everything a sweep produces.
#[derive(Debug, Clone)]
pub struct SweepOutput {
    /// Sorted by `(combo_index, replicate)`.
    pub records: Vec<SweepRecord>,
    pub networks: Vec<ReducedNetwork>,
    /// Aligned with `records` when trajectories were kept, else empty.
    pub trajectories: Vec<Trajectory>,
    /// Per-pair probabilities clamped into `[0, 1]`, summed over runs.
    pub tau_clamps: u64,
}

/// Progress callback receiving `(completed, total)`.
pub type Progress<'a> = &'a (dyn Fn(usize, usize) + Sync);

/// Run `opts.reps` simulations for every selected combination. The output is
/// independent of `opts.jobs`.
pub fn run_sweep(
    base: &EnrollmentNetwork,
    grid: &ParameterGrid,
    opts: &SweepOptions,
    progress: Option<Progress<'_>>,
) -> Result<SweepOutput> {
    if opts.reps == 0 {
        return Err(Error::arg("reps must be positive"));
    }
    if let Some(class) = base
        .classes()
        .iter()
        .find(|c| c.size() < 2 || c.meeting_days.is_empty())
    {
        return Err(Error::arg(format!(
            "class {} is degenerate; drop degenerate classes before sweeping",
            class.id
        )));
    }
    if opts.mode == ReductionMode::Thin && grid.phi.iter().any(|p| p.is_infinite()) {
        return Err(Error::arg("thin mode does not accept phi = inf"));
    }
    let combos = select_combinations(grid, opts.subsample, opts.master_seed)?;

    let mut phis: Vec<Threshold> = grid.phi.clone();
    phis.sort();
    phis.dedup();
    let mut networks = Vec::with_capacity(phis.len());
    for &phi in &phis {
        let reduced = reduce_network(base, phi, opts.mode, opts.master_seed)?;
        if reduced.network.n_students() < opts.n_initial.max(1) {
            return Err(Error::Data(format!(
                "reduced network at phi = {phi} has {} students, fewer than the {} initial cases",
                reduced.network.n_students(),
                opts.n_initial
            )));
        }
        networks.push(reduced);
    }
    let by_phi: BTreeMap<Threshold, &EnrollmentNetwork> = networks.iter().map(|r| (r.phi, &r.network)).collect();

    let total = combos.len() * opts.reps;
    let done = AtomicUsize::new(0);
    let run_one = |job: usize| -> Result<(SweepRecord, Trajectory)> {
        let combo = &combos[job / opts.reps];
        let replicate = job % opts.reps;
        let net = by_phi[&combo.phi];
        let seed = run_seed(opts.master_seed, opts.mode, combo.index, replicate);
        let cfg = SimConfig {
            n_days: opts.n_days,
            n_initial: opts.n_initial,
            seed,
        };
        let mut rng = rng_from_seed(seed);
        let mut state = initialize(net, &cfg, &mut rng)?;
        let mut sim = Simulator::new(net, combo.params)?;
        sim.load(&state)?;
        let traj = sim.run(&mut state, cfg.n_days, &mut rng);
        let s = summarize(&traj, net.n_students())?;
        let record = SweepRecord {
            combo_index: combo.index,
            params: combo.params,
            phi: combo.phi,
            mode: opts.mode,
            replicate,
            seed,
            n: net.n_students(),
            cii: s.cii,
            peak: s.peak,
            final_day_active: s.final_day_active,
        };
        let completed = done.fetch_add(1, Ordering::Relaxed) + 1;
        if let Some(report) = progress {
            report(completed, total);
        }
        Ok((record, traj))
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| Error::arg(format!("cannot start worker pool: {e}")))?;
    let results: Vec<(SweepRecord, Trajectory)> =
        pool.install(|| (0..total).into_par_iter().map(run_one).collect::<Result<_>>())?;

    let tau_clamps = results.iter().map(|(_, t)| t.tau_clamps).sum();
    let (records, trajectories): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok(SweepOutput {
        records,
        networks,
        trajectories: if opts.keep_trajectories {
            trajectories
        } else {
            Vec::new()
        },
        tau_clamps,
    })
}

/// Per-`phi` means over a set of records.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiSummary {
    pub phi: Threshold,
    pub mode: ReductionMode,
    pub runs: usize,
    pub population: usize,
    pub mean_cii: f64,
    pub mean_peak: f64,
}

pub fn phi_summaries(records: &[SweepRecord]) -> Vec<PhiSummary> {
    let mut groups: BTreeMap<(ReductionMode, Threshold), Vec<&SweepRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.mode, r.phi)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((mode, phi), rs)| {
            let cii: Vec<f64> = rs.iter().map(|r| r.cii).collect();
            let peak: Vec<f64> = rs.iter().map(|r| r.peak).collect();
            PhiSummary {
                phi,
                mode,
                runs: rs.len(),
                population: rs.iter().map(|r| r.n).max().unwrap_or(0),
                mean_cii: mean(&cii),
                mean_peak: mean(&peak),
            }
        })
        .collect()
}

/// Trajectories in long format: `combo_index,replicate,day,S,E,A,I1,I2,R`.
pub fn write_trajectories_csv<W: std::io::Write>(
    records: &[SweepRecord],
    trajectories: &[Trajectory],
    out: W,
) -> Result<()> {
    if records.len() != trajectories.len() {
        return Err(Error::arg("records and trajectories are not aligned"));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["combo_index", "replicate", "day", "S", "E", "A", "I1", "I2", "R"])?;
    for (r, t) in records.iter().zip(trajectories) {
        for (day, row) in t.rows.iter().enumerate() {
            let mut rec = vec![r.combo_index.to_string(), r.replicate.to_string(), day.to_string()];
            rec.extend(row.iter().map(u32::to_string));
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(|e| Error::io("<trajectory csv>", e))?;
    Ok(())
}
