//! Command-line front end: `generate`, `stats`, `reduce`, `simulate`,
//! `sweep`, `analyze`.
//!
//! Exit status: 0 on success, 1 for I/O or data errors, 2 for usage or
//! configuration errors.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::cart::{analyze, write_analysis, AnalysisOptions, Response, TreeControl};
use crate::config::FlatConfig;
use crate::epidemic::{run_simulation, EpidemicParams, SimConfig, PARAM_NAMES};
use crate::error::{Error, Result};
use crate::manifest::{manifest_path, write_atomic, RunManifest};
use crate::network::{
    drop_degenerate, largest_component, network_stats, read_enrollments, write_enrollments, Threshold,
};
use crate::sweep::{
    read_sweep_csv, reduce_network, run_sweep, write_sweep_csv, write_trajectories_csv, ParameterGrid, ReductionMode,
    SweepOptions,
};
use crate::synthgen::{generate, SynthConfig};

#[derive(Debug, Parser)]
#[command(
    name = "enrollnet",
    version,
    about = "Epidemic simulation on class-enrollment networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic enrollment network.
    Generate(GenerateArgs),
    /// Print network size statistics, per threshold.
    Stats(StatsArgs),
    /// Threshold or thin a network and keep its largest component.
    Reduce(ReduceArgs),
    /// Run one outbreak and write its daily compartment counts.
    Simulate(SimulateArgs),
    /// Run replicated outbreaks over a parameter grid.
    Sweep(SweepArgs),
    /// Fit per-threshold regression trees to a sweep.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    SfuLike,
    Desk,
}

impl Preset {
    fn config(self, seed: u64) -> SynthConfig {
        match self {
            Preset::SfuLike => SynthConfig::sfu_like(seed),
            Preset::Desk => SynthConfig::desk(seed),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Threshold,
    Thin,
}

impl From<ModeArg> for ReductionMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Threshold => ReductionMode::Threshold,
            ModeArg::Thin => ReductionMode::Thin,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ResponseArg {
    Cii,
    Peak,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Built-in configuration.
    #[arg(long, conflicts_with = "config")]
    pub preset: Option<Preset>,
    /// Flat `key = value` generator configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides any seed in the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    pub network: PathBuf,
    /// Thresholds to tabulate.
    #[arg(long, value_delimiter = ',', default_value = "20,50,100,inf")]
    pub phi: Vec<Threshold>,
    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    pub network: PathBuf,
    #[arg(long)]
    pub phi: Threshold,
    #[arg(long, value_enum, default_value = "threshold")]
    pub mode: ModeArg,
    /// Seed of the thinning draw.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long, default_value_t = 90)]
    pub days: u32,
    /// Students placed in I2 on day 0.
    #[arg(long, default_value_t = 10)]
    pub initial: usize,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub network: PathBuf,
    /// Flat file with any of the eight disease parameters.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Set one parameter, e.g. `--param theta_I2=0.24`.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long, default_value = "inf")]
    pub phi: Threshold,
    #[arg(long, value_enum, default_value = "threshold")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub network: PathBuf,
    /// Flat file of candidate lists (`theta_I2 = 0.141, 0.198` ... `phi = 20, inf`).
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Replace the threshold list.
    #[arg(long, value_delimiter = ',')]
    pub phi: Option<Vec<Threshold>>,
    #[arg(long, default_value_t = 50)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "threshold")]
    pub mode: ModeArg,
    /// Run a seeded uniform sample of this many combinations.
    #[arg(long = "subsample-grid")]
    pub subsample: Option<usize>,
    /// Worker threads (0: all cores).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Also write every trajectory to `<output>.trajectories.csv`.
    #[arg(long)]
    pub keep_trajectories: bool,
    /// No progress on standard error.
    #[arg(long, short)]
    pub quiet: bool,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub sweep: PathBuf,
    #[arg(long, value_enum, default_value = "cii")]
    pub response: ResponseArg,
    /// Seed of the cross-validation folds.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, default_value_t = 20)]
    pub min_node_rows: usize,
    #[arg(long, default_value_t = 7)]
    pub min_leaf_rows: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub min_improvement_fraction: f64,
    /// Report rows this many pooled standard deviations from their
    /// combination mean.
    #[arg(long, default_value_t = 5.0)]
    pub outlier_sd: f64,
    /// Drop reported outliers before fitting.
    #[arg(long)]
    pub remove_outliers: bool,
    /// Output directory.
    #[arg(short, long)]
    pub output: PathBuf,
}

/// Parse `args` and run; returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                2
            } else {
                1
            }
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Stats(a) => cmd_stats(&a),
        Command::Reduce(a) => cmd_reduce(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Analyze(a) => cmd_analyze(&a),
    }
}

fn csv_to_file(path: &Path, fill: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    fill(&mut buf)?;
    write_atomic(path, &buf)
}

fn load_network(path: &Path) -> Result<crate::network::EnrollmentNetwork> {
    Ok(drop_degenerate(&read_enrollments(path)?))
}

pub fn cmd_generate(a: &GenerateArgs) -> Result<()> {
    let mut cfg = match (&a.preset, &a.config) {
        (_, Some(path)) => SynthConfig::from_flat(&FlatConfig::read(path)?)?,
        (Some(p), None) => p.config(0),
        (None, None) => return Err(Error::arg("give --preset or --config")),
    };
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let net = generate(&cfg)?;
    csv_to_file(&a.output, |buf| write_enrollments(&net, buf))?;
    let mut m = RunManifest::new("generate", cfg.seed, json!({ "synth_config": cfg.to_flat_string() }));
    if let Some(path) = &a.config {
        m.add_input(path)?;
    }
    m.add_output(&a.output);
    m.write(&manifest_path(&a.output))
}

pub fn cmd_stats(a: &StatsArgs) -> Result<()> {
    let raw = read_enrollments(&a.network)?;
    let net = drop_degenerate(&raw);
    let mut rows = Vec::new();
    for &phi in &a.phi {
        let r = reduce_network(&net, phi, ReductionMode::Threshold, 0)?;
        rows.push((phi, r.stats));
    }
    let mut out = std::io::stdout().lock();
    let write_err = |e| Error::io("<stdout>", e);
    if a.json {
        let per_phi: Vec<_> = rows.iter().map(|(phi, s)| json!({ "phi": phi, "stats": s })).collect();
        let doc = json!({
            "input": network_stats(&raw),
            "degenerate_free": network_stats(&net),
            "thresholds": per_phi,
        });
        writeln!(out, "{}", serde_json::to_string_pretty(&doc)?).map_err(write_err)?;
    } else {
        let s = network_stats(&net);
        writeln!(
            out,
            "students {}  classes {}  enrollments {}  largest component {}  max class size {}",
            s.n_students, s.n_classes, s.n_enrollments, s.n_students_lcc, s.max_class_size
        )
        .map_err(write_err)?;
        writeln!(out, "threshold,network_size,largest_component").map_err(write_err)?;
        for (phi, s) in &rows {
            writeln!(out, "{phi},{},{}", s.n_students, s.n_students_lcc).map_err(write_err)?;
        }
    }
    Ok(())
}

pub fn cmd_reduce(a: &ReduceArgs) -> Result<()> {
    let net = load_network(&a.network)?;
    let r = reduce_network(&net, a.phi, a.mode.into(), a.seed)?;
    csv_to_file(&a.output, |buf| write_enrollments(&r.network, buf))?;
    let mut m = RunManifest::new(
        "reduce",
        a.seed,
        json!({ "phi": a.phi, "mode": ReductionMode::from(a.mode), "reduced_stats": r.stats }),
    );
    m.add_input(&a.network)?;
    m.add_output(&a.output);
    m.write(&manifest_path(&a.output))
}

fn parse_params(file: Option<&Path>, overrides: &[String]) -> Result<EpidemicParams> {
    let mut v = EpidemicParams::central().to_array();
    let mut apply = |cfg: &FlatConfig| -> Result<()> {
        cfg.reject_unknown(&PARAM_NAMES)?;
        for (k, name) in PARAM_NAMES.iter().enumerate() {
            if let Some(x) = cfg.parsed::<f64>(name)? {
                v[k] = x;
            }
        }
        Ok(())
    };
    if let Some(path) = file {
        apply(&FlatConfig::read(path)?)?;
    }
    apply(&FlatConfig::parse(&overrides.join("\n"))?)?;
    let p = EpidemicParams::from_array(v);
    p.validate()?;
    Ok(p)
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let params = parse_params(a.params.as_deref(), &a.overrides)?;
    let net = load_network(&a.network)?;
    let net = if a.phi.is_infinite() && a.mode == ModeArg::Threshold {
        largest_component(&net)
    } else {
        reduce_network(&net, a.phi, a.mode.into(), a.seed)?.network
    };
    let cfg = SimConfig {
        n_days: a.sim.days,
        n_initial: a.sim.initial,
        seed: a.seed,
    };
    let traj = run_simulation(&net, &params, &cfg)?;
    csv_to_file(&a.output, |buf| traj.write_csv(buf))?;
    let mut m = RunManifest::new(
        "simulate",
        a.seed,
        json!({
            "params": params,
            "phi": a.phi,
            "mode": ReductionMode::from(a.mode),
            "days": a.sim.days,
            "initial": a.sim.initial,
            "population": net.n_students(),
            "tau_clamps": traj.tau_clamps,
        }),
    );
    if let Some(p) = &a.params {
        m.add_input(p)?;
    }
    m.add_input(&a.network)?;
    m.add_output(&a.output);
    m.write(&manifest_path(&a.output))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let mut grid = ParameterGrid::default();
    if let Some(path) = &a.grid {
        let cfg = FlatConfig::read(path)?;
        let mut allowed = PARAM_NAMES.to_vec();
        allowed.push("phi");
        cfg.reject_unknown(&allowed)?;
        grid.apply_flat(&cfg)?;
    }
    if let Some(phi) = &a.phi {
        grid.phi = phi.clone();
        grid.validate()?;
    }
    let opts = SweepOptions {
        reps: a.reps,
        master_seed: a.seed,
        mode: a.mode.into(),
        n_days: a.sim.days,
        n_initial: a.sim.initial,
        jobs: a.jobs,
        subsample: a.subsample,
        keep_trajectories: a.keep_trajectories,
    };
    if opts.mode == ReductionMode::Thin && grid.phi.iter().any(|p| p.is_infinite()) {
        return Err(Error::arg(
            "--mode thin needs finite thresholds; drop `inf` from the phi list",
        ));
    }
    let net = load_network(&a.network)?;

    let quiet = a.quiet;
    let report = move |done: usize, total: usize| {
        let step = (total / 100).max(1);
        if !quiet && (done % step == 0 || done == total) {
            eprint!("\r{done}/{total}");
            if done == total {
                eprintln!();
            }
        }
    };
    let out = run_sweep(&net, &grid, &opts, Some(&report))?;

    csv_to_file(&a.output, |buf| write_sweep_csv(&out.records, buf))?;
    let networks: Vec<_> = out
        .networks
        .iter()
        .map(|r| json!({ "phi": r.phi, "mode": opts.mode, "stats": r.stats, "population": r.network.n_students() }))
        .collect();
    let net_path = sibling(&a.output, ".networks.json");
    write_atomic(&net_path, serde_json::to_string_pretty(&networks)?.as_bytes())?;

    let mut m = RunManifest::new(
        "sweep",
        a.seed,
        json!({ "grid": grid, "options": opts, "records": out.records.len(), "tau_clamps": out.tau_clamps }),
    );
    m.add_input(&a.network)?;
    if let Some(path) = &a.grid {
        m.add_input(path)?;
    }
    m.add_output(&a.output);
    m.add_output(&net_path);
    if a.keep_trajectories {
        let traj_path = sibling(&a.output, ".trajectories.csv");
        csv_to_file(&traj_path, |buf| {
            write_trajectories_csv(&out.records, &out.trajectories, buf)
        })?;
        m.add_output(&traj_path);
    }
    m.write(&manifest_path(&a.output))
}

pub fn cmd_analyze(a: &AnalyzeArgs) -> Result<()> {
    let file = std::fs::File::open(&a.sweep).map_err(|e| Error::io(&a.sweep, e))?;
    let records = read_sweep_csv(std::io::BufReader::new(file))?;
    let opts = AnalysisOptions {
        response: match a.response {
            ResponseArg::Cii => Response::Cii,
            ResponseArg::Peak => Response::Peak,
        },
        folds: a.folds,
        seed: a.seed,
        control: TreeControl {
            min_node_rows: a.min_node_rows,
            min_leaf_rows: a.min_leaf_rows,
            min_improvement_fraction: a.min_improvement_fraction,
        },
        outlier_sd: a.outlier_sd,
        remove_outliers: a.remove_outliers,
    };
    let analysis = analyze(&records, &opts)?;
    let written = write_analysis(&analysis, &a.output)?;
    let models: Vec<_> = analysis
        .models
        .iter()
        .map(|m| {
            json!({
                "phi": m.phi,
                "rows": m.rows,
                "full_tree_splits": m.sequence.steps()[0].n_splits,
                "folds": m.cv.folds,
                "outliers_flagged": m.outliers.len(),
                "outliers_removed": m.removed,
            })
        })
        .collect();
    let mut m = RunManifest::new(
        "analyze",
        a.seed,
        json!({
            "options": opts,
            "mode": analysis.mode,
            "n_max": analysis.n_max,
            "logit_clamps": analysis.logit_clamps,
            "models": models,
        }),
    );
    m.add_input(&a.sweep)?;
    for path in &written {
        m.add_output(path);
    }
    m.write(&a.output.join("analysis.manifest.json"))
}
