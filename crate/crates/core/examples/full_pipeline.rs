//! Generate a network, sweep a sample of the parameter grid under both
//! reduction modes, and analyze each sweep with regression trees. Outputs go
//! under the given directory.
//!
//! cargo run --release --example full_pipeline [out_dir]

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use enrollnet::cart::{analyze, write_analysis, AnalysisOptions, Response, IMPORTANCE_ORDER};
use enrollnet::network::{drop_degenerate, write_enrollments_file, Threshold};
use enrollnet::sweep::{run_sweep, write_sweep_csv, ParameterGrid, ReductionMode, SweepOptions};
use enrollnet::synthgen::{generate, SynthConfig};
use enrollnet::Error;

fn main() -> enrollnet::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "pipeline-out".into()));
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

    let net = drop_degenerate(&generate(&SynthConfig::desk(1))?);
    write_enrollments_file(&net, dir.join("network.csv"))?;

    for mode in [ReductionMode::Threshold, ReductionMode::Thin] {
        let mut grid = ParameterGrid::default();
        if mode == ReductionMode::Thin {
            grid.phi.retain(|phi| !phi.is_infinite());
        }
        let opts = SweepOptions {
            reps: 3,
            master_seed: 1,
            mode,
            subsample: Some(400),
            ..SweepOptions::default()
        };
        let out = run_sweep(&net, &grid, &opts, None)?;
        let csv = dir.join(format!("sweep_{mode}.csv"));
        let file = File::create(&csv).map_err(|e| Error::io(&csv, e))?;
        write_sweep_csv(&out.records, BufWriter::new(file))?;

        for response in [Response::Cii, Response::Peak] {
            let analysis = analyze(
                &out.records,
                &AnalysisOptions {
                    response,
                    ..AnalysisOptions::default()
                },
            )?;
            let written = write_analysis(&analysis, &dir.join(format!("{mode}_{response}")))?;
            println!("{mode} / {response}: {} files", written.len());
            for model in &analysis.models {
                let importance = model.importance("cv_1se").expect("cv_1se is always a selection");
                let top = IMPORTANCE_ORDER
                    .iter()
                    .zip(&importance)
                    .filter_map(|(n, v)| v.map(|v| (n, v)))
                    .max_by(|a, b| a.1.total_cmp(&b.1));
                let phi: Threshold = model.phi;
                match top {
                    Some((name, share)) => println!("  phi {phi:>3}: most important {name} ({share:.2})"),
                    None => println!("  phi {phi:>3}: no splits"),
                }
            }
        }
    }
    println!("outputs in {}", dir.display());
    Ok(())
}
