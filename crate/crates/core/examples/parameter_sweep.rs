//! Sweep a random sample of the disease-parameter grid and write the
//! per-run summaries as CSV.
//!
//! cargo run --release --example parameter_sweep [out.csv]

use std::fs::File;
use std::io::BufWriter;
use std::sync::atomic::{AtomicUsize, Ordering};

use enrollnet::network::drop_degenerate;
use enrollnet::sweep::{phi_summaries, run_sweep, write_sweep_csv, ParameterGrid, SweepOptions};
use enrollnet::synthgen::{generate, SynthConfig};

fn main() -> enrollnet::Result<()> {
    let out_path = std::env::args().nth(1).unwrap_or_else(|| "sweep.csv".into());
    let net = drop_degenerate(&generate(&SynthConfig::desk(1))?);
    let opts = SweepOptions {
        reps: 3,
        master_seed: 2024,
        subsample: Some(300),
        ..SweepOptions::default()
    };

    let reported = AtomicUsize::new(0);
    let progress = |done: usize, total: usize| {
        let pct = done * 10 / total;
        if reported.fetch_max(pct, Ordering::Relaxed) < pct {
            eprintln!("{}%", pct * 10);
        }
    };
    let out = run_sweep(&net, &ParameterGrid::default(), &opts, Some(&progress))?;

    for n in &out.networks {
        println!(
            "phi {:>3}: {} students in the simulated component",
            n.phi.to_string(),
            n.network.n_students()
        );
    }
    for s in phi_summaries(&out.records) {
        println!(
            "phi {:>3}: {} runs, mean CII {:.3}, mean peak {:.3}",
            s.phi.to_string(),
            s.runs,
            s.mean_cii,
            s.mean_peak
        );
    }
    let file = File::create(&out_path).map_err(|e| enrollnet::Error::io(&out_path, e))?;
    write_sweep_csv(&out.records, BufWriter::new(file))?;
    println!("wrote {} records to {out_path}", out.records.len());
    Ok(())
}
