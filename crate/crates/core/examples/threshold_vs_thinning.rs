//! Compare moving large classes online with removing the same number of
//! enrollments at random, at central disease parameters.
//!
//! cargo run --release --example threshold_vs_thinning [reps]

use enrollnet::epidemic::EpidemicParams;
use enrollnet::network::{drop_degenerate, Threshold};
use enrollnet::stats::{bootstrap_mean_ci, mean};
use enrollnet::sweep::{run_sweep, ParameterGrid, ReductionMode, SweepOptions};
use enrollnet::synthgen::{generate, SynthConfig};

fn main() -> enrollnet::Result<()> {
    let reps = std::env::args()
        .nth(1)
        .map_or(20, |r| r.parse().expect("reps must be an integer"));
    let net = drop_degenerate(&generate(&SynthConfig::desk(5))?);
    let phis = vec![Threshold::Finite(20), Threshold::Finite(50), Threshold::Finite(100)];
    let grid = ParameterGrid::single(EpidemicParams::central(), phis.clone());

    println!(
        "{:>5} {:>10} {:>22} {:>22}",
        "phi", "mode", "mean CII [95% CI]", "mean peak"
    );
    for mode in [ReductionMode::Threshold, ReductionMode::Thin] {
        let opts = SweepOptions {
            reps,
            master_seed: 9,
            mode,
            ..SweepOptions::default()
        };
        let out = run_sweep(&net, &grid, &opts, None)?;
        for &phi in &phis {
            let rows: Vec<_> = out.records.iter().filter(|r| r.phi == phi).collect();
            let cii: Vec<f64> = rows.iter().map(|r| r.cii).collect();
            let peak: Vec<f64> = rows.iter().map(|r| r.peak).collect();
            let ci = bootstrap_mean_ci(&cii, 0.95, 2000, 1);
            println!(
                "{:>5} {:>10} {:>8.3} [{:.3}, {:.3}] {:>22.3}",
                phi.to_string(),
                mode,
                mean(&cii),
                ci.lo,
                ci.hi,
                mean(&peak)
            );
        }
    }
    Ok(())
}
