//! Generate a synthetic enrollment network and tabulate how class-size
//! thresholds shrink it.
//!
//! cargo run --release --example synthetic_network [desk|sfu-like] [seed]

use enrollnet::network::{apply_threshold, drop_degenerate, network_stats, Threshold};
use enrollnet::synthgen::{generate, SynthConfig};

fn main() -> enrollnet::Result<()> {
    let mut args = std::env::args().skip(1);
    let preset = args.next().unwrap_or_else(|| "desk".into());
    let seed = args
        .next()
        .map_or(Ok(1), |s| s.parse())
        .expect("seed must be an integer");
    let cfg = SynthConfig::preset(&preset, seed).expect("preset is `desk` or `sfu-like`");
    print!("{}", cfg.to_flat_string());

    let net = drop_degenerate(&generate(&cfg)?);
    let stats = network_stats(&net);
    println!(
        "\n{} students, {} classes, {} enrollments, largest class {}",
        stats.n_students, stats.n_classes, stats.n_enrollments, stats.max_class_size
    );

    println!("\n{:>6} {:>10} {:>12} {:>10}", "phi", "students", "enrollments", "lcc");
    for phi in [
        Threshold::Finite(20),
        Threshold::Finite(50),
        Threshold::Finite(100),
        Threshold::Infinite,
    ] {
        let s = network_stats(&apply_threshold(&net, phi)?);
        println!(
            "{:>6} {:>10} {:>12} {:>10}",
            phi.to_string(),
            s.n_students,
            s.n_enrollments,
            s.n_students_lcc
        );
    }
    Ok(())
}
