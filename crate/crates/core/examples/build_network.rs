//! Build an enrollment network by hand, then threshold it, extract the
//! largest component and write it as CSV.
//!
//! cargo run --example build_network

use enrollnet::network::{
    apply_threshold, drop_degenerate, largest_component, network_stats, parse_enrollments, write_enrollments, Threshold,
};

const ENROLLMENTS: &str = "\
student_id,class_id,days
s01,MATH100,MoWeFr
s02,MATH100,MoWeFr
s03,MATH100,MoWeFr
s04,MATH100,MoWeFr
s01,HIST210,TuTh
s05,HIST210,TuTh
s06,CHEM110,Mo
s07,CHEM110,Mo
s08,SOLO999,Fr
";

fn main() -> enrollnet::Result<()> {
    let raw = parse_enrollments(ENROLLMENTS.as_bytes())?;
    let net = drop_degenerate(&raw);
    println!("parsed {} students in {} classes", raw.n_students(), raw.n_classes());
    println!("after dropping one-student classes: {} students", net.n_students());

    for phi in [Threshold::Finite(2), Threshold::Finite(3), Threshold::Infinite] {
        let reduced = apply_threshold(&net, phi)?;
        let stats = network_stats(&reduced);
        println!(
            "phi {phi:>3}: {} students, {} enrollments, largest component {}",
            stats.n_students, stats.n_enrollments, stats.n_students_lcc
        );
    }

    let lcc = largest_component(&net);
    let mut out = Vec::new();
    write_enrollments(&lcc, &mut out)?;
    print!("{}", String::from_utf8_lossy(&out));
    Ok(())
}
