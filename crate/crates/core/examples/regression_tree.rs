//! Fit a regression tree, walk its pruning sequence, pick a size by
//! cross-validation and print the splits.
//!
//! cargo run --example regression_tree

use enrollnet::cart::{
    cross_validate_sequence, fit_tree, prune_sequence, prune_to_size, split_listing, variable_importance,
    AnalysisDataset, TreeControl,
};
use enrollnet::rng::rng_from_seed;
use rand::Rng;

fn main() -> enrollnet::Result<()> {
    // y depends on `dose` in steps, weakly on `age`, and not at all on `noise`.
    let mut rng = rng_from_seed(8);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for _ in 0..400 {
        let dose = [0.1, 0.2, 0.4, 0.8][rng.random_range(0..4)];
        let age = rng.random_range(18..30) as f64;
        let noise = rng.random::<f64>();
        rows.push(vec![dose, age, noise]);
        y.push(if dose > 0.3 { 2.0 } else { 0.0 } + if age > 24.0 { 0.5 } else { 0.0 } + rng.random::<f64>() * 0.3);
    }
    let data = AnalysisDataset::new(vec!["dose".into(), "age".into(), "noise".into()], &rows, y, None)?;

    let control = TreeControl::default();
    let tree = fit_tree(&data, &control)?;
    let seq = prune_sequence(&tree);
    println!("full tree: {} splits; pruning sequence:", tree.n_splits());
    for step in seq.steps() {
        println!("  alpha {:>10.4}  {:>3} splits", step.alpha, step.n_splits);
    }

    let cv = cross_validate_sequence(&data, &seq, &control, 10, 1)?;
    println!(
        "\n10-fold CV: minimum at {} splits (RMSE {:.4}), one-SE rule picks {} splits",
        cv.n_splits[cv.cv_min],
        cv.rmse(cv.cv_min),
        cv.n_splits[cv.cv_1se]
    );

    let chosen = prune_to_size(&seq, cv.n_splits[cv.cv_1se]);
    println!("\n{}", split_listing(&chosen));
    for (name, share) in variable_importance(&chosen) {
        println!("{name:>6}: {share:.3}");
    }
    Ok(())
}
