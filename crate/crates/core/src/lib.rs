//! Stochastic SEAIR epidemics on bipartite class-enrollment networks.
//!
//! The pipeline:
//!
//! * [`network`]: ingest, reduce (class-size thresholds, random thinning) and
//!   extract the largest connected component of an enrollment network.
//! * [`synthgen`]: synthetic enrollment networks with heavy-tailed class sizes.
//! * [`epidemic`]: the daily SEAIR engine.
//! * [`sweep`]: replicated runs over a parameter grid, summarized by
//!   cumulative incidence and peak outbreak size.
//! * [`cart`]: regression trees with cost-complexity pruning and
//!   cross-validation over the sweep output.
//! * [`cli`]: the `enrollnet` command.
//!
//! Runnable walkthroughs live in `examples/`.

pub mod cart;
pub mod cli;
pub mod config;
pub mod epidemic;
pub mod error;
pub mod manifest;
pub mod network;
pub mod rng;
pub mod stats;
pub mod sweep;
pub mod synthgen;

pub use error::{Error, Result};
