//! Random geometric graphs under l^p norms and their distance-l chromatic numbers.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: densities, point sampling, l^p distances and radius schedules.
//! * [`graph`]: cell-list graph construction, graph powers, degrees and edge-list IO.
//! * [`clique`]: branch-and-bound maximum clique (lower bound for the chromatic number).
//! * [`coloring`]: greedy, DSATUR, exact branch-and-bound and brute-force colorings.
//! * [`theory`]: the scaling functionals `k_n`, `H`, `H^{-1}` and `xi` for indicator windows.
//! * [`experiments`]: seeded Monte-Carlo trials, suites and report serialization.
//! * [`cli`]: argument parsing and file emission for the `rgg-distcolor` binary.

pub mod cli;
pub mod clique;
pub mod coloring;
mod error;
pub mod experiments;
pub mod geometry;
pub mod graph;
pub mod theory;

pub use error::{Error, Result};
