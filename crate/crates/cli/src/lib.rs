//! Harness around the core library: graph file formats, synthetic
//! heterophilic graph generation, the randomized guarantee-verification
//! campaign, and the command-line interface.

pub mod campaign;
pub mod cli;
pub mod config;
pub mod formats;
pub mod synth;

pub use cli::run;
