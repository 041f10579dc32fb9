//! File formats, dataset loading and the experiment CLI around `cvqnn-core`.
//!
//! Archives are MedMNIST-style `.npz` files; checkpoints and reports are JSON
//! and CSV; saliency maps are binary PGM.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod manifest;
pub mod npy;
pub mod npz;
pub mod pgm;
pub mod report;

pub use error::{CliError, CliResult};
