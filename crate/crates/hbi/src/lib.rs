//! Standard-library companion to `hbi-core`: vector file formats, synthetic
//! data and workloads, index persistence, benchmarking and the `hbi` CLI.

pub mod bench;
pub mod cli;
mod error;
pub mod storage;
pub mod synth;
pub mod vecs;
pub mod workload;

pub use error::{Error, Result};
