//! File formats, the multi-threaded solver, benchmarking and the command
//! line front end for the `ucsched-core` scheduler.

pub mod bench;
pub mod cli;
pub mod ingestion;
pub mod parallel;
pub mod solver;

pub use ucsched_core as core;
