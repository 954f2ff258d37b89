//! Std companion to `lhv-core`: parallel Monte Carlo driving, verification
//! suites, JSON/CSV reports and the `lhvlab` command line.

pub mod config;
pub mod parallel;
pub mod report;
pub mod verify;

pub use config::{Command, Format, RunConfig};
pub use report::Report;
pub use verify::run;
