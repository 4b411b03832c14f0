//! Problem files, benchmark suites and performance metrics around
//! `conic-core`, plus the `conic-bench` command-line tool.

pub mod cli;
pub mod metrics;
pub mod problem_file;
pub mod record;
pub mod suite;

pub use metrics::{shifted_geomean, Metrics};
pub use problem_file::{ProblemFile, ProblemFileError};
pub use record::{BenchRecord, TimeSource};
pub use suite::{Config, Suite};
