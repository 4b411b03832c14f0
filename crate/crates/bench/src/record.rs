//! One row of benchmark output and its CSV form.

use conic_core::{SolveResult, Status};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::str::FromStr;

/// Which clock fills the time columns. `Iterations` counts interior-point
/// iterations instead of seconds, which makes whole reports reproducible
/// bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeSource {
    #[default]
    Wall,
    Iterations,
}

impl FromStr for TimeSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "wall" => Ok(TimeSource::Wall),
            "iterations" => Ok(TimeSource::Iterations),
            _ => Err(format!("unknown time source '{s}' (expected wall or iterations)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub problem: String,
    pub config: String,
    pub status: String,
    /// Time used by the metrics: the total time, or the limit on failure.
    pub time: f64,
    pub total_time: f64,
    pub setup_time: f64,
    pub solve_time: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

impl BenchRecord {
    /// `limit` is in the units of `source` (seconds or iterations).
    pub fn from_result(problem: &str, config: &str, r: &SolveResult, source: TimeSource, limit: f64) -> Self {
        let (total, setup, solve) = match source {
            TimeSource::Wall => (r.setup_time + r.solve_time, r.setup_time, r.solve_time),
            TimeSource::Iterations => (r.iterations as f64, 0.0, r.iterations as f64),
        };
        Self {
            problem: problem.to_string(),
            config: config.to_string(),
            status: r.status.as_str().to_string(),
            time: if r.status.is_decisive() { total } else { limit },
            total_time: total,
            setup_time: setup,
            solve_time: solve,
            iterations: r.iterations,
            primal_residual: r.primal_residual,
            dual_residual: r.dual_residual,
        }
    }

    /// A run that never produced a result (setup failed).
    pub fn failed(problem: &str, config: &str, status: Status, limit: f64) -> Self {
        Self {
            problem: problem.to_string(),
            config: config.to_string(),
            status: status.as_str().to_string(),
            time: limit,
            total_time: 0.0,
            setup_time: 0.0,
            solve_time: 0.0,
            iterations: 0,
            primal_residual: f64::NAN,
            dual_residual: f64::NAN,
        }
    }

    pub fn solved(&self) -> bool {
        matches!(self.status.as_str(), "optimal" | "primal_infeasible" | "dual_infeasible")
    }
}

pub fn write_csv<W: Write>(out: W, records: &[BenchRecord]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<BenchRecord>, csv::Error> {
    csv::Reader::from_reader(input).deserialize().collect()
}
