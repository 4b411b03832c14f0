//! Benchmark suites: generator grid × solver configurations.

use crate::record::{BenchRecord, TimeSource};
use conic_core::generators::{Family, GenSpec, GeneratorError};
use conic_core::{solve, PrecisionMode, ProblemData, SolverSettings, Status};
use rayon::prelude::*;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::str::FromStr;

/// A labelled solver configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub label: String,
    pub settings: SolverSettings,
}

impl FromStr for Config {
    type Err = String;

    /// `label[:key=value,...]` with keys `precision` (full|mixed), `eps`,
    /// `eps_inf`, `max_iter` and `equilibrate` (true|false). The labels
    /// `full` and `mixed` imply their precision.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (label, opts) = s.split_once(':').unwrap_or((s, ""));
        if label.is_empty() {
            return Err(format!("empty configuration label in '{s}'"));
        }
        let mut st = SolverSettings::default();
        if label == "mixed" {
            st.precision = PrecisionMode::Mixed;
        }
        for kv in opts.split(',').filter(|x| !x.is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(|| format!("expected key=value, got '{kv}'"))?;
            let bad = |e: &dyn std::fmt::Display| format!("{label}: {k}: {e}");
            match k {
                "precision" => {
                    st.precision = match v {
                        "full" => PrecisionMode::Full,
                        "mixed" => PrecisionMode::Mixed,
                        _ => return Err(bad(&"expected full or mixed")),
                    }
                }
                "eps" => st.eps_feas = v.parse().map_err(|e| bad(&e))?,
                "eps_inf" => st.eps_inf = v.parse().map_err(|e| bad(&e))?,
                "max_iter" => st.max_iter = v.parse().map_err(|e| bad(&e))?,
                "equilibrate" => st.equilibrate = v.parse().map_err(|e| bad(&e))?,
                _ => return Err(bad(&"unknown option")),
            }
        }
        st.validate().map_err(|e| format!("{label}: {e}"))?;
        Ok(Config { label: label.to_string(), settings: st })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Suite {
    pub families: Vec<Family>,
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Multistage factor count and horizon.
    pub k: usize,
    pub t: usize,
    pub configs: Vec<Config>,
    /// Seconds, or iterations with [`TimeSource::Iterations`].
    pub time_limit: f64,
    pub time_source: TimeSource,
    /// Parallel runs; anything above 1 distorts wall-clock timings.
    pub jobs: usize,
}

pub fn problem_name(spec: &GenSpec) -> String {
    match spec.family {
        Family::MultistagePortfolioSocp => {
            format!("{}-n{}-k{}-t{}-s{}", spec.family.as_str(), spec.n, spec.k, spec.t, spec.seed)
        }
        f => format!("{}-n{}-s{}", f.as_str(), spec.n, spec.seed),
    }
}

impl Suite {
    pub fn specs(&self) -> Vec<GenSpec> {
        let mut out = Vec::new();
        for &f in &self.families {
            for &n in &self.sizes {
                for &seed in &self.seeds {
                    out.push(GenSpec { k: self.k, t: self.t, ..GenSpec::new(f, n, seed) });
                }
            }
        }
        out
    }

    /// Generates every instance up front so that bad sizes fail early.
    pub fn instances(&self) -> Result<Vec<(String, ProblemData)>, GeneratorError> {
        self.specs().iter().map(|s| Ok((problem_name(s), s.generate()?))).collect()
    }

    fn settings_for(&self, c: &Config) -> SolverSettings {
        let mut st = c.settings.clone();
        match self.time_source {
            TimeSource::Wall => st.time_limit = self.time_limit,
            TimeSource::Iterations => st.max_iter = st.max_iter.min(self.time_limit.max(0.0) as usize),
        }
        st
    }

    fn run_one(&self, name: &str, p: &ProblemData, c: &Config) -> BenchRecord {
        let st = self.settings_for(c);
        let limit = self.time_limit;
        match catch_unwind(AssertUnwindSafe(|| solve(p, &st))) {
            Ok(Ok(r)) => BenchRecord::from_result(name, &c.label, &r, self.time_source, limit),
            Ok(Err(e)) => {
                eprintln!("{name} [{}]: {e}", c.label);
                BenchRecord::failed(name, &c.label, Status::NumericalError, limit)
            }
            Err(_) => {
                eprintln!("{name} [{}]: solver panicked", c.label);
                BenchRecord::failed(name, &c.label, Status::NumericalError, limit)
            }
        }
    }

    /// Runs every (problem, config) pair. Rows come out problem-major in
    /// generation order whatever the job count.
    pub fn run(&self, instances: &[(String, ProblemData)]) -> Vec<BenchRecord> {
        let tasks: Vec<(usize, usize)> =
            (0..instances.len()).flat_map(|i| (0..self.configs.len()).map(move |c| (i, c))).collect();
        let run = |&(i, c): &(usize, usize)| {
            let (name, p) = &instances[i];
            self.run_one(name, p, &self.configs[c])
        };
        if self.jobs <= 1 {
            return tasks.iter().map(run).collect();
        }
        match rayon::ThreadPoolBuilder::new().num_threads(self.jobs).build() {
            Ok(pool) => pool.install(|| tasks.par_iter().map(run).collect()),
            Err(e) => {
                eprintln!("could not start {} workers ({e}); running sequentially", self.jobs);
                tasks.iter().map(run).collect()
            }
        }
    }
}
