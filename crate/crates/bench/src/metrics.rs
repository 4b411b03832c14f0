//! Shifted geometric means and performance profiles.
//!
//! Times are indexed `[problem][solver]`. Failed runs are expected to carry
//! the time limit already (see [`crate::record::BenchRecord`]); they still
//! enter every minimum, but never count as solved in a profile.

use crate::record::BenchRecord;
use serde::{Deserialize, Serialize};

/// Default shift k.
pub const SHIFT: f64 = 1.0;

/// Points per profile grid.
pub const GRID_POINTS: usize = 50;

/// (∏(tₚ + k))^{1/N} − k. Falls back to the log form when the product
/// leaves the floating-point range.
pub fn shifted_geomean(times: &[f64], k: f64) -> f64 {
    assert!(!times.is_empty(), "shifted geometric mean of no times");
    let n = times.len() as f64;
    let prod: f64 = times.iter().map(|t| t + k).product();
    if prod.is_finite() && prod > f64::MIN_POSITIVE {
        prod.powf(1.0 / n) - k
    } else {
        (times.iter().map(|t| (t + k).ln()).sum::<f64>() / n).exp() - k
    }
}

/// x / min(xs), with 0/0 read as a tie.
fn ratio(x: f64, min: f64) -> f64 {
    if min > 0.0 {
        x / min
    } else if x == min {
        1.0
    } else {
        f64::INFINITY
    }
}

/// r_s = g_s / min_{s'} g_{s'}.
pub fn normalized_geomeans(g: &[f64]) -> Vec<f64> {
    let min = g.iter().copied().fold(f64::INFINITY, f64::min);
    g.iter().map(|&x| ratio(x, min)).collect()
}

/// u_{p,s} = t_{p,s} / min_{s'} t_{p,s'}.
pub fn performance_ratios(times: &[Vec<f64>]) -> Vec<Vec<f64>> {
    times
        .iter()
        .map(|row| {
            let min = row.iter().copied().fold(f64::INFINITY, f64::min);
            row.iter().map(|&t| ratio(t, min)).collect()
        })
        .collect()
}

/// `count` log-spaced points from `lo` to `hi`, both included.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && count >= 1);
    if count == 1 || hi == lo {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut g: Vec<f64> = (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect();
    g[0] = lo;
    g[count - 1] = hi;
    g
}

/// f_s(τ) = (1/N)·#{p solved by s with value_{p,s} ≤ τ}, per solver, on `grid`.
pub fn profile(values: &[Vec<f64>], solved: &[Vec<bool>], grid: &[f64]) -> Vec<Vec<f64>> {
    let np = values.len();
    let ns = values.first().map_or(0, Vec::len);
    (0..ns)
        .map(|s| {
            grid.iter()
                .map(|&tau| {
                    let hits = (0..np).filter(|&p| solved[p][s] && values[p][s] <= tau).count();
                    hits as f64 / np as f64
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverMetrics {
    pub config: String,
    pub solved: usize,
    pub shifted_geomean: f64,
    pub normalized: f64,
    pub relative_profile: Vec<f64>,
    pub absolute_profile: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub shift: f64,
    pub problems: Vec<String>,
    pub solvers: Vec<SolverMetrics>,
    /// u_{p,s}, one row per problem in `problems` order.
    pub ratios: Vec<Vec<f64>>,
    pub relative_grid: Vec<f64>,
    pub absolute_grid: Vec<f64>,
}

fn first_seen<'a>(items: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for it in items {
        if !out.iter().any(|o| o == it) {
            out.push(it.to_string());
        }
    }
    out
}

impl Metrics {
    /// All metrics over `records`; problems and configurations keep their
    /// first-seen order. A (problem, config) pair with no record counts as
    /// a failure at the largest recorded time.
    pub fn from_records(records: &[BenchRecord]) -> Option<Self> {
        if records.is_empty() {
            return None;
        }
        let problems = first_seen(records.iter().map(|r| r.problem.as_str()));
        let configs = first_seen(records.iter().map(|r| r.config.as_str()));
        let worst = records.iter().map(|r| r.time).fold(0.0, f64::max);
        let mut times = vec![vec![worst; configs.len()]; problems.len()];
        let mut solved = vec![vec![false; configs.len()]; problems.len()];
        for r in records {
            let p = problems.iter().position(|x| *x == r.problem).unwrap();
            let s = configs.iter().position(|x| *x == r.config).unwrap();
            times[p][s] = r.time;
            solved[p][s] = r.solved();
        }

        let g: Vec<f64> = (0..configs.len())
            .map(|s| shifted_geomean(&times.iter().map(|row| row[s]).collect::<Vec<_>>(), SHIFT))
            .collect();
        let r = normalized_geomeans(&g);
        let ratios = performance_ratios(&times);

        let finite_max = |v: &[Vec<f64>], floor: f64| {
            v.iter().flatten().copied().filter(|x| x.is_finite()).fold(floor, f64::max)
        };
        let relative_grid = log_grid(1.0, finite_max(&ratios, 1.0), GRID_POINTS);
        let tmin = times.iter().flatten().copied().filter(|&t| t > 0.0).fold(f64::INFINITY, f64::min);
        let tmin = if tmin.is_finite() { tmin } else { 1.0 };
        let absolute_grid = log_grid(tmin, finite_max(&times, tmin), GRID_POINTS);
        let rel = profile(&ratios, &solved, &relative_grid);
        let abs = profile(&times, &solved, &absolute_grid);

        let solvers = configs
            .iter()
            .enumerate()
            .map(|(s, c)| SolverMetrics {
                config: c.clone(),
                solved: solved.iter().filter(|row| row[s]).count(),
                shifted_geomean: g[s],
                normalized: r[s],
                relative_profile: rel[s].clone(),
                absolute_profile: abs[s].clone(),
            })
            .collect();
        Some(Self { shift: SHIFT, problems, solvers, ratios, relative_grid, absolute_grid })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics always serialize")
    }
}
