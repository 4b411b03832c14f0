//! Solver configuration and results.

use crate::kkt::{PrecisionMode, RefinementSettings};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub eps_feas: f64,
    pub eps_inf: f64,
    pub max_iter: usize,
    /// Wall-clock limit for the iteration loop, seconds.
    pub time_limit: f64,
    pub precision: PrecisionMode,
    /// Overrides for the static/dynamic regularization; `None` uses the
    /// precision mode's default.
    pub static_reg: Option<f64>,
    pub dynamic_reg: Option<f64>,
    /// Neighborhood parameter β.
    pub beta: f64,
    pub backtrack: f64,
    pub step_scale: f64,
    pub equilibrate: bool,
    pub equilibrate_iters: usize,
    pub refinement: RefinementSettings,
    pub verbose: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            eps_feas: 1e-6,
            eps_inf: 1e-8,
            max_iter: 200,
            time_limit: f64::INFINITY,
            precision: PrecisionMode::Full,
            static_reg: None,
            dynamic_reg: None,
            beta: 1e-6,
            backtrack: 0.8,
            step_scale: 0.99,
            equilibrate: true,
            equilibrate_iters: 10,
            refinement: RefinementSettings::default(),
            verbose: false,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<(), SettingsError> {
        let positive = [
            ("eps_feas", self.eps_feas),
            ("eps_inf", self.eps_inf),
            ("time_limit", self.time_limit),
            ("backtrack", self.backtrack),
            ("refinement.t_abs", self.refinement.t_abs),
            ("refinement.t_rel", self.refinement.t_rel),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(SettingsError(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.beta >= 0.0 && self.beta < 1.0) {
            return Err(SettingsError(format!("beta must lie in [0, 1), got {}", self.beta)));
        }
        if !(self.backtrack < 1.0) {
            return Err(SettingsError("backtrack must be below 1".into()));
        }
        if !(self.step_scale > 0.0 && self.step_scale < 1.0) {
            return Err(SettingsError(format!("step_scale must lie in (0, 1), got {}", self.step_scale)));
        }
        if self.max_iter == 0 || self.refinement.max_steps == 0 {
            return Err(SettingsError("iteration limits must be at least 1".into()));
        }
        for (name, v) in [("static_reg", self.static_reg), ("dynamic_reg", self.dynamic_reg)] {
            if let Some(v) = v {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(SettingsError(format!("{name} must be nonnegative, got {v}")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid settings: {0}")]
pub struct SettingsError(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    AlmostOptimal,
    MaxIterations,
    TimeLimit,
    NumericalError,
    InsufficientProgress,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::PrimalInfeasible => "primal_infeasible",
            Status::DualInfeasible => "dual_infeasible",
            Status::AlmostOptimal => "almost_optimal",
            Status::MaxIterations => "max_iterations",
            Status::TimeLimit => "time_limit",
            Status::NumericalError => "numerical_error",
            Status::InsufficientProgress => "insufficient_progress",
        }
    }

    /// Optimal or a proven infeasibility.
    pub fn is_decisive(self) -> bool {
        matches!(self, Status::Optimal | Status::PrimalInfeasible | Status::DualInfeasible)
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Final solver output, always expressed in the caller's data and row order.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: Status,
    /// Solution, or for infeasible statuses the normalized certificate
    /// iterate.
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub s: Vec<f64>,
    /// z (primal infeasible) or x (dual infeasible), normalized so that
    /// bᵀz = −1 or qᵀx = −1.
    pub certificate: Option<Vec<f64>>,
    /// The same certificate before normalization.
    pub certificate_raw: Option<Vec<f64>>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub iterations: usize,
    pub setup_time: f64,
    pub solve_time: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub tau: f64,
    pub kappa: f64,
    pub mu: f64,
}
