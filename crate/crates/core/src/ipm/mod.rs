//! Predictor–corrector interior-point loop on the homogeneous embedding
//!
//! ```text
//! G(v) = ( −(Px + Aᵀz + qτ),  s + Ax − bτ,  κ + qᵀx + bᵀz + xᵀPx/τ )
//! ```
//!
//! Each iteration linearizes G around the current iterate and reduces the
//! Newton system to two solves with `K = [P Aᵀ; A −H]`.

mod settings;
mod solver;

pub use settings::{SettingsError, SolveResult, SolverSettings, Status};
pub use solver::{solve, DirectionRecord, SolverError, Stage, Solver};

use crate::cones::{ConeError, ConeSet, ScalingState, StepLengthRequest};
use crate::kkt::{KktError, KktSystem, RefineInfo, RefinementSettings};
use crate::problem::ProblemData;
use crate::sparse::{dot, norm_inf};
use thiserror::Error;

/// Threshold below which the Δτ denominator is treated as zero.
pub const DENOMINATOR_MIN: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IpmError {
    #[error(transparent)]
    Cone(#[from] ConeError),
    #[error(transparent)]
    Kkt(#[from] KktError),
    #[error("Δτ denominator degenerate ({0:e})")]
    DegenerateDenominator(f64),
    #[error("iterate left the cone interior")]
    LostInterior,
}

/// (x, z, s, τ, κ) in the solver's working (scaled, reordered) space.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub s: Vec<f64>,
    pub tau: f64,
    pub kappa: f64,
    pub mu: f64,
}

impl IterateState {
    /// x = 0, τ = κ = 1 and unit interior (s, z).
    pub fn initial(n: usize, cones: &ConeSet) -> Self {
        let (s, z) = cones.unit_init();
        let mut st = Self { x: vec![0.0; n], z, s, tau: 1.0, kappa: 1.0, mu: 0.0 };
        st.mu = st.complementarity(cones);
        st
    }

    /// (sᵀz + κτ)/(ν + 1).
    pub fn complementarity(&self, cones: &ConeSet) -> f64 {
        (dot(&self.s, &self.z) + self.kappa * self.tau) / (cones.degree() as f64 + 1.0)
    }

    pub fn xi(&self) -> Vec<f64> {
        self.x.iter().map(|v| v / self.tau).collect()
    }

    /// Strict interior membership of every component.
    pub fn is_interior(&self, cones: &ConeSet) -> bool {
        self.tau > 0.0
            && self.kappa > 0.0
            && self.tau.is_finite()
            && self.kappa.is_finite()
            && cones.is_in_cone(&self.s, true)
            && cones.is_in_dual_cone(&self.z, true)
    }
}

/// ∞-norms cached alongside the residual vectors.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ResidualNorms {
    pub r_p: f64,
    pub r_d: f64,
    pub x: f64,
    pub s: f64,
    pub z: f64,
    pub b: f64,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    pub r_p: Vec<f64>,
    pub r_d: Vec<f64>,
    pub g_p: f64,
    pub g_d: f64,
    pub norms: ResidualNorms,
}

impl Residuals {
    pub fn primal_scale(&self) -> f64 {
        1f64.max(self.norms.b + self.norms.x + self.norms.s)
    }

    pub fn dual_scale(&self) -> f64 {
        1f64.max(self.norms.q + self.norms.x + self.norms.z)
    }

    pub fn gap_scale(&self) -> f64 {
        1f64.max(self.g_p.abs().min(self.g_d.abs()))
    }

    /// Largest ratio of a residual to its threshold scale; the iterate is
    /// ε-optimal iff this is below ε.
    pub fn merit(&self) -> f64 {
        let m = (self.norms.r_p / self.primal_scale())
            .max(self.norms.r_d / self.dual_scale())
            .max((self.g_p - self.g_d).abs() / self.gap_scale());
        if m.is_nan() {
            f64::INFINITY
        } else {
            m
        }
    }
}

/// Residuals of the normalized point (x/τ, s/τ, z/τ).
pub fn compute_residuals(state: &IterateState, problem: &ProblemData) -> Residuals {
    let inv = 1.0 / state.tau;
    let x: Vec<f64> = state.x.iter().map(|v| v * inv).collect();
    let z: Vec<f64> = state.z.iter().map(|v| v * inv).collect();
    let s: Vec<f64> = state.s.iter().map(|v| v * inv).collect();

    let mut r_p = problem.b.clone();
    problem.a.gemv(-1.0, &x, 1.0, &mut r_p);
    r_p.iter_mut().zip(&s).for_each(|(r, s)| *r -= s);

    let px = problem.p.mul_vec(&x);
    let mut r_d: Vec<f64> = px.iter().zip(&problem.q).map(|(a, b)| a + b).collect();
    problem.a.gemv_t(1.0, &z, 1.0, &mut r_d);

    let xpx = dot(&x, &px);
    let g_p = 0.5 * xpx + dot(&problem.q, &x);
    let g_d = -0.5 * xpx - dot(&problem.b, &z);
    let norms = ResidualNorms {
        r_p: norm_inf(&r_p),
        r_d: norm_inf(&r_d),
        x: norm_inf(&x),
        s: norm_inf(&s),
        z: norm_inf(&z),
        b: norm_inf(&problem.b),
        q: norm_inf(&problem.q),
    };
    Residuals { r_p, r_d, g_p, g_d, norms }
}

/// Optimal iff all three stopping inequalities hold strictly at `eps`.
pub fn check_termination(res: &Residuals, eps: f64) -> Option<Status> {
    let ok = res.norms.r_p < eps * res.primal_scale()
        && res.norms.r_d < eps * res.dual_scale()
        && (res.g_p - res.g_d).abs() < eps * res.gap_scale();
    ok.then_some(Status::Optimal)
}

/// Infeasibility certificate found in the raw (un-normalized) iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub status: Status,
    pub raw: Vec<f64>,
    pub normalized: Vec<f64>,
    /// |bᵀz| or |qᵀx|.
    pub scale: f64,
}

pub fn check_infeasibility(state: &IterateState, problem: &ProblemData, eps_inf: f64) -> Option<Certificate> {
    let (x, z, s) = (&state.x, &state.z, &state.s);
    let nx = norm_inf(x);

    let btz = dot(&problem.b, z);
    if btz < -eps_inf {
        let atz = norm_inf(&problem.a.tmul_vec(z));
        if atz < -eps_inf * 1f64.max(nx + norm_inf(z)) * btz {
            let scale = btz.abs();
            return Some(Certificate {
                status: Status::PrimalInfeasible,
                raw: z.clone(),
                normalized: z.iter().map(|v| v / scale).collect(),
                scale,
            });
        }
    }

    let qtx = dot(&problem.q, x);
    if qtx < -eps_inf {
        let px = norm_inf(&problem.p.mul_vec(x));
        let mut axs = s.clone();
        problem.a.gemv(1.0, x, 1.0, &mut axs);
        let bound = -eps_inf * qtx;
        if px < bound * 1f64.max(nx) && norm_inf(&axs) < bound * 1f64.max(nx + norm_inf(s)) {
            let scale = qtx.abs();
            return Some(Certificate {
                status: Status::DualInfeasible,
                raw: x.clone(),
                normalized: x.iter().map(|v| v / scale).collect(),
                scale,
            });
        }
    }
    None
}

/// Right-hand side d = (d_x, d_z, d_τ, d_s, d_κ) of the linearized system.
#[derive(Debug, Clone, PartialEq)]
pub struct Rhs {
    pub dx: Vec<f64>,
    pub dz: Vec<f64>,
    pub dtau: f64,
    pub ds: Vec<f64>,
    pub dkappa: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    pub dx: Vec<f64>,
    pub dz: Vec<f64>,
    pub dtau: f64,
    pub ds: Vec<f64>,
    pub dkappa: f64,
}

/// G(v) at the current iterate.
pub fn g_residual(state: &IterateState, problem: &ProblemData) -> (Vec<f64>, Vec<f64>, f64) {
    let px = problem.p.mul_vec(&state.x);
    let mut gx: Vec<f64> = px.iter().zip(&problem.q).map(|(p, q)| -(p + q * state.tau)).collect();
    problem.a.gemv_t(-1.0, &state.z, 1.0, &mut gx);

    let mut gz: Vec<f64> = state.s.iter().zip(&problem.b).map(|(s, b)| s - b * state.tau).collect();
    problem.a.gemv(1.0, &state.x, 1.0, &mut gz);

    let gt = state.kappa
        + dot(&problem.q, &state.x)
        + dot(&problem.b, &state.z)
        + dot(&state.x, &px) / state.tau;
    (gx, gz, gt)
}

/// Predictor right-hand side (G, κτ, s); zero-cone rows of d_s vanish.
pub fn affine_rhs(state: &IterateState, problem: &ProblemData, cones: &ConeSet) -> Rhs {
    let (dx, dz, dtau) = g_residual(state, problem);
    Rhs { dx, dz, dtau, ds: cones.affine_ds(&state.s), dkappa: state.kappa * state.tau }
}

/// σ = (1 − α)³.
pub fn centering(alpha_affine: f64) -> f64 {
    (1.0 - alpha_affine).powi(3)
}

/// Predictor–corrector right-hand side.
pub fn combined_rhs(
    state: &IterateState,
    problem: &ProblemData,
    cones: &ConeSet,
    scaling: &ScalingState,
    affine: &Direction,
    sigma: f64,
) -> Result<Rhs, IpmError> {
    let (gx, gz, gt) = g_residual(state, problem);
    let w = 1.0 - sigma;
    let ds = cones.combined_ds(scaling, &state.s, &state.z, &affine.dz, &affine.ds, sigma, state.mu)?;
    Ok(Rhs {
        dx: gx.iter().map(|v| w * v).collect(),
        dz: gz.iter().map(|v| w * v).collect(),
        dtau: w * gt,
        ds,
        dkappa: state.kappa * state.tau + affine.dkappa * affine.dtau - sigma * state.mu,
    })
}

/// Solution of `K [x; z] = [−q; b]`, reused by both directions of one
/// iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantColumn {
    pub dx: Vec<f64>,
    pub dz: Vec<f64>,
    pub info: RefineInfo,
}

pub fn constant_column(
    kkt: &KktSystem,
    problem: &ProblemData,
    refinement: &RefinementSettings,
) -> Result<ConstantColumn, IpmError> {
    let n = problem.n();
    let rhs: Vec<f64> = problem.q.iter().map(|v| -v).chain(problem.b.iter().copied()).collect();
    let (sol, info) = kkt.solve_refined(&rhs, refinement)?;
    Ok(ConstantColumn { dx: sol[..n].to_vec(), dz: sol[n..].to_vec(), info })
}

/// Newton direction for right-hand side `d` given a current factorization
/// of K and its cached constant column.
pub fn solve_directions(
    kkt: &KktSystem,
    state: &IterateState,
    problem: &ProblemData,
    cones: &ConeSet,
    scaling: &ScalingState,
    column: &ConstantColumn,
    d: &Rhs,
    refinement: &RefinementSettings,
) -> Result<(Direction, RefineInfo), IpmError> {
    let n = problem.n();
    let rhs: Vec<f64> = d
        .dx
        .iter()
        .copied()
        .chain(d.dz.iter().zip(&d.ds).map(|(dz, ds)| ds - dz))
        .collect();
    let (sol, info) = kkt.solve_refined(&rhs, refinement)?;
    let (dx1, dz1) = sol.split_at(n);
    let (dx2, dz2) = (&column.dx, &column.dz);

    let xi = state.xi();
    let p = &problem.p;
    let pdx1 = p.mul_vec(dx1);
    let pdx2 = p.mul_vec(dx2);
    let r = state.kappa / state.tau;

    let num = d.dtau - d.dkappa / state.tau
        + dot(&problem.q, dx1)
        + dot(&problem.b, dz1)
        + 2.0 * dot(&xi, &pdx1);
    // ‖Δx₂ − ξ‖²_P − ‖Δx₂‖²_P, expanded to avoid cancellation
    let pnorm_diff = p.quad_form(&xi) - 2.0 * dot(&xi, &pdx2);
    let den = r + pnorm_diff - dot(&problem.q, dx2) - dot(&problem.b, dz2);
    if !(den.abs() >= DENOMINATOR_MIN) {
        return Err(IpmError::DegenerateDenominator(den));
    }
    let dtau = num / den;

    let dx: Vec<f64> = dx1.iter().zip(dx2).map(|(a, b)| a + dtau * b).collect();
    let dz: Vec<f64> = dz1.iter().zip(dz2).map(|(a, b)| a + dtau * b).collect();
    let hdz = scaling.apply_h(cones, &dz);
    let ds: Vec<f64> = d.ds.iter().zip(&hdz).map(|(a, b)| -a - b).collect();
    let dkappa = -(d.dkappa + state.kappa * dtau) / state.tau;
    Ok((Direction { dx, dz, dtau, ds, dkappa }, info))
}

/// Largest interior step along `dir`, without neighborhood control.
pub fn max_step(cones: &ConeSet, state: &IterateState, dir: &Direction, backtrack: f64) -> Result<f64, ConeError> {
    cones.step_length(&StepLengthRequest {
        z: &state.z,
        s: &state.s,
        tau: state.tau,
        kappa: state.kappa,
        dz: &dir.dz,
        ds: &dir.ds,
        dtau: dir.dtau,
        dkappa: dir.dkappa,
        alpha_max: 1.0,
        backtrack,
    })
}

fn trial_point(state: &IterateState, dir: &Direction, step: f64) -> IterateState {
    let axpy = |v: &[f64], d: &[f64]| v.iter().zip(d).map(|(a, b)| a + step * b).collect::<Vec<_>>();
    IterateState {
        x: axpy(&state.x, &dir.dx),
        z: axpy(&state.z, &dir.dz),
        s: axpy(&state.s, &dir.ds),
        tau: state.tau + step * dir.dtau,
        kappa: state.kappa + step * dir.dkappa,
        mu: 0.0,
    }
}

/// Step length α_c: the interior bound, shrunk by `backtrack` until the
/// scaled trial point lies in the central-path neighborhood.
pub fn combined_step_size(
    cones: &ConeSet,
    state: &IterateState,
    dir: &Direction,
    settings: &SolverSettings,
) -> Result<f64, IpmError> {
    let mut alpha = max_step(cones, state, dir, settings.backtrack)?;
    if settings.beta == 0.0 {
        return Ok(alpha);
    }
    loop {
        let t = trial_point(state, dir, settings.step_scale * alpha);
        let mu = t.complementarity(cones);
        let inside = t.tau > 0.0 && t.kappa > 0.0 && mu > 0.0;
        // Domain failures at the trial point also count as rejections.
        if inside && cones.neighborhood_ok(&t.s, &t.z, mu, settings.beta).unwrap_or(false) {
            return Ok(alpha);
        }
        alpha *= settings.backtrack;
        if alpha < crate::cones::MIN_STEP {
            return Err(ConeError::StepTooSmall { alpha }.into());
        }
    }
}

/// v ← v + scale·α·Δ, checking the result stays interior.
pub fn take_step(
    cones: &ConeSet,
    state: &IterateState,
    dir: &Direction,
    alpha: f64,
    step_scale: f64,
) -> Result<IterateState, IpmError> {
    if alpha == 0.0 {
        return Ok(state.clone());
    }
    let mut next = trial_point(state, dir, step_scale * alpha);
    if !next.is_interior(cones) {
        return Err(IpmError::LostInterior);
    }
    next.mu = next.complementarity(cones);
    Ok(next)
}
