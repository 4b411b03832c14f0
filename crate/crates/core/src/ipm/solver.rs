//! Setup, main loop and solution recovery.

use super::{
    affine_rhs, centering, check_infeasibility, check_termination, combined_rhs, combined_step_size,
    compute_residuals, constant_column, max_step, solve_directions, take_step, Certificate, Direction,
    IpmError, IterateState, Residuals, Rhs, SettingsError, SolveResult, SolverSettings, Status,
};
use crate::cones::{ConeError, ConeSet, ScalingState};
use crate::kkt::ldl::Regularization;
use crate::kkt::{KktError, KktSystem, RefineInfo};
use crate::preprocess::{equilibrate, reorder_cones, unpermute, unscale_solution, Equilibration};
use crate::problem::{ProblemData, ValidationError};
use crate::sparse::CsrMatrix;
use std::time::Instant;
use thiserror::Error;

/// Iterations without a 1% improvement before giving up.
const STALL_WINDOW: usize = 5;
const STALL_FACTOR: f64 = 0.99;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Settings(#[from] SettingsError),
    #[error(transparent)]
    Kkt(#[from] KktError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Affine,
    Combined,
}

/// Everything needed to re-check one Newton direction from outside.
/// All quantities live in the solver's scaled, reordered space.
pub struct DirectionRecord<'a> {
    pub iteration: usize,
    pub stage: Stage,
    pub state: &'a IterateState,
    pub rhs: &'a Rhs,
    pub direction: &'a Direction,
    pub scaling: &'a ScalingState,
    pub cones: &'a ConeSet,
    pub problem: &'a ProblemData,
    pub refine: RefineInfo,
}

type Observer = Box<dyn FnMut(&DirectionRecord<'_>) + Send>;

pub struct Solver {
    settings: SolverSettings,
    original: ProblemData,
    perm: Vec<usize>,
    reordered: ProblemData,
    work: ProblemData,
    equil: Equilibration,
    cones: ConeSet,
    kkt: KktSystem,
    setup_time: f64,
    observer: Option<Observer>,
}

impl std::fmt::Debug for Solver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Solver")
            .field("n", &self.original.n())
            .field("m", &self.original.m())
            .field("settings", &self.settings)
            .finish_non_exhaustive()
    }
}

struct StallGuard {
    best: [f64; 3],
    idle: usize,
}

impl StallGuard {
    fn new() -> Self {
        Self { best: [f64::INFINITY; 3], idle: 0 }
    }

    /// True once none of μ, ‖r_p‖, ‖r_d‖ has improved by 1% for the
    /// whole window.
    fn stalled(&mut self, vals: [f64; 3]) -> bool {
        let mut improved = false;
        for (b, v) in self.best.iter_mut().zip(vals) {
            if v < STALL_FACTOR * *b {
                improved = true;
            }
            if v < *b {
                *b = v;
            }
        }
        self.idle = if improved { 0 } else { self.idle + 1 };
        self.idle >= STALL_WINDOW
    }
}

enum Outcome {
    Optimal,
    Infeasible(Certificate),
    Stopped(Status),
}

impl Solver {
    pub fn new(problem: ProblemData, settings: SolverSettings) -> Result<Self, SolverError> {
        let t0 = Instant::now();
        problem.validate()?;
        settings.validate()?;
        let (reordered, perm) = reorder_cones(&problem);
        let (work, equil) = scale(&reordered, &settings);
        let cones = ConeSet::new(&work.cones);
        let mut kkt = KktSystem::assemble(&work.p, &work.a, &cones, settings.precision);
        let (ds, dd) = settings.precision.default_regularization();
        kkt.set_regularization(Regularization {
            static_reg: settings.static_reg.unwrap_or(ds),
            dynamic_reg: settings.dynamic_reg.unwrap_or(dd),
        });
        kkt.symbolic_factor()?;
        Ok(Self {
            settings,
            original: problem,
            perm,
            reordered,
            work,
            equil,
            cones,
            kkt,
            setup_time: t0.elapsed().as_secs_f64(),
            observer: None,
        })
    }

    pub fn settings(&self) -> &SolverSettings {
        &self.settings
    }

    pub fn problem(&self) -> &ProblemData {
        &self.original
    }

    /// The scaled, reordered problem the iterations run on.
    pub fn working_problem(&self) -> &ProblemData {
        &self.work
    }

    pub fn cones(&self) -> &ConeSet {
        &self.cones
    }

    pub fn equilibration(&self) -> &Equilibration {
        &self.equil
    }

    /// Row permutation applied during setup (new row k = original row perm[k]).
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Number of symbolic analyses performed by this solver so far.
    pub fn symbolic_factorizations(&self) -> usize {
        self.kkt.symbolic_count()
    }

    /// Installs a callback invoked after every direction solve.
    pub fn set_direction_observer(&mut self, f: impl FnMut(&DirectionRecord<'_>) + Send + 'static) {
        self.observer = Some(Box::new(f));
    }

    pub fn clear_direction_observer(&mut self) {
        self.observer = None;
    }

    /// Replaces problem values in place. Sparsity patterns and cones must be
    /// unchanged; scalings are recomputed from scratch.
    pub fn update_data(
        &mut self,
        p: Option<&CsrMatrix>,
        a: Option<&CsrMatrix>,
        q: Option<&[f64]>,
        b: Option<&[f64]>,
    ) -> Result<(), SolverError> {
        let t0 = Instant::now();
        if let Some(p) = p {
            if !p.same_pattern(&self.original.p) {
                return Err(KktError::PatternMismatch("P").into());
            }
        }
        if let Some(a) = a {
            if !a.same_pattern(&self.original.a) {
                return Err(KktError::PatternMismatch("A").into());
            }
        }
        let mut next = self.original.clone();
        if let Some(p) = p {
            next.p = p.clone();
        }
        if let Some(a) = a {
            next.a = a.clone();
        }
        if let Some(q) = q {
            next.q = q.to_vec();
        }
        if let Some(b) = b {
            next.b = b.to_vec();
        }
        next.validate()?;

        let reordered = ProblemData {
            p: next.p.clone(),
            a: next.a.permute_rows(&self.perm),
            q: next.q.clone(),
            b: self.perm.iter().map(|&i| next.b[i]).collect(),
            cones: self.reordered.cones.clone(),
        };
        let (work, equil) = scale(&reordered, &self.settings);
        self.kkt.update_values(Some(&work.p), Some(&work.a), None)?;
        self.original = next;
        self.reordered = reordered;
        self.work = work;
        self.equil = equil;
        self.setup_time = t0.elapsed().as_secs_f64();
        Ok(())
    }

    /// Maps a working iterate to the unscaled problem (rows still reordered).
    fn unscaled(&self, st: &IterateState) -> IterateState {
        let (x, z, s) = unscale_solution(&st.x, &st.z, &st.s, &self.equil);
        IterateState { x, z, s, tau: st.tau, kappa: st.kappa, mu: st.mu }
    }

    pub fn solve(&mut self) -> SolveResult {
        let t0 = Instant::now();
        let eps = self.settings.eps_feas;
        let mut state = IterateState::initial(self.work.n(), &self.cones);
        let mut best: Option<(f64, IterateState)> = None;
        let mut guard = StallGuard::new();
        let mut iter = 0;

        let outcome = loop {
            let orig = self.unscaled(&state);
            let res = compute_residuals(&orig, &self.reordered);
            let merit = res.merit();
            if best.as_ref().is_none_or(|(m, _)| merit < *m) {
                best = Some((merit, state.clone()));
            }
            if self.settings.verbose {
                eprintln!(
                    "{iter:4}  pobj {:+.6e}  dobj {:+.6e}  pres {:.2e}  dres {:.2e}  mu {:.2e}  tau {:.2e}  kappa {:.2e}",
                    res.g_p, res.g_d, res.norms.r_p, res.norms.r_d, state.mu, state.tau, state.kappa
                );
            }
            if check_termination(&res, eps).is_some() {
                break Outcome::Optimal;
            }
            if let Some(cert) = check_infeasibility(&orig, &self.reordered, self.settings.eps_inf) {
                break Outcome::Infeasible(cert);
            }
            if iter >= self.settings.max_iter {
                break Outcome::Stopped(Status::MaxIterations);
            }
            if t0.elapsed().as_secs_f64() > self.settings.time_limit {
                break Outcome::Stopped(Status::TimeLimit);
            }
            if guard.stalled([state.mu, res.norms.r_p, res.norms.r_d]) {
                break Outcome::Stopped(Status::InsufficientProgress);
            }
            match self.iterate(&state, iter) {
                Ok(next) => state = next,
                Err(e) => {
                    if self.settings.verbose {
                        eprintln!("stopping: {e}");
                    }
                    break Outcome::Stopped(error_status(&e));
                }
            }
            iter += 1;
        };

        let mut out = match outcome {
            Outcome::Optimal => self.recover(&state, Status::Optimal),
            Outcome::Infeasible(cert) => self.recover_certificate(&state, cert),
            Outcome::Stopped(status) => {
                let (merit, st) = best.unwrap_or((f64::INFINITY, state));
                let status = if merit < 10.0 * eps { Status::AlmostOptimal } else { status };
                self.recover(&st, status)
            }
        };
        out.iterations = iter;
        out.setup_time = self.setup_time;
        out.solve_time = t0.elapsed().as_secs_f64();
        out
    }

    /// One predictor–corrector iteration.
    fn iterate(&mut self, state: &IterateState, iter: usize) -> Result<IterateState, IpmError> {
        let st = &self.settings.clone();
        let scaling = self.cones.update_scaling(&state.s, &state.z, state.mu)?;
        self.kkt.update_values(None, None, Some(&scaling.h_blocks()))?;
        self.kkt.numeric_factor()?;
        let column = constant_column(&self.kkt, &self.work, &st.refinement)?;

        let d_a = affine_rhs(state, &self.work, &self.cones);
        let (dir_a, info) = solve_directions(
            &self.kkt, state, &self.work, &self.cones, &scaling, &column, &d_a, &st.refinement,
        )?;
        self.observe(iter, Stage::Affine, state, &d_a, &dir_a, &scaling, info);
        let alpha_a = match max_step(&self.cones, state, &dir_a, st.backtrack) {
            Ok(a) => a,
            Err(ConeError::StepTooSmall { .. }) => 0.0,
            Err(e) => return Err(e.into()),
        };
        let sigma = centering(alpha_a);

        let d_c = combined_rhs(state, &self.work, &self.cones, &scaling, &dir_a, sigma)?;
        let (dir_c, info) = solve_directions(
            &self.kkt, state, &self.work, &self.cones, &scaling, &column, &d_c, &st.refinement,
        )?;
        self.observe(iter, Stage::Combined, state, &d_c, &dir_c, &scaling, info);
        let alpha_c = combined_step_size(&self.cones, state, &dir_c, st)?;
        if st.verbose {
            eprintln!("      alpha_aff {alpha_a:.3e}  sigma {sigma:.3e}  alpha {alpha_c:.3e}");
        }
        take_step(&self.cones, state, &dir_c, alpha_c, st.step_scale)
    }

    #[allow(clippy::too_many_arguments)]
    fn observe(
        &mut self,
        iteration: usize,
        stage: Stage,
        state: &IterateState,
        rhs: &Rhs,
        direction: &Direction,
        scaling: &ScalingState,
        refine: RefineInfo,
    ) {
        if let Some(f) = self.observer.as_mut() {
            f(&DirectionRecord {
                iteration,
                stage,
                state,
                rhs,
                direction,
                scaling,
                cones: &self.cones,
                problem: &self.work,
                refine,
            });
        }
    }

    fn recover(&self, state: &IterateState, status: Status) -> SolveResult {
        let orig = self.unscaled(state);
        let res: Residuals = compute_residuals(&orig, &self.reordered);
        if status == Status::Optimal {
            debug_assert!(check_termination(&res, self.settings.eps_feas).is_some());
        }
        let inv = 1.0 / state.tau;
        let scale = |v: &[f64]| v.iter().map(|a| a * inv).collect::<Vec<_>>();
        SolveResult {
            status,
            x: scale(&orig.x),
            z: unpermute(&scale(&orig.z), &self.perm),
            s: unpermute(&scale(&orig.s), &self.perm),
            certificate: None,
            certificate_raw: None,
            primal_objective: res.g_p,
            dual_objective: res.g_d,
            iterations: 0,
            setup_time: 0.0,
            solve_time: 0.0,
            primal_residual: res.norms.r_p,
            dual_residual: res.norms.r_d,
            tau: state.tau,
            kappa: state.kappa,
            mu: state.mu,
        }
    }

    fn recover_certificate(&self, state: &IterateState, cert: Certificate) -> SolveResult {
        let orig = self.unscaled(state);
        let inv = 1.0 / cert.scale;
        let scale = |v: &[f64]| v.iter().map(|a| a * inv).collect::<Vec<_>>();
        let z = unpermute(&scale(&orig.z), &self.perm);
        let s = unpermute(&scale(&orig.s), &self.perm);
        let x = scale(&orig.x);
        let (certificate, raw, pobj, dobj) = match cert.status {
            Status::PrimalInfeasible => {
                (z.clone(), unpermute(&cert.raw, &self.perm), f64::INFINITY, f64::INFINITY)
            }
            _ => (x.clone(), cert.raw, f64::NEG_INFINITY, f64::NEG_INFINITY),
        };
        SolveResult {
            status: cert.status,
            x,
            z,
            s,
            certificate: Some(certificate),
            certificate_raw: Some(raw),
            primal_objective: pobj,
            dual_objective: dobj,
            iterations: 0,
            setup_time: 0.0,
            solve_time: 0.0,
            primal_residual: f64::NAN,
            dual_residual: f64::NAN,
            tau: state.tau,
            kappa: state.kappa,
            mu: state.mu,
        }
    }
}

fn scale(reordered: &ProblemData, settings: &SolverSettings) -> (ProblemData, Equilibration) {
    if settings.equilibrate {
        equilibrate(reordered, settings.equilibrate_iters)
    } else {
        (reordered.clone(), Equilibration::identity(reordered.n(), reordered.m()))
    }
}

fn error_status(e: &IpmError) -> Status {
    match e {
        IpmError::Cone(ConeError::StepTooSmall { .. }) => Status::InsufficientProgress,
        _ => Status::NumericalError,
    }
}

/// One-shot convenience wrapper around [`Solver`].
pub fn solve(problem: &ProblemData, settings: &SolverSettings) -> Result<SolveResult, SolverError> {
    Ok(Solver::new(problem.clone(), settings.clone())?.solve())
}
