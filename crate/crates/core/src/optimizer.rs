//! Reduced-space inexact Gauss–Newton–Krylov solver.
//!
//! The objective is `½‖m_R − m₁‖² + reg(v) + γβ_w/2·‖∇·v‖²_{H¹}` (the last
//! term only in near-incompressible mode). The reduced gradient
//! `g = β_v A[v] + K[b]` is the true gradient `G` mapped through the
//! constant-coefficient projection `K = P + τQ`, and the Hessian action is
//! `K` applied to the Hessian of the objective. Both are symmetric in the
//! inner product `⟨x, K⁻¹y⟩`, which PCG and the Armijo slope therefore use.

use log::{debug, info, warn};
use thiserror::Error;

use crate::field::{ScalarField, VectorField};
use crate::metrics::{analyze_deformation, MetricsError};
use crate::problems::RegistrationProblem;
use crate::projection::{Elimination, EliminationMode};
use crate::regularization::{apply_A, apply_B, apply_preconditioner, reg_energy_w, reg_objective_v, RegConfig, RegError};
use crate::spectral::divergence;
use crate::transport::{
    body_force, body_force_from, cfl_timesteps, default_nt_init, gn_body_force, gradient_series, solve_adjoint, solve_inc_adjoint,
    solve_inc_state_from, solve_state, TimeSeriesField, TransportError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid solver setting: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Regularization(#[from] RegError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("negative curvature {0:e} encountered in the Gauss-Newton Hessian")]
    NegativeCurvature(f64),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("inputs live on different grids")]
    GridMismatch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Target for `‖g_k‖_∞ / ‖g₀‖_∞`.
    pub grad_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub forcing_cap: f64,
    pub armijo_c: f64,
    pub armijo_shrink: f64,
    pub max_linesearch: usize,
    pub gauss_newton: bool,
    pub cfl_safety: f64,
    /// Initial number of time steps; `2·max(n)` when `None`.
    pub nt_init: Option<usize>,
    /// Continuation only: start each solve from the last feasible velocity.
    pub warm_start: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grad_tol: 1e-3,
            max_outer: 50,
            max_inner: 500,
            forcing_cap: 0.5,
            armijo_c: 1e-4,
            armijo_shrink: 0.5,
            max_linesearch: 30,
            gauss_newton: true,
            cfl_safety: 0.8,
            nt_init: None,
            warm_start: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let open_unit = |x: f64| x > 0.0 && x < 1.0;
        let bad = |s: String| Err(SolverError::InvalidConfig(s));
        if !open_unit(self.grad_tol) {
            return bad(format!("grad_tol = {} not in (0, 1)", self.grad_tol));
        }
        if !open_unit(self.armijo_c) {
            return bad(format!("armijo_c = {} not in (0, 1)", self.armijo_c));
        }
        if !open_unit(self.armijo_shrink) {
            return bad(format!("armijo_shrink = {} not in (0, 1)", self.armijo_shrink));
        }
        if !(self.forcing_cap > 0.0 && self.forcing_cap < 1.0) {
            return bad(format!("forcing_cap = {} not in (0, 1)", self.forcing_cap));
        }
        if !(self.cfl_safety > 0.0) {
            return bad(format!("cfl_safety = {} must be positive", self.cfl_safety));
        }
        if self.max_inner == 0 || self.max_linesearch == 0 {
            return bad("max_inner and max_linesearch must be positive".into());
        }
        if self.nt_init == Some(0) {
            return bad("nt_init must be positive".into());
        }
        Ok(())
    }

    fn nt_init_for(&self, problem: &RegistrationProblem) -> usize {
        self.nt_init.unwrap_or_else(|| default_nt_init(problem.grid()))
    }
}

/// Inexact-Newton forcing term `min(cap, √(‖g_k‖₂/‖g₀‖₂))`.
pub fn forcing_term(g_norm: f64, g0_norm: f64, cap: f64) -> f64 {
    if g0_norm == 0.0 {
        return cap;
    }
    cap.min((g_norm / g0_norm).sqrt())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub n_matvec: usize,
    pub n_pde_solves: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveValue {
    pub total: f64,
    /// `½‖m_R − m₁‖²`
    pub mismatch: f64,
    pub reg_v: f64,
    pub reg_w: f64,
}

/// Solves the state equation and evaluates the objective.
pub fn evaluate_objective(
    v: &VectorField,
    problem: &RegistrationProblem,
    cfg: &RegConfig,
    nt: usize,
) -> Result<(ObjectiveValue, TimeSeriesField), SolverError> {
    if v.grid() != problem.grid() {
        return Err(SolverError::GridMismatch);
    }
    let m = solve_state(&problem.m_t, v, nt)?;
    let r = &problem.m_r - m.last();
    let mismatch = 0.5 * r.dot(&r);
    let reg_v = reg_objective_v(v, cfg);
    let reg_w = if EliminationMode::from_config(cfg) == EliminationMode::NearIncompressible {
        0.5 * cfg.beta_w * reg_energy_w(&divergence(v))
    } else {
        0.0
    };
    let value = ObjectiveValue {
        total: mismatch + reg_v + reg_w,
        mismatch,
        reg_v,
        reg_w,
    };
    Ok((value, m))
}

/// Everything the outer iteration needs at one velocity iterate.
#[derive(Debug, Clone)]
pub struct IterateState {
    pub v: VectorField,
    pub nt: usize,
    pub m: TimeSeriesField,
    pub lambda: TimeSeriesField,
    pub grad_m: Vec<VectorField>,
    pub objective: ObjectiveValue,
    pub b: VectorField,
    pub g: VectorField,
    pub elim: Elimination,
    pub counters: Counters,
}

impl IterateState {
    /// Solves state and adjoint at `v` and assembles the reduced gradient.
    pub fn new(
        v: VectorField,
        problem: &RegistrationProblem,
        cfg: &RegConfig,
        nt: usize,
        counters: Counters,
    ) -> Result<Self, SolverError> {
        let (objective, m) = evaluate_objective(&v, problem, cfg, nt)?;
        let mut counters = counters;
        counters.n_pde_solves += 1;
        Self::from_state(v, m, objective, problem, cfg, counters)
    }

    fn from_state(
        v: VectorField,
        m: TimeSeriesField,
        objective: ObjectiveValue,
        problem: &RegistrationProblem,
        cfg: &RegConfig,
        mut counters: Counters,
    ) -> Result<Self, SolverError> {
        let nt = m.nt();
        let lambda = solve_adjoint(m.last(), &problem.m_r, &v, nt)?;
        counters.n_pde_solves += 1;
        let grad_m = gradient_series(&m);
        let b = body_force_from(&grad_m, &lambda)?;
        let elim = Elimination::new(cfg, &v);
        let mut g = apply_A(&v, cfg);
        g *= cfg.beta_v;
        g += &elim.project_k(&b, &v);
        Ok(Self {
            v,
            nt,
            m,
            lambda,
            grad_m,
            objective,
            b,
            g,
            elim,
            counters,
        })
    }

    /// `⟨x, K⁻¹y⟩`
    pub fn metric_dot(&self, x: &VectorField, y: &VectorField) -> f64 {
        x.dot(&self.elim.metric(y))
    }
}

/// Reduced gradient `β_v A[v] + K[b]` at `v` for the state `m`; also returns `b`.
pub fn evaluate_gradient(
    v: &VectorField,
    m: &TimeSeriesField,
    problem: &RegistrationProblem,
    cfg: &RegConfig,
) -> Result<(VectorField, VectorField), SolverError> {
    let lambda = solve_adjoint(m.last(), &problem.m_r, v, m.nt())?;
    let b = body_force(m, &lambda)?;
    let elim = Elimination::new(cfg, v);
    let mut g = apply_A(v, cfg);
    g *= cfg.beta_v;
    g += &elim.project_k(&b, v);
    Ok((g, b))
}

/// Hessian action `β_v B[v]ṽ + L[b̃, ṽ]` (two PDE solves).
pub fn hessian_matvec(
    state: &mut IterateState,
    v_inc: &VectorField,
    cfg: &RegConfig,
    gauss_newton: bool,
) -> Result<VectorField, SolverError> {
    let v = &state.v;
    let m_inc = solve_inc_state_from(&state.grad_m, v, v_inc)?;
    let b_inc = if gauss_newton {
        gn_body_force(&state.grad_m, v, m_inc.last())?
    } else {
        let l_inc = solve_inc_adjoint(&state.lambda, v, v_inc, m_inc.last(), false)?;
        let mut b = body_force_from(&state.grad_m, &l_inc)?;
        b += &body_force(&m_inc, &state.lambda)?;
        b
    };
    let mut h = apply_B(v, v_inc, cfg);
    h *= cfg.beta_v;
    h += &state.elim.project_l(&b_inc, v, v_inc);
    state.counters.n_matvec += 1;
    state.counters.n_pde_solves += 2;
    Ok(h)
}

#[derive(Debug, Clone)]
pub struct PcgOutcome {
    pub direction: VectorField,
    pub iterations: usize,
    /// Final `‖Hṽ + g‖₂`.
    pub residual_norm: f64,
    /// Stopping threshold `η_k‖g_k‖₂`.
    pub tolerance: f64,
    /// Stopped on negative curvature (full-Newton mode only).
    pub truncated: bool,
}

/// Preconditioned CG for `Hṽ = −g` from `ṽ = 0`, stopping once
/// `‖r‖₂ < η‖g‖₂` or after `max_inner` iterations.
pub fn pcg_solve(
    state: &mut IterateState,
    cfg: &RegConfig,
    solver: &SolverConfig,
    eta: f64,
) -> Result<PcgOutcome, SolverError> {
    let grid = state.v.grid().clone();
    let tolerance = eta * state.g.norm_l2();
    let mut x = VectorField::zeros(&grid);
    let mut r = state.g.clone();
    r *= -1.0;
    let mut z = apply_preconditioner(&r, &state.v, cfg);
    let mut p = z.clone();
    let mut rz = state.metric_dot(&r, &z);
    let mut iterations = 0;
    let mut truncated = false;
    let mut residual_norm = r.norm_l2();
    while iterations < solver.max_inner && residual_norm >= tolerance {
        let hp = hessian_matvec(state, &p, cfg, solver.gauss_newton)?;
        let curvature = state.metric_dot(&p, &hp);
        if !(curvature > 0.0) {
            if solver.gauss_newton {
                return Err(SolverError::NegativeCurvature(curvature));
            }
            warn!("negative curvature {curvature:e} after {iterations} PCG iterations; truncating");
            if iterations == 0 {
                x = p;
            }
            truncated = true;
            break;
        }
        let alpha = rz / curvature;
        x.axpy(alpha, &p);
        r.axpy(-alpha, &hp);
        iterations += 1;
        residual_norm = r.norm_l2();
        if residual_norm < tolerance {
            break;
        }
        z = apply_preconditioner(&r, &state.v, cfg);
        let rz_new = state.metric_dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        z.axpy(beta, &p);
        p = z.clone();
    }
    debug!("pcg: {iterations} iterations, residual {residual_norm:e} (tol {tolerance:e})");
    Ok(PcgOutcome {
        direction: x,
        iterations,
        residual_norm,
        tolerance,
        truncated,
    })
}

#[derive(Debug)]
pub struct LineSearchOutcome {
    pub alpha: f64,
    pub state: IterateState,
    /// The direction was not a descent direction and `−g` was used instead.
    pub flipped: bool,
    pub trials: usize,
}

/// Backtracking search for the largest `α ∈ {1, s, s², …}` with
/// `J(v + αṽ) ≤ J(v) + c·α·⟨G, ṽ⟩`. Returns `Ok(None)` after
/// `max_linesearch` rejections. Trial points never use fewer time steps than
/// the current iterate.
pub fn line_search_armijo(
    state: &IterateState,
    direction: &VectorField,
    problem: &RegistrationProblem,
    cfg: &RegConfig,
    solver: &SolverConfig,
) -> Result<Option<LineSearchOutcome>, SolverError> {
    let mut dir = direction.clone();
    let mut slope = state.metric_dot(&state.g, &dir);
    let mut flipped = false;
    if !(slope < 0.0) {
        warn!("search direction is not a descent direction (slope {slope:e}); using -g");
        dir = state.g.clone();
        dir *= -1.0;
        slope = state.metric_dot(&state.g, &dir);
        flipped = true;
    }
    let nt_init = solver.nt_init_for(problem);
    let j0 = state.objective.total;
    let mut alpha = 1.0;
    let mut counters = state.counters;
    for trial in 1..=solver.max_linesearch {
        let mut v = state.v.clone();
        v.axpy(alpha, &dir);
        let nt = state.nt.max(cfl_timesteps(&v, nt_init, solver.cfl_safety));
        counters.n_pde_solves += 1;
        match evaluate_objective(&v, problem, cfg, nt) {
            Ok((obj, m)) if obj.total <= j0 + solver.armijo_c * alpha * slope => {
                let state = IterateState::from_state(v, m, obj, problem, cfg, counters)?;
                return Ok(Some(LineSearchOutcome {
                    alpha,
                    state,
                    flipped,
                    trials: trial,
                }));
            }
            Ok(_) | Err(SolverError::Transport(TransportError::Instability { .. })) => {}
            Err(e) => return Err(e),
        }
        alpha *= solver.armijo_shrink;
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverStatus {
    Converged,
    MaxOuter,
    LinesearchFailure,
    Instability,
    NegativeCurvature,
}

impl SolverStatus {
    pub fn name(self) -> &'static str {
        match self {
            SolverStatus::Converged => "converged",
            SolverStatus::MaxOuter => "max_outer",
            SolverStatus::LinesearchFailure => "linesearch_failure",
            SolverStatus::Instability => "instability",
            SolverStatus::NegativeCurvature => "negative_curvature",
        }
    }
}

/// One outer iteration: the iterate `k` and the step taken from it.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub objective: f64,
    pub mismatch: f64,
    /// `‖g_k‖_∞ / ‖g₀‖_∞`
    pub grad_rel_inf: f64,
    pub grad_norm_l2: f64,
    /// `‖m_R − m₁‖² / ‖m_R − m_T‖²`
    pub residual_rel: f64,
    pub nt: usize,
    pub eta: Option<f64>,
    pub inner_iterations: Option<usize>,
    pub pcg_residual_rel: Option<f64>,
    pub alpha: Option<f64>,
    pub n_matvec: usize,
    pub n_pde_solves: usize,
}

#[derive(Debug, Clone)]
pub struct SolverReport {
    pub ledger: Vec<IterationRecord>,
    pub status: SolverStatus,
    pub counters: Counters,
    pub g0_inf: f64,
    pub g0_l2: f64,
    pub notes: Vec<String>,
    pub error: Option<SolverError>,
}

impl SolverReport {
    pub fn last(&self) -> Option<&IterationRecord> {
        self.ledger.last()
    }
}

#[derive(Debug, Clone)]
pub struct RegistrationResult {
    pub v: VectorField,
    pub m1: ScalarField,
    pub g: VectorField,
    pub b: VectorField,
    pub nt: usize,
    pub report: SolverReport,
}

/// Runs the outer Newton–Krylov iteration from `v = 0`.
pub fn register(
    problem: &RegistrationProblem,
    cfg: &RegConfig,
    solver: &SolverConfig,
) -> Result<RegistrationResult, SolverError> {
    register_from(problem, cfg, solver, VectorField::zeros(problem.grid()))
}

/// [`register`] from a given initial velocity.
pub fn register_from(
    problem: &RegistrationProblem,
    cfg: &RegConfig,
    solver: &SolverConfig,
    v0: VectorField,
) -> Result<RegistrationResult, SolverError> {
    register_observed(problem, cfg, solver, v0, |_, _| {})
}

/// [`register_from`] calling `observe(k, state)` at the initial point and at
/// every accepted iterate.
pub fn register_observed(
    problem: &RegistrationProblem,
    cfg: &RegConfig,
    solver: &SolverConfig,
    v0: VectorField,
    mut observe: impl FnMut(usize, &IterateState),
) -> Result<RegistrationResult, SolverError> {
    cfg.validate()?;
    solver.validate()?;
    if v0.grid() != problem.grid() {
        return Err(SolverError::GridMismatch);
    }
    let nt_init = solver.nt_init_for(problem);
    let nt = cfl_timesteps(&v0, nt_init, solver.cfl_safety);
    let mut notes = vec!["inner tolerance is relative: ||r||_2 < eta_k ||g_k||_2".to_string()];
    let mut state = match IterateState::new(v0.clone(), problem, cfg, nt, Counters::default()) {
        Ok(s) => s,
        Err(SolverError::Transport(e)) => {
            let grid = problem.grid();
            let report = SolverReport {
                ledger: Vec::new(),
                status: SolverStatus::Instability,
                counters: Counters::default(),
                g0_inf: f64::NAN,
                g0_l2: f64::NAN,
                notes,
                error: Some(SolverError::Transport(e)),
            };
            return Ok(RegistrationResult {
                v: v0,
                m1: problem.m_t.clone(),
                g: VectorField::zeros(grid),
                b: VectorField::zeros(grid),
                nt,
                report,
            });
        }
        Err(e) => return Err(e),
    };
    let g0_inf = state.g.norm_inf();
    let g0_l2 = state.g.norm_l2();
    let r0 = {
        let d = &problem.m_r - &problem.m_t;
        0.5 * d.dot(&d)
    };
    let record = |s: &IterateState, k: usize| IterationRecord {
        k,
        objective: s.objective.total,
        mismatch: s.objective.mismatch,
        grad_rel_inf: if g0_inf > 0.0 { s.g.norm_inf() / g0_inf } else { 0.0 },
        grad_norm_l2: s.g.norm_l2(),
        residual_rel: if r0 > 0.0 { s.objective.mismatch / r0 } else { 0.0 },
        nt: s.nt,
        eta: None,
        inner_iterations: None,
        pcg_residual_rel: None,
        alpha: None,
        n_matvec: s.counters.n_matvec,
        n_pde_solves: s.counters.n_pde_solves,
    };
    let mut ledger = Vec::new();
    let mut error = None;
    let mut k = 0;
    let status = loop {
        observe(k, &state);
        let mut rec = record(&state, k);
        if g0_inf == 0.0 || rec.grad_rel_inf <= solver.grad_tol {
            ledger.push(rec);
            break SolverStatus::Converged;
        }
        if k >= solver.max_outer {
            ledger.push(rec);
            break SolverStatus::MaxOuter;
        }
        let eta = forcing_term(rec.grad_norm_l2, g0_l2, solver.forcing_cap);
        rec.eta = Some(eta);
        let pcg = match pcg_solve(&mut state, cfg, solver, eta) {
            Ok(p) => p,
            Err(e) => {
                let status = match e {
                    SolverError::NegativeCurvature(_) => SolverStatus::NegativeCurvature,
                    _ => SolverStatus::Instability,
                };
                ledger.push(rec);
                error = Some(e);
                break status;
            }
        };
        rec.inner_iterations = Some(pcg.iterations);
        rec.pcg_residual_rel = Some(pcg.residual_norm / rec.grad_norm_l2);
        if pcg.truncated {
            notes.push(format!("iteration {k}: PCG truncated on negative curvature"));
        }
        let outcome = match line_search_armijo(&state, &pcg.direction, problem, cfg, solver) {
            Ok(Some(o)) => o,
            Ok(None) => {
                ledger.push(rec);
                break SolverStatus::LinesearchFailure;
            }
            Err(e) => {
                ledger.push(rec);
                error = Some(e);
                break SolverStatus::Instability;
            }
        };
        if outcome.flipped {
            notes.push(format!("iteration {k}: non-descent direction replaced by -g"));
        }
        rec.alpha = Some(outcome.alpha);
        info!(
            "k={k} J={:.6e} |g|rel={:.3e} eta={eta:.3e} inner={} alpha={}",
            rec.objective, rec.grad_rel_inf, pcg.iterations, outcome.alpha
        );
        ledger.push(rec);
        let mut next = outcome.state;
        // keep n_t non-decreasing and CFL-consistent at the accepted point
        let nt_next = next.nt.max(cfl_timesteps(&next.v, nt_init, solver.cfl_safety));
        if nt_next != next.nt {
            match IterateState::new(next.v.clone(), problem, cfg, nt_next, next.counters) {
                Ok(s) => next = s,
                Err(e) => {
                    error = Some(e);
                    state = next;
                    break SolverStatus::Instability;
                }
            }
        }
        state = next;
        k += 1;
    };
    let counters = state.counters;
    info!("registration finished: {} after {k} iterations", status.name());
    Ok(RegistrationResult {
        m1: state.m.last().clone(),
        v: state.v,
        g: state.g,
        b: state.b,
        nt: state.nt,
        report: SolverReport {
            ledger,
            status,
            counters,
            g0_inf,
            g0_l2,
            notes,
            error,
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationTrial {
    pub beta_v: f64,
    pub min_det: f64,
    pub feasible: bool,
    pub status: SolverStatus,
    pub outer_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct ContinuationResult {
    /// Smallest feasible `β_v` found; `None` if `β_v_init` already violates the bound.
    pub beta_v: Option<f64>,
    pub result: Option<RegistrationResult>,
    pub trials: Vec<ContinuationTrial>,
}

const MAX_CONTINUATION_SOLVES: usize = 20;

/// Searches for the smallest `β_v` with `min det F₁ ≥ det_bound`: divide by 10
/// while feasible, then bisect on a log scale until the bracket ratio is at
/// most `2^{1/4}`.
pub fn continuation_beta_v(
    problem: &RegistrationProblem,
    cfg: &RegConfig,
    solver: &SolverConfig,
    det_bound: f64,
    beta_v_init: f64,
) -> Result<ContinuationResult, SolverError> {
    if !(det_bound > 0.0 && det_bound < 1.0) {
        return Err(SolverError::InvalidConfig(format!("det_bound = {det_bound} not in (0, 1)")));
    }
    let mut trials = Vec::new();
    let mut warm: Option<VectorField> = None;
    let solve = |beta: f64, warm: &Option<VectorField>, trials: &mut Vec<ContinuationTrial>| {
        let mut c = cfg.clone();
        c.beta_v = beta;
        let v0 = match (solver.warm_start, warm) {
            (true, Some(v)) => v.clone(),
            _ => VectorField::zeros(problem.grid()),
        };
        let res = register_from(problem, &c, solver, v0)?;
        let usable = !matches!(
            res.report.status,
            SolverStatus::Instability | SolverStatus::NegativeCurvature
        );
        let min_det = if usable {
            analyze_deformation(&res.v, res.nt, None)?.det_stats.min
        } else {
            f64::NAN
        };
        let feasible = usable && min_det >= det_bound;
        info!("continuation: beta_v={beta:e} min det={min_det:.4} feasible={feasible}");
        trials.push(ContinuationTrial {
            beta_v: beta,
            min_det,
            feasible,
            status: res.report.status,
            outer_iterations: res.report.ledger.len().saturating_sub(1),
        });
        Ok::<_, SolverError>((feasible, res))
    };

    let (ok, first) = solve(beta_v_init, &warm, &mut trials)?;
    if !ok {
        return Ok(ContinuationResult {
            beta_v: None,
            result: None,
            trials,
        });
    }
    let trivial = first.report.g0_inf == 0.0;
    let mut best = (beta_v_init, first);
    if trivial {
        return Ok(ContinuationResult {
            beta_v: Some(best.0),
            result: Some(best.1),
            trials,
        });
    }
    warm = Some(best.1.v.clone());
    let mut infeasible: Option<f64> = None;
    while trials.len() < MAX_CONTINUATION_SOLVES {
        let beta = best.0 / 10.0;
        let (ok, res) = solve(beta, &warm, &mut trials)?;
        if ok {
            warm = Some(res.v.clone());
            best = (beta, res);
        } else {
            infeasible = Some(beta);
            break;
        }
    }
    if let Some(mut lo) = infeasible {
        while trials.len() < MAX_CONTINUATION_SOLVES && best.0 / lo > 2f64.powf(0.25) {
            let mid = (best.0 * lo).sqrt();
            let (ok, res) = solve(mid, &warm, &mut trials)?;
            if ok {
                warm = Some(res.v.clone());
                best = (mid, res);
            } else {
                lo = mid;
            }
        }
    }
    Ok(ContinuationResult {
        beta_v: Some(best.0),
        result: Some(best.1),
        trials,
    })
}
