use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use thiserror::Error;

use stokesreg::io::{
    read_pgm, read_raw_field, write_detf_colormap, write_pgm, write_raw_scalar, write_raw_vector, IoError,
    DEFAULT_DETF_WINDOW,
};
use stokesreg::metrics::{analyze_deformation, overlap, transport_labels, DeformationAnalysis, LabelTransport};
use stokesreg::optimizer::{
    continuation_beta_v, evaluate_objective, register, Counters, IterateState, RegistrationResult, SolverConfig,
    SolverError,
};
use stokesreg::problems::{
    gen_blob_problem, gen_sliding_rectangles, gen_sliding_vent, normalize_and_presmooth, RectanglesGeometry,
    VentGeometry,
};
use stokesreg::transport::{cfl_timesteps, default_nt_init};
use stokesreg::{RegConfig, RegModel, RegistrationProblem, ScalarField, SolverStatus, VectorField};

use crate::args::{
    AnalyzeArgs, Command, ContinueArgs, ImageArgs, ModelArg, ModelArgs, OnOff, ProblemArg, RegisterArgs, SolverArgs,
    SynthArgs,
};
use crate::output::{write_analysis, write_ledger, write_summary, write_trials, Analysis, Summary};

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or inconsistent input, or an invalid setting.
    #[error("{0}")]
    Input(String),
    /// The solve ran but did not converge; artifacts are still written.
    #[error("{0}")]
    Solver(String),
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Input(format!("cannot write CSV: {e}"))
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::InvalidConfig(_) | SolverError::Regularization(_) | SolverError::GridMismatch => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Solver(e.to_string()),
        }
    }
}

pub fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Register(a) => cmd_register(&a),
        Command::Continue(a) => cmd_continue(&a),
        Command::Analyze(a) => cmd_analyze(&a),
        Command::Synth(a) => cmd_synth(&a),
    }
}

fn create_out(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))
}

fn is_pgm(path: &Path) -> Result<bool, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    Ok(bytes.starts_with(b"P5"))
}

/// Reads a PGM or raw scalar field without preprocessing.
fn read_scalar(path: &Path) -> Result<ScalarField, CliError> {
    if is_pgm(path)? {
        Ok(read_pgm(path)?)
    } else {
        Ok(read_raw_field(path)?.into_scalar()?)
    }
}

fn read_vector(path: &Path) -> Result<VectorField, CliError> {
    Ok(read_raw_field(path)?.into_vector()?)
}

fn same_grid(a: &ScalarField, b: &ScalarField, what: &str) -> Result<(), CliError> {
    if a.grid() != b.grid() {
        return Err(CliError::Input(format!(
            "{what}: grids differ ({:?} vs {:?})",
            a.grid().n(),
            b.grid().n()
        )));
    }
    Ok(())
}

/// Loads both images, maps intensities to `[0, 1]` and presmooths them.
fn load_problem(images: &ImageArgs) -> Result<RegistrationProblem, CliError> {
    if !(images.sigma_smooth >= 0.0) {
        return Err(CliError::Input(format!("--sigma-smooth {} must be non-negative", images.sigma_smooth)));
    }
    let m_r = read_scalar(&images.mr)?;
    let m_t = read_scalar(&images.mt)?;
    same_grid(&m_r, &m_t, "--mr/--mt")?;
    let h = m_r.grid().h();
    let sigma = [images.sigma_smooth * h[0], images.sigma_smooth * h[1]];
    Ok(RegistrationProblem::new(
        normalize_and_presmooth(&m_r, sigma),
        normalize_and_presmooth(&m_t, sigma),
        format!("{} -> {}", images.mt.display(), images.mr.display()),
    ))
}

pub fn reg_config(m: &ModelArgs) -> Result<RegConfig, CliError> {
    let mut cfg = match m.model {
        ModelArg::H1 => RegConfig::new(RegModel::H1Seminorm, m.beta_v),
        ModelArg::H2 => RegConfig::new(RegModel::H2Seminorm, m.beta_v),
        ModelArg::Nlstokes => RegConfig::nonlinear(m.beta_v, m.nu),
        ModelArg::Tv => RegConfig::new(RegModel::TotalVariation, m.beta_v),
    };
    cfg.eps_visc = m.eps_visc;
    cfg.beta_w = m.beta_w;
    cfg.gamma = m.gamma;
    if m.incompressible {
        if m.gamma != 1 {
            return Err(CliError::Input("--incompressible requires --gamma 1".into()));
        }
        cfg = cfg.incompressible();
    }
    cfg.validate().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(cfg)
}

fn solver_config(s: &SolverArgs) -> Result<SolverConfig, CliError> {
    let cfg = SolverConfig {
        grad_tol: s.grad_tol,
        max_outer: s.max_outer,
        gauss_newton: s.gauss_newton == OnOff::On,
        nt_init: s.nt_init,
        ..SolverConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn nt_init_for(nt_init: Option<usize>, problem: &RegistrationProblem) -> usize {
    nt_init.unwrap_or_else(|| default_nt_init(problem.grid()))
}

/// Writes fields, colormap, ledger and summary of one finished solve.
fn write_artifacts(
    out: &Path,
    problem: &RegistrationProblem,
    cfg: &RegConfig,
    nt_init: usize,
    res: &RegistrationResult,
) -> Result<(), CliError> {
    write_raw_scalar(&problem.m_r, &out.join("m_r.raw"))?;
    write_raw_scalar(&problem.m_t, &out.join("m_t.raw"))?;
    write_raw_vector(&res.v, &out.join("v.raw"))?;
    write_raw_scalar(&res.m1, &out.join("m1.raw"))?;
    write_ledger(&out.join("ledger.csv"), &res.report.ledger)?;
    let analysis = analyze_deformation(&res.v, res.nt, None).ok();
    if let Some(a) = &analysis {
        write_raw_vector(&a.u1, &out.join("u1.raw"))?;
        write_detf_colormap(&a.det, DEFAULT_DETF_WINDOW, &out.join("detF.ppm"))?;
    }
    let message = match (&res.report.error, &analysis) {
        (Some(e), _) => e.to_string(),
        (None, None) => "deformation analysis failed".into(),
        _ => String::new(),
    };
    write_summary(
        &out.join("summary.csv"),
        &Summary {
            status: res.report.status.name(),
            report: Some(&res.report),
            nt_init,
            nt: Some(res.nt),
            beta_v: cfg.beta_v,
            beta_w: cfg.beta_w,
            analysis: analysis.as_ref(),
            message,
        },
    )?;
    if let Some(a) = &analysis {
        println!(
            "status={} iterations={} residual_rel={:.6e} det=[{:.6e}, {:.6e}]",
            res.report.status.name(),
            res.report.ledger.len().saturating_sub(1),
            res.report.last().map_or(f64::NAN, |l| l.residual_rel),
            a.det_stats.min,
            a.det_stats.max
        );
    }
    Ok(())
}

fn status_result(status: SolverStatus) -> Result<(), CliError> {
    match status {
        SolverStatus::Converged => Ok(()),
        s => Err(CliError::Solver(format!("solver stopped with status {}", s.name()))),
    }
}

fn cmd_register(a: &RegisterArgs) -> Result<(), CliError> {
    let cfg = reg_config(&a.model)?;
    let solver = solver_config(&a.solver)?;
    let problem = load_problem(&a.images)?;
    create_out(&a.out)?;
    info!("registering {}", problem.tag);
    let res = register(&problem, &cfg, &solver)?;
    write_artifacts(&a.out, &problem, &cfg, nt_init_for(solver.nt_init, &problem), &res)?;
    status_result(res.report.status)
}

fn cmd_continue(a: &ContinueArgs) -> Result<(), CliError> {
    let r = &a.register;
    let cfg = reg_config(&r.model)?;
    let mut solver = solver_config(&r.solver)?;
    solver.warm_start = a.warm_start;
    if !(a.beta_v_init > 0.0) {
        return Err(CliError::Input(format!("--beta-v-init {} must be positive", a.beta_v_init)));
    }
    let problem = load_problem(&r.images)?;
    create_out(&r.out)?;
    let cont = continuation_beta_v(&problem, &cfg, &solver, a.det_bound, a.beta_v_init)?;
    write_trials(&r.out.join("trials.csv"), &cont.trials)?;
    let nt_init = nt_init_for(solver.nt_init, &problem);
    match (cont.beta_v, &cont.result) {
        (Some(beta), Some(res)) => {
            let mut best = cfg.clone();
            best.beta_v = beta;
            write_artifacts(&r.out, &problem, &best, nt_init, res)?;
            println!("beta_v={}", crate::output::fmt_f(beta));
            status_result(res.report.status)
        }
        _ => {
            let min_det = cont.trials.first().map_or(f64::NAN, |t| t.min_det);
            let message = format!(
                "infeasible at beta_v_init = {}: min det = {min_det} below bound {}",
                a.beta_v_init, a.det_bound
            );
            write_summary(
                &r.out.join("summary.csv"),
                &Summary {
                    status: "infeasible_at_init",
                    report: None,
                    nt_init,
                    nt: None,
                    beta_v: a.beta_v_init,
                    beta_w: cfg.beta_w,
                    analysis: None,
                    message: message.clone(),
                },
            )?;
            Err(CliError::Solver(message))
        }
    }
}

/// Relative residual and gradient reduction of `v` for stored images.
fn reductions(
    v: &VectorField,
    mr: &Path,
    mt: &Path,
    a: &AnalyzeArgs,
    nt: usize,
) -> Result<(f64, f64), CliError> {
    let m_r = read_scalar(mr)?;
    let m_t = read_scalar(mt)?;
    same_grid(&m_r, &m_t, "--mr/--mt")?;
    same_grid(&m_r, v.comp(0), "--mr/--v")?;
    let problem = RegistrationProblem::new(m_r, m_t, "analyze");
    let cfg = reg_config(&a.model)?;
    let d = &problem.m_r - &problem.m_t;
    let r0 = 0.5 * d.dot(&d);
    let (obj, _) = evaluate_objective(v, &problem, &cfg, nt)?;
    let residual = if r0 > 0.0 { obj.mismatch / r0 } else { 0.0 };
    let zero = VectorField::zeros(problem.grid());
    let nt0 = cfl_timesteps(&zero, nt_init_for(a.nt_init, &problem), SolverConfig::default().cfl_safety);
    let g0 = IterateState::new(zero, &problem, &cfg, nt0, Counters::default())?.g.norm_inf();
    let g = IterateState::new(v.clone(), &problem, &cfg, nt, Counters::default())?.g.norm_inf();
    let grad = if g0 > 0.0 { g / g0 } else { 0.0 };
    Ok((residual, grad))
}

fn cmd_analyze(a: &AnalyzeArgs) -> Result<(), CliError> {
    let v = read_vector(&a.v)?;
    let nt = match a.nt {
        Some(0) => return Err(CliError::Input("--nt must be positive".into())),
        Some(n) => n,
        None => cfl_timesteps(&v, default_nt_init(v.grid()), SolverConfig::default().cfl_safety),
    };
    if a.upsample == 0 || !(a.sigma_factor >= 0.0) || !(a.threshold > 0.0 && a.threshold < 1.0) {
        return Err(CliError::Input("label transport needs upsample ≥ 1, sigma-factor ≥ 0, threshold in (0, 1)".into()));
    }
    create_out(&a.out)?;
    let deformation: DeformationAnalysis =
        analyze_deformation(&v, nt, None).map_err(|e| CliError::Solver(e.to_string()))?;
    let (residual_rel, grad_rel) = match (&a.mr, &a.mt) {
        (Some(mr), Some(mt)) => {
            let (r, g) = reductions(&v, mr, mt, a, nt)?;
            (Some(r), Some(g))
        }
        _ => (None, None),
    };
    let overlap_scores = match (&a.lr, &a.lt) {
        (Some(lr), Some(lt)) => {
            let l_r = read_scalar(lr)?;
            let l_t = read_scalar(lt)?;
            same_grid(&l_r, &l_t, "--lr/--lt")?;
            same_grid(&l_r, v.comp(0), "--lr/--v")?;
            let opts = LabelTransport {
                upsample: a.upsample,
                sigma_factor: a.sigma_factor,
                threshold: a.threshold,
                ..LabelTransport::default()
            };
            let moved = transport_labels(&l_t, &v, &opts).map_err(|e| CliError::Solver(e.to_string()))?;
            write_raw_scalar(&moved, &a.out.join("l1.raw"))?;
            Some(overlap(&l_r, &moved).map_err(|e| CliError::Input(e.to_string()))?)
        }
        _ => None,
    };
    write_raw_vector(&deformation.u1, &a.out.join("u1.raw"))?;
    write_detf_colormap(&deformation.det, DEFAULT_DETF_WINDOW, &a.out.join("detF.ppm"))?;
    write_analysis(
        &a.out.join("analysis.csv"),
        &Analysis {
            nt,
            deformation: &deformation,
            residual_rel,
            grad_rel,
            overlap: overlap_scores,
        },
    )?;
    println!(
        "det=[{:.6e}, {:.6e}, {:.6e}] dist=[{:.6e}, {:.6e}]",
        deformation.det_stats.min,
        deformation.det_stats.mean,
        deformation.det_stats.max,
        deformation.dist_stats.mean,
        deformation.dist_stats.max
    );
    if let Some(o) = overlap_scores {
        println!("dsc={:?} jsc={:?} fpe={:?} fne={:?}", o.dsc, o.jsc, o.fpe, o.fne);
    }
    Ok(())
}

const BLOB_SHIFT: f64 = 0.4;

fn cmd_synth(a: &SynthArgs) -> Result<(), CliError> {
    let grid = stokesreg::Grid2D::square(a.n).map_err(|e| CliError::Input(e.to_string()))?;
    if let Some(s) = a.shift {
        if !s.is_finite() {
            return Err(CliError::Input(format!("--shift {s} must be finite")));
        }
    }
    let problem = match a.problem {
        ProblemArg::Blobs => {
            let s = a.shift.unwrap_or(BLOB_SHIFT);
            gen_blob_problem(&grid, [s, 0.75 * s])
        }
        ProblemArg::Rectangles => {
            let mut g = RectanglesGeometry::default();
            g.shift = a.shift.unwrap_or(g.shift);
            gen_sliding_rectangles(&grid, &g)
        }
        ProblemArg::Vent => {
            let mut g = VentGeometry::default();
            g.shift = a.shift.unwrap_or(g.shift);
            gen_sliding_vent(&grid, &g)
        }
    };
    create_out(&a.out)?;
    let path = |name: &str| -> PathBuf { a.out.join(name) };
    write_pgm(&problem.m_r, &path("m_r.pgm"))?;
    write_pgm(&problem.m_t, &path("m_t.pgm"))?;
    write_raw_scalar(&problem.m_r, &path("m_r.raw"))?;
    write_raw_scalar(&problem.m_t, &path("m_t.raw"))?;
    if let (Some(l_r), Some(l_t)) = (&problem.l_r, &problem.l_t) {
        write_raw_scalar(l_r, &path("l_r.raw"))?;
        write_raw_scalar(l_t, &path("l_t.raw"))?;
    }
    println!("{}", problem.tag);
    Ok(())
}
