use std::fs::File;
use std::path::Path;

use stokesreg::metrics::{DeformationAnalysis, OverlapScores};
use stokesreg::optimizer::{ContinuationTrial, IterationRecord, SolverReport};

/// Lossless decimal form of a float.
pub fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f).unwrap_or_default()
}

fn writer(path: &Path) -> csv::Result<csv::Writer<File>> {
    csv::Writer::from_path(path)
}

pub fn write_ledger(path: &Path, ledger: &[IterationRecord]) -> csv::Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "k",
        "objective",
        "mismatch",
        "grad_rel_inf",
        "grad_norm_l2",
        "residual_rel",
        "nt",
        "eta",
        "inner_iterations",
        "pcg_residual_rel",
        "alpha",
        "n_matvec",
        "n_pde_solves",
    ])?;
    for r in ledger {
        w.write_record([
            r.k.to_string(),
            fmt_f(r.objective),
            fmt_f(r.mismatch),
            fmt_f(r.grad_rel_inf),
            fmt_f(r.grad_norm_l2),
            fmt_f(r.residual_rel),
            r.nt.to_string(),
            fmt_opt(r.eta),
            r.inner_iterations.map(|i| i.to_string()).unwrap_or_default(),
            fmt_opt(r.pcg_residual_rel),
            fmt_opt(r.alpha),
            r.n_matvec.to_string(),
            r.n_pde_solves.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub const SUMMARY_HEADER: [&str; 16] = [
    "status",
    "outer_iterations",
    "nt_init",
    "nt",
    "beta_v",
    "beta_w",
    "n_matvec",
    "n_pde",
    "grad_rel",
    "residual_rel",
    "det_min",
    "det_mean",
    "det_max",
    "dist_mean",
    "dist_max",
    "message",
];

pub struct Summary<'a> {
    pub status: &'a str,
    pub report: Option<&'a SolverReport>,
    pub nt_init: usize,
    pub nt: Option<usize>,
    pub beta_v: f64,
    pub beta_w: f64,
    pub analysis: Option<&'a DeformationAnalysis>,
    pub message: String,
}

pub fn write_summary(path: &Path, s: &Summary) -> csv::Result<()> {
    let mut w = writer(path)?;
    w.write_record(SUMMARY_HEADER)?;
    let last = s.report.and_then(|r| r.last());
    let a = s.analysis;
    w.write_record([
        s.status.to_string(),
        s.report.map(|r| r.ledger.len().saturating_sub(1).to_string()).unwrap_or_default(),
        s.nt_init.to_string(),
        s.nt.map(|n| n.to_string()).unwrap_or_default(),
        fmt_f(s.beta_v),
        fmt_f(s.beta_w),
        s.report.map(|r| r.counters.n_matvec.to_string()).unwrap_or_default(),
        s.report.map(|r| r.counters.n_pde_solves.to_string()).unwrap_or_default(),
        fmt_opt(last.map(|l| l.grad_rel_inf)),
        fmt_opt(last.map(|l| l.residual_rel)),
        fmt_opt(a.map(|a| a.det_stats.min)),
        fmt_opt(a.map(|a| a.det_stats.mean)),
        fmt_opt(a.map(|a| a.det_stats.max)),
        fmt_opt(a.map(|a| a.dist_stats.mean)),
        fmt_opt(a.map(|a| a.dist_stats.max)),
        s.message.clone(),
    ])?;
    w.flush()?;
    Ok(())
}

pub fn write_trials(path: &Path, trials: &[ContinuationTrial]) -> csv::Result<()> {
    let mut w = writer(path)?;
    w.write_record(["beta_v", "min_det", "feasible", "status", "outer_iterations"])?;
    for t in trials {
        w.write_record([
            fmt_f(t.beta_v),
            fmt_f(t.min_det),
            t.feasible.to_string(),
            t.status.name().to_string(),
            t.outer_iterations.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub struct Analysis<'a> {
    pub nt: usize,
    pub deformation: &'a DeformationAnalysis,
    pub residual_rel: Option<f64>,
    pub grad_rel: Option<f64>,
    pub overlap: Option<OverlapScores>,
}

pub fn write_analysis(path: &Path, a: &Analysis) -> csv::Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "nt",
        "grad_rel",
        "residual_rel",
        "det_min",
        "det_mean",
        "det_max",
        "dist_mean",
        "dist_max",
        "jsc",
        "dsc",
        "fpe",
        "fne",
    ])?;
    let d = a.deformation;
    let o = a.overlap;
    w.write_record([
        a.nt.to_string(),
        fmt_opt(a.grad_rel),
        fmt_opt(a.residual_rel),
        fmt_f(d.det_stats.min),
        fmt_f(d.det_stats.mean),
        fmt_f(d.det_stats.max),
        fmt_f(d.dist_stats.mean),
        fmt_f(d.dist_stats.max),
        fmt_opt(o.and_then(|o| o.jsc)),
        fmt_opt(o.and_then(|o| o.dsc)),
        fmt_opt(o.and_then(|o| o.fpe)),
        fmt_opt(o.and_then(|o| o.fne)),
    ])?;
    w.flush()?;
    Ok(())
}
