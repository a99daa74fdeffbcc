//! Velocity regularization: H¹/H² seminorms, nonlinear Stokes (power-law
//! viscosity) and smoothed total variation, with first and second variations
//! and the spectral preconditioner.
//!
//! In the objective, quadratic energies enter as `β_v/2 · R` and the
//! nonlinear ones as `β_v · R`, so that `β_v·A[v]` is the exact gradient of
//! the regularization term for every model.

use thiserror::Error;
use crate::field::{ScalarField, TensorField2x2, VectorField};

use crate::spectral::{
    apply_symbol, apply_symbol_vector, divergence_tensor, gradient, jacobian, SpectralError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegModel {
    H1Seminorm,
    H2Seminorm,
    NonlinearStokes,
    TotalVariation,
}

impl RegModel {
    pub fn is_quadratic(self) -> bool {
        matches!(self, RegModel::H1Seminorm | RegModel::H2Seminorm)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegError {
    #[error("beta_v must be positive, got {0}")]
    NonPositiveBetaV(f64),
    #[error("beta_w must be positive for the mass-source formulation, got {0}")]
    NonPositiveBetaW(f64),
    #[error("gamma must be 0 or 1, got {0}")]
    InvalidGamma(u8),
    #[error("flow exponent nu must be positive, got {0}")]
    NonPositiveNu(f64),
    #[error("viscosity safeguard must be positive, got {0}")]
    NonPositiveEps(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegConfig {
    pub model: RegModel,
    pub beta_v: f64,
    pub beta_w: f64,
    /// 1 couples the divergence constraint, 0 drops it.
    pub gamma: u8,
    pub nu: f64,
    /// Exponent of the velocity norm; informational only.
    pub q: f64,
    pub incompressible: bool,
    pub eps_visc: f64,
}

impl Default for RegConfig {
    fn default() -> Self {
        Self::new(RegModel::H1Seminorm, 1e-2)
    }
}

impl RegConfig {
    pub fn new(model: RegModel, beta_v: f64) -> Self {
        Self {
            model,
            beta_v,
            beta_w: 1e-2,
            gamma: 0,
            nu: 1.0,
            q: 2.0,
            incompressible: false,
            eps_visc: 1e-6,
        }
    }

    /// Nonlinear Stokes model with flow exponent `nu`.
    pub fn nonlinear(beta_v: f64, nu: f64) -> Self {
        Self {
            nu,
            q: (1.0 + nu) / (2.0 * nu),
            ..Self::new(RegModel::NonlinearStokes, beta_v)
        }
    }

    /// Turns on the exact incompressibility constraint.
    pub fn incompressible(mut self) -> Self {
        self.gamma = 1;
        self.incompressible = true;
        self
    }

    /// Turns on the relaxed constraint `∇·v = w` with mass-source weight `beta_w`.
    pub fn with_mass_source(mut self, beta_w: f64) -> Self {
        self.gamma = 1;
        self.incompressible = false;
        self.beta_w = beta_w;
        self
    }

    pub fn constrained(&self) -> bool {
        self.gamma == 1
    }

    pub fn validate(&self) -> Result<(), RegError> {
        if !(self.beta_v > 0.0) {
            return Err(RegError::NonPositiveBetaV(self.beta_v));
        }
        if self.gamma > 1 {
            return Err(RegError::InvalidGamma(self.gamma));
        }
        if self.gamma == 1 && !self.incompressible && !(self.beta_w > 0.0) {
            return Err(RegError::NonPositiveBetaW(self.beta_w));
        }
        if !(self.nu > 0.0) {
            return Err(RegError::NonPositiveNu(self.nu));
        }
        if !(self.eps_visc > 0.0) {
            return Err(RegError::NonPositiveEps(self.eps_visc));
        }
        Ok(())
    }
}

fn integral(f: &ScalarField) -> f64 {
    f.values().iter().sum::<f64>() * f.grid().cell_volume()
}

/// `E[v] = ½(∇v + ∇vᵀ)`, symmetric by construction.
pub fn strain_rate(v: &VectorField) -> TensorField2x2 {
    let j = jacobian(v);
    let mut off = j.entry(0, 1) + j.entry(1, 0);
    off *= 0.5;
    TensorField2x2::new([
        [j.entry(0, 0).clone(), off.clone()],
        [off, j.entry(1, 1).clone()],
    ])
}

/// `η = (E:E + ε)^{(1−ν)/2ν}`.
pub fn effective_viscosity(v: &VectorField, nu: f64, eps_visc: f64) -> ScalarField {
    let e = strain_rate(v);
    let expo = (1.0 - nu) / (2.0 * nu);
    e.double_dot(&e).map(|s| (s + eps_visc).powf(expo))
}

fn tv_viscosity(grad_v: &TensorField2x2, eps_visc: f64) -> ScalarField {
    grad_v.double_dot(grad_v).map(|s| 1.0 / (s + eps_visc).sqrt())
}

/// Model viscosity `η[v]`: power law for nonlinear Stokes, `(∇v:∇v + ε)^{−1/2}`
/// for TV, and 1 for quadratic models.
pub fn viscosity(v: &VectorField, cfg: &RegConfig) -> ScalarField {
    match cfg.model {
        RegModel::NonlinearStokes => effective_viscosity(v, cfg.nu, cfg.eps_visc),
        RegModel::TotalVariation => tv_viscosity(&jacobian(v), cfg.eps_visc),
        _ => ScalarField::constant(v.grid(), 1.0),
    }
}

/// Spatial mean `η̄` of the model viscosity.
pub fn mean_viscosity(v: &VectorField, cfg: &RegConfig) -> f64 {
    if cfg.model.is_quadratic() {
        1.0
    } else {
        viscosity(v, cfg).mean()
    }
}

/// Regularization energy `R[v]`.
///
/// H¹: `∫∇v:∇v`; H²: `∫Δv·Δv`; nonlinear Stokes:
/// `2ν/(ν+1)·∫[(E:E+ε)^{(1+ν)/2ν} − ε^{(1+ν)/2ν}]`; TV: `2∫[(∇v:∇v+ε)^{1/2} − ε^{1/2}]`.
pub fn reg_energy_v(v: &VectorField, cfg: &RegConfig) -> f64 {
    match cfg.model {
        RegModel::H1Seminorm => {
            let g0 = gradient(v.comp(0));
            let g1 = gradient(v.comp(1));
            g0.dot(&g0) + g1.dot(&g1)
        }
        RegModel::H2Seminorm => {
            let l = skew_laplacian(v);
            l.dot(&l)
        }
        RegModel::NonlinearStokes => {
            let (nu, eps) = (cfg.nu, cfg.eps_visc);
            let e = strain_rate(v);
            let p = (1.0 + nu) / (2.0 * nu);
            let base = eps.powf(p);
            let density = e.double_dot(&e).map(|s| (s + eps).powf(p) - base);
            2.0 * nu / (nu + 1.0) * integral(&density)
        }
        RegModel::TotalVariation => {
            let g = jacobian(v);
            let eps = cfg.eps_visc;
            let base = eps.sqrt();
            2.0 * integral(&g.double_dot(&g).map(|s| (s + eps).sqrt() - base))
        }
    }
}

/// The regularization term of the objective, whose gradient is `β_v·A[v]`.
pub fn reg_objective_v(v: &VectorField, cfg: &RegConfig) -> f64 {
    let r = reg_energy_v(v, cfg);
    if cfg.model.is_quadratic() {
        0.5 * cfg.beta_v * r
    } else {
        cfg.beta_v * r
    }
}

/// `∇·∇` applied componentwise. Unlike the spectral Laplacian it drops
/// Nyquist modes, which keeps the operators below exact variations of
/// energies assembled from first derivatives.
fn skew_laplacian(v: &VectorField) -> VectorField {
    apply_symbol_vector(v, |k| -(k[0] * k[0] + k[1] * k[1]))
}

fn quadratic_symbol(model: RegModel) -> impl Fn([f64; 2]) -> f64 {
    move |k| {
        let k2 = k[0] * k[0] + k[1] * k[1];
        if model == RegModel::H2Seminorm {
            k2 * k2
        } else {
            k2
        }
    }
}

/// `−∇·(2 T)`
fn minus_two_div(t: &TensorField2x2) -> VectorField {
    let mut out = divergence_tensor(t);
    out *= -2.0;
    out
}

/// First variation `A[v]` of the energy.
#[allow(non_snake_case)]
pub fn apply_A(v: &VectorField, cfg: &RegConfig) -> VectorField {
    match cfg.model {
        RegModel::H1Seminorm | RegModel::H2Seminorm => apply_symbol_vector(v, quadratic_symbol(cfg.model)),
        RegModel::NonlinearStokes => {
            let e = strain_rate(v);
            let expo = (1.0 - cfg.nu) / (2.0 * cfg.nu);
            let eta = e.double_dot(&e).map(|s| (s + cfg.eps_visc).powf(expo));
            minus_two_div(&e.scaled_by(&eta))
        }
        RegModel::TotalVariation => {
            let g = jacobian(v);
            let eta = tv_viscosity(&g, cfg.eps_visc);
            minus_two_div(&g.scaled_by(&eta))
        }
    }
}

/// Second variation `B[v]ṽ`.
///
/// Nonlinear Stokes: `−∇·2η(I + Q)E[ṽ]`, `Q = (1−ν)/ν · E⊗E/(E:E+ε)`.
/// TV: `−∇·2η(I − ∇v⊗∇v/(∇v:∇v+ε))∇ṽ`.
#[allow(non_snake_case)]
pub fn apply_B(v: &VectorField, v_inc: &VectorField, cfg: &RegConfig) -> VectorField {
    match cfg.model {
        RegModel::H1Seminorm | RegModel::H2Seminorm => apply_A(v_inc, cfg),
        RegModel::NonlinearStokes => {
            let (nu, eps) = (cfg.nu, cfg.eps_visc);
            let e = strain_rate(v);
            let et = strain_rate(v_inc);
            let ee = e.double_dot(&e);
            let eta = ee.map(|s| (s + eps).powf((1.0 - nu) / (2.0 * nu)));
            let c = (1.0 - nu) / nu;
            let mut t = et.clone();
            if c != 0.0 {
                let s = e.double_dot(&et).zip_map(&ee, |a, b| c * a / (b + eps));
                t.axpy(1.0, &e.scaled_by(&s));
            }
            minus_two_div(&t.scaled_by(&eta))
        }
        RegModel::TotalVariation => {
            let g = jacobian(v);
            let gt = jacobian(v_inc);
            let gg = g.double_dot(&g);
            let eta = tv_viscosity(&g, cfg.eps_visc);
            let s = g.double_dot(&gt).zip_map(&gg, |a, b| a / (b + cfg.eps_visc));
            let mut t = gt;
            t.axpy(-1.0, &g.scaled_by(&s));
            minus_two_div(&t.scaled_by(&eta))
        }
    }
}

/// Constant-coefficient part of `A` (or `B`) obtained by replacing `η` with
/// its mean: `−∇·2η̄E[u]` for nonlinear Stokes, `−2η̄Δu` for TV, `A[u]` for
/// quadratic models.
pub fn apply_mean_part(u: &VectorField, cfg: &RegConfig, eta_bar: f64) -> VectorField {
    match cfg.model {
        RegModel::H1Seminorm | RegModel::H2Seminorm => apply_A(u, cfg),
        RegModel::NonlinearStokes => {
            let mut out = minus_two_div(&strain_rate(u));
            out *= eta_bar;
            out
        }
        RegModel::TotalVariation => {
            let mut out = skew_laplacian(u);
            out *= -2.0 * eta_bar;
            out
        }
    }
}

/// Mass-source energy `∫(∇w·∇w + w²)`.
pub fn reg_energy_w(w: &ScalarField) -> f64 {
    let g = gradient(w);
    g.dot(&g) + w.dot(w)
}

/// `β_w(−Δ + id)w`, with `Δ = ∇·∇` as in the energy.
pub fn apply_w_operator(w: &ScalarField, beta_w: f64) -> Result<ScalarField, SpectralError> {
    if beta_w <= 0.0 || beta_w.is_nan() {
        return Err(SpectralError::NonPositiveWeight(beta_w));
    }
    Ok(apply_symbol(w, |k| beta_w * (k[0] * k[0] + k[1] * k[1] + 1.0)))
}

/// Spectral preconditioner: `(β_v A)⁻¹` for quadratic models and
/// `(β_v(−Δ))⁻¹` otherwise, with modes in the kernel scaled by `1/β_v`.
pub fn apply_preconditioner(r: &VectorField, _v: &VectorField, cfg: &RegConfig) -> VectorField {
    let model = if cfg.model.is_quadratic() {
        cfg.model
    } else {
        RegModel::H1Seminorm
    };
    let sym = quadratic_symbol(model);
    let beta = cfg.beta_v;
    apply_symbol_vector(r, move |k| {
        let s = sym(k);
        if s == 0.0 {
            1.0 / beta
        } else {
            1.0 / (beta * s)
        }
    })
}
