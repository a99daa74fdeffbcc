//! Elimination of the pressure `p` and mass source `w` from the optimality
//! system: the projections `K` (gradient) and `L` (Hessian), the scalar
//! operator `M` and recovery of the eliminated multipliers.
//!
//! Per Fourier mode with `k̂ ≠ 0` every operator here splits into the
//! divergence-free part `P` and the curl-free part `Q = ∇Δ⁻¹∇·`. The
//! constant-coefficient projection is `P + τQ` with
//! `τ = c/(c + β_w(|k̂|²+1))`, where `c` is the curl-free symbol of the
//! regularization divided by `|k̂|²` (`β_v` for H¹, `β_v|k̂|²` for H²,
//! `2β_vη̄` for the viscous models). `τ = 0` in incompressible mode.

use crate::field::{ScalarField, VectorField};
use crate::regularization::{apply_A, apply_B, apply_mean_part, mean_viscosity, RegConfig, RegModel};
use crate::spectral::{apply_symbol, divergence, inverse_helmholtz, inverse_laplacian, weighted_gradient_part};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EliminationMode {
    /// `γ = 0`: no constraint, `K = id`.
    Unconstrained,
    /// `w ≡ 0`, `∇·v = 0`.
    Incompressible,
    /// `∇·v = w` with `w` penalized in `H¹`.
    NearIncompressible,
}

impl EliminationMode {
    pub fn from_config(cfg: &RegConfig) -> Self {
        if !cfg.constrained() {
            EliminationMode::Unconstrained
        } else if cfg.incompressible {
            EliminationMode::Incompressible
        } else {
            EliminationMode::NearIncompressible
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EliminationMode::Unconstrained => "unconstrained",
            EliminationMode::Incompressible => "incompressible",
            EliminationMode::NearIncompressible => "near-incompressible",
        }
    }
}

/// Elimination operators frozen at one velocity iterate.
#[derive(Debug, Clone)]
pub struct Elimination {
    mode: EliminationMode,
    cfg: RegConfig,
    eta_bar: f64,
}

impl Elimination {
    /// Freezes the mean viscosity `η̄` at `v` (1 for quadratic models).
    pub fn new(cfg: &RegConfig, v: &VectorField) -> Self {
        let mode = EliminationMode::from_config(cfg);
        let eta_bar = if mode == EliminationMode::Unconstrained {
            1.0
        } else {
            mean_viscosity(v, cfg)
        };
        Self::with_mean_viscosity(cfg, eta_bar)
    }

    pub fn with_mean_viscosity(cfg: &RegConfig, eta_bar: f64) -> Self {
        Self {
            mode: EliminationMode::from_config(cfg),
            cfg: cfg.clone(),
            eta_bar,
        }
    }

    pub fn mode(&self) -> EliminationMode {
        self.mode
    }

    pub fn eta_bar(&self) -> f64 {
        self.eta_bar
    }

    fn c_symbol(&self, k: [f64; 2]) -> f64 {
        let beta_v = self.cfg.beta_v;
        match self.cfg.model {
            RegModel::H1Seminorm => beta_v,
            RegModel::H2Seminorm => beta_v * (k[0] * k[0] + k[1] * k[1]),
            _ => 2.0 * beta_v * self.eta_bar,
        }
    }

    fn w_symbol(&self, k: [f64; 2]) -> f64 {
        self.cfg.beta_w * (k[0] * k[0] + k[1] * k[1] + 1.0)
    }

    /// `τ(k̂)`, the weight of the curl-free part kept by the projection.
    pub fn tau(&self, k: [f64; 2]) -> f64 {
        match self.mode {
            EliminationMode::Unconstrained => 1.0,
            EliminationMode::Incompressible => 0.0,
            EliminationMode::NearIncompressible => {
                let c = self.c_symbol(k);
                c / (c + self.w_symbol(k))
            }
        }
    }

    /// `M⁻¹f` with `M = c(β_w(−Δ+id))⁻¹ + id`; identity unless near-incompressible.
    pub fn m_inverse(&self, f: &ScalarField) -> ScalarField {
        if self.mode != EliminationMode::NearIncompressible {
            return f.clone();
        }
        apply_symbol(f, |k| {
            let w = self.w_symbol(k);
            w / (self.c_symbol(k) + w)
        })
    }

    /// `(P + τQ)x`: the constant-coefficient projection `b − ∇M⁻¹Δ⁻¹∇·b`.
    pub fn project(&self, x: &VectorField) -> VectorField {
        match self.mode {
            EliminationMode::Unconstrained => x.clone(),
            _ => {
                let mut out = x.clone();
                out -= &weighted_gradient_part(x, |k| 1.0 - self.tau(k));
                out
            }
        }
    }

    /// `(P + Q/τ)x`, the inverse of [`Elimination::project`] on its range.
    /// Identity in the unconstrained and incompressible modes.
    pub fn metric(&self, x: &VectorField) -> VectorField {
        if self.mode != EliminationMode::NearIncompressible {
            return x.clone();
        }
        let mut out = x.clone();
        out += &weighted_gradient_part(x, |k| self.w_symbol(k) / self.c_symbol(k));
        out
    }

    /// Variable-coefficient remainder `β_v(A[v] − Ā[v])` of the viscous models.
    fn variable_part_a(&self, v: &VectorField) -> Option<VectorField> {
        if self.cfg.model.is_quadratic() {
            return None;
        }
        let mut r = apply_A(v, &self.cfg);
        r -= &apply_mean_part(v, &self.cfg, self.eta_bar);
        r *= self.cfg.beta_v;
        Some(r)
    }

    fn variable_part_b(&self, v: &VectorField, v_inc: &VectorField) -> Option<VectorField> {
        if self.cfg.model.is_quadratic() {
            return None;
        }
        let mut r = apply_B(v, v_inc, &self.cfg);
        r -= &apply_mean_part(v_inc, &self.cfg, self.eta_bar);
        r *= self.cfg.beta_v;
        Some(r)
    }

    fn project_shifted(&self, b: &VectorField, shift: Option<VectorField>) -> VectorField {
        match shift {
            None => self.project(b),
            Some(s) => {
                let mut x = b + &s;
                x = self.project(&x);
                x -= &s;
                x
            }
        }
    }

    /// Gradient projection `K[b, v]`; the reduced gradient is `β_v A[v] + K[b, v]`.
    pub fn project_k(&self, b: &VectorField, v: &VectorField) -> VectorField {
        if self.mode == EliminationMode::Unconstrained {
            return b.clone();
        }
        self.project_shifted(b, self.variable_part_a(v))
    }

    /// Hessian projection `L(v)[b̃, ṽ]`; the Hessian action is `β_v B[v]ṽ + L`.
    pub fn project_l(&self, b_inc: &VectorField, v: &VectorField, v_inc: &VectorField) -> VectorField {
        if self.mode == EliminationMode::Unconstrained {
            return b_inc.clone();
        }
        self.project_shifted(b_inc, self.variable_part_b(v, v_inc))
    }

    /// Eliminated pressure and mass source for body force `b` at `v`.
    pub fn recover(&self, b: &VectorField, v: &VectorField) -> (ScalarField, ScalarField) {
        let grid = b.grid();
        if self.mode == EliminationMode::Unconstrained {
            return (ScalarField::zeros(grid), ScalarField::zeros(grid));
        }
        let x = match self.variable_part_a(v) {
            Some(s) => b + &s,
            None => b.clone(),
        };
        let mut p = self.m_inverse(&inverse_laplacian(&divergence(&x)));
        p *= -1.0;
        let w = if self.mode == EliminationMode::Incompressible {
            ScalarField::zeros(grid)
        } else {
            let mut w = inverse_helmholtz(&p, self.cfg.beta_w).expect("beta_w validated positive");
            w *= -1.0;
            w
        };
        (p, w)
    }
}

/// `M⁻¹f` for mean viscosity `eta_bar` (use 1 for quadratic models).
pub fn apply_m_inverse(f: &ScalarField, mode: EliminationMode, cfg: &RegConfig, eta_bar: f64) -> ScalarField {
    let mut e = Elimination::with_mean_viscosity(cfg, eta_bar);
    e.mode = mode;
    e.m_inverse(f)
}

fn frozen(mode: EliminationMode, cfg: &RegConfig, v: &VectorField) -> Elimination {
    let mut e = Elimination::new(cfg, v);
    e.mode = mode;
    e
}

/// `K[b] = b − ∇M⁻¹Δ⁻¹∇·b`.
pub fn project_k_linear(b: &VectorField, mode: EliminationMode, cfg: &RegConfig) -> VectorField {
    let mut e = Elimination::with_mean_viscosity(cfg, 1.0);
    e.mode = mode;
    e.project(b)
}

/// `K[b, v] = ∇M⁻¹Δ⁻¹∇·(∇·2β_v η̂E[v] − b) + b` with `η̂ = η − η̄`.
pub fn project_k_nonlinear(b: &VectorField, v: &VectorField, mode: EliminationMode, cfg: &RegConfig) -> VectorField {
    frozen(mode, cfg, v).project_k(b, v)
}

/// Hessian projection for quadratic models; identical to [`project_k_linear`].
pub fn project_l_linear(
    b_inc: &VectorField,
    _v: &VectorField,
    _v_inc: &VectorField,
    mode: EliminationMode,
    cfg: &RegConfig,
) -> VectorField {
    project_k_linear(b_inc, mode, cfg)
}

/// `L(v)[b̃, ṽ] = ∇M⁻¹Δ⁻¹∇·(∇·2β_v(η̂ + ηQ)E[ṽ] − b̃) + b̃`.
pub fn project_l_nonlinear(
    b_inc: &VectorField,
    v: &VectorField,
    v_inc: &VectorField,
    mode: EliminationMode,
    cfg: &RegConfig,
) -> VectorField {
    frozen(mode, cfg, v).project_l(b_inc, v, v_inc)
}

/// Pressure `p` and mass source `w` eliminated from the optimality system.
pub fn recover_pressure_and_mass_source(
    b: &VectorField,
    v: &VectorField,
    mode: EliminationMode,
    cfg: &RegConfig,
) -> (ScalarField, ScalarField) {
    frozen(mode, cfg, v).recover(b, v)
}
