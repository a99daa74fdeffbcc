//! Explicit RK2 (midpoint) solvers for the transport equations of the
//! registration problem, trapezoidal time quadrature of body forces and
//! CFL-based time-step selection.
//!
//! Forward equations march from `t = 0` to `t = 1`; adjoint equations march
//! backward from `t = 1`. Values of stored series at RK2 half steps are the
//! arithmetic mean of the two adjacent slices.

use thiserror::Error;

use crate::field::{ScalarField, TensorField2x2, VectorField};
use crate::grid::Grid2D;
use crate::spectral::{divergence, gradient};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error("{equation} solution became non-finite at time step {step}")]
    Instability { equation: &'static str, step: usize },
    #[error("time series have mismatched lengths ({0} vs {1} slices)")]
    SliceCountMismatch(usize, usize),
    #[error("time series needs at least two slices")]
    TooFewSlices,
}

/// Scalar field sampled at `t_j = j / n_t`, `j = 0..=n_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeriesField {
    slices: Vec<ScalarField>,
}

impl TimeSeriesField {
    pub fn new(slices: Vec<ScalarField>) -> Result<Self, TransportError> {
        if slices.len() < 2 {
            return Err(TransportError::TooFewSlices);
        }
        let g = slices[0].grid();
        assert!(slices.iter().all(|s| s.grid() == g), "slices live on different grids");
        Ok(Self { slices })
    }

    /// A series with every slice equal to `f`.
    pub fn constant(f: &ScalarField, nt: usize) -> Self {
        Self {
            slices: vec![f.clone(); nt.max(1) + 1],
        }
    }

    pub fn grid(&self) -> &Grid2D {
        self.slices[0].grid()
    }

    pub fn nt(&self) -> usize {
        self.slices.len() - 1
    }

    pub fn ht(&self) -> f64 {
        1.0 / self.nt() as f64
    }

    pub fn slice(&self, j: usize) -> &ScalarField {
        &self.slices[j]
    }

    pub fn first(&self) -> &ScalarField {
        &self.slices[0]
    }

    pub fn last(&self) -> &ScalarField {
        &self.slices[self.slices.len() - 1]
    }

    pub fn slices(&self) -> &[ScalarField] {
        &self.slices
    }

    /// Value at `t_{j+1/2}` (mean of adjacent slices).
    pub fn midpoint(&self, j: usize) -> ScalarField {
        let mut m = &self.slices[j] + &self.slices[j + 1];
        m *= 0.5;
        m
    }

    fn at(&self, at: At) -> ScalarField {
        match at {
            At::Node(j) => self.slices[j].clone(),
            At::Mid(j) => self.midpoint(j),
        }
    }
}

/// Default initial number of time steps, `2·max(n₁, n₂)`.
pub fn default_nt_init(grid: &Grid2D) -> usize {
    let [n1, n2] = grid.n();
    2 * n1.max(n2)
}

/// Smallest `n_t ≥ nt_init` with `‖v‖_∞ / n_t ≤ safety · min(h)`.
pub fn cfl_timesteps(v: &VectorField, nt_init: usize, safety: f64) -> usize {
    let nt_init = nt_init.max(1);
    let vmax = v.norm_inf();
    let bound = safety * v.grid().min_h();
    if vmax == 0.0 || !vmax.is_finite() {
        return nt_init;
    }
    let mut nt = ((vmax / bound).ceil() as usize).max(nt_init);
    while vmax / nt as f64 > bound {
        nt += 1;
    }
    while nt > nt_init && vmax / (nt - 1) as f64 <= bound {
        nt -= 1;
    }
    nt
}

#[derive(Clone, Copy, Debug)]
enum At {
    Node(usize),
    Mid(usize),
}

trait RkState: Clone {
    fn axpy(&mut self, a: f64, x: &Self);
    fn finite(&self) -> bool;
}

impl RkState for ScalarField {
    fn axpy(&mut self, a: f64, x: &Self) {
        ScalarField::axpy(self, a, x)
    }
    fn finite(&self) -> bool {
        self.is_finite()
    }
}

impl RkState for VectorField {
    fn axpy(&mut self, a: f64, x: &Self) {
        VectorField::axpy(self, a, x)
    }
    fn finite(&self) -> bool {
        self.is_finite()
    }
}

impl RkState for TensorField2x2 {
    fn axpy(&mut self, a: f64, x: &Self) {
        TensorField2x2::axpy(self, a, x)
    }
    fn finite(&self) -> bool {
        self.is_finite()
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Direction {
    Forward,
    Backward,
}

/// Explicit midpoint rule. `rhs` returns the derivative along the marching
/// direction. Returns slices ordered by time index (all of them, or only the
/// end state when `keep_all` is false).
fn march<S: RkState>(
    init: S,
    nt: usize,
    dir: Direction,
    keep_all: bool,
    equation: &'static str,
    rhs: impl Fn(&S, At) -> S,
) -> Result<Vec<S>, TransportError> {
    let ht = 1.0 / nt as f64;
    let mut out = Vec::with_capacity(if keep_all { nt + 1 } else { 1 });
    let mut x = init;
    if keep_all {
        out.push(x.clone());
    }
    for step in 0..nt {
        let (node, mid) = match dir {
            Direction::Forward => (step, step),
            Direction::Backward => (nt - step, nt - step - 1),
        };
        let k1 = rhs(&x, At::Node(node));
        let mut half = x.clone();
        half.axpy(0.5 * ht, &k1);
        let k2 = rhs(&half, At::Mid(mid));
        x.axpy(ht, &k2);
        if !x.finite() {
            return Err(TransportError::Instability {
                equation,
                step: step + 1,
            });
        }
        if keep_all {
            out.push(x.clone());
        }
    }
    if !keep_all {
        out.push(x);
    } else if dir == Direction::Backward {
        out.reverse();
    }
    Ok(out)
}

/// `−∇f·v`
fn advection(f: &ScalarField, v: &VectorField) -> ScalarField {
    let mut out = gradient(f).pointwise_dot(v);
    out *= -1.0;
    out
}

/// `∇·(f v)`
fn conservative_flux(f: &ScalarField, v: &VectorField) -> ScalarField {
    divergence(&v.scaled_by(f))
}

/// Forward transport `∂ₜm + ∇m·v = 0`, `m(0) = m_T`.
pub fn solve_state(m_t: &ScalarField, v: &VectorField, nt: usize) -> Result<TimeSeriesField, TransportError> {
    let slices = march(m_t.clone(), nt, Direction::Forward, true, "state", |m, _| {
        advection(m, v)
    })?;
    TimeSeriesField::new(slices)
}

/// Backward transport `−∂ₜλ − ∇·(λv) = 0`, `λ(1) = m_R − m₁`.
pub fn solve_adjoint(
    m1: &ScalarField,
    m_r: &ScalarField,
    v: &VectorField,
    nt: usize,
) -> Result<TimeSeriesField, TransportError> {
    let terminal = m_r - m1;
    let slices = march(terminal, nt, Direction::Backward, true, "adjoint", |l, _| {
        conservative_flux(l, v)
    })?;
    TimeSeriesField::new(slices)
}

/// `∇m` at every time node, shared by the body-force and incremental solves.
pub fn gradient_series(m: &TimeSeriesField) -> Vec<VectorField> {
    m.slices().iter().map(gradient).collect()
}

/// Incremental state `∂ₜm̃ + ∇m̃·v + ∇m·ṽ = 0`, `m̃(0) = 0`, on the time grid of `m`.
pub fn solve_inc_state(
    m: &TimeSeriesField,
    v: &VectorField,
    v_inc: &VectorField,
) -> Result<TimeSeriesField, TransportError> {
    solve_inc_state_from(&gradient_series(m), v, v_inc)
}

/// [`solve_inc_state`] with precomputed `∇m` slices.
pub fn solve_inc_state_from(
    grad_m: &[VectorField],
    v: &VectorField,
    v_inc: &VectorField,
) -> Result<TimeSeriesField, TransportError> {
    if grad_m.len() < 2 {
        return Err(TransportError::TooFewSlices);
    }
    let nt = grad_m.len() - 1;
    // ∇m_j·ṽ at every node; half steps average neighbours
    let sources: Vec<ScalarField> = grad_m.iter().map(|gm| gm.pointwise_dot(v_inc)).collect();
    let source_at = |at: At| match at {
        At::Node(j) => sources[j].clone(),
        At::Mid(j) => {
            let mut s = &sources[j] + &sources[j + 1];
            s *= 0.5;
            s
        }
    };
    let zero = ScalarField::zeros(v.grid());
    let slices = march(zero, nt, Direction::Forward, true, "incremental state", |mt, at| {
        let mut r = advection(mt, v);
        r -= &source_at(at);
        r
    })?;
    TimeSeriesField::new(slices)
}

/// Incremental adjoint `−∂ₜλ̃ − ∇·(λ̃v) − ∇·(λṽ) = 0`, `λ̃(1) = −m̃₁`.
///
/// With `gauss_newton` the `∇·(λṽ)` source is dropped.
pub fn solve_inc_adjoint(
    lambda: &TimeSeriesField,
    v: &VectorField,
    v_inc: &VectorField,
    m_inc_final: &ScalarField,
    gauss_newton: bool,
) -> Result<TimeSeriesField, TransportError> {
    let nt = lambda.nt();
    let terminal = -m_inc_final;
    let slices = march(terminal, nt, Direction::Backward, true, "incremental adjoint", |lt, at| {
        let mut r = conservative_flux(lt, v);
        if !gauss_newton {
            r += &conservative_flux(&lambda.at(at), v_inc);
        }
        r
    })?;
    TimeSeriesField::new(slices)
}

fn trapezoid_weights(nt: usize) -> impl Iterator<Item = f64> {
    let ht = 1.0 / nt as f64;
    (0..=nt).map(move |j| if j == 0 || j == nt { 0.5 * ht } else { ht })
}

fn check_lengths(a: &TimeSeriesField, b: &TimeSeriesField) -> Result<(), TransportError> {
    if a.nt() != b.nt() {
        return Err(TransportError::SliceCountMismatch(a.nt() + 1, b.nt() + 1));
    }
    Ok(())
}

/// `b = ∫₀¹ λ∇m dt` by the trapezoidal rule.
pub fn body_force(m: &TimeSeriesField, lambda: &TimeSeriesField) -> Result<VectorField, TransportError> {
    check_lengths(m, lambda)?;
    let mut b = VectorField::zeros(m.grid());
    for ((mj, lj), w) in m.slices().iter().zip(lambda.slices()).zip(trapezoid_weights(m.nt())) {
        if lj.max_abs() == 0.0 {
            continue;
        }
        b.axpy(w, &gradient(mj).scaled_by(lj));
    }
    Ok(b)
}

/// [`body_force`] with precomputed `∇m` slices.
pub fn body_force_from(grad_m: &[VectorField], lambda: &TimeSeriesField) -> Result<VectorField, TransportError> {
    if grad_m.len() != lambda.nt() + 1 {
        return Err(TransportError::SliceCountMismatch(grad_m.len(), lambda.nt() + 1));
    }
    let mut b = VectorField::zeros(lambda.grid());
    for ((gm, lj), w) in grad_m.iter().zip(lambda.slices()).zip(trapezoid_weights(lambda.nt())) {
        b.axpy(w, &gm.scaled_by(lj));
    }
    Ok(b)
}

/// Gauss–Newton incremental body force from `m̃₁`.
///
/// Marches the incremental adjoint `λ̃(1) = −m̃₁` backwards and accumulates
/// the exact transpose of the source terms of [`solve_inc_state_from`], so
/// that `⟨b̃[ṽ₁], ṽ₂⟩ = ⟨m̃₁[ṽ₁], m̃₁[ṽ₂]⟩` holds to rounding. The result
/// agrees with the trapezoidal `∫λ̃∇m dt` up to `O(h_t²)`.
pub fn gn_body_force(
    grad_m: &[VectorField],
    v: &VectorField,
    m_inc_final: &ScalarField,
) -> Result<VectorField, TransportError> {
    if grad_m.len() < 2 {
        return Err(TransportError::TooFewSlices);
    }
    let nt = grad_m.len() - 1;
    let ht = 1.0 / nt as f64;
    let mut lam = -m_inc_final;
    let mut b = VectorField::zeros(v.grid());
    for j in (0..nt).rev() {
        let k1 = conservative_flux(&lam, v);
        b.axpy(0.5 * ht, &grad_m[j + 1].scaled_by(&lam));
        let mut w = lam.clone();
        w.axpy(ht, &k1);
        b.axpy(0.5 * ht, &grad_m[j].scaled_by(&w));
        let mut half = lam.clone();
        half.axpy(0.5 * ht, &k1);
        lam.axpy(ht, &conservative_flux(&half, v));
        if !lam.is_finite() {
            return Err(TransportError::Instability {
                equation: "incremental adjoint",
                step: nt - j,
            });
        }
    }
    Ok(b)
}

/// `b̃ = ∫₀¹ (λ̃∇m + λ∇m̃) dt`; the second term is dropped with `gauss_newton`.
pub fn inc_body_force(
    m: &TimeSeriesField,
    m_inc: &TimeSeriesField,
    lambda: &TimeSeriesField,
    lambda_inc: &TimeSeriesField,
    gauss_newton: bool,
) -> Result<VectorField, TransportError> {
    check_lengths(m, lambda_inc)?;
    let mut b = body_force(m, lambda_inc)?;
    if !gauss_newton {
        check_lengths(m_inc, lambda)?;
        b += &body_force(m_inc, lambda)?;
    }
    Ok(b)
}

/// Displacement `∂ₜu + (∇u)v = v`, `u(0) = 0`; returns `u₁`. The Eulerian map
/// is `y = x − u₁`.
pub fn solve_displacement(v: &VectorField, nt: usize) -> Result<VectorField, TransportError> {
    let zero = VectorField::zeros(v.grid());
    let mut out = march(zero, nt, Direction::Forward, false, "displacement", |u, _| {
        let mut r = VectorField::new(advection(u.comp(0), v), advection(u.comp(1), v));
        r += v;
        r
    })?;
    Ok(out.pop().expect("march returns the end state"))
}

/// Deformation gradient `∂ₜF + (v·∇)F = (∇v)F`, `F(0) = I`; returns `F₁`.
pub fn solve_defgrad(v: &VectorField, nt: usize) -> Result<TensorField2x2, TransportError> {
    let grad_v = crate::spectral::jacobian(v);
    let id = TensorField2x2::identity(v.grid());
    let mut out = march(id, nt, Direction::Forward, false, "deformation gradient", |f, _| {
        let mut r = grad_v.matmul(f);
        let adv = f.map(|e| advection(e, v));
        r.axpy(1.0, &adv);
        r
    })?;
    Ok(out.pop().expect("march returns the end state"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: usize) -> Grid2D {
        Grid2D::square(n).unwrap()
    }

    #[test]
    fn cfl_examples() {
        let grid = g(16);
        assert_eq!(cfl_timesteps(&VectorField::zeros(&grid), 4, 0.8), 4);
        let h = grid.min_h();
        let v = VectorField::constant(&grid, [2.0 * h, 0.0]);
        assert_eq!(cfl_timesteps(&v, 1, 1.0), 2);
        assert_eq!(cfl_timesteps(&v, 7, 1.0), 7);
        assert_eq!(default_nt_init(&Grid2D::new(16, 32).unwrap()), 64);
    }

    #[test]
    fn cfl_result_is_minimal() {
        let grid = g(32);
        let v = VectorField::from_fn(&grid, |x, y| [1.7 * x.sin(), 0.4 * y.cos()]);
        let nt = cfl_timesteps(&v, 1, 0.8);
        let bound = 0.8 * grid.min_h();
        assert!(v.norm_inf() / nt as f64 <= bound);
        assert!(v.norm_inf() / (nt - 1) as f64 > bound);
    }

    #[test]
    fn zero_velocity_keeps_state() {
        let grid = g(16);
        let m = ScalarField::from_fn(&grid, |x, y| (x - y).cos());
        let series = solve_state(&m, &VectorField::zeros(&grid), 5).unwrap();
        assert_eq!(series.nt(), 5);
        assert!(series.slices().iter().all(|s| *s == m));
    }

    #[test]
    fn adjoint_terminal_condition_and_trivial_cases() {
        let grid = g(16);
        let m1 = ScalarField::from_fn(&grid, |x, _| x.sin());
        let mr = ScalarField::from_fn(&grid, |_, y| y.cos());
        let v = VectorField::constant(&grid, [0.3, 0.1]);
        let l = solve_adjoint(&m1, &mr, &v, 8).unwrap();
        assert_eq!(*l.last(), &mr - &m1);
        let l0 = solve_adjoint(&m1, &m1, &v, 8).unwrap();
        assert!(l0.slices().iter().all(|s| s.max_abs() == 0.0));
        let lz = solve_adjoint(&m1, &mr, &VectorField::zeros(&grid), 8).unwrap();
        assert!(lz.slices().iter().all(|s| *s == &mr - &m1));
    }

    #[test]
    fn body_force_single_step_is_hand_trapezoid() {
        let grid = g(16);
        let m0 = ScalarField::from_fn(&grid, |x, y| x.sin() + y.cos());
        let m1 = ScalarField::from_fn(&grid, |x, _| (2.0 * x).cos());
        let l0 = ScalarField::from_fn(&grid, |_, y| y.sin());
        let l1 = ScalarField::constant(&grid, 0.5);
        let m = TimeSeriesField::new(vec![m0.clone(), m1.clone()]).unwrap();
        let l = TimeSeriesField::new(vec![l0.clone(), l1.clone()]).unwrap();
        let b = body_force(&m, &l).unwrap();
        let mut expect = gradient(&m0).scaled_by(&l0);
        expect += &gradient(&m1).scaled_by(&l1);
        expect *= 0.5;
        assert!((&b - &expect).norm_inf() < 1e-14);
    }

    #[test]
    fn body_force_vanishes_for_trivial_inputs() {
        let grid = g(16);
        let m = TimeSeriesField::constant(&ScalarField::from_fn(&grid, |x, _| x.sin()), 4);
        let l = TimeSeriesField::constant(&ScalarField::zeros(&grid), 4);
        assert_eq!(body_force(&m, &l).unwrap().norm_inf(), 0.0);
        let mc = TimeSeriesField::constant(&ScalarField::constant(&grid, 2.0), 4);
        let lc = TimeSeriesField::constant(&ScalarField::from_fn(&grid, |x, _| x.cos()), 4);
        assert!(body_force(&mc, &lc).unwrap().norm_inf() < 1e-13);
        let short = TimeSeriesField::constant(&ScalarField::zeros(&grid), 3);
        assert!(matches!(body_force(&m, &short), Err(TransportError::SliceCountMismatch(5, 4))));
    }

    #[test]
    fn incremental_solves_vanish_for_zero_direction() {
        let grid = g(16);
        let mt = ScalarField::from_fn(&grid, |x, y| (x + y).sin());
        let v = VectorField::constant(&grid, [0.2, -0.1]);
        let m = solve_state(&mt, &v, 6).unwrap();
        let inc = solve_inc_state(&m, &v, &VectorField::zeros(&grid)).unwrap();
        assert!(inc.slices().iter().all(|s| s.max_abs() == 0.0));
        let l = TimeSeriesField::constant(&ScalarField::zeros(&grid), 6);
        let li = solve_inc_adjoint(&l, &v, &v, &ScalarField::zeros(&grid), true).unwrap();
        assert!(li.slices().iter().all(|s| s.max_abs() == 0.0));
    }

    #[test]
    fn gauss_newton_inc_adjoint_without_velocity_is_constant() {
        let grid = g(16);
        let l = TimeSeriesField::constant(&ScalarField::from_fn(&grid, |x, _| x.sin()), 4);
        let mt1 = ScalarField::from_fn(&grid, |_, y| y.sin());
        let zero = VectorField::zeros(&grid);
        let dir = VectorField::constant(&grid, [1.0, 0.0]);
        let li = solve_inc_adjoint(&l, &zero, &dir, &mt1, true).unwrap();
        assert!(li.slices().iter().all(|s| *s == -&mt1));
    }

    #[test]
    fn inc_body_force_gauss_newton_drops_lambda_term() {
        let grid = g(16);
        let m = TimeSeriesField::constant(&ScalarField::from_fn(&grid, |x, _| x.sin()), 2);
        let mi = TimeSeriesField::constant(&ScalarField::from_fn(&grid, |_, y| y.sin()), 2);
        let l = TimeSeriesField::constant(&ScalarField::constant(&grid, 1.0), 2);
        let zero = TimeSeriesField::constant(&ScalarField::zeros(&grid), 2);
        assert_eq!(inc_body_force(&m, &mi, &l, &zero, true).unwrap().norm_inf(), 0.0);
        assert!(inc_body_force(&m, &mi, &l, &zero, false).unwrap().norm_inf() > 0.5);
    }

    #[test]
    fn displacement_and_defgrad_trivial_cases() {
        let grid = g(16);
        let u = solve_displacement(&VectorField::zeros(&grid), 4).unwrap();
        assert_eq!(u.norm_inf(), 0.0);
        let c = VectorField::constant(&grid, [0.3, -0.2]);
        let u = solve_displacement(&c, 4).unwrap();
        assert!((&u - &c).norm_inf() < 1e-14);
        let f = solve_defgrad(&c, 4).unwrap();
        assert!(f.frobenius_distance_to_identity().max_abs() < 1e-14);
        assert!(f.det().values().iter().all(|d| (d - 1.0).abs() < 1e-14));
    }

    #[test]
    fn instability_is_reported() {
        let grid = g(16);
        let m = ScalarField::from_fn(&grid, |x, y| (3.0 * x).sin() + (5.0 * y).cos());
        let huge = VectorField::constant(&grid, [1.0e300, 1.0e300]);
        let e = solve_state(&m, &huge, 1).unwrap_err();
        assert!(matches!(e, TransportError::Instability { equation: "state", .. }));
    }

    #[test]
    fn state_is_second_order_in_time() {
        let grid = g(32);
        let c = 1.3;
        let m = ScalarField::from_fn(&grid, |x, _| (2.0 * x).sin());
        let exact = ScalarField::from_fn(&grid, |x, _| (2.0 * (x - c)).sin());
        let v = VectorField::constant(&grid, [c, 0.0]);
        let err = |nt| (solve_state(&m, &v, nt).unwrap().last() - &exact).max_abs();
        let ratio = err(16) / err(32);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn adjoint_conserves_mass() {
        let grid = g(32);
        let v = VectorField::from_fn(&grid, |x, y| [0.5 * y.sin(), 0.3 * (x + y).cos()]);
        let m1 = ScalarField::from_fn(&grid, |x, y| (x.cos() + 1.0) * (y.cos() + 1.0));
        let mr = ScalarField::zeros(&grid);
        let l = solve_adjoint(&m1, &mr, &v, 32).unwrap();
        let total = l.last().mean();
        for s in l.slices() {
            assert!((s.mean() - total).abs() < 1e-12 * total.abs().max(1.0));
        }
    }

    #[test]
    fn state_and_adjoint_are_discrete_duals() {
        // the backward sweep is the exact transpose of the forward one
        let grid = g(32);
        let v = VectorField::from_fn(&grid, |x, y| [0.4 * y.sin(), -0.3 * x.cos()]);
        let mt = ScalarField::from_fn(&grid, |x, y| (x + 2.0 * y).sin());
        let target = ScalarField::from_fn(&grid, |x, y| x.cos() * y.sin());
        let m = solve_state(&mt, &v, 64).unwrap();
        let l = solve_adjoint(m.last(), &target, &v, 64).unwrap();
        let start = m.first().dot(l.first());
        let end = m.last().dot(l.last());
        assert!((start - end).abs() < 1e-12 * end.abs().max(1.0));
    }

    #[test]
    fn gn_body_force_is_the_transpose_of_the_incremental_state() {
        let grid = g(32);
        let v = VectorField::from_fn(&grid, |x, y| [0.4 * y.sin() + 0.1, -0.3 * (x + y).cos()]);
        let mt = ScalarField::from_fn(&grid, |x, y| (x + 2.0 * y).sin() + 0.5 * (3.0 * x).cos());
        let m = solve_state(&mt, &v, 24).unwrap();
        let gm = gradient_series(&m);
        let x = VectorField::from_fn(&grid, |x, y| [(2.0 * x).sin() + y.cos(), (x + y).cos()]);
        let y = VectorField::from_fn(&grid, |x, y| [(x - 2.0 * y).cos(), (3.0 * x).sin() * y.sin()]);
        let mx = solve_inc_state_from(&gm, &v, &x).unwrap();
        let my = solve_inc_state_from(&gm, &v, &y).unwrap();
        let bx = gn_body_force(&gm, &v, mx.last()).unwrap();
        let by = gn_body_force(&gm, &v, my.last()).unwrap();
        let reference = mx.last().dot(my.last());
        for value in [bx.dot(&y), x.dot(&by)] {
            assert!((value - reference).abs() < 1e-12 * reference.abs(), "{value} vs {reference}");
        }
        // and it approximates the trapezoidal body force of the incremental adjoint
        let l = solve_adjoint(m.last(), &mt, &v, 24).unwrap();
        let lt = solve_inc_adjoint(&l, &v, &x, mx.last(), true).unwrap();
        let trap = body_force_from(&gm, &lt).unwrap();
        assert!((&trap - &bx).norm_inf() < 1e-2 * trap.norm_inf());
    }
}
