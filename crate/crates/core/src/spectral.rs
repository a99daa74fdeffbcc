//! Fourier pseudospectral differential operators on periodic fields.
//!
//! Odd-order derivatives zero the Nyquist modes. Every operator built from
//! derivatives (including the Laplacian and its inverses) uses the same
//! Nyquist-zeroed wavenumbers `k̂`, so discrete identities such as
//! `∇·∇ = Δ` and `Δv = ∇(∇·v) − ∇×(∇×v)` hold to roundoff on every mode.
//! Gaussian smoothing and resampling use the true wavenumbers.

use rustfft::num_complex::Complex64;
use thiserror::Error;

use crate::field::{ScalarField, TensorField2x2, VectorField};
use crate::grid::Grid2D;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("Helmholtz weight must be positive, got {0}")]
    NonPositiveWeight(f64),
    #[error("smoothing width must be non-negative, got {0:?}")]
    NegativeWidth([f64; 2]),
}

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Half-spectrum of a real field.
pub(crate) struct Spectrum {
    grid: Grid2D,
    data: Vec<Complex64>,
}

impl Spectrum {
    pub(crate) fn of(f: &ScalarField) -> Self {
        Self {
            grid: f.grid().clone(),
            data: f.grid().forward(f.values()),
        }
    }

    pub(crate) fn zeros(grid: &Grid2D) -> Self {
        Self {
            grid: grid.clone(),
            data: vec![Complex64::new(0.0, 0.0); grid.spectral_len()],
        }
    }

    pub(crate) fn into_field(mut self) -> ScalarField {
        let data = self.grid.inverse(&mut self.data);
        ScalarField::from_vec(&self.grid, data).expect("inverse yields grid-sized data")
    }

    /// Visits every stored mode with `(k, k̂, coefficient)`.
    pub(crate) fn for_each_mode(&mut self, mut f: impl FnMut([f64; 2], [f64; 2], &mut Complex64)) {
        let n1 = self.grid.spectral_stride();
        let (k1, k2) = (self.grid.wavenumbers(0), self.grid.wavenumbers(1));
        let (kd1, kd2) = (
            self.grid.derivative_wavenumbers(0),
            self.grid.derivative_wavenumbers(1),
        );
        for (j, col) in self.data.chunks_mut(n1).enumerate() {
            for (i, c) in col.iter_mut().enumerate() {
                f([k1[i], k2[j]], [kd1[i], kd2[j]], c);
            }
        }
    }

    /// Multiplies by a real symbol of the derivative wavenumbers.
    pub(crate) fn scale_by(&mut self, symbol: impl Fn([f64; 2]) -> f64) {
        self.for_each_mode(|_, kd, c| *c *= symbol(kd));
    }

    /// Returns `∂ᵢ` of this spectrum.
    pub(crate) fn derivative(&self, axis: usize) -> Self {
        let mut out = Self {
            grid: self.grid.clone(),
            data: self.data.clone(),
        };
        out.for_each_mode(|_, kd, c| *c *= I * kd[axis]);
        out
    }

    /// `self += a·∂ᵢ(other)` on the coefficients.
    pub(crate) fn add_derivative_of(&mut self, other: &Spectrum, axis: usize, a: f64) {
        let n1 = self.grid.spectral_stride();
        let kd = self.grid.derivative_wavenumbers(axis).to_vec();
        for (idx, (s, o)) in self.data.iter_mut().zip(other.data.iter()).enumerate() {
            let k = if axis == 0 { kd[idx % n1] } else { kd[idx / n1] };
            *s += I * (a * k) * o;
        }
    }
}

/// Real symbol `σ(k̂)` applied to `f`.
pub(crate) fn apply_symbol(f: &ScalarField, symbol: impl Fn([f64; 2]) -> f64) -> ScalarField {
    let mut s = Spectrum::of(f);
    s.scale_by(symbol);
    s.into_field()
}

/// Real symbol `σ(k)` of the full wavenumbers applied to `f`. Even-order
/// operators keep their Nyquist modes.
fn apply_even_symbol(f: &ScalarField, symbol: impl Fn([f64; 2]) -> f64) -> ScalarField {
    let mut s = Spectrum::of(f);
    s.for_each_mode(|k, _, c| *c *= symbol(k));
    s.into_field()
}

/// Real symbol applied to each component of `v`.
pub(crate) fn apply_symbol_vector(v: &VectorField, symbol: impl Fn([f64; 2]) -> f64) -> VectorField {
    v.map(|c| apply_symbol(c, &symbol))
}

/// `∇ σ(k̂) Δ⁻¹ ∇·v`: the curl-free part of `v` weighted per mode by `σ`.
/// Modes with `k̂ = 0` are dropped.
pub(crate) fn weighted_gradient_part(v: &VectorField, weight: impl Fn([f64; 2]) -> f64) -> VectorField {
    let mut s0 = Spectrum::of(v.comp(0));
    let s1 = Spectrum::of(v.comp(1));
    let mut out1 = Spectrum::zeros(v.grid());
    let n1 = v.grid().spectral_stride();
    let (kd1, kd2) = (
        v.grid().derivative_wavenumbers(0).to_vec(),
        v.grid().derivative_wavenumbers(1).to_vec(),
    );
    for (idx, (a, b)) in s0.data.iter_mut().zip(s1.data.iter()).enumerate() {
        let k = [kd1[idx % n1], kd2[idx / n1]];
        let k2 = k[0] * k[0] + k[1] * k[1];
        if k2 == 0.0 {
            *a = Complex64::new(0.0, 0.0);
            continue;
        }
        let proj = (*a * k[0] + *b * k[1]) * (weight(k) / k2);
        *a = proj * k[0];
        out1.data[idx] = proj * k[1];
    }
    VectorField::new(s0.into_field(), out1.into_field())
}

pub fn gradient(f: &ScalarField) -> VectorField {
    let s = Spectrum::of(f);
    VectorField::new(s.derivative(0).into_field(), s.derivative(1).into_field())
}

pub fn divergence(v: &VectorField) -> ScalarField {
    let mut acc = Spectrum::zeros(v.grid());
    for axis in 0..2 {
        acc.add_derivative_of(&Spectrum::of(v.comp(axis)), axis, 1.0);
    }
    acc.into_field()
}

/// Row-wise divergence, `outᵢ = Σⱼ ∂ⱼTᵢⱼ`.
pub fn divergence_tensor(t: &TensorField2x2) -> VectorField {
    VectorField::new(divergence(&t.row(0)), divergence(&t.row(1)))
}

/// Velocity Jacobian `(∇v)ᵢⱼ = ∂vᵢ/∂xⱼ`.
pub fn jacobian(v: &VectorField) -> TensorField2x2 {
    let g0 = gradient(v.comp(0)).into_comps();
    let g1 = gradient(v.comp(1)).into_comps();
    let [a, b] = g0;
    let [c, d] = g1;
    TensorField2x2::new([[a, b], [c, d]])
}

pub fn laplacian(f: &ScalarField) -> ScalarField {
    apply_even_symbol(f, |k| -(k[0] * k[0] + k[1] * k[1]))
}

pub fn laplacian_vector(v: &VectorField) -> VectorField {
    v.map(laplacian)
}

/// Scalar curl `∂₁v₂ − ∂₂v₁`.
pub fn curl(v: &VectorField) -> ScalarField {
    let mut acc = Spectrum::zeros(v.grid());
    acc.add_derivative_of(&Spectrum::of(v.comp(1)), 0, 1.0);
    acc.add_derivative_of(&Spectrum::of(v.comp(0)), 1, -1.0);
    acc.into_field()
}

/// Vector curl of a scalar (out-of-plane) field, `(∂₂ω, −∂₁ω)`.
pub fn curl_of_scalar(omega: &ScalarField) -> VectorField {
    let s = Spectrum::of(omega);
    let mut d0 = s.derivative(0);
    d0.scale_by(|_| -1.0);
    VectorField::new(s.derivative(1).into_field(), d0.into_field())
}

/// Inverse Laplacian with the mean projected out.
pub fn inverse_laplacian(f: &ScalarField) -> ScalarField {
    apply_even_symbol(f, |k| {
        let k2 = k[0] * k[0] + k[1] * k[1];
        if k2 == 0.0 {
            0.0
        } else {
            -1.0 / k2
        }
    })
}

/// `β_w(−Δ + id) f`.
pub fn helmholtz(f: &ScalarField, beta_w: f64) -> Result<ScalarField, SpectralError> {
    if beta_w <= 0.0 || beta_w.is_nan() {
        return Err(SpectralError::NonPositiveWeight(beta_w));
    }
    Ok(apply_even_symbol(f, |k| beta_w * (k[0] * k[0] + k[1] * k[1] + 1.0)))
}

/// `(β_w(−Δ + id))⁻¹ f`.
pub fn inverse_helmholtz(f: &ScalarField, beta_w: f64) -> Result<ScalarField, SpectralError> {
    if beta_w <= 0.0 || beta_w.is_nan() {
        return Err(SpectralError::NonPositiveWeight(beta_w));
    }
    Ok(apply_even_symbol(f, |k| 1.0 / (beta_w * (k[0] * k[0] + k[1] * k[1] + 1.0))))
}

/// Multiplies the spectrum by `exp(−(k₁²σ₁² + k₂²σ₂²)/2)`.
pub fn spectral_gaussian_smooth(f: &ScalarField, sigma: [f64; 2]) -> Result<ScalarField, SpectralError> {
    if sigma.iter().any(|s| *s < 0.0 || s.is_nan()) {
        return Err(SpectralError::NegativeWidth(sigma));
    }
    if sigma == [0.0, 0.0] {
        return Ok(f.clone());
    }
    let mut s = Spectrum::of(f);
    s.for_each_mode(|k, _, c| {
        let e = (k[0] * sigma[0]).powi(2) + (k[1] * sigma[1]).powi(2);
        *c *= (-0.5 * e).exp();
    });
    Ok(s.into_field())
}

/// Trigonometric interpolation onto `target` (zero padding or truncation).
///
/// Nyquist coefficients are split evenly between `±n/2` when refining, so the
/// interpolant reproduces the original samples at coincident nodes. When
/// coarsening, modes beyond the target Nyquist are dropped.
pub fn resample(f: &ScalarField, target: &Grid2D) -> ScalarField {
    let src = f.grid();
    if src == target {
        return f.clone();
    }
    let [s1, s2] = src.n();
    let [t1, t2] = target.n();
    let coef = Spectrum::of(f);
    let mut out = Spectrum::zeros(target);
    let scale = (t1 * t2) as f64 / (s1 * s2) as f64;
    let rows: Vec<Vec<(usize, f64)>> = (0..s1).map(|i| full_axis_targets(i, s1, t1)).collect();
    for j in 0..=s2 / 2 {
        let Some((tj, wj)) = half_axis_target(j, s2, t2) else {
            continue;
        };
        for (i, targets) in rows.iter().enumerate() {
            let c = coef.data[j * s1 + i];
            for &(ti, wi) in targets {
                out.data[tj * t1 + ti] += c * (wi * wj * scale);
            }
        }
    }
    out.into_field()
}

// Full (signed) axis: source bin i of an s-point axis mapped onto a t-point axis.
fn full_axis_targets(i: usize, s: usize, t: usize) -> Vec<(usize, f64)> {
    let k = if i <= s / 2 { i as isize } else { i as isize - s as isize };
    let (si, ti) = (s as isize, t as isize);
    if t > s {
        if i == s / 2 {
            let kk = si / 2;
            return vec![(kk as usize, 0.5), ((ti - kk) as usize, 0.5)];
        }
        vec![(k.rem_euclid(ti) as usize, 1.0)]
    } else if k.abs() < ti / 2 {
        vec![(k.rem_euclid(ti) as usize, 1.0)]
    } else if k.abs() == ti / 2 {
        // ±t/2 alias onto the target Nyquist bin
        vec![((ti / 2) as usize, 1.0)]
    } else {
        vec![]
    }
}

// Half axis (non-negative bins only, Hermitian partner implicit).
fn half_axis_target(j: usize, s: usize, t: usize) -> Option<(usize, f64)> {
    if t > s {
        Some((j, if j == s / 2 { 0.5 } else { 1.0 }))
    } else if j < t / 2 {
        Some((j, 1.0))
    } else if j == t / 2 {
        // the inverse keeps the real part, which folds in the conjugate partner
        Some((j, 2.0))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn g16() -> Grid2D {
        Grid2D::square(16).unwrap()
    }

    fn max_diff(a: &ScalarField, b: &ScalarField) -> f64 {
        (a - b).max_abs()
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let f = ScalarField::constant(&g16(), 3.5);
        assert!(gradient(&f).norm_inf() < 1e-14);
    }

    #[test]
    fn gradient_of_sine() {
        let g = g16();
        let f = ScalarField::from_fn(&g, |x, _| x.sin());
        let gr = gradient(&f);
        let expect = ScalarField::from_fn(&g, |x, _| x.cos());
        assert!(max_diff(gr.comp(0), &expect) <= 1e-12);
        assert!(gr.comp(1).max_abs() <= 1e-12);
    }

    #[test]
    fn gradient_of_mixed_mode() {
        let g = g16();
        let f = ScalarField::from_fn(&g, |x, y| (3.0 * x).sin() * (2.0 * y).cos());
        let gr = gradient(&f);
        let e0 = ScalarField::from_fn(&g, |x, y| 3.0 * (3.0 * x).cos() * (2.0 * y).cos());
        let e1 = ScalarField::from_fn(&g, |x, y| -2.0 * (3.0 * x).sin() * (2.0 * y).sin());
        assert!(max_diff(gr.comp(0), &e0) <= 1e-12);
        assert!(max_diff(gr.comp(1), &e1) <= 1e-12);
    }

    #[test]
    fn divergence_of_constants_and_curl_fields() {
        let g = g16();
        assert!(divergence(&VectorField::constant(&g, [1.0, -2.0])).max_abs() < 1e-14);
        // v = (−∂ψ/∂x₂, ∂ψ/∂x₁), ψ = sin x₁ sin x₂
        let v = VectorField::from_fn(&g, |x, y| [-x.sin() * y.cos(), x.cos() * y.sin()]);
        assert!(divergence(&v).max_abs() <= 1e-12);
    }

    #[test]
    fn divergence_has_zero_mean() {
        let g = g16();
        let v = VectorField::from_fn(&g, |x, y| [(x + 2.0 * y).sin().exp(), (x * y).cos()]);
        assert!(divergence(&v).mean().abs() < 1e-12);
    }

    #[test]
    fn tensor_divergence_of_identity_and_constant_jacobian() {
        let g = g16();
        assert!(divergence_tensor(&TensorField2x2::identity(&g)).norm_inf() < 1e-14);
        let v = VectorField::constant(&g, [0.3, 0.7]);
        assert!(divergence_tensor(&jacobian(&v)).norm_inf() < 1e-14);
    }

    #[test]
    fn laplacian_eigenfunction() {
        let g = g16();
        let f = ScalarField::from_fn(&g, |x, _| x.sin());
        assert!(max_diff(&laplacian(&f), &(&f * -1.0)) <= 1e-12);
        assert!(laplacian(&ScalarField::constant(&g, 2.0)).max_abs() < 1e-14);
    }

    #[test]
    fn inverse_laplacian_cases() {
        let g = g16();
        let f = ScalarField::from_fn(&g, |x, _| x.sin());
        assert!(max_diff(&inverse_laplacian(&f), &(&f * -1.0)) <= 1e-12);
        assert!(inverse_laplacian(&ScalarField::constant(&g, 4.0)).max_abs() < 1e-14);
    }

    #[test]
    fn helmholtz_cases() {
        let g = g16();
        let c = ScalarField::constant(&g, 1.5);
        assert!(max_diff(&inverse_helmholtz(&c, 1.0).unwrap(), &c) < 1e-14);
        let f = ScalarField::from_fn(&g, |x, _| x.sin());
        let half = &f * 0.5;
        assert!(max_diff(&inverse_helmholtz(&f, 1.0).unwrap(), &half) <= 1e-12);
        assert_eq!(
            inverse_helmholtz(&f, 0.0).unwrap_err(),
            SpectralError::NonPositiveWeight(0.0)
        );
        assert!(helmholtz(&f, -1.0).is_err());
    }

    #[test]
    fn gaussian_smoothing() {
        let g = g16();
        let f = ScalarField::from_fn(&g, |x, y| x.sin() + (2.0 * y).cos() + 0.5);
        assert_eq!(spectral_gaussian_smooth(&f, [0.0, 0.0]).unwrap(), f);
        let s = ScalarField::from_fn(&g, |x, _| x.sin());
        let out = spectral_gaussian_smooth(&s, [1.0, 0.0]).unwrap();
        assert!(max_diff(&out, &(&s * (-0.5f64).exp())) <= 1e-12);
        let sm = spectral_gaussian_smooth(&f, [0.7, 0.3]).unwrap();
        assert!((sm.mean() - f.mean()).abs() <= 1e-12);
        assert!(spectral_gaussian_smooth(&f, [-1.0, 0.0]).is_err());
    }

    #[test]
    fn resample_interpolates_and_restricts() {
        let coarse = Grid2D::square(8).unwrap();
        let fine = Grid2D::square(32).unwrap();
        let f = ScalarField::from_fn(&coarse, |x, y| (x + 0.3).sin() * (2.0 * y).cos() + 0.2);
        let up = resample(&f, &fine);
        let exact = ScalarField::from_fn(&fine, |x, y| (x + 0.3).sin() * (2.0 * y).cos() + 0.2);
        assert!(max_diff(&up, &exact) < 1e-12);
        let down = resample(&up, &coarse);
        assert!(max_diff(&down, &f) < 1e-12);
    }

    #[test]
    fn resample_reproduces_samples_with_nyquist_content() {
        let coarse = Grid2D::square(8).unwrap();
        let fine = Grid2D::square(24).unwrap();
        let data: Vec<f64> = (0..64).map(|i| ((i * 7919) % 13) as f64 / 13.0).collect();
        let f = ScalarField::from_vec(&coarse, data).unwrap();
        let up = resample(&f, &fine);
        for i in 0..8 {
            for j in 0..8 {
                assert!((up.get(3 * i, 3 * j) - f.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn coordinates_span_periodic_domain() {
        let g = g16();
        assert!((g.coord(0, 0) + PI).abs() < 1e-15);
    }
}
