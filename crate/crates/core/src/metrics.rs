//! Registration quality measures: relative gradient and residual, deformation
//! regularity (det F₁, ‖F₁ − I‖_F), label overlap and label transport.

use thiserror::Error;

use crate::field::{ScalarField, TensorField2x2, VectorField};
use crate::grid::Grid2D;
use crate::spectral::{gradient, resample, spectral_gaussian_smooth};
use crate::transport::{cfl_timesteps, default_nt_init, solve_defgrad, solve_displacement, solve_state, TransportError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("{0} has zero norm")]
    ZeroDenominator(&'static str),
    #[error("label map {0} is not binary")]
    NonBinary(&'static str),
    #[error("mask selects no grid nodes")]
    EmptyMask,
    #[error(transparent)]
    Transport(#[from] TransportError),
}

/// `‖g_k‖² / ‖g₀‖²`.
pub fn relative_gradient(g_k: &VectorField, g0: &VectorField) -> Result<f64, MetricsError> {
    let d = g0.dot(g0);
    if d == 0.0 {
        return Err(MetricsError::ZeroDenominator("initial gradient"));
    }
    Ok(g_k.dot(g_k) / d)
}

/// `‖m_R − m₁‖² / ‖m_R − m_T‖²`.
pub fn relative_residual(m_r: &ScalarField, m1: &ScalarField, m_t: &ScalarField) -> Result<f64, MetricsError> {
    let r0 = m_r - m_t;
    let d = r0.dot(&r0);
    if d == 0.0 {
        return Err(MetricsError::ZeroDenominator("initial residual"));
    }
    let r = m_r - m1;
    Ok(r.dot(&r) / d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

fn masked_stats(f: &ScalarField, mask: Option<&ScalarField>) -> Result<Stats, MetricsError> {
    let mut n = 0usize;
    let (mut min, mut max, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for (i, &x) in f.values().iter().enumerate() {
        if let Some(m) = mask {
            if m.values()[i] == 0.0 {
                continue;
            }
        }
        n += 1;
        min = min.min(x);
        max = max.max(x);
        sum += x;
    }
    if n == 0 {
        return Err(MetricsError::EmptyMask);
    }
    Ok(Stats {
        min,
        mean: sum / n as f64,
        max,
    })
}

#[derive(Debug, Clone)]
pub struct DeformationAnalysis {
    pub u1: VectorField,
    pub f1: TensorField2x2,
    pub det: ScalarField,
    pub det_stats: Stats,
    /// Statistics of `‖F₁ − I‖_F`; `min` is reported for completeness.
    pub dist_stats: Stats,
}

/// Displacement, deformation gradient and their statistics, optionally
/// restricted to the nonzero nodes of `mask`.
pub fn analyze_deformation(
    v: &VectorField,
    nt: usize,
    mask: Option<&ScalarField>,
) -> Result<DeformationAnalysis, MetricsError> {
    let u1 = solve_displacement(v, nt)?;
    let f1 = solve_defgrad(v, nt)?;
    let det = f1.det();
    let dist = f1.frobenius_distance_to_identity();
    Ok(DeformationAnalysis {
        det_stats: masked_stats(&det, mask)?,
        dist_stats: masked_stats(&dist, mask)?,
        u1,
        f1,
        det,
    })
}

/// Nodes where `m` exceeds `fraction · max(m)`.
pub fn intensity_mask(m: &ScalarField, fraction: f64) -> ScalarField {
    let t = fraction * m.max();
    m.map(|x| if x > t { 1.0 } else { 0.0 })
}

/// Overlap scores; `None` where the defining denominator is empty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapScores {
    pub jsc: Option<f64>,
    pub dsc: Option<f64>,
    pub fpe: Option<f64>,
    pub fne: Option<f64>,
}

fn check_binary(l: &ScalarField, name: &'static str) -> Result<(), MetricsError> {
    if l.values().iter().all(|&x| x == 0.0 || x == 1.0) {
        Ok(())
    } else {
        Err(MetricsError::NonBinary(name))
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Jaccard, Dice, false-positive (`#(L_T∖L_R)/#L_T`) and false-negative
/// (`#(L_R∖L_T)/#L_R`) scores of binary label maps.
pub fn overlap(l_r: &ScalarField, l_t: &ScalarField) -> Result<OverlapScores, MetricsError> {
    l_r.assert_same_grid(l_t);
    check_binary(l_r, "L_R")?;
    check_binary(l_t, "L_T")?;
    let (mut both, mut only_r, mut only_t) = (0usize, 0usize, 0usize);
    for (&r, &t) in l_r.values().iter().zip(l_t.values()) {
        match (r == 1.0, t == 1.0) {
            (true, true) => both += 1,
            (true, false) => only_r += 1,
            (false, true) => only_t += 1,
            _ => {}
        }
    }
    let (nr, nt) = (both + only_r, both + only_t);
    Ok(OverlapScores {
        jsc: ratio(both, both + only_r + only_t),
        dsc: ratio(2 * both, nr + nt),
        fpe: ratio(only_t, nt),
        fne: ratio(only_r, nr),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelTransport {
    pub upsample: usize,
    pub sigma_factor: f64,
    pub threshold: f64,
    pub cfl_safety: f64,
}

impl Default for LabelTransport {
    fn default() -> Self {
        Self {
            upsample: 4,
            sigma_factor: 3.0,
            threshold: 0.5,
            cfl_safety: 0.8,
        }
    }
}

/// Transports a binary label map with `v` on a refined grid: spectral
/// prolongation, Gaussian smoothing with `σ = sigma_factor·h_fine`, forward
/// transport, thresholding and injection back to the original grid.
pub fn transport_labels(
    l_t: &ScalarField,
    v: &VectorField,
    opts: &LabelTransport,
) -> Result<ScalarField, MetricsError> {
    let coarse = l_t.grid();
    let up = opts.upsample.max(1);
    let [n1, n2] = coarse.n();
    let fine = Grid2D::new(n1 * up, n2 * up).expect("multiples of a valid size are valid");
    let h = fine.h();
    let sigma = [opts.sigma_factor * h[0], opts.sigma_factor * h[1]];
    let lf = spectral_gaussian_smooth(&resample(l_t, &fine), sigma).expect("non-negative width");
    let vf = VectorField::new(resample(v.comp(0), &fine), resample(v.comp(1), &fine));
    let nt = cfl_timesteps(&vf, default_nt_init(coarse), opts.cfl_safety);
    let m1 = solve_state(&lf, &vf, nt)?;
    let m1 = m1.last();
    let data = (0..n1)
        .flat_map(|i| (0..n2).map(move |j| (i, j)))
        .map(|(i, j)| if m1.get(i * up, j * up) > opts.threshold { 1.0 } else { 0.0 })
        .collect();
    Ok(ScalarField::from_vec(coarse, data).expect("coarse-sized data"))
}

/// `|∂u_t/∂x_n|`, where `n = interface_normal` and `t` is the other axis:
/// the shear of the tangential displacement across an interface.
pub fn shear_magnitude(u1: &VectorField, interface_normal: usize) -> ScalarField {
    assert!(interface_normal < 2, "axis must be 0 or 1");
    let tangent = 1 - interface_normal;
    gradient(u1.comp(tangent)).comp(interface_normal).map(f64::abs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: usize) -> Grid2D {
        Grid2D::square(n).unwrap()
    }

    fn block(grid: &Grid2D, r0: usize, r1: usize, c0: usize, c1: usize) -> ScalarField {
        let n2 = grid.n()[1];
        let data = (0..grid.len())
            .map(|idx| {
                let (i, j) = (idx / n2, idx % n2);
                if (r0..r1).contains(&i) && (c0..c1).contains(&j) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        ScalarField::from_vec(grid, data).unwrap()
    }

    #[test]
    fn relative_measures() {
        let grid = g(16);
        let gk = VectorField::from_fn(&grid, |x, y| [x.sin(), y.cos()]);
        assert!((relative_gradient(&gk, &gk).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(
            relative_gradient(&gk, &VectorField::zeros(&grid)),
            Err(MetricsError::ZeroDenominator("initial gradient"))
        );
        let mr = ScalarField::from_fn(&grid, |x, _| x.cos());
        let mt = ScalarField::from_fn(&grid, |_, y| y.cos());
        assert_eq!(relative_residual(&mr, &mr, &mt).unwrap(), 0.0);
        assert_eq!(relative_residual(&mr, &mt, &mt).unwrap(), 1.0);
        assert!(relative_residual(&mr, &mr, &mr).is_err());
    }

    #[test]
    fn identity_deformation() {
        let grid = g(16);
        let a = analyze_deformation(&VectorField::zeros(&grid), 4, None).unwrap();
        assert!(a.det.values().iter().all(|&d| d == 1.0));
        assert_eq!(a.dist_stats.max, 0.0);
        assert_eq!((a.det_stats.min, a.det_stats.max), (1.0, 1.0));
    }

    #[test]
    fn masked_statistics_differ() {
        let grid = g(32);
        let v = VectorField::from_fn(&grid, |x, y| [0.3 * x.sin(), 0.2 * y.sin()]);
        let mask = block(&grid, 0, 8, 0, 8);
        let full = analyze_deformation(&v, 16, None).unwrap();
        let part = analyze_deformation(&v, 16, Some(&mask)).unwrap();
        assert_ne!(full.det_stats, part.det_stats);
        let empty = ScalarField::zeros(&grid);
        assert_eq!(analyze_deformation(&v, 16, Some(&empty)).unwrap_err(), MetricsError::EmptyMask);
    }

    #[test]
    fn overlap_examples() {
        let grid = g(16);
        let a = block(&grid, 2, 6, 2, 6);
        let s = overlap(&a, &a).unwrap();
        assert_eq!((s.jsc, s.dsc, s.fpe, s.fne), (Some(1.0), Some(1.0), Some(0.0), Some(0.0)));
        let b = block(&grid, 8, 12, 8, 12);
        let s = overlap(&a, &b).unwrap();
        assert_eq!((s.jsc, s.dsc, s.fpe, s.fne), (Some(0.0), Some(0.0), Some(1.0), Some(1.0)));
        let half = block(&grid, 2, 4, 2, 6);
        let s = overlap(&a, &half).unwrap();
        assert_eq!(s.jsc, Some(0.5));
        assert!((s.dsc.unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!((s.fpe, s.fne), (Some(0.0), Some(0.5)));
        let z = ScalarField::zeros(&grid);
        let s = overlap(&z, &z).unwrap();
        assert_eq!((s.jsc, s.dsc, s.fpe, s.fne), (None, None, None, None));
        let s = overlap(&a, &z).unwrap();
        assert_eq!((s.fpe, s.fne), (None, Some(1.0)));
        assert_eq!(overlap(&a.map(|x| 0.5 * x), &a), Err(MetricsError::NonBinary("L_R")));
    }

    #[test]
    fn label_transport_without_motion_is_identity() {
        let grid = g(16);
        let l = block(&grid, 3, 9, 4, 12);
        let out = transport_labels(&l, &VectorField::zeros(&grid), &LabelTransport::default()).unwrap();
        assert_eq!(out, l);
        let d = LabelTransport::default();
        assert_eq!((d.upsample, d.sigma_factor, d.threshold), (4, 3.0, 0.5));
    }

    #[test]
    fn label_transport_follows_translation() {
        let grid = g(16);
        let h = grid.h()[0];
        let l = block(&grid, 4, 10, 4, 10);
        let v = VectorField::constant(&grid, [2.0 * h, 0.0]);
        let out = transport_labels(&l, &v, &LabelTransport::default()).unwrap();
        assert_eq!(out, block(&grid, 6, 12, 4, 10));
    }

    #[test]
    fn shear_examples() {
        let grid = g(64);
        assert_eq!(shear_magnitude(&VectorField::zeros(&grid), 1).max_abs(), 0.0);
        let profile = |steep: f64| {
            VectorField::from_fn(&grid, move |_, y| [(steep * y.sin()).tanh(), 0.0])
        };
        let s = shear_magnitude(&profile(3.0), 1);
        // peak on the interface y = 0 (column n/2)
        let n = grid.n()[1];
        let col_max = |j: usize| (0..grid.n()[0]).map(|i| s.get(i, j)).fold(0.0, f64::max);
        assert!((0..n).all(|j| col_max(j) <= col_max(n / 2) + 1e-12));
        assert!(shear_magnitude(&profile(6.0), 1).max() > s.max());
    }
}
