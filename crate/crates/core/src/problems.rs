//! Registration problems: intensity normalization, presmoothing and
//! deterministic synthetic generators.
//!
//! Every generator returns images on `[0, 1]` with labels obtained from the
//! unsmoothed shapes. Shapes are smoothed spectrally with `σ = 2h`.

use std::f64::consts::PI;

use log::warn;

use crate::field::ScalarField;
use crate::grid::Grid2D;
use crate::spectral::spectral_gaussian_smooth;

/// Reference `m_R` and template `m_T` on a shared grid, with optional labels.
#[derive(Clone, Debug)]
pub struct RegistrationProblem {
    pub m_r: ScalarField,
    pub m_t: ScalarField,
    pub l_r: Option<ScalarField>,
    pub l_t: Option<ScalarField>,
    pub tag: String,
}

impl RegistrationProblem {
    pub fn new(m_r: ScalarField, m_t: ScalarField, tag: impl Into<String>) -> Self {
        m_r.assert_same_grid(&m_t);
        Self {
            m_r,
            m_t,
            l_r: None,
            l_t: None,
            tag: tag.into(),
        }
    }

    pub fn with_labels(mut self, l_r: ScalarField, l_t: ScalarField) -> Self {
        self.m_r.assert_same_grid(&l_r);
        self.m_r.assert_same_grid(&l_t);
        self.l_r = Some(l_r);
        self.l_t = Some(l_t);
        self
    }

    pub fn grid(&self) -> &Grid2D {
        self.m_r.grid()
    }
}

/// Affine map of `[min, max]` onto `[0, 1]` followed by Gaussian smoothing
/// with physical widths `sigma`. Smoothing may leave values slightly outside
/// `[0, 1]`; they are not clipped. A constant image maps to zeros.
pub fn normalize_and_presmooth(raw: &ScalarField, sigma: [f64; 2]) -> ScalarField {
    let (lo, hi) = (raw.min(), raw.max());
    if !(hi > lo) {
        warn!("constant image cannot be normalized; using zeros");
        return ScalarField::zeros(raw.grid());
    }
    let scale = 1.0 / (hi - lo);
    let n = raw.map(|x| ((x - lo) * scale).clamp(0.0, 1.0));
    spectral_gaussian_smooth(&n, sigma).expect("caller passes non-negative widths")
}

fn edge_sigma(grid: &Grid2D) -> [f64; 2] {
    let h = grid.h();
    [2.0 * h[0], 2.0 * h[1]]
}

fn smooth_shape(indicator: &ScalarField) -> ScalarField {
    spectral_gaussian_smooth(indicator, edge_sigma(indicator.grid())).expect("positive widths")
}

/// Periodic distance from `c` to `x` wrapped into `[−π, π)`.
fn wrap(d: f64) -> f64 {
    (d + PI).rem_euclid(2.0 * PI) - PI
}

/// Smooth periodic bump, Gaussian-like with width `s` near its center.
fn periodic_bump(x: f64, y: f64, c: [f64; 2], s: f64) -> f64 {
    (((x - c[0]).cos() - 1.0 + (y - c[1]).cos() - 1.0) / (s * s)).exp()
}

fn two_bumps(x: f64, y: f64) -> f64 {
    periodic_bump(x, y, [-0.5, -0.4], 0.55) + 0.7 * periodic_bump(x, y, [0.6, 0.5], 0.45)
}

/// Two smooth bumps; the template is the reference displaced by `−offset`, so
/// the constant velocity `offset` maps one onto the other exactly.
pub fn gen_blob_problem(grid: &Grid2D, offset: [f64; 2]) -> RegistrationProblem {
    let half = [0.5 * offset[0], 0.5 * offset[1]];
    let m_r = ScalarField::from_fn(grid, |x, y| two_bumps(x - half[0], y - half[1]));
    let m_t = ScalarField::from_fn(grid, |x, y| two_bumps(x + half[0], y + half[1]));
    let top = m_r.max().max(m_t.max());
    let label = |f: &ScalarField| f.map(|v| if v > 0.5 * top { 1.0 } else { 0.0 });
    let (l_r, l_t) = (label(&m_r), label(&m_t));
    RegistrationProblem::new(m_r.map(|v| v / top), m_t.map(|v| v / top), format!("blobs offset={offset:?}"))
        .with_labels(l_r, l_t)
}

/// One smooth bump of width `width·scale` (reference) and `width` (template):
/// matching needs local expansion (`scale > 1`) or compression.
pub fn gen_scaling_blob(grid: &Grid2D, width: f64, scale: f64) -> RegistrationProblem {
    let m_r = ScalarField::from_fn(grid, |x, y| periodic_bump(x, y, [0.0, 0.0], width * scale));
    let m_t = ScalarField::from_fn(grid, |x, y| periodic_bump(x, y, [0.0, 0.0], width));
    let label = |f: &ScalarField| f.map(|v| if v > 0.5 { 1.0 } else { 0.0 });
    let (l_r, l_t) = (label(&m_r), label(&m_t));
    RegistrationProblem::new(m_r, m_t, format!("scaling blob width={width} scale={scale}")).with_labels(l_r, l_t)
}

fn indicator(grid: &Grid2D, inside: impl Fn(f64, f64) -> bool) -> ScalarField {
    ScalarField::from_fn(grid, |x, y| if inside(x, y) { 1.0 } else { 0.0 })
}

fn in_box(x: f64, y: f64, center: [f64; 2], half: [f64; 2]) -> bool {
    wrap(x - center[0]).abs() <= half[0] && wrap(y - center[1]).abs() <= half[1]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectanglesGeometry {
    /// Extent along axis 0 (the sliding direction).
    pub length: f64,
    /// Extent of each rectangle along axis 1.
    pub width: f64,
    /// Gap between the rectangles in grid cells along axis 1.
    pub gap_cells: f64,
    /// Tangential shift of the left rectangle in the template.
    pub shift: f64,
}

impl Default for RectanglesGeometry {
    fn default() -> Self {
        Self {
            length: 0.8 * PI,
            width: 0.5 * PI,
            gap_cells: 2.0,
            shift: 0.4 * PI,
        }
    }
}

/// Two rectangles side by side across the interface `x₂ = 0`; in the
/// template the one at `x₂ < 0` is moved by `shift` along `x₁`.
pub fn gen_sliding_rectangles(grid: &Grid2D, geom: &RectanglesGeometry) -> RegistrationProblem {
    let gap = geom.gap_cells * grid.h()[1];
    let half = [0.5 * geom.length, 0.5 * geom.width];
    let off = 0.5 * (gap + geom.width);
    let scene = |shift: f64| {
        indicator(grid, |x, y| {
            in_box(x, y, [shift, -off], half) || in_box(x, y, [0.0, off], half)
        })
    };
    let (l_r, l_t) = (scene(0.0), scene(geom.shift));
    RegistrationProblem::new(smooth_shape(&l_r), smooth_shape(&l_t), format!("sliding rectangles shift={}", geom.shift))
        .with_labels(l_r, l_t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VentGeometry {
    pub inner_radius: f64,
    pub outer_radius: f64,
    /// Half opening angle of the gap in the ring, centered on the +x₁ axis.
    pub opening: f64,
    /// Half extents of the inner bar.
    pub bar_half: [f64; 2],
    /// Tangential shift of the inner bar along `x₁` in the template.
    pub shift: f64,
}

impl Default for VentGeometry {
    fn default() -> Self {
        Self {
            inner_radius: 0.5 * PI,
            outer_radius: 0.75 * PI,
            opening: 0.25 * PI,
            bar_half: [0.15 * PI, 0.2 * PI],
            shift: 0.3 * PI,
        }
    }
}

/// An annular sector open towards `+x₁` with a bar inside it; in the template
/// the bar slides by `shift` along `x₁` through the opening.
pub fn gen_sliding_vent(grid: &Grid2D, geom: &VentGeometry) -> RegistrationProblem {
    let ring = |x: f64, y: f64| {
        let r = x.hypot(y);
        let angle = y.atan2(x).abs();
        r >= geom.inner_radius && r <= geom.outer_radius && angle >= geom.opening
    };
    let scene = |shift: f64| indicator(grid, |x, y| ring(x, y) || in_box(x, y, [shift, 0.0], geom.bar_half));
    let (l_r, l_t) = (scene(0.0), scene(geom.shift));
    RegistrationProblem::new(smooth_shape(&l_r), smooth_shape(&l_t), format!("sliding vent shift={}", geom.shift))
        .with_labels(l_r, l_t)
}
