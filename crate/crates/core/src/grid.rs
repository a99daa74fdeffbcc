//! Periodic regular grid over (-π, π)² and its real-to-complex transforms.
//!
//! Samples live at the nodes `x_j = -π + j·h`. The forward transform is
//! unnormalized; the inverse carries the `1/(n₁n₂)` factor. Spectra use the
//! half-spectrum along axis 1 and are stored column-major in the spectral
//! domain (`coef[j * n₁ + i]`), which keeps the axis-0 transforms contiguous.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid size {0} must be even and at least 4")]
    InvalidSize(usize),
    #[error("expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

struct Plans {
    n: [usize; 2],
    h: [f64; 2],
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    // signed wavenumbers; Nyquist reported as +n/2
    k: [Vec<f64>; 2],
    // derivative wavenumbers; Nyquist zeroed so odd derivatives stay real
    kd: [Vec<f64>; 2],
}

/// A periodic `n₁ × n₂` grid on (-π, π)². Cheap to clone; FFT plans are shared.
#[derive(Clone)]
pub struct Grid2D {
    inner: Arc<Plans>,
}

impl PartialEq for Grid2D {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.inner.n == other.inner.n
    }
}

impl fmt::Debug for Grid2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid2D")
            .field("n", &self.inner.n)
            .field("h", &self.inner.h)
            .finish()
    }
}

fn check_size(n: usize) -> Result<(), GridError> {
    if n < 4 || n % 2 != 0 {
        return Err(GridError::InvalidSize(n));
    }
    Ok(())
}

impl Grid2D {
    pub fn new(n1: usize, n2: usize) -> Result<Self, GridError> {
        check_size(n1)?;
        check_size(n2)?;
        let mut real_planner = RealFftPlanner::<f64>::new();
        let mut planner = FftPlanner::<f64>::new();
        let wavenumbers = |n: usize, half: bool| -> (Vec<f64>, Vec<f64>) {
            let len = if half { n / 2 + 1 } else { n };
            let k: Vec<f64> = (0..len)
                .map(|i| if i <= n / 2 { i as f64 } else { i as f64 - n as f64 })
                .collect();
            let kd = k
                .iter()
                .enumerate()
                .map(|(i, &k)| if i == n / 2 { 0.0 } else { k })
                .collect();
            (k, kd)
        };
        let (k1, kd1) = wavenumbers(n1, false);
        let (k2, kd2) = wavenumbers(n2, true);
        let plans = Plans {
            n: [n1, n2],
            h: [2.0 * PI / n1 as f64, 2.0 * PI / n2 as f64],
            r2c: real_planner.plan_fft_forward(n2),
            c2r: real_planner.plan_fft_inverse(n2),
            fwd: planner.plan_fft_forward(n1),
            inv: planner.plan_fft_inverse(n1),
            k: [k1, k2],
            kd: [kd1, kd2],
        };
        Ok(Self {
            inner: Arc::new(plans),
        })
    }

    pub fn square(n: usize) -> Result<Self, GridError> {
        Self::new(n, n)
    }

    pub fn n(&self) -> [usize; 2] {
        self.inner.n
    }

    pub fn h(&self) -> [f64; 2] {
        self.inner.h
    }

    pub fn min_h(&self) -> f64 {
        self.inner.h[0].min(self.inner.h[1])
    }

    /// Number of real samples.
    pub fn len(&self) -> usize {
        self.inner.n[0] * self.inner.n[1]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight of one node, `h₁h₂`.
    pub fn cell_volume(&self) -> f64 {
        self.inner.h[0] * self.inner.h[1]
    }

    /// Node coordinate along `axis`.
    pub fn coord(&self, axis: usize, idx: usize) -> f64 {
        -PI + idx as f64 * self.inner.h[axis]
    }

    pub(crate) fn spectral_len(&self) -> usize {
        self.inner.n[0] * (self.inner.n[1] / 2 + 1)
    }

    /// Rows along axis 0 in the spectral layout (= n₁).
    pub(crate) fn spectral_stride(&self) -> usize {
        self.inner.n[0]
    }

    pub(crate) fn wavenumbers(&self, axis: usize) -> &[f64] {
        &self.inner.k[axis]
    }

    pub(crate) fn derivative_wavenumbers(&self, axis: usize) -> &[f64] {
        &self.inner.kd[axis]
    }

    /// Unnormalized forward transform of row-major samples.
    pub(crate) fn forward(&self, data: &[f64]) -> Vec<Complex64> {
        let p = &*self.inner;
        let [n1, n2] = p.n;
        debug_assert_eq!(data.len(), n1 * n2);
        let m2 = n2 / 2 + 1;
        let mut row = p.r2c.make_input_vec();
        let mut out = p.r2c.make_output_vec();
        let mut scratch = p.r2c.make_scratch_vec();
        let mut coef = vec![Complex64::new(0.0, 0.0); m2 * n1];
        for i in 0..n1 {
            row.copy_from_slice(&data[i * n2..(i + 1) * n2]);
            p.r2c
                .process_with_scratch(&mut row, &mut out, &mut scratch)
                .expect("r2c buffer sizes are fixed by the plan");
            for (j, c) in out.iter().enumerate() {
                coef[j * n1 + i] = *c;
            }
        }
        let mut cscratch = vec![Complex64::new(0.0, 0.0); p.fwd.get_inplace_scratch_len()];
        p.fwd.process_with_scratch(&mut coef, &mut cscratch);
        coef
    }

    /// Normalized inverse transform; `coef` is used as workspace.
    pub(crate) fn inverse(&self, coef: &mut [Complex64]) -> Vec<f64> {
        let p = &*self.inner;
        let [n1, n2] = p.n;
        let m2 = n2 / 2 + 1;
        debug_assert_eq!(coef.len(), m2 * n1);
        let mut cscratch = vec![Complex64::new(0.0, 0.0); p.inv.get_inplace_scratch_len()];
        p.inv.process_with_scratch(coef, &mut cscratch);
        let mut row = p.c2r.make_input_vec();
        let mut out = p.c2r.make_output_vec();
        let mut scratch = p.c2r.make_scratch_vec();
        let scale = 1.0 / (n1 * n2) as f64;
        let mut data = vec![0.0; n1 * n2];
        for i in 0..n1 {
            for (j, c) in row.iter_mut().enumerate() {
                *c = coef[j * n1 + i];
            }
            // the c2r transform requires real DC and Nyquist bins
            row[0].im = 0.0;
            row[m2 - 1].im = 0.0;
            p.c2r
                .process_with_scratch(&mut row, &mut out, &mut scratch)
                .expect("c2r buffer sizes are fixed by the plan");
            for (d, o) in data[i * n2..(i + 1) * n2].iter_mut().zip(out.iter()) {
                *d = o * scale;
            }
        }
        data
    }
}
