//! Scalar, vector and 2×2 tensor fields sampled on a [`Grid2D`].
//!
//! Inner products and norms named `*_l2` are grid-scaled (`h₁h₂ Σ`), i.e. the
//! trapezoidal approximation of the continuous L² quantities. `norm_euclid`
//! is the plain ℓ² norm of the sample vector.

use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use crate::grid::{Grid2D, GridError};

#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: Grid2D,
    data: Vec<f64>,
}

impl PartialEq for ScalarField {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.data == other.data
    }
}

impl ScalarField {
    pub fn zeros(grid: &Grid2D) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Grid2D, c: f64) -> Self {
        Self {
            grid: grid.clone(),
            data: vec![c; grid.len()],
        }
    }

    /// Samples `f(x₁, x₂)` at every node.
    pub fn from_fn(grid: &Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let [n1, n2] = grid.n();
        let mut data = Vec::with_capacity(n1 * n2);
        for i in 0..n1 {
            let x1 = grid.coord(0, i);
            for j in 0..n2 {
                data.push(f(x1, grid.coord(1, j)));
            }
        }
        Self {
            grid: grid.clone(),
            data,
        }
    }

    pub fn from_vec(grid: &Grid2D, data: Vec<f64>) -> Result<Self, GridError> {
        if data.len() != grid.len() {
            return Err(GridError::LengthMismatch {
                expected: grid.len(),
                got: data.len(),
            });
        }
        Ok(Self {
            grid: grid.clone(),
            data,
        })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_values(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.grid.n()[1] + j]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Grid-scaled L² inner product.
    pub fn dot(&self, other: &Self) -> f64 {
        self.assert_same_grid(other);
        self.grid.cell_volume() * dot_slices(&self.data, &other.data)
    }

    pub fn norm_l2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm_euclid(&self) -> f64 {
        dot_slices(&self.data, &self.data).sqrt()
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: f64, x: &Self) {
        self.assert_same_grid(x);
        for (s, xv) in self.data.iter_mut().zip(x.data.iter()) {
            *s += a * xv;
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        self.assert_same_grid(other);
        Self {
            grid: self.grid.clone(),
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Pointwise product.
    pub fn mul_pointwise(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a * b)
    }

    pub(crate) fn assert_same_grid(&self, other: &Self) {
        assert!(self.grid == other.grid, "fields live on different grids");
    }
}

fn dot_slices(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: Self) -> ScalarField {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: Self) -> ScalarField {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: f64) -> ScalarField {
        self.map(|a| a * rhs)
    }
}

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        self.map(|a| -a)
    }
}

impl AddAssign<&ScalarField> for ScalarField {
    fn add_assign(&mut self, rhs: &ScalarField) {
        self.axpy(1.0, rhs);
    }
}

impl SubAssign<&ScalarField> for ScalarField {
    fn sub_assign(&mut self, rhs: &ScalarField) {
        self.axpy(-1.0, rhs);
    }
}

impl MulAssign<f64> for ScalarField {
    fn mul_assign(&mut self, rhs: f64) {
        self.data.iter_mut().for_each(|x| *x *= rhs);
    }
}

/// Two-component vector field; both components share one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    comps: [ScalarField; 2],
}

impl VectorField {
    pub fn zeros(grid: &Grid2D) -> Self {
        Self {
            comps: [ScalarField::zeros(grid), ScalarField::zeros(grid)],
        }
    }

    pub fn constant(grid: &Grid2D, c: [f64; 2]) -> Self {
        Self {
            comps: [
                ScalarField::constant(grid, c[0]),
                ScalarField::constant(grid, c[1]),
            ],
        }
    }

    pub fn from_fn(grid: &Grid2D, f: impl Fn(f64, f64) -> [f64; 2]) -> Self {
        Self {
            comps: [
                ScalarField::from_fn(grid, |x, y| f(x, y)[0]),
                ScalarField::from_fn(grid, |x, y| f(x, y)[1]),
            ],
        }
    }

    /// Panics if the components live on different grids.
    pub fn new(c0: ScalarField, c1: ScalarField) -> Self {
        c0.assert_same_grid(&c1);
        Self { comps: [c0, c1] }
    }

    pub fn grid(&self) -> &Grid2D {
        self.comps[0].grid()
    }

    pub fn comp(&self, i: usize) -> &ScalarField {
        &self.comps[i]
    }

    pub fn comp_mut(&mut self, i: usize) -> &mut ScalarField {
        &mut self.comps[i]
    }

    pub fn comps(&self) -> &[ScalarField; 2] {
        &self.comps
    }

    pub fn into_comps(self) -> [ScalarField; 2] {
        self.comps
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.comps[0].dot(&other.comps[0]) + self.comps[1].dot(&other.comps[1])
    }

    pub fn norm_l2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm_euclid(&self) -> f64 {
        let a = self.comps[0].norm_euclid();
        let b = self.comps[1].norm_euclid();
        (a * a + b * b).sqrt()
    }

    /// Max over components and nodes of |vᵢ(x)|.
    pub fn norm_inf(&self) -> f64 {
        self.comps[0].max_abs().max(self.comps[1].max_abs())
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(ScalarField::is_finite)
    }

    pub fn axpy(&mut self, a: f64, x: &Self) {
        self.comps[0].axpy(a, &x.comps[0]);
        self.comps[1].axpy(a, &x.comps[1]);
    }

    pub fn map(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        Self::new(f(&self.comps[0]), f(&self.comps[1]))
    }

    /// Pointwise `v·w`.
    pub fn pointwise_dot(&self, other: &Self) -> ScalarField {
        let mut out = self.comps[0].mul_pointwise(&other.comps[0]);
        let second = self.comps[1].mul_pointwise(&other.comps[1]);
        out += &second;
        out
    }

    /// Pointwise `s·v`.
    pub fn scaled_by(&self, s: &ScalarField) -> Self {
        self.map(|c| c.mul_pointwise(s))
    }
}

impl Add for &VectorField {
    type Output = VectorField;
    fn add(self, rhs: Self) -> VectorField {
        VectorField::new(&self.comps[0] + &rhs.comps[0], &self.comps[1] + &rhs.comps[1])
    }
}

impl Sub for &VectorField {
    type Output = VectorField;
    fn sub(self, rhs: Self) -> VectorField {
        VectorField::new(&self.comps[0] - &rhs.comps[0], &self.comps[1] - &rhs.comps[1])
    }
}

impl Mul<f64> for &VectorField {
    type Output = VectorField;
    fn mul(self, rhs: f64) -> VectorField {
        self.map(|c| c * rhs)
    }
}

impl Neg for &VectorField {
    type Output = VectorField;
    fn neg(self) -> VectorField {
        self.map(|c| -c)
    }
}

impl AddAssign<&VectorField> for VectorField {
    fn add_assign(&mut self, rhs: &VectorField) {
        self.axpy(1.0, rhs);
    }
}

impl SubAssign<&VectorField> for VectorField {
    fn sub_assign(&mut self, rhs: &VectorField) {
        self.axpy(-1.0, rhs);
    }
}

impl MulAssign<f64> for VectorField {
    fn mul_assign(&mut self, rhs: f64) {
        self.comps[0] *= rhs;
        self.comps[1] *= rhs;
    }
}

/// Row-major 2×2 tensor field, `entry(i, j)` = Tᵢⱼ.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorField2x2 {
    entries: [[ScalarField; 2]; 2],
}

impl TensorField2x2 {
    pub fn new(entries: [[ScalarField; 2]; 2]) -> Self {
        let g = entries[0][0].grid();
        assert!(
            entries.iter().flatten().all(|e| e.grid() == g),
            "tensor entries live on different grids"
        );
        Self { entries }
    }

    pub fn zeros(grid: &Grid2D) -> Self {
        let z = ScalarField::zeros(grid);
        Self::new([[z.clone(), z.clone()], [z.clone(), z]])
    }

    pub fn identity(grid: &Grid2D) -> Self {
        let z = ScalarField::zeros(grid);
        let o = ScalarField::constant(grid, 1.0);
        Self::new([[o.clone(), z.clone()], [z, o]])
    }

    pub fn grid(&self) -> &Grid2D {
        self.entries[0][0].grid()
    }

    pub fn entry(&self, i: usize, j: usize) -> &ScalarField {
        &self.entries[i][j]
    }

    pub fn entry_mut(&mut self, i: usize, j: usize) -> &mut ScalarField {
        &mut self.entries[i][j]
    }

    /// Row `i` as a vector field.
    pub fn row(&self, i: usize) -> VectorField {
        VectorField::new(self.entries[i][0].clone(), self.entries[i][1].clone())
    }

    pub fn transpose(&self) -> Self {
        let e = &self.entries;
        Self::new([
            [e[0][0].clone(), e[1][0].clone()],
            [e[0][1].clone(), e[1][1].clone()],
        ])
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().flatten().all(ScalarField::is_finite)
    }

    pub fn map(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        let e = &self.entries;
        Self::new([[f(&e[0][0]), f(&e[0][1])], [f(&e[1][0]), f(&e[1][1])]])
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(&ScalarField, &ScalarField) -> ScalarField) -> Self {
        let (a, b) = (&self.entries, &other.entries);
        Self::new([
            [f(&a[0][0], &b[0][0]), f(&a[0][1], &b[0][1])],
            [f(&a[1][0], &b[1][0]), f(&a[1][1], &b[1][1])],
        ])
    }

    /// Pointwise `s·T`.
    pub fn scaled_by(&self, s: &ScalarField) -> Self {
        self.map(|e| e.mul_pointwise(s))
    }

    /// Pointwise `A:B = Σᵢⱼ AᵢⱼBᵢⱼ`.
    pub fn double_dot(&self, other: &Self) -> ScalarField {
        let mut out = ScalarField::zeros(self.grid());
        for i in 0..2 {
            for j in 0..2 {
                let p = self.entries[i][j].mul_pointwise(&other.entries[i][j]);
                out += &p;
            }
        }
        out
    }

    pub fn det(&self) -> ScalarField {
        let e = &self.entries;
        let ad = e[0][0].mul_pointwise(&e[1][1]);
        let bc = e[0][1].mul_pointwise(&e[1][0]);
        &ad - &bc
    }

    /// Pointwise `‖T − I‖_F`.
    pub fn frobenius_distance_to_identity(&self) -> ScalarField {
        let e = &self.entries;
        let [n1, n2] = self.grid().n();
        let mut out = Vec::with_capacity(n1 * n2);
        for k in 0..n1 * n2 {
            let a = e[0][0].values()[k] - 1.0;
            let b = e[0][1].values()[k];
            let c = e[1][0].values()[k];
            let d = e[1][1].values()[k] - 1.0;
            out.push((a * a + b * b + c * c + d * d).sqrt());
        }
        ScalarField::from_vec(self.grid(), out).expect("length matches grid")
    }

    /// Pointwise matrix product `self · other`.
    pub fn matmul(&self, other: &Self) -> Self {
        let (a, b) = (&self.entries, &other.entries);
        let prod = |i: usize, j: usize| {
            let mut s = a[i][0].mul_pointwise(&b[0][j]);
            s += &a[i][1].mul_pointwise(&b[1][j]);
            s
        };
        Self::new([[prod(0, 0), prod(0, 1)], [prod(1, 0), prod(1, 1)]])
    }

    pub fn axpy(&mut self, a: f64, x: &Self) {
        for i in 0..2 {
            for j in 0..2 {
                self.entries[i][j].axpy(a, &x.entries[i][j]);
            }
        }
    }
}
