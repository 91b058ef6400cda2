use std::ops::{Index, IndexMut};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, invalid, Result};
use crate::scalar::Real;

/// Dense row-major 2-D grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<E> {
    rows: usize,
    cols: usize,
    data: Vec<E>,
}

/// Complex field on a 2-D grid: an object, its padded embedding, or a transform.
pub type ComplexField<T> = Grid<Complex<T>>;

impl<E> Grid<E> {
    pub fn new(rows: usize, cols: usize, data: Vec<E>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid(format!("grid dims must be positive, got {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(invalid(format!(
                "grid {rows}x{cols} needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> E) -> Self {
        assert!(rows > 0 && cols > 0, "grid dims must be positive");
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn filled(rows: usize, cols: usize, value: E) -> Self
    where
        E: Clone,
    {
        assert!(rows > 0 && cols > 0, "grid dims must be positive");
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[E] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [E] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<E> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[E] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn map<F, U>(&self, f: F) -> Grid<U>
    where
        F: FnMut(&E) -> U,
    {
        Grid {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Circular shift by `floor(rows/2)`, `floor(cols/2)`: moves the zero-frequency sample to the center.
    pub fn fftshift(&self) -> Self
    where
        E: Clone,
    {
        self.roll(self.rows / 2, self.cols / 2)
    }

    /// Inverse of [`Grid::fftshift`]: moves the center sample to the index origin.
    pub fn ifftshift(&self) -> Self
    where
        E: Clone,
    {
        self.roll(self.rows - self.rows / 2, self.cols - self.cols / 2)
    }

    /// Circular shift: output `(i, j)` takes input `(i - di, j - dj)` mod dims.
    pub fn roll(&self, di: usize, dj: usize) -> Self
    where
        E: Clone,
    {
        let (m1, m2) = self.dims();
        Grid::from_fn(m1, m2, |i, j| {
            self[((i + m1 - di % m1) % m1, (j + m2 - dj % m2) % m2)].clone()
        })
    }
}

impl<E> Index<(usize, usize)> for Grid<E> {
    type Output = E;

    fn index(&self, (i, j): (usize, usize)) -> &E {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<E> IndexMut<(usize, usize)> for Grid<E> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut E {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Real> Grid<Complex<T>> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, Complex::new(T::zero(), T::zero()))
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, Complex::new(T::one(), T::zero()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn norm_sqr(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, c| acc + c.norm_sqr())
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    pub fn abs(&self) -> Grid<T> {
        self.map(|c| c.norm())
    }

    pub fn re(&self) -> Grid<T> {
        self.map(|c| c.re)
    }

    pub fn im(&self) -> Grid<T> {
        self.map(|c| c.im)
    }

    pub fn arg(&self) -> Grid<T> {
        self.map(|c| c.arg())
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        self.map(|c| c * s)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        check_dims(self.dims(), other.dims())?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (a, b)| m.max((a - b).norm())))
    }
}

impl<T: Real> Grid<T> {
    pub fn sum(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &v| acc + v)
    }

    pub fn max_value(&self) -> T {
        self.data.iter().fold(T::neg_infinity(), |m, &v| m.max(v))
    }

    pub fn to_complex(&self) -> Grid<Complex<T>> {
        self.map(|&v| Complex::new(v, T::zero()))
    }
}

/// Object dims `n1 x n2` and the integer oversampling factor `r` applied to both axes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub n1: usize,
    pub n2: usize,
    pub r: usize,
}

impl SamplingConfig {
    pub fn new(n1: usize, n2: usize, r: usize) -> Result<Self> {
        if n1 == 0 || n2 == 0 || r == 0 {
            return Err(invalid(format!(
                "sampling config needs positive n1, n2, r; got {n1}, {n2}, {r}"
            )));
        }
        Ok(Self { n1, n2, r })
    }

    pub fn object_dims(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    pub fn padded_dims(&self) -> (usize, usize) {
        (self.n1 * self.r, self.n2 * self.r)
    }

    /// Ratio of high-density samples to orthogonal (r = 1) samples, `r^2`.
    pub fn sampling_ratio(&self) -> usize {
        self.r * self.r
    }

    /// Spacing between adjacent samples in units of `lambda / l`.
    pub fn sample_interval(&self) -> f64 {
        1.0 / self.r as f64
    }
}

/// Nonnegative detector magnitudes on the padded k-domain grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Measurement<T> {
    grid: Grid<T>,
}

impl<T: Real> Measurement<T> {
    pub fn new(grid: Grid<T>) -> Result<Self> {
        if let Some(bad) = grid.as_slice().iter().find(|v| !(v.is_finite() && **v >= T::zero())) {
            return Err(invalid(format!(
                "measurement entries must be finite and nonnegative, found {bad:?}"
            )));
        }
        Ok(Self { grid })
    }

    /// Magnitude of a transformed field.
    pub fn from_field(field: &ComplexField<T>) -> Self {
        Self { grid: field.abs() }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn into_grid(self) -> Grid<T> {
        self.grid
    }

    pub fn dims(&self) -> (usize, usize) {
        self.grid.dims()
    }

    pub fn as_slice(&self) -> &[T] {
        self.grid.as_slice()
    }

    /// Total measured energy, sum of `a^2`.
    pub fn energy(&self) -> T {
        self.grid.as_slice().iter().fold(T::zero(), |acc, &v| acc + v * v)
    }
}
