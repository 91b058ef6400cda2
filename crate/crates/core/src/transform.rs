//! Discrete high-density Fourier transform (HFT).
//!
//! Sampling the object's spectrum at spacing `1/r` of the orthogonal grid is the
//! same as taking the DFT of the object zero-padded to `r` times its size per
//! axis. The object occupies the index-origin corner `G1`; the rest of the
//! padded grid is the zero zone `G2`.
//!
//! Sign convention: forward uses `exp(-2 pi i n k / M)` and carries no
//! normalization; inverse uses `exp(+2 pi i n k / M)` and divides by `M1 * M2`.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{check_dims, Result};
use crate::field::{ComplexField, SamplingConfig};
use crate::scalar::Real;

/// Planned 2-D transform for a fixed grid size. Cloning shares the plans.
#[derive(Clone)]
pub struct Fft2<T: Real> {
    rows: usize,
    cols: usize,
    row_fwd: Arc<dyn Fft<T>>,
    row_inv: Arc<dyn Fft<T>>,
    col_fwd: Arc<dyn Fft<T>>,
    col_inv: Arc<dyn Fft<T>>,
    transposed: Vec<Complex<T>>,
    scratch: Vec<Complex<T>>,
}

impl<T: Real> Fft2<T> {
    pub fn new(rows: usize, cols: usize) -> Self {
        let mut planner = FftPlanner::new();
        let row_fwd = planner.plan_fft(cols, FftDirection::Forward);
        let row_inv = planner.plan_fft(cols, FftDirection::Inverse);
        let col_fwd = planner.plan_fft(rows, FftDirection::Forward);
        let col_inv = planner.plan_fft(rows, FftDirection::Inverse);
        let scratch_len = [&row_fwd, &row_inv, &col_fwd, &col_inv]
            .iter()
            .map(|p| p.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        let zero = Complex::new(T::zero(), T::zero());
        Self {
            rows,
            cols,
            row_fwd,
            row_inv,
            col_fwd,
            col_inv,
            transposed: vec![zero; rows * cols],
            scratch: vec![zero; scratch_len],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Unnormalized forward transform in place.
    pub fn forward(&mut self, data: &mut [Complex<T>]) {
        self.run(data, FftDirection::Forward);
    }

    /// Inverse transform in place, normalized by `1 / (rows * cols)`.
    pub fn inverse(&mut self, data: &mut [Complex<T>]) {
        self.run(data, FftDirection::Inverse);
        let norm = T::one() / T::of((self.rows * self.cols) as f64);
        for v in data.iter_mut() {
            *v = *v * norm;
        }
    }

    fn run(&mut self, data: &mut [Complex<T>], dir: FftDirection) {
        assert_eq!(data.len(), self.rows * self.cols, "buffer does not match plan");
        let (row_plan, col_plan) = match dir {
            FftDirection::Forward => (&self.row_fwd, &self.col_fwd),
            FftDirection::Inverse => (&self.row_inv, &self.col_inv),
        };
        row_plan.process_with_scratch(data, &mut self.scratch);
        transpose(data, &mut self.transposed, self.rows, self.cols);
        col_plan.process_with_scratch(&mut self.transposed, &mut self.scratch);
        transpose(&self.transposed, data, self.cols, self.rows);
    }

    pub fn forward_field(&mut self, field: &ComplexField<T>) -> Result<ComplexField<T>> {
        check_dims(self.dims(), field.dims())?;
        let mut out = field.clone();
        self.forward(out.as_mut_slice());
        Ok(out)
    }

    pub fn inverse_field(&mut self, field: &ComplexField<T>) -> Result<ComplexField<T>> {
        check_dims(self.dims(), field.dims())?;
        let mut out = field.clone();
        self.inverse(out.as_mut_slice());
        Ok(out)
    }
}

fn transpose<E: Copy>(src: &[E], dst: &mut [E], rows: usize, cols: usize) {
    const BLOCK: usize = 16;
    for i0 in (0..rows).step_by(BLOCK) {
        for j0 in (0..cols).step_by(BLOCK) {
            for i in i0..(i0 + BLOCK).min(rows) {
                for j in j0..(j0 + BLOCK).min(cols) {
                    dst[j * rows + i] = src[i * cols + j];
                }
            }
        }
    }
}

/// Unnormalized 2-D DFT of any field.
pub fn fft2<T: Real>(field: &ComplexField<T>) -> ComplexField<T> {
    let mut out = field.clone();
    Fft2::new(field.rows(), field.cols()).forward(out.as_mut_slice());
    out
}

/// Inverse 2-D DFT, normalized by `1 / (rows * cols)`.
pub fn ifft2<T: Real>(field: &ComplexField<T>) -> ComplexField<T> {
    let mut out = field.clone();
    Fft2::new(field.rows(), field.cols()).inverse(out.as_mut_slice());
    out
}

/// Zero-pads `object` into the `G1` corner of the `(n1 r) x (n2 r)` grid.
pub fn embed<T: Real>(object: &ComplexField<T>, cfg: &SamplingConfig) -> Result<ComplexField<T>> {
    check_dims(cfg.object_dims(), object.dims())?;
    let (m1, m2) = cfg.padded_dims();
    let mut out = ComplexField::zeros(m1, m2);
    for i in 0..cfg.n1 {
        out.as_mut_slice()[i * m2..i * m2 + cfg.n2].copy_from_slice(object.row(i));
    }
    Ok(out)
}

/// Returns the `G1` block of a padded field.
pub fn extract<T: Real>(field: &ComplexField<T>, cfg: &SamplingConfig) -> Result<ComplexField<T>> {
    check_dims(cfg.padded_dims(), field.dims())?;
    Ok(ComplexField::from_fn(cfg.n1, cfg.n2, |i, j| field[(i, j)]))
}

/// High-density transform: DFT of the padded object. With `r = 1` this is the plain DFT.
pub fn hft_forward<T: Real>(
    object: &ComplexField<T>,
    cfg: &SamplingConfig,
) -> Result<ComplexField<T>> {
    let mut padded = embed(object, cfg)?;
    let (m1, m2) = cfg.padded_dims();
    Fft2::new(m1, m2).forward(padded.as_mut_slice());
    Ok(padded)
}

/// Inverse of [`hft_forward`] on the padded grid; the result is the padded field, not the `G1` block.
pub fn hft_inverse<T: Real>(
    field: &ComplexField<T>,
    cfg: &SamplingConfig,
) -> Result<ComplexField<T>> {
    check_dims(cfg.padded_dims(), field.dims())?;
    Ok(ifft2(field))
}

/// Unit-modulus phase factor `F / |F|`, with `1` where `|F|` underflows.
#[inline]
pub fn unit_phase<T: Real>(c: Complex<T>) -> Complex<T> {
    let m = c.norm();
    if m < T::of(1e-300) || m == T::zero() {
        Complex::new(T::one(), T::zero())
    } else {
        c / m
    }
}
