//! Superposition coefficients between high-density measurement vectors.
//!
//! For a rectangular object window of side `l`, the inner product of the
//! measurement vectors at `k_a` and `k_b` depends only on their separation
//! `u = (l / lambda) (k_a - k_b)` per axis. It vanishes at nonzero integer
//! separations, which is why the orthogonal (FFT) samples carry no
//! cross-information, and it is nonzero between fractional samples.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// k-separation per axis in units of `lambda / l`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizedFrequencyOffset<T> {
    pub u1: T,
    pub u2: T,
}

impl<T: Real> NormalizedFrequencyOffset<T> {
    pub fn new(u1: T, u2: T) -> Result<Self> {
        if !(u1.is_finite() && u2.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "frequency offset must be finite, got ({u1:?}, {u2:?})"
            )));
        }
        Ok(Self { u1, u2 })
    }
}

/// Normalized sinc, `sin(pi u) / (pi u)`, equal to 1 at `u = 0`.
///
/// Exact zero at nonzero integers (the `sin` of a multiple of pi is only
/// approximately zero in floating point).
pub fn sinc<T: Real>(u: T) -> T {
    if u.abs() < T::of(1e-8) {
        let x = T::PI() * u;
        return T::one() - x * x / T::of(6.0);
    }
    if u.fract() == T::zero() {
        return T::zero();
    }
    let x = T::PI() * u;
    x.sin() / x
}

/// Real inner product for a window centered on the origin: `sinc(u1) * sinc(u2)`.
pub fn inner_product<T: Real>(offset: NormalizedFrequencyOffset<T>) -> T {
    sinc(offset.u1) * sinc(offset.u2)
}

/// Complex inner product for a window starting at `w` (in units of `l`) on each axis.
///
/// Per axis the window integral is `exp(i pi u (2 w + 1)) * sinc(u)`, so the modulus
/// never depends on where the window sits.
pub fn inner_product_general<T: Real>(
    offset: NormalizedFrequencyOffset<T>,
    w1_over_l: T,
    w2_over_l: T,
) -> Complex<T> {
    axis_factor(offset.u1, w1_over_l) * axis_factor(offset.u2, w2_over_l)
}

fn axis_factor<T: Real>(u: T, w: T) -> Complex<T> {
    let two = T::of(2.0);
    Complex::from_polar(sinc(u), T::PI() * u * (two * w + T::one()))
}

/// Ratio of coefficient changes `dP(j1) / dP(j2)` when a sample moves from `k` to `k + 1/r`.
///
/// `k` is in units of `lambda / l`, and `dP(j) = P(k + 1/r - j) - P(k - j)` along one axis.
pub fn coeff_ratio<T: Real>(k: T, r: usize, j1: i64, j2: i64) -> Result<T> {
    if r == 0 {
        return Err(Error::InvalidInput("oversampling factor must be >= 1".into()));
    }
    let k_next = k + T::one() / T::of(r as f64);
    let delta = |j: i64| {
        let j = T::of(j as f64);
        sinc(k_next - j) - sinc(k - j)
    };
    let denom = delta(j2);
    if denom == T::zero() || !denom.is_finite() {
        return Err(Error::DegenerateOffset(format!(
            "coefficient change for j = {j2} vanishes at k = {k:?}, r = {r}"
        )));
    }
    Ok(delta(j1) / denom)
}
