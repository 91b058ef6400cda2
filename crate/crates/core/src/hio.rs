//! Hybrid input-output reconstruction on the padded grid.
//!
//! The only object-domain constraint is the zero zone `G2`: each iteration
//! substitutes the measured magnitudes into the current spectrum, keeps the
//! back-transformed field on `G1`, and pushes `G2` toward zero with the
//! feedback `z - beta * tz`.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, invalid, Result};
use crate::field::{ComplexField, Grid, Measurement, SamplingConfig};
use crate::scalar::Real;
use crate::transform::{unit_phase, Fft2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskShape {
    Square,
    Circle,
}

/// Partition of the padded grid into object zone `G1` (true) and zero zone `G2`.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportMask {
    shape: MaskShape,
    size: usize,
    members: Grid<bool>,
    g1_count: usize,
}

impl SupportMask {
    /// Square masks take the top-left `size x size` block. Circle masks take every
    /// pixel within Euclidean distance `size` of `(size, size)`, so the disc touches
    /// the index-origin edges like a square mask does.
    pub fn new(rows: usize, cols: usize, shape: MaskShape, size: usize) -> Result<Self> {
        let extent = match shape {
            MaskShape::Square => size,
            MaskShape::Circle => 2 * size + 1,
        };
        if extent == 0 || extent > rows || extent > cols {
            return Err(invalid(format!(
                "{shape:?} mask of size {size} does not fit a {rows}x{cols} grid"
            )));
        }
        let members = match shape {
            MaskShape::Square => Grid::from_fn(rows, cols, |i, j| i < size && j < size),
            MaskShape::Circle => {
                let r2 = (size * size) as i64;
                let c = size as i64;
                Grid::from_fn(rows, cols, |i, j| {
                    let (di, dj) = (i as i64 - c, j as i64 - c);
                    di * di + dj * dj <= r2
                })
            }
        };
        Self::checked(shape, size, members)
    }

    fn checked(shape: MaskShape, size: usize, members: Grid<bool>) -> Result<Self> {
        let g1_count = members.as_slice().iter().filter(|&&m| m).count();
        if g1_count == 0 {
            return Err(invalid("support mask has empty G1"));
        }
        if g1_count == members.len() {
            return Err(invalid("support mask has empty G2; the grid needs a zero zone"));
        }
        Ok(Self {
            shape,
            size,
            members,
            g1_count,
        })
    }

    pub fn shape(&self) -> MaskShape {
        self.shape
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn dims(&self) -> (usize, usize) {
        self.members.dims()
    }

    pub fn g1_count(&self) -> usize {
        self.g1_count
    }

    pub fn g2_count(&self) -> usize {
        self.members.len() - self.g1_count
    }

    #[inline]
    pub fn in_g1(&self, i: usize, j: usize) -> bool {
        self.members[(i, j)]
    }

    pub fn members(&self) -> &[bool] {
        self.members.as_slice()
    }

    /// Sum of the first and last occupied index per axis. Reflecting `n -> sum - n`
    /// maps `G1` onto itself.
    pub fn reflection_sums(&self) -> (usize, usize) {
        let extent = match self.shape {
            MaskShape::Square => self.size,
            MaskShape::Circle => 2 * self.size + 1,
        };
        (extent - 1, extent - 1)
    }
}

/// Builds the support mask for a sampling configuration.
pub fn make_mask(cfg: &SamplingConfig, shape: MaskShape, size: usize) -> Result<SupportMask> {
    let (m1, m2) = cfg.padded_dims();
    SupportMask::new(m1, m2, shape, size)
}

/// `S`: energy of `z` on the zero zone.
pub fn compute_s<T: Real>(z: &ComplexField<T>, mask: &SupportMask) -> Result<T> {
    check_dims(mask.dims(), z.dims())?;
    Ok(g2_energy(z.as_slice(), mask.members()))
}

fn g2_energy<T: Real>(z: &[Complex<T>], members: &[bool]) -> T {
    z.iter()
        .zip(members)
        .filter(|(_, &m)| !m)
        .fold(T::zero(), |acc, (v, _)| acc + v.norm_sqr())
}

/// Feedback gain on `G2`.
#[derive(Clone, Debug, PartialEq)]
pub enum Beta<T> {
    Scalar(T),
    /// Per-pixel gain on the padded grid; entries on `G1` are ignored.
    Grid(Grid<T>),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "value")]
pub enum Tolerance {
    /// Stop when `S <= value * sum(a^2)`.
    Relative(f64),
    /// Stop when `S <= value`.
    Absolute(f64),
}

impl Tolerance {
    pub fn threshold<T: Real>(&self, a: &Measurement<T>) -> T {
        match *self {
            Tolerance::Relative(v) => T::of(v) * a.energy(),
            Tolerance::Absolute(v) => T::of(v),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Init<T> {
    AllOnes,
    /// Independent complex standard normals per pixel.
    Random { seed: u64 },
    Provided(ComplexField<T>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct HioParams<T> {
    pub beta: Beta<T>,
    pub max_iter: usize,
    pub tol: Tolerance,
    pub init: Init<T>,
    /// Base seed from which restart initializations are derived.
    pub seed: u64,
}

impl<T: Real> Default for HioParams<T> {
    fn default() -> Self {
        Self {
            beta: Beta::Scalar(T::of(0.9)),
            max_iter: 1000,
            tol: Tolerance::Relative(1e-8),
            init: Init::AllOnes,
            seed: 0,
        }
    }
}

impl<T: Real> HioParams<T> {
    fn validate(&self, dims: (usize, usize)) -> Result<()> {
        if self.max_iter == 0 {
            return Err(invalid("max_iter must be positive"));
        }
        match &self.beta {
            Beta::Scalar(b) => {
                if !(*b > T::zero() && *b <= T::one()) {
                    return Err(invalid(format!("beta must lie in (0, 1], got {b:?}")));
                }
            }
            Beta::Grid(g) => {
                check_dims(dims, g.dims())?;
                if g.as_slice().iter().any(|b| !(*b >= T::zero() && *b <= T::one())) {
                    return Err(invalid("beta grid entries must lie in [0, 1]"));
                }
            }
        }
        let tol = match self.tol {
            Tolerance::Relative(v) | Tolerance::Absolute(v) => v,
        };
        if !(tol >= 0.0 && tol.is_finite()) {
            return Err(invalid(format!("tol must be finite and nonnegative, got {tol}")));
        }
        if let Init::Provided(z0) = &self.init {
            check_dims(dims, z0.dims())?;
            if !z0.is_finite() {
                return Err(invalid("initial field has non-finite entries"));
            }
        }
        Ok(())
    }

    /// JSON echo of the parameters; a provided initial field is recorded by name only.
    pub fn echo(&self) -> serde_json::Value {
        let beta = match &self.beta {
            Beta::Scalar(b) => serde_json::json!(b.as_f64()),
            Beta::Grid(_) => serde_json::json!("grid"),
        };
        let init = match &self.init {
            Init::AllOnes => serde_json::json!("all_ones"),
            Init::Random { seed } => serde_json::json!({ "random": seed }),
            Init::Provided(_) => serde_json::json!("provided"),
        };
        serde_json::json!({
            "beta": beta,
            "max_iter": self.max_iter,
            "tol": self.tol,
            "init": init,
            "seed": self.seed,
        })
    }
}

/// `z` is the last magnitude projection `tz`: its `G1` block is the reconstruction and
/// its `G2` energy is the last `S`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReconResult<T> {
    pub z: ComplexField<T>,
    pub s_trace: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
}

impl<T: Real> ReconResult<T> {
    pub fn final_s(&self) -> T {
        self.s_trace.last().copied().unwrap_or_else(T::zero)
    }
}

/// Initial iterate restricted to `G1`.
pub fn initial_field<T: Real>(init: &Init<T>, mask: &SupportMask) -> ComplexField<T> {
    let (rows, cols) = mask.dims();
    let zero = Complex::new(T::zero(), T::zero());
    match init {
        Init::AllOnes => Grid::from_fn(rows, cols, |i, j| {
            if mask.in_g1(i, j) {
                Complex::new(T::one(), T::zero())
            } else {
                zero
            }
        }),
        Init::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            Grid::from_fn(rows, cols, |i, j| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                if mask.in_g1(i, j) {
                    Complex::new(T::of(re), T::of(im))
                } else {
                    zero
                }
            })
        }
        Init::Provided(z0) => Grid::from_fn(rows, cols, |i, j| {
            if mask.in_g1(i, j) {
                z0[(i, j)]
            } else {
                zero
            }
        }),
    }
}

/// One HIO iteration engine bound to a measurement and mask.
pub struct Hio<'a, T: Real> {
    a: &'a Measurement<T>,
    mask: &'a SupportMask,
    beta: &'a Beta<T>,
    fft: Fft2<T>,
    tz: Vec<Complex<T>>,
}

impl<'a, T: Real> Hio<'a, T> {
    pub fn new(a: &'a Measurement<T>, mask: &'a SupportMask, beta: &'a Beta<T>) -> Result<Self> {
        check_dims(mask.dims(), a.dims())?;
        if let Beta::Grid(g) = beta {
            check_dims(mask.dims(), g.dims())?;
        }
        let (rows, cols) = a.dims();
        Ok(Self {
            a,
            mask,
            beta,
            fft: Fft2::new(rows, cols),
            tz: vec![Complex::new(T::zero(), T::zero()); rows * cols],
        })
    }

    /// Steps (1)-(2): `tz = inverse(a * F / |F|)` with `F = forward(z)`.
    pub fn magnitude_projection(&mut self, z: &ComplexField<T>) -> Result<ComplexField<T>> {
        check_dims(self.mask.dims(), z.dims())?;
        self.project(z.as_slice());
        Grid::new(z.rows(), z.cols(), self.tz.clone())
    }

    fn project(&mut self, z: &[Complex<T>]) {
        self.tz.copy_from_slice(z);
        self.fft.forward(&mut self.tz);
        for (f, &a) in self.tz.iter_mut().zip(self.a.as_slice()) {
            *f = unit_phase(*f) * a;
        }
        self.fft.inverse(&mut self.tz);
    }

    /// Steps (1)-(4) in place. Returns `S` evaluated on `tz`, the magnitude-consistent
    /// field of step (2), whose `G1` block is the new `z` on `G1`.
    pub fn step(&mut self, z: &mut ComplexField<T>) -> Result<T> {
        check_dims(self.mask.dims(), z.dims())?;
        self.project(z.as_slice());
        let members = self.mask.members();
        let zs = z.as_mut_slice();
        match self.beta {
            Beta::Scalar(b) => {
                for k in 0..zs.len() {
                    if members[k] {
                        zs[k] = self.tz[k];
                    } else {
                        zs[k] = zs[k] - self.tz[k] * *b;
                    }
                }
            }
            Beta::Grid(g) => {
                let bs = g.as_slice();
                for k in 0..zs.len() {
                    if members[k] {
                        zs[k] = self.tz[k];
                    } else {
                        zs[k] = zs[k] - self.tz[k] * bs[k];
                    }
                }
            }
        }
        Ok(g2_energy(&self.tz, members))
    }

    /// `tz` from the most recent [`Hio::step`].
    pub fn last_projection(&self) -> &[Complex<T>] {
        &self.tz
    }
}

/// Runs HIO until `max_iter` iterations or `S <= tol`.
pub fn hio_run<T: Real>(
    a: &Measurement<T>,
    mask: &SupportMask,
    p: &HioParams<T>,
) -> Result<ReconResult<T>> {
    check_dims(mask.dims(), a.dims())?;
    p.validate(mask.dims())?;
    let tol = p.tol.threshold(a);
    let mut engine = Hio::new(a, mask, &p.beta)?;
    let mut z = initial_field(&p.init, mask);
    // The feedback values HIO leaves on G2 need not vanish at a fixed point, so
    // both S and the returned field come from the magnitude projection tz.
    let mut s_trace = Vec::with_capacity(p.max_iter);
    let mut converged = false;
    for _ in 0..p.max_iter {
        let s = engine.step(&mut z)?;
        s_trace.push(s);
        if s <= tol {
            converged = true;
            break;
        }
    }
    let (rows, cols) = mask.dims();
    let z = Grid::new(rows, cols, engine.last_projection().to_vec())?;
    Ok(ReconResult {
        z,
        iterations: s_trace.len(),
        s_trace,
        converged,
    })
}

/// Seed for restart `index` derived from `base` (SplitMix64 finalizer).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut x = base ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Parameters for restart `index`: restart 0 is `p` unchanged, later restarts
/// use random initializations derived from `p.seed`.
pub fn restart_params<T: Real>(p: &HioParams<T>, index: usize) -> HioParams<T> {
    let mut q = p.clone();
    if index > 0 {
        q.init = Init::Random {
            seed: derive_seed(p.seed, index as u64),
        };
    }
    q
}

/// Runs `restarts` independent HIO runs and keeps the one with the smallest final `S`.
/// Ties go to the lowest restart index.
pub fn multistart<T: Real>(
    a: &Measurement<T>,
    mask: &SupportMask,
    p: &HioParams<T>,
    restarts: usize,
) -> Result<ReconResult<T>> {
    if restarts == 0 {
        return Err(invalid("restarts must be >= 1"));
    }
    let runs: Vec<ReconResult<T>> = (0..restarts)
        .into_par_iter()
        .map(|i| hio_run(a, mask, &restart_params(p, i)))
        .collect::<Result<_>>()?;
    let best = runs
        .into_iter()
        .reduce(|best, r| if r.final_s() < best.final_s() { r } else { best })
        .expect("at least one restart");
    Ok(best)
}
