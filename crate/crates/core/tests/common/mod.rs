//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use hft_core::{ComplexField, Grid};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type C = Complex<f64>;

/// 3x3 complex reference matrix (four decimals).
pub fn reference_matrix() -> ComplexField<f64> {
    let v = [
        (-0.2515, -0.0404),
        (0.1371, -0.3740),
        (-0.1159, -0.1448),
        (0.6229, -1.1616),
        (0.0090, -0.3990),
        (0.0460, -0.2487),
        (0.1437, -0.3831),
        (0.0295, -0.3449),
        (0.9242, -1.6586),
    ];
    Grid::new(3, 3, v.iter().map(|&(re, im)| C::new(re, im)).collect()).unwrap()
}

/// Centered magnitude of the orthogonal 3x3 transform of [`reference_matrix`].
pub const REFERENCE_FFT_MAGNITUDE: [[f64; 3]; 3] = [[3.0, 2.0, 1.0], [1.0, 5.0, 1.0], [1.0, 2.0, 3.0]];

/// Centered magnitude of the r = 3 transform of [`reference_matrix`], as printed.
///
/// Entry (1, 3) is printed as `5.789`; every other value carries four decimals and the
/// sum of squares of the table only matches `81 * sum |O|^2` with `0.5789` there, so
/// the dropped leading zero is restored in [`reference_hft_magnitude`].
pub const PRINTED_HFT_MAGNITUDE: [[f64; 9]; 9] = [
    [2.0068, 2.8691, 2.5062, 1.3127, 1.4950, 2.6203, 2.7675, 1.7153, 0.5123],
    [2.8418, 3.0, 1.8934, 5.789, 2.0, 2.8311, 2.3641, 1.0, 1.5491],
    [2.8992, 2.4411, 0.8247, 1.2582, 2.8169, 3.1796, 2.2561, 1.0879, 2.0708],
    [2.6019, 1.5598, 0.5990, 2.7811, 4.0811, 3.8968, 2.4017, 1.0879, 2.1744],
    [2.5966, 1.0, 1.6632, 3.9892, 5.0, 4.2248, 2.0843, 1.0, 2.5267],
    [2.7206, 0.8689, 2.3112, 4.4093, 4.9224, 3.5764, 1.0408, 1.7153, 3.1297],
    [2.3040, 0.5789, 2.5272, 3.9595, 3.7562, 1.9958, 0.5767, 2.6218, 3.3089],
    [1.1348, 1.0, 2.5836, 2.9810, 2.0, 0.4123, 1.9560, 3.0, 2.6749],
    [0.5466, 2.0701, 2.6465, 2.0272, 0.9139, 1.7703, 2.7543, 2.6218, 1.3625],
];

pub fn reference_hft_magnitude() -> [[f64; 9]; 9] {
    let mut t = PRINTED_HFT_MAGNITUDE;
    t[1][3] = 0.5789;
    t
}

/// Direct double-sum DFT with the `exp(-2 pi i n k / M)` kernel.
pub fn dft_oracle(f: &ComplexField<f64>) -> ComplexField<f64> {
    let (m1, m2) = f.dims();
    Grid::from_fn(m1, m2, |k1, k2| {
        let mut acc = C::new(0.0, 0.0);
        for n1 in 0..m1 {
            for n2 in 0..m2 {
                let ph = -2.0 * PI * ((n1 * k1) as f64 / m1 as f64 + (n2 * k2) as f64 / m2 as f64);
                acc += f[(n1, n2)] * C::from_polar(1.0, ph);
            }
        }
        acc
    })
}

/// Composite Simpson quadrature of the overlap integral over a unit window starting at `w`.
pub fn overlap_quadrature(u1: f64, u2: f64, w1: f64, w2: f64, nodes: usize) -> C {
    assert!(nodes.is_multiple_of(2));
    let h = 1.0 / nodes as f64;
    let weight = |k: usize| {
        if k == 0 || k == nodes {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        }
    };
    let mut acc = C::new(0.0, 0.0);
    for a in 0..=nodes {
        let x1 = w1 + a as f64 * h;
        for b in 0..=nodes {
            let x2 = w2 + b as f64 * h;
            let ph = 2.0 * PI * (x1 * u1 + x2 * u2);
            acc += C::from_polar(weight(a) * weight(b), ph);
        }
    }
    acc * (h * h / 9.0)
}

pub fn random_field(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> ComplexField<f64> {
    Grid::from_fn(rows, cols, |_, _| {
        C::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Smooth phase object `exp(2 pi i L / max L)` where `L` is a sum of Gaussian blobs.
pub fn smooth_phase_object(n: usize, seed: u64) -> ComplexField<f64> {
    let mut r = rng(seed);
    let blobs: Vec<(f64, f64, f64)> = (0..6)
        .map(|_| {
            (
                r.random::<f64>() * n as f64,
                r.random::<f64>() * n as f64,
                2.0 + r.random::<f64>() * n as f64 / 8.0,
            )
        })
        .collect();
    let l = Grid::from_fn(n, n, |i, j| {
        blobs
            .iter()
            .map(|&(ci, cj, s)| {
                let d2 = (i as f64 - ci).powi(2) + (j as f64 - cj).powi(2);
                (-d2 / (2.0 * s * s)).exp()
            })
            .sum::<f64>()
    });
    let max = l.max_value();
    l.map(|&v| C::from_polar(1.0, 2.0 * PI * v / max))
}

/// Block glyphs for "PHASE" on a 32x32 canvas, rows 12..17.
pub fn glyph_shape() -> Grid<bool> {
    const ROWS: [&str; 5] = [
        "###.#.#..#..###.###",
        "#.#.#.#.#.#.#...#..",
        "###.###.###.###.##.",
        "#...#.#.#.#...#.#..",
        "#...#.#.#.#.###.###",
    ];
    Grid::from_fn(32, 32, |i, j| {
        if (12..17).contains(&i) && (6..25).contains(&j) {
            ROWS[i - 12].as_bytes()[j - 6] == b'#'
        } else {
            false
        }
    })
}

/// Object with value `i` on the shape and `1` elsewhere.
pub fn glyph_object() -> ComplexField<f64> {
    glyph_shape().map(|&b| if b { C::new(0.0, 1.0) } else { C::new(1.0, 0.0) })
}

/// Camera model for a magnitude pattern: intensity `a^2`, zero frequency moved to the
/// frame center, each k-sample imaged on `pixel x pixel` camera pixels, then one 8-bit
/// frame per exposure scale with dark offset, read noise, rounding and clipping at
/// `full_scale`. `hot` pixels are set just below full scale in the least sensitive frame.
pub struct Camera {
    pub scales: Vec<f64>,
    pub full_scale: f64,
    pub pixel: usize,
    /// Counts at the brightest sample in the least attenuated frame, before clipping.
    pub peak_counts: f64,
    pub dark: f64,
    pub read_noise: f64,
    pub hot: usize,
    pub seed: u64,
}

impl Camera {
    pub fn photograph(&self, a: &hft_core::Measurement<f64>) -> Vec<hft_core::RawFrame> {
        let centered = a.grid().fftshift();
        let intensity = centered.map(|v| v * v);
        let imax = intensity.max_value();
        let gain = self.peak_counts / imax;
        let (rows, cols) = (a.dims().0 * self.pixel, a.dims().1 * self.pixel);
        let mut r = rng(self.seed);
        let smin = self.scales.iter().cloned().fold(f64::INFINITY, f64::min);
        let smax = self.scales.iter().cloned().fold(0.0, f64::max);
        self.scales
            .iter()
            .map(|&s| {
                let mut px = Grid::from_fn(rows, cols, |i, j| {
                    let g: f64 = r.sample(StandardNormal);
                    let counts = intensity[(i / self.pixel, j / self.pixel)] * gain * smin / s;
                    (counts + self.dark + self.read_noise * g).round().clamp(0.0, self.full_scale)
                });
                if s == smax {
                    for _ in 0..self.hot {
                        let (i, j) = (r.random_range(0..rows), r.random_range(0..cols));
                        px[(i, j)] = self.full_scale - 1.0;
                    }
                }
                // Scale converts counts back to the intensity units of the sensitive frame.
                hft_core::RawFrame::new(px, self.full_scale, s / smin / gain, self.dark).unwrap()
            })
            .collect()
    }
}
