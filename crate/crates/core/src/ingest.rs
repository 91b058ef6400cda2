//! Detector frames to a calibrated [`Measurement`]: HDR composition across
//! neutral-density exposures, hot-pixel removal, binning and cropping.
//!
//! Detector data are handled in `f64` regardless of the solver precision.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{check_dims, invalid, Result};
use crate::field::{Grid, Measurement};

/// One exposure. `exposure_scale` converts background-subtracted counts to the common
/// linear scale, e.g. `10^OD` for the filter stack in front of the camera.
#[derive(Clone, Debug, PartialEq)]
pub struct RawFrame {
    pub pixels: Grid<f64>,
    pub saturation_level: f64,
    pub exposure_scale: f64,
    pub background: f64,
}

impl RawFrame {
    pub fn new(pixels: Grid<f64>, saturation_level: f64, exposure_scale: f64, background: f64) -> Result<Self> {
        if !(saturation_level > 0.0 && exposure_scale > 0.0 && background >= 0.0) {
            return Err(invalid(format!(
                "frame needs saturation > 0, scale > 0, background >= 0; got {saturation_level}, {exposure_scale}, {background}"
            )));
        }
        if pixels.as_slice().iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(invalid("frame pixels must be finite and nonnegative"));
        }
        Ok(Self {
            pixels,
            saturation_level,
            exposure_scale,
            background,
        })
    }

    #[inline]
    fn usable(&self, p: f64) -> bool {
        p < self.saturation_level && p > self.background
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HdrComposite {
    pub values: Grid<f64>,
    /// False where no frame had the pixel strictly between background and saturation.
    pub valid: Grid<bool>,
}

/// Merges exposures into one linear-scale image.
///
/// Each usable sample contributes `scale * (p - background)` with weight `p`, so the
/// frames that collected the most counts dominate. Pixels usable in no frame take the
/// estimate from the most sensitive frame (smallest scale) and are marked invalid.
pub fn hdr_compose(frames: &[RawFrame]) -> Result<HdrComposite> {
    let first = frames.first().ok_or_else(|| invalid("no frames to compose"))?;
    let dims = first.pixels.dims();
    for f in frames {
        check_dims(dims, f.pixels.dims())?;
    }
    let sensitive = frames
        .iter()
        .min_by(|a, b| a.exposure_scale.total_cmp(&b.exposure_scale))
        .expect("nonempty");

    let n = first.pixels.len();
    let mut values = Vec::with_capacity(n);
    let mut valid = Vec::with_capacity(n);
    for k in 0..n {
        let (mut num, mut den) = (0.0, 0.0);
        for f in frames {
            let p = f.pixels.as_slice()[k];
            if f.usable(p) {
                num += p * f.exposure_scale * (p - f.background);
                den += p;
            }
        }
        if den > 0.0 {
            values.push(num / den);
            valid.push(true);
        } else {
            let p = sensitive.pixels.as_slice()[k];
            values.push(sensitive.exposure_scale * (p - sensitive.background).max(0.0));
            valid.push(false);
        }
    }
    Ok(HdrComposite {
        values: Grid::new(dims.0, dims.1, values)?,
        valid: Grid::new(dims.0, dims.1, valid)?,
    })
}

fn median(vals: &mut [f64]) -> f64 {
    vals.sort_by(f64::total_cmp);
    let n = vals.len();
    if n % 2 == 1 {
        vals[n / 2]
    } else {
        0.5 * (vals[n / 2 - 1] + vals[n / 2])
    }
}

/// Replaces every pixel brighter than `threshold` times the median of its 8-neighborhood
/// (fewer at the border) with that median. Medians come from the unmodified input.
pub fn despeckle(m: &Grid<f64>, threshold: f64) -> Result<Grid<f64>> {
    if !(threshold > 1.0) {
        return Err(invalid(format!("despeckle threshold must exceed 1, got {threshold}")));
    }
    let (rows, cols) = m.dims();
    let mut neigh = Vec::with_capacity(8);
    Ok(Grid::from_fn(rows, cols, |i, j| {
        neigh.clear();
        for di in -1i64..=1 {
            for dj in -1i64..=1 {
                if di == 0 && dj == 0 {
                    continue;
                }
                let (ni, nj) = (i as i64 + di, j as i64 + dj);
                if ni >= 0 && nj >= 0 && (ni as usize) < rows && (nj as usize) < cols {
                    neigh.push(m[(ni as usize, nj as usize)]);
                }
            }
        }
        let v = m[(i, j)];
        if neigh.is_empty() {
            return v;
        }
        let med = median(&mut neigh);
        if v > threshold * med {
            med
        } else {
            v
        }
    }))
}

/// Mean over non-overlapping `factor x factor` blocks.
pub fn bin_average(m: &Grid<f64>, factor: usize) -> Result<Grid<f64>> {
    let (rows, cols) = m.dims();
    if factor == 0 || rows % factor != 0 || cols % factor != 0 {
        return Err(invalid(format!(
            "bin factor {factor} does not divide {rows}x{cols}"
        )));
    }
    if factor == 1 {
        return Ok(m.clone());
    }
    let (or, oc) = (rows / factor, cols / factor);
    let inv = 1.0 / (factor * factor) as f64;
    Ok(Grid::from_fn(or, oc, |i, j| {
        let mut acc = 0.0;
        for bi in 0..factor {
            for &v in &m.row(i * factor + bi)[j * factor..(j + 1) * factor] {
                acc += v;
            }
        }
        acc * inv
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CropWindow {
    pub row: usize,
    pub col: usize,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IngestConfig {
    pub bin_factor: usize,
    /// Window to keep; `None` keeps the whole frame.
    pub crop: Option<CropWindow>,
    /// Output dims after binning. When set, the crop window is center-cropped to
    /// `target * bin_factor` first.
    pub target: Option<(usize, usize)>,
    /// `None` skips despeckling.
    pub despeckle_threshold: Option<f64>,
    /// Subtracted before despeckling; results are clamped at zero.
    pub background_level: f64,
    /// Move the central pixel (zero frequency on a camera) to the index origin.
    pub recenter: bool,
    /// Pixels record intensity, so the output magnitude is the square root.
    pub counts_are_intensity: bool,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            bin_factor: 1,
            crop: None,
            target: None,
            despeckle_threshold: Some(3.0),
            background_level: 0.0,
            recenter: true,
            counts_are_intensity: true,
        }
    }
}

impl IngestConfig {
    /// Passes values through unchanged.
    pub fn identity() -> Self {
        Self {
            despeckle_threshold: None,
            recenter: false,
            counts_are_intensity: false,
            ..Self::default()
        }
    }

    /// Final crop window for a frame of `dims`: the configured window, center-cropped to
    /// `target * bin_factor` if a target is set, else shrunk to a multiple of `bin_factor`.
    pub fn resolve_crop(&self, dims: (usize, usize)) -> Result<CropWindow> {
        if self.bin_factor == 0 {
            return Err(invalid("bin factor must be positive"));
        }
        let w = self.crop.unwrap_or(CropWindow {
            row: 0,
            col: 0,
            rows: dims.0,
            cols: dims.1,
        });
        if w.rows == 0 || w.cols == 0 || w.row + w.rows > dims.0 || w.col + w.cols > dims.1 {
            return Err(invalid(format!("crop window {w:?} outside {}x{} frame", dims.0, dims.1)));
        }
        let (want_r, want_c) = match self.target {
            Some((tr, tc)) => (tr * self.bin_factor, tc * self.bin_factor),
            None => (
                w.rows - w.rows % self.bin_factor,
                w.cols - w.cols % self.bin_factor,
            ),
        };
        if want_r == 0 || want_c == 0 || want_r > w.rows || want_c > w.cols {
            return Err(invalid(format!(
                "cannot fit {want_r}x{want_c} (target x bin) inside crop window {w:?}"
            )));
        }
        Ok(CropWindow {
            row: w.row + (w.rows - want_r) / 2,
            col: w.col + (w.cols - want_c) / 2,
            rows: want_r,
            cols: want_c,
        })
    }
}

pub fn crop(m: &Grid<f64>, w: &CropWindow) -> Result<Grid<f64>> {
    if w.row + w.rows > m.rows() || w.col + w.cols > m.cols() || w.rows == 0 || w.cols == 0 {
        return Err(invalid(format!("crop window {w:?} outside {}x{} grid", m.rows(), m.cols())));
    }
    Ok(Grid::from_fn(w.rows, w.cols, |i, j| m[(w.row + i, w.col + j)]))
}

/// SHA-256 of the grid's dims and little-endian values.
pub fn grid_digest(m: &Grid<f64>) -> String {
    let mut h = Sha256::new();
    h.update((m.rows() as u64).to_le_bytes());
    h.update((m.cols() as u64).to_le_bytes());
    for v in m.as_slice() {
        h.update(v.to_le_bytes());
    }
    hex::encode(h.finalize())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub input_sha256: String,
    pub input_dims: (usize, usize),
    pub config: IngestConfig,
    pub crop_applied: CropWindow,
    pub output_dims: (usize, usize),
    pub output_sha256: String,
}

/// Crop, subtract background, despeckle, bin, recenter, clamp at zero, and take the
/// square root of intensities.
pub fn to_measurement(m: &Grid<f64>, cfg: &IngestConfig) -> Result<(Measurement<f64>, Provenance)> {
    if m.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(invalid("input grid has non-finite values"));
    }
    if !(cfg.background_level >= 0.0) {
        return Err(invalid("background level must be nonnegative"));
    }
    let window = cfg.resolve_crop(m.dims())?;
    let mut g = crop(m, &window)?;
    let bg = cfg.background_level;
    if bg > 0.0 {
        g = g.map(|&v| (v - bg).max(0.0));
    }
    if let Some(t) = cfg.despeckle_threshold {
        g = despeckle(&g, t)?;
    }
    g = bin_average(&g, cfg.bin_factor)?;
    if cfg.recenter {
        g = g.ifftshift();
    }
    let g = if cfg.counts_are_intensity {
        g.map(|&v| v.max(0.0).sqrt())
    } else {
        g.map(|&v| v.max(0.0))
    };
    let provenance = Provenance {
        input_sha256: grid_digest(m),
        input_dims: m.dims(),
        config: cfg.clone(),
        crop_applied: window,
        output_dims: g.dims(),
        output_sha256: grid_digest(&g),
    };
    Ok((Measurement::new(g)?, provenance))
}
