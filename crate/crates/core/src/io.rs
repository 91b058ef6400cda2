//! File formats.
//!
//! `CFLD1` complex fields and `MAG1` magnitudes share one layout: a single-line JSON
//! header `{"magic", "rows", "cols", "dtype"}` terminated by `\n`, then the raw
//! row-major values as little-endian IEEE-754 doubles (`(re, im)` pairs for `c128le`).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use image::{ImageBuffer, Luma};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ComplexField, Grid, Measurement};

pub const FIELD_MAGIC: &str = "CFLD1";
pub const MAGNITUDE_MAGIC: &str = "MAG1";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    magic: String,
    rows: usize,
    cols: usize,
    dtype: String,
}

fn write_header<W: Write>(w: &mut W, magic: &str, rows: usize, cols: usize, dtype: &str) -> Result<()> {
    let h = Header {
        magic: magic.to_string(),
        rows,
        cols,
        dtype: dtype.to_string(),
    };
    serde_json::to_writer(&mut *w, &h)?;
    w.write_all(b"\n")?;
    Ok(())
}

fn read_header<R: BufRead>(r: &mut R, format: &'static str, dtype: &str) -> Result<(usize, usize)> {
    let mut line = Vec::new();
    r.read_until(b'\n', &mut line)?;
    let h: Header = serde_json::from_slice(&line).map_err(|e| Error::Format {
        format,
        reason: format!("bad header: {e}"),
    })?;
    if h.magic != format {
        return Err(Error::Format {
            format,
            reason: format!("magic {:?}", h.magic),
        });
    }
    if h.dtype != dtype {
        return Err(Error::Format {
            format,
            reason: format!("dtype {:?}, expected {dtype:?}", h.dtype),
        });
    }
    if h.rows == 0 || h.cols == 0 {
        return Err(Error::Format {
            format,
            reason: "empty grid".into(),
        });
    }
    Ok((h.rows, h.cols))
}

fn read_f64s<R: Read>(r: &mut R, n: usize, format: &'static str) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; n * 8];
    r.read_exact(&mut bytes).map_err(|e| Error::Format {
        format,
        reason: format!("truncated payload: {e}"),
    })?;
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Format {
            format,
            reason: format!("{} trailing bytes", rest.len()),
        });
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

pub fn write_field<W: Write>(w: &mut W, field: &ComplexField<f64>) -> Result<()> {
    write_header(w, FIELD_MAGIC, field.rows(), field.cols(), "c128le")?;
    for c in field.as_slice() {
        w.write_all(&c.re.to_le_bytes())?;
        w.write_all(&c.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_field<R: Read>(r: R) -> Result<ComplexField<f64>> {
    let mut r = BufReader::new(r);
    let (rows, cols) = read_header(&mut r, FIELD_MAGIC, "c128le")?;
    let vals = read_f64s(&mut r, rows * cols * 2, FIELD_MAGIC)?;
    let data: Vec<Complex<f64>> = vals.chunks_exact(2).map(|p| Complex::new(p[0], p[1])).collect();
    let field = Grid::new(rows, cols, data)?;
    if !field.is_finite() {
        return Err(Error::Format {
            format: FIELD_MAGIC,
            reason: "non-finite values".into(),
        });
    }
    Ok(field)
}

pub fn write_measurement<W: Write>(w: &mut W, m: &Measurement<f64>) -> Result<()> {
    let (rows, cols) = m.dims();
    write_header(w, MAGNITUDE_MAGIC, rows, cols, "f64le")?;
    for v in m.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_measurement<R: Read>(r: R) -> Result<Measurement<f64>> {
    let mut r = BufReader::new(r);
    let (rows, cols) = read_header(&mut r, MAGNITUDE_MAGIC, "f64le")?;
    let vals = read_f64s(&mut r, rows * cols, MAGNITUDE_MAGIC)?;
    Measurement::new(Grid::new(rows, cols, vals)?).map_err(|e| Error::Format {
        format: MAGNITUDE_MAGIC,
        reason: e.to_string(),
    })
}

pub fn save_field(path: impl AsRef<Path>, field: &ComplexField<f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_field(&mut w, field)?;
    w.flush()?;
    Ok(())
}

pub fn load_field(path: impl AsRef<Path>) -> Result<ComplexField<f64>> {
    read_field(File::open(path)?)
}

pub fn save_measurement(path: impl AsRef<Path>, m: &Measurement<f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_measurement(&mut w, m)?;
    w.flush()?;
    Ok(())
}

pub fn load_measurement(path: impl AsRef<Path>) -> Result<Measurement<f64>> {
    read_measurement(File::open(path)?)
}

/// Maps `g` linearly from `[min, max]` onto `[0, 65535]` and writes a 16-bit grayscale PNG.
/// A constant grid is written as all zeros.
pub fn save_png_linear(path: impl AsRef<Path>, g: &Grid<f64>) -> Result<()> {
    let lo = g.as_slice().iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = g.as_slice().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    save_png_u16(path, g, |v| if span > 0.0 { (v - lo) / span } else { 0.0 })
}

/// Log display: `p = 65535 * log10(1 + a) / log10(1 + max a)`.
pub fn save_png_log(path: impl AsRef<Path>, a: &Grid<f64>) -> Result<()> {
    let denom = (1.0 + a.max_value().max(0.0)).log10();
    save_png_u16(path, a, |v| if denom > 0.0 { (1.0 + v.max(0.0)).log10() / denom } else { 0.0 })
}

fn save_png_u16(path: impl AsRef<Path>, g: &Grid<f64>, unit: impl Fn(f64) -> f64) -> Result<()> {
    let img: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_fn(g.cols() as u32, g.rows() as u32, |x, y| {
            let u = unit(g[(y as usize, x as usize)]).clamp(0.0, 1.0);
            Luma([(u * 65535.0).round() as u16])
        });
    img.save(path)?;
    Ok(())
}

/// Reads an 8- or 16-bit grayscale PNG as raw counts.
pub fn load_png_gray(path: impl AsRef<Path>) -> Result<Grid<f64>> {
    let img = image::open(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data: Vec<f64> = match img {
        image::DynamicImage::ImageLuma8(b) => b.into_raw().into_iter().map(f64::from).collect(),
        image::DynamicImage::ImageLuma16(b) => b.into_raw().into_iter().map(f64::from).collect(),
        other => {
            return Err(Error::Format {
                format: "PNG",
                reason: format!("expected 8/16-bit grayscale, got {:?}", other.color()),
            })
        }
    };
    Grid::new(h, w, data)
}
