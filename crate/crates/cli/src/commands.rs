use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use hft_core::analysis::phase_mix_measured;
use hft_core::ingest::{to_measurement, CropWindow};
use hft_core::io::{load_field, load_measurement, load_png_gray, save_field, save_measurement, save_png_linear, save_png_log};
use hft_core::*;
use num_complex::Complex;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::*;

fn prepare_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn required<T: Clone>(v: &Option<T>, name: &str) -> Result<T> {
    v.clone().with_context(|| format!("missing required setting `{name}`"))
}

fn load_field_at(path: &Path) -> Result<Field64> {
    load_field(path).with_context(|| format!("reading field {}", path.display()))
}

fn load_measurement_at(path: &Path) -> Result<Measurement64> {
    load_measurement(path).with_context(|| format!("reading measurement {}", path.display()))
}

/// Writes a field and reads it back to make sure the file is complete.
fn write_field_checked(path: &Path, z: &Field64) -> Result<()> {
    save_field(path, z).with_context(|| format!("writing {}", path.display()))?;
    ensure!(&load_field(path)? == z, "{} did not read back identically", path.display());
    Ok(())
}

fn write_measurement_checked(path: &Path, a: &Measurement64) -> Result<()> {
    save_measurement(path, a).with_context(|| format!("writing {}", path.display()))?;
    ensure!(&load_measurement(path)? == a, "{} did not read back identically", path.display());
    Ok(())
}

fn write_json(path: &Path, v: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(v)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn sampling(n1: usize, n2: usize, r: usize) -> Result<SamplingConfig> {
    Ok(SamplingConfig::new(n1, n2, r)?)
}

fn tolerance(tol: f64, kind: TolKind) -> Tolerance {
    match kind {
        TolKind::Relative => Tolerance::Relative(tol),
        TolKind::Absolute => Tolerance::Absolute(tol),
    }
}

/// Top-left `rows x cols` block.
fn block(z: &Field64, rows: usize, cols: usize) -> Field64 {
    let (rows, cols) = (rows.min(z.rows()), cols.min(z.cols()));
    Grid::from_fn(rows, cols, |i, j| z[(i, j)])
}

pub fn simulate(mut cfg: SimulateConfig) -> Result<()> {
    let seed = cfg.seed();
    let out = cfg.out_dir();
    let object = required(&cfg.object, "object")?;
    let r = *cfg.r.get_or_insert(1);
    let rnoi = *cfg.rnoi.get_or_insert(0.0);
    let anoi = *cfg.anoi.get_or_insert(0.0);

    let o = load_field_at(&object)?;
    let sc = sampling(o.rows(), o.cols(), r)?;
    let clean = Measurement::from_field(&hft_forward(&o, &sc)?);
    let a = add_noise(&clean, &NoiseParams::new(rnoi, anoi, seed)?);

    prepare_out(&out)?;
    write_measurement_checked(&out.join("measurement.mag"), &a)?;
    save_png_log(out.join("measurement_log.png"), &a.grid().fftshift())?;
    write_echo(&out, "simulate", &cfg)?;
    Ok(())
}

pub fn reconstruct(mut cfg: ReconstructConfig) -> Result<()> {
    let seed = cfg.seed();
    let out = cfg.out_dir();
    let a = load_measurement_at(&required(&cfg.measurement, "measurement")?)?;
    let size = required(&cfg.support, "support")?;
    let shape = *cfg.shape.get_or_insert(Shape::Square);
    let beta = *cfg.beta.get_or_insert(0.9);
    let max_iter = *cfg.max_iter.get_or_insert(1000);
    let tol = *cfg.tol.get_or_insert(1e-8);
    let tol_kind = *cfg.tol_kind.get_or_insert(TolKind::Relative);
    let init = *cfg.init.get_or_insert(InitKind::Ones);
    let restarts = *cfg.restarts.get_or_insert(1);
    ensure!(restarts >= 1, "restarts must be at least 1");

    let (rows, cols) = a.dims();
    let mask = SupportMask::new(rows, cols, shape.into(), size)?;
    let p = HioParams64 {
        beta: Beta::Scalar(beta),
        max_iter,
        tol: tolerance(tol, tol_kind),
        init: match init {
            InitKind::Ones => Init::AllOnes,
            InitKind::Random => Init::Random { seed },
        },
        seed,
    };
    let res = multistart(&a, &mask, &p, restarts)?;

    prepare_out(&out)?;
    write_field_checked(&out.join("recon.cfld"), &res.z)?;
    write_json(
        &out.join("recon.json"),
        &json!({
            "iterations": res.iterations,
            "converged": res.converged,
            "final_s": res.final_s(),
            "s_trace": res.s_trace,
            "restarts": restarts,
            "params": p.echo(),
        }),
    )?;
    let extent = mask.reflection_sums().0 + 1;
    let g1 = block(&res.z, extent, extent);
    save_png_linear(out.join("recon_real.png"), &g1.re())?;
    save_png_linear(out.join("recon_imag.png"), &g1.im())?;
    save_png_linear(out.join("recon_phase.png"), &g1.arg())?;

    if let Some(truth_path) = &cfg.truth {
        let t = load_field_at(truth_path)?;
        let truth = if t.dims() == (rows, cols) {
            t
        } else {
            ensure!(
                t.rows() <= rows && t.cols() <= cols,
                "truth {}x{} does not fit the {rows}x{cols} grid",
                t.rows(),
                t.cols()
            );
            Grid::from_fn(rows, cols, |i, j| if i < t.rows() && j < t.cols() { t[(i, j)] } else { Complex::new(0.0, 0.0) })
        };
        let rep = align_and_error(&res.z, &truth, &mask)?;
        write_json(&out.join("alignment.json"), &serde_json::to_value(rep)?)?;
    }
    write_echo(&out, "reconstruct", &cfg)?;
    Ok(())
}

pub fn sweep(mut cfg: SweepConfig) -> Result<()> {
    let seed = cfg.seed();
    let out = cfg.out_dir();
    let a = load_measurement_at(&required(&cfg.measurement, "measurement")?)?;
    let sizes = required(&cfg.sizes, "sizes")?;
    let shape = *cfg.shape.get_or_insert(Shape::Square);
    let runs = *cfg.runs.get_or_insert(5);
    let beta = *cfg.beta.get_or_insert(0.9);
    let max_iter = *cfg.max_iter.get_or_insert(1000);
    let tol = *cfg.tol.get_or_insert(1e-8);
    let tol_kind = *cfg.tol_kind.get_or_insert(TolKind::Relative);

    let (rows, cols) = a.dims();
    let sc = sampling(rows, cols, 1)?;
    let p = HioParams64 {
        beta: Beta::Scalar(beta),
        max_iter,
        tol: tolerance(tol, tol_kind),
        init: Init::AllOnes,
        seed,
    };
    let rep = support_sweep(&a, &sc, shape.into(), &sizes, &p, runs)?;

    prepare_out(&out)?;
    let csv = out.join("sweep.csv");
    std::fs::write(&csv, rep.to_csv()).with_context(|| format!("writing {}", csv.display()))?;
    write_json(&out.join("sweep.json"), &serde_json::to_value(&rep)?)?;
    write_echo(&out, "sweep", &cfg)?;
    Ok(())
}

pub fn mix(mut cfg: MixConfig) -> Result<()> {
    let seed = cfg.seed();
    let out = cfg.out_dir();
    let o1 = load_field_at(&required(&cfg.o1, "o1")?)?;
    let o2 = match &cfg.o2 {
        Some(p) => load_field_at(p)?,
        None => Field64::ones(o1.rows(), o1.cols()),
    };
    ensure!(o1.dims() == o2.dims(), "o1 is {:?} but o2 is {:?}", o1.dims(), o2.dims());
    let r = *cfg.r.get_or_insert(1);
    let rnoi = *cfg.rnoi.get_or_insert(0.0);
    let anoi = *cfg.anoi.get_or_insert(0.0);

    let sc = sampling(o1.rows(), o1.cols(), r)?;
    let clean = Measurement::from_field(&hft_forward(&o1, &sc)?);
    let a = add_noise(&clean, &NoiseParams::new(rnoi, anoi, seed)?);
    let mixed = phase_mix_measured(&a, &o2, &sc)?;

    prepare_out(&out)?;
    write_field_checked(&out.join("mix.cfld"), &mixed)?;
    save_png_linear(out.join("mix_imag.png"), &block(&mixed, o1.rows(), o1.cols()).im())?;
    write_echo(&out, "mix", &cfg)?;
    Ok(())
}

fn load_frame(path: &Path) -> Result<Grid<f64>> {
    let is_png = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    if is_png {
        load_png_gray(path).with_context(|| format!("reading frame {}", path.display()))
    } else {
        Ok(load_measurement_at(path)?.into_grid())
    }
}

fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn ingest(mut cfg: IngestRunConfig) -> Result<()> {
    cfg.seed();
    let out = cfg.out_dir();
    let frames: Vec<PathBuf> = required(&cfg.frames, "frames")?;
    ensure!(!frames.is_empty(), "no frames given");
    let scales = cfg.scales.get_or_insert_with(|| vec![1.0; frames.len()]).clone();
    ensure!(
        scales.len() == frames.len(),
        "{} scales for {} frames",
        scales.len(),
        frames.len()
    );
    let saturation = *cfg.saturation.get_or_insert(65535.0);
    let frame_bg = *cfg.frame_background.get_or_insert(0.0);
    let bin = *cfg.bin.get_or_insert(1);
    let despeckle = *cfg.despeckle.get_or_insert(3.0);
    let background = *cfg.background.get_or_insert(0.0);
    let recenter = *cfg.recenter.get_or_insert(true);
    let intensity = *cfg.intensity.get_or_insert(true);
    let target = match &cfg.target {
        None => None,
        Some(t) if t.len() == 2 => Some((t[0], t[1])),
        Some(t) => bail!("target needs rows,cols; got {t:?}"),
    };
    let crop = match &cfg.crop {
        None => None,
        Some(c) if c.len() == 4 => Some(CropWindow {
            row: c[0],
            col: c[1],
            rows: c[2],
            cols: c[3],
        }),
        Some(c) => bail!("crop needs row,col,rows,cols; got {c:?}"),
    };

    let grids = frames.iter().map(|p| load_frame(p)).collect::<Result<Vec<_>>>()?;
    let (merged, invalid) = if grids.len() == 1 && scales[0] == 1.0 && frame_bg == 0.0 {
        (grids.into_iter().next().expect("one frame"), 0)
    } else {
        let raw = grids
            .into_iter()
            .zip(&scales)
            .map(|(g, &s)| RawFrame::new(g, saturation, s, frame_bg))
            .collect::<hft_core::Result<Vec<_>>>()?;
        let hdr = hdr_compose(&raw)?;
        let invalid = hdr.valid.as_slice().iter().filter(|v| !**v).count();
        (hdr.values, invalid)
    };

    let icfg = IngestConfig {
        bin_factor: bin,
        crop,
        target,
        despeckle_threshold: (despeckle > 0.0).then_some(despeckle),
        background_level: background,
        recenter,
        counts_are_intensity: intensity,
    };
    let (m, prov) = to_measurement(&merged, &icfg)?;

    prepare_out(&out)?;
    write_measurement_checked(&out.join("measurement.mag"), &m)?;
    let frame_info = frames
        .iter()
        .zip(&scales)
        .map(|(p, s)| Ok(json!({ "path": p, "sha256": file_digest(p)?, "scale": s })))
        .collect::<Result<Vec<_>>>()?;
    write_json(
        &out.join("provenance.json"),
        &json!({
            "frames": frame_info,
            "saturation": saturation,
            "frame_background": frame_bg,
            "hdr_invalid_pixels": invalid,
            "pipeline": prov,
        }),
    )?;
    write_echo(&out, "ingest", &cfg)?;
    Ok(())
}
