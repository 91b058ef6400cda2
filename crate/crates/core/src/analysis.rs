//! Twin-solution handling, reconstruction scoring, phase mixing and support-size sweeps.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, invalid, Result};
use crate::field::{ComplexField, Grid, Measurement, SamplingConfig};
use crate::hio::{hio_run, restart_params, HioParams, MaskShape, SupportMask};
use crate::scalar::Real;
use crate::transform::{embed, unit_phase, Fft2};

/// Conjugate twin on the padded grid: `conj(z(-n1 mod M1, -n2 mod M2))`.
///
/// Shares the transform magnitude of `z`. Applying it twice is the identity.
pub fn twin<T: Real>(z: &ComplexField<T>) -> ComplexField<T> {
    let (m1, m2) = z.dims();
    Grid::from_fn(m1, m2, |i, j| z[((m1 - i) % m1, (m2 - j) % m2)].conj())
}

/// Conjugate twin reflected about the center of `G1`, so a field supported on `G1`
/// stays on `G1`. This is [`twin`] followed by a circular shift, so it also
/// preserves the transform magnitude.
pub fn twin_in_support<T: Real>(z: &ComplexField<T>, mask: &SupportMask) -> Result<ComplexField<T>> {
    check_dims(mask.dims(), z.dims())?;
    let (m1, m2) = z.dims();
    let (s1, s2) = mask.reflection_sums();
    Ok(Grid::from_fn(m1, m2, |i, j| {
        z[((s1 + m1 - i % m1) % m1, (s2 + m2 - j % m2) % m2)].conj()
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    /// The conjugate twin matched better than the field itself.
    pub flipped: bool,
    /// Global phase of the chosen candidate relative to `truth`, in `(-pi, pi]`;
    /// the candidate is aligned by multiplying with `exp(-i global_phase)`.
    pub global_phase: f64,
    pub rel_error: f64,
}

/// Scores `recon` against `truth` on `G1`, modulo the twin ambiguity and a global phase.
///
/// Candidates are `recon`, its twin about the origin, its twin about the center of
/// `G1`, and the composition of the two twins (a shift by the `G1` extent). The set is
/// closed under [`twin`], so the score does not change if `recon` is twinned first.
/// For each candidate the best global phase is `arg <truth, candidate>`.
pub fn align_and_error<T: Real>(
    recon: &ComplexField<T>,
    truth: &ComplexField<T>,
    mask: &SupportMask,
) -> Result<AlignmentReport> {
    check_dims(truth.dims(), recon.dims())?;
    check_dims(mask.dims(), recon.dims())?;
    let members = mask.members();
    let truth_norm = truth
        .as_slice()
        .iter()
        .zip(members)
        .filter(|(_, &m)| m)
        .map(|(v, _)| v.norm_sqr().as_f64())
        .sum::<f64>()
        .sqrt();
    if truth_norm == 0.0 {
        return Err(invalid("ground truth has zero norm on G1"));
    }

    let twinned = twin(recon);
    let reflected = twin_in_support(recon, mask)?;
    let shifted = twin_in_support(&twinned, mask)?;
    let candidates = [
        (false, recon),
        (false, &shifted),
        (true, &twinned),
        (true, &reflected),
    ];

    let mut best: Option<AlignmentReport> = None;
    for (flipped, cand) in candidates {
        let (phase, err) = phase_fit(cand.as_slice(), truth.as_slice(), members);
        let phase = if phase == std::f64::consts::PI { phase } else { -phase };
        let report = AlignmentReport {
            flipped,
            global_phase: phase,
            rel_error: err / truth_norm,
        };
        if best.is_none_or(|b| report.rel_error < b.rel_error) {
            best = Some(report);
        }
    }
    Ok(best.expect("four candidates"))
}

/// Returns `(phi, || e^{i phi} cand - truth ||)` over `G1` with the optimal `phi`.
fn phase_fit<T: Real>(cand: &[Complex<T>], truth: &[Complex<T>], members: &[bool]) -> (f64, f64) {
    let mut inner = Complex::new(0.0, 0.0);
    for ((c, t), &m) in cand.iter().zip(truth).zip(members) {
        if m {
            let c = Complex::new(c.re.as_f64(), c.im.as_f64());
            let t = Complex::new(t.re.as_f64(), t.im.as_f64());
            inner += c.conj() * t;
        }
    }
    let phi = if inner.norm() == 0.0 { 0.0 } else { inner.arg() };
    let rot = Complex::from_polar(1.0, phi);
    let err = cand
        .iter()
        .zip(truth)
        .zip(members)
        .filter(|(_, &m)| m)
        .map(|((c, t), _)| {
            let c = Complex::new(c.re.as_f64(), c.im.as_f64());
            let t = Complex::new(t.re.as_f64(), t.im.as_f64());
            (c * rot - t).norm_sqr()
        })
        .sum::<f64>()
        .sqrt();
    (phi, err)
}

/// Inverse transform of `|HFT(o1)| * HFT(o2) / |HFT(o2)|` on the padded grid.
pub fn phase_mix<T: Real>(
    o1: &ComplexField<T>,
    o2: &ComplexField<T>,
    cfg: &SamplingConfig,
) -> Result<ComplexField<T>> {
    let (m1, m2) = cfg.padded_dims();
    let mut fft = Fft2::new(m1, m2);
    let mut f1 = embed(o1, cfg)?;
    let mut f2 = embed(o2, cfg)?;
    fft.forward(f1.as_mut_slice());
    fft.forward(f2.as_mut_slice());
    let magnitude = Measurement::from_field(&f1);
    phase_mix_measured(&magnitude, o2, cfg)
}

/// [`phase_mix`] with the magnitude supplied directly, e.g. a noisy `|HFT(o1)|`.
pub fn phase_mix_measured<T: Real>(
    magnitude: &Measurement<T>,
    o2: &ComplexField<T>,
    cfg: &SamplingConfig,
) -> Result<ComplexField<T>> {
    check_dims(cfg.padded_dims(), magnitude.dims())?;
    let (m1, m2) = cfg.padded_dims();
    let mut fft = Fft2::new(m1, m2);
    let mut mixed = embed(o2, cfg)?;
    fft.forward(mixed.as_mut_slice());
    for (f, &a) in mixed.as_mut_slice().iter_mut().zip(magnitude.as_slice()) {
        *f = unit_phase(*f) * a;
    }
    fft.inverse(mixed.as_mut_slice());
    Ok(mixed)
}

/// Pearson correlation between `|imag(mixed)|` on the object block and the indicator
/// of `shape` united with its reflection through the block center.
///
/// `shape` has object dims; its reflection is where the conjugate solution puts it.
pub fn shape_emergence<T: Real>(
    mixed: &ComplexField<T>,
    shape: &Grid<bool>,
    cfg: &SamplingConfig,
) -> Result<f64> {
    check_dims(cfg.padded_dims(), mixed.dims())?;
    check_dims(cfg.object_dims(), shape.dims())?;
    let (n1, n2) = cfg.object_dims();
    let union = Grid::from_fn(n1, n2, |i, j| shape[(i, j)] || shape[(n1 - 1 - i, n2 - 1 - j)]);
    let xs: Vec<f64> = (0..n1)
        .flat_map(|i| (0..n2).map(move |j| (i, j)))
        .map(|(i, j)| mixed[(i, j)].im.abs().as_f64())
        .collect();
    let ys: Vec<f64> = union.as_slice().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    Ok(pearson(&xs, &ys))
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub sizes: Vec<usize>,
    /// Mean of `log10(final S)` per size.
    pub mean_log_s: Vec<f64>,
    pub runs_per_size: usize,
    /// Final `S` of every run, `[size][run]`.
    pub final_s: Vec<Vec<f64>>,
}

impl SweepReport {
    /// CSV with header `size,mean_log_S,runs`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("size,mean_log_S,runs\n");
        for (size, m) in self.sizes.iter().zip(&self.mean_log_s) {
            out.push_str(&format!("{size},{m},{}\n", self.runs_per_size));
        }
        out
    }
}

/// Runs HIO `runs_per_size` times for every candidate `G1` size and averages `log10 S`.
///
/// Run `i` uses [`restart_params`]`(p, i)`, so run 0 is `p` itself and the rest start
/// from random fields seeded off `p.seed`. `S = 0` is floored at the smallest normal
/// `f64` before taking the logarithm.
pub fn support_sweep<T: Real>(
    a: &Measurement<T>,
    cfg: &SamplingConfig,
    shape: MaskShape,
    sizes: &[usize],
    p: &HioParams<T>,
    runs_per_size: usize,
) -> Result<SweepReport> {
    if runs_per_size == 0 {
        return Err(invalid("runs_per_size must be >= 1"));
    }
    if sizes.is_empty() {
        return Err(invalid("no support sizes to sweep"));
    }
    check_dims(cfg.padded_dims(), a.dims())?;
    let masks = sizes
        .iter()
        .map(|&s| SupportMask::new(cfg.padded_dims().0, cfg.padded_dims().1, shape, s))
        .collect::<Result<Vec<_>>>()?;

    let jobs: Vec<(usize, usize)> = (0..sizes.len())
        .flat_map(|k| (0..runs_per_size).map(move |run| (k, run)))
        .collect();
    let finals: Vec<f64> = jobs
        .par_iter()
        .map(|&(k, run)| hio_run(a, &masks[k], &restart_params(p, run)).map(|r| r.final_s().as_f64()))
        .collect::<Result<_>>()?;

    let final_s: Vec<Vec<f64>> = finals.chunks(runs_per_size).map(|c| c.to_vec()).collect();
    let mean_log_s = final_s
        .iter()
        .map(|runs| {
            runs.iter().map(|s| s.max(f64::MIN_POSITIVE).log10()).sum::<f64>() / runs.len() as f64
        })
        .collect();
    Ok(SweepReport {
        sizes: sizes.to_vec(),
        mean_log_s,
        runs_per_size,
        final_s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hio::make_mask;
    use crate::transform::hft_forward;

    fn field(rows: usize, cols: usize, seed: u64) -> ComplexField<f64> {
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        Grid::from_fn(rows, cols, |_, _| Complex::new(next(), next()))
    }

    #[test]
    fn twin_is_involution_and_isometry() {
        let z = field(5, 7, 1);
        assert_eq!(twin(&twin(&z)), z);
        // Same multiset of moduli; only the summation order differs.
        let sorted = |f: &ComplexField<f64>| {
            let mut v: Vec<f64> = f.as_slice().iter().map(|c| c.norm_sqr()).collect();
            v.sort_by(f64::total_cmp);
            v
        };
        assert_eq!(sorted(&twin(&z)), sorted(&z));
    }

    #[test]
    fn twin_fixes_real_origin_delta() {
        let mut z = ComplexField::<f64>::zeros(4, 4);
        z[(0, 0)] = Complex::new(2.5, 0.0);
        assert_eq!(twin(&z), z);
    }

    #[test]
    fn support_twin_stays_in_g1() {
        let cfg = SamplingConfig::new(3, 3, 3).unwrap();
        let mask = make_mask(&cfg, MaskShape::Square, 3).unwrap();
        let z = embed(&field(3, 3, 4), &cfg).unwrap();
        let t = twin_in_support(&z, &mask).unwrap();
        assert_eq!(t[(0, 0)], z[(2, 2)].conj());
        assert_eq!(t[(2, 1)], z[(0, 1)].conj());
        assert_eq!(crate::hio::compute_s(&t, &mask).unwrap(), 0.0);
        let fz = crate::transform::fft2(&z).abs();
        let ft = crate::transform::fft2(&t).abs();
        for (x, y) in fz.as_slice().iter().zip(ft.as_slice()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn align_identity_twin_and_phase() {
        let cfg = SamplingConfig::new(4, 4, 2).unwrap();
        let mask = make_mask(&cfg, MaskShape::Square, 4).unwrap();
        let truth = embed(&field(4, 4, 9), &cfg).unwrap();

        let r = align_and_error(&truth, &truth, &mask).unwrap();
        assert!(!r.flipped);
        assert_eq!(r.rel_error, 0.0);

        let r = align_and_error(&twin(&truth), &truth, &mask).unwrap();
        assert!(r.flipped);
        assert!(r.rel_error < 1e-15);

        let r = align_and_error(&twin_in_support(&truth, &mask).unwrap(), &truth, &mask).unwrap();
        assert!(r.flipped);
        assert!(r.rel_error < 1e-15);

        let rot = Complex::from_polar(1.0, std::f64::consts::FRAC_PI_3);
        let r = align_and_error(&truth.scale(rot), &truth, &mask).unwrap();
        assert!(!r.flipped);
        assert!(r.rel_error <= 1e-12);
        assert!((r.global_phase - std::f64::consts::FRAC_PI_3).abs() < 1e-12);
    }

    #[test]
    fn align_rejects_zero_truth() {
        let mask = SupportMask::new(4, 4, MaskShape::Square, 2).unwrap();
        let z = ComplexField::<f64>::zeros(4, 4);
        assert!(align_and_error(&field(4, 4, 1), &z, &mask).is_err());
        assert!(align_and_error(&field(4, 4, 1), &field(4, 3, 1), &mask).is_err());
    }

    #[test]
    fn mix_with_itself_recovers_embedding() {
        let cfg = SamplingConfig::new(5, 4, 3).unwrap();
        let o = field(5, 4, 11);
        let mixed = phase_mix(&o, &o, &cfg).unwrap();
        assert!(mixed.max_abs_diff(&embed(&o, &cfg).unwrap()).unwrap() < 1e-10);
    }

    #[test]
    fn mix_preserves_magnitude() {
        let cfg = SamplingConfig::new(4, 4, 2).unwrap();
        let o1 = field(4, 4, 2);
        let o2 = ComplexField::ones(4, 4);
        let mixed = phase_mix(&o1, &o2, &cfg).unwrap();
        let want = hft_forward(&o1, &cfg).unwrap().abs();
        let got = crate::transform::fft2(&mixed).abs();
        for (x, y) in want.as_slice().iter().zip(got.as_slice()) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn mix_keeps_magnitude_of_real_symmetric_object() {
        // o1 = ones + 8 delta has the strictly positive spectrum 8 + 9 delta. Mixing with a
        // field whose spectrum is also real and positive hands back o1 unchanged at r = 1.
        let cfg = SamplingConfig::new(3, 3, 1).unwrap();
        let o1 = ComplexField::from_fn(3, 3, |i, j| {
            Complex::new(if i == 0 && j == 0 { 9.0 } else { 1.0 }, 0.0)
        });
        let o2 = ComplexField::from_fn(3, 3, |i, j| {
            Complex::new(if i == 0 && j == 0 { 2.0 } else { 0.0 }, 0.0)
        });
        let mixed = phase_mix(&o1, &o2, &cfg).unwrap();
        assert!(mixed.max_abs_diff(&o1).unwrap() < 1e-12);
    }

    #[test]
    fn mix_rejects_mismatch() {
        let cfg = SamplingConfig::new(3, 3, 2).unwrap();
        assert!(phase_mix(&field(3, 3, 1), &field(3, 2, 1), &cfg).is_err());
    }

    #[test]
    fn sweep_single_run_matches_hio() {
        let cfg = SamplingConfig::new(4, 4, 3).unwrap();
        let a = Measurement::from_field(&hft_forward(&field(4, 4, 5), &cfg).unwrap());
        let p = HioParams::<f64> {
            max_iter: 50,
            ..HioParams::default()
        };
        let rep = support_sweep(&a, &cfg, MaskShape::Square, &[3, 4], &p, 1).unwrap();
        let mask = make_mask(&cfg, MaskShape::Square, 4).unwrap();
        let single = hio_run(&a, &mask, &p).unwrap();
        assert_eq!(rep.final_s[1][0], single.final_s());
        assert_eq!(rep.mean_log_s[1], single.final_s().max(f64::MIN_POSITIVE).log10());
        assert_eq!(rep.to_csv().lines().count(), 3);
        assert!(support_sweep(&a, &cfg, MaskShape::Square, &[3], &p, 0).is_err());
        assert!(support_sweep(&a, &cfg, MaskShape::Square, &[12], &p, 1).is_err());
    }

    #[test]
    fn sweep_near_full_grid_is_tiny() {
        let cfg = SamplingConfig::new(3, 3, 2).unwrap();
        let a = Measurement::from_field(&hft_forward(&field(3, 3, 8), &cfg).unwrap());
        let p = HioParams::<f64> {
            max_iter: 200,
            ..HioParams::default()
        };
        let rep = support_sweep(&a, &cfg, MaskShape::Square, &[5], &p, 1).unwrap();
        // G2 is the outer L of an almost-unconstrained 6x6 grid.
        assert!(rep.final_s[0][0] <= 1e-8 * a.energy());
    }
}
