//! Phase retrieval from a single high-density Fraunhofer magnitude pattern.
//!
//! The object is zero-padded `r` times per axis, so the measured magnitudes are
//! samples of its spectrum at spacing `1/r` of the orthogonal grid. The padding
//! becomes a zero zone that the HIO solver drives to zero energy; no reality or
//! positivity constraint is placed on the object.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the double-precision types used by the file formats and the CLI.

pub mod analysis;
pub mod error;
pub mod field;
pub mod hio;
pub mod ingest;
pub mod io;
pub mod noise;
pub mod overlap;
pub mod scalar;
pub mod transform;

pub use analysis::{
    align_and_error, phase_mix, shape_emergence, support_sweep, twin, twin_in_support,
    AlignmentReport, SweepReport,
};
pub use error::{Error, Result};
pub use field::{ComplexField, Grid, Measurement, SamplingConfig};
pub use hio::{
    compute_s, hio_run, make_mask, multistart, Beta, HioParams, Init, MaskShape, ReconResult,
    SupportMask, Tolerance,
};
pub use ingest::{bin_average, despeckle, hdr_compose, to_measurement, IngestConfig, RawFrame};
pub use noise::{add_noise, NoiseParams};
pub use overlap::{coeff_ratio, inner_product, inner_product_general, sinc, NormalizedFrequencyOffset};
pub use scalar::Real;
pub use transform::{embed, extract, fft2, hft_forward, hft_inverse, ifft2, Fft2};

pub type Field64 = ComplexField<f64>;
pub type Field32 = ComplexField<f32>;
pub type Measurement64 = Measurement<f64>;
pub type Measurement32 = Measurement<f32>;
pub type HioParams64 = HioParams<f64>;
pub type ReconResult64 = ReconResult<f64>;
pub type Offset64 = NormalizedFrequencyOffset<f64>;
