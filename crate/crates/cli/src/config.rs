//! Run configurations: one TOML key-value file per run, overridden by flags.
//!
//! Every field is optional on input. Commands fill in defaults as they resolve
//! values, and the filled-in struct is what gets echoed next to the outputs, so
//! the echo can be passed back as `--config` to repeat the run.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Square,
    Circle,
}

impl From<Shape> for hft_core::MaskShape {
    fn from(s: Shape) -> Self {
        match s {
            Shape::Square => hft_core::MaskShape::Square,
            Shape::Circle => hft_core::MaskShape::Circle,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TolKind {
    /// `tol` is multiplied by the measured energy `sum a^2`.
    Relative,
    Absolute,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    Ones,
    Random,
}

/// TOML integers are signed 64-bit, so seeds above `i64::MAX` are written as strings.
mod seed_repr {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<u64>, s: S) -> Result<S::Ok, S::Error> {
        match *v {
            Some(x) if x <= i64::MAX as u64 => s.serialize_i64(x as i64),
            Some(x) => s.serialize_str(&x.to_string()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<u64>, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(u64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Int(v) => Ok(Some(v)),
            Repr::Str(s) => s.parse().map(Some).map_err(D::Error::custom),
        }
    }
}

macro_rules! run_config {
    ($(#[$m:meta])* $name:ident { $( $(#[$fm:meta])* $field:ident : $ty:ty ),* $(,)? }) => {
        $(#[$m])*
        #[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct $name {
            /// TOML key-value file; flags override its values.
            #[arg(long)]
            #[serde(skip)]
            pub config: Option<PathBuf>,
            /// Master seed [default: 0].
            #[arg(long)]
            #[serde(default, skip_serializing_if = "Option::is_none", with = "seed_repr")]
            pub seed: Option<u64>,
            /// Output directory [default: .].
            #[arg(long)]
            #[serde(default, skip_serializing_if = "Option::is_none")]
            pub out: Option<PathBuf>,
            $(
                $(#[$fm])*
                #[arg(long)]
                #[serde(default, skip_serializing_if = "Option::is_none")]
                pub $field: Option<$ty>,
            )*
        }

        impl $name {
            /// Values from `--config`, overridden by any flag given on the command line.
            pub fn layered(self) -> Result<Self> {
                let mut base = match &self.config {
                    Some(p) => read_toml::<Self>(p)?,
                    None => Self::default(),
                };
                if self.seed.is_some() {
                    base.seed = self.seed;
                }
                if self.out.is_some() {
                    base.out = self.out.clone();
                }
                $(
                    if self.$field.is_some() {
                        base.$field = self.$field.clone();
                    }
                )*
                Ok(base)
            }

            pub fn seed(&mut self) -> u64 {
                *self.seed.get_or_insert(0)
            }

            pub fn out_dir(&mut self) -> PathBuf {
                self.out.get_or_insert_with(|| PathBuf::from(".")).clone()
            }
        }
    };
}

fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

/// Writes the resolved configuration as `<dir>/<name>.toml` and checks that it parses back.
pub fn write_echo<T>(dir: &Path, name: &str, cfg: &T) -> Result<PathBuf>
where
    T: Serialize + for<'de> Deserialize<'de> + PartialEq,
{
    let text = toml::to_string(cfg).context("serializing config echo")?;
    let back: T = toml::from_str(&text).context("config echo does not parse")?;
    anyhow::ensure!(&back == cfg, "config echo does not round-trip");
    let path = dir.join(format!("{name}.toml"));
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

run_config! {
    /// Forward model plus detector noise.
    SimulateConfig {
        /// Object field (CFLD).
        object: PathBuf,
        /// Oversampling factor per axis [default: 1].
        r: usize,
        /// Relative noise level [default: 0].
        rnoi: f64,
        /// Absolute noise level [default: 0].
        anoi: f64,
    }
}

run_config! {
    /// HIO reconstruction from a magnitude measurement.
    ReconstructConfig {
        /// Measured magnitude (MAG1), zero frequency at index (0, 0).
        measurement: PathBuf,
        /// Support size: side for a square, radius for a circle.
        support: usize,
        #[arg(value_enum)]
        shape: Shape,
        /// Feedback factor [default: 0.9].
        beta: f64,
        /// Iteration budget [default: 1000].
        max_iter: usize,
        /// Stopping threshold on S [default: 1e-8].
        tol: f64,
        #[arg(value_enum)]
        tol_kind: TolKind,
        /// Initial field for the first restart [default: ones].
        #[arg(value_enum)]
        init: InitKind,
        /// Independent runs; the lowest final S wins [default: 1].
        restarts: usize,
        /// Ground truth (CFLD), object-sized or padded, for scoring.
        truth: PathBuf,
    }
}

run_config! {
    /// Averaged log S over a range of support sizes.
    SweepConfig {
        measurement: PathBuf,
        /// Comma-separated support sizes.
        #[arg(value_delimiter = ',')]
        sizes: Vec<usize>,
        #[arg(value_enum)]
        shape: Shape,
        /// Runs per size [default: 5].
        runs: usize,
        beta: f64,
        max_iter: usize,
        tol: f64,
        #[arg(value_enum)]
        tol_kind: TolKind,
    }
}

run_config! {
    /// Magnitude of one object combined with the phase of another.
    MixConfig {
        /// Object supplying the magnitude (CFLD).
        o1: PathBuf,
        /// Object supplying the phase (CFLD) [default: all ones].
        o2: PathBuf,
        r: usize,
        /// Noise added to the magnitude of `o1` [default: 0].
        rnoi: f64,
        anoi: f64,
    }
}

run_config! {
    /// Camera frames to a measurement.
    IngestRunConfig {
        /// Comma-separated frame files (8/16-bit grayscale PNG or MAG1).
        #[arg(value_delimiter = ',')]
        frames: Vec<PathBuf>,
        /// Exposure scale per frame, e.g. 10^OD [default: 1 for each].
        #[arg(value_delimiter = ',')]
        scales: Vec<f64>,
        /// Saturation level in raw counts [default: 65535].
        saturation: f64,
        /// Per-frame background in raw counts used by the HDR merge [default: 0].
        frame_background: f64,
        /// Binning factor [default: 1].
        bin: usize,
        /// Output rows,cols after binning; the frame is center-cropped to fit.
        #[arg(value_delimiter = ',')]
        target: Vec<usize>,
        /// Crop window row,col,rows,cols.
        #[arg(value_delimiter = ',')]
        crop: Vec<usize>,
        /// Spike ratio against the neighbour median; 0 disables [default: 3].
        despeckle: f64,
        /// Background subtracted from the merged image [default: 0].
        background: f64,
        /// Move the frame center to index (0, 0) [default: true].
        recenter: bool,
        /// Counts are intensities; output their square root [default: true].
        intensity: bool,
    }
}
