//! Image container, the JSON-header + raw f32 payload file pair, and PGM rendering.
//!
//! Images are held in memory as `f64` and stored on disk as little-endian
//! `f32`, row-major (y outer, x inner), with no padding. A file pair is
//! `<name>.json` + `<name>.bin`; either path may be passed to [`read_image`]
//! and [`write_image`].

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;
pub const DTYPE: &str = "f32le";
pub const LAYOUT: &str = "row-major";

#[derive(Debug, Error)]
pub enum GridError {
    #[error("missing file: {0}")]
    MissingFile(PathBuf),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("payload size mismatch: expected {expected} bytes, found {found}")]
    PayloadSizeMismatch { expected: usize, found: usize },
    #[error("non-finite or out-of-domain value at index {index} for {kind} image")]
    NonFiniteValue { index: usize, kind: ImageKind },
    #[error("data length {len} does not match {width}x{height}")]
    ShapeMismatch {
        width: usize,
        height: usize,
        len: usize,
    },
    #[error("image dimensions must be positive")]
    EmptyImage,
    #[error("degenerate render range: lo={lo} hi={hi}")]
    DegenerateRange { lo: f64, hi: f64 },
    #[error("i/o failure on {path}: {source}")]
    IoFailure { path: PathBuf, source: io::Error },
}

/// What the samples of an [`Image2D`] represent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ImageKind {
    RF,
    Envelope,
    MuMap,
    OmegaMap,
    ScaleMap,
    /// Per-voxel goodness-of-fit (CDF RMSE) of the selected window.
    FitMap,
    Label,
}

impl ImageKind {
    /// Kinds whose values must be nonnegative.
    pub fn is_nonnegative(self) -> bool {
        !matches!(self, ImageKind::RF)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ImageKind::RF => "RF",
            ImageKind::Envelope => "Envelope",
            ImageKind::MuMap => "MuMap",
            ImageKind::OmegaMap => "OmegaMap",
            ImageKind::ScaleMap => "ScaleMap",
            ImageKind::FitMap => "FitMap",
            ImageKind::Label => "Label",
        }
    }
}

impl fmt::Display for ImageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ImageKind {
    type Err = GridError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "RF" => ImageKind::RF,
            "Envelope" => ImageKind::Envelope,
            "MuMap" => ImageKind::MuMap,
            "OmegaMap" => ImageKind::OmegaMap,
            "ScaleMap" => ImageKind::ScaleMap,
            "FitMap" => ImageKind::FitMap,
            "Label" => ImageKind::Label,
            other => {
                return Err(GridError::MalformedHeader(format!(
                    "unknown kind {other:?}"
                )))
            }
        })
    }
}

/// Row-major 2D grid of real samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Image2D {
    width: usize,
    height: usize,
    kind: ImageKind,
    data: Vec<f64>,
}

impl Image2D {
    pub fn new(
        width: usize,
        height: usize,
        kind: ImageKind,
        data: Vec<f64>,
    ) -> Result<Self, GridError> {
        if width == 0 || height == 0 {
            return Err(GridError::EmptyImage);
        }
        if data.len() != width * height {
            return Err(GridError::ShapeMismatch {
                width,
                height,
                len: data.len(),
            });
        }
        validate_values(kind, &data)?;
        Ok(Self {
            width,
            height,
            kind,
            data,
        })
    }

    pub fn filled(
        width: usize,
        height: usize,
        kind: ImageKind,
        value: f64,
    ) -> Result<Self, GridError> {
        Self::new(width, height, kind, vec![value; width * height])
    }

    /// Builds an image by evaluating `f(x, y)` in row-major order.
    pub fn from_fn(
        width: usize,
        height: usize,
        kind: ImageKind,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self, GridError> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, kind, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn kind(&self) -> ImageKind {
        self.kind
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn same_shape(&self, other: &Image2D) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Re-tags the data with another kind, re-checking the value invariants.
    pub fn with_kind(self, kind: ImageKind) -> Result<Self, GridError> {
        Self::new(self.width, self.height, kind, self.data)
    }

    /// Elementwise map that keeps dimensions and kind.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self, GridError> {
        Self::new(
            self.width,
            self.height,
            self.kind,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }
}

fn validate_values(kind: ImageKind, data: &[f64]) -> Result<(), GridError> {
    let nonneg = kind.is_nonnegative();
    match data
        .iter()
        .position(|&v| !v.is_finite() || (nonneg && v < 0.0))
    {
        Some(index) => Err(GridError::NonFiniteValue { index, kind }),
        None => Ok(()),
    }
}

/// Header stored next to the raw payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageHeader {
    pub version: u32,
    pub width: usize,
    pub height: usize,
    pub kind: ImageKind,
    pub dtype: String,
    pub layout: String,
}

impl ImageHeader {
    pub fn for_image(img: &Image2D) -> Self {
        Self {
            version: FORMAT_VERSION,
            width: img.width,
            height: img.height,
            kind: img.kind,
            dtype: DTYPE.to_string(),
            layout: LAYOUT.to_string(),
        }
    }

    fn validate(&self) -> Result<(), GridError> {
        if self.version != FORMAT_VERSION {
            return Err(GridError::MalformedHeader(format!(
                "unsupported version {}",
                self.version
            )));
        }
        if self.dtype != DTYPE {
            return Err(GridError::MalformedHeader(format!(
                "unsupported dtype {:?}",
                self.dtype
            )));
        }
        if self.layout != LAYOUT {
            return Err(GridError::MalformedHeader(format!(
                "unsupported layout {:?}",
                self.layout
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(GridError::MalformedHeader("zero dimension".into()));
        }
        Ok(())
    }
}

/// Resolves `(header.json, payload.bin)` from either member of the pair.
pub fn pair_paths(path: &Path) -> (PathBuf, PathBuf) {
    (path.with_extension("json"), path.with_extension("bin"))
}

/// Encodes samples as little-endian f32.
pub fn encode_payload(data: &[f64]) -> Vec<u8> {
    data.iter()
        .flat_map(|&v| (v as f32).to_le_bytes())
        .collect()
}

pub fn decode_payload(bytes: &[u8]) -> Vec<f64> {
    bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect()
}

pub fn read_image(path: impl AsRef<Path>) -> Result<Image2D, GridError> {
    let (header_path, payload_path) = pair_paths(path.as_ref());
    let header_text = read_existing(&header_path)?;
    let header: ImageHeader = serde_json::from_slice(&header_text)
        .map_err(|e| GridError::MalformedHeader(e.to_string()))?;
    header.validate()?;
    let payload = read_existing(&payload_path)?;
    let expected = 4 * header.width * header.height;
    if payload.len() != expected {
        return Err(GridError::PayloadSizeMismatch {
            expected,
            found: payload.len(),
        });
    }
    Image2D::new(
        header.width,
        header.height,
        header.kind,
        decode_payload(&payload),
    )
}

fn read_existing(path: &Path) -> Result<Vec<u8>, GridError> {
    fs::read(path).map_err(|source| match source.kind() {
        io::ErrorKind::NotFound => GridError::MissingFile(path.to_path_buf()),
        _ => GridError::IoFailure {
            path: path.to_path_buf(),
            source,
        },
    })
}

/// Writes the header JSON and the f32 payload. Values are narrowed to f32, so
/// only f32-representable images round-trip exactly.
pub fn write_image(img: &Image2D, path: impl AsRef<Path>) -> Result<(), GridError> {
    let (header_path, payload_path) = pair_paths(path.as_ref());
    let header = serde_json::to_vec(&ImageHeader::for_image(img))
        .map_err(|e| GridError::MalformedHeader(e.to_string()))?;
    let io_err = |p: &Path| {
        let p = p.to_path_buf();
        move |source| GridError::IoFailure { path: p, source }
    };
    fs::write(&header_path, header).map_err(io_err(&header_path))?;
    fs::write(&payload_path, encode_payload(&img.data)).map_err(io_err(&payload_path))?;
    Ok(())
}

/// 8-bit grayscale raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    /// Binary PGM (P5) encoding.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }
}

/// Maps one value affinely onto 0..=255 with round-half-up, clamped after rounding.
#[inline]
pub fn gray_level(v: f64, lo: f64, hi: f64) -> u8 {
    let scaled = (v - lo) / (hi - lo) * 255.0;
    (scaled + 0.5).floor().clamp(0.0, 255.0) as u8
}

pub fn render_gray(img: &Image2D, lo: f64, hi: f64) -> Result<GrayImage, GridError> {
    if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) || !lo.is_finite() || !hi.is_finite() {
        return Err(GridError::DegenerateRange { lo, hi });
    }
    Ok(GrayImage {
        width: img.width,
        height: img.height,
        pixels: img.data.iter().map(|&v| gray_level(v, lo, hi)).collect(),
    })
}

/// Linear-interpolated percentile (`q` in 0..=100) of the image values.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = (q / 100.0).clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}
