//! Frame containers, 8-bit PNG/PPM I/O and bilinear resampling.
//!
//! Frames are stored as `f64` RGB in `[0, 1]`. Loading maps 8-bit values by
//! `v / 255`; saving quantizes with round-half-up and clamps to `[0, 255]`.
//! Sequences are plain directories of frames ordered by filename.

mod frame;
mod resample;

use std::path::{Path, PathBuf};

use image::{ImageFormat, RgbImage};
use thiserror::Error;

pub use frame::{luma, Frame, FrameSequence};
pub use resample::{resample, resample_channels, Resolution, Scale};

#[derive(Debug, Error)]
pub enum ImageIoError {
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot decode {path}: {message}")]
    Decode { path: PathBuf, message: String },
    #[error("cannot encode {path}: {message}")]
    Encode { path: PathBuf, message: String },
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("image has a zero dimension")]
    ZeroDimension,
    #[error("expected {expected} channel values, got {actual}")]
    DataLength { expected: usize, actual: usize },
    #[error("channel value {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch { expected: (usize, usize), actual: (usize, usize) },
    #[error("sequence is empty")]
    EmptySequence,
    #[error("no supported images in {0}")]
    EmptyDirectory(PathBuf),
    #[error("resampling to a degenerate size {0}x{1}")]
    DegenerateSize(usize, usize),
}

/// Recognized on-disk formats. Anything else is rejected.
fn format_for(path: &Path) -> Result<ImageFormat, ImageIoError> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    match ext.as_str() {
        "png" => Ok(ImageFormat::Png),
        "ppm" => Ok(ImageFormat::Pnm),
        _ => Err(ImageIoError::UnsupportedFormat(path.display().to_string())),
    }
}

fn is_supported(path: &Path) -> bool {
    format_for(path).is_ok()
}

/// Loads an 8-bit PNG (RGB or RGBA; alpha dropped) or binary PPM.
pub fn load_frame(path: impl AsRef<Path>) -> Result<Frame, ImageIoError> {
    let path = path.as_ref();
    let format = format_for(path)?;
    let bytes = std::fs::read(path).map_err(|source| ImageIoError::Io { path: path.into(), source })?;
    let img = image::load_from_memory_with_format(&bytes, format)
        .map_err(|e| ImageIoError::Decode { path: path.into(), message: e.to_string() })?;
    use image::ColorType::*;
    match img.color() {
        L8 | La8 | Rgb8 | Rgba8 => {}
        other => return Err(ImageIoError::UnsupportedFormat(format!("{other:?} in {}", path.display()))),
    }
    let rgb = img.to_rgb8();
    let (w, h) = rgb.dimensions();
    if w == 0 || h == 0 {
        return Err(ImageIoError::ZeroDimension);
    }
    let data = rgb.into_raw().into_iter().map(|v| f64::from(v) / 255.0).collect();
    Frame::new(h as usize, w as usize, data)
}

/// Round-half-up quantization to 8 bits with clamping.
#[inline]
pub fn quantize(v: f64) -> u8 {
    (v * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Writes an 8-bit RGB image; the format follows the extension (`.png` or `.ppm`).
pub fn save_frame(frame: &Frame, path: impl AsRef<Path>) -> Result<(), ImageIoError> {
    let path = path.as_ref();
    let format = format_for(path)?;
    let raw: Vec<u8> = frame.data().iter().map(|&v| quantize(v)).collect();
    let img = RgbImage::from_raw(frame.width() as u32, frame.height() as u32, raw)
        .expect("frame data length is validated on construction");
    img.save_with_format(path, format).map_err(|e| match e {
        image::ImageError::IoError(source) => ImageIoError::Io { path: path.into(), source },
        other => ImageIoError::Encode { path: path.into(), message: other.to_string() },
    })
}

/// Supported image files in `dir`, sorted lexicographically by filename.
pub fn list_frames(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>, ImageIoError> {
    let dir = dir.as_ref();
    let entries = std::fs::read_dir(dir).map_err(|source| ImageIoError::Io { path: dir.into(), source })?;
    let mut paths = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| ImageIoError::Io { path: dir.into(), source })?;
        let path = entry.path();
        if path.is_file() && is_supported(&path) {
            paths.push(path);
        }
    }
    paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(paths)
}

/// Loads every supported frame in `dir` in lexicographic filename order.
pub fn load_sequence(dir: impl AsRef<Path>) -> Result<FrameSequence, ImageIoError> {
    let dir = dir.as_ref();
    let paths = list_frames(dir)?;
    if paths.is_empty() {
        return Err(ImageIoError::EmptyDirectory(dir.into()));
    }
    let frames = paths.iter().map(load_frame).collect::<Result<Vec<_>, _>>()?;
    FrameSequence::new(frames)
}

/// Writes `seq` into `dir` as `frame_00000.png`, `frame_00001.png`, ...
pub fn save_sequence(seq: &FrameSequence, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>, ImageIoError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|source| ImageIoError::Io { path: dir.into(), source })?;
    let mut written = Vec::with_capacity(seq.len());
    for (i, frame) in seq.iter().enumerate() {
        let path = dir.join(format!("frame_{i:05}.png"));
        save_frame(frame, &path)?;
        written.push(path);
    }
    Ok(written)
}
