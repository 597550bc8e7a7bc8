#![allow(dead_code)]

use std::path::{Path, PathBuf};

use enlight::imageio::{Frame, FrameSequence};

pub fn assets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("assets")
}

pub fn docs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs")
}

/// Smooth dark texture sampled at `(y, x + offset)`.
pub fn texture(h: usize, w: usize, offset: f64) -> Frame {
    Frame::from_fn(h, w, |y, x| {
        let (y, x) = (y as f64, x as f64 + offset);
        let v = 0.12 + 0.06 * (x * 0.31).sin() * (y * 0.23).cos() + 0.04 * ((x + y) * 0.11).sin();
        [v, 0.85 * v, 0.7 * v]
    })
    .unwrap()
}

/// `n` frames panning `step` pixels per frame.
pub fn panning(n: usize, h: usize, w: usize, step: f64) -> FrameSequence {
    FrameSequence::new((0..n).map(|t| texture(h, w, step * t as f64)).collect()).unwrap()
}

pub fn static_sequence(n: usize, h: usize, w: usize) -> FrameSequence {
    panning(n, h, w, 0.0)
}
