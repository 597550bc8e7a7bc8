//! Dense optical flow and backward warping used to align consecutive frames
//! before temporal comparisons.

mod farneback;

use thiserror::Error;

pub use farneback::FarnebackParams;

use crate::imageio::{Frame, ImageIoError};

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("dimension mismatch: {0:?} vs {1:?}")]
    DimensionMismatch((usize, usize), (usize, usize)),
    #[error("flow vector at pixel {0} is not finite")]
    NonFinite(usize),
    #[error("expected {expected} vectors, got {actual}")]
    DataLength { expected: usize, actual: usize },
    #[error(transparent)]
    Image(#[from] ImageIoError),
}

/// Per-pixel `(dx, dy)` displacements in pixels, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    height: usize,
    width: usize,
    vectors: Vec<[f64; 2]>,
}

impl FlowField {
    pub fn new(height: usize, width: usize, vectors: Vec<[f64; 2]>) -> Result<Self, FlowError> {
        if vectors.len() != height * width {
            return Err(FlowError::DataLength { expected: height * width, actual: vectors.len() });
        }
        if let Some(i) = vectors.iter().position(|v| !(v[0].is_finite() && v[1].is_finite())) {
            return Err(FlowError::NonFinite(i));
        }
        Ok(Self { height, width, vectors })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self { height, width, vectors: vec![[0.0; 2]; height * width] }
    }

    pub fn uniform(height: usize, width: usize, dx: f64, dy: f64) -> Self {
        Self { height, width, vectors: vec![[dx, dy]; height * width] }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn vectors(&self) -> &[[f64; 2]] {
        &self.vectors
    }

    pub fn at(&self, row: usize, col: usize) -> [f64; 2] {
        self.vectors[row * self.width + col]
    }

    pub fn max_magnitude(&self) -> f64 {
        self.vectors.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max)
    }

    /// Mean `(dx, dy)` over pixels at least `margin` away from every edge.
    pub fn interior_mean(&self, margin: usize) -> [f64; 2] {
        let mut sum = [0.0; 2];
        let mut n = 0usize;
        for y in margin..self.height.saturating_sub(margin) {
            for x in margin..self.width.saturating_sub(margin) {
                let v = self.at(y, x);
                sum[0] += v[0];
                sum[1] += v[1];
                n += 1;
            }
        }
        if n == 0 {
            return [0.0; 2];
        }
        [sum[0] / n as f64, sum[1] / n as f64]
    }
}

/// Dense flow such that `frame_t(x + dx, y + dy) ≈ frame_t1(x, y)`, computed
/// on luminance with default parameters.
pub fn estimate_flow(frame_t: &Frame, frame_t1: &Frame) -> Result<FlowField, FlowError> {
    estimate_flow_with(frame_t, frame_t1, &FarnebackParams::default())
}

pub fn estimate_flow_with(
    frame_t: &Frame,
    frame_t1: &Frame,
    params: &FarnebackParams,
) -> Result<FlowField, FlowError> {
    if frame_t.dims() != frame_t1.dims() {
        return Err(FlowError::DimensionMismatch(frame_t.dims(), frame_t1.dims()));
    }
    let (h, w) = frame_t.dims();
    let vectors = farneback::farneback(&frame_t1.luminance(), &frame_t.luminance(), h, w, params);
    FlowField::new(h, w, vectors)
}

/// Backward warp: `out(x, y) = frame(x + dx, y + dy)`, bilinear, edge-clamped.
pub fn warp(frame: &Frame, flow: &FlowField) -> Result<Frame, FlowError> {
    if frame.dims() != flow.dims() {
        return Err(FlowError::DimensionMismatch(frame.dims(), flow.dims()));
    }
    let (h, w) = frame.dims();
    let src = frame.data();
    let mut out = Vec::with_capacity(src.len());
    for y in 0..h {
        for x in 0..w {
            let [dx, dy] = flow.at(y, x);
            let sx = (x as f64 + dx).clamp(0.0, (w - 1) as f64);
            let sy = (y as f64 + dy).clamp(0.0, (h - 1) as f64);
            let (x0, y0) = (sx.floor() as usize, sy.floor() as usize);
            let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
            let (fx, fy) = (sx - x0 as f64, sy - y0 as f64);
            for c in 0..3 {
                let at = |yy: usize, xx: usize| src[(yy * w + xx) * 3 + c];
                let top = at(y0, x0) * (1.0 - fx) + at(y0, x1) * fx;
                let bottom = at(y1, x0) * (1.0 - fx) + at(y1, x1) * fx;
                out.push(top * (1.0 - fy) + bottom * fy);
            }
        }
    }
    Ok(Frame::from_clamped(h, w, out)?)
}

/// Warps `frame_t` onto `frame_t1` using estimated flow.
pub fn align(frame_t: &Frame, frame_t1: &Frame) -> Result<Frame, FlowError> {
    warp(frame_t, &estimate_flow(frame_t, frame_t1)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texture(h: usize, w: usize, shift: f64) -> Frame {
        Frame::from_fn(h, w, |y, x| {
            let (y, x) = (y as f64, x as f64 + shift);
            let v = 0.5 + 0.2 * (x * 0.31).sin() * (y * 0.27).cos() + 0.15 * (x * 0.13 + y * 0.19).sin();
            [v, v * 0.9, v * 0.8]
        })
        .unwrap()
    }

    #[test]
    fn zero_flow_warp_is_identity() {
        let f = texture(9, 11, 0.0);
        assert_eq!(warp(&f, &FlowField::zeros(9, 11)).unwrap(), f);
    }

    #[test]
    fn integer_flow_shifts_ramp() {
        let f = Frame::from_fn(4, 6, |_, x| [x as f64 / 5.0; 3]).unwrap();
        let out = warp(&f, &FlowField::uniform(4, 6, 1.0, 0.0)).unwrap();
        for y in 0..4 {
            for x in 0..5 {
                assert_eq!(out.pixel(y, x), f.pixel(y, x + 1));
            }
            // sample beyond the right edge clamps
            assert_eq!(out.pixel(y, 5), f.pixel(y, 5));
        }
    }

    #[test]
    fn constant_frame_warps_to_itself() {
        let f = Frame::filled(5, 5, [0.3, 0.4, 0.5]).unwrap();
        let out = warp(&f, &FlowField::uniform(5, 5, 1.7, -2.3)).unwrap();
        for (a, b) in out.data().iter().zip(f.data()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn identical_frames_have_no_motion() {
        let f = texture(40, 48, 0.0);
        assert!(estimate_flow(&f, &f).unwrap().max_magnitude() <= 0.1);
    }

    #[test]
    fn textureless_frames_have_zero_flow() {
        let a = Frame::filled(24, 24, [0.2; 3]).unwrap();
        let b = Frame::filled(24, 24, [0.6; 3]).unwrap();
        assert_eq!(estimate_flow(&a, &b).unwrap().max_magnitude(), 0.0);
    }

    #[test]
    fn recovers_two_pixel_shift() {
        let a = texture(48, 64, 0.0);
        let b = texture(48, 64, 2.0);
        let flow = estimate_flow(&a, &b).unwrap();
        let [dx, dy] = flow.interior_mean(8);
        assert!((dx - 2.0).abs() <= 0.5, "dx = {dx}");
        assert!(dy.abs() <= 0.5, "dy = {dy}");
    }

    #[test]
    fn alignment_reduces_error() {
        let a = texture(48, 64, 0.0);
        let b = texture(48, 64, 2.0);
        let aligned = align(&a, &b).unwrap();
        let err = |p: &Frame| {
            let (la, lb) = (p.luminance(), b.luminance());
            let mut s = 0.0;
            let mut n = 0;
            for y in 8..40 {
                for x in 8..56 {
                    s += (la[y * 64 + x] - lb[y * 64 + x]).abs();
                    n += 1;
                }
            }
            s / n as f64
        };
        assert!(err(&aligned) <= 0.05);
        assert!(err(&aligned) < err(&a));
    }

    #[test]
    fn mismatched_dims() {
        let a = texture(8, 8, 0.0);
        let b = texture(8, 9, 0.0);
        assert!(matches!(estimate_flow(&a, &b), Err(FlowError::DimensionMismatch(..))));
        assert!(matches!(warp(&a, &FlowField::zeros(8, 9)), Err(FlowError::DimensionMismatch(..))));
        assert!(matches!(FlowField::new(1, 1, vec![[f64::NAN, 0.0]]), Err(FlowError::NonFinite(0))));
    }
}
