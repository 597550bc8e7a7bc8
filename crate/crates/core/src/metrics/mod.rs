//! Full-reference quality metrics (PSNR, SSIM, MAE), temporal stability
//! metrics (TSSIM, MABD), and the exposure/color consistency terms between
//! an enhanced frame and its motion-aligned predecessor.

mod ssim;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ssim::{ssim, C1, C2, SIGMA as SSIM_SIGMA, WINDOW as SSIM_WINDOW};

use crate::flow::{align, FlowError};
use crate::imageio::{Frame, FrameSequence, ImageIoError};

/// PSNR reported for identical frames.
pub const PSNR_CAP_DB: f64 = 100.0;
/// Default `c` in the color consistency ratio.
pub const COLOR_DELTA: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("dimension mismatch: {0:?} vs {1:?}")]
    DimensionMismatch((usize, usize), (usize, usize)),
    #[error("frame {dims:?} is smaller than the {window}x{window} window")]
    TooSmall { dims: (usize, usize), window: usize },
    #[error("need at least 2 frames, got {0}")]
    TooFewFrames(usize),
    #[error("sequence lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("color delta must be positive, got {0}")]
    InvalidDelta(f64),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Image(#[from] ImageIoError),
}

fn check_dims(a: &Frame, b: &Frame) -> Result<(), MetricsError> {
    if a.dims() != b.dims() {
        return Err(MetricsError::DimensionMismatch(a.dims(), b.dims()));
    }
    Ok(())
}

/// `10 log10(1 / MSE)` over all channels, capped at [`PSNR_CAP_DB`].
pub fn psnr(a: &Frame, b: &Frame) -> Result<f64, MetricsError> {
    check_dims(a, b)?;
    let mse = a.data().iter().zip(b.data()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.data().len() as f64;
    if mse == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (1.0 / mse).log10()).min(PSNR_CAP_DB))
}

/// Mean absolute error on the 0–255 scale.
pub fn mae(a: &Frame, b: &Frame) -> Result<f64, MetricsError> {
    check_dims(a, b)?;
    let sum: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()).sum();
    Ok(sum / a.data().len() as f64 * 255.0)
}

fn require_pairs(seq: &FrameSequence) -> Result<(), MetricsError> {
    if seq.len() < 2 {
        return Err(MetricsError::TooFewFrames(seq.len()));
    }
    Ok(())
}

/// Mean SSIM of consecutive frames.
pub fn tssim(seq: &FrameSequence) -> Result<f64, MetricsError> {
    require_pairs(seq)?;
    let frames = seq.frames();
    let mut total = 0.0;
    for pair in frames.windows(2) {
        total += ssim(&pair[0], &pair[1])?;
    }
    Ok((total / (frames.len() - 1) as f64).min(1.0))
}

/// Mean absolute change of per-frame mean luminance between consecutive frames.
pub fn mabd(seq: &FrameSequence) -> Result<f64, MetricsError> {
    require_pairs(seq)?;
    let means: Vec<f64> = seq.iter().map(Frame::mean_luminance).collect();
    let total: f64 = means.windows(2).map(|m| (m[1] - m[0]).abs()).sum();
    Ok(total / (means.len() - 1) as f64)
}

/// A summed per-pixel quantity and its per-pixel mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Consistency {
    pub sum: f64,
    pub per_pixel: f64,
}

impl Consistency {
    fn from_sum(sum: f64, pixels: usize) -> Self {
        Self { sum, per_pixel: sum / pixels as f64 }
    }
}

/// `Σ_x |Σ_c e_t1(x) - Σ_c e_t(x)|`.
pub fn exposure_consistency(e_t1: &Frame, e_t_aligned: &Frame) -> Result<Consistency, MetricsError> {
    check_dims(e_t1, e_t_aligned)?;
    let sum = e_t1
        .pixels()
        .zip(e_t_aligned.pixels())
        .map(|(p, q)| ((p[0] + p[1] + p[2]) - (q[0] + q[1] + q[2])).abs())
        .sum();
    Ok(Consistency::from_sum(sum, e_t1.pixel_count()))
}

/// `Σ_x Σ_k |(e_t1ᵏ + c) / (Σ e_t1 + c) - (e_tᵏ + c) / (Σ e_t + c)|`.
pub fn color_consistency(e_t1: &Frame, e_t_aligned: &Frame, c: f64) -> Result<Consistency, MetricsError> {
    check_dims(e_t1, e_t_aligned)?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(MetricsError::InvalidDelta(c));
    }
    let sum = e_t1
        .pixels()
        .zip(e_t_aligned.pixels())
        .map(|(p, q)| {
            let sp = p[0] + p[1] + p[2] + c;
            let sq = q[0] + q[1] + q[2] + c;
            (0..3).map(|k| ((p[k] + c) / sp - (q[k] + c) / sq).abs()).sum::<f64>()
        })
        .sum();
    Ok(Consistency::from_sum(sum, e_t1.pixel_count()))
}

/// Per-pixel, per-channel `|a - b|`.
pub fn frame_difference_map(a: &Frame, b: &Frame) -> Result<Frame, MetricsError> {
    check_dims(a, b)?;
    let data = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()).collect();
    Ok(Frame::new(a.height(), a.width(), data)?)
}

/// Mean value of the difference map between consecutive frames, averaged over pairs.
pub fn mean_frame_difference(seq: &FrameSequence) -> Result<f64, MetricsError> {
    require_pairs(seq)?;
    let mut total = 0.0;
    for pair in seq.frames().windows(2) {
        let d = frame_difference_map(&pair[0], &pair[1])?;
        total += d.data().iter().sum::<f64>() / d.data().len() as f64;
    }
    Ok(total / (seq.len() - 1) as f64)
}

/// Metrics for a frame pair or a sequence; fields that do not apply are `null`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub psnr: Option<f64>,
    pub ssim: Option<f64>,
    pub mae: Option<f64>,
    pub tssim: Option<f64>,
    pub mabd: Option<f64>,
    pub exposure_consistency: Option<Consistency>,
    pub color_consistency: Option<Consistency>,
}

/// Full-reference metrics of `candidate` against `reference`.
pub fn compare(reference: &Frame, candidate: &Frame) -> Result<MetricReport, MetricsError> {
    Ok(MetricReport {
        psnr: Some(psnr(reference, candidate)?),
        ssim: Some(ssim(reference, candidate)?),
        mae: Some(mae(reference, candidate)?),
        ..MetricReport::default()
    })
}

/// Temporal metrics of `seq`; consistency terms use flow-aligned pairs and are
/// averaged over pairs. With a reference, PSNR/SSIM/MAE are averaged per frame.
pub fn sequence_report(seq: &FrameSequence, reference: Option<&FrameSequence>) -> Result<MetricReport, MetricsError> {
    require_pairs(seq)?;
    let pairs = (seq.len() - 1) as f64;
    let mut exposure = Consistency { sum: 0.0, per_pixel: 0.0 };
    let mut color = exposure;
    for pair in seq.frames().windows(2) {
        let aligned = align(&pair[0], &pair[1])?;
        let e = exposure_consistency(&pair[1], &aligned)?;
        let c = color_consistency(&pair[1], &aligned, COLOR_DELTA)?;
        exposure.sum += e.sum / pairs;
        exposure.per_pixel += e.per_pixel / pairs;
        color.sum += c.sum / pairs;
        color.per_pixel += c.per_pixel / pairs;
    }
    let mut report = MetricReport {
        tssim: Some(tssim(seq)?),
        mabd: Some(mabd(seq)?),
        exposure_consistency: Some(exposure),
        color_consistency: Some(color),
        ..MetricReport::default()
    };
    if let Some(reference) = reference {
        if reference.len() != seq.len() {
            return Err(MetricsError::LengthMismatch(reference.len(), seq.len()));
        }
        let n = seq.len() as f64;
        let (mut p, mut s, mut m) = (0.0, 0.0, 0.0);
        for (r, c) in reference.iter().zip(seq.iter()) {
            p += psnr(r, c)?;
            s += ssim(r, c)?;
            m += mae(r, c)?;
        }
        report.psnr = Some((p / n).min(PSNR_CAP_DB));
        report.ssim = Some((s / n).min(1.0));
        report.mae = Some(m / n);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(v: f64) -> Frame {
        Frame::filled(12, 12, [v; 3]).unwrap()
    }

    fn textured() -> Frame {
        Frame::from_fn(24, 24, |y, x| {
            let v = 0.5 + 0.45 * ((x as f64) * 0.7).sin() * ((y as f64) * 0.5).cos();
            [v, 0.8 * v, 1.0 - v]
        })
        .unwrap()
    }

    fn seq(values: &[f64]) -> FrameSequence {
        FrameSequence::new(values.iter().map(|&v| constant(v)).collect()).unwrap()
    }

    #[test]
    fn psnr_values() {
        assert_eq!(psnr(&constant(0.3), &constant(0.3)).unwrap(), PSNR_CAP_DB);
        assert_eq!(psnr(&constant(0.0), &constant(1.0)).unwrap(), 0.0);
        let v = psnr(&constant(0.0), &constant(0.5)).unwrap();
        assert!((v - 10.0 * 4.0f64.log10()).abs() < 1e-12);
        assert!((v - 6.0206).abs() < 1e-4);
    }

    #[test]
    fn mae_values() {
        assert_eq!(mae(&constant(0.4), &constant(0.4)).unwrap(), 0.0);
        assert_eq!(mae(&constant(0.0), &constant(1.0)).unwrap(), 255.0);
        assert!((mae(&constant(0.0), &constant(0.2)).unwrap() - 51.0).abs() < 1e-9);
    }

    #[test]
    fn ssim_basics() {
        let t = textured();
        assert!((ssim(&t, &t).unwrap() - 1.0).abs() < 1e-12);
        assert!((ssim(&constant(0.5), &constant(0.5)).unwrap() - 1.0).abs() < 1e-12);
        let small = Frame::filled(10, 12, [0.1; 3]).unwrap();
        assert!(matches!(ssim(&small, &small), Err(MetricsError::TooSmall { .. })));
    }

    #[test]
    fn temporal_metrics() {
        assert!((tssim(&seq(&[0.4, 0.4, 0.4])).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(mabd(&seq(&[0.4, 0.4])).unwrap(), 0.0);
        assert!((mabd(&seq(&[0.1, 0.2, 0.3])).unwrap() - 0.1).abs() < 1e-12);
        assert!((mabd(&seq(&[0.0, 1.0, 0.0])).unwrap() - 1.0).abs() < 1e-12);
        let two = seq(&[0.2, 0.7]);
        assert_eq!(tssim(&two).unwrap(), ssim(&two.frames()[0], &two.frames()[1]).unwrap());
        assert!(matches!(tssim(&seq(&[0.1])), Err(MetricsError::TooFewFrames(1))));
        assert!(matches!(mabd(&seq(&[0.1])), Err(MetricsError::TooFewFrames(1))));
    }

    #[test]
    fn alternating_sequence_averages_equal_pairs() {
        let s = seq(&[0.0, 1.0, 0.0]);
        let pair = ssim(&constant(0.0), &constant(1.0)).unwrap();
        assert!((tssim(&s).unwrap() - pair).abs() < 1e-12);
    }

    #[test]
    fn exposure_values() {
        let a = Frame::filled(1, 1, [0.1; 3]).unwrap();
        let b = Frame::filled(1, 1, [0.2; 3]).unwrap();
        let e = exposure_consistency(&b, &a).unwrap();
        assert!((e.sum - 0.3).abs() < 1e-12);
        assert_eq!(exposure_consistency(&a, &a).unwrap().sum, 0.0);
        let t = textured();
        let permuted = Frame::from_fn(24, 24, |y, x| {
            let p = t.pixel(y, x);
            [p[2], p[0], p[1]]
        })
        .unwrap();
        assert!(exposure_consistency(&t, &permuted).unwrap().sum < 1e-12);
    }

    #[test]
    fn color_values() {
        let red = Frame::filled(1, 1, [1.0, 0.0, 0.0]).unwrap();
        let green = Frame::filled(1, 1, [0.0, 1.0, 0.0]).unwrap();
        let c = COLOR_DELTA;
        // two channels differ by (1 + c - c) / (1 + c), the third matches
        let expected = 2.0 / (1.0 + c);
        assert!((color_consistency(&green, &red, c).unwrap().sum - expected).abs() < 1e-12);
        assert!((expected - 1.9996).abs() < 1e-3);
        let black = Frame::filled(1, 1, [0.0; 3]).unwrap();
        assert_eq!(color_consistency(&black, &black, c).unwrap().sum, 0.0);
        assert!(matches!(color_consistency(&red, &red, 0.0), Err(MetricsError::InvalidDelta(_))));
    }

    #[test]
    fn difference_map() {
        let (a, b) = (constant(0.0), constant(1.0));
        assert!(frame_difference_map(&a, &b).unwrap().data().iter().all(|&v| v == 1.0));
        assert!(frame_difference_map(&a, &a).unwrap().data().iter().all(|&v| v == 0.0));
        let t = textured();
        let u = Frame::from_fn(24, 24, |y, x| [t.pixel(y, x)[0] * 0.5; 3]).unwrap();
        assert_eq!(frame_difference_map(&t, &u).unwrap(), frame_difference_map(&u, &t).unwrap());
    }

    #[test]
    fn dimension_errors() {
        let a = constant(0.1);
        let b = Frame::filled(12, 13, [0.1; 3]).unwrap();
        assert!(matches!(psnr(&a, &b), Err(MetricsError::DimensionMismatch(..))));
        assert!(matches!(mae(&a, &b), Err(MetricsError::DimensionMismatch(..))));
        assert!(matches!(ssim(&a, &b), Err(MetricsError::DimensionMismatch(..))));
        assert!(matches!(exposure_consistency(&a, &b), Err(MetricsError::DimensionMismatch(..))));
        assert!(matches!(frame_difference_map(&a, &b), Err(MetricsError::DimensionMismatch(..))));
    }

    #[test]
    fn report_shapes() {
        let t = textured();
        let r = compare(&t, &t).unwrap();
        assert_eq!(r.psnr, Some(PSNR_CAP_DB));
        assert!(r.tssim.is_none());
        let s = FrameSequence::new(vec![t.clone(), t.clone(), t]).unwrap();
        let r = sequence_report(&s, Some(&s)).unwrap();
        assert_eq!(r.mabd, Some(0.0));
        assert_eq!(r.exposure_consistency.unwrap().sum, 0.0);
        assert_eq!(r.mae, Some(0.0));
        let six = FrameSequence::new(vec![textured(); 6]).unwrap();
        let r = sequence_report(&six, Some(&six)).unwrap();
        assert_eq!(r.psnr, Some(PSNR_CAP_DB));
        assert_eq!(r.ssim, Some(1.0));
    }
}
