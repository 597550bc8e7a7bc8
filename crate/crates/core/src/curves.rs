//! Pixel-wise enhancement curves.
//!
//! The primary mapping is the non-iterative power curve `E = I^Γ` with a
//! per-pixel, per-channel exponent map. The iterative quadratic curve
//! `E_n = E_{n-1} + A_n E_{n-1} (1 - E_{n-1})` is kept as the baseline it
//! replaces, together with the iterated power variant used in ablations.

use thiserror::Error;

use crate::imageio::{resample_channels, Frame, ImageIoError};

/// Lower bound on exponents produced by the network.
pub const GAMMA_MIN: f64 = 0.25;
/// Upper bound on exponents produced by the network.
pub const GAMMA_MAX: f64 = 4.0;

#[derive(Debug, Error)]
pub enum CurveError {
    #[error("dimension mismatch: frame {frame:?}, map {map:?}")]
    DimensionMismatch { frame: (usize, usize), map: (usize, usize) },
    #[error("exponent {0} is not strictly positive and finite")]
    NonPositiveExponent(f64),
    #[error("curve parameter {0} outside [-1, 1]")]
    ParamOutOfRange(f64),
    #[error("expected {expected} values, got {actual}")]
    DataLength { expected: usize, actual: usize },
    #[error("iteration count must be at least 1")]
    ZeroIterations,
    #[error("expected {expected} parameter maps, got {actual}")]
    MapCount { expected: usize, actual: usize },
    #[error(transparent)]
    Image(#[from] ImageIoError),
}

/// Per-pixel, per-RGB-channel exponents, interleaved like [`Frame`].
#[derive(Debug, Clone, PartialEq)]
pub struct GammaMap {
    height: usize,
    width: usize,
    exponents: Vec<f64>,
}

impl GammaMap {
    pub fn new(height: usize, width: usize, exponents: Vec<f64>) -> Result<Self, CurveError> {
        let expected = height * width * 3;
        if exponents.len() != expected {
            return Err(CurveError::DataLength { expected, actual: exponents.len() });
        }
        if let Some(&g) = exponents.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return Err(CurveError::NonPositiveExponent(g));
        }
        Ok(Self { height, width, exponents })
    }

    pub fn uniform(height: usize, width: usize, gamma: f64) -> Result<Self, CurveError> {
        Self::new(height, width, vec![gamma; height * width * 3])
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    pub fn mean(&self) -> f64 {
        self.exponents.iter().sum::<f64>() / self.exponents.len() as f64
    }

    /// Smallest and largest exponent.
    pub fn range(&self) -> (f64, f64) {
        self.exponents
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &g| (lo.min(g), hi.max(g)))
    }

    /// Element-wise product, i.e. the exponent of two curves applied in sequence.
    pub fn compose(&self, other: &GammaMap) -> Result<GammaMap, CurveError> {
        if self.dims() != other.dims() {
            return Err(CurveError::DimensionMismatch { frame: self.dims(), map: other.dims() });
        }
        let exps = self.exponents.iter().zip(&other.exponents).map(|(a, b)| a * b).collect();
        GammaMap::new(self.height, self.width, exps)
    }

    /// Bilinear resize; exponents stay within the source range.
    pub fn resize(&self, height: usize, width: usize) -> Result<GammaMap, CurveError> {
        if (height, width) == self.dims() {
            return Ok(self.clone());
        }
        let exps = resample_channels(&self.exponents, self.height, self.width, 3, height, width)?;
        GammaMap::new(height, width, exps)
    }
}

/// Quadratic-curve parameters `A_n(x)` in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveParamMap {
    height: usize,
    width: usize,
    params: Vec<f64>,
}

impl CurveParamMap {
    pub fn new(height: usize, width: usize, params: Vec<f64>) -> Result<Self, CurveError> {
        let expected = height * width * 3;
        if params.len() != expected {
            return Err(CurveError::DataLength { expected, actual: params.len() });
        }
        if let Some(&a) = params.iter().find(|a| !(-1.0..=1.0).contains(*a)) {
            return Err(CurveError::ParamOutOfRange(a));
        }
        Ok(Self { height, width, params })
    }

    pub fn uniform(height: usize, width: usize, a: f64) -> Result<Self, CurveError> {
        Self::new(height, width, vec![a; height * width * 3])
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }
}

/// How the quadratic curve consumes its parameter maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamMaps {
    /// One map per iteration.
    PerIteration,
    /// A single map reused by every iteration.
    Shared,
}

#[inline]
fn pow_curve(v: f64, gamma: f64) -> f64 {
    if v <= 0.0 {
        0.0
    } else {
        v.powf(gamma).min(1.0)
    }
}

/// `E(x) = I(x)^Γ(x)` per pixel and channel. `0^Γ` is 0.
pub fn apply_gamma_curve(frame: &Frame, gamma: &GammaMap) -> Result<Frame, CurveError> {
    if frame.dims() != gamma.dims() {
        return Err(CurveError::DimensionMismatch { frame: frame.dims(), map: gamma.dims() });
    }
    let data = frame.data().iter().zip(&gamma.exponents).map(|(&v, &g)| pow_curve(v, g)).collect();
    Ok(Frame::new(frame.height(), frame.width(), data)?)
}

/// Iterated power curve `E_n = E_{n-1}^{Γ_n}`; ablation path only.
pub fn apply_iterative_gamma_curve(frame: &Frame, maps: &[GammaMap]) -> Result<Frame, CurveError> {
    if maps.is_empty() {
        return Err(CurveError::ZeroIterations);
    }
    maps.iter().try_fold(frame.clone(), |acc, m| apply_gamma_curve(&acc, m))
}

/// Iterative quadratic curve with `iterations` steps.
pub fn apply_quadratic_curve(
    frame: &Frame,
    params: &[CurveParamMap],
    iterations: usize,
    mode: ParamMaps,
) -> Result<Frame, CurveError> {
    if iterations == 0 {
        return Err(CurveError::ZeroIterations);
    }
    let expected = match mode {
        ParamMaps::PerIteration => iterations,
        ParamMaps::Shared => 1,
    };
    if params.len() != expected {
        return Err(CurveError::MapCount { expected, actual: params.len() });
    }
    for p in params {
        if p.dims() != frame.dims() {
            return Err(CurveError::DimensionMismatch { frame: frame.dims(), map: p.dims() });
        }
    }
    let mut data = frame.data().to_vec();
    for n in 0..iterations {
        let map = &params[n.min(params.len() - 1)];
        for (e, &a) in data.iter_mut().zip(&map.params) {
            *e = (*e + a * *e * (1.0 - *e)).clamp(0.0, 1.0);
        }
    }
    Ok(Frame::new(frame.height(), frame.width(), data)?)
}
