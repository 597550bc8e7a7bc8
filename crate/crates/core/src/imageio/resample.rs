use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Frame, ImageIoError};

/// Down-sampling rate applied to both spatial axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Resolution {
    Full,
    Half,
    Third,
}

impl Resolution {
    pub const ALL: [Resolution; 3] = [Resolution::Full, Resolution::Half, Resolution::Third];

    pub fn denominator(self) -> usize {
        match self {
            Resolution::Full => 1,
            Resolution::Half => 2,
            Resolution::Third => 3,
        }
    }

    pub fn factor(self) -> f64 {
        1.0 / self.denominator() as f64
    }

    /// `floor(dims / denominator)` per axis.
    pub fn apply(self, (h, w): (usize, usize)) -> (usize, usize) {
        (h / self.denominator(), w / self.denominator())
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Resolution::Full => f.write_str("1"),
            Resolution::Half => f.write_str("1/2"),
            Resolution::Third => f.write_str("1/3"),
        }
    }
}

impl FromStr for Resolution {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "1" => Ok(Resolution::Full),
            "1/2" => Ok(Resolution::Half),
            "1/3" => Ok(Resolution::Third),
            other => Err(format!("resolution factor must be 1, 1/2 or 1/3, got {other:?}")),
        }
    }
}

impl TryFrom<String> for Resolution {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Resolution> for String {
    fn from(r: Resolution) -> String {
        r.to_string()
    }
}

/// Resampling target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Factor(Resolution),
    /// Exact `(height, width)`.
    Dims(usize, usize),
}

/// Bilinear resampling with half-pixel centers and edge clamping.
pub fn resample(frame: &Frame, scale: Scale) -> Result<Frame, ImageIoError> {
    let (oh, ow) = match scale {
        Scale::Factor(r) => r.apply(frame.dims()),
        Scale::Dims(h, w) => (h, w),
    };
    if (oh, ow) == frame.dims() {
        return Ok(frame.clone());
    }
    let data = resample_channels(frame.data(), frame.height(), frame.width(), Frame::CHANNELS, oh, ow)?;
    // convex combinations of values in [0, 1] can drift by an ulp
    Frame::from_clamped(oh, ow, data)
}

struct Tap {
    lo: usize,
    hi: usize,
    frac: f64,
}

fn taps(input: usize, output: usize) -> Vec<Tap> {
    let scale = input as f64 / output as f64;
    let max = (input - 1) as f64;
    (0..output)
        .map(|i| {
            let src = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, max);
            let lo = src.floor() as usize;
            let hi = (lo + 1).min(input - 1);
            Tap { lo, hi, frac: src - lo as f64 }
        })
        .collect()
}

/// Bilinear resampling of interleaved `channels`-wide data from `h x w` to `oh x ow`.
pub fn resample_channels(
    data: &[f64],
    h: usize,
    w: usize,
    channels: usize,
    oh: usize,
    ow: usize,
) -> Result<Vec<f64>, ImageIoError> {
    if oh == 0 || ow == 0 || h == 0 || w == 0 {
        return Err(ImageIoError::DegenerateSize(oh, ow));
    }
    debug_assert_eq!(data.len(), h * w * channels);
    if (oh, ow) == (h, w) {
        return Ok(data.to_vec());
    }
    let rows = taps(h, oh);
    let cols = taps(w, ow);
    let mut out = Vec::with_capacity(oh * ow * channels);
    for r in &rows {
        let top = &data[r.lo * w * channels..(r.lo + 1) * w * channels];
        let bottom = &data[r.hi * w * channels..(r.hi + 1) * w * channels];
        for c in &cols {
            for ch in 0..channels {
                let a = top[c.lo * channels + ch];
                let b = top[c.hi * channels + ch];
                let d = bottom[c.lo * channels + ch];
                let e = bottom[c.hi * channels + ch];
                let upper = a + (b - a) * c.frac;
                let lower = d + (e - d) * c.frac;
                out.push(upper + (lower - upper) * r.frac);
            }
        }
    }
    Ok(out)
}
