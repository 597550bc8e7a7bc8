use super::ImageIoError;

/// An RGB frame with channels normalized to `[0, 1]`, stored row-major and
/// channel-interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Frame {
    /// Number of channels per pixel.
    pub const CHANNELS: usize = 3;

    /// Builds a frame, validating the data length and the channel range.
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self, ImageIoError> {
        if height == 0 || width == 0 {
            return Err(ImageIoError::ZeroDimension);
        }
        let expected = height * width * Self::CHANNELS;
        if data.len() != expected {
            return Err(ImageIoError::DataLength { expected, actual: data.len() });
        }
        if let Some(&v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(ImageIoError::OutOfRange(v));
        }
        Ok(Self { height, width, data })
    }

    /// Builds a frame from arbitrary values, clamping each channel into `[0, 1]`.
    /// NaN maps to 0.
    pub fn from_clamped(height: usize, width: usize, mut data: Vec<f64>) -> Result<Self, ImageIoError> {
        for v in &mut data {
            *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        }
        Self::new(height, width, data)
    }

    /// A frame where every pixel has the same RGB value.
    pub fn filled(height: usize, width: usize, rgb: [f64; 3]) -> Result<Self, ImageIoError> {
        let data = (0..height * width).flat_map(|_| rgb).collect();
        Self::new(height, width, data)
    }

    /// Builds a frame by evaluating `f(row, col)` for every pixel. Values are clamped.
    pub fn from_fn(
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize) -> [f64; 3],
    ) -> Result<Self, ImageIoError> {
        let mut data = Vec::with_capacity(height * width * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(y, x));
            }
        }
        Self::from_clamped(height, width, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// `(height, width)`
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn pixel(&self, row: usize, col: usize) -> [f64; 3] {
        let i = (row * self.width + col) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn pixels(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(3)
    }

    /// Rec. 601 luma per pixel, row-major.
    pub fn luminance(&self) -> Vec<f64> {
        self.pixels().map(|p| luma(p[0], p[1], p[2])).collect()
    }

    /// Mean of the per-pixel luminance.
    pub fn mean_luminance(&self) -> f64 {
        self.luminance().iter().sum::<f64>() / self.pixel_count() as f64
    }

    pub(crate) fn check_same_dims(&self, other: &Frame) -> Result<(), ImageIoError> {
        if self.dims() != other.dims() {
            return Err(ImageIoError::DimensionMismatch { expected: self.dims(), actual: other.dims() });
        }
        Ok(())
    }
}

/// `Y = 0.299 R + 0.587 G + 0.114 B`
#[inline]
pub fn luma(r: f64, g: f64, b: f64) -> f64 {
    0.299 * r + 0.587 * g + 0.114 * b
}

/// Temporally ordered frames sharing one resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    frames: Vec<Frame>,
    frame_rate: Option<f64>,
}

impl FrameSequence {
    pub fn new(frames: Vec<Frame>) -> Result<Self, ImageIoError> {
        let first = frames.first().ok_or(ImageIoError::EmptySequence)?;
        for f in &frames[1..] {
            first.check_same_dims(f)?;
        }
        Ok(Self { frames, frame_rate: None })
    }

    pub fn with_frame_rate(mut self, fps: f64) -> Self {
        self.frame_rate = Some(fps);
        self
    }

    pub fn frame_rate(&self) -> Option<f64> {
        self.frame_rate
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    /// Always false; sequences hold at least one frame.
    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.frames[0].dims()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Frame> {
        self.frames.iter()
    }
}

impl<'a> IntoIterator for &'a FrameSequence {
    type Item = &'a Frame;
    type IntoIter = std::slice::Iter<'a, Frame>;

    fn into_iter(self) -> Self::IntoIter {
        self.frames.iter()
    }
}
