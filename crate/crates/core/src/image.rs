use crate::error::{Error, Result};

/// A real-valued image with planar channel layout.
///
/// Pixel data is stored channel-major: channel `c` occupies the slice
/// `data[c*H*W .. (c+1)*H*W]` in row-major order. Intensities are nominally
/// in `[0, 1]`; intermediate results of the fusion pipeline may leave that
/// range and are only clamped on write paths and before proxy evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    /// Builds an image from planar data. Dimensions must be at least 2x2 and
    /// every sample must be finite.
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if height < 2 || width < 2 {
            return Err(Error::InvalidDimension(format!(
                "image must be at least 2x2, got {height}x{width}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidParameter(format!(
                "channel count must be 1 or 3, got {channels}"
            )));
        }
        if data.len() != height * width * channels {
            return Err(Error::ShapeMismatch(format!(
                "expected {} samples for {height}x{width}x{channels}, got {}",
                height * width * channels,
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter(
                "image contains non-finite samples".into(),
            ));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    /// Internal constructor that skips the finiteness check, so non-finite
    /// values arising mid-optimization propagate into the loss (where they
    /// are reported as divergence) instead of panicking.
    pub(crate) fn from_parts_unchecked(
        height: usize,
        width: usize,
        channels: usize,
        data: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(data.len(), height * width * channels);
        Self {
            height,
            width,
            channels,
            data,
        }
    }

    /// Constant-valued image.
    pub fn constant(height: usize, width: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(height, width, channels, vec![value; height * width * channels])
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Result<Self> {
        Self::constant(height, width, channels, 0.0)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Number of pixels per channel plane.
    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.plane_len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.plane_len();
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn get(&self, c: usize, h: usize, w: usize) -> f64 {
        self.data[c * self.plane_len() + h * self.width + w]
    }

    pub fn set(&mut self, c: usize, h: usize, w: usize, v: f64) {
        let idx = c * self.plane_len() + h * self.width + w;
        self.data[idx] = v;
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.height == other.height && self.width == other.width && self.channels == other.channels
    }

    /// Copy with every sample clamped to `[0, 1]`.
    pub fn clamped(&self) -> Image {
        let data = self.data.iter().map(|v| v.clamp(0.0, 1.0)).collect();
        Image {
            height: self.height,
            width: self.width,
            channels: self.channels,
            data,
        }
    }

    /// Largest absolute difference over all samples. Shapes must match.
    pub fn max_abs_diff(&self, other: &Image) -> Result<f64> {
        if !self.same_shape(other) {
            return Err(Error::ShapeMismatch(format!(
                "{}x{}x{} vs {}x{}x{}",
                self.height, self.width, self.channels, other.height, other.width, other.channels
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_dimensions() {
        assert!(Image::zeros(1, 8, 1).is_err());
        assert!(Image::zeros(8, 1, 1).is_err());
        assert!(Image::zeros(2, 2, 1).is_ok());
    }

    #[test]
    fn rejects_non_finite_data() {
        let mut data = vec![0.0; 4 * 4];
        data[5] = f64::NAN;
        assert!(Image::new(4, 4, 1, data).is_err());
    }

    #[test]
    fn rejects_bad_channel_count() {
        assert!(Image::zeros(4, 4, 2).is_err());
        assert!(Image::zeros(4, 4, 3).is_ok());
    }

    #[test]
    fn planar_indexing() {
        let mut img = Image::zeros(3, 4, 3).unwrap();
        img.set(2, 1, 3, 0.5);
        assert_eq!(img.get(2, 1, 3), 0.5);
        assert_eq!(img.channel(2)[1 * 4 + 3], 0.5);
        assert_eq!(img.channel(0)[7], 0.0);
    }

    #[test]
    fn clamp_only_touches_out_of_range() {
        let img = Image::new(2, 2, 1, vec![-0.5, 0.25, 1.5, 1.0]).unwrap();
        let c = img.clamped();
        assert_eq!(c.data(), &[0.0, 0.25, 1.0, 1.0]);
    }
}
