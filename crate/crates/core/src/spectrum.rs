use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::image::Image;

/// Relative Hermitian deviation above which `inverse_spectrum` refuses to
/// produce a real image. A mask that respects frequency-negation symmetry
/// keeps the deviation many orders of magnitude below this.
pub const HERMITIAN_TOLERANCE: f64 = 1e-6;

/// Per-channel unitary 2-D DFT of an image, in unshifted index order
/// (DC at `[0, 0]`). Planar layout like [`Image`].
#[derive(Debug, Clone)]
pub struct Spectrum {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<Complex64>) -> Result<Self> {
        if height < 2 || width < 2 {
            return Err(Error::InvalidDimension(format!(
                "spectrum must be at least 2x2, got {height}x{width}"
            )));
        }
        if data.len() != height * width * channels {
            return Err(Error::ShapeMismatch(format!(
                "expected {} bins for {height}x{width}x{channels}, got {}",
                height * width * channels,
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
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

    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn channel(&self, c: usize) -> &[Complex64] {
        let n = self.plane_len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [Complex64] {
        let n = self.plane_len();
        &mut self.data[c * n..(c + 1) * n]
    }

    /// Sum of squared magnitudes over all bins and channels. Equals the
    /// spatial sum of squares for spectra of real images (Parseval).
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Largest deviation from Hermitian symmetry `X[k] = conj(X[-k])`,
    /// relative to the peak magnitude of the spectrum.
    pub fn hermitian_deviation(&self) -> f64 {
        let (h, w) = (self.height, self.width);
        let peak = self
            .data
            .iter()
            .map(|z| z.norm_sqr())
            .fold(0.0f64, f64::max)
            .sqrt();
        if peak == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for c in 0..self.channels {
            let plane = self.channel(c);
            for row in 0..h {
                let neg_row = (h - row) % h;
                for col in 0..w {
                    let neg_col = (w - col) % w;
                    let a = plane[row * w + col];
                    let b = plane[neg_row * w + neg_col].conj();
                    worst = worst.max((a - b).norm());
                }
            }
        }
        worst / peak
    }
}

/// Planned forward/inverse unitary 2-D FFTs for one image size.
///
/// Row and column transforms are planned once; repeated calls reuse the
/// plans and scratch, which matters in the optimizer loop.
pub struct FftEngine {
    height: usize,
    width: usize,
    fwd_row: Arc<dyn Fft<f64>>,
    fwd_col: Arc<dyn Fft<f64>>,
    inv_row: Arc<dyn Fft<f64>>,
    inv_col: Arc<dyn Fft<f64>>,
    transpose: Vec<Complex64>,
    scratch: Vec<Complex64>,
    work: Vec<Complex64>,
}

impl FftEngine {
    pub fn new(height: usize, width: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fwd_row = planner.plan_fft_forward(width);
        let fwd_col = planner.plan_fft_forward(height);
        let inv_row = planner.plan_fft_inverse(width);
        let inv_col = planner.plan_fft_inverse(height);
        let scratch_len = fwd_row
            .get_inplace_scratch_len()
            .max(fwd_col.get_inplace_scratch_len())
            .max(inv_row.get_inplace_scratch_len())
            .max(inv_col.get_inplace_scratch_len());
        Self {
            height,
            width,
            fwd_row,
            fwd_col,
            inv_row,
            inv_col,
            transpose: vec![Complex64::default(); height * width],
            scratch: vec![Complex64::default(); scratch_len],
            work: vec![Complex64::default(); height * width],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// In-place unitary forward transform of one plane (row-major H x W).
    pub fn forward_plane(&mut self, plane: &mut [Complex64]) {
        debug_assert_eq!(plane.len(), self.height * self.width);
        self.fwd_row.process_with_scratch(plane, &mut self.scratch);
        transpose(plane, &mut self.transpose, self.height, self.width);
        self.fwd_col
            .process_with_scratch(&mut self.transpose, &mut self.scratch);
        transpose(&self.transpose, plane, self.width, self.height);
        let scale = 1.0 / ((self.height * self.width) as f64).sqrt();
        for z in plane.iter_mut() {
            *z *= scale;
        }
    }

    /// In-place unitary inverse transform of one plane.
    pub fn inverse_plane(&mut self, plane: &mut [Complex64]) {
        debug_assert_eq!(plane.len(), self.height * self.width);
        self.inv_row.process_with_scratch(plane, &mut self.scratch);
        transpose(plane, &mut self.transpose, self.height, self.width);
        self.inv_col
            .process_with_scratch(&mut self.transpose, &mut self.scratch);
        transpose(&self.transpose, plane, self.width, self.height);
        let scale = 1.0 / ((self.height * self.width) as f64).sqrt();
        for z in plane.iter_mut() {
            *z *= scale;
        }
    }

    pub fn forward_image(&mut self, img: &Image) -> Spectrum {
        debug_assert_eq!((img.height(), img.width()), (self.height, self.width));
        let n = img.plane_len();
        let mut data = vec![Complex64::default(); n * img.channels()];
        for c in 0..img.channels() {
            let plane = &mut data[c * n..(c + 1) * n];
            for (z, &v) in plane.iter_mut().zip(img.channel(c)) {
                *z = Complex64::new(v, 0.0);
            }
            self.forward_plane(plane);
        }
        Spectrum {
            height: img.height(),
            width: img.width(),
            channels: img.channels(),
            data,
        }
    }

    /// Inverse transform without the Hermitian-symmetry check; reserved for
    /// spectra that are symmetric by construction (see `compose_masks`).
    pub(crate) fn inverse_image_unchecked(&mut self, spec: &Spectrum) -> Image {
        let n = spec.plane_len();
        let mut out = vec![0.0f64; n * spec.channels()];
        for c in 0..spec.channels() {
            self.work.copy_from_slice(spec.channel(c));
            self.inv_row
                .process_with_scratch(&mut self.work, &mut self.scratch);
            transpose(&self.work, &mut self.transpose, self.height, self.width);
            self.inv_col
                .process_with_scratch(&mut self.transpose, &mut self.scratch);
            transpose(&self.transpose, &mut self.work, self.width, self.height);
            let scale = 1.0 / ((self.height * self.width) as f64).sqrt();
            for (o, z) in out[c * n..(c + 1) * n].iter_mut().zip(&self.work) {
                *o = z.re * scale;
            }
        }
        Image::from_parts_unchecked(spec.height(), spec.width(), spec.channels(), out)
    }
}

/// Tiled transpose: `dst[w][h] = src[h][w]` for a `rows x cols` source.
fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    const TILE: usize = 32;
    for r0 in (0..rows).step_by(TILE) {
        for c0 in (0..cols).step_by(TILE) {
            for r in r0..(r0 + TILE).min(rows) {
                for c in c0..(c0 + TILE).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

/// Per-channel unitary 2-D DFT of a real image.
pub fn forward_spectrum(img: &Image) -> Spectrum {
    FftEngine::new(img.height(), img.width()).forward_image(img)
}

/// Inverse unitary 2-D DFT, returning the real part.
///
/// Fails with [`Error::SymmetryViolation`] when the spectrum deviates from
/// Hermitian symmetry by more than [`HERMITIAN_TOLERANCE`] relative to its
/// peak magnitude; such a spectrum has no real preimage and indicates a mask
/// that broke the symmetry contract.
pub fn inverse_spectrum(spec: &Spectrum) -> Result<Image> {
    if !spec.data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::InvalidParameter(
            "spectrum contains non-finite coefficients".into(),
        ));
    }
    let deviation = spec.hermitian_deviation();
    if deviation > HERMITIAN_TOLERANCE {
        return Err(Error::SymmetryViolation {
            deviation,
            tolerance: HERMITIAN_TOLERANCE,
        });
    }
    Ok(FftEngine::new(spec.height(), spec.width()).inverse_image_unchecked(spec))
}
