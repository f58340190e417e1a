//! Reference and no-reference measurements used for reporting: PSNR, SSIM,
//! and per-band spectral energy.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::masks::BasisBank;
use crate::spectrum::forward_spectrum;

/// PSNR reported for identical images (zero MSE would be unbounded).
pub const PSNR_CAP_DB: f64 = 150.0;

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

fn check_same_shape(a: &Image, b: &Image) -> Result<()> {
    if !a.same_shape(b) {
        return Err(Error::ShapeMismatch(format!(
            "{}x{}x{} vs {}x{}x{}",
            a.height(),
            a.width(),
            a.channels(),
            b.height(),
            b.width(),
            b.channels()
        )));
    }
    Ok(())
}

/// Peak signal-to-noise ratio in dB for unit dynamic range, capped at
/// [`PSNR_CAP_DB`].
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    check_same_shape(a, b)?;
    let mse: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.data().len() as f64;
    if mse == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((-10.0 * mse.log10()).min(PSNR_CAP_DB))
}

/// Normalized 1-D Gaussian window of length [`SSIM_WINDOW`].
fn ssim_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let half = (SSIM_WINDOW / 2) as f64;
    let mut total = 0.0;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - half;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
        total += *v;
    }
    for v in &mut k {
        *v /= total;
    }
    k
}

/// Separable valid-mode windowed sum: convolves rows then columns with the
/// kernel, producing `(h - 10) x (w - 10)` outputs.
fn gauss_valid(plane: &[f64], h: usize, w: usize, kernel: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = w - SSIM_WINDOW + 1;
    let oh = h - SSIM_WINDOW + 1;
    let mut mid = vec![0.0; h * ow];
    for r in 0..h {
        let row = &plane[r * w..(r + 1) * w];
        let dst = &mut mid[r * ow..(r + 1) * ow];
        for (q, d) in dst.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (ki, &kv) in kernel.iter().enumerate() {
                acc += kv * row[q + ki];
            }
            *d = acc;
        }
    }
    let mut out = vec![0.0; oh * ow];
    for q in 0..ow {
        for r in 0..oh {
            let mut acc = 0.0;
            for (ki, &kv) in kernel.iter().enumerate() {
                acc += kv * mid[(r + ki) * ow + q];
            }
            out[r * ow + q] = acc;
        }
    }
    out
}

/// Mean local structural similarity with an 11x11 Gaussian window
/// (sigma 1.5), constants K1 = 0.01 / K2 = 0.03, unit dynamic range;
/// channel results are averaged.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    check_same_shape(a, b)?;
    if a.height() < SSIM_WINDOW || a.width() < SSIM_WINDOW {
        return Err(Error::InvalidDimension(format!(
            "ssim needs at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {}x{}",
            a.height(),
            a.width()
        )));
    }
    let kernel = ssim_kernel();
    let (h, w) = (a.height(), a.width());
    let c1 = (SSIM_K1 * 1.0) * (SSIM_K1 * 1.0);
    let c2 = (SSIM_K2 * 1.0) * (SSIM_K2 * 1.0);
    let mut channel_mean = 0.0;
    for c in 0..a.channels() {
        let pa = a.channel(c);
        let pb = b.channel(c);
        let sq_a: Vec<f64> = pa.iter().map(|v| v * v).collect();
        let sq_b: Vec<f64> = pb.iter().map(|v| v * v).collect();
        let ab: Vec<f64> = pa.iter().zip(pb).map(|(x, y)| x * y).collect();

        let mu_a = gauss_valid(pa, h, w, &kernel);
        let mu_b = gauss_valid(pb, h, w, &kernel);
        let e_aa = gauss_valid(&sq_a, h, w, &kernel);
        let e_bb = gauss_valid(&sq_b, h, w, &kernel);
        let e_ab = gauss_valid(&ab, h, w, &kernel);

        let mut sum = 0.0;
        for i in 0..mu_a.len() {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let var_a = e_aa[i] - ma * ma;
            let var_b = e_bb[i] - mb * mb;
            let cov = e_ab[i] - ma * mb;
            let num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
            let den = (ma * ma + mb * mb + c1) * (var_a + var_b + c2);
            sum += num / den;
        }
        channel_mean += sum / mu_a.len() as f64;
    }
    Ok(channel_mean / a.channels() as f64)
}

/// Spectral energy captured by each basis mask:
/// `energies[b] = sum over bins and channels of R_b * |X|^2`.
#[derive(Debug, Clone)]
pub struct BandEnergyProfile {
    energies: Vec<f64>,
}

impl BandEnergyProfile {
    pub fn bands(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn total(&self) -> f64 {
        self.energies.iter().sum()
    }

    /// Index of the band capturing the most energy.
    pub fn peak_band(&self) -> usize {
        self.energies
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite energies"))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }
}

/// Band-wise spectral energy of an image under the given basis bank.
pub fn band_energy_profile(img: &Image, bank: &BasisBank) -> Result<BandEnergyProfile> {
    if img.height() != bank.height() || img.width() != bank.width() {
        return Err(Error::ShapeMismatch(format!(
            "image {}x{} vs bank {}x{}",
            img.height(),
            img.width(),
            bank.height(),
            bank.width()
        )));
    }
    let spec = forward_spectrum(img);
    let n = spec.plane_len();
    let mut mag_sq = vec![0.0; n];
    for c in 0..spec.channels() {
        for (m, z) in mag_sq.iter_mut().zip(spec.channel(c)) {
            *m += z.norm_sqr();
        }
    }
    let energies = (0..bank.bands())
        .map(|b| {
            bank.mask(b)
                .iter()
                .zip(&mag_sq)
                .map(|(&r, &e)| r * e)
                .sum()
        })
        .collect();
    Ok(BandEnergyProfile { energies })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::masks::{frequency_distance_grid, make_basis_bank};

    fn noisy(h: usize, w: usize, c: usize, seed: u64) -> Image {
        let data: Vec<f64> = (0..h * w * c)
            .map(|i| {
                let x = ((i as u64) ^ seed.wrapping_mul(0xff51afd7ed558ccd))
                    .wrapping_mul(0x9e3779b97f4a7c15);
                ((x >> 32) % 10_000) as f64 / 10_000.0
            })
            .collect();
        Image::new(h, w, c, data).unwrap()
    }

    fn checkerboard(h: usize, w: usize, lo: f64, hi: f64) -> Image {
        let data: Vec<f64> = (0..h * w)
            .map(|i| if ((i / w) + (i % w)) % 2 == 0 { lo } else { hi })
            .collect();
        Image::new(h, w, 1, data).unwrap()
    }

    #[test]
    fn psnr_of_identical_images_is_capped() {
        let img = noisy(8, 8, 3, 1);
        assert_eq!(psnr(&img, &img).unwrap(), PSNR_CAP_DB);
    }

    #[test]
    fn psnr_of_known_mse() {
        // Constant offset 0.1 -> MSE 0.01 -> 20 dB.
        let a = Image::constant(8, 8, 1, 0.4).unwrap();
        let b = Image::constant(8, 8, 1, 0.5).unwrap();
        assert!((psnr(&a, &b).unwrap() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn psnr_matches_direct_formula_and_is_symmetric() {
        let a = noisy(16, 16, 1, 2);
        let b = noisy(16, 16, 1, 3);
        let mut mse = 0.0;
        for i in 0..256 {
            let d = a.data()[i] - b.data()[i];
            mse += d * d;
        }
        mse /= 256.0;
        let expected = 10.0 * (1.0 / mse).log10();
        assert!((psnr(&a, &b).unwrap() - expected).abs() < 1e-9);
        assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
    }

    #[test]
    fn psnr_rejects_shape_mismatch() {
        let a = noisy(8, 8, 1, 1);
        let b = noisy(8, 9, 1, 1);
        assert!(psnr(&a, &b).is_err());
    }

    #[test]
    fn ssim_of_identical_images_is_one() {
        let img = noisy(16, 16, 3, 4);
        assert_eq!(ssim(&img, &img).unwrap(), 1.0);
    }

    #[test]
    fn ssim_negative_pattern_scores_low() {
        let a = checkerboard(16, 16, 0.05, 0.95);
        let mut b = a.clone();
        for v in b.data_mut() {
            *v = 1.0 - *v;
        }
        assert!(ssim(&a, &b).unwrap() < 0.5);
    }

    #[test]
    fn ssim_matches_direct_sliding_window() {
        let a = noisy(16, 16, 3, 7);
        let b = noisy(16, 16, 3, 8);
        let expected = crate::reference::ssim_direct(&a, &b);
        assert!((ssim(&a, &b).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn ssim_is_symmetric() {
        let a = noisy(16, 16, 1, 9);
        let b = noisy(16, 16, 1, 10);
        assert!((ssim(&a, &b).unwrap() - ssim(&b, &a).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn ssim_rejects_small_images() {
        let a = noisy(10, 16, 1, 1);
        assert!(ssim(&a, &a).is_err());
    }

    #[test]
    fn constant_image_energy_sits_at_dc() {
        let img = Image::constant(16, 16, 1, 0.7).unwrap();
        let grid = frequency_distance_grid(16, 16).unwrap();
        let bank = make_basis_bank(&grid, 6).unwrap();
        let profile = band_energy_profile(&img, &bank).unwrap();
        // bands whose mask is negligible at DC report negligible energy
        for b in 0..6 {
            let at_dc = bank.mask(b)[0];
            if at_dc < 1e-9 {
                assert!(profile.energies()[b] < 1e-6);
            }
        }
        assert_eq!(profile.peak_band(), 0);
    }

    #[test]
    fn sinusoid_peaks_at_matching_band() {
        let (h, w) = (32, 32);
        let grid = frequency_distance_grid(h, w).unwrap();
        let bank = make_basis_bank(&grid, 8).unwrap();
        // radial frequency 8 along the row axis
        let data: Vec<f64> = (0..h * w)
            .map(|i| {
                let r = (i / w) as f64;
                0.5 + 0.4 * (2.0 * std::f64::consts::PI * 8.0 * r / h as f64).cos()
            })
            .collect();
        let img = Image::new(h, w, 1, data).unwrap();
        let profile = band_energy_profile(&img, &bank).unwrap();
        // ignore the DC-dominated bands: zero out the mean first
        let mut no_dc = img.clone();
        let mean: f64 = no_dc.data().iter().sum::<f64>() / (h * w) as f64;
        for v in no_dc.data_mut() {
            *v -= mean;
        }
        let profile_ac = band_energy_profile(&no_dc, &bank).unwrap();
        let peak = profile_ac.peak_band();
        let expected = (0..8)
            .min_by(|&x, &y| {
                ((bank.mus()[x] - 8.0).abs())
                    .partial_cmp(&(bank.mus()[y] - 8.0).abs())
                    .unwrap()
            })
            .unwrap();
        assert_eq!(peak, expected);
        assert!(profile.total() >= profile_ac.total());
    }

    #[test]
    fn weighted_energy_identity() {
        let img = noisy(16, 16, 3, 5);
        let grid = frequency_distance_grid(16, 16).unwrap();
        let bank = make_basis_bank(&grid, 5).unwrap();
        let profile = band_energy_profile(&img, &bank).unwrap();
        // Sum of the profile equals the (sum_b R_b)-weighted spectral energy.
        let spec = forward_spectrum(&img);
        let n = spec.plane_len();
        let mut weighted = 0.0;
        for p in 0..n {
            let rsum: f64 = (0..5).map(|b| bank.mask(b)[p]).sum();
            let mag: f64 = (0..3).map(|c| spec.channel(c)[p].norm_sqr()).sum();
            weighted += rsum * mag;
        }
        assert!((profile.total() - weighted).abs() / weighted < 1e-9);
    }
}
