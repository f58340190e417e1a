use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::masks::MaskSet;
use crate::spectrum::{FftEngine, Spectrum};

fn validate_sources(images: &[Image], masks: &MaskSet) -> Result<()> {
    let first = images
        .first()
        .ok_or_else(|| Error::InvalidParameter("mixup needs at least one image".into()))?;
    for img in images {
        if !img.same_shape(first) {
            return Err(Error::ShapeMismatch(format!(
                "all images must share dimensions, got {}x{}x{} vs {}x{}x{}",
                img.height(),
                img.width(),
                img.channels(),
                first.height(),
                first.width(),
                first.channels()
            )));
        }
    }
    if masks.n_sources() != images.len() {
        return Err(Error::InvalidParameter(format!(
            "mask set has {} sources but {} images were supplied",
            masks.n_sources(),
            images.len()
        )));
    }
    if masks.height() != first.height() || masks.width() != first.width() {
        return Err(Error::ShapeMismatch(format!(
            "mask dimensions {}x{} do not match image dimensions {}x{}",
            masks.height(),
            masks.width(),
            first.height(),
            first.width()
        )));
    }
    Ok(())
}

/// Accumulates `sum_i M_i * F(I_i)` per channel. The same mask plane is
/// applied to every channel.
pub fn fused_spectrum(spectra: &[Spectrum], masks: &MaskSet) -> Spectrum {
    let n = spectra[0].plane_len();
    let channels = spectra[0].channels();
    let mut data = vec![Complex64::default(); n * channels];
    for (i, spec) in spectra.iter().enumerate() {
        let mask = masks.mask(i);
        for c in 0..channels {
            let plane = spec.channel(c);
            let out = &mut data[c * n..(c + 1) * n];
            for ((o, &z), &m) in out.iter_mut().zip(plane).zip(mask) {
                *o += z * m;
            }
        }
    }
    Spectrum::new(spectra[0].height(), spectra[0].width(), channels, data)
        .expect("fused spectrum shape matches its inputs")
}

/// Fuses the images in the frequency domain: each source's spectrum is
/// weighted by its mask and the sum is transformed back. Masks forming a
/// partition of unity make this a per-bin convex combination, so identical
/// inputs pass through unchanged.
pub fn frequency_mixup(images: &[Image], masks: &MaskSet) -> Result<Image> {
    validate_sources(images, masks)?;
    let mut engine = FftEngine::new(images[0].height(), images[0].width());
    let spectra: Vec<Spectrum> = images.iter().map(|img| engine.forward_image(img)).collect();
    let fused = fused_spectrum(&spectra, masks);
    // Masks inherit the grid's negation symmetry, so the fused spectrum is
    // Hermitian by construction and the inverse is real.
    Ok(engine.inverse_image_unchecked(&fused))
}

/// Per-source spectral components: element `i` is the inverse transform of
/// `M_i * F(I_i)`. The components sum to the output of [`frequency_mixup`].
pub fn decompose_contributions(images: &[Image], masks: &MaskSet) -> Result<Vec<Image>> {
    validate_sources(images, masks)?;
    let mut engine = FftEngine::new(images[0].height(), images[0].width());
    let mut out = Vec::with_capacity(images.len());
    for (i, img) in images.iter().enumerate() {
        let mut spec = engine.forward_image(img);
        let mask = masks.mask(i);
        let n = spec.plane_len();
        for c in 0..img.channels() {
            let plane = spec.channel_mut(c);
            for (z, &m) in plane.iter_mut().zip(&mask[..n]) {
                *z *= m;
            }
        }
        out.push(engine.inverse_image_unchecked(&spec));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::masks::{compose_masks, frequency_distance_grid, make_basis_bank, Coefficients};

    fn test_image(h: usize, w: usize, c: usize, seed: u64) -> Image {
        let data: Vec<f64> = (0..h * w * c)
            .map(|i| {
                let x = ((i as u64) ^ seed.wrapping_mul(0xff51afd7ed558ccd))
                    .wrapping_mul(6364136223846793005);
                ((x >> 33) % 1000) as f64 / 1000.0
            })
            .collect();
        Image::new(h, w, c, data).unwrap()
    }

    fn uniform_masks(h: usize, w: usize, n_sources: usize, bands: usize) -> MaskSet {
        let grid = frequency_distance_grid(h, w).unwrap();
        let bank = make_basis_bank(&grid, bands).unwrap();
        compose_masks(&Coefficients::zeros(n_sources, bands), &bank).unwrap()
    }

    #[test]
    fn identical_inputs_pass_through() {
        let img = test_image(9, 12, 3, 7);
        let masks = uniform_masks(9, 12, 4, 6);
        let images = vec![img.clone(), img.clone(), img.clone(), img.clone()];
        let fused = frequency_mixup(&images, &masks).unwrap();
        assert!(fused.max_abs_diff(&img).unwrap() < 1e-10);
    }

    #[test]
    fn saturated_mask_selects_single_source() {
        let grid = frequency_distance_grid(8, 8).unwrap();
        let bank = make_basis_bank(&grid, 25).unwrap();
        let mut coeffs = Coefficients::zeros(2, 25);
        for b in 0..25 {
            coeffs.set(0, b, 60.0);
        }
        let masks = compose_masks(&coeffs, &bank).unwrap();
        let a = test_image(8, 8, 1, 1);
        let b = test_image(8, 8, 1, 2);
        let fused = frequency_mixup(&[a.clone(), b], &masks).unwrap();
        assert!(fused.max_abs_diff(&a).unwrap() < 1e-6);
    }

    #[test]
    fn components_sum_to_fused_output() {
        let grid = frequency_distance_grid(6, 10).unwrap();
        let bank = make_basis_bank(&grid, 5).unwrap();
        let c: Vec<f64> = (0..3 * 5).map(|i| (i as f64 * 0.91).sin() * 2.0).collect();
        let coeffs = Coefficients::new(3, 5, c).unwrap();
        let masks = compose_masks(&coeffs, &bank).unwrap();
        let images = vec![
            test_image(6, 10, 3, 3),
            test_image(6, 10, 3, 4),
            test_image(6, 10, 3, 5),
        ];
        let fused = frequency_mixup(&images, &masks).unwrap();
        let parts = decompose_contributions(&images, &masks).unwrap();
        let mut sum = Image::zeros(6, 10, 3).unwrap();
        for part in &parts {
            for (s, &p) in sum.data_mut().iter_mut().zip(part.data()) {
                *s += p;
            }
        }
        assert!(sum.max_abs_diff(&fused).unwrap() < 1e-9);
    }

    #[test]
    fn uniform_masks_split_identical_input_evenly() {
        let img = test_image(8, 8, 1, 11);
        let masks = uniform_masks(8, 8, 4, 4);
        let images = vec![img.clone(); 4];
        let parts = decompose_contributions(&images, &masks).unwrap();
        for part in &parts {
            for (p, v) in part.data().iter().zip(img.data()) {
                assert!((p - v / 4.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mixup_rejects_shape_mismatch() {
        let masks = uniform_masks(8, 8, 2, 3);
        let a = test_image(8, 8, 1, 1);
        let b = test_image(8, 6, 1, 2);
        assert!(frequency_mixup(&[a.clone(), b], &masks).is_err());
        let c = test_image(8, 8, 1, 3);
        let masks3 = uniform_masks(8, 8, 3, 3);
        assert!(frequency_mixup(&[a, c], &masks3).is_err());
    }
}
