//! Multi-scale detail-enhanced variants of a reference image.
//!
//! Each variant is produced by bicubic upsampling at an integer scale
//! factor, applying a detail enhancer at that resolution, and bicubic
//! downsampling back to the original size. The built-in enhancer is unsharp
//! masking; externally produced variants enter the pipeline as ordinary
//! image files instead.

use crate::error::{Error, Result};
use crate::image::Image;

/// Detail operator applied at the upsampled resolution.
#[derive(Debug, Clone, PartialEq)]
pub enum Enhancer {
    Unsharp { radius: f64, amount: f64 },
    /// Pure resampling round trip.
    None,
    /// Variants are supplied as files; nothing is generated.
    External,
}

/// Settings for [`make_variant_set`].
#[derive(Debug, Clone, PartialEq)]
pub struct VariantConfig {
    pub scales: Vec<u32>,
    pub enhancer: Enhancer,
}

pub const DEFAULT_UNSHARP_RADIUS: f64 = 1.5;
pub const DEFAULT_UNSHARP_AMOUNT: f64 = 0.8;

impl Default for VariantConfig {
    fn default() -> Self {
        Self {
            scales: vec![2, 3, 4],
            enhancer: Enhancer::Unsharp {
                radius: DEFAULT_UNSHARP_RADIUS,
                amount: DEFAULT_UNSHARP_AMOUNT,
            },
        }
    }
}

impl VariantConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scales.is_empty() {
            return Err(Error::InvalidParameter("scale list is empty".into()));
        }
        if self.scales.iter().any(|&s| s < 1) {
            return Err(Error::InvalidParameter("scale factors must be >= 1".into()));
        }
        if let Enhancer::Unsharp { radius, amount } = self.enhancer {
            validate_unsharp(radius, amount)?;
        }
        Ok(())
    }
}

fn validate_unsharp(radius: f64, amount: f64) -> Result<()> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "unsharp radius must be positive, got {radius}"
        )));
    }
    if !(amount.is_finite() && amount >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "unsharp amount must be non-negative, got {amount}"
        )));
    }
    Ok(())
}

/// Catmull-Rom kernel (bicubic with a = -0.5).
fn catmull_rom(s: f64) -> f64 {
    let s = s.abs();
    if s <= 1.0 {
        (1.5 * s - 2.5) * s * s + 1.0
    } else if s < 2.0 {
        ((-0.5 * s + 2.5) * s - 4.0) * s + 2.0
    } else {
        0.0
    }
}

/// Per-output-sample taps for one separable pass: four clamped source
/// indices and their kernel weights.
fn resample_taps(src_len: usize, dst_len: usize) -> Vec<([usize; 4], [f64; 4])> {
    let ratio = src_len as f64 / dst_len as f64;
    (0..dst_len)
        .map(|d| {
            let center = (d as f64 + 0.5) * ratio - 0.5;
            let base = center.floor();
            let t = center - base;
            let weights = [
                catmull_rom(1.0 + t),
                catmull_rom(t),
                catmull_rom(1.0 - t),
                catmull_rom(2.0 - t),
            ];
            let mut idx = [0usize; 4];
            for (k, slot) in idx.iter_mut().enumerate() {
                let raw = base as i64 - 1 + k as i64;
                *slot = raw.clamp(0, src_len as i64 - 1) as usize;
            }
            (idx, weights)
        })
        .collect()
}

/// Separable Catmull-Rom resampling with edge-clamped boundaries. Output
/// samples are clamped to `[0, 1]`.
pub fn resample_bicubic(img: &Image, out_height: usize, out_width: usize) -> Result<Image> {
    if out_height < 2 || out_width < 2 {
        return Err(Error::InvalidDimension(format!(
            "resample target must be at least 2x2, got {out_height}x{out_width}"
        )));
    }
    let (h, w, channels) = (img.height(), img.width(), img.channels());
    let col_taps = resample_taps(w, out_width);
    let row_taps = resample_taps(h, out_height);

    let mut out = vec![0.0; out_height * out_width * channels];
    let mut mid = vec![0.0; h * out_width];
    for c in 0..channels {
        let plane = img.channel(c);
        // Horizontal pass to h x out_width.
        for r in 0..h {
            let row = &plane[r * w..(r + 1) * w];
            let dst = &mut mid[r * out_width..(r + 1) * out_width];
            for (d, (idx, wt)) in col_taps.iter().enumerate() {
                dst[d] = wt[0] * row[idx[0]]
                    + wt[1] * row[idx[1]]
                    + wt[2] * row[idx[2]]
                    + wt[3] * row[idx[3]];
            }
        }
        // Vertical pass to out_height x out_width.
        let dst_plane = &mut out[c * out_height * out_width..(c + 1) * out_height * out_width];
        for (d, (idx, wt)) in row_taps.iter().enumerate() {
            let rows = [
                &mid[idx[0] * out_width..idx[0] * out_width + out_width],
                &mid[idx[1] * out_width..idx[1] * out_width + out_width],
                &mid[idx[2] * out_width..idx[2] * out_width + out_width],
                &mid[idx[3] * out_width..idx[3] * out_width + out_width],
            ];
            let dst = &mut dst_plane[d * out_width..(d + 1) * out_width];
            for q in 0..out_width {
                let v =
                    wt[0] * rows[0][q] + wt[1] * rows[1][q] + wt[2] * rows[2][q] + wt[3] * rows[3][q];
                dst[q] = v.clamp(0.0, 1.0);
            }
        }
    }
    Image::new(out_height, out_width, channels, out)
}

/// Separable Gaussian blur, kernel truncated at three standard deviations
/// and renormalized, with replicated edges.
fn gaussian_blur(img: &Image, sigma: f64) -> Image {
    let half = (3.0 * sigma).ceil() as i64;
    let mut kernel = Vec::with_capacity((2 * half + 1) as usize);
    for i in -half..=half {
        kernel.push((-((i * i) as f64) / (2.0 * sigma * sigma)).exp());
    }
    let total: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= total;
    }

    let (h, w, channels) = (img.height(), img.width(), img.channels());
    let mut out = img.clone();
    let mut mid = vec![0.0; h * w];
    for c in 0..channels {
        let plane = img.channel(c);
        for r in 0..h {
            let row = &plane[r * w..(r + 1) * w];
            for q in 0..w as i64 {
                let mut acc = 0.0;
                for (ki, &kv) in kernel.iter().enumerate() {
                    let s = (q + ki as i64 - half).clamp(0, w as i64 - 1) as usize;
                    acc += kv * row[s];
                }
                mid[r * w + q as usize] = acc;
            }
        }
        let dst = out.channel_mut(c);
        for q in 0..w {
            for r in 0..h as i64 {
                let mut acc = 0.0;
                for (ki, &kv) in kernel.iter().enumerate() {
                    let s = (r + ki as i64 - half).clamp(0, h as i64 - 1) as usize;
                    acc += kv * mid[s * w + q];
                }
                dst[r as usize * w + q] = acc;
            }
        }
    }
    out
}

/// `clamp(img + amount * (img - blur(img, radius)))`.
pub fn unsharp_mask(img: &Image, radius: f64, amount: f64) -> Result<Image> {
    validate_unsharp(radius, amount)?;
    let blurred = gaussian_blur(img, radius);
    let mut out = img.clone();
    for (o, &b) in out.data_mut().iter_mut().zip(blurred.data()) {
        *o = (*o + amount * (*o - b)).clamp(0.0, 1.0);
    }
    Ok(out)
}

/// Upsample / enhance / downsample at every configured scale. With
/// `Enhancer::None` the pipeline degenerates to a resampling round trip.
pub fn make_variant_set(original: &Image, cfg: &VariantConfig) -> Result<Vec<Image>> {
    cfg.validate()?;
    if cfg.enhancer == Enhancer::External {
        return Err(Error::InvalidParameter(
            "external variants are supplied as files, not generated".into(),
        ));
    }
    let (h, w) = (original.height(), original.width());
    let mut variants = Vec::with_capacity(cfg.scales.len());
    for &scale in &cfg.scales {
        let s = scale as usize;
        let up = resample_bicubic(original, h * s, w * s)?;
        let enhanced = match cfg.enhancer {
            Enhancer::Unsharp { radius, amount } => unsharp_mask(&up, radius, amount)?,
            Enhancer::None => up,
            Enhancer::External => unreachable!(),
        };
        variants.push(resample_bicubic(&enhanced, h, w)?);
    }
    Ok(variants)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{perceptual_proxy_score, ProxyKind, ProxySpec, ProxyTerm};

    fn proxy(kind: ProxyKind) -> ProxySpec {
        ProxySpec::new(vec![ProxyTerm {
            kind,
            weight: 1.0,
            offset: 0.0,
            scale: 1.0,
        }])
        .unwrap()
    }

    fn ramp(h: usize, w: usize) -> Image {
        let data: Vec<f64> = (0..h * w)
            .map(|i| ((i / w) as f64 + (i % w) as f64) / (h + w) as f64)
            .collect();
        Image::new(h, w, 1, data).unwrap()
    }

    fn textured(h: usize, w: usize) -> Image {
        let data: Vec<f64> = (0..h * w)
            .map(|i| {
                let r = (i / w) as f64;
                let c = (i % w) as f64;
                0.5 + 0.25 * (0.9 * r).sin() * (1.3 * c).cos() + 0.15 * (0.4 * (r + c)).sin()
            })
            .collect();
        Image::new(h, w, 1, data).unwrap()
    }

    #[test]
    fn identity_resample_is_exact() {
        let img = ramp(12, 9);
        let out = resample_bicubic(&img, 12, 9).unwrap();
        assert!(img.max_abs_diff(&out).unwrap() < 1e-12);
    }

    #[test]
    fn constant_survives_any_scale() {
        let img = Image::constant(8, 8, 3, 0.63).unwrap();
        for (oh, ow) in [(16, 16), (24, 11), (5, 32)] {
            let out = resample_bicubic(&img, oh, ow).unwrap();
            for &v in out.data() {
                assert!((v - 0.63).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn smooth_ramp_round_trip_is_tight() {
        let img = ramp(32, 32);
        let up = resample_bicubic(&img, 64, 64).unwrap();
        let back = resample_bicubic(&up, 32, 32).unwrap();
        assert!(img.max_abs_diff(&back).unwrap() < 5e-3);
    }

    #[test]
    fn resample_rejects_tiny_targets() {
        let img = ramp(8, 8);
        assert!(resample_bicubic(&img, 1, 8).is_err());
        assert!(resample_bicubic(&img, 8, 0).is_err());
    }

    #[test]
    fn unsharp_amount_zero_is_identity() {
        let img = textured(16, 16);
        let out = unsharp_mask(&img, 1.5, 0.0).unwrap();
        assert!(img.max_abs_diff(&out).unwrap() == 0.0);
    }

    #[test]
    fn unsharp_constant_is_identity() {
        let img = Image::constant(16, 16, 1, 0.4).unwrap();
        let out = unsharp_mask(&img, 2.5, 1.7).unwrap();
        assert!(img.max_abs_diff(&out).unwrap() < 1e-12);
    }

    #[test]
    fn unsharp_sharpens_step_edge() {
        let mut img = Image::constant(16, 16, 1, 0.25).unwrap();
        for r in 0..16 {
            for c in 8..16 {
                img.set(0, r, c, 0.75);
            }
        }
        let out = unsharp_mask(&img, 1.5, 0.8).unwrap();
        let spec = proxy(ProxyKind::Tenengrad);
        let before = perceptual_proxy_score(&img, &spec).unwrap();
        let after = perceptual_proxy_score(&out, &spec).unwrap();
        assert!(after > before, "{after} <= {before}");
    }

    #[test]
    fn unsharp_rejects_bad_parameters() {
        let img = ramp(8, 8);
        assert!(unsharp_mask(&img, 0.0, 0.5).is_err());
        assert!(unsharp_mask(&img, 1.0, -0.1).is_err());
    }

    #[test]
    fn variant_set_has_original_dimensions() {
        let img = textured(18, 14);
        let variants = make_variant_set(&img, &VariantConfig::default()).unwrap();
        assert_eq!(variants.len(), 3);
        for v in &variants {
            assert_eq!((v.height(), v.width(), v.channels()), (18, 14, 1));
        }
    }

    #[test]
    fn noop_config_is_bit_exact() {
        let img = textured(12, 12);
        let cfg = VariantConfig {
            scales: vec![1],
            enhancer: Enhancer::None,
        };
        let variants = make_variant_set(&img, &cfg).unwrap();
        assert_eq!(variants[0].data(), img.data());
    }

    #[test]
    fn resample_only_variants_of_constant_stay_constant() {
        let img = Image::constant(10, 10, 1, 0.5).unwrap();
        let cfg = VariantConfig {
            scales: vec![2, 3],
            enhancer: Enhancer::None,
        };
        for v in make_variant_set(&img, &cfg).unwrap() {
            assert!(v.max_abs_diff(&img).unwrap() < 1e-12);
        }
    }

    #[test]
    fn unsharp_variants_gain_high_frequency_energy() {
        let img = textured(24, 24);
        let variants = make_variant_set(&img, &VariantConfig::default()).unwrap();
        let spec = proxy(ProxyKind::HighFrequencyEnergyRatio);
        let base = perceptual_proxy_score(&img, &spec).unwrap();
        for (i, v) in variants.iter().enumerate() {
            let s = perceptual_proxy_score(v, &spec).unwrap();
            assert!(s >= base, "variant {i}: {s} < {base}");
        }
    }

    #[test]
    fn external_enhancer_is_not_generated() {
        let img = ramp(8, 8);
        let cfg = VariantConfig {
            scales: vec![2],
            enhancer: Enhancer::External,
        };
        assert!(make_variant_set(&img, &cfg).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(VariantConfig {
            scales: vec![],
            enhancer: Enhancer::None,
        }
        .validate()
        .is_err());
        assert!(VariantConfig {
            scales: vec![0],
            enhancer: Enhancer::None,
        }
        .validate()
        .is_err());
        assert!(VariantConfig {
            scales: vec![2],
            enhancer: Enhancer::Unsharp {
                radius: -1.0,
                amount: 0.5,
            },
        }
        .validate()
        .is_err());
    }
}
